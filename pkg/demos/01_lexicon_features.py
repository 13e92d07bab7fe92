"""
Lexicon features from a handful of toy word lists
=================================================

Each text becomes 48 numbers: emotion counts and ratios from an NRC-style
list, subjectivity/polarity/part-of-speech counts and ratios from an
MPQA-style list, mean valence/arousal/dominance, and a shifter count.
"""

import tempfile

import numpy as np

from affectreg import lexfeat
from affectreg.synthetic import write_toy_lexicons

tmp = tempfile.mkdtemp()
lex = lexfeat.load_lexicons(**write_toy_lexicons(tmp))
print("lexicon sizes:", lex.sizes())

text = "I abandoned the happy dogs, and I felt sad... really sad!"
print(lexfeat.lemmas(text, lex))  # 'abandoned' -> 'abandon', 'dogs' -> 'dog'

v = lexfeat.extract_all(text, lex)
for name, value in zip(lexfeat.FEATURE_NAMES, v):
    if value:
        print(f"  {name:<24} {value:.4f}")

# ratios are counts over the token count (11 here)
assert np.isclose(v[lexfeat.FEATURE_NAMES.index("nrc_sadness_ratio")], 3 / 11)

# the scaler is fitted on training texts only and squeezes everything into [-1, 1]
train = ["happy happy dog", "sad lack of help", "I run to help", "abandon hope", "good news"]
scaler = lexfeat.fit_scaler(lexfeat.extract_batch(train, lex))
print(scaler.transform(v[None, :]).round(3)[0, :10])
