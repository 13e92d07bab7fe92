"""
Turn features with conversation context
=======================================

Each turn row is [speaker's essay block | turn block | centroid of all
earlier turn blocks]. The first turn gets a zero context block.
"""

import numpy as np

from affectreg.convo import ConversationContext, build_turn_features
from affectreg.corpus import TurnSample

blocks = {"essay A": [1.0, 0.0], "essay B": [0.0, 1.0],
          "hi, did you read it?": [2.0, 4.0], "yes, so sad": [4.0, 8.0], "awful news": [9.0, -3.0]}
featurizer = lambda texts: np.array([blocks[t] for t in texts])

turns = [TurnSample("c1", i, s, t, f"essay {s}")
         for i, (s, t) in enumerate([("A", "hi, did you read it?"), ("B", "yes, so sad"), ("A", "awful news")])]
print(build_turn_features(turns, featurizer))

# the running centroid never stores a sum, it updates the mean in place
ctx = ConversationContext(2)
for b in ([2.0, 4.0], [4.0, 8.0], [9.0, -3.0]):
    ctx.add(b)
    print("context now", ctx.centroid())

# the per-speaker variant splits the context in two
print(build_turn_features(turns, featurizer, two_centroids=True)[2])
