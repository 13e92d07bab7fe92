"""Empathy, distress and conversational affect regression from text."""

from .corpus import EssaySample, SplitSpec, TurnSample, parse_essays, parse_turns, stratified_split
from .embed import EmbeddingCache, HashEmbeddingProvider, PrecomputedProvider, RemoteProvider
from .ensemble import EnsembleModel
from .evaluation import EvalReport, pearson
from .lexfeat import FeatureScaler, LexiconSet, extract_all
from .neural import AdamW, DropoutSpec, FfnModel, PlateauScheduler, TrainConfig
from .svr import SvrConfig, SvrModel

__version__ = "0.1.0"
