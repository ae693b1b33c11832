"""Backmapping models: lookup tables, features, TorsionNet and decoding."""
from .backmap import BackmapModel, backmap, backmap_frames, decode
from .features import FeatureSpec, featurize, featurize_trace
from .model_io import load_model, save_model
from .tables import LookupTables, SlotAccumulator, SlotStats, fit_tables
from .torsion_net import TorsionNet
from .training import TrainConfig, TrainingResult, train_torsion_net

__all__ = [
    "BackmapModel",
    "FeatureSpec",
    "LookupTables",
    "SlotAccumulator",
    "SlotStats",
    "TorsionNet",
    "TrainConfig",
    "TrainingResult",
    "backmap",
    "backmap_frames",
    "decode",
    "featurize",
    "featurize_trace",
    "fit_tables",
    "load_model",
    "save_model",
    "train_torsion_net",
]
