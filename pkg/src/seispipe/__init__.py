"""Seismic event discrimination pipeline: containers, quality control,
spectral features, triggering, from-scratch classifiers and benchmarking."""
from .codec import (Channel, EventWaveformSet, Label, StationRecord, decode_estf2, encode_estf2,
                    export_ascii, export_seedlike, import_ascii, read_events, write_events)
from .errors import SeispipeError
from .preprocess import FeatureSequence, PreprocessConfig, build_dataset, build_features
from .qc import QcReport, QcThresholds, qc_event

__version__ = "0.1.0"

__all__ = [
    "Channel", "EventWaveformSet", "Label", "StationRecord", "decode_estf2", "encode_estf2",
    "export_ascii", "export_seedlike", "import_ascii", "read_events", "write_events",
    "SeispipeError", "FeatureSequence", "PreprocessConfig", "build_dataset", "build_features",
    "QcReport", "QcThresholds", "qc_event",
]
