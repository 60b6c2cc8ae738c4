"""Curation pipeline for pseudo-labeled speech recognition and translation data.

The package turns raw audio-plus-text manifests into filtered training
manifests: segmentation planning, two-pass transcription against inference
services, language-id verification, hallucination and character-rate
filtering, punctuation restoration with an edit-distance acceptance gate,
and translation-pair filtration, with retention accounting over the result.
"""

from granary.pipeline import PipelineConfig, run_pipeline
from granary.records import DROP_FLAGS, INFO_FLAGS, FilterDecision, TranslationPair, UtteranceRecord

__version__ = "0.1.0"

__all__ = [
    "DROP_FLAGS",
    "INFO_FLAGS",
    "FilterDecision",
    "PipelineConfig",
    "TranslationPair",
    "UtteranceRecord",
    "run_pipeline",
    "__version__",
]
