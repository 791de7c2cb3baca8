"""Gradient-weighted attention saliency extraction for causal LMs."""

from .extract import ExtractionConfig, extract_dataset, extract_saliency
from .model import HuggingFaceLM, ModelLoadError, TinyCausalLM, load_model

__version__ = "0.1.0"

__all__ = [
    "ExtractionConfig",
    "HuggingFaceLM",
    "ModelLoadError",
    "TinyCausalLM",
    "extract_dataset",
    "extract_saliency",
    "load_model",
]
