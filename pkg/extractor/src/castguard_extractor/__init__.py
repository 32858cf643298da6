"""Frozen pre-trained CNN feature extraction for the castguard pipeline."""

from .architectures import ARCHITECTURES, Architecture, get_architecture
from .extract import ExtractorSpec, FeatureCountMismatch, extract_features, list_labeled_images

__version__ = "0.1.0"
