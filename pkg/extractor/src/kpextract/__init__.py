"""Keypoint-sequence extraction from video corpora.

Turns an indexed set of video files into the manifest.json + data.jsonl
dataset layout consumed by the sequence-classification toolkit.
"""

from .backends import BackendUnavailableError, MarkerBackend, MediaPipeBackend, get_backend
from .extract import (
    FRAME_DIM,
    LAYOUT,
    ExtractionJob,
    decode_frames,
    extract_corpus,
    extract_sequence,
    read_index,
)

__all__ = [
    "BackendUnavailableError",
    "MarkerBackend",
    "MediaPipeBackend",
    "get_backend",
    "FRAME_DIM",
    "LAYOUT",
    "ExtractionJob",
    "decode_frames",
    "extract_corpus",
    "extract_sequence",
    "read_index",
]

__version__ = "0.1.0"
