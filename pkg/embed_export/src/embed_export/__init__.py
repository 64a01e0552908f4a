"""Corpus-to-embedding export in the SESM binary format."""

from .export import (BertMeanEncoder, DEFAULT_ENCODER, ExportConfig,
                     export_embeddings, load_texts)
from .sesm import read_sesm, write_sesm

__version__ = "0.1.0"

__all__ = [
    "BertMeanEncoder",
    "DEFAULT_ENCODER",
    "ExportConfig",
    "export_embeddings",
    "load_texts",
    "read_sesm",
    "write_sesm",
]
