"""Difficulty-bucket prediction over semantic similarity graphs.

The train pass labels a corpus with bucketed WER, builds a cosine
k-NN graph over its sentence embeddings and trains a message-passing
network to recover the buckets. The fine-tune pass inserts new,
unlabeled utterances into the graph, predicts their difficulty and
samples the hardest ones.
"""

from .corpus import (BucketSpec, Utterance, WerScore, bucketize, compute_wer,
                     label_corpus, load_corpus, load_embeddings,
                     normalize_text, save_corpus, save_embeddings)
from .embednet import RefinerConfig, contrastive_loss, refine_embeddings
from .errors import (DataError, NumericError, SesameError, ShapeError,
                     UsageError)
from .gnn import (GnnConfig, GnnModel, decode_ordinal, encode_ordinal,
                  load_model, predict, save_model, train_gnn)
from .metrics import (EvalReport, accuracy, edge_homophily, evaluate, mse,
                      neighborhood_homophily, ofa)
from .sampler import SampleResult, sample_difficult
from .simgraph import (SemanticGraph, build_graph, build_index, extend_graph,
                       knn_query, load_graph, save_graph)
from .synth import PlantedSpec, generate_planted, planted_recovery_report

__version__ = "0.1.0"

__all__ = [
    "BucketSpec", "Utterance", "WerScore", "bucketize", "compute_wer",
    "label_corpus", "load_corpus", "load_embeddings", "normalize_text",
    "save_corpus", "save_embeddings",
    "RefinerConfig", "contrastive_loss", "refine_embeddings",
    "DataError", "NumericError", "SesameError", "ShapeError", "UsageError",
    "GnnConfig", "GnnModel", "decode_ordinal", "encode_ordinal",
    "load_model", "predict", "save_model", "train_gnn",
    "EvalReport", "accuracy", "edge_homophily", "evaluate", "mse",
    "neighborhood_homophily", "ofa",
    "SampleResult", "sample_difficult",
    "SemanticGraph", "build_graph", "build_index", "extend_graph",
    "knn_query", "load_graph", "save_graph",
    "PlantedSpec", "generate_planted", "planted_recovery_report",
]
