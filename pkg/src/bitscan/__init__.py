"""Index-free binary vector search with an exact cosine oracle and IR metrics."""

__version__ = "0.1.0"

from .binarizer import QuantizerModel, binarize_mib, binarize_sign, binary_entropy, calibrate_mib, calibrate_sign
from .core import (
    BinaryCode,
    CorpusRecord,
    EmbeddingVector,
    QueryRecord,
    RankedList,
    RelevanceJudgments,
    ScoredHit,
    validate_vector,
)
from .engine import Engine, Namespace, SearchRequest, SearchResponse, StageTimings
from .errors import *  # noqa: F401,F403
from .indexfile import load_index, save_index
from .kernel import batch_hamming, hamming, its_score
from .metrics import dcg_at_k, evaluate, idcg_at_k, latency_summary, ndcg_at_k, precision_recall_map
from .oracle import cosine, exact_search, recall_vs_oracle
from .synthetic import generate_synthetic
