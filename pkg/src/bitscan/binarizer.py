"""Single-bit quantization of float embeddings.

Two modes are supported:

``sign``
    bit ``i`` is 1 iff ``x[i] >= 0``.

``mib``
    a per-dimension threshold is calibrated on a corpus. This is a
    reconstruction of "maximally informative binarization", not the vendor
    algorithm: each threshold is the lower median of its column, which makes
    every bit as close to a fair coin over the calibration corpus as the data
    allow and therefore maximizes its marginal Shannon entropy.

Both modes also carry per-dimension information weights, the binary entropy
of each bit's calibration frequency. Rescoring uses them; see
:func:`bitscan.kernel.its_score`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import BinaryCode, EmbeddingVector, as_array, check_finite, pack_bits
from .errors import DimensionMismatch, EmptyCorpus, InvalidParams

MODES = ("sign", "mib")


def binary_entropy(p: float) -> float:
    """Entropy in bits of a Bernoulli(p) variable, with 0*log2(0) := 0."""
    if p <= 0.0 or p >= 1.0:
        return 0.0
    return -p * math.log2(p) - (1.0 - p) * math.log2(1.0 - p)


def _entropy_array(freqs: np.ndarray) -> np.ndarray:
    return np.array([binary_entropy(float(p)) for p in freqs], dtype=np.float64)


@dataclass(frozen=True, eq=False)
class QuantizerModel:
    mode: str
    thresholds: np.ndarray
    weights: np.ndarray
    bit_frequencies: np.ndarray

    def __post_init__(self) -> None:
        if self.mode not in MODES:
            raise InvalidParams(f"unknown quantizer mode {self.mode!r}")
        arrays = {}
        for name in ("thresholds", "weights", "bit_frequencies"):
            arr = np.array(getattr(self, name), dtype=np.float64).reshape(-1)
            arr.flags.writeable = False
            arrays[name] = arr
            object.__setattr__(self, name, arr)
        dim = arrays["thresholds"].shape[0]
        if dim < 1:
            raise InvalidParams("quantizer dim must be positive")
        for name in ("weights", "bit_frequencies"):
            if arrays[name].shape[0] != dim:
                raise DimensionMismatch(arrays[name].shape[0], dim)
        if self.mode == "sign" and np.any(arrays["thresholds"] != 0.0):
            raise InvalidParams("sign mode requires all-zero thresholds")
        freqs = arrays["bit_frequencies"]
        if np.any((freqs < 0) | (freqs > 1)) or np.any((arrays["weights"] < 0) | (arrays["weights"] > 1)):
            raise InvalidParams("bit frequencies and weights must lie in [0, 1]")

    @property
    def dim(self) -> int:
        return int(self.thresholds.shape[0])

    @classmethod
    def sign(cls, dim: int, bit_frequencies: Sequence[float] | np.ndarray | None = None) -> "QuantizerModel":
        """Sign quantizer. Without frequencies every bit is assumed fair (weight 1)."""
        freqs = np.full(dim, 0.5) if bit_frequencies is None else np.asarray(bit_frequencies, dtype=np.float64)
        return cls("sign", np.zeros(dim), _entropy_array(freqs), freqs)

    def binarize(self, v: EmbeddingVector | Sequence[float] | np.ndarray) -> BinaryCode:
        return binarize_mib(v, self) if self.mode == "mib" else binarize_sign(v)

    def binarize_matrix(self, x: np.ndarray) -> np.ndarray:
        """Pack an ``(n, dim)`` float matrix into ``(n, words)`` uint64 codes."""
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 2 or x.shape[1] != self.dim:
            raise DimensionMismatch(x.shape[-1], self.dim)
        check_finite(x.reshape(-1))
        return pack_bits(x >= self.thresholds)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, QuantizerModel):
            return NotImplemented
        return (
            self.mode == other.mode
            and np.array_equal(self.thresholds, other.thresholds)
            and np.array_equal(self.weights, other.weights)
            and np.array_equal(self.bit_frequencies, other.bit_frequencies)
        )

    def __repr__(self) -> str:
        return f"QuantizerModel(mode={self.mode!r}, dim={self.dim})"


def binarize_sign(v: EmbeddingVector | Sequence[float] | np.ndarray) -> BinaryCode:
    arr = as_array(v)
    check_finite(arr)
    return BinaryCode.from_bits(arr >= 0.0)


def binarize_mib(v: EmbeddingVector | Sequence[float] | np.ndarray, model: QuantizerModel) -> BinaryCode:
    arr = as_array(v)
    if arr.shape[0] != model.dim:
        raise DimensionMismatch(arr.shape[0], model.dim)
    check_finite(arr)
    return BinaryCode.from_bits(arr >= model.thresholds)


def _stack(corpus_vectors) -> np.ndarray:
    if isinstance(corpus_vectors, np.ndarray):
        x = np.asarray(corpus_vectors, dtype=np.float64)
        if x.ndim != 2:
            raise InvalidParams("corpus matrix must be 2-D")
        return x
    rows = [as_array(v) for v in corpus_vectors]
    if not rows:
        raise EmptyCorpus("calibration needs at least 2 vectors, got 0")
    dim = rows[0].shape[0]
    for r in rows:
        if r.shape[0] != dim:
            raise DimensionMismatch(r.shape[0], dim)
    return np.vstack(rows)


def calibrate_mib(corpus_vectors) -> QuantizerModel:
    """Fit per-dimension lower-median thresholds and entropy weights."""
    x = _stack(corpus_vectors)
    n = x.shape[0]
    if n < 2:
        raise EmptyCorpus(f"calibration needs at least 2 vectors, got {n}")
    check_finite(x.reshape(-1))
    lower = (n - 1) // 2
    thresholds = np.partition(x, lower, axis=0)[lower]
    counts = np.count_nonzero(x >= thresholds, axis=0)
    freqs = counts / n
    return QuantizerModel("mib", thresholds, _entropy_array(freqs), freqs)


def calibrate_sign(corpus_vectors) -> QuantizerModel:
    """Sign quantizer whose weights reflect the corpus frequency of each bit."""
    x = _stack(corpus_vectors)
    n = x.shape[0]
    if n < 1:
        raise EmptyCorpus("calibration needs at least 1 vector")
    check_finite(x.reshape(-1))
    freqs = np.count_nonzero(x >= 0.0, axis=0) / n
    return QuantizerModel.sign(x.shape[1], freqs)
