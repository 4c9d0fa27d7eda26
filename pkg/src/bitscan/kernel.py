"""Bitwise distance and entropy-weighted agreement over packed codes.

Distances are computed per 64-bit word as ``popcount(a XOR b)``. There is no
early exit, so the cost of a scan depends only on the number of codes.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from typing import Sequence

import numpy as np

from .core import BinaryCode, unpack_bits
from .errors import DimensionMismatch

# rows per block: scratch buffers stay cache-resident (~800 KB at dim 1536)
BLOCK_ROWS = 4096
THREADS_ENV = "BITSCAN_THREADS"


def resolve_threads() -> int:
    """Worker cap from ``BITSCAN_THREADS`` (0 or unset = one per CPU)."""
    raw = os.environ.get(THREADS_ENV, "0").strip() or "0"
    try:
        n = int(raw)
    except ValueError:
        n = 0
    if n <= 0:
        n = os.cpu_count() or 1
    return n


def hamming(a: BinaryCode, b: BinaryCode) -> int:
    if a.dim != b.dim:
        raise DimensionMismatch(b.dim, a.dim)
    return int(np.bitwise_count(a.words ^ b.words).sum())


def _weights_array(weights, dim: int) -> np.ndarray:
    w = np.asarray(weights, dtype=np.float64).reshape(-1)
    if w.shape[0] != dim:
        raise DimensionMismatch(w.shape[0], dim)
    return w


def its_score(q: BinaryCode, d: BinaryCode, weights: Sequence[float] | np.ndarray) -> float:
    """Sum of ``weights[i]`` over the dimensions where both codes agree.

    The sum is correctly rounded (``math.fsum``), so two pairs that agree on
    equally weighted sets of bits always get the same score.
    """
    if q.dim != d.dim:
        raise DimensionMismatch(d.dim, q.dim)
    w = _weights_array(weights, q.dim)
    agree = unpack_bits((~(q.words ^ d.words))[None, :], q.dim)[0].astype(bool)
    return math.fsum(w[agree].tolist())


def its_scores(q: BinaryCode, codes: np.ndarray, weights: Sequence[float] | np.ndarray) -> np.ndarray:
    """:func:`its_score` of ``q`` against every row of a packed code block."""
    codes = np.asarray(codes, dtype=np.uint64)
    out = np.empty(codes.shape[0], dtype=np.float64)
    if codes.shape[0] == 0:
        return out
    if codes.shape[1] != q.words.shape[0]:
        raise DimensionMismatch(codes.shape[1] * 64, q.dim)
    w = _weights_array(weights, q.dim)
    agree = unpack_bits(~(codes ^ q.words), q.dim).astype(bool)
    for j in range(codes.shape[0]):
        out[j] = math.fsum(w[agree[j]].tolist())
    return out


def _hamming_block(q: np.ndarray, codes: np.ndarray, out: np.ndarray, lo: int, hi: int) -> None:
    rows = min(BLOCK_ROWS, hi - lo)
    xor = np.empty((rows, codes.shape[1]), dtype=np.uint64)
    counts = np.empty((rows, codes.shape[1]), dtype=np.uint8)
    for start in range(lo, hi, BLOCK_ROWS):
        stop = min(start + BLOCK_ROWS, hi)
        m = stop - start
        np.bitwise_xor(codes[start:stop], q, out=xor[:m])
        np.bitwise_count(xor[:m], out=counts[:m])
        counts[:m].sum(axis=1, dtype=np.int64, out=out[start:stop])


def batch_hamming(q: BinaryCode, codes: np.ndarray, out: np.ndarray, threads: int | None = None) -> None:
    """Fill ``out[j]`` with ``hamming(q, codes[j])`` for every row of ``codes``.

    ``codes`` is a C-contiguous ``(n, words)`` uint64 block. With more than one
    worker the rows are split into disjoint ranges.
    """
    n = codes.shape[0]
    if out.shape[0] != n:
        raise ValueError(f"output buffer holds {out.shape[0]} entries for {n} codes")
    if n == 0:
        return
    if codes.ndim != 2 or codes.shape[1] != q.words.shape[0]:
        raise DimensionMismatch(codes.shape[-1] * 64, q.dim)
    if out.dtype != np.int64:
        tmp = np.empty(n, dtype=np.int64)
        batch_hamming(q, codes, tmp, threads)
        out[:] = tmp
        return
    workers = min(threads or resolve_threads(), -(-n // BLOCK_ROWS))
    if workers <= 1:
        _hamming_block(q.words, codes, out, 0, n)
        return
    step = -(-n // workers)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(_hamming_block, q.words, codes, out, lo, min(lo + step, n)) for lo in range(0, n, step)]
        for f in futures:
            f.result()
