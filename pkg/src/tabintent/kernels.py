"""Hot inner loops of featurization.

Every kernel has a numba body and a numpy fallback with identical output;
``tabintent._accel`` picks one at import time.
"""
import numpy as np

from ._accel import kernel

FNV_BASIS = np.uint64(14695981039346656037)
FNV_PRIME = np.uint64(1099511628211)
GOLDEN = np.uint64(0x9E3779B97F4A7C15)


def _seed_basis(seed, n):
    # python ints: numpy scalar uint64 arithmetic warns on the intended wraparound
    return np.uint64(int(FNV_BASIS) ^ ((int(seed) * int(GOLDEN) + int(n)) & 0xFFFFFFFFFFFFFFFF))


def _hash_ngrams_np(codes, sizes, dim, seed):
    out = np.zeros(dim, dtype=np.float64)
    m = codes.shape[0]
    for n in sizes:
        npos = m - n + 1
        if npos <= 0:
            continue
        h = np.full(npos, _seed_basis(seed, n), dtype=np.uint64)
        for j in range(n):
            h = (h ^ codes[j:j + npos]) * FNV_PRIME
        buckets = (h % np.uint64(dim)).astype(np.int64)
        signs = np.where(((h >> np.uint64(32)) & np.uint64(1)) == np.uint64(1), -1.0, 1.0)
        np.add.at(out, buckets, signs)
    return out


@kernel(_hash_ngrams_np)
def hash_ngrams(codes, sizes, dim, seed):
    """Signed hashed counts of character n-grams.

    ``codes`` is a uint64 array of code points; ``sizes`` the n-gram lengths.
    """
    out = np.zeros(dim, dtype=np.float64)
    m = codes.shape[0]
    udim = np.uint64(dim)
    one = np.uint64(1)
    shift = np.uint64(32)
    for n in sizes:
        npos = m - n + 1
        if npos <= 0:
            continue
        basis = FNV_BASIS ^ (np.uint64(seed) * GOLDEN + np.uint64(n))
        for i in range(npos):
            h = basis
            for j in range(n):
                h = (h ^ codes[i + j]) * FNV_PRIME
            b = np.int64(h % udim)
            if ((h >> shift) & one) == one:
                out[b] -= 1.0
            else:
                out[b] += 1.0
    return out


def _ordinal_ranks_np(values):
    n = values.shape[0]
    asc = np.empty(n, dtype=np.int64)
    desc = np.empty(n, dtype=np.int64)
    asc[np.argsort(values, kind="mergesort")] = np.arange(1, n + 1)
    desc[np.argsort(-values, kind="mergesort")] = np.arange(1, n + 1)
    return asc, desc


@kernel(_ordinal_ranks_np)
def ordinal_ranks(values):
    """1-based ascending and descending positions; ties keep original order."""
    n = values.shape[0]
    asc = np.empty(n, dtype=np.int64)
    desc = np.empty(n, dtype=np.int64)
    order = np.argsort(values, kind="mergesort")
    for pos in range(n):
        asc[order[pos]] = pos + 1
    order = np.argsort(-values, kind="mergesort")
    for pos in range(n):
        desc[order[pos]] = pos + 1
    return asc, desc


def _dense_ranks_np(counts):
    uniq = np.unique(counts)
    desc = uniq.shape[0] - np.searchsorted(uniq, counts)
    asc = np.searchsorted(uniq, counts) + 1
    return desc.astype(np.int64), asc.astype(np.int64), uniq.shape[0]


@kernel(_dense_ranks_np)
def dense_ranks(counts):
    """Dense ranks of integer counts: (descending rank, ascending rank, #distinct)."""
    uniq = np.unique(counts)
    u = uniq.shape[0]
    n = counts.shape[0]
    desc = np.empty(n, dtype=np.int64)
    asc = np.empty(n, dtype=np.int64)
    for i in range(n):
        p = np.searchsorted(uniq, counts[i])
        desc[i] = u - p
        asc[i] = p + 1
    return desc, asc, u
