"""Compare the numba kernels with their numpy fallbacks.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Prints per-kernel timings for both paths, then times signature computation
and embedding over a synthetic corpus once per backend (each in a fresh
interpreter, with and without TABINTENT_DISABLE_NUMBA=1).
"""
import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from tabintent import _accel, kernels

END_TO_END = """
import time
from tabintent import _accel
from tabintent.config import default_settings
from tabintent.embeddings import HashedNGramEmbedder
from tabintent.signatures import compute_cell_signatures
from tabintent.synth import SynthSpec, generate_synthetic

s = default_settings()
corpus = generate_synthetic(SynthSpec(300, seed=1), s.vocab)
emb = HashedNGramEmbedder(64, cache_size=0)
compute_cell_signatures(corpus.tables[0].fields[0], s.vocab)  # warm up / compile
emb.embed("warm up")
t0 = time.perf_counter()
for t in corpus.tables:
    for f in t.fields:
        compute_cell_signatures(f, s.vocab)
        for c in f.cells:
            emb.embed(c.raw)
print(_accel.backend(), f"{time.perf_counter() - t0:.3f}")
"""


def _time(fn, args, repeat):
    fn(*args)  # compile outside the timed region
    return min(timeit.repeat(lambda: fn(*args), number=20, repeat=repeat)) / 20


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    rng = np.random.default_rng(0)
    text = np.array([ord(c) for c in "Quarterly revenue by region 2021"], dtype=np.uint64)
    cases = {
        "hash_ngrams": (text, np.array([2, 3], dtype=np.int64), 64, 0),
        "ordinal_ranks": (rng.integers(0, 50, size=5000).astype(np.float64),),
        "dense_ranks": (rng.integers(1, 30, size=5000).astype(np.int64),),
    }
    print(f"{'kernel':<16}{'numpy (us)':>12}{'numba (us)':>12}{'speedup':>10}")
    for name, a in cases.items():
        k = getattr(kernels, name)
        py = _time(k.py, a, args.repeat) * 1e6
        if k.jit is None:
            print(f"{name:<16}{py:>12.1f}{'n/a':>12}{'':>10}")
            continue
        jit = _time(k.jit, a, args.repeat) * 1e6
        print(f"{name:<16}{py:>12.1f}{jit:>12.1f}{py / jit:>9.1f}x")
    print("\nend to end (signatures + embeddings over 300 synthetic tables, seconds)")
    for disable in ("0", "1"):
        env = dict(os.environ, TABINTENT_DISABLE_NUMBA=disable)
        out = subprocess.run([sys.executable, "-c", END_TO_END], env=env, capture_output=True, text=True, check=True)
        print("  " + out.stdout.strip())
    if not _accel.HAS_NUMBA:
        print("numba is not installed; only the numpy path was measured")


if __name__ == "__main__":
    main()
