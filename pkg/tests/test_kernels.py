import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, strategies as st

from tabintent import _accel, kernels

needs_numba = pytest.mark.skipif(not _accel.HAS_NUMBA, reason="numba not installed")


@needs_numba
@given(st.text(max_size=60), st.integers(1, 300), st.integers(0, 2**31))
def test_hash_ngrams_paths_agree(text, dim, seed):
    codes = np.array([ord(c) for c in text], dtype=np.uint64)
    sizes = np.array([2, 3], dtype=np.int64)
    assert np.array_equal(kernels.hash_ngrams.jit(codes, sizes, dim, seed),
                          kernels.hash_ngrams.py(codes, sizes, dim, seed))


@needs_numba
@given(st.lists(st.integers(-5, 5), max_size=40))
def test_rank_paths_agree(xs):
    v = np.array(xs, dtype=np.float64)
    for a, b in zip(kernels.ordinal_ranks.jit(v), kernels.ordinal_ranks.py(v)):
        assert np.array_equal(a, b)
    c = np.array([abs(x) + 1 for x in xs], dtype=np.int64)
    ja, pa = kernels.dense_ranks.jit(c), kernels.dense_ranks.py(c)
    assert np.array_equal(ja[0], pa[0]) and np.array_equal(ja[1], pa[1]) and ja[2] == pa[2]


def test_ordinal_ranks_break_ties_by_position():
    asc, desc = kernels.ordinal_ranks(np.array([2.0, 1.0, 2.0]))
    assert asc.tolist() == [2, 1, 3] and desc.tolist() == [1, 3, 2]


def test_dense_ranks():
    desc, asc, u = kernels.dense_ranks(np.array([3, 1, 3, 2], dtype=np.int64))
    assert desc.tolist() == [1, 3, 1, 2] and asc.tolist() == [3, 1, 3, 2] and u == 3


def test_env_flag_selects_numpy_backend():
    env = dict(os.environ, TABINTENT_DISABLE_NUMBA="1")
    out = subprocess.run([sys.executable, "-c", "from tabintent import _accel; print(_accel.backend())"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "numpy"
