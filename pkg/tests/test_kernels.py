import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from hgauge.kernels import _numpy

numba_k = pytest.importorskip("hgauge.kernels._numba")

masks = hnp.arrays(np.int64, st.integers(0, 12), elements=st.integers(0, 255))


def _arrays(n, seed):
    rng = np.random.default_rng(seed)
    return (
        rng.integers(0, 1 << 20, n).astype(np.int64),
        rng.integers(0, 256, n).astype(np.int64),
        rng.integers(-50, 50, n).astype(np.int64),
    )


def _sorted(*cols):
    order = np.lexsort(tuple(reversed(cols)))
    return [c[order] for c in cols]


@given(st.integers(0, 40), st.integers(0, 40), st.integers(0, 2**32))
def test_block_product_parity(n1, n2, seed):
    a, b = _arrays(n1, seed), _arrays(n2, seed + 1)
    guard = np.int64(1 << 19)
    r1 = _numpy.block_product(a[0], a[1], a[2], b[0], b[1], b[2], guard)
    r2 = numba_k.block_product(a[0], a[1], a[2], b[0], b[1], b[2], guard)
    assert r1[3] == r2[3]
    for x, y in zip(_sorted(*r1[:3]), _sorted(*r2[:3])):
        assert np.array_equal(x, y)


@given(st.integers(0, 200), st.integers(0, 2**32))
def test_reduce_terms_parity(n, seed):
    rng = np.random.default_rng(seed)
    hdr = rng.integers(0, 4, n).astype(np.int64)
    mono = rng.integers(0, 6, n).astype(np.int64)
    num = rng.integers(-3, 4, n).astype(np.int64)
    r1 = _numpy.reduce_terms(hdr, mono, num)
    r2 = numba_k.reduce_terms(hdr, mono, num)
    for x, y in zip(r1, r2):
        assert np.array_equal(x, y)


@given(masks, masks)
def test_swap_parity_matches_numba(m1, m2):
    k = min(len(m1), len(m2))
    m1, m2 = m1[:k], m2[:k]
    expect = [numba_k._parity(int(a), int(b)) for a, b in zip(m1, m2)]
    assert list(_numpy.swap_parity(m1, m2)) == expect


def test_swap_parity_small_cases():
    # dt1 (bit 0) moved past dx1 (bit 1): one transposition
    assert _numpy.swap_parity(np.array([2]), np.array([1]))[0] == 1
    assert _numpy.swap_parity(np.array([1]), np.array([2]))[0] == 0
    assert _numpy.swap_parity(np.array([6]), np.array([1]))[0] == 0
