import itertools
import random
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from hgauge.exact import Poly, VarRegistry
from hgauge.forms import (
    BiGradedForm,
    FormTagError,
    d_t,
    d_x,
    face_restrict,
    pair,
    scalar_wedge,
    simplex_integrate_form,
    wedge_bracket,
    wedge_matrix,
    wedge_square,
)
from hgauge.gauge import random_form, random_poly
from hgauge.suites import stokes_residual

REG = VarRegistry.standard(3, 2)


def random_bigraded(reg, rng, tag="scalar", dim=1, max_terms=3):
    comps = {}
    for _ in range(rng.randint(1, max_terms)):
        I = tuple(sorted(rng.sample(range(reg.m), rng.randint(0, reg.m))))
        J = tuple(sorted(rng.sample(range(reg.k), rng.randint(0, reg.k))))
        comps[(I, J)] = [random_poly(reg, 2, rng, 2, names=reg.names) for _ in range(dim)]
    return BiGradedForm.from_components(reg, tag, dim, comps)


seeds = st.integers(0, 10**6)


def degree_of(w):
    if not w.bidegrees():
        return 0  # the zero form; any sign is correct for it
    (p, q), = w.bidegrees()
    return p + q


# -- oracle: wedge of scalar forms through explicit generator sequences -------


def _generators(I, J, k):
    return [j for j in J] + [k + i for i in I]


def oracle_wedge(a, b):
    k = a.reg.k
    out = {}
    for (Ia, Ja), (pa,) in a.components().items():
        for (Ib, Jb), (pb,) in b.components().items():
            seq = _generators(Ia, Ja, k) + _generators(Ib, Jb, k)
            if len(set(seq)) != len(seq):
                continue
            inv = sum(1 for x, y in itertools.combinations(seq, 2) if x > y)
            s = sorted(seq)
            key = (tuple(g - k for g in s if g >= k), tuple(g for g in s if g < k))
            out[key] = out.get(key, Poly.zero(a.reg)) + pa * pb * (-1) ** inv
    return BiGradedForm.from_components(a.reg, "scalar", 1, {key: [p] for key, p in out.items()})


def test_dx_example():
    r = VarRegistry.standard(3)
    w = BiGradedForm.from_components(r, "scalar", 1, {((0,), ()): "x2"})
    expect = BiGradedForm.from_components(r, "scalar", 1, {((0, 1), ()): -1})
    assert d_x(w) == expect


def test_dt_example():
    r = VarRegistry.standard(3, 1)
    w = BiGradedForm.from_components(r, "scalar", 1, {((0,), ()): "t1"})
    assert d_t(w) == BiGradedForm.from_components(r, "scalar", 1, {((0,), (0,)): 1})


@given(seeds)
def test_nilpotent_and_anticommuting(seed):
    w = random_bigraded(REG, random.Random(seed))
    assert d_x(d_x(w)).is_zero()
    assert d_t(d_t(w)).is_zero()
    assert (d_x(d_t(w)) + d_t(d_x(w))).is_zero()


@given(seeds)
def test_wedge_matches_sequence_oracle(seed):
    rng = random.Random(seed)
    a, b = random_bigraded(REG, rng), random_bigraded(REG, rng)
    assert scalar_wedge(a, b) == oracle_wedge(a, b)


@given(seeds)
def test_graded_leibniz(seed):
    rng = random.Random(seed)
    a = random_bigraded(REG, rng, max_terms=1)
    b = random_bigraded(REG, rng)
    s = (-1) ** degree_of(a)
    for d in (d_x, d_t):
        assert d(scalar_wedge(a, b)) == scalar_wedge(d(a), b) + scalar_wedge(a, d(b)).scale(s)


@given(seeds)
def test_graded_commutativity(seed):
    rng = random.Random(seed)
    a, b = random_bigraded(REG, rng, max_terms=1), random_bigraded(REG, rng, max_terms=1)
    s = (-1) ** (degree_of(a) * degree_of(b))
    assert scalar_wedge(a, b) == scalar_wedge(b, a).scale(s)


def test_pair_example(gl2, P1):
    r = VarRegistry.standard(3)
    idx = gl2.g.index
    X = BiGradedForm.basis_form(r, "g", 4, idx("E12"), I=(0,))
    Y = BiGradedForm.basis_form(r, "h", 4, idx("E21"), I=(1, 2))
    assert pair(P1, [X], Y) == BiGradedForm.from_components(r, "scalar", 1, {((0, 1, 2), ()): 1})


def test_pair_rejects_wrong_arity(P1):
    r = VarRegistry.standard(3)
    X = BiGradedForm.zero(r, "g", 4)
    with pytest.raises(ValueError):
        pair(P1, [X, X], BiGradedForm.zero(r, "h", 4))


@given(seeds)
def test_square_of_one_form_is_half_bracket(gl2, seed):
    r = VarRegistry.standard(4)
    A = random_form(r, "g", 4, 1, 2, random.Random(seed))
    half = wedge_bracket(A, A, gl2.g).scale(Fraction(1, 2))
    assert wedge_matrix(A, A, gl2.g) == half
    assert wedge_square(A, gl2.g) == half


def test_square_fallback_without_product_closure():
    from hgauge.algebra import LieAlgebra

    L = LieAlgebra.so3()
    assert not L.closed_under_product
    r = VarRegistry.standard(3)
    A = random_form(r, "g", 3, 1, 1, random.Random(2))
    assert wedge_square(A, L) == wedge_bracket(A, A, L).scale(Fraction(1, 2))
    with pytest.raises(FormTagError):
        wedge_square(random_form(r, "g", 3, 2, 1, random.Random(2)), L)


@given(seeds)
def test_covariant_derivative_squares_to_curvature(gl2, seed):
    rng = random.Random(seed)
    r = VarRegistry.standard(4)
    L = gl2.g
    A = random_form(r, "g", 4, 1, 1, rng)
    X = random_form(r, "g", 4, 0, 2, rng)
    DX = d_x(X) + wedge_bracket(A, X, L)
    DDX = d_x(DX) + wedge_bracket(A, DX, L)
    curv = d_x(A) + wedge_bracket(A, A, L).scale(Fraction(1, 2))
    assert DDX == wedge_bracket(curv, X, L)


def test_face_and_integral_small_example():
    r = VarRegistry.standard(1, 1)
    w = BiGradedForm.from_components(r, "scalar", 1, {((), ()): "t1"})
    assert simplex_integrate_form(face_restrict(w, 0)).components() == {((), ()): [1]}
    assert face_restrict(w, 1).is_zero()
    assert simplex_integrate_form(d_t(w)).components() == {((), ()): [1]}


def test_simplex_integral_keeps_only_top_dt():
    r = VarRegistry.standard(2, 2)
    w = BiGradedForm.from_components(r, "scalar", 1, {((0,), (0, 1)): "t1*x1", ((0,), (0,)): "x2"})
    out = simplex_integrate_form(w)
    assert out.reg == VarRegistry.standard(2)
    assert out == BiGradedForm.from_components(out.reg, "scalar", 1, {((0,), ()): "1/6*x1"})


@pytest.mark.parametrize("k", [1, 2, 3])
@pytest.mark.parametrize("seed", range(4))
def test_simplex_stokes(k, seed):
    assert stokes_residual(k, 2, random.Random(seed)).is_zero()


def test_registry_and_tag_errors(gl2):
    from hgauge.exact import RegistryMismatch

    a = BiGradedForm.zero(VarRegistry.standard(2))
    b = BiGradedForm.zero(VarRegistry.standard(3))
    with pytest.raises(RegistryMismatch):
        a + b
    with pytest.raises(FormTagError):
        wedge_bracket(BiGradedForm.zero(REG, "g", 4), BiGradedForm.zero(REG, "h", 4), gl2.g)
