"""Small worked cases with hand-computed answers, plus graded Leibniz rules."""
import random
from fractions import Fraction

import pytest

from conftest import connections
from hgauge.algebra import LieAlgebra, act, alpha_apply, build_adjoint_module, bracket, invpoly_from_trace, validate_dcm
from hgauge.exact import Poly, VarRegistry, poly_diff, simplex_integrate
from hgauge.forms import (
    BiGradedForm,
    alpha_push,
    d_t,
    d_x,
    face_restrict,
    pair,
    scalar_wedge,
    simplex_integrate_form,
    wedge_action,
    wedge_bracket,
    wedge_matrix,
)
from hgauge.gauge import (
    ConnectionFamily,
    GaugePair,
    TwoConnection,
    b_form,
    bianchi_residuals,
    chsas_form,
    curvature,
    curvature_forms,
    family_curvature,
    gauge_transform,
    invariance_check_P,
    invariant_form_P,
    is_fake_flat,
    is_flat,
    q_boundary,
    random_form,
    transgression_Q,
)
from hgauge.homotopy import chern_weil_check

HALF = Fraction(1, 2)
R3 = VarRegistry.standard(3)


def form(reg, tag, dim, comps):
    return BiGradedForm.from_components(reg, tag, dim, comps)


def basis(reg, tag, dim, comp, I, J=()):
    return BiGradedForm.basis_form(reg, tag, dim, comp, I=I, J=J)


# -- polynomials ---------------------------------------------------------------


def test_polynomial_examples():
    r = VarRegistry.standard(2, 1)
    P = lambda s: Poly.parse(r, s)  # noqa: E731
    assert (P("x1") + P("-x1")).is_zero()
    assert P("x1*t1") + P("x1*t1") == P("2*x1*t1")
    assert P("x1^2 + 1/2") + P("x1") == P("x1^2 + x1 + 1/2")
    assert (P("x1 + t1") * P("x1 - t1")) == P("x1^2 - t1^2")
    assert (P("x1 + t1") * Poly.zero(r)).is_zero()
    assert poly_diff(P("x1^2"), "x1") == P("2*x1")
    assert poly_diff(P("x1*t1"), "t1") == P("x1")
    assert poly_diff(P("x2^3 + t1*x2"), "x2") == P("3*x2^2 + t1")
    assert simplex_integrate(P("t1"), ["t1"]).to_dict() == {(0, 0): HALF}
    r2 = VarRegistry.standard(1, 2)
    assert simplex_integrate(Poly.const(r2, 1), ["t1", "t2"]).to_dict() == {(0,): HALF}


# -- algebra -------------------------------------------------------------------


def test_bracket_and_action_examples(gl2):
    so3 = LieAlgebra.so3()
    assert bracket(so3, [1, 0, 0], [1, 0, 0]) == [0, 0, 0]
    rng = random.Random(0)
    x = [Fraction(rng.randint(-3, 3)) for _ in range(4)]
    y = [Fraction(rng.randint(-3, 3)) for _ in range(4)]
    assert act(gl2, x, y) == bracket(gl2.g, x, y)
    assert alpha_apply(gl2, y) == y
    assert act(gl2, [0] * 4, y) == [0] * 4


def test_poincare_shape_and_trivial_pairing(poincare):
    assert (poincare.g.dim, poincare.h.dim) == (6, 4)
    P = invpoly_from_trace(poincare, 1)
    assert not any(v != 0 for v in P.tensor.flat)


def test_one_dimensional_abelian_module():
    assert validate_dcm(build_adjoint_module(LieAlgebra.abelian(1))).passed


# -- forms ---------------------------------------------------------------------


def test_differential_examples():
    r = VarRegistry.standard(3, 2)
    assert d_x(form(r, "scalar", 1, {((0,), ()): 5})).is_zero()
    assert d_x(d_x(form(r, "scalar", 1, {((2,), ()): "x1*x2"}))).is_zero()
    assert d_t(form(r, "scalar", 1, {((1,), ()): "x1"})).is_zero()
    assert d_t(d_t(form(r, "scalar", 1, {((), ()): "t1*t2"}))).is_zero()


def test_bracket_wedge_examples(gl2):
    so3 = LieAlgebra.so3()
    a = basis(R3, "g", 3, 0, (0,))
    b = basis(R3, "g", 3, 1, (1,))
    e3 = basis(R3, "g", 3, 2, (0, 1))
    assert wedge_bracket(a, b, so3) == e3
    assert wedge_bracket(b, a, so3) == e3
    w = random_form(R3, "g", 4, 2, 1, random.Random(1))
    assert wedge_bracket(w, w, gl2.g).is_zero()
    ab = build_adjoint_module(LieAlgebra.abelian(2))
    u = random_form(R3, "g", 2, 1, 1, random.Random(2))
    assert wedge_bracket(u, u, ab.g).is_zero()


def test_action_wedge_poincare(poincare):
    g, h = poincare.g, poincare.h
    M12 = basis(R3, "g", 6, g.index("M12"), (0,))
    P2 = basis(R3, "h", 4, h.index("P2"), (1,))
    assert wedge_action(poincare, M12, P2) == basis(R3, "h", 4, h.index("P1"), (0, 1))
    assert wedge_action(poincare, BiGradedForm.zero(R3, "g", 6), P2).is_zero()


def test_matrix_wedge_examples(gl2):
    L = gl2.g
    E12 = basis(R3, "g", 4, L.index("E12"), (0,))
    E21 = basis(R3, "g", 4, L.index("E21"), (1,))
    assert wedge_matrix(E12, E21, L) == basis(R3, "g", 4, L.index("E11"), (0, 1))
    ab = LieAlgebra.abelian(2)
    assert ab.closed_under_product
    u = form(R3, "g", 2, {((0,), ()): ["x1", "2"], ((1,), ()): ["1", "x3"]})
    uu = wedge_matrix(u, u, ab)
    assert uu.is_zero()
    v = form(R3, "g", 2, {((), ()): ["x1", "2"]})
    assert wedge_matrix(v, u, ab) == form(R3, "g", 2, {((0,), ()): ["x1^2", "4"], ((1,), ()): ["x1", "2*x3"]})


def test_alpha_push_examples(gl2, poincare):
    eta = random_form(R3, "h", 4, 2, 1, random.Random(3))
    assert alpha_push(poincare, eta).is_zero()
    assert alpha_push(gl2, eta) == eta.retag("g")


def test_pair_with_zero(P1):
    X = random_form(R3, "g", 4, 1, 1, random.Random(4))
    assert pair(P1, [X], BiGradedForm.zero(R3, "h", 4)).is_zero()
    assert pair(P1, [BiGradedForm.zero(R3, "g", 4)], X.retag("h")).is_zero()


def test_integration_examples():
    r = VarRegistry.standard(2, 1)
    omega = form(r, "scalar", 1, {((0, 1), ()): "x1"})
    w = scalar_wedge(form(r, "scalar", 1, {((), (0,)): "t1"}), omega)
    out = simplex_integrate_form(w)
    assert out == form(out.reg, "scalar", 1, {((0, 1), ()): "1/2*x1"})
    assert simplex_integrate_form(d_t(form(r, "scalar", 1, {((), ()): "t1^2"}))).components() == {((), ()): [1]}
    r2 = VarRegistry.standard(2, 2)
    assert simplex_integrate_form(form(r2, "scalar", 1, {((0,), (0,)): "t2"})).is_zero()
    c = form(r2, "scalar", 1, {((1,), ()): 3})
    for i in range(3):
        f = face_restrict(c, i)
        assert f == form(f.reg, "scalar", 1, {((1,), ()): 3})


# -- graded Leibniz over every product -----------------------------------------

R4T = VarRegistry.standard(4, 1)


def homogeneous(tag, dim, p, q, seed):
    rng = random.Random(seed)
    import itertools

    comps = {}
    for I in itertools.combinations(range(R4T.m), p):
        for J in itertools.combinations(range(R4T.k), q):
            comps[(I, J)] = [Poly.parse(R4T, "x1*t1") * rng.choice([-1, 1, 2]) + Poly.parse(R4T, f"{rng.randint(-2, 2)}*x{rng.randint(1, 4)}")
                             for _ in range(dim)]
    return form(R4T, tag, dim, comps)


@pytest.mark.parametrize("deg", [(0, 0), (1, 0), (1, 1), (2, 0), (0, 1)])
@pytest.mark.parametrize("d", [d_x, d_t])
def test_leibniz_over_products(gl2, P1, deg, d):
    L = gl2.g
    s = (-1) ** sum(deg)
    a = homogeneous("g", 4, *deg, seed=1)
    b = homogeneous("g", 4, 1, 0, seed=2)
    eta = homogeneous("h", 4, 2, 0, seed=3)
    for op in (lambda x, y: wedge_bracket(x, y, L), lambda x, y: wedge_matrix(x, y, L)):
        assert d(op(a, b)) == op(d(a), b) + op(a, d(b)).scale(s)
    assert d(wedge_action(gl2, a, eta)) == wedge_action(gl2, d(a), eta) + wedge_action(gl2, a, d(eta)).scale(s)
    assert d(pair(P1, [a], eta)) == pair(P1, [d(a)], eta) + pair(P1, [a], d(eta)).scale(s)


def test_covariant_derivative_through_pairing(gl2, P2):
    """d<w1 w2, eta> is the sum of covariant-derivative insertions."""
    L = gl2.g
    r = VarRegistry.standard(5)
    rng = random.Random(9)
    A = random_form(r, "g", 4, 1, 1, rng)
    w1 = random_form(r, "g", 4, 1, 1, rng)
    w2 = random_form(r, "g", 4, 2, 1, rng)
    eta = random_form(r, "h", 4, 1, 1, rng)
    D = lambda w: d_x(w) + wedge_bracket(A, w, L)  # noqa: E731
    Dh = d_x(eta) + wedge_action(gl2, A, eta)
    rhs = pair(P2, [D(w1), w2], eta) - pair(P2, [w1, D(w2)], eta) + pair(P2, [w1, w2], Dh).scale(-1)
    assert d_x(pair(P2, [w1, w2], eta)) == rhs


# -- connections -----------------------------------------------------------------


def test_constant_one_form_has_no_curvature(gl2):
    A = basis(R3, "g", 4, 1, (0,)) + basis(R3, "g", 4, 2, (0,))
    assert curvature(gl2, TwoConnection(A, BiGradedForm.zero(R3, "h", 4))).F.is_zero()


def test_curvature_and_bianchi_of_zero(gl2):
    zero = TwoConnection.zero(gl2, R3)
    k = curvature(gl2, zero)
    assert k.F.is_zero() and k.G.is_zero()
    assert all(r.is_zero() for r in bianchi_residuals(gl2, zero))


def test_fake_flat_but_not_flat(poincare):
    B = form(R3, "h", 4, {((0, 1), ()): ["x3", 0, 0, 0]})
    c = TwoConnection(BiGradedForm.zero(R3, "g", 6), B)
    assert is_fake_flat(poincare, c)
    assert not is_flat(poincare, c)


def test_abelian_fake_flat_construction():
    cm = build_adjoint_module(LieAlgebra.abelian(2))
    A = random_form(R3, "g", 2, 1, 2, random.Random(5))
    B = (d_x(A) + wedge_bracket(A, A, cm.g).scale(HALF)).retag("h")
    assert is_fake_flat(cm, TwoConnection(A, B))


def test_identity_group_element_shifts_by_alpha(gl2):
    c = connections(gl2, R3, 1, "shift", degree=1)[0]
    phi = random_form(R3, "h", 4, 1, 1, random.Random(6))
    ident = [[1, 0], [0, 1]]
    c2 = gauge_transform(gl2, c, GaugePair.constant(R3, ident, phi))
    assert c2.A == c.A + alpha_push(gl2, phi)


def test_unipotent_maurer_cartan(gl2):
    x1 = Poly.var(R3, "x1")
    gp = GaugePair.unipotent(R3, [[0, x1], [0, 0]], BiGradedForm.zero(R3, "h", 4))
    c2 = gauge_transform(gl2, TwoConnection.zero(gl2, R3), gp)
    # (I - x1 N) N dx1 = N dx1 since N^2 = 0
    assert c2.A == basis(R3, "g", 4, gl2.g.index("E12"), (0,))
    assert c2.B.is_zero()


def test_invariance_trivial_cases(gl2, P1):
    c = connections(gl2, VarRegistry.standard(5), 1, "inv")[0]
    reg = c.reg
    assert invariance_check_P(P1, gl2, c, GaugePair.identity(gl2, reg)).is_zero()
    gp = GaugePair.constant(reg, [[2, 1], [1, 1]], BiGradedForm.zero(reg, "h", 4))
    assert invariance_check_P(P1, gl2, c, gp).is_zero()


def test_invariant_form_trivial_cases(gl2, P1, reg5):
    assert invariant_form_P(P1, gl2, TwoConnection.zero(gl2, reg5))[0].is_zero()
    A = random_form(reg5, "g", 4, 1, 1, random.Random(7))
    B = (d_x(A) + wedge_matrix(A, A, gl2.g)).retag("h")
    assert invariant_form_P(P1, gl2, TwoConnection(A, B))[0].is_zero()


def test_family_vertices(gl2):
    c0, c1 = connections(gl2, R3, 2, "fam", degree=1)
    single = ConnectionFamily([c0])
    F, G = family_curvature(single, gl2)
    k0 = curvature(gl2, c0)
    assert F == k0.F and G == k0.G
    fam = ConnectionFamily([c0, c1])
    F, G = family_curvature(fam, gl2)
    for t, c in ((0, c0), (1, c1)):
        k = curvature(gl2, c)
        assert F.specialize({"t1": t}) == k.F.lift(fam.reg)
        assert G.specialize({"t1": t}) == k.G.lift(fam.reg)


def test_dt_of_family_curvature(gl2):
    fam = ConnectionFamily(connections(gl2, R3, 3, "dtF", degree=1))
    F, _ = family_curvature(fam, gl2)
    A, dA, dB = fam.A_t, d_t(fam.A_t), d_t(fam.B_t)
    L = gl2.g
    # d_t acts from the left and passes the odd A_t in the second slot
    expect = -d_x(dA) + (wedge_bracket(dA, A, L) - wedge_bracket(A, dA, L)).scale(HALF) - alpha_push(gl2, dB)
    assert d_t(F) == expect


def test_degenerate_transgression_pieces(gl2, P1, P2):
    c = connections(gl2, R3, 1, "degenerate", degree=1)[0]
    assert q_boundary(P1, gl2, c, c, c).is_zero()
    assert b_form(P1, gl2, c, c).is_zero()
    assert b_form(P2, gl2, c, c).is_zero()
    assert chsas_form(P1, gl2, TwoConnection.zero(gl2, R3)).is_zero()


def test_so3_population():
    cm = build_adjoint_module(LieAlgebra.so3())
    P = invpoly_from_trace(cm, 1)
    reg = VarRegistry.standard(5)
    pop = connections(cm, reg, 3, "so3")
    for c in pop:
        assert all(r.is_zero() for r in bianchi_residuals(cm, c))
        assert invariant_form_P(P, cm, c)[1].is_zero()
        assert d_x(chsas_form(P, cm, c)) == invariant_form_P(P, cm, c)[0]
    for c0, c1 in zip(pop, pop[1:]):
        assert all(r.is_zero() for r in chern_weil_check(P, cm, c0, c1))
    assert (d_x(transgression_Q(P, cm, pop[0], pop[1]) + transgression_Q(P, cm, pop[1], pop[0]))).is_zero()


def test_curvature_forms_matches_curvature(gl2):
    c = connections(gl2, R3, 1, "cf")[0]
    k = curvature(gl2, c)
    assert curvature_forms(gl2, c.A, c.B) == (k.F, k.G)
