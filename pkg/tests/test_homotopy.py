import math
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import connections
from hgauge.exact import VarRegistry
from hgauge.forms import BiGradedForm, d_x
from hgauge.gauge import ConnectionFamily, TwoConnection
from hgauge.homotopy import (
    FamilyGenerators,
    HomotopyExpr,
    cartan_homotopy_check,
    chern_weil_check,
    dt_apply,
    echf_check,
    expr_eval,
    graded_relations_check,
    lt_apply,
    lt_power,
    lt_power_closed,
    pi_expr,
    sign_diagnosis,
    triangle_check,
)

M = HomotopyExpr.monomial


def test_lt_on_pi():
    assert lt_apply(pi_expr(1)) == M(["DtAt"], "Gt") + M(["Ft"], "DtBt")
    assert lt_apply(pi_expr(2)) == M(["DtAt", "Ft"], "Gt").scale(2) + M(["Ft", "Ft"], "DtBt")


def test_lt_squared_on_pi():
    assert lt_power(pi_expr(1), 2) == M(["DtAt"], "DtBt").scale(2)
    assert lt_power(pi_expr(1), 3).is_zero()


@pytest.mark.parametrize("n", [1, 2, 3])
@pytest.mark.parametrize("p", [0, 1, 2, 3])
def test_lt_power_closed_form(n, p):
    got = lt_power(pi_expr(n), p).scale(Fraction(1, math.factorial(p)))
    assert got == lt_power_closed(n, p)


def test_koszul_sorting():
    # At has odd degree: a repeated odd slot vanishes, a swap costs a sign
    assert M(["At", "At"], "Gt").is_zero()
    assert M(["DtAt", "At"], "Gt") == M(["At", "DtAt"], "Gt")
    assert M(["Ft", "At"], "Bt") == M(["At", "Ft"], "Bt")
    assert M(["DtFt", "At"], "Bt") == M(["At", "DtFt"], "Bt").scale(-1)


def test_formal_dt_signs():
    e = dt_apply(pi_expr(1))
    assert e == M(["DtFt"], "Gt") + M(["Ft"], "DtGt")
    e = dt_apply(M(["At"], "Bt"))
    assert e == M(["DtAt"], "Bt") - M(["At"], "DtBt")


def test_bidegrees():
    assert lt_apply(pi_expr(2)).bidegrees() == {(6, 1)}


def test_dtat_example(gl2):
    reg = VarRegistry.standard(4)
    c0, c1 = connections(gl2, reg, 2, "dtat", degree=1)
    fam = ConnectionFamily([c0, c1])
    gens = FamilyGenerators(fam, gl2)
    theta = (c1.A - c0.A).lift(fam.reg)
    comps = {(I, (0,)): v for (I, _), v in theta.components().items()}
    assert gens["DtAt"] == BiGradedForm.from_components(fam.reg, "g", 4, comps)


@given(st.integers(0, 1000))
def test_expr_eval_is_linear(gl2, P1, seed):
    reg = VarRegistry.standard(4)
    fam = ConnectionFamily(connections(gl2, reg, 2, seed, degree=1))
    gens = FamilyGenerators(fam, gl2)
    a, b = lt_apply(pi_expr(1)), M(["Ft"], "Gt").scale(3)
    ev = lambda e: expr_eval(e, fam, P1, gl2, gens)  # noqa: E731
    assert ev(a + b) == ev(a) + ev(b)
    assert ev(a.scale(-2)) == ev(a).scale(-2)


def test_expr_eval_arity_mismatch(gl2, P1, reg5):
    fam = ConnectionFamily(connections(gl2, reg5, 2, "arity"))
    with pytest.raises(ValueError):
        expr_eval(pi_expr(2), fam, P1, gl2)


def test_chern_weil(gl2, P1, reg5):
    for c0, c1 in zip(*[iter(connections(gl2, reg5, 6, "cw"))] * 2):
        hom, closed = chern_weil_check(P1, gl2, c0, c1)
        assert hom.is_zero() and closed.is_zero()


@pytest.mark.parametrize("p", [0, 1, 2])
def test_descent_n1(gl2, P1, p):
    reg = VarRegistry.standard(5)
    fam = ConnectionFamily(connections(gl2, reg, p + 2, f"echf{p}"))
    assert echf_check(p, fam, P1, gl2).is_zero()


def test_descent_n2_p0(gl2, P2):
    reg = VarRegistry.standard(7)
    fam = ConnectionFamily(connections(gl2, reg, 2, "echf-n2", degree=1))
    assert echf_check(0, fam, P2, gl2).is_zero()


def test_descent_member_count(gl2, P1, reg5):
    fam = ConnectionFamily(connections(gl2, reg5, 2, "count"))
    with pytest.raises(ValueError):
        echf_check(1, fam, P1, gl2)


def test_graded_relations(gl2, P1):
    reg = VarRegistry.standard(5)
    fam = ConnectionFamily(connections(gl2, reg, 2, "graded"))
    out = graded_relations_check(fam, P1, gl2)
    assert len(out) == 8
    assert {k: v.nterms() for k, v in out.items() if not v.is_zero()} == {}


def test_triangle_and_corollary(gl2, P1, reg5):
    c0, c1, c2 = connections(gl2, reg5, 3, "tri")
    res, note = triangle_check(P1, gl2, c0, c1, c2, with_diagnosis=True)
    assert res.is_zero() and note == ""
    zero = TwoConnection.zero(gl2, reg5)
    assert triangle_check(P1, gl2, c0, c1, zero).is_zero()


def test_cartan(gl2, P1, reg5):
    c0, c1 = connections(gl2, reg5, 2, "cartan")
    res, note = cartan_homotopy_check(P1, gl2, c0, c1, with_diagnosis=True)
    assert res.is_zero() and note == ""


def test_cartan_n2(gl2, P2):
    reg = VarRegistry.standard(7)
    c0, c1 = connections(gl2, reg, 2, "cartan-n2", degree=1, nterms=1)
    assert cartan_homotopy_check(P2, gl2, c0, c1).is_zero()


def test_sign_diagnosis_names_a_flipped_term(gl2, P1, reg5):
    a = BiGradedForm.basis_form(reg5, "scalar", 1, 0, I=(0,))
    b = BiGradedForm.basis_form(reg5, "scalar", 1, 0, I=(1,))
    assert sign_diagnosis([("a", a), ("b", b), ("-a", -a), ("-b", -b)]) == ""
    msg = sign_diagnosis([("a", a), ("b", b), ("a'", a), ("-b", -b)])
    assert "a" in msg and "flipped" in msg
    assert "no single" in sign_diagnosis([("a", a), ("b", b)])


def test_wrong_sign_is_caught(gl2, P1, reg5):
    """Flipping the boundary term in the Cartan decomposition leaves a residual."""
    from hgauge.gauge import b_form

    c0, c1 = connections(gl2, reg5, 2, "flip")
    res = cartan_homotopy_check(P1, gl2, c0, c1)
    dB = d_x(b_form(P1, gl2, c0, c1))
    assert res.is_zero() and not dB.is_zero()
    assert not (res - dB.scale(2)).is_zero()
