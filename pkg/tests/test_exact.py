import itertools
import math
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from hgauge.exact import (
    Poly,
    RegistryMismatch,
    VarRegistry,
    dirichlet_weight,
    poly_add,
    poly_diff,
    poly_mul,
    simplex_integrate,
)

REG = VarRegistry.standard(2, 3)
NAMES = REG.names


def P(text, reg=REG):
    return Poly.parse(reg, text)


# -- oracle: iterated one-dimensional integration over the simplex ----------
# polynomials as {exponent tuple: Fraction}; the upper limit of t_k is
# 1 - t_1 - ... - t_{k-1}, expanded by the multinomial theorem.


def _o_mul(a, b):
    out = {}
    for ea, ca in a.items():
        for eb, cb in b.items():
            e = tuple(x + y for x, y in zip(ea, eb))
            out[e] = out.get(e, 0) + ca * cb
    return {e: c for e, c in out.items() if c}


def _o_pow(a, k, n):
    out = {(0,) * n: Fraction(1)}
    for _ in range(k):
        out = _o_mul(out, a)
    return out


def oracle_simplex(poly: dict, k: int) -> Fraction:
    """Integrate a polynomial in t_1..t_k (exponent tuples of length k)."""
    cur = dict(poly)
    for var in reversed(range(k)):
        upper = {(0,) * k: Fraction(1)}
        for j in range(var):
            e = [0] * k
            e[j] = 1
            upper[tuple(e)] = Fraction(-1)
        nxt = {}
        for e, c in cur.items():
            a = e[var]
            rest = list(e)
            rest[var] = 0
            piece = _o_mul({tuple(rest): c / (a + 1)}, _o_pow(upper, a + 1, k))
            for e2, c2 in piece.items():
                nxt[e2] = nxt.get(e2, 0) + c2
        cur = {e: c for e, c in nxt.items() if c}
    return sum(cur.values(), Fraction(0))


def test_parse_roundtrip_and_printing():
    p = P("x1^2*t1 + 3/2*x2 - t2")
    assert p.nterms == 3
    assert p.degree() == 3
    assert P(repr(p)) == p


def test_add_mul_diff_examples():
    p, q = P("x1 + 1"), P("x1 - 1")
    assert poly_mul(p, q) == P("x1^2 - 1")
    assert poly_add(p, q) == P("2*x1")
    assert poly_diff(P("x1^3*x2 + 5*x2"), "x1") == P("3*x1^2*x2")
    assert poly_diff(P("1/3*t1^3"), "t1") == P("t1^2")
    assert (p - p).is_zero()


def test_evaluate_exact():
    p = P("1/2*x1*x2 - t3^2")
    assert p.evaluate({"x1": 3, "x2": Fraction(1, 3), "t1": 0, "t2": 0, "t3": 2}) == Fraction(-7, 2)


def test_simplex_examples():
    assert simplex_integrate(P("t1*t2"), ["t1", "t2"]) == Poly.const(REG.without(["t1", "t2"]), Fraction(1, 24))
    assert simplex_integrate(P("1"), ["t1", "t2", "t3"]).to_dict() == {(0, 0): Fraction(1, 6)}
    out = simplex_integrate(P("x1*t1^2"), ["t1"])
    assert out == Poly.parse(out.reg, "1/3*x1")
    assert out.reg.names == ("x1", "x2", "t2", "t3")


def test_dirichlet_matches_factorial_formula():
    for exps in itertools.product(range(4), repeat=3):
        expect = Fraction(math.prod(math.factorial(e) for e in exps), math.factorial(sum(exps) + 3))
        assert dirichlet_weight(exps) == expect


exps_3 = st.tuples(*[st.integers(0, 6)] * 3).filter(lambda e: sum(e) <= 6)
coef = st.fractions(min_value=-5, max_value=5, max_denominator=7)


@given(st.dictionaries(exps_3, coef, min_size=1, max_size=6))
def test_simplex_integral_matches_iterated_oracle(terms):
    p = Poly.from_dict(REG, {(0, 0) + e: c for e, c in terms.items()})
    got = simplex_integrate(p, ["t1", "t2", "t3"])
    expect = oracle_simplex({e: Fraction(c) for e, c in terms.items()}, 3)
    assert got.to_dict().get((0, 0), Fraction(0)) == expect
    assert set(got.to_dict()) <= {(0, 0)}


def polys(reg=REG, max_deg=3):
    mono = st.tuples(*[st.integers(0, max_deg)] * reg.nvars)
    return st.dictionaries(mono, coef, max_size=5).map(lambda d: Poly.from_dict(reg, d))


@given(polys(), polys(), polys())
def test_ring_axioms(a, b, c):
    assert a + b == b + a
    assert a * b == b * a
    assert (a + b) + c == a + (b + c)
    assert (a * b) * c == a * (b * c)
    assert a * (b + c) == a * b + a * c
    assert (a - a).is_zero()
    assert a * Poly.const(REG, 1) == a


@given(polys(), st.sampled_from(NAMES), st.sampled_from(NAMES))
def test_partials_commute(p, u, v):
    assert poly_diff(poly_diff(p, u), v) == poly_diff(poly_diff(p, v), u)


@given(polys(), polys(), st.sampled_from(NAMES))
def test_product_rule(a, b, v):
    assert poly_diff(a * b, v) == poly_diff(a, v) * b + a * poly_diff(b, v)


@given(polys(), st.dictionaries(st.sampled_from(NAMES), coef, min_size=len(NAMES), max_size=len(NAMES)))
def test_evaluation_is_a_homomorphism(p, at):
    q = p * p + p
    v = p.evaluate(at)
    assert q.evaluate(at) == v * v + v


def test_registry_mismatch_and_unknown_names():
    other = VarRegistry.standard(3)
    with pytest.raises(RegistryMismatch):
        poly_add(P("x1"), Poly.parse(other, "x1"))
    with pytest.raises(RegistryMismatch):
        poly_mul(P("x1"), Poly.parse(other, "x1"))
    with pytest.raises(ValueError, match="unknown variable"):
        Poly.parse(REG, "y1")
    with pytest.raises(KeyError):
        poly_diff(P("x1"), "y")
    with pytest.raises(ValueError):
        VarRegistry(("x1", "x1"))


def test_large_coefficients_stay_exact():
    p = Poly.parse(REG, "123456789*x1 + 987654321*x2")
    q = p ** 4
    assert q.evaluate({n: 1 for n in NAMES}) == (123456789 + 987654321) ** 4
