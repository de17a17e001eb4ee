"""Formal paired expressions in the family generators and the homotopy derivation.

Expressions are linear combinations of paired monomials ``<x_1 ... x_n, y>``
whose slots hold family generators. The pairing is graded symmetric in the
g-slots, so monomials are kept with sorted g-slots and the Koszul sign folded
into the coefficient.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

from .algebra import DifferentialCrossedModule, InvariantPolynomial
from .forms import BiGradedForm, d_t, d_x, face_restrict, pair, simplex_integrate_form
from .gauge import (
    ConnectionFamily,
    TwoConnection,
    b_form,
    chsas_form,
    family_curvature,
    invariant_form_P,
    q_boundary,
    transgression_Q,
)

__all__ = [
    "Generator",
    "GENERATORS",
    "HomotopyExpr",
    "pi_expr",
    "lt_apply",
    "dt_apply",
    "lt_power",
    "lt_power_closed",
    "expr_eval",
    "FamilyGenerators",
    "echf_check",
    "graded_relations_check",
    "chern_weil_check",
    "triangle_check",
    "cartan_homotopy_check",
    "sign_diagnosis",
]


@dataclass(frozen=True)
class Generator:
    kind: str
    dx: int
    dt: int
    tag: str

    @property
    def degree(self) -> int:
        return self.dx + self.dt


GENERATORS: dict[str, Generator] = {
    g.kind: g
    for g in (
        Generator("At", 1, 0, "g"),
        Generator("Bt", 2, 0, "h"),
        Generator("Ft", 2, 0, "g"),
        Generator("Gt", 3, 0, "h"),
        Generator("DtAt", 1, 1, "g"),
        Generator("DtBt", 2, 1, "h"),
        Generator("DtFt", 2, 1, "g"),
        Generator("DtGt", 3, 1, "h"),
    )
}
_ORDER = {k: i for i, k in enumerate(GENERATORS)}

# l_t on generators (zero when absent)
_LT = {"Ft": "DtAt", "Gt": "DtBt"}
# formal d_t on generators
_DT = {"At": "DtAt", "Bt": "DtBt", "Ft": "DtFt", "Gt": "DtGt"}

Monomial = tuple  # (tuple of g-slot kinds, h-slot kind)


def _canonical(gslots: Sequence[str], h: str) -> tuple[int, Monomial | None]:
    """Sort g-slots; returns the Koszul sign, or 0 if the monomial vanishes."""
    slots = list(gslots)
    sign = 1
    for i in range(len(slots)):
        for j in range(len(slots) - 1 - i):
            a, b = slots[j], slots[j + 1]
            if _ORDER[a] > _ORDER[b]:
                if GENERATORS[a].degree * GENERATORS[b].degree % 2:
                    sign = -sign
                slots[j], slots[j + 1] = b, a
    for a, b in zip(slots, slots[1:]):
        if a == b and GENERATORS[a].degree % 2:
            return 0, None
    return sign, (tuple(slots), h)


class HomotopyExpr:
    """Formal sum ``sum c * <x_1 ... x_n, y>`` over generator kinds."""

    __slots__ = ("n", "terms")

    def __init__(self, n: int, terms: Mapping[Monomial, Fraction] | None = None):
        self.n = n
        self.terms: dict[Monomial, Fraction] = {}
        for (gs, h), c in (terms or {}).items():
            self._add(gs, h, Fraction(c))

    def _add(self, gslots, h, c):
        if len(gslots) != self.n:
            raise ValueError(f"expected {self.n} g-slots, got {len(gslots)}")
        for k in gslots:
            if GENERATORS[k].tag != "g":
                raise ValueError(f"{k} is not g-valued")
        if GENERATORS[h].tag != "h":
            raise ValueError(f"{h} is not h-valued")
        sign, mono = _canonical(gslots, h)
        if not sign or c == 0:
            return
        v = self.terms.get(mono, Fraction(0)) + sign * c
        if v:
            self.terms[mono] = v
        else:
            self.terms.pop(mono, None)

    @classmethod
    def monomial(cls, gslots: Sequence[str], h: str, coeff=1) -> "HomotopyExpr":
        e = cls(len(gslots))
        e._add(tuple(gslots), h, Fraction(coeff))
        return e

    def is_zero(self) -> bool:
        return not self.terms

    def bidegrees(self) -> set[tuple[int, int]]:
        out = set()
        for gs, h in self.terms:
            gens = [GENERATORS[k] for k in gs + (h,)]
            out.add((sum(g.dx for g in gens), sum(g.dt for g in gens)))
        return out

    def __add__(self, other: "HomotopyExpr") -> "HomotopyExpr":
        if self.n != other.n:
            raise ValueError("arity mismatch")
        out = HomotopyExpr(self.n, self.terms)
        for (gs, h), c in other.terms.items():
            out._add(gs, h, c)
        return out

    def __sub__(self, other):
        return self + other.scale(-1)

    def scale(self, c) -> "HomotopyExpr":
        c = Fraction(c)
        return HomotopyExpr(self.n, {m: v * c for m, v in self.terms.items()})

    def __eq__(self, other):
        return isinstance(other, HomotopyExpr) and self.n == other.n and self.terms == other.terms

    __hash__ = None

    def __repr__(self):
        if not self.terms:
            return "0"
        parts = []
        for (gs, h), c in sorted(self.terms.items()):
            parts.append(f"{c}*<{' '.join(gs)}, {h}>")
        return " + ".join(parts)


def pi_expr(n: int) -> HomotopyExpr:
    """``<F_t^n, G_t>``."""
    return HomotopyExpr.monomial(["Ft"] * n, "Gt")


def lt_apply(e: HomotopyExpr) -> HomotopyExpr:
    """The homotopy derivation; it has total degree zero, so no Leibniz signs."""
    out = HomotopyExpr(e.n)
    for (gs, h), c in e.terms.items():
        for i, k in enumerate(gs):
            if k in _LT:
                out._add(gs[:i] + (_LT[k],) + gs[i + 1 :], h, c)
        if h in _LT:
            out._add(gs, _LT[h], c)
    return out


def dt_apply(e: HomotopyExpr) -> HomotopyExpr:
    """Formal ``d_t``: odd derivation, sign from the degrees it passes."""
    out = HomotopyExpr(e.n)
    for (gs, h), c in e.terms.items():
        passed = 0
        for i, k in enumerate(gs):
            if k in _DT:
                out._add(gs[:i] + (_DT[k],) + gs[i + 1 :], h, c * (-1) ** passed)
            passed += GENERATORS[k].degree
        if h in _DT:
            out._add(gs, _DT[h], c * (-1) ** passed)
    return out


def lt_power(e: HomotopyExpr, p: int) -> HomotopyExpr:
    for _ in range(p):
        e = lt_apply(e)
    return e


def lt_power_closed(n: int, p: int) -> HomotopyExpr:
    """``l_t^p <F^n, G> / p!`` as a sum over p-subsets of the F and G slots."""
    out = HomotopyExpr(n)
    for subset in itertools.combinations(range(n + 1), p):
        gs = tuple("DtAt" if i in subset else "Ft" for i in range(n))
        h = "DtBt" if n in subset else "Gt"
        out._add(gs, h, Fraction(1))
    return out


# ----------------------------------------------------------------------------
# evaluation


class FamilyGenerators:
    """Concrete values of the generators on a connection family (cached)."""

    def __init__(self, fam: ConnectionFamily, cm: DifferentialCrossedModule):
        self.fam = fam
        self.cm = cm
        self._cache: dict[str, BiGradedForm] = {}

    def __getitem__(self, kind: str) -> BiGradedForm:
        if kind not in self._cache:
            self._cache[kind] = self._compute(kind)
        return self._cache[kind]

    def _compute(self, kind: str) -> BiGradedForm:
        if kind == "At":
            return self.fam.A_t
        if kind == "Bt":
            return self.fam.B_t
        if kind in ("Ft", "Gt"):
            F, G = family_curvature(self.fam, self.cm)
            self._cache["Ft"], self._cache["Gt"] = F, G
            return self._cache[kind]
        if kind.startswith("Dt"):
            return d_t(self[kind[2:]])
        raise KeyError(kind)


def expr_eval(e: HomotopyExpr, fam: ConnectionFamily, P: InvariantPolynomial, cm, gens: FamilyGenerators | None = None) -> BiGradedForm:
    if P.n != e.n:
        raise ValueError(f"expression arity {e.n} does not match pairing arity {P.n}")
    gens = gens or FamilyGenerators(fam, cm)
    total = BiGradedForm.zero(fam.reg)
    for (gs, h), c in sorted(e.terms.items()):
        term = pair(P, [gens[k] for k in gs], gens[h])
        total = total + term.scale(c)
    return total


# ----------------------------------------------------------------------------
# identity checks


def sign_diagnosis(named: Sequence[tuple[str, BiGradedForm]]) -> str:
    """Explain a non-zero sum ``sum_i term_i``: does flipping one term fix it?"""
    total = named[0][1]
    for _, f in named[1:]:
        total = total + f
    if total.is_zero():
        return ""
    for name, f in named:
        if not f.is_zero() and (total - f.scale(2)).is_zero():
            return f"residual vanishes if the sign of '{name}' is flipped"
    return "no single sign flip removes the residual"


def echf_check(p: int, fam: ConnectionFamily, P, cm, n: int | None = None, gens=None) -> BiGradedForm:
    """``sum_i (-1)^i int_{T_p} face_i(l^p Pi / p!) - (-1)^p d int_{T_{p+1}} l^{p+1} Pi / (p+1)!``."""
    n = P.n if n is None else n
    if len(fam.members) != p + 2:
        raise ValueError(f"descent at p={p} needs {p + 2} connections, got {len(fam.members)}")
    if not 0 <= p <= 2 * n + 3:
        raise ValueError(f"p must lie in 0..{2 * n + 3}")
    gens = gens or FamilyGenerators(fam, cm)
    pi = pi_expr(n)
    lp = lt_power(pi, p).scale(Fraction(1, math.factorial(p)))
    lp1 = lt_power(pi, p + 1).scale(Fraction(1, math.factorial(p + 1)))
    low = expr_eval(lp, fam, P, cm, gens)
    high = expr_eval(lp1, fam, P, cm, gens)
    base = fam.base_reg
    total = BiGradedForm.zero(base)
    for i in range(p + 2):
        face = simplex_integrate_form(face_restrict(low, i))
        total = total + (face if i % 2 == 0 else -face)
    bulk = d_x(simplex_integrate_form(high))
    return total - (bulk if p % 2 == 0 else -bulk)


def graded_relations_check(fam: ConnectionFamily, P, cm, n: int | None = None) -> dict[str, BiGradedForm]:
    """Operator relations of the homotopy algebra, each as an exact residual form."""
    n = P.n if n is None else n
    gens = FamilyGenerators(fam, cm)
    pi = pi_expr(n)
    lpi = lt_apply(pi)
    Pi = expr_eval(pi, fam, P, cm, gens)
    LPi = expr_eval(lpi, fam, P, cm, gens)
    L2Pi = expr_eval(lt_apply(lpi), fam, P, cm, gens)
    dtPi_formal = dt_apply(pi)
    out = {}
    out["d^2"] = d_x(d_x(LPi))
    out["d_t^2"] = d_t(d_t(Pi))
    out["d d_t + d_t d"] = d_x(d_t(LPi)) + d_t(d_x(LPi))
    out["d Pi"] = d_x(Pi)
    # closedness makes l_t d Pi vanish, leaving -d l_t Pi = d_t Pi
    out["(l_t d - d l_t - d_t) Pi"] = BiGradedForm.zero(fam.reg) - d_x(LPi) - d_t(Pi)
    out["(l_t d_t - d_t l_t) Pi"] = expr_eval(lt_apply(dtPi_formal), fam, P, cm, gens) - d_t(LPi)
    # second order: l_t d (l_t Pi) = l_t(-d_t Pi) by the first-order relation
    lhs = expr_eval(lt_apply(dtPi_formal), fam, P, cm, gens).scale(-1) - d_x(L2Pi)
    out["(l_t d - d l_t - d_t) l_t Pi"] = lhs - d_t(LPi)
    out["formal d_t = d_t"] = expr_eval(dtPi_formal, fam, P, cm, gens) - d_t(Pi)
    return out


def chern_weil_check(P, cm, c0: TwoConnection, c1: TwoConnection, n: int | None = None):
    """``int_{T_1} l_t Pi - Q(c0, c1)`` and ``dQ - (P(c1) - P(c0))``."""
    n = P.n if n is None else n
    fam = ConnectionFamily([c0, c1])
    homotopy = simplex_integrate_form(expr_eval(lt_apply(pi_expr(n)), fam, P, cm))
    Q = transgression_Q(P, cm, c0, c1, n)
    P1, _ = invariant_form_P(P, cm, c1, n)
    P0, _ = invariant_form_P(P, cm, c0, n)
    return homotopy - Q, d_x(Q) - (P1 - P0)


def triangle_check(P, cm, c0, c1, c2, n: int | None = None, with_diagnosis: bool = False):
    """``Q(c0,c2) - Q(c1,c2) - Q(c0,c1) + d Q^{2n+1}(c0,c1,c2)``."""
    n = P.n if n is None else n
    named = [
        ("Q(c0,c2)", transgression_Q(P, cm, c0, c2, n)),
        ("-Q(c1,c2)", -transgression_Q(P, cm, c1, c2, n)),
        ("-Q(c0,c1)", -transgression_Q(P, cm, c0, c1, n)),
        ("dQ3", d_x(q_boundary(P, cm, c0, c1, c2, n))),
    ]
    res = named[0][1]
    for _, f in named[1:]:
        res = res + f
    if with_diagnosis:
        return res, sign_diagnosis(named)
    return res


def cartan_homotopy_check(P, cm, c0, c1, n: int | None = None, with_diagnosis: bool = False):
    """``Q(c0,c1) - C(c1) + C(c0) + d B(c0,c1)``."""
    n = P.n if n is None else n
    named = [
        ("Q(c0,c1)", transgression_Q(P, cm, c0, c1, n)),
        ("-C(c1)", -chsas_form(P, cm, c1, n)),
        ("C(c0)", chsas_form(P, cm, c0, n)),
        ("dB", d_x(b_form(P, cm, c0, c1, n))),
    ]
    res = named[0][1]
    for _, f in named[1:]:
        res = res + f
    if with_diagnosis:
        return res, sign_diagnosis(named)
    return res
