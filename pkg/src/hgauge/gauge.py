"""2-connections, their curvatures, gauge transformations and transgression forms."""
from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

import numpy as np

from ._terms import map_comps, rational_table
from .algebra import DifferentialCrossedModule, InvariantPolynomial, LieAlgebra, matinv
from .exact import Poly, VarRegistry
from .forms import (
    BiGradedForm,
    alpha_push,
    d_t,
    d_x,
    integrate_coefficients,
    pair,
    wedge,
    wedge_action,
    wedge_bracket,
    wedge_matrix,
    wedge_square,
)

__all__ = [
    "TwoConnection",
    "TwoCurvature",
    "ConnectionFamily",
    "GaugePair",
    "GaugeError",
    "curvature",
    "curvature_forms",
    "bianchi_residuals",
    "is_fake_flat",
    "is_flat",
    "gauge_transform",
    "verify_gauge_covariance",
    "invariance_check_P",
    "invariant_form_P",
    "family_curvature",
    "transgression_Q",
    "chsas_form",
    "chsas_n1_closed_form",
    "q_boundary",
    "scaled_curvature",
    "b_form",
    "random_poly",
    "random_form",
    "random_connection",
    "random_gauge_pair",
    "random_invertible",
]

HALF = Fraction(1, 2)


class GaugeError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class TwoConnection:
    A: BiGradedForm
    B: BiGradedForm

    def __post_init__(self):
        if self.A.tag != "g" or self.B.tag != "h":
            raise GaugeError("a 2-connection pairs a g-valued 1-form with an h-valued 2-form")
        if self.A.reg != self.B.reg:
            raise GaugeError("A and B live on different registries")
        if self.A.reg.k:
            raise GaugeError("2-connections carry no simplex variables")
        if self.A.bidegrees() - {(1, 0)} or self.B.bidegrees() - {(2, 0)}:
            raise GaugeError("A must be a 1-form and B a 2-form")

    @property
    def reg(self) -> VarRegistry:
        return self.A.reg

    @classmethod
    def zero(cls, cm: DifferentialCrossedModule, reg: VarRegistry) -> "TwoConnection":
        return cls(BiGradedForm.zero(reg, "g", cm.g.dim), BiGradedForm.zero(reg, "h", cm.h.dim))


@dataclass(frozen=True, eq=False)
class TwoCurvature:
    F: BiGradedForm
    G: BiGradedForm


def curvature_forms(cm: DifferentialCrossedModule, A: BiGradedForm, B: BiGradedForm):
    """``F = dA + 1/2 A^[,]A - alpha(B)`` and ``G = dB + A^|>B`` on any registry."""
    F = d_x(A) + wedge_bracket(A, A, cm.g).scale(HALF) - alpha_push(cm, B)
    G = d_x(B) + wedge_action(cm, A, B)
    return F, G


def curvature(cm: DifferentialCrossedModule, c: TwoConnection) -> TwoCurvature:
    return TwoCurvature(*curvature_forms(cm, c.A, c.B))


def bianchi_residuals(cm, c: TwoConnection, curv: TwoCurvature | None = None):
    """``dF + A^[,]F + alpha(G)`` and ``dG + A^|>G - F^|>B``."""
    if curv is None:
        curv = curvature(cm, c)
    F, G = curv.F, curv.G
    r1 = d_x(F) + wedge_bracket(c.A, F, cm.g) + alpha_push(cm, G)
    r2 = d_x(G) + wedge_action(cm, c.A, G) - wedge_action(cm, F, c.B)
    return r1, r2


def is_fake_flat(cm, c: TwoConnection) -> bool:
    return curvature(cm, c).F.is_zero()


def is_flat(cm, c: TwoConnection) -> bool:
    curv = curvature(cm, c)
    return curv.F.is_zero() and curv.G.is_zero()


def invariant_form_P(P: InvariantPolynomial, cm, c: TwoConnection, n: int | None = None):
    """``<F^n, G>`` and its exterior derivative."""
    n = P.n if n is None else n
    _arity(P, n)
    curv = curvature(cm, c)
    form = pair(P, [curv.F] * n, curv.G)
    return form, d_x(form)


def _arity(P: InvariantPolynomial, n: int):
    if P.n != n:
        raise ValueError(f"pairing arity {P.n} does not match n={n}")


# ----------------------------------------------------------------------------
# matrix-valued forms (gauge transformations of adjoint modules)


@lru_cache(maxsize=None)
def _matmul_blocks(N: int):
    return {(r * N + s, s * N + u): [(r * N + u, 1)] for r in range(N) for s in range(N) for u in range(N)}


def _rep_map(L: LieAlgebra):
    key = id(L)
    cached = _REP_CACHE.get(key)
    if cached is not None and cached[0] is L:
        return cached[1]
    N = L.rep[0].shape[0]
    entries = []
    for a, m in enumerate(L.rep):
        for r in range(N):
            for s in range(N):
                if m[r, s] != 0:
                    entries.append((a, r * N + s, m[r, s]))
    nums, den = rational_table([e[2] for e in entries])
    to_mat: dict[int, list] = {}
    for (a, rs, _), v in zip(entries, nums):
        to_mat.setdefault(a, []).append((rs, v))
    co = L.coordinates
    inv_entries = [(co.rows[j], i, co.inv[i][j]) for i in range(L.dim) for j in range(L.dim) if co.inv[i][j] != 0]
    nums2, den2 = rational_table([e[2] for e in inv_entries])
    from_mat: dict[int, list] = {}
    for (rs, i, _), v in zip(inv_entries, nums2):
        from_mat.setdefault(rs, []).append((i, v))
    out = (N, (to_mat, den), (from_mat, den2))
    _REP_CACHE[key] = (L, out)
    return out


_REP_CACHE: dict = {}


def to_matrix_form(L: LieAlgebra, w: BiGradedForm) -> BiGradedForm:
    N, (mp, den), _ = _rep_map(L)
    return BiGradedForm(w.reg, "mat", N * N, map_comps(w.terms, mp, den))


def from_matrix_form(L: LieAlgebra, w: BiGradedForm, tag: str) -> BiGradedForm:
    N, _, (mp, den) = _rep_map(L)
    out = BiGradedForm(w.reg, tag, L.dim, map_comps(w.terms, mp, den))
    if not to_matrix_form(L, out).terms.equals(w.terms):
        raise GaugeError("matrix-valued form leaves the span of the representation")
    return out


def _matmul(a: BiGradedForm, b: BiGradedForm, N: int) -> BiGradedForm:
    return wedge(a, b, _matmul_blocks(N), 1, "mat", N * N)


def poly_matrix_form(reg: VarRegistry, entries: Sequence[Sequence]) -> BiGradedForm:
    N = len(entries)
    vec = [entries[r][s] for r in range(N) for s in range(N)]
    return BiGradedForm.from_components(reg, "mat", N * N, {((), ()): vec})


@dataclass(frozen=True, eq=False)
class GaugePair:
    """Group element ``g`` (polynomial matrix with exact inverse) and h-valued 1-form ``phi``."""

    g: BiGradedForm
    ginv: BiGradedForm
    phi: BiGradedForm

    def __post_init__(self):
        N = int(round(self.g.dim ** 0.5))
        ident = poly_matrix_form(self.g.reg, [[int(r == s) for s in range(N)] for r in range(N)])
        if not _matmul(self.g, self.ginv, N).equals(ident):
            raise GaugeError("g * g^-1 is not the identity")
        if self.phi.tag != "h" or self.phi.bidegrees() - {(1, 0)}:
            raise GaugeError("phi must be an h-valued 1-form")

    @property
    def N(self) -> int:
        return int(round(self.g.dim ** 0.5))

    @classmethod
    def constant(cls, reg, mat, phi) -> "GaugePair":
        mat = np.array(mat, dtype=object)
        inv = matinv(mat)
        return cls(poly_matrix_form(reg, mat.tolist()), poly_matrix_form(reg, inv.tolist()), phi)

    @classmethod
    def unipotent(cls, reg, upper: Sequence[Sequence], phi) -> "GaugePair":
        """``g = I + U`` with ``U`` strictly upper triangular (polynomial entries)."""
        N = len(upper)
        for r in range(N):
            for s in range(r + 1):
                u = upper[r][s]
                if (isinstance(u, Poly) and not u.is_zero()) or (not isinstance(u, Poly) and u not in (0, "0")):
                    raise GaugeError("U must be strictly upper triangular")
        U = poly_matrix_form(reg, upper)
        ident = poly_matrix_form(reg, [[int(r == s) for s in range(N)] for r in range(N)])
        inv = ident
        power = ident
        for k in range(1, N):
            power = _matmul(power, U, N).scale(-1)
            inv = inv + power
        return cls(ident + U, inv, phi)

    @classmethod
    def identity(cls, cm, reg) -> "GaugePair":
        N = cm.g.rep[0].shape[0]
        return cls.constant(reg, [[int(r == s) for s in range(N)] for r in range(N)], BiGradedForm.zero(reg, "h", cm.h.dim))


def _need_adjoint(cm: DifferentialCrossedModule):
    if not cm.adjoint or cm.g.rep is None:
        raise GaugeError("finite gauge transformations are implemented for adjoint modules with a representation")


def _conj(cm, w: BiGradedForm, gp: GaugePair, tag: str) -> BiGradedForm:
    """``g^-1 w g`` computed in the representation."""
    L = cm.g
    N = gp.N
    m = to_matrix_form(L, w)
    return from_matrix_form(L, _matmul(_matmul(gp.ginv, m, N), gp.g, N), tag)


def gauge_transform(cm, c: TwoConnection, gp: GaugePair) -> TwoConnection:
    _need_adjoint(cm)
    N = gp.N
    L = cm.g
    mc = from_matrix_form(L, _matmul(gp.ginv, d_x(gp.g), N), "g")
    A2 = _conj(cm, c.A, gp, "g") + mc + alpha_push(cm, gp.phi)
    phiphi = wedge_matrix(gp.phi, gp.phi, cm.h)
    B2 = _conj(cm, c.B, gp, "h") + d_x(gp.phi) + wedge_action(cm, A2, gp.phi) - phiphi
    return TwoConnection(A2, B2)


def verify_gauge_covariance(cm, c: TwoConnection, gp: GaugePair):
    c2 = gauge_transform(cm, c, gp)
    k1, k2 = curvature(cm, c), curvature(cm, c2)
    rF = k2.F - _conj(cm, k1.F, gp, "g")
    rG = k2.G - (_conj(cm, k1.G, gp, "h") + wedge_action(cm, k2.F, gp.phi))
    return rF, rG


def invariance_check_P(P, cm, c: TwoConnection, gp: GaugePair, n: int | None = None) -> BiGradedForm:
    n = P.n if n is None else n
    before, _ = invariant_form_P(P, cm, c, n)
    k = curvature(cm, gauge_transform(cm, c, gp))
    return pair(P, [k.F] * n, k.G) - before


# ----------------------------------------------------------------------------
# families over a parameter simplex


class ConnectionFamily:
    """Affine family ``A_t = A_0 + sum_j t_j (A_j - A_0)`` over a simplex."""

    def __init__(self, members: Sequence[TwoConnection], t_names: Sequence[str] | None = None):
        if not members:
            raise ValueError("a family needs at least one member")
        base = members[0].reg
        if any(c.reg != base for c in members):
            raise ValueError("family members live on different registries")
        self.members = tuple(members)
        k = len(members) - 1
        names = tuple(t_names) if t_names is not None else tuple(f"t{j + 1}" for j in range(k))
        if len(names) != k:
            raise ValueError("one simplex variable per non-base member")
        self.base_reg = base
        self.reg = base.with_t(names)
        self.A_t, self.B_t = self._interpolate()

    @property
    def p(self) -> int:
        """Simplex dimension minus one (members = p + 2)."""
        return len(self.members) - 2

    def _interpolate(self):
        reg = self.reg
        c0 = self.members[0]
        A = c0.A.lift(reg)
        B = c0.B.lift(reg)
        for j, c in enumerate(self.members[1:]):
            tj = Poly.var(reg, reg.t_vars[j])
            A = A + (c.A - c0.A).lift(reg).poly_mul(tj)
            B = B + (c.B - c0.B).lift(reg).poly_mul(tj)
        return A, B

    def dtA(self) -> BiGradedForm:
        return d_t(self.A_t)

    def dtB(self) -> BiGradedForm:
        return d_t(self.B_t)


def family_curvature(fam: ConnectionFamily, cm):
    return curvature_forms(cm, fam.A_t, fam.B_t)


def _segment(c0: TwoConnection, c1: TwoConnection, name: str = "t1") -> ConnectionFamily:
    return ConnectionFamily([c0, c1], [name])


def transgression_Q(P, cm, c0: TwoConnection, c1: TwoConnection, n: int | None = None) -> BiGradedForm:
    """``int_0^1 dt ( n <theta ^ F_t^(n-1), G_t> + <F_t^n, Phi> )``."""
    n = P.n if n is None else n
    _arity(P, n)
    fam = _segment(c0, c1)
    reg = fam.reg
    theta = (c1.A - c0.A).lift(reg)
    Phi = (c1.B - c0.B).lift(reg)
    F, G = family_curvature(fam, cm)
    integrand = pair(P, [theta] + [F] * (n - 1), G).scale(n) + pair(P, [F] * n, Phi)
    return integrate_coefficients(integrand, ["t1"])


def chsas_form(P, cm, c: TwoConnection, n: int | None = None) -> BiGradedForm:
    """Transgression from the zero connection, from ``F_t = t dA + t^2 A^A - t alpha(B)``."""
    n = P.n if n is None else n
    _arity(P, n)
    reg = c.reg.with_t(["t1"])
    A, B = c.A.lift(reg), c.B.lift(reg)
    t = Poly.var(reg, "t1")
    t2 = t * t
    F = (d_x(A) - alpha_push(cm, B)).poly_mul(t) + wedge_square(A, cm.g).poly_mul(t2)
    G = d_x(B).poly_mul(t) + wedge_action(cm, A, B).poly_mul(t2)
    integrand = pair(P, [A] + [F] * (n - 1), G).scale(n) + pair(P, [F] * n, B)
    return integrate_coefficients(integrand, ["t1"])


def chsas_n1_closed_form(P, cm, c: TwoConnection) -> BiGradedForm:
    """``<A, 1/2 dB + 1/3 A^|>B> + <1/2 dA + 1/3 A^A - 1/2 alpha(B), B>``."""
    _arity(P, 1)
    A, B = c.A, c.B
    third = Fraction(1, 3)
    left = d_x(B).scale(HALF) + wedge_action(cm, A, B).scale(third)
    right = d_x(A).scale(HALF) + wedge_square(A, cm.g).scale(third) - alpha_push(cm, B).scale(HALF)
    return pair(P, [A], left) + pair(P, [right], B)


def q_boundary(P, cm, c0, c1, c2, n: int | None = None) -> BiGradedForm:
    """Double simplex integral interpolating three connections."""
    n = P.n if n is None else n
    _arity(P, n)
    fam = ConnectionFamily([c0, c1, c2])
    reg = fam.reg
    th1 = (c1.A - c0.A).lift(reg)
    th2 = (c2.A - c0.A).lift(reg)
    Ph1 = (c1.B - c0.B).lift(reg)
    Ph2 = (c2.B - c0.B).lift(reg)
    F, G = family_curvature(fam, cm)
    integrand = pair(P, [th1] + [F] * (n - 1), Ph2).scale(n) - pair(P, [th2] + [F] * (n - 1), Ph1).scale(n)
    if n >= 2:
        integrand = integrand + pair(P, [th1, th2] + [F] * (n - 2), G).scale(n * (n - 1))
    return integrate_coefficients(integrand, list(reg.t_vars))


def scaled_curvature(cm, fam: ConnectionFamily, s_name: str = "s"):
    """``F_st = s F_t + (s^2 - s) A_t^A_t`` and ``G_st = s G_t + (s^2 - s) A_t^|>B_t``."""
    reg = fam.reg.with_t([s_name])
    A, B = fam.A_t.lift(reg), fam.B_t.lift(reg)
    F, G = curvature_forms(cm, A, B)
    s = Poly.var(reg, s_name)
    q = s * s - s
    Fst = F.poly_mul(s) + wedge_square(A, cm.g).poly_mul(q)
    Gst = G.poly_mul(s) + wedge_action(cm, A, B).poly_mul(q)
    return Fst, Gst, A, B


def b_form(P, cm, c0: TwoConnection, c1: TwoConnection, n: int | None = None) -> BiGradedForm:
    """``-int dt ds n s { (n-1)<A_t^theta^F_st^(n-2), G_st> + <A_t^F_st^(n-1), Phi> - <theta^F_st^(n-1), B_t> }``."""
    n = P.n if n is None else n
    _arity(P, n)
    fam = _segment(c0, c1)
    Fst, Gst, A, B = scaled_curvature(cm, fam)
    reg = A.reg
    theta = (c1.A - c0.A).lift(reg)
    Phi = (c1.B - c0.B).lift(reg)
    body = pair(P, [A] + [Fst] * (n - 1), Phi) - pair(P, [theta] + [Fst] * (n - 1), B)
    if n >= 2:
        body = body + pair(P, [A, theta] + [Fst] * (n - 2), Gst).scale(n - 1)
    body = body.poly_mul(Poly.var(reg, "s")).scale(-n)
    out = integrate_coefficients(body, ["s"])
    return integrate_coefficients(out, ["t1"])


# ----------------------------------------------------------------------------
# seeded random data

_COEFFS = [Fraction(a, b) for a in (-2, -1, 1, 2) for b in (1, 2)]


def random_poly(reg: VarRegistry, degree: int, rng: random.Random, nterms: int = 2, names=None) -> Poly:
    names = list(reg.x_vars if names is None else names)
    coeffs: dict[tuple, Fraction] = {}
    for _ in range(nterms):
        exps = [0] * reg.nvars
        d = rng.randint(0, degree)
        for _ in range(d):
            exps[reg.index(rng.choice(names))] += 1
        key = tuple(exps)
        coeffs[key] = coeffs.get(key, Fraction(0)) + rng.choice(_COEFFS)
    return Poly.from_dict(reg, coeffs)


def random_form(reg, tag, dim, degree_x: int, degree: int, rng, nterms: int = 2, density: float = 1.0):
    """Random form of dx-degree ``degree_x`` with polynomial coefficients."""
    import itertools

    comps = {}
    for I in itertools.combinations(range(reg.m), degree_x):
        vec = []
        for _ in range(dim):
            if rng.random() < density:
                vec.append(random_poly(reg, degree, rng, nterms))
            else:
                vec.append(0)
        comps[(I, ())] = vec
    return BiGradedForm.from_components(reg, tag, dim, comps)


def random_connection(cm, reg: VarRegistry, degree: int, rng: random.Random, nterms: int = 2, density: float = 1.0):
    A = random_form(reg, "g", cm.g.dim, 1, degree, rng, nterms, density)
    B = random_form(reg, "h", cm.h.dim, 2, degree, rng, nterms, density)
    return TwoConnection(A, B)


def random_invertible(N: int, rng: random.Random):
    while True:
        m = np.array([[Fraction(rng.randint(-2, 2)) for _ in range(N)] for _ in range(N)], dtype=object)
        try:
            matinv(m)
        except ZeroDivisionError:
            continue
        return m


def random_gauge_pair(cm, reg, rng: random.Random, kind: str = "unipotent", degree: int = 1, with_phi: bool = True):
    _need_adjoint(cm)
    N = cm.g.rep[0].shape[0]
    phi = random_form(reg, "h", cm.h.dim, 1, degree, rng) if with_phi else BiGradedForm.zero(reg, "h", cm.h.dim)
    if kind == "constant":
        return GaugePair.constant(reg, random_invertible(N, rng), phi)
    if kind == "unipotent":
        upper = [[random_poly(reg, degree, rng) if s > r else 0 for s in range(N)] for r in range(N)]
        return GaugePair.unipotent(reg, upper, phi)
    raise ValueError(f"unknown gauge pair kind {kind!r}")
