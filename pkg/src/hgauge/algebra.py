"""Lie algebras, differential crossed modules and invariant pairings.

All structure data are exact rationals held in numpy object arrays so the
axiom checks can be written as plain ``einsum`` contractions and compared for
exact equality.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from pathlib import Path
from typing import Sequence

import numpy as np

from ._terms import rational_table

__all__ = [
    "LieAlgebra",
    "DifferentialCrossedModule",
    "InvariantPolynomial",
    "AxiomResult",
    "ValidationReport",
    "AlgebraFormatError",
    "bracket",
    "act",
    "alpha_apply",
    "validate_dcm",
    "build_poincare2",
    "build_adjoint_module",
    "invpoly_from_trace",
    "invpoly_validate",
    "adjoint_matrix",
    "conjugation_invariance",
    "matinv",
    "parse_crossed_module",
    "load_crossed_module",
    "parse_pairing",
]


class AlgebraFormatError(ValueError):
    pass


def _frac_array(values, shape=None) -> np.ndarray:
    arr = np.array(values, dtype=object)
    if shape is not None:
        arr = arr.reshape(shape)
    flat = arr.reshape(-1)
    for i, v in enumerate(flat):
        flat[i] = Fraction(v)
    return arr


def _zeros(*shape) -> np.ndarray:
    return _frac_array(np.zeros(shape, dtype=object))


def _blocks(tensor: np.ndarray):
    """Sparse integer form ``{(i, j): [(k, num)]}, den`` of a rank-3 tensor."""
    idx = [tuple(int(v) for v in ix) for ix in np.argwhere(tensor != 0)]
    nums, den = rational_table([tensor[ix] for ix in idx])
    out: dict[tuple[int, int], list[tuple[int, int]]] = {}
    for (i, j, k), v in zip(idx, nums):
        out.setdefault((i, j), []).append((k, v))
    return out, den


class _Coordinates:
    """Exact coordinates of matrices in the span of a fixed matrix basis."""

    def __init__(self, mats: Sequence[np.ndarray]):
        self.n = mats[0].shape[0]
        cols = [m.reshape(-1) for m in mats]
        self.A = np.array([[c[r] for c in cols] for r in range(self.n * self.n)], dtype=object)
        rows = []
        work: list[list[Fraction]] = []
        for r in range(self.A.shape[0]):
            cand = [Fraction(v) for v in self.A[r]]
            trial = work + [cand]
            if _rank(trial) > len(work):
                work = trial
                rows.append(r)
            if len(rows) == len(mats):
                break
        if len(rows) != len(mats):
            raise ValueError("representation matrices are linearly dependent")
        self.rows = rows
        self.inv = _invert([[Fraction(v) for v in self.A[r]] for r in rows])

    def solve(self, mat: np.ndarray):
        b = mat.reshape(-1)
        c = [sum((self.inv[i][j] * b[r] for j, r in enumerate(self.rows)), Fraction(0)) for i in range(len(self.rows))]
        check = self.A.dot(np.array(c, dtype=object)) if c else np.zeros(len(b), dtype=object)
        if any(Fraction(x) != Fraction(y) for x, y in zip(check, b)):
            return None
        return c


def _rank(rows: list[list[Fraction]]) -> int:
    m = [list(r) for r in rows]
    rank = 0
    ncol = len(m[0]) if m else 0
    for col in range(ncol):
        piv = next((i for i in range(rank, len(m)) if m[i][col] != 0), None)
        if piv is None:
            continue
        m[rank], m[piv] = m[piv], m[rank]
        for i in range(len(m)):
            if i != rank and m[i][col] != 0:
                f = m[i][col] / m[rank][col]
                m[i] = [a - f * b for a, b in zip(m[i], m[rank])]
        rank += 1
    return rank


def _invert(rows: list[list[Fraction]]) -> list[list[Fraction]]:
    n = len(rows)
    m = [list(r) + [Fraction(int(i == j)) for j in range(n)] for i, r in enumerate(rows)]
    for col in range(n):
        piv = next((i for i in range(col, n) if m[i][col] != 0), None)
        if piv is None:
            raise ZeroDivisionError("singular matrix")
        m[col], m[piv] = m[piv], m[col]
        p = m[col][col]
        m[col] = [v / p for v in m[col]]
        for i in range(n):
            if i != col and m[i][col] != 0:
                f = m[i][col]
                m[i] = [a - f * b for a, b in zip(m[i], m[col])]
    return [r[n:] for r in m]


def matinv(mat: np.ndarray) -> np.ndarray:
    """Exact inverse of a square rational matrix."""
    rows = [[Fraction(v) for v in r] for r in mat]
    return _frac_array(_invert(rows))


@dataclass(eq=False)
class LieAlgebra:
    """Finite-dimensional Lie algebra given by structure constants.

    ``f[a, b, c]`` is the ``c`` component of ``[X_a, X_b]``. ``rep`` holds an
    optional faithful matrix representation, one square matrix per basis
    element.
    """

    names: tuple[str, ...]
    f: np.ndarray
    rep: tuple[np.ndarray, ...] | None = None
    label: str = ""

    def __post_init__(self):
        self.names = tuple(self.names)
        d = len(self.names)
        if d < 1:
            raise ValueError("a Lie algebra needs at least one generator")
        self.f = _frac_array(self.f, (d, d, d))
        if self.rep is not None:
            self.rep = tuple(_frac_array(m) for m in self.rep)
            if len(self.rep) != d:
                raise ValueError("one representation matrix per generator is required")

    @property
    def dim(self) -> int:
        return len(self.names)

    @classmethod
    def from_matrices(cls, names, mats, label="") -> "LieAlgebra":
        mats = [_frac_array(m) for m in mats]
        coords = _Coordinates(mats)
        d = len(mats)
        f = _zeros(d, d, d)
        for a, b in itertools.product(range(d), repeat=2):
            c = coords.solve(mats[a].dot(mats[b]) - mats[b].dot(mats[a]))
            if c is None:
                raise ValueError(f"commutator [{names[a]}, {names[b]}] leaves the span")
            f[a, b, :] = c
        return cls(tuple(names), f, tuple(mats), label)

    @classmethod
    def gl(cls, n: int) -> "LieAlgebra":
        names, mats = [], []
        for i, j in itertools.product(range(n), repeat=2):
            m = _zeros(n, n)
            m[i, j] = Fraction(1)
            names.append(f"E{i + 1}{j + 1}")
            mats.append(m)
        return cls.from_matrices(names, mats, label=f"gl({n})")

    @classmethod
    def so3(cls) -> "LieAlgebra":
        mats = []
        for i in range(3):
            m = _zeros(3, 3)
            for j, k in itertools.product(range(3), repeat=2):
                m[j, k] = Fraction(-_levi(i, j, k))
            mats.append(m)
        return cls.from_matrices(("e1", "e2", "e3"), mats, label="so(3)")

    @classmethod
    def abelian(cls, d: int) -> "LieAlgebra":
        mats = []
        for i in range(d):
            m = _zeros(d, d)
            m[i, i] = Fraction(1)
            mats.append(m)
        return cls(tuple(f"D{i + 1}" for i in range(d)), _zeros(d, d, d), tuple(mats), f"u(1)^{d}")

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise KeyError(f"unknown generator {name!r}") from None

    def basis(self, name_or_index) -> list[Fraction]:
        i = name_or_index if isinstance(name_or_index, int) else self.index(name_or_index)
        return [Fraction(int(j == i)) for j in range(self.dim)]

    def with_constant(self, a: int, b: int, c: int, delta) -> "LieAlgebra":
        """Copy with one structure constant shifted (for mutation tests)."""
        f = self.f.copy()
        f[a, b, c] = f[a, b, c] + Fraction(delta)
        return LieAlgebra(self.names, f, self.rep, self.label + "*")

    @cached_property
    def bracket_blocks(self):
        return _blocks(self.f)

    @cached_property
    def coordinates(self) -> _Coordinates:
        if self.rep is None:
            raise ValueError(f"{self.label or 'algebra'} has no matrix representation")
        return _Coordinates(list(self.rep))

    @cached_property
    def product_tensor(self) -> np.ndarray:
        """``m[a, b, c]``: coordinates of ``R(X_a) R(X_b)`` in the basis."""
        coords = self.coordinates
        d = self.dim
        m = _zeros(d, d, d)
        for a, b in itertools.product(range(d), repeat=2):
            c = coords.solve(self.rep[a].dot(self.rep[b]))
            if c is None:
                raise ValueError(
                    f"matrix product {self.names[a]}*{self.names[b]} does not close on the span"
                )
            m[a, b, :] = c
        return m

    @cached_property
    def closed_under_product(self) -> bool:
        if self.rep is None:
            return False
        try:
            self.product_tensor
        except ValueError:
            return False
        return True

    @cached_property
    def product_blocks(self):
        return _blocks(self.product_tensor)

    def to_matrix(self, v: Sequence) -> np.ndarray:
        if self.rep is None:
            raise ValueError("no representation")
        out = _zeros(*self.rep[0].shape)
        for c, m in zip(v, self.rep):
            if c:
                out = out + Fraction(c) * m
        return out

    def from_matrix(self, mat: np.ndarray) -> list[Fraction]:
        c = self.coordinates.solve(_frac_array(mat))
        if c is None:
            raise ValueError("matrix is not in the span of the representation")
        return c


def _levi(i, j, k) -> int:
    if len({i, j, k}) < 3:
        return 0
    return 1 if (i, j, k) in ((0, 1, 2), (1, 2, 0), (2, 0, 1)) else -1


def _vec(v, d, what) -> np.ndarray:
    if len(v) != d:
        raise ValueError(f"{what}: expected a vector of length {d}, got {len(v)}")
    return _frac_array(list(v))


def bracket(L: LieAlgebra, u: Sequence, v: Sequence) -> list[Fraction]:
    u = _vec(u, L.dim, "bracket")
    v = _vec(v, L.dim, "bracket")
    return list(np.einsum("a,b,abc->c", u, v, L.f))


@dataclass(eq=False)
class DifferentialCrossedModule:
    """``(h, g; alpha, action)`` with ``alpha[a, i]`` the ``X_a`` part of
    ``alpha(Y_i)`` and ``rho[a, i, j]`` the ``Y_j`` part of ``X_a |> Y_i``."""

    g: LieAlgebra
    h: LieAlgebra
    alpha: np.ndarray
    rho: np.ndarray
    label: str = ""
    adjoint: bool = field(default=False)

    def __post_init__(self):
        self.alpha = _frac_array(self.alpha, (self.g.dim, self.h.dim))
        self.rho = _frac_array(self.rho, (self.g.dim, self.h.dim, self.h.dim))

    @cached_property
    def action_blocks(self):
        return _blocks(self.rho)

    @cached_property
    def alpha_map(self):
        idx = [tuple(int(v) for v in ix) for ix in np.argwhere(self.alpha != 0)]
        nums, den = rational_table([self.alpha[ix] for ix in idx])
        out: dict[int, list[tuple[int, int]]] = {}
        for (a, i), v in zip(idx, nums):
            out.setdefault(i, []).append((a, v))
        return out, den


def act(cm: DifferentialCrossedModule, x: Sequence, y: Sequence) -> list[Fraction]:
    x = _vec(x, cm.g.dim, "act")
    y = _vec(y, cm.h.dim, "act")
    return list(np.einsum("a,i,aij->j", x, y, cm.rho))


def alpha_apply(cm: DifferentialCrossedModule, y: Sequence) -> list[Fraction]:
    y = _vec(y, cm.h.dim, "alpha")
    return list(cm.alpha.dot(y))


# ----------------------------------------------------------------------------
# validation


@dataclass
class AxiomResult:
    name: str
    passed: bool
    witness: tuple | None = None
    detail: str = ""


@dataclass
class ValidationReport:
    subject: str
    results: list[AxiomResult]

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    def __getitem__(self, name: str) -> AxiomResult:
        for r in self.results:
            if r.name == name:
                return r
        raise KeyError(name)

    def failures(self) -> list[AxiomResult]:
        return [r for r in self.results if not r.passed]

    def __str__(self):
        lines = [f"{self.subject}: {'PASS' if self.passed else 'FAIL'}"]
        for r in self.results:
            w = f" witness={r.witness}" if r.witness is not None else ""
            lines.append(f"  {r.name:<22} {'pass' if r.passed else 'FAIL'}{w}")
        return "\n".join(lines)


def _compare(name: str, lhs: np.ndarray, rhs: np.ndarray, labels=None, scale=1) -> AxiomResult:
    """Entrywise ``lhs == rhs``; ``scale`` undoes a cleared denominator in the detail text."""
    diff = np.argwhere((lhs - rhs) != 0)
    if diff.shape[0] == 0:
        return AxiomResult(name, True)
    at = tuple(diff[0])
    w = tuple(int(v) for v in at)
    if labels is not None:
        w = tuple(lab[i] for lab, i in zip(labels, w))
    lv, rv = Fraction(lhs[at]) / scale, Fraction(rhs[at]) / scale
    return AxiomResult(name, False, w, f"lhs={lv} rhs={rv}")


def _integral(arrays: Sequence[np.ndarray]) -> tuple[list[np.ndarray], int]:
    """Clear one common denominator; int64 when cubic products provably fit."""
    nz = [np.flatnonzero(a.reshape(-1) != 0) for a in arrays]
    den = 1
    for a, idx in zip(arrays, nz):
        for v in a.reshape(-1)[idx]:
            den = math.lcm(den, Fraction(v).denominator)
    ints, big = [], 0
    for a, idx in zip(arrays, nz):
        flat = np.zeros(a.size, dtype=object)
        for i in idx:
            v = Fraction(a.flat[i]) * den
            flat[i] = v.numerator
            big = max(big, abs(v.numerator))
        ints.append(flat.reshape(a.shape))
    width = max(max(a.shape) for a in arrays if a.size)
    if (big + 1) ** 3 * width ** 2 * 8 < 2**62:
        ints = [a.astype(np.int64) for a in ints]
    return ints, den


def _lie_axioms(f: np.ndarray, R, names_: Sequence[str], tag: str, D: int) -> list[AxiomResult]:
    names = [names_] * 4
    out = [_compare(f"antisymmetry({tag})", f, -np.transpose(f, (1, 0, 2)), names, D)]
    jac = (
        np.einsum("bcd,ade->abce", f, f)
        + np.einsum("cad,bde->abce", f, f)
        + np.einsum("abd,cde->abce", f, f)
    )
    out.append(_compare(f"jacobi({tag})", jac, np.zeros_like(jac), names, D * D))
    if R is not None:
        comm = np.einsum("aij,bjk->abik", R, R) - np.einsum("bij,ajk->abik", R, R)
        img = np.einsum("abc,cik->abik", f, R)
        out.append(_compare(f"representation({tag})", comm, img, names, D * D))
    return out


def validate_dcm(cm: DifferentialCrossedModule) -> ValidationReport:
    """Exhaustive check of every crossed-module axiom over basis tuples.

    All tensors share one cleared denominator ``D``; each comparison is
    rescaled so both sides carry the same power of ``D``.
    """
    g, h = cm.g, cm.h
    G, H = g.names, h.names
    arrays = [g.f, h.f, cm.alpha, cm.rho]
    for L in (g, h):
        if L.rep is not None:
            arrays.append(np.array([np.array(m, dtype=object) for m in L.rep], dtype=object))
    ints, D = _integral(arrays)
    f, fh, al, rho = ints[:4]
    reps = iter(ints[4:])
    Rg = next(reps) if g.rep is not None else None
    Rh = next(reps) if h.rep is not None else None
    results = _lie_axioms(f, Rg, G, "g", D) + _lie_axioms(fh, Rh, H, "h", D)
    # alpha is a Lie algebra morphism
    lhs = np.einsum("ijk,ck->ijc", fh, al) * D
    rhs = np.einsum("ai,bj,abc->ijc", al, al, f)
    results.append(_compare("alpha-morphism", lhs, rhs, [H, H, G], D**3))
    # X |> [Y, Y'] = [X |> Y, Y'] + [Y, X |> Y']
    lhs = np.einsum("ijk,akl->aijl", fh, rho)
    rhs = np.einsum("aik,kjl->aijl", rho, fh) + np.einsum("ajk,ikl->aijl", rho, fh)
    results.append(_compare("derivation", lhs, rhs, [G, H, H, H], D * D))
    # [X, X'] |> Y = X |> (X' |> Y) - X' |> (X |> Y)
    lhs = np.einsum("abc,cil->abil", f, rho)
    rhs = np.einsum("bik,akl->abil", rho, rho) - np.einsum("aik,bkl->abil", rho, rho)
    results.append(_compare("morphism", lhs, rhs, [G, G, H, H], D * D))
    # alpha(X |> Y) = [X, alpha(Y)]
    lhs = np.einsum("aik,ck->aic", rho, al)
    rhs = np.einsum("bi,abc->aic", al, f)
    results.append(_compare("equivariance", lhs, rhs, [G, H, G], D * D))
    # alpha(Y) |> Y' = [Y, Y']
    lhs = np.einsum("ai,ajl->ijl", al, rho)
    results.append(_compare("peiffer", lhs, fh * D, [H, H, H], D * D))
    return ValidationReport(cm.label or "crossed module", results)


# ----------------------------------------------------------------------------
# builders


def build_poincare2() -> DifferentialCrossedModule:
    """so(3,1) acting on the abelian translations R^4, trivial alpha."""
    eta = [-1, 1, 1, 1]
    pairs = [(a, b) for a in range(4) for b in range(a + 1, 4)]
    mats = []
    for a, b in pairs:
        # M_ab |> P_c = eta_bc P_a - eta_ac P_b
        m = _zeros(4, 4)
        for c in range(4):
            if b == c:
                m[a, c] += eta[b]
            if a == c:
                m[b, c] -= eta[a]
        mats.append(m)
    names = tuple(f"M{a}{b}" for a, b in pairs)
    g = LieAlgebra.from_matrices(names, mats, label="so(3,1)")
    # cross-check the structure constants against the closed formula
    pos = {p: i for i, p in enumerate(pairs)}

    def gen(a, b):
        v = [Fraction(0)] * 6
        if a == b:
            return v
        if a < b:
            v[pos[(a, b)]] = Fraction(1)
        else:
            v[pos[(b, a)]] = Fraction(-1)
        return v

    def d(i, j):
        return eta[i] if i == j else 0

    for (a, b), (c, e) in itertools.product(pairs, repeat=2):
        expect = [
            d(a, e) * x + d(b, c) * y - d(a, c) * z - d(b, e) * w
            for x, y, z, w in zip(gen(b, c), gen(a, e), gen(b, e), gen(a, c))
        ]
        if list(g.f[pos[(a, b)], pos[(c, e)], :]) != expect:
            raise AssertionError("so(3,1) structure constants disagree with the vector representation")
    h = LieAlgebra(tuple(f"P{a}" for a in range(4)), _zeros(4, 4, 4), label="R^4")
    rho = _zeros(6, 4, 4)
    for x, m in enumerate(mats):
        for i, j in itertools.product(range(4), repeat=2):
            rho[x, i, j] = m[j, i]
    return DifferentialCrossedModule(g, h, _zeros(6, 4), rho, label="poincare2")


def build_adjoint_module(L: LieAlgebra) -> DifferentialCrossedModule:
    """``g = h = L`` with identity alpha and the adjoint action."""
    if L.rep is None:
        raise ValueError("the adjoint module requires a faithful representation")
    d = L.dim
    alpha = _zeros(d, d)
    for i in range(d):
        alpha[i, i] = Fraction(1)
    return DifferentialCrossedModule(L, L, alpha, L.f.copy(), label=f"adjoint {L.label}".strip(), adjoint=True)


def adjoint_matrix(L: LieAlgebra, g: np.ndarray, ginv: np.ndarray) -> np.ndarray:
    """Basis matrix of ``X -> g X g^-1``: column ``a`` holds the image of ``X_a``."""
    cols = [L.from_matrix(g.dot(m).dot(ginv)) for m in L.rep]
    return _frac_array([[cols[a][b] for a in range(L.dim)] for b in range(L.dim)])


# ----------------------------------------------------------------------------
# invariant polynomials


@dataclass(eq=False)
class InvariantPolynomial:
    """``T[a_1, ..., a_n, i] = <X_a1 ... X_an, Y_i>``."""

    n: int
    tensor: np.ndarray
    label: str = ""

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("arity must be positive")
        self.tensor = _frac_array(self.tensor)
        if self.tensor.ndim != self.n + 1:
            raise ValueError(f"tensor rank {self.tensor.ndim} does not match arity {self.n}")

    @property
    def dims(self) -> tuple[int, int]:
        return self.tensor.shape[0], self.tensor.shape[-1]

    def value(self, gs: Sequence[Sequence], y: Sequence) -> Fraction:
        out = self.tensor
        for v in gs:
            out = np.tensordot(_frac_array(list(v)), out, axes=(0, 0))
        return Fraction(np.tensordot(_frac_array(list(y)), out, axes=(0, 0))[()])

    def with_entry(self, index: tuple, delta) -> "InvariantPolynomial":
        t = self.tensor.copy()
        t[index] = t[index] + Fraction(delta)
        return InvariantPolynomial(self.n, t, self.label + "*")

    @cached_property
    def contraction(self):
        """Sparse ``{i: [(flat g-index tuple, num)]}`` plus common denominator."""
        dg = self.tensor.shape[0]
        idx = [tuple(int(v) for v in ix) for ix in np.argwhere(self.tensor != 0)]
        nums, den = rational_table([self.tensor[ix] for ix in idx])
        out: dict[int, list[tuple[int, int]]] = {}
        for ix, v in zip(idx, nums):
            flat = 0
            for a in ix[:-1]:
                flat = flat * dg + a
            out.setdefault(ix[-1], []).append((flat, v))
        return out, den


def invpoly_from_trace(cm: DifferentialCrossedModule, n: int) -> InvariantPolynomial:
    """Symmetrised trace of ``R(X_a1) ... R(X_an) R(alpha(Y_i))``."""
    g = cm.g
    if g.rep is None:
        raise ValueError("invpoly_from_trace needs a representation of g")
    dg, dh = g.dim, cm.h.dim
    alpha_img = [g.to_matrix(list(cm.alpha[:, i])) for i in range(dh)]
    T = _zeros(*([dg] * n + [dh]))
    norm = Fraction(1, math.factorial(n))
    for combo in itertools.combinations_with_replacement(range(dg), n):
        for i in range(dh):
            if all(v == 0 for v in alpha_img[i].reshape(-1)):
                continue
            total = Fraction(0)
            for perm in itertools.permutations(combo):
                m = alpha_img[i]
                for a in reversed(perm):
                    m = g.rep[a].dot(m)
                total += Fraction(np.trace(m))
            total *= norm
            if total:
                for perm in set(itertools.permutations(combo)):
                    T[perm + (i,)] = total
    return InvariantPolynomial(n, T, label=f"symtrace n={n}")


def invpoly_validate(P: InvariantPolynomial, cm: DifferentialCrossedModule) -> ValidationReport:
    dg, dh = cm.g.dim, cm.h.dim
    if P.dims != (dg, dh):
        raise ValueError(f"pairing dims {P.dims} do not match crossed module ({dg}, {dh})")
    n = P.n
    (T, f, rho, al), D = _integral([P.tensor, cm.g.f, cm.rho, cm.alpha])
    letters = "abcdefgh"[:n]
    labels = [cm.g.names] * n
    results = []
    # symmetry in the g slots
    sym_ok = AxiomResult("symmetry", True)
    for k in range(n - 1):
        perm = list(range(n + 1))
        perm[k], perm[k + 1] = perm[k + 1], perm[k]
        r = _compare("symmetry", T, np.transpose(T, perm), labels + [cm.h.names], D)
        if not r.passed:
            sym_ok = r
            break
    results.append(sym_ok)
    # ad-invariance: <X.., X |> Y> = -sum_k <..[X, X_k]..,Y>
    sl = "".join(letters)
    lhs = np.einsum(f"{sl}j,xij->{sl}xi", T, rho)
    rhs = np.zeros_like(lhs)
    for k in range(n):
        sub = list(letters)
        sub[k] = "z"
        rhs = rhs - np.einsum(f"x{letters[k]}z,{''.join(sub)}i->{sl}xi", f, T)
    results.append(_compare("ad-invariance", lhs, rhs, labels + [cm.g.names, cm.h.names], D * D))
    # alpha exchange at every slot
    ex_ok = AxiomResult("alpha-exchange", True)
    for k in range(n):
        sub = list(letters)
        sub[k] = "z"
        A = np.einsum(f"z{letters[k]},{''.join(sub)}j->{sl}j", al, T)
        perm = list(range(n + 1))
        perm[k], perm[n] = perm[n], perm[k]
        r = _compare("alpha-exchange", A, np.transpose(A, perm), [cm.h.names] * (n + 1), D * D)
        if not r.passed:
            ex_ok = r
            break
    results.append(ex_ok)
    return ValidationReport(P.label or "pairing", results)


def conjugation_invariance(P: InvariantPolynomial, cm: DifferentialCrossedModule, g, ginv) -> bool:
    """Finite invariance under ``X -> g X g^-1`` on both sides (adjoint modules)."""
    if not cm.adjoint:
        raise ValueError("finite conjugation invariance is defined here for adjoint modules only")
    Ad = adjoint_matrix(cm.g, _frac_array(g), _frac_array(ginv))
    T = P.tensor
    for _ in range(P.n + 1):
        # contract the leading axis with Ad and rotate it to the back
        T = np.tensordot(T, Ad, axes=(0, 0))
    return not np.any((T - P.tensor) != 0)


# ----------------------------------------------------------------------------
# text formats


def _split_lines(text: str):
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield lineno, line.split()


def parse_crossed_module(text: str, label: str = "custom") -> DifferentialCrossedModule:
    """Parse the plain-text crossed-module format.

    Directives (one per line, ``#`` comments)::

        g.dim 3 | g.basis e1 e2 e3 | g.bracket e1 e2 e3 1 | g.rep e1 <N*N entries>
        h.* likewise | alpha <g-gen> <h-gen> value | action <g-gen> <h-in> <h-out> value
        adjoint   (h := g, alpha := id, action := ad)
    """
    spec: dict = {"g": {"basis": None, "dim": None, "bracket": [], "rep": {}},
                  "h": {"basis": None, "dim": None, "bracket": [], "rep": {}}}
    alpha_e, action_e = [], []
    adjoint = False

    def fail(lineno, msg):
        raise AlgebraFormatError(f"line {lineno}: {msg}")

    for lineno, tok in _split_lines(text):
        key = tok[0]
        try:
            if key in ("g.dim", "h.dim"):
                spec[key[0]]["dim"] = int(tok[1])
            elif key in ("g.basis", "h.basis"):
                spec[key[0]]["basis"] = tuple(tok[1:])
            elif key in ("g.bracket", "h.bracket"):
                if len(tok) != 5:
                    fail(lineno, "bracket needs: a b c value")
                spec[key[0]]["bracket"].append((lineno, tok[1], tok[2], tok[3], Fraction(tok[4])))
            elif key in ("g.rep", "h.rep"):
                vals = [Fraction(v) for v in tok[2:]]
                n = math.isqrt(len(vals))
                if n * n != len(vals) or n == 0:
                    fail(lineno, "representation matrix needs N*N entries")
                spec[key[0]]["rep"][tok[1]] = _frac_array(vals, (n, n))
            elif key == "alpha":
                if len(tok) != 4:
                    fail(lineno, "alpha needs: g-gen h-gen value")
                alpha_e.append((lineno, tok[1], tok[2], Fraction(tok[3])))
            elif key == "action":
                if len(tok) != 5:
                    fail(lineno, "action needs: g-gen h-in h-out value")
                action_e.append((lineno, tok[1], tok[2], tok[3], Fraction(tok[4])))
            elif key == "adjoint":
                adjoint = True
            elif key == "name":
                label = " ".join(tok[1:])
            else:
                fail(lineno, f"unknown directive {key!r}")
        except (ValueError, ZeroDivisionError, IndexError) as exc:
            if isinstance(exc, AlgebraFormatError):
                raise
            fail(lineno, str(exc))

    def build(which) -> LieAlgebra:
        s = spec[which]
        if s["basis"] is None:
            raise AlgebraFormatError(f"missing {which}.basis")
        names = s["basis"]
        if s["dim"] is not None and s["dim"] != len(names):
            raise AlgebraFormatError(f"{which}.dim {s['dim']} disagrees with {len(names)} basis names")
        d = len(names)
        f = _zeros(d, d, d)
        for lineno, a, b, c, v in s["bracket"]:
            try:
                ia, ib, ic = names.index(a), names.index(b), names.index(c)
            except ValueError:
                fail(lineno, f"unknown {which} generator in bracket")
            f[ia, ib, ic] += v
            if ia != ib:
                f[ib, ia, ic] -= v
        rep = None
        if s["rep"]:
            missing = [n for n in names if n not in s["rep"]]
            if missing:
                raise AlgebraFormatError(f"{which}.rep missing for {missing}")
            rep = tuple(s["rep"][n] for n in names)
        return LieAlgebra(names, f, rep, f"{label}.{which}")

    g = build("g")
    if adjoint:
        cm = build_adjoint_module(g)
        cm.label = label
        return cm
    h = build("h")
    alpha = _zeros(g.dim, h.dim)
    for lineno, a, i, v in alpha_e:
        try:
            alpha[g.names.index(a), h.names.index(i)] += v
        except ValueError:
            fail(lineno, "unknown generator in alpha")
    rho = _zeros(g.dim, h.dim, h.dim)
    for lineno, a, i, j, v in action_e:
        try:
            rho[g.names.index(a), h.names.index(i), h.names.index(j)] += v
        except ValueError:
            fail(lineno, "unknown generator in action")
    return DifferentialCrossedModule(g, h, alpha, rho, label=label)


def load_crossed_module(path) -> DifferentialCrossedModule:
    path = Path(path)
    return parse_crossed_module(path.read_text(encoding="utf-8"), label=path.stem)


def parse_pairing(text: str, cm: DifferentialCrossedModule) -> InvariantPolynomial:
    """``arity n`` then lines ``<g-gen>*n <h-gen> value``; unlisted entries are zero."""
    n = None
    entries = []
    for lineno, tok in _split_lines(text):
        if tok[0] == "arity":
            n = int(tok[1])
            continue
        if n is None:
            raise AlgebraFormatError(f"line {lineno}: 'arity n' must come first")
        if len(tok) != n + 2:
            raise AlgebraFormatError(f"line {lineno}: expected {n} g-generators, one h-generator and a value")
        try:
            ix = tuple(cm.g.index(a) for a in tok[:n]) + (cm.h.index(tok[n]),)
        except KeyError as exc:
            raise AlgebraFormatError(f"line {lineno}: {exc.args[0]}") from None
        entries.append((ix, Fraction(tok[n + 1])))
    if n is None:
        raise AlgebraFormatError("empty pairing file")
    T = _zeros(*([cm.g.dim] * n + [cm.h.dim]))
    for ix, v in entries:
        T[ix] = v
    return InvariantPolynomial(n, T, label="custom")
