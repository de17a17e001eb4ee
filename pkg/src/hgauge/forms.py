"""Algebra-valued differential forms graded by spacetime and simplex degree.

Basis monomials are stored as grassmann bitmasks: ``dt_j`` sits at bit ``j``
and ``dx_i`` at bit ``k + i`` where ``k`` is the number of simplex variables.
Ascending bit order is the canonical order, so every stored term reads
``coeff * dt_J ^ dx_I`` with ``J`` and ``I`` increasing.
"""
from __future__ import annotations

import itertools
from fractions import Fraction
from functools import lru_cache
from typing import Mapping, Sequence

import numpy as np

from ._config import MASK_BITS
from ._terms import Terms, combine, map_comps, product
from .algebra import DifferentialCrossedModule, InvariantPolynomial, LieAlgebra
from .exact import Poly, RegistryMismatch, VarRegistry, integrate_terms, substitute_terms

__all__ = [
    "BiGradedForm",
    "FormTagError",
    "d_x",
    "d_t",
    "wedge",
    "wedge_bracket",
    "wedge_action",
    "wedge_matrix",
    "wedge_square",
    "alpha_push",
    "pair",
    "simplex_integrate_form",
    "integrate_coefficients",
    "face_restrict",
]

_LOW = (1 << MASK_BITS) - 1


class FormTagError(TypeError):
    pass


def _popcount(masks: np.ndarray) -> np.ndarray:
    out = np.zeros_like(masks)
    for b in range(MASK_BITS):
        out += (masks >> b) & 1
    return out


def _sign_before(masks: np.ndarray, bit: int) -> np.ndarray:
    """``(-1)^(number of set bits below bit)`` as +-1 int64."""
    low = _popcount(masks & ((1 << bit) - 1))
    return 1 - 2 * (low & 1)


class BiGradedForm:
    """Sparse form ``sum coeff * dt_J ^ dx_I * e_c``.

    ``tag`` names the value space (``"g"``, ``"h"``, ``"scalar"``, or an
    auxiliary tag such as ``"mat"``); ``dim`` is its dimension.
    """

    __slots__ = ("reg", "tag", "dim", "terms")

    def __init__(self, reg: VarRegistry, tag: str, dim: int, terms: Terms):
        self.reg = reg
        self.tag = tag
        self.dim = dim
        self.terms = terms

    # -- construction -------------------------------------------------------

    @classmethod
    def zero(cls, reg: VarRegistry, tag: str = "scalar", dim: int = 1) -> "BiGradedForm":
        return cls(reg, tag, dim, Terms.empty())

    @classmethod
    def from_components(
        cls,
        reg: VarRegistry,
        tag: str,
        dim: int,
        components: Mapping[tuple, Sequence | Poly | int | Fraction],
    ) -> "BiGradedForm":
        """Build from ``{(I, J): coefficient vector}``.

        ``I`` and ``J`` are strictly increasing 0-based dx and dt indices. A
        coefficient vector is a sequence of ``dim`` entries (Poly, int,
        Fraction or polynomial text); a scalar form may give a bare entry.
        """
        parts = []
        for key, vec in components.items():
            I, J = (tuple(key[0]), tuple(key[1])) if len(key) == 2 else (tuple(key), ())
            mask = _mask_of(reg, I, J)
            if isinstance(vec, (Poly, int, Fraction, str)):
                vec = [vec]
            if len(vec) != dim:
                raise ValueError(f"component {key}: expected {dim} coefficients, got {len(vec)}")
            for c, coef in enumerate(vec):
                p = _as_poly(reg, coef)
                t = p.terms
                if not len(t):
                    continue
                hdr = np.full(len(t), mask | (c << MASK_BITS), dtype=np.int64)
                parts.append((Terms(hdr, t.mono, t.num, t.den), 1))
        return cls(reg, tag, dim, combine(parts))

    @classmethod
    def basis_form(cls, reg, tag, dim, comp: int, I=(), J=(), coef=1) -> "BiGradedForm":
        vec = [0] * dim
        vec[comp] = coef
        return cls.from_components(reg, tag, dim, {(tuple(I), tuple(J)): vec})

    def _like(self, terms: Terms, tag: str | None = None, dim: int | None = None) -> "BiGradedForm":
        return BiGradedForm(self.reg, self.tag if tag is None else tag, self.dim if dim is None else dim, terms)

    # -- inspection ---------------------------------------------------------

    def nterms(self) -> int:
        return len(self.terms)

    def is_zero(self) -> bool:
        return len(self.terms) == 0

    def _split_mask(self, mask: int) -> tuple[tuple[int, ...], tuple[int, ...]]:
        k = self.reg.k
        J = tuple(j for j in range(k) if mask >> j & 1)
        I = tuple(i for i in range(self.reg.m) if mask >> (k + i) & 1)
        return I, J

    def components(self) -> dict[tuple, list[Poly]]:
        """``{(I, J): [Poly per value component]}`` (only non-zero blocks)."""
        out: dict[tuple, list[Poly]] = {}
        t = self.terms
        if not len(t):
            return out
        for h in np.unique(t.hdr):
            sel = t.hdr == h
            c, mask = int(h) >> MASK_BITS, int(h) & _LOW
            key = self._split_mask(mask)
            vec = out.setdefault(key, [Poly.zero(self.reg) for _ in range(self.dim)])
            zero = np.zeros(int(sel.sum()), dtype=np.int64)
            vec[c] = Poly(self.reg, Terms._normalized(zero, t.mono[sel], t.num[sel], t.den))
        return out

    def bidegrees(self) -> set[tuple[int, int]]:
        masks = self.terms.masks
        k = self.reg.k
        dt = _popcount(masks & ((1 << k) - 1))
        dx = _popcount(masks >> k)
        return {(int(a), int(b)) for a, b in zip(dx, dt)}

    def part(self, dx_degree: int | None = None, dt_degree: int | None = None) -> "BiGradedForm":
        masks = self.terms.masks
        k = self.reg.k
        keep = np.ones(masks.shape[0], dtype=bool)
        if dt_degree is not None:
            keep &= _popcount(masks & ((1 << k) - 1)) == dt_degree
        if dx_degree is not None:
            keep &= _popcount(masks >> k) == dx_degree
        return self._like(self.terms.filter(keep))

    def evaluate(self, values: Mapping[str, Fraction]) -> dict[tuple, list[Fraction]]:
        """Numeric value of every coefficient at a rational point."""
        out = {}
        for key, vec in self.components().items():
            vals = [p.evaluate(values) for p in vec]
            if any(vals):
                out[key] = vals
        return out

    def equals(self, other: "BiGradedForm") -> bool:
        return self.reg == other.reg and self.dim == other.dim and self.terms.equals(other.terms)

    def __eq__(self, other):
        if not isinstance(other, BiGradedForm):
            return NotImplemented
        return self.tag == other.tag and self.equals(other)

    __hash__ = None

    def __repr__(self):
        if self.is_zero():
            return f"<{self.tag}-form 0>"
        bits = []
        for (I, J), vec in sorted(self.components().items()):
            basis = "^".join([f"dt{j + 1}" for j in J] + [f"dx{i + 1}" for i in I]) or "1"
            for c, p in enumerate(vec):
                if not p.is_zero():
                    bits.append(f"({p!r})*{basis}" + (f"*e{c}" if self.dim > 1 else ""))
        return f"<{self.tag}-form " + " + ".join(bits) + ">"

    # -- linear structure ---------------------------------------------------

    def _check(self, other: "BiGradedForm"):
        if self.reg != other.reg:
            raise RegistryMismatch("forms live on different registries")
        if self.tag != other.tag or self.dim != other.dim:
            raise FormTagError(f"cannot add {self.tag}-form to {other.tag}-form")

    def __add__(self, other):
        self._check(other)
        return self._like(combine([(self.terms, 1), (other.terms, 1)]))

    def __sub__(self, other):
        self._check(other)
        return self._like(combine([(self.terms, 1), (other.terms, -1)]))

    def __neg__(self):
        return self._like(combine([(self.terms, -1)]))

    def scale(self, c) -> "BiGradedForm":
        return self._like(combine([(self.terms, Fraction(c))]))

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        if isinstance(other, Poly):
            return self.poly_mul(other)
        return NotImplemented

    __rmul__ = __mul__

    def poly_mul(self, p: Poly) -> "BiGradedForm":
        if p.reg != self.reg:
            raise RegistryMismatch("polynomial registry differs from form registry")
        blocks = {(c, 0): [(c, 1)] for c in range(self.dim)}
        return self._like(product(self.terms, p.terms, blocks, 1, self.reg.guard))

    def retag(self, tag: str) -> "BiGradedForm":
        return self._like(self.terms, tag=tag)

    def component(self, c: int) -> "BiGradedForm":
        """Scalar form holding value component ``c``."""
        t = self.terms
        sel = t.comps == c
        return BiGradedForm(self.reg, "scalar", 1, Terms._normalized(t.masks[sel], t.mono[sel], t.num[sel], t.den))

    # -- registry changes ---------------------------------------------------

    def lift(self, reg: VarRegistry) -> "BiGradedForm":
        """Re-express on a registry that contains every variable in use."""
        return BiGradedForm(reg, self.tag, self.dim, _relocate(self.terms, self.reg, reg))

    def specialize(self, values: Mapping[str, Fraction | int]) -> "BiGradedForm":
        """Substitute constants for simplex variables that carry no dt factor."""
        out = self
        for name, v in values.items():
            vi = out.reg.index(name)
            t = substitute_terms(out.terms, out.reg, vi, Terms.make([0], [0], [Fraction(v).numerator], Fraction(v).denominator))
            out = out._like(t)
        return out


def _as_poly(reg: VarRegistry, coef) -> Poly:
    if isinstance(coef, Poly):
        if coef.reg != reg:
            return coef.to_registry(reg)
        return coef
    if isinstance(coef, str):
        return Poly.parse(reg, coef)
    return Poly.const(reg, coef)


def _mask_of(reg: VarRegistry, I: Sequence[int], J: Sequence[int]) -> int:
    for seq, bound, what in ((I, reg.m, "dx"), (J, reg.k, "dt")):
        if any(b <= a for a, b in zip(seq, seq[1:])):
            raise ValueError(f"{what} multi-index {tuple(seq)} must be strictly increasing")
        if any(i < 0 or i >= bound for i in seq):
            raise ValueError(f"{what} multi-index {tuple(seq)} out of range 0..{bound - 1}")
    mask = 0
    for j in J:
        mask |= 1 << j
    for i in I:
        mask |= 1 << (reg.k + i)
    return mask


def _relocate(t: Terms, src: VarRegistry, dst: VarRegistry) -> Terms:
    """Move terms between registries, matching variables (and dt bits) by name."""
    if src == dst or not len(t):
        return t if src == dst else Terms.empty()
    if src.x_vars != dst.x_vars:
        raise RegistryMismatch("spacetime variables differ")
    from .exact import repack

    mono = repack(t.mono, src, dst)
    masks = t.masks
    new = (masks >> src.k) << dst.k
    for j, name in enumerate(src.t_vars):
        bit = (masks >> j) & 1
        if bit.any():
            if name not in dst.t_vars:
                raise RegistryMismatch(f"dt{name} has no slot in the target registry")
            new |= bit << dst.t_vars.index(name)
    # reordering of dt bits may permute factors; recompute the sign per term
    sign = np.ones(len(t), dtype=np.int64)
    if src.t_vars != dst.t_vars[: len(src.t_vars)]:
        order = [dst.t_vars.index(n) if n in dst.t_vars else -1 for n in src.t_vars]
        for row, m in enumerate(masks):
            pos = [order[j] for j in range(src.k) if m >> j & 1]
            inv = sum(1 for a, b in itertools.combinations(pos, 2) if a > b)
            sign[row] = -1 if inv % 2 else 1
    num = t.num * sign if t.num.dtype == np.int64 else t.num * sign.astype(object)
    return Terms.make(new | (t.comps << MASK_BITS), mono, num, t.den)


# ----------------------------------------------------------------------------
# differentials


def _exterior_derivative(w: BiGradedForm, var_index: int, bit: int) -> list[tuple[Terms, int]]:
    t = w.terms
    reg = w.reg
    field = (1 << reg.width) - 1
    e = (t.mono >> reg.shift(var_index)) & field
    masks = t.masks
    keep = (e > 0) & ((masks >> bit) & 1 == 0)
    if not keep.any():
        return []
    sign = _sign_before(masks[keep], bit) * e[keep]
    num = t.num[keep] * (sign if t.num.dtype == np.int64 else sign.astype(object))
    hdr = t.hdr[keep] | (1 << bit)
    mono = t.mono[keep] - (1 << reg.shift(var_index))
    return [(Terms.make(hdr, mono, num, t.den), 1)]


def d_x(w: BiGradedForm) -> BiGradedForm:
    """Exterior derivative in the spacetime variables, acting from the left."""
    parts = []
    for i in range(w.reg.m):
        parts += _exterior_derivative(w, i, w.reg.k + i)
    return w._like(combine(parts))


def d_t(w: BiGradedForm) -> BiGradedForm:
    """Exterior derivative in the simplex variables, acting from the left."""
    parts = []
    for j in range(w.reg.k):
        parts += _exterior_derivative(w, w.reg.m + j, j)
    return w._like(combine(parts))


# ----------------------------------------------------------------------------
# products


def _same_reg(a: BiGradedForm, b: BiGradedForm):
    if a.reg != b.reg:
        raise RegistryMismatch("forms live on different registries")


def _need(w: BiGradedForm, tag: str, op: str):
    if w.tag != tag:
        raise FormTagError(f"{op}: expected a {tag}-valued form, got {w.tag}")


def wedge(a: BiGradedForm, b: BiGradedForm, blocks, vden: int, tag: str, dim: int) -> BiGradedForm:
    """Generic bilinear wedge with value map ``blocks`` over ``vden``."""
    _same_reg(a, b)
    return BiGradedForm(a.reg, tag, dim, product(a.terms, b.terms, blocks, vden, a.reg.guard))


def scalar_wedge(a: BiGradedForm, b: BiGradedForm) -> BiGradedForm:
    """Wedge where ``a`` is scalar and ``b`` arbitrary (or vice versa)."""
    if a.tag == "scalar" and a.dim == 1:
        blocks = {(0, c): [(c, 1)] for c in range(b.dim)}
        return wedge(a, b, blocks, 1, b.tag, b.dim)
    if b.tag == "scalar" and b.dim == 1:
        blocks = {(c, 0): [(c, 1)] for c in range(a.dim)}
        return wedge(a, b, blocks, 1, a.tag, a.dim)
    raise FormTagError("scalar_wedge needs one scalar argument")


def wedge_bracket(a: BiGradedForm, b: BiGradedForm, L: LieAlgebra) -> BiGradedForm:
    if a.tag != b.tag or a.dim != L.dim or b.dim != L.dim:
        raise FormTagError(f"wedge_bracket: mismatched value spaces {a.tag}/{b.tag}")
    blocks, den = L.bracket_blocks
    return wedge(a, b, blocks, den, a.tag, L.dim)


def wedge_action(cm: DifferentialCrossedModule, a: BiGradedForm, b: BiGradedForm) -> BiGradedForm:
    _need(a, "g", "wedge_action")
    _need(b, "h", "wedge_action")
    blocks, den = cm.action_blocks
    return wedge(a, b, blocks, den, "h", cm.h.dim)


def wedge_matrix(a: BiGradedForm, b: BiGradedForm, L: LieAlgebra) -> BiGradedForm:
    """Wedge with the associative product of the representation."""
    if a.tag != b.tag or a.dim != L.dim or b.dim != L.dim:
        raise FormTagError("wedge_matrix: mismatched value spaces")
    blocks, den = L.product_blocks
    return wedge(a, b, blocks, den, a.tag, L.dim)


def wedge_square(a: BiGradedForm, L: LieAlgebra) -> BiGradedForm:
    """``a ^ a`` in the representation; for odd forms whose representation
    does not close under products this equals ``1/2 a ^[,] a``."""
    if L.closed_under_product:
        return wedge_matrix(a, a, L)
    if any((p + q) % 2 == 0 for p, q in a.bidegrees()):
        raise FormTagError("a^a of an even form needs a product-closed representation")
    return wedge_bracket(a, a, L).scale(Fraction(1, 2))


def alpha_push(cm: DifferentialCrossedModule, w: BiGradedForm) -> BiGradedForm:
    _need(w, "h", "alpha_push")
    mapping, den = cm.alpha_map
    return BiGradedForm(w.reg, "g", cm.g.dim, map_comps(w.terms, mapping, den))


def pair(P: InvariantPolynomial, omegas: Sequence[BiGradedForm], eta: BiGradedForm) -> BiGradedForm:
    """``<w_1 ^ ... ^ w_n, eta>``: components wedged in argument order, values
    contracted with the tensor of ``P``."""
    if len(omegas) != P.n:
        raise ValueError(f"pairing has arity {P.n}, got {len(omegas)} g-arguments")
    dg, dh = P.dims
    if eta.dim != dh or any(w.dim != dg for w in omegas):
        raise FormTagError("pair: argument dimensions do not match the pairing")
    for w in omegas:
        _same_reg(w, eta)
    mapping, den = P.contraction
    acc = map_comps(eta.terms, mapping, den)
    for k in range(P.n, 0, -1):
        acc = product(omegas[k - 1].terms, acc, _contract_blocks(dg, k), 1, eta.reg.guard)
    return BiGradedForm(eta.reg, "scalar", 1, acc)


@lru_cache(maxsize=None)
def _contract_blocks(dg: int, k: int):
    """``w^{a_k} ^ R[a_1..a_k] -> R'[a_1..a_{k-1}]`` with flattened indices."""
    blocks = {}
    for head in range(dg ** (k - 1)):
        for a in range(dg):
            blocks[(a, head * dg + a)] = [(head, 1)]
    return blocks


# ----------------------------------------------------------------------------
# simplex operations


def integrate_coefficients(w: BiGradedForm, names: Sequence[str]) -> BiGradedForm:
    """Integrate coefficients over the simplex in ``names`` (no dt bookkeeping).

    The listed variables must not carry dt factors.
    """
    for n in names:
        j = w.reg.t_vars.index(n) if n in w.reg.t_vars else None
        if j is not None and ((w.terms.masks >> j) & 1).any():
            raise ValueError(f"d{n} factors present; use simplex_integrate_form")
    t, reg = integrate_terms(w.terms, w.reg, names)
    out = BiGradedForm(reg, w.tag, w.dim, Terms.empty())
    if not len(t):
        return out
    return BiGradedForm(reg, w.tag, w.dim, _drop_dt_bits(t, w.reg, reg))


def _drop_dt_bits(t: Terms, src: VarRegistry, dst: VarRegistry) -> Terms:
    """Relabel masks after removing t-variables that carry no dt factor."""
    masks = t.masks
    new = (masks >> src.k) << dst.k
    for j, name in enumerate(src.t_vars):
        if name in dst.t_vars:
            new |= ((masks >> j) & 1) << dst.t_vars.index(name)
    return Terms(new | (t.comps << MASK_BITS), t.mono, t.num, t.den)


def simplex_integrate_form(w: BiGradedForm, k: int | None = None) -> BiGradedForm:
    """Integrate over the standard ``k``-simplex spanned by all t-variables.

    Only the component carrying ``dt_1 ^ ... ^ dt_k`` on the left survives;
    the result is a pure dx form with the t-variables removed.
    """
    reg = w.reg
    if k is None:
        k = reg.k
    if k != reg.k:
        raise ValueError(f"form lives over a {reg.k}-simplex, not {k}")
    top = (1 << k) - 1
    masks = w.terms.masks
    keep = (masks & top) == top
    t = w.terms.filter(keep)
    t = Terms(t.hdr & ~np.int64(top), t.mono, t.num, t.den) if len(t) else t
    out_reg = reg.without(reg.t_vars)
    if not len(t):
        return BiGradedForm(out_reg, w.tag, w.dim, Terms.empty())
    t, out_reg = integrate_terms(t, reg, list(reg.t_vars))
    t = Terms.make((t.masks >> k) | (t.comps << MASK_BITS), t.mono, t.num, t.den)
    return BiGradedForm(out_reg, w.tag, w.dim, t)


def _delete_t_positional(t: Terms, reg: VarRegistry, j: int) -> tuple[Terms, VarRegistry]:
    """Remove simplex variable ``j`` (exponent and dt bit must be zero) and
    rename the survivors to the first ``k-1`` names."""
    new_reg = VarRegistry(reg.x_vars, reg.t_vars[:-1])
    if not len(t):
        return Terms.empty(), new_reg
    exps = reg.unpack(t.mono)
    col = reg.m + j
    if exps[:, col].any():
        raise AssertionError("variable still present")
    exps = np.delete(exps, col, axis=1)
    mono = new_reg.pack_rows(exps)
    masks = t.masks
    low = masks & ((1 << j) - 1)
    high = masks >> (j + 1)
    new = low | (high << j)
    return Terms.make(new | (t.comps << MASK_BITS), mono, t.num, t.den), new_reg


def face_restrict(w: BiGradedForm, i: int) -> BiGradedForm:
    """Restrict a form over the ``k``-simplex to its ``i``-th face.

    Vertices are ``v_0 = 0`` and ``v_j = e_j``. Face ``i`` omits ``v_i`` and is
    parametrised by the remaining vertices in order, so face ``i >= 1`` sets
    ``t_i = 0`` while face ``0`` sets ``t_1 = 1 - sum_{j>1} t_j``.
    """
    reg = w.reg
    k = reg.k
    if not 0 <= i <= k or k == 0:
        raise ValueError(f"face index {i} outside 0..{k}")
    t = w.terms
    if i >= 1:
        j = i - 1
        keep = ((t.masks >> j) & 1) == 0
        t = t.filter(keep)
        field = (1 << reg.width) - 1
        keep = ((t.mono >> reg.shift(reg.m + j)) & field) == 0
        t = t.filter(keep)
        t, new_reg = _delete_t_positional(t, reg, j)
        return BiGradedForm(new_reg, w.tag, w.dim, t)
    # face 0: t_1 = 1 - sum_{j>=2} t_j, dt_1 = -sum_{j>=2} dt_j
    one_minus = Poly.const(reg, 1)
    for name in reg.t_vars[1:]:
        one_minus = one_minus - Poly.var(reg, name)
    t = substitute_terms(t, reg, reg.m, one_minus.terms)
    masks = t.masks
    has = ((masks >> 0) & 1) == 1
    parts = [(t.filter(~has), 1)]
    if has.any():
        sub = t.filter(has)
        rest = sub.masks & ~np.int64(1)
        for j in range(1, k):
            ok = ((rest >> j) & 1) == 0
            if not ok.any():
                continue
            r = rest[ok]
            sign = -_sign_before(r, j)
            num = sub.num[ok] * (sign if sub.num.dtype == np.int64 else sign.astype(object))
            hdr = (r | (1 << j)) | (sub.comps[ok] << MASK_BITS)
            parts.append((Terms.make(hdr, sub.mono[ok], num, sub.den), 1))
    t, new_reg = _delete_t_positional(combine(parts), reg, 0)
    return BiGradedForm(new_reg, w.tag, w.dim, t)
