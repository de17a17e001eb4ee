"""Exact rational multivariate polynomials over a fixed variable registry.

Coefficients are :class:`fractions.Fraction` at the API boundary and integer
numerators over a shared denominator internally. Exponent vectors are packed
into one int64 per monomial; every variable gets a fixed-width field whose top
bit is a guard, so carries out of a field are detected instead of silently
corrupting the neighbouring variable.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Mapping, Sequence

import numpy as np

from ._terms import Terms, combine, product

Rational = Fraction

__all__ = [
    "Rational",
    "VarRegistry",
    "Poly",
    "RegistryMismatch",
    "poly_add",
    "poly_mul",
    "poly_diff",
    "simplex_integrate",
    "dirichlet_weight",
]


class RegistryMismatch(ValueError):
    pass


@dataclass(frozen=True)
class VarRegistry:
    """Ordered spacetime variables followed by parameter variables."""

    x_vars: tuple[str, ...]
    t_vars: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "x_vars", tuple(self.x_vars))
        object.__setattr__(self, "t_vars", tuple(self.t_vars))
        names = self.x_vars + self.t_vars
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate variable names in {names}")
        if not self.x_vars:
            raise ValueError("at least one spacetime variable is required")
        if len(names) > 15:
            raise ValueError("at most 15 variables fit the packed exponent layout")

    @classmethod
    def standard(cls, m: int, k: int = 0) -> "VarRegistry":
        return cls(tuple(f"x{i + 1}" for i in range(m)), tuple(f"t{j + 1}" for j in range(k)))

    @property
    def names(self) -> tuple[str, ...]:
        return self.x_vars + self.t_vars

    @property
    def m(self) -> int:
        return len(self.x_vars)

    @property
    def k(self) -> int:
        return len(self.t_vars)

    @property
    def nvars(self) -> int:
        return len(self.x_vars) + len(self.t_vars)

    @property
    def width(self) -> int:
        return min(16, 63 // self.nvars)

    @property
    def max_exponent(self) -> int:
        return (1 << (self.width - 1)) - 1

    @property
    def guard(self) -> int:
        g = 0
        for i in range(self.nvars):
            g |= 1 << (i * self.width + self.width - 1)
        return g

    def shift(self, i: int) -> int:
        return i * self.width

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise KeyError(f"unknown variable {name!r}") from None

    def without(self, names: Iterable[str]) -> "VarRegistry":
        drop = set(names)
        for n in drop:
            self.index(n)
        return VarRegistry(
            tuple(v for v in self.x_vars if v not in drop),
            tuple(v for v in self.t_vars if v not in drop),
        )

    def with_t(self, names: Sequence[str]) -> "VarRegistry":
        return VarRegistry(self.x_vars, self.t_vars + tuple(names))

    def pack(self, exps: Sequence[int]) -> int:
        if len(exps) != self.nvars:
            raise ValueError(f"exponent vector of length {len(exps)}, expected {self.nvars}")
        mono = 0
        for i, e in enumerate(exps):
            if e < 0 or e > self.max_exponent:
                raise ValueError(f"exponent {e} outside 0..{self.max_exponent}")
            mono |= int(e) << self.shift(i)
        return mono

    def unpack(self, mono: np.ndarray) -> np.ndarray:
        mono = np.asarray(mono, dtype=np.int64)
        field = (1 << self.width) - 1
        out = np.empty((mono.shape[0], self.nvars), dtype=np.int64)
        for i in range(self.nvars):
            out[:, i] = (mono >> self.shift(i)) & field
        return out

    def pack_rows(self, exps: np.ndarray) -> np.ndarray:
        exps = np.asarray(exps, dtype=np.int64).reshape(-1, self.nvars)
        if exps.size and (exps.max() > self.max_exponent or exps.min() < 0):
            raise ValueError("exponent outside the packed field range")
        mono = np.zeros(exps.shape[0], dtype=np.int64)
        for i in range(self.nvars):
            mono |= exps[:, i] << self.shift(i)
        return mono


def repack(mono: np.ndarray, src: VarRegistry, dst: VarRegistry) -> np.ndarray:
    """Re-express packed monomials of ``src`` in ``dst`` (variables matched by name)."""
    if src == dst:
        return mono
    exps = src.unpack(mono)
    out = np.zeros((exps.shape[0], dst.nvars), dtype=np.int64)
    for i, name in enumerate(src.names):
        if name in dst.names:
            out[:, dst.index(name)] = exps[:, i]
        elif exps.shape[0] and exps[:, i].any():
            raise RegistryMismatch(f"variable {name!r} is not in the target registry")
    return dst.pack_rows(out)


@lru_cache(maxsize=None)
def _fact(n: int) -> int:
    return math.factorial(n)


def dirichlet_weight(exps: Sequence[int]) -> Fraction:
    """Integral of ``prod t_i**a_i`` over the standard simplex in ``len(exps)`` variables."""
    k = len(exps)
    num = 1
    for a in exps:
        num *= _fact(int(a))
    return Fraction(num, _fact(int(sum(exps)) + k))


_SCALAR = (0, 0)
_SCALAR_BLOCKS = {_SCALAR: [(0, 1)]}

_TOKEN = re.compile(r"\s*(?:(\d+(?:/\d+)?)|([A-Za-z_][A-Za-z_0-9]*)|(\^|\*|\+|-))")


class Poly:
    """Immutable sparse polynomial with exact rational coefficients."""

    __slots__ = ("reg", "terms")

    def __init__(self, reg: VarRegistry, terms: Terms):
        self.reg = reg
        self.terms = terms

    # construction -----------------------------------------------------
    @classmethod
    def zero(cls, reg: VarRegistry) -> "Poly":
        return cls(reg, Terms.empty())

    @classmethod
    def const(cls, reg: VarRegistry, c) -> "Poly":
        c = Fraction(c)
        if c == 0:
            return cls.zero(reg)
        return cls(reg, Terms.make([0], [0], [c.numerator], c.denominator))

    @classmethod
    def var(cls, reg: VarRegistry, name: str) -> "Poly":
        return cls(reg, Terms.make([0], [1 << reg.shift(reg.index(name))], [1]))

    @classmethod
    def from_dict(cls, reg: VarRegistry, coeffs: Mapping) -> "Poly":
        """Build from ``{exponent tuple or {name: exp}: coefficient}``."""
        monos, fr = [], []
        for key, c in coeffs.items():
            if isinstance(key, Mapping):
                exps = [0] * reg.nvars
                for name, e in key.items():
                    exps[reg.index(name)] = e
            else:
                exps = list(key)
            monos.append(reg.pack(exps))
            fr.append(Fraction(c))
        if not monos:
            return cls.zero(reg)
        den = 1
        for v in fr:
            den = den * v.denominator // math.gcd(den, v.denominator)
        nums = [v.numerator * (den // v.denominator) for v in fr]
        return cls(reg, Terms.make(np.zeros(len(monos), dtype=np.int64), monos, nums, den))

    @classmethod
    def parse(cls, reg: VarRegistry, text: str) -> "Poly":
        """Parse a sum of monomials such as ``"3/2*x1^2*t1 - x2 + 1/2"``."""
        pos = 0
        tokens = []
        text = text.strip()
        while pos < len(text):
            m = _TOKEN.match(text, pos)
            if not m or m.end() == pos:
                raise ValueError(f"unexpected character at column {pos + 1}: {text[pos:pos + 8]!r}")
            tokens.append((m.group(1), m.group(2), m.group(3), m.start() + 1))
            pos = m.end()
        result: dict[tuple, Fraction] = {}
        i = 0
        if not tokens:
            raise ValueError("empty polynomial")
        while i < len(tokens):
            sign = 1
            while i < len(tokens) and tokens[i][2] in ("+", "-"):
                if tokens[i][2] == "-":
                    sign = -sign
                i += 1
            coeff = Fraction(sign)
            exps = [0] * reg.nvars
            expect_factor = True
            while i < len(tokens) and tokens[i][2] not in ("+", "-"):
                num, name, op, col = tokens[i]
                if expect_factor:
                    if num is not None:
                        coeff *= Fraction(num)
                    elif name is not None:
                        try:
                            vi = reg.index(name)
                        except KeyError:
                            raise ValueError(f"unknown variable {name!r} at column {col}") from None
                        power = 1
                        if i + 1 < len(tokens) and tokens[i + 1][2] == "^":
                            if i + 2 >= len(tokens) or tokens[i + 2][0] is None or "/" in tokens[i + 2][0]:
                                raise ValueError(f"integer exponent expected after column {col}")
                            power = int(tokens[i + 2][0])
                            i += 2
                        exps[vi] += power
                    else:
                        raise ValueError(f"factor expected at column {col}")
                    expect_factor = False
                elif op == "*":
                    expect_factor = True
                else:
                    raise ValueError(f"'*' expected at column {col}")
                i += 1
            if expect_factor:
                raise ValueError("dangling operator at end of term")
            key = tuple(exps)
            result[key] = result.get(key, Fraction(0)) + coeff
        return cls.from_dict(reg, result)

    # inspection -------------------------------------------------------
    def to_dict(self) -> dict[tuple[int, ...], Fraction]:
        exps = self.reg.unpack(self.terms.mono)
        return {tuple(int(e) for e in row): c for row, c in zip(exps, self.terms.coefficients())}

    @property
    def nterms(self) -> int:
        return len(self.terms)

    def is_zero(self) -> bool:
        return len(self.terms) == 0

    def degree(self, names: Iterable[str] | None = None) -> int:
        if self.is_zero():
            return -1
        exps = self.reg.unpack(self.terms.mono)
        if names is not None:
            exps = exps[:, [self.reg.index(n) for n in names]]
        return int(exps.sum(axis=1).max())

    def evaluate(self, values: Mapping[str, Fraction]) -> Fraction:
        """Exact value at a point; every registry variable must be assigned."""
        point = [Fraction(values[n]) for n in self.reg.names]
        total = Fraction(0)
        for exps, c in self.to_dict().items():
            term = c
            for v, e in zip(point, exps):
                if e:
                    term *= v**e
            total += term
        return total

    # arithmetic -------------------------------------------------------
    def _coerce(self, other) -> "Poly":
        if isinstance(other, Poly):
            if other.reg != self.reg:
                raise RegistryMismatch("polynomials live on different registries")
            return other
        if isinstance(other, (int, Fraction)):
            return Poly.const(self.reg, other)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return Poly(self.reg, combine([(self.terms, 1), (other.terms, 1)]))

    __radd__ = __add__

    def __neg__(self):
        return Poly(self.reg, combine([(self.terms, -1)]))

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return Poly(self.reg, combine([(self.terms, 1), (other.terms, -1)]))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return Poly(self.reg, combine([(self.terms, Fraction(other))]))
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return Poly(self.reg, product(self.terms, other.terms, _SCALAR_BLOCKS, 1, self.reg.guard))

    __rmul__ = __mul__

    def __pow__(self, e: int):
        out = Poly.const(self.reg, 1)
        for _ in range(e):
            out = out * self
        return out

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = Poly.const(self.reg, other)
        if not isinstance(other, Poly):
            return NotImplemented
        return self.reg == other.reg and self.terms.equals(other.terms)

    def __hash__(self):
        return hash((self.reg, tuple(self.terms.mono.tolist())))

    def __repr__(self):
        if self.is_zero():
            return "0"
        parts = []
        for exps, c in sorted(self.to_dict().items(), reverse=True):
            factors = [f"{n}^{e}" if e > 1 else n for n, e in zip(self.reg.names, exps) if e]
            mag = abs(c)
            body = "*".join(([str(mag)] if mag != 1 or not factors else []) + factors)
            parts.append(("-" if c < 0 else "+") + " " + body)
        s = " ".join(parts)
        return s[2:] if s.startswith("+ ") else "-" + s[2:]

    # calculus ---------------------------------------------------------
    def diff(self, name: str) -> "Poly":
        return Poly(self.reg, diff_terms(self.terms, self.reg, self.reg.index(name)))

    def substitute(self, name: str, value: "Poly") -> "Poly":
        value = self._coerce(value)
        return Poly(self.reg, substitute_terms(self.terms, self.reg, self.reg.index(name), value.terms))

    def to_registry(self, reg: VarRegistry) -> "Poly":
        t = self.terms
        return Poly(reg, Terms(t.hdr, repack(t.mono, self.reg, reg), t.num, t.den))

    def integrate_simplex(self, names: Sequence[str]) -> "Poly":
        return simplex_integrate(self, names)


def diff_terms(t: Terms, reg: VarRegistry, vi: int) -> Terms:
    field = (1 << reg.width) - 1
    e = (t.mono >> reg.shift(vi)) & field
    keep = e > 0
    if not keep.any():
        return Terms.empty()
    num = t.num[keep] * e[keep] if t.num.dtype == np.int64 else t.num[keep] * e[keep].astype(object)
    return Terms.make(t.hdr[keep], t.mono[keep] - (1 << reg.shift(vi)), num, t.den)


def split_by_exponent(t: Terms, reg: VarRegistry, vi: int) -> dict[int, Terms]:
    """Group terms by the exponent of one variable, stripping that variable."""
    field = (1 << reg.width) - 1
    e = (t.mono >> reg.shift(vi)) & field
    out = {}
    for power in np.unique(e):
        sel = e == power
        out[int(power)] = Terms._normalized(
            t.hdr[sel], t.mono[sel] - (int(power) << reg.shift(vi)), t.num[sel], t.den
        )
    return out


def substitute_terms(t: Terms, reg: VarRegistry, vi: int, value: Terms) -> Terms:
    """Replace variable ``vi`` by the scalar polynomial ``value`` (hdr 0)."""
    groups = split_by_exponent(t, reg, vi)
    if not groups:
        return t
    top = max(groups)
    powers = [Terms.make([0], [0], [1])]
    for _ in range(top):
        powers.append(product(powers[-1], value, _SCALAR_BLOCKS, 1, reg.guard))
    parts = []
    comps = set()
    for e, g in groups.items():
        comps.update(int(c) for c in np.unique(g.comps))
    for e, g in groups.items():
        # broadcast the scalar power onto every component by multiplying per comp
        blocks = {(c, 0): [(c, 1)] for c in comps}
        parts.append((product(g, powers[e], blocks, 1, reg.guard), 1))
    return combine(parts)


def _check_same(p: Poly, q: Poly):
    if p.reg != q.reg:
        raise RegistryMismatch("polynomials live on different registries")


def poly_add(p: Poly, q: Poly) -> Poly:
    _check_same(p, q)
    return p + q


def poly_mul(p: Poly, q: Poly) -> Poly:
    _check_same(p, q)
    return p * q


def poly_diff(p: Poly, var: str) -> Poly:
    return p.diff(var)


def integrate_terms(t: Terms, reg: VarRegistry, names: Sequence[str]) -> tuple[Terms, VarRegistry]:
    idx = [reg.index(n) for n in names]
    out_reg = reg.without(names)
    if not len(t):
        return Terms.empty(), out_reg
    exps = reg.unpack(t.mono)
    sub = exps[:, idx]
    keys, inverse = np.unique(sub, axis=0, return_inverse=True)
    inverse = inverse.reshape(-1)
    strip = t.mono.copy()
    for i in idx:
        strip -= exps[:, i] << reg.shift(i)
    strip = repack(strip, reg, out_reg)
    parts = []
    for g, key in enumerate(keys):
        sel = inverse == g
        piece = Terms._normalized(t.hdr[sel], strip[sel], t.num[sel], t.den)
        parts.append((piece, dirichlet_weight([int(a) for a in key])))
    return combine(parts), out_reg


def simplex_integrate(p: Poly, t_subset: Sequence[str]) -> Poly:
    """Exact integral over ``{t_i >= 0, sum t_i <= 1}`` in the listed variables.

    The result lives on the registry with those variables removed.
    """
    terms, reg = integrate_terms(p.terms, p.reg, list(t_subset))
    return Poly(reg, terms)
