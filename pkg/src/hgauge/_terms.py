"""Flat sparse term storage shared by polynomials and forms.

A term array holds parallel columns ``hdr`` (component index above
``MASK_BITS``, grassmann mask below), ``mono`` (packed exponent vector) and
``num`` (integer numerators), plus one common positive denominator. Stored
arrays are always merged, sorted by ``(hdr, mono)``, zero-free and reduced by
the gcd of all numerators and the denominator.
"""
import math
from fractions import Fraction

import numpy as np

from . import kernels
from ._config import INT64_SAFE, MASK_BITS

_EMPTY = np.zeros(0, dtype=np.int64)


class ExponentOverflow(ArithmeticError):
    """A product exceeded the per-variable exponent field of its registry."""


def _l1(num):
    if num.dtype == np.int64:
        return float(np.abs(num.astype(np.float64)).sum())
    return float(sum(abs(int(v)) for v in num))


def _maxabs(num):
    if num.shape[0] == 0:
        return 0.0
    if num.dtype == np.int64:
        return float(np.abs(num.astype(np.float64)).max())
    return float(max(abs(int(v)) for v in num))


def _as_object(num):
    if num.dtype == object:
        return num
    return np.array([int(v) for v in num], dtype=object)


def _fit(num):
    """Downcast big-integer numerators to int64 when every entry fits."""
    if num.dtype == np.int64:
        return num
    if num.shape[0] == 0 or _maxabs(num) < INT64_SAFE:
        return np.array([int(v) for v in num], dtype=np.int64)
    return num


def _gcd_all(num):
    if num.dtype == np.int64:
        return int(np.gcd.reduce(num))
    g = 0
    for v in num:
        g = math.gcd(g, int(v))
        if g == 1:
            break
    return g


class Terms:
    __slots__ = ("hdr", "mono", "num", "den")

    def __init__(self, hdr, mono, num, den):
        self.hdr = hdr
        self.mono = mono
        self.num = num
        self.den = den

    @classmethod
    def empty(cls):
        return cls(_EMPTY, _EMPTY, _EMPTY, 1)

    @classmethod
    def make(cls, hdr, mono, num, den=1):
        """Merge duplicates, drop zeros and reduce to lowest terms."""
        hdr = np.asarray(hdr, dtype=np.int64)
        mono = np.asarray(mono, dtype=np.int64)
        if not isinstance(num, np.ndarray):
            num = np.array([int(v) for v in num], dtype=object)
            num = _fit(num)
        hdr, mono, num = kernels.reduce_terms(hdr, mono, num)
        return cls._normalized(hdr, mono, num, den)

    @classmethod
    def _normalized(cls, hdr, mono, num, den):
        den = int(den)
        if den == 0:
            raise ZeroDivisionError("zero denominator")
        if num.shape[0] == 0:
            return cls.empty()
        if den < 0:
            num = -num
            den = -den
        g = math.gcd(_gcd_all(num), den)
        if g > 1:
            num = num // g
            den //= g
        return cls(hdr, mono, _fit(num), den)

    def __len__(self):
        return int(self.hdr.shape[0])

    @property
    def comps(self):
        return self.hdr >> MASK_BITS

    @property
    def masks(self):
        return self.hdr & ((1 << MASK_BITS) - 1)

    def coefficients(self):
        return [Fraction(int(v), self.den) for v in self.num]

    def filter(self, keep):
        keep = np.asarray(keep, dtype=bool)
        if keep.all():
            return self
        return Terms._normalized(self.hdr[keep], self.mono[keep], self.num[keep], self.den)

    def with_columns(self, hdr=None, mono=None, num=None, den=None):
        """Rebuild after rewriting columns (re-merges and re-normalises)."""
        return Terms.make(
            self.hdr if hdr is None else hdr,
            self.mono if mono is None else mono,
            self.num if num is None else num,
            self.den if den is None else den,
        )

    def equals(self, other):
        return (
            self.den == other.den
            and np.array_equal(self.hdr, other.hdr)
            and np.array_equal(self.mono, other.mono)
            and all(int(a) == int(b) for a, b in zip(self.num, other.num))
            and len(self) == len(other)
        )

    def comp_slices(self):
        """Mapping comp -> slice over the (comp-major) sorted term arrays."""
        comps = self.comps
        if comps.shape[0] == 0:
            return {}
        cuts = np.flatnonzero(np.diff(comps)) + 1
        starts = np.concatenate(([0], cuts))
        stops = np.concatenate((cuts, [comps.shape[0]]))
        return {int(comps[a]): slice(int(a), int(b)) for a, b in zip(starts, stops)}


def combine(parts):
    """Exact linear combination ``sum(coeff * terms)`` over ``(Terms, Fraction)`` pairs."""
    parts = [(t, Fraction(c)) for t, c in parts if len(t) and c != 0]
    if not parts:
        return Terms.empty()
    if len(parts) == 1 and parts[0][1] == 1:
        return parts[0][0]
    common = 1
    for t, c in parts:
        d = t.den * c.denominator
        common = common * d // math.gcd(common, d)
    scaled = []
    bound = 0.0
    for t, c in parts:
        factor = c.numerator * (common // (t.den * c.denominator))
        scaled.append((t, factor))
        bound += _maxabs(t.num) * abs(factor)
    big = bound >= INT64_SAFE or any(t.num.dtype == object for t, _ in parts)
    hdrs, monos, nums = [], [], []
    for t, factor in scaled:
        hdrs.append(t.hdr)
        monos.append(t.mono)
        num = _as_object(t.num) if big else t.num
        nums.append(num * factor)
    num = np.concatenate(nums) if not big else np.concatenate(nums).astype(object)
    return Terms.make(np.concatenate(hdrs), np.concatenate(monos), num, common)


def rational_table(entries):
    """Integer numerators over a common denominator for a list of Fractions."""
    fr = [Fraction(v) for v in entries]
    den = 1
    for v in fr:
        den = den * v.denominator // math.gcd(den, v.denominator)
    return [v.numerator * (den // v.denominator) for v in fr], den


def product(t1, t2, blocks, vden, guard):
    """Graded bilinear product.

    ``blocks`` maps ``(c1, c2)`` to a list of ``(c3, vnum)``; the result is
    ``sum vnum/vden * t1[c1] ^ t2[c2]`` placed in component ``c3``. Wedge
    signs come from the grassmann masks.
    """
    if not len(t1) or not len(t2) or not blocks:
        return Terms.empty()
    s1 = t1.comp_slices()
    s2 = t2.comp_slices()
    work = []
    bound = 0.0
    for (c1, c2), outs in blocks.items():
        a = s1.get(c1)
        b = s2.get(c2)
        if a is None or b is None:
            continue
        vsum = float(sum(abs(v) for _, v in outs))
        bound += _l1(t1.num[a]) * _l1(t2.num[b]) * vsum
        work.append((a, b, outs))
    if not work:
        return Terms.empty()
    big = bound >= INT64_SAFE or t1.num.dtype == object or t2.num.dtype == object
    n1 = _as_object(t1.num) if big else t1.num
    n2 = _as_object(t2.num) if big else t2.num
    masks1, masks2 = t1.masks, t2.masks
    hdrs, monos, nums = [], [], []
    pending = 0
    for a, b, outs in work:
        mask, mono, num, overflow = kernels.block_product(
            t1.mono[a], masks1[a], n1[a], t2.mono[b], masks2[b], n2[b], guard
        )
        if overflow:
            raise ExponentOverflow("exponent exceeds registry field width")
        if mask.shape[0] == 0:
            continue
        mask, mono, num = kernels.reduce_terms(mask, mono, num)
        for c3, v in outs:
            hdrs.append(mask | (c3 << MASK_BITS))
            monos.append(mono)
            nums.append(num * v)
            pending += mask.shape[0]
        if pending > 4_000_000:
            h, m, n = kernels.reduce_terms(
                np.concatenate(hdrs), np.concatenate(monos), np.concatenate(nums)
            )
            hdrs, monos, nums = [h], [m], [n]
            pending = h.shape[0]
    if not hdrs:
        return Terms.empty()
    return Terms.make(
        np.concatenate(hdrs), np.concatenate(monos), np.concatenate(nums), t1.den * t2.den * vden
    )


def map_comps(t, mapping, vden):
    """Apply a constant linear map on the component index: ``c -> [(c', vnum)]``."""
    if not len(t):
        return t
    slices = t.comp_slices()
    masks = t.masks
    bound = 0.0
    for c, outs in mapping.items():
        sl = slices.get(c)
        if sl is not None:
            bound += _maxabs(t.num[sl]) * sum(abs(v) for _, v in outs)
    big = t.num.dtype == object or bound >= INT64_SAFE
    num_all = _as_object(t.num) if big else t.num
    hdrs, monos, nums = [], [], []
    for c, outs in mapping.items():
        sl = slices.get(c)
        if sl is None:
            continue
        for c2, v in outs:
            hdrs.append(masks[sl] | (c2 << MASK_BITS))
            monos.append(t.mono[sl])
            nums.append(num_all[sl] * v)
    if not hdrs:
        return Terms.empty()
    return Terms.make(np.concatenate(hdrs), np.concatenate(monos), np.concatenate(nums), t.den * vden)
