"""Exact arithmetic in K = Q(i, theta), theta^4 = m, with m = 4n+2 or 4n+3 symbolic in n.

An element is stored as a common power-of-two denominator and eight integer
polynomial numerators on the monomial basis ``i^a theta^b`` (index ``4a + b``):

    1, theta, theta^2, theta^3, i, i*theta, i*theta^2, i*theta^3

Embeddings are indexed ``(j, k)`` with j in {1, 2}, k in {1, 2, 3, 4}:
i maps to i for j = 1 and to -i for j = 2, and theta maps to i^(k-1) theta.
Every conjugate is again expressed inside K through this fixed identification,
so products of conjugates can be reduced with the same rules as elements.
"""
from __future__ import annotations

import enum
from fractions import Fraction
from typing import Callable, Iterable, Sequence

from .polyring import DyadicPolynomial, IntPolynomial, _v2

BASIS_LABELS = ("1", "θ", "θ^2", "θ^3", "i", "i*θ", "i*θ^2", "i*θ^3")
EMBEDDINGS = tuple((j, k) for j in (1, 2) for k in (1, 2, 3, 4))


class CaseMismatch(ValueError):
    pass


class NotRational(ArithmeticError):
    def __init__(self, index: int, coord):
        super().__init__(f"coordinate {BASIS_LABELS[index]} is nonzero: {coord}")
        self.index = index
        self.coord = coord


class NotIntegral(ArithmeticError):
    def __init__(self, value: DyadicPolynomial):
        super().__init__(f"denominator 2^{value.denom_exp} remains")
        self.value = value


class CaseTag(enum.Enum):
    CASE_I = 2
    CASE_II = 3

    @property
    def residue(self) -> int:
        return self.value

    @property
    def m_poly(self) -> IntPolynomial:
        return 4 * IntPolynomial.var("n") + self.value

    @property
    def label(self) -> str:
        return "I" if self is CaseTag.CASE_I else "II"

    @classmethod
    def from_residue(cls, r: int) -> "CaseTag":
        if r % 4 == 2:
            return cls.CASE_I
        if r % 4 == 3:
            return cls.CASE_II
        raise ValueError(f"m must be 2 or 3 mod 4, got residue {r % 4}")


def _coerce_coord(c) -> tuple[IntPolynomial, int]:
    """Return (numerator, denom_exp) for an int, Fraction, IntPolynomial or DyadicPolynomial."""
    if isinstance(c, DyadicPolynomial):
        return c.numerator, c.denom_exp
    if isinstance(c, IntPolynomial):
        return c, 0
    if isinstance(c, Fraction):
        d = c.denominator
        if d & (d - 1):
            raise ValueError(f"non-dyadic coordinate {c}")
        return IntPolynomial.const(c.numerator), d.bit_length() - 1
    return IntPolynomial.const(int(c)), 0


class FieldElement:
    __slots__ = ("nums", "k", "case")

    def __init__(self, coords: Sequence, case: CaseTag):
        if len(coords) != 8:
            raise ValueError("a field element needs 8 coordinates")
        parts = [_coerce_coord(c) for c in coords]
        k = max(d for _, d in parts)
        nums = tuple(p * (1 << (k - d)) if d < k else p for p, d in parts)
        self._set(nums, k, case)

    def _set(self, nums, k, case):
        # strip common factors of 2 from the denominator
        if k:
            v = None
            for p in nums:
                for c in p._terms.values():
                    w = _v2(c)
                    if v is None or w < v:
                        v = w
                    if v == 0:
                        break
                if v == 0:
                    break
            if v is None:
                k = 0
            elif v:
                s = min(v, k)
                nums = tuple(IntPolynomial._make({key: c >> s for key, c in p._terms.items()}, p._gens)
                             for p in nums)
                k -= s
        self.nums = nums
        self.k = k
        self.case = case

    @classmethod
    def _raw(cls, nums, k, case) -> "FieldElement":
        obj = cls.__new__(cls)
        obj._set(tuple(nums), k, case)
        return obj

    # -- constructors -------------------------------------------------------
    @classmethod
    def rational(cls, c, case: CaseTag) -> "FieldElement":
        return cls([c] + [0] * 7, case)

    @classmethod
    def one(cls, case: CaseTag) -> "FieldElement":
        return cls.rational(1, case)

    @classmethod
    def i(cls, case: CaseTag) -> "FieldElement":
        return cls.monomial(1, 0, case)

    @classmethod
    def theta(cls, case: CaseTag) -> "FieldElement":
        return cls.monomial(0, 1, case)

    @classmethod
    def monomial(cls, a: int, b: int, case: CaseTag, coeff=1) -> "FieldElement":
        coords = [0] * 8
        coords[4 * a + b] = coeff
        return cls(coords, case)

    # -- accessors ----------------------------------------------------------
    @property
    def coords(self) -> tuple[DyadicPolynomial, ...]:
        return tuple(DyadicPolynomial(p, self.k) for p in self.nums)

    def coord(self, a: int, b: int) -> DyadicPolynomial:
        return DyadicPolynomial(self.nums[4 * a + b], self.k)

    def is_zero(self) -> bool:
        return all(p.is_zero() for p in self.nums)

    def is_rational(self) -> bool:
        return all(p.is_zero() for p in self.nums[1:])

    def _gens(self, other: "FieldElement | None" = None) -> tuple[str, ...]:
        g = set(self.nums[0].gens)
        for p in self.nums[1:]:
            g.update(p.gens)
        if other is not None:
            for p in other.nums:
                g.update(p.gens)
        return tuple(g)

    # -- arithmetic ---------------------------------------------------------
    def _check(self, other: "FieldElement"):
        if self.case is not other.case:
            raise CaseMismatch(f"{self.case.name} vs {other.case.name}")

    def _lift(self, k: int):
        if k == self.k:
            return self.nums
        f = 1 << (k - self.k)
        return tuple(p * f for p in self.nums)

    def _coerce(self, other) -> "FieldElement":
        if isinstance(other, FieldElement):
            self._check(other)
            return other
        if isinstance(other, (int, Fraction, IntPolynomial, DyadicPolynomial)):
            return FieldElement.rational(other, self.case)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        k = max(self.k, other.k)
        return FieldElement._raw([a + b for a, b in zip(self._lift(k), other._lift(k))], k, self.case)

    __radd__ = __add__

    def __neg__(self):
        return FieldElement._raw([-p for p in self.nums], self.k, self.case)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        gens = self._gens(other) + ("n",)
        low = [[] for _ in range(8)]
        high = [[] for _ in range(8)]
        for ia, pa in enumerate(self.nums):
            if pa.is_zero():
                continue
            a1, b1 = divmod(ia, 4)
            for ib, pb in enumerate(other.nums):
                if pb.is_zero():
                    continue
                a2, b2 = divmod(ib, 4)
                a, b = a1 + a2, b1 + b2
                sign = -1 if a == 2 else 1
                idx = 4 * (a % 2) + b % 4
                (high if b >= 4 else low)[idx].append((pa, pb, sign))
        m = self.case.m_poly
        out = []
        for idx in range(8):
            lo = IntPolynomial.sum_of_products(low[idx], gens)
            if high[idx]:
                hi = IntPolynomial.sum_of_products(high[idx], gens)
                lo = lo + m * hi
            out.append(lo)
        return FieldElement._raw(out, self.k + other.k, self.case)

    __rmul__ = __mul__

    def __pow__(self, e: int):
        if e < 0:
            raise ValueError("negative powers are not supported")
        result = FieldElement.one(self.case)
        base = self
        while e:
            if e & 1:
                result = result * base
            e >>= 1
            if e:
                base = base * base
        return result

    def div_pow2(self, s: int) -> "FieldElement":
        return FieldElement._raw(self.nums, self.k + s, self.case)

    def __eq__(self, other):
        if not isinstance(other, FieldElement):
            try:
                other = FieldElement.rational(other, self.case)
            except (TypeError, ValueError):
                return NotImplemented
        return self.case is other.case and self.k == other.k and self.nums == other.nums

    def __hash__(self):
        return hash((self.case, self.k, self.nums))

    def substitute(self, bindings) -> "FieldElement":
        return FieldElement._raw([p.substitute(bindings) for p in self.nums], self.k, self.case)

    def __str__(self):
        parts = []
        for label, c in zip(BASIS_LABELS, self.coords):
            if c.is_zero():
                continue
            s = str(c)
            if label == "1":
                parts.append(s)
            else:
                if len(c.numerator) > 1 and c.denom_exp == 0:
                    s = f"({s})"
                parts.append(f"{s}*{label}" if s not in ("1", "-1") else ("-" if s == "-1" else "") + label)
        return " + ".join(parts) if parts else "0"

    def __repr__(self):
        return f"FieldElement({self}, {self.case.name})"


def product(elements: Iterable[FieldElement]) -> FieldElement:
    """Balanced-tree product, which keeps intermediate sizes even."""
    items = list(elements)
    if not items:
        raise ValueError("empty product")
    while len(items) > 1:
        nxt = [items[i] * items[i + 1] for i in range(0, len(items) - 1, 2)]
        if len(items) % 2:
            nxt.append(items[-1])
        items = nxt
    return items[0]


# (a, b) -> (sign, a') for each embedding, precomputed
_I_POWER = {0: (1, 0), 1: (1, 1), 2: (-1, 0), 3: (-1, 1)}


def conjugate(e: FieldElement, j: int, k: int) -> FieldElement:
    """Image of ``e`` under i -> (+/-)i (sign by j), theta -> i^(k-1) theta."""
    if j not in (1, 2) or k not in (1, 2, 3, 4):
        raise ValueError(f"bad embedding index ({j}, {k})")
    eps = 1 if j == 1 else -1
    out = [None] * 8
    for idx, p in enumerate(e.nums):
        a, b = divmod(idx, 4)
        s, a2 = _I_POWER[(a + (k - 1) * b) % 4]
        if a and eps < 0:
            s = -s
        out[4 * a2 + b] = p if s > 0 else -p
    return FieldElement._raw(out, e.k, e.case)


def conjugates(e: FieldElement) -> dict[tuple[int, int], FieldElement]:
    return {jk: conjugate(e, *jk) for jk in EMBEDDINGS}


def norm_over_M(fn: Callable[[int], FieldElement]) -> FieldElement:
    """Product of ``fn(1)`` and ``fn(2)``: the norm from K down to Q(theta)-side
    expression indexed by the sign of i."""
    return fn(1) * fn(2)


def assert_rational(e: FieldElement, integral: bool = False) -> DyadicPolynomial:
    for idx in range(1, 8):
        if not e.nums[idx].is_zero():
            raise NotRational(idx, e.coord(*divmod(idx, 4)))
    value = DyadicPolynomial(e.nums[0], e.k)
    if integral and value.denom_exp:
        raise NotIntegral(value)
    return value


def norm_K_Q(e: FieldElement) -> DyadicPolynomial:
    return assert_rational(product(conjugate(e, j, k) for j, k in EMBEDDINGS))


def min_poly(e: FieldElement) -> list[DyadicPolynomial]:
    """Coefficients of prod over embeddings of (X - e^(j,k)), lowest degree first.

    This is the characteristic polynomial of ``e``; it equals a power of the
    minimal polynomial, so integrality of its coefficients is equivalent.
    """
    coeffs = [FieldElement.one(e.case)]
    for j, k in EMBEDDINGS:
        c = conjugate(e, j, k)
        nxt = [None] * (len(coeffs) + 1)
        nxt[-1] = coeffs[-1]
        for d in range(len(coeffs) - 1, 0, -1):
            nxt[d] = coeffs[d - 1] - c * coeffs[d]
        nxt[0] = -(c * coeffs[0])
        coeffs = nxt
    return [assert_rational(c) for c in coeffs]
