"""Fixed-m arithmetic in Q(i, m^(1/4)) and indices computed straight from discriminants.

Nothing here goes through the S/Q factor pipeline: an element is built from
the integral basis at a concrete m, the 28 conjugate differences are
multiplied out, and the index is sqrt(|D(alpha)| / |D_K|).  It serves as the
reference for the symbolic index form.
"""
from __future__ import annotations

import math
import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

from .field_algebra import EMBEDDINGS, CaseTag
from .index_form import COORD_VARS, IndexForm, index_symbolic
from .integral_basis import known_basis
from .polyring import IntPolynomial

__all__ = [
    "NumericFieldElement", "NotPrimitive", "NonSquareQuotient", "Mismatch",
    "specialize", "direct_index", "field_discriminant", "crosscheck", "CrosscheckReport",
]


class NotPrimitive(ArithmeticError):
    pass


class NonSquareQuotient(ArithmeticError):
    pass


class Mismatch(AssertionError):
    def __init__(self, m: int, coords: Sequence[int], direct: int, symbolic: int):
        super().__init__(f"m={m} x={list(coords)}: direct index {direct} != symbolic {symbolic}")
        self.m, self.coords, self.direct, self.symbolic = m, tuple(coords), direct, symbolic


def _squarefree(m: int) -> bool:
    m = abs(m)
    d = 2
    while d * d <= m:
        if m % (d * d) == 0:
            return False
        d += 1
    return True


def case_of(m: int) -> CaseTag:
    if not _squarefree(m):
        raise ValueError(f"m={m} is not square-free")
    return CaseTag.from_residue(m)


def n_of(m: int) -> int:
    return (m - case_of(m).residue) // 4


class NumericFieldElement:
    """Eight Fraction coordinates on i^a theta^b (index 4a+b), theta^4 = m."""

    __slots__ = ("c", "m")

    def __init__(self, coords: Sequence, m: int):
        if len(coords) != 8:
            raise ValueError("a field element needs 8 coordinates")
        if m % 4 not in (2, 3):
            raise ValueError(f"m must be 2 or 3 mod 4, got {m}")
        self.c = tuple(Fraction(x) for x in coords)
        self.m = m

    @classmethod
    def rational(cls, q, m: int) -> "NumericFieldElement":
        return cls([q] + [0] * 7, m)

    def __add__(self, other: "NumericFieldElement"):
        return NumericFieldElement([a + b for a, b in zip(self.c, other.c)], self.m)

    def __sub__(self, other: "NumericFieldElement"):
        return NumericFieldElement([a - b for a, b in zip(self.c, other.c)], self.m)

    def __neg__(self):
        return NumericFieldElement([-a for a in self.c], self.m)

    def scale(self, q) -> "NumericFieldElement":
        return NumericFieldElement([a * q for a in self.c], self.m)

    def __mul__(self, other: "NumericFieldElement"):
        out = [Fraction(0)] * 8
        for ia, x in enumerate(self.c):
            if not x:
                continue
            a1, b1 = divmod(ia, 4)
            for ib, y in enumerate(other.c):
                if not y:
                    continue
                a2, b2 = divmod(ib, 4)
                v = x * y
                a, b = a1 + a2, b1 + b2
                if a == 2:
                    v, a = -v, 0
                if b >= 4:
                    v, b = v * self.m, b - 4
                out[4 * a + b] += v
        return NumericFieldElement(out, self.m)

    def conjugate(self, j: int, k: int) -> "NumericFieldElement":
        out = [Fraction(0)] * 8
        for idx, x in enumerate(self.c):
            a, b = divmod(idx, 4)
            # i^a theta^b -> (+/-i)^a (i^(k-1) theta)^b
            p = (a + (k - 1) * b) % 4
            sign = -1 if p >= 2 else 1
            if a and j == 2:
                sign = -sign
            out[4 * (p % 2) + b] += sign * x
        return NumericFieldElement(out, self.m)

    def is_zero(self) -> bool:
        return not any(self.c)

    def rational_value(self) -> Fraction:
        if any(self.c[1:]):
            raise ArithmeticError(f"not rational: {self.c}")
        return self.c[0]

    def __eq__(self, other):
        return isinstance(other, NumericFieldElement) and self.m == other.m and self.c == other.c

    def __hash__(self):
        return hash((self.c, self.m))

    def __repr__(self):
        return f"NumericFieldElement({[str(x) for x in self.c]}, m={self.m})"


def specialize(p: IntPolynomial, bindings: Mapping[str, int]) -> int:
    """Exact value of ``p``; raises UnboundVariable for a missing variable."""
    return p.evaluate(bindings)


def numeric_basis(m: int) -> list[NumericFieldElement]:
    n = n_of(m)
    out = []
    for e in known_basis(case_of(m)).elements:
        out.append(NumericFieldElement([c.evaluate({"n": n}) for c in e.coords], m))
    return out


def field_discriminant(m: int) -> int:
    """|D_K| = 2^18 m^6 (m = 2 mod 4) or 2^16 m^6 (m = 3 mod 4)."""
    return (2 ** 18 if case_of(m) is CaseTag.CASE_I else 2 ** 16) * m ** 6


def element(m: int, coords: Sequence[int], basis: Sequence[NumericFieldElement] | None = None):
    basis = basis or numeric_basis(m)
    if len(coords) != 8:
        raise ValueError("need 8 coordinates x1..x8")
    alpha = NumericFieldElement.rational(0, m)
    for x, b in zip(coords, basis):
        if x:
            alpha = alpha + b.scale(x)
    return alpha


def element_discriminant(alpha: NumericFieldElement) -> Fraction:
    conj = [alpha.conjugate(j, k) for j, k in EMBEDDINGS]
    prod = NumericFieldElement.rational(1, alpha.m)
    for s in range(8):
        for t in range(s + 1, 8):
            d = conj[s] - conj[t]
            if d.is_zero():
                raise NotPrimitive(f"conjugates {EMBEDDINGS[s]} and {EMBEDDINGS[t]} coincide")
            prod = prod * d * d
    return prod.rational_value()


def direct_index(m: int, coords: Sequence[int], basis: Sequence[NumericFieldElement] | None = None) -> int:
    disc = element_discriminant(element(m, coords, basis))
    q = abs(disc) / field_discriminant(m)
    if q.denominator != 1:
        raise NonSquareQuotient(f"D(alpha)/D_K = {q} is not an integer")
    r = math.isqrt(q.numerator)
    if r * r != q.numerator:
        raise NonSquareQuotient(f"D(alpha)/D_K = {q} is not a square")
    return r


@dataclass
class CrosscheckReport:
    m: int
    samples: int
    bound: int
    seed: int
    checked: int = 0
    skipped: int = 0
    mismatches: list[dict] = field(default_factory=list)
    min_index: int | None = None
    min_coords: tuple[int, ...] | None = None

    @property
    def ok(self) -> bool:
        return not self.mismatches and self.checked > 0

    def to_json(self) -> dict:
        return {
            "m": self.m, "samples": self.samples, "bound": self.bound, "seed": self.seed,
            "checked": self.checked, "skipped": self.skipped, "mismatches": self.mismatches,
            "min_index": self.min_index,
            "min_coords": list(self.min_coords) if self.min_coords is not None else None,
            "ok": self.ok,
        }


def _draw(rng: random.Random, bound: int) -> tuple[int, ...]:
    return tuple(rng.randint(-bound, bound) for _ in range(8))


def _check_one(m: int, coords, form: IndexForm, basis) -> tuple[int, int] | None:
    try:
        d = direct_index(m, coords, basis)
    except NotPrimitive:
        return None
    point = dict(zip(COORD_VARS, coords))
    point["n"] = n_of(m)
    return d, abs(form.evaluate(point))


def _check_chunk(args):
    m, chunk = args
    form = index_symbolic(case_of(m))
    basis = numeric_basis(m)
    return [_check_one(m, c, form, basis) for c in chunk]


def crosscheck(m: int, samples: int = 100, bound: int = 5, seed: int = 0,
               workers: int = 1, strict: bool = False) -> CrosscheckReport:
    """Compare direct indices with |Q1...Q6| on ``samples`` seeded random vectors.

    Vectors are drawn until ``samples`` primitive elements were checked;
    non-primitive draws are counted in ``skipped``.
    """
    case = case_of(m)
    rng = random.Random(seed)
    report = CrosscheckReport(m, samples, bound, seed)
    form = index_symbolic(case)
    basis = numeric_basis(m)
    attempts = 0
    while report.checked < samples:
        need = samples - report.checked
        draws = [_draw(rng, bound) for _ in range(need)]
        attempts += need
        if workers > 1 and need > 1:
            size = max(1, need // workers)
            chunks = [draws[i:i + size] for i in range(0, need, size)]
            with ProcessPoolExecutor(max_workers=workers) as pool:
                results = [r for part in pool.map(_check_chunk, [(m, c) for c in chunks]) for r in part]
        else:
            results = [_check_one(m, c, form, basis) for c in draws]
        for coords, res in zip(draws, results):
            if res is None:
                report.skipped += 1
                continue
            d, s = res
            report.checked += 1
            if d != s:
                report.mismatches.append({"coords": list(coords), "direct": d, "symbolic": s})
                if strict:
                    raise Mismatch(m, coords, d, s)
            if report.min_index is None or d < report.min_index:
                report.min_index, report.min_coords = d, coords
        if attempts > 100 * samples + 100:
            break
    return report
