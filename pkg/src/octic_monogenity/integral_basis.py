"""Integral bases of K = Q(i, m^(1/4)) for m = 4n+2 and m = 4n+3.

Provides the printed bases, symbolic discriminants via the conjugate matrix,
and the enrichment loop that rediscovers them: candidates
``(l1*b1 + ... + l8*b8) / 2`` with bits ``l`` are screened by a norm test over
residues of n mod 64, then by integrality of the characteristic polynomial,
and the first one that shrinks the discriminant replaces a basis element.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .field_algebra import (
    EMBEDDINGS,
    CaseTag,
    FieldElement,
    assert_rational,
    conjugate,
    min_poly,
    norm_K_Q,
)
from .polyring import DyadicPolynomial, IntPolynomial, NotDivisible, exact_div

log = logging.getLogger(__name__)

NORM_RESIDUES = 64
NORM_MODULUS = 256

# coordinates on (1, θ, θ², θ³, i, iθ, iθ², iθ³)
_H = Fraction(1, 2)
_INITIAL = [[1 if c == r else 0 for c in range(8)] for r in range(8)]
_CASE_I = [
    [1, 0, 0, 0, 0, 0, 0, 0],
    [0, 1, 0, 0, 0, 0, 0, 0],
    [0, 0, 1, 0, 0, 0, 0, 0],
    [0, 0, 0, 1, 0, 0, 0, 0],
    [0, 0, 0, 0, 1, 0, 0, 0],
    [0, _H, 0, _H, 0, _H, 0, 0],  # ((1+i)θ + θ³)/2
    [0, 0, _H, 0, 0, 0, _H, 0],   # (1+i)θ²/2
    [0, 0, 0, _H, 0, 0, 0, _H],   # (1+i)θ³/2
]
_CASE_II = [
    [1, 0, 0, 0, 0, 0, 0, 0],
    [0, 1, 0, 0, 0, 0, 0, 0],
    [0, 0, 1, 0, 0, 0, 0, 0],
    [0, 0, 0, 1, 0, 0, 0, 0],
    [0, 0, _H, 0, _H, 0, 0, 0],   # (i + θ²)/2
    [0, 0, 0, _H, 0, _H, 0, 0],   # (iθ + θ³)/2
    [_H, 0, 0, 0, 0, 0, _H, 0],   # (1 + iθ²)/2
    [0, _H, 0, 0, 0, 0, 0, _H],   # (θ + iθ³)/2
]


@dataclass(frozen=True)
class Basis:
    elements: tuple[FieldElement, ...]
    case: CaseTag

    def __post_init__(self):
        if len(self.elements) != 8:
            raise ValueError("a basis of K has 8 elements")
        for e in self.elements:
            if e.case is not self.case:
                raise ValueError("basis element from a different case")

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence], case: CaseTag) -> "Basis":
        return cls(tuple(FieldElement(list(r), case) for r in rows), case)

    def coordinate_matrix(self) -> list[list[Fraction]]:
        """Row l = coordinates of element l; only for n-independent elements."""
        rows = []
        for e in self.elements:
            row = []
            for c in e.coords:
                if not c.numerator.is_constant():
                    raise ValueError("coordinate depends on n")
                row.append(Fraction(c.numerator.constant_term(), 1 << c.denom_exp))
            rows.append(row)
        return rows

    def replace(self, index: int, element: FieldElement) -> "Basis":
        elems = list(self.elements)
        elems[index] = element
        return Basis(tuple(elems), self.case)

    def __str__(self):
        return "\n".join(f"b{l + 1} = {e}" for l, e in enumerate(self.elements))


def initial_basis(case: CaseTag) -> Basis:
    return Basis.from_rows(_INITIAL, case)


def known_basis(case: CaseTag) -> Basis:
    return Basis.from_rows(_CASE_I if case is CaseTag.CASE_I else _CASE_II, case)


def _conjugate_det(columns: Sequence[FieldElement], rows: Sequence[tuple[int, int]]) -> FieldElement:
    """det[conjugate(columns[c], rows[r])] by Laplace expansion memoised over column subsets."""
    size = len(columns)
    if len(rows) != size:
        raise ValueError("square matrix required")
    matrix = [[conjugate(col, *jk) for col in columns] for jk in rows]
    case = columns[0].case
    minors = {0: FieldElement.one(case)}
    for r in range(size):
        nxt = {}
        for mask, val in minors.items():
            if val.is_zero():
                continue
            for c in range(size):
                if mask >> c & 1:
                    continue
                entry = matrix[r][c]
                if entry.is_zero():
                    continue
                # columns of the new mask to the right of c
                after = bin(mask >> (c + 1)).count("1")
                term = val * entry
                if after % 2:
                    term = -term
                new = mask | (1 << c)
                nxt[new] = nxt[new] + term if new in nxt else term
        minors = nxt
    return minors.get((1 << size) - 1, FieldElement.rational(0, case))


def basis_discriminant(b: Basis) -> IntPolynomial:
    """Square of the determinant of the 8x8 matrix of conjugates, as a polynomial in n."""
    det = _conjugate_det(b.elements, EMBEDDINGS)
    return assert_rational(det * det, integral=True).numerator


def subfield_discriminant(case: CaseTag) -> IntPolynomial:
    """Discriminant of {1, θ, θ², θ³} in Q(θ) from the four θ-conjugates."""
    powers = [FieldElement.monomial(0, b, case) for b in range(4)]
    det = _conjugate_det(powers, [(1, k) for k in (1, 2, 3, 4)])
    return assert_rational(det * det, integral=True).numerator


def discriminant_exponent(disc: IntPolynomial, case: CaseTag) -> int:
    """h with disc == 2^h * m^6, or ValueError if disc has another shape."""
    try:
        q = exact_div(disc, case.m_poly ** 6)
    except NotDivisible as exc:
        raise ValueError("discriminant is not a constant times m^6") from exc
    if not q.is_constant():
        raise ValueError("discriminant is not a constant times m^6")
    c = q.constant_term()
    if c <= 0 or c & (c - 1):
        raise ValueError(f"cofactor {c} is not a power of 2")
    return c.bit_length() - 1


# -- candidate tests ----------------------------------------------------------

@dataclass(frozen=True)
class CandidateTuple:
    bits: tuple[int, ...]

    def __post_init__(self):
        if len(self.bits) != 8 or any(x not in (0, 1) for x in self.bits):
            raise ValueError("need 8 bits")
        if not any(self.bits):
            raise ValueError("all-zero tuple")

    @classmethod
    def from_int(cls, v: int) -> "CandidateTuple":
        # lambda_1 is the least significant bit
        return cls(tuple((v >> i) & 1 for i in range(8)))

    def numerator(self, b: Basis) -> FieldElement:
        total = FieldElement.rational(0, b.case)
        for bit, e in zip(self.bits, b.elements):
            if bit:
                total = total + e
        return total


@dataclass
class NormTestResult:
    passed: bool
    failing_residues: list[int]
    norm: DyadicPolynomial


def candidate_norm_test(lam: CandidateTuple, b: Basis, residues: int = NORM_RESIDUES,
                        modulus: int = NORM_MODULUS) -> NormTestResult:
    """Pass iff the norm of sum(l_i b_i) is divisible by ``modulus`` at every n mod ``residues``."""
    norm = norm_K_Q(lam.numerator(b))
    failing = []
    for r in range(residues):
        v = norm.evaluate({"n": r})
        if v.denominator != 1 or v.numerator % modulus:
            failing.append(r)
    return NormTestResult(not failing, failing, norm)


def integrality_test(e: FieldElement) -> bool:
    """An element is integral iff its characteristic polynomial has integer coefficients."""
    return all(c.is_integral() for c in min_poly(e))


# -- enrichment ---------------------------------------------------------------

@dataclass
class ImprovedBasis:
    basis: Basis
    candidate: CandidateTuple
    replaced: int
    old_discriminant: IntPolynomial
    new_discriminant: IntPolynomial


@dataclass
class NoCandidate:
    basis: Basis


EnrichmentOutcome = ImprovedBasis | NoCandidate


@dataclass
class EnrichmentTrace:
    rounds: list[dict] = field(default_factory=list)

    def to_json(self) -> list[dict]:
        return self.rounds


def _is_strict_power_of_two_drop(old: IntPolynomial, new: IntPolynomial) -> bool:
    if new.is_zero():
        return False
    try:
        q = exact_div(old, new)
    except NotDivisible:
        return False
    if not q.is_constant():
        return False
    c = q.constant_term()
    return c > 1 and not c & (c - 1)


def enrich(b: Basis, trace: EnrichmentTrace | None = None,
           residues: int = NORM_RESIDUES, modulus: int = NORM_MODULUS) -> EnrichmentOutcome:
    """One round: replace a basis element by the first admissible half-sum, if any."""
    old = basis_discriminant(b)
    tested = []
    outcome: EnrichmentOutcome = NoCandidate(b)
    for v in range(1, 256):
        lam = CandidateTuple.from_int(v)
        entry = {"lambda": list(lam.bits)}
        tested.append(entry)
        nt = candidate_norm_test(lam, b, residues, modulus)
        entry["norm_test"] = "pass" if nt.passed else "fail"
        if not nt.passed:
            entry["first_failing_residue"] = nt.failing_residues[0]
            continue
        cand = lam.numerator(b).div_pow2(1)
        ok = integrality_test(cand)
        entry["integrality"] = "pass" if ok else "fail"
        if not ok:
            continue
        for idx in range(7, -1, -1):
            if not lam.bits[idx]:
                # the determinant picks up a factor lambda_idx/2, so this would be singular
                continue
            trial = b.replace(idx, cand)
            new = basis_discriminant(trial)
            if _is_strict_power_of_two_drop(old, new):
                entry["replaced"] = idx + 1
                outcome = ImprovedBasis(trial, lam, idx, old, new)
                break
        if isinstance(outcome, ImprovedBasis):
            break
        entry["replaced"] = None
    if trace is not None:
        summary = {
            "discriminant": str(old),
            "tested": tested,
        }
        if isinstance(outcome, ImprovedBasis):
            summary["accepted"] = {
                "lambda": list(outcome.candidate.bits),
                "replaced": outcome.replaced + 1,
                "new_discriminant": str(outcome.new_discriminant),
            }
        else:
            summary["accepted"] = None
        trace.rounds.append(summary)
    return outcome


def enrich_to_fixed_point(b: Basis, trace: EnrichmentTrace | None = None,
                          max_rounds: int = 16, **kw) -> Basis:
    for _ in range(max_rounds):
        out = enrich(b, trace, **kw)
        if isinstance(out, NoCandidate):
            return out.basis
        log.info("enrichment: b%d <- %s", out.replaced + 1, out.candidate.bits)
        b = out.basis
    raise RuntimeError("enrichment did not reach a fixed point")


# -- lattice comparison -------------------------------------------------------

def _inverse(mat: list[list[Fraction]]) -> list[list[Fraction]]:
    size = len(mat)
    aug = [list(map(Fraction, row)) + [Fraction(int(i == r)) for i in range(size)]
           for r, row in enumerate(mat)]
    for col in range(size):
        piv = next((r for r in range(col, size) if aug[r][col]), None)
        if piv is None:
            raise ZeroDivisionError("singular matrix")
        aug[col], aug[piv] = aug[piv], aug[col]
        p = aug[col][col]
        aug[col] = [x / p for x in aug[col]]
        for r in range(size):
            if r != col and aug[r][col]:
                f = aug[r][col]
                aug[r] = [x - f * y for x, y in zip(aug[r], aug[col])]
    return [row[size:] for row in aug]


def fraction_det(mat: list[list[Fraction]]) -> Fraction:
    a = [list(map(Fraction, row)) for row in mat]
    size = len(a)
    det = Fraction(1)
    for col in range(size):
        piv = next((r for r in range(col, size) if a[r][col]), None)
        if piv is None:
            return Fraction(0)
        if piv != col:
            a[col], a[piv] = a[piv], a[col]
            det = -det
        det *= a[col][col]
        for r in range(col + 1, size):
            f = a[r][col] / a[col][col]
            if f:
                a[r] = [x - f * y for x, y in zip(a[r], a[col])]
    return det


def change_of_basis(b1: Basis, b2: Basis) -> list[list[Fraction]]:
    """C with rows(b1) = C * rows(b2) on monomial coordinates."""
    t1, inv2 = b1.coordinate_matrix(), _inverse(b2.coordinate_matrix())
    return [[sum(t1[r][k] * inv2[k][c] for k in range(8)) for c in range(8)] for r in range(8)]


def same_lattice(b1: Basis, b2: Basis) -> bool:
    c = change_of_basis(b1, b2)
    return all(x.denominator == 1 for row in c for x in row) and abs(fraction_det(c)) == 1
