"""The six factors of the discriminant of a generic element and their integer cofactors.

For alpha = x1 + x2*b2 + ... + x8*b8 over the known integral basis, the 28
conjugate differences are grouped into six products S1..S6.  Each is rational
with integer coefficients in (n, x2..x8); dividing out the case-dependent
constant multipliers leaves Q1..Q6, whose product is +/- the index of alpha.
"""
from __future__ import annotations

import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

from .field_algebra import CaseTag, FieldElement, assert_rational, conjugate, norm_over_M, product
from .integral_basis import basis_discriminant, known_basis
from .polyring import IntPolynomial, NotDivisible, exact_div

log = logging.getLogger(__name__)

COORD_VARS = tuple(f"x{l}" for l in range(1, 9))

# Conjugate differences per factor, written as ((j, k), (j', k')).  S1 and S2
# list the j = 1 instance; the j = 2 instance is the norm partner.
_CYCLE = [((1, 1), (1, 2)), ((1, 2), (1, 3)), ((1, 3), (1, 4)), ((1, 4), (1, 1))]
_DIAG = [((1, 1), (1, 3)), ((1, 2), (1, 4))]
S_PAIRS: dict[int, list[tuple[tuple[int, int], tuple[int, int]]]] = {
    1: _CYCLE,
    2: _DIAG,
    3: [((1, 1), (2, 1)), ((1, 2), (2, 2)), ((1, 3), (2, 3)), ((1, 4), (2, 4))],
    4: [((1, 1), (2, 4)), ((1, 2), (2, 1)), ((1, 3), (2, 2)), ((1, 4), (2, 3))],
    5: [((1, 1), (2, 3)), ((1, 2), (2, 4)), ((1, 3), (2, 1)), ((1, 4), (2, 2))],
    6: [((1, 1), (2, 2)), ((1, 2), (2, 3)), ((1, 3), (2, 4)), ((1, 4), (2, 1))],
}
NORMED = (1, 2)


def all_pairs_used() -> list[frozenset]:
    """Unordered embedding pairs across S1..S6, with the norm partners expanded."""
    out = []
    for s, pairs in S_PAIRS.items():
        for (j1, k1), (j2, k2) in pairs:
            out.append(frozenset({(j1, k1), (j2, k2)}))
            if s in NORMED:
                out.append(frozenset({(2, k1), (2, k2)}))
    return out


def _n():
    return IntPolynomial.var("n")


def multiplier_table(case: CaseTag) -> list[IntPolynomial]:
    n = _n()
    if case is CaseTag.CASE_I:
        return [16 * (2 * n + 1) ** 2, 16 * (2 * n + 1), *(IntPolynomial.const(2) for _ in range(4))]
    m = 4 * n + 3
    one, four = IntPolynomial.const(1), IntPolynomial.const(4)
    return [m ** 2, 16 * m, one, four, one, four]


def generic_element(case: CaseTag) -> FieldElement:
    b = known_basis(case)
    alpha = FieldElement.rational(0, case)
    for var, e in zip(COORD_VARS, b.elements):
        alpha = alpha + e * IntPolynomial.var(var)
    return alpha


@dataclass
class SFactorSet:
    case: CaseTag
    factors: tuple[IntPolynomial, ...]
    seconds: tuple[float, ...] = ()

    def __getitem__(self, i: int) -> IntPolynomial:
        """1-based access: s[1] is S1."""
        return self.factors[i - 1]


@dataclass
class QFactorSet:
    case: CaseTag
    factors: tuple[IntPolynomial, ...]
    multipliers: tuple[IntPolynomial, ...]

    def __getitem__(self, i: int) -> IntPolynomial:
        return self.factors[i - 1]


def _build_one(case: CaseTag, s: int) -> tuple[IntPolynomial, float]:
    start = time.perf_counter()
    alpha = generic_element(case)
    conj = {}

    def c(jk):
        if jk not in conj:
            conj[jk] = conjugate(alpha, *jk)
        return conj[jk]

    pairs = S_PAIRS[s]
    if s in NORMED:
        def instance(j):
            return product(c((j, k1)) - c((j, k2)) for (_, k1), (_, k2) in pairs)
        value = norm_over_M(instance)
    else:
        value = product(c(a) - c(b) for a, b in pairs)
    poly = assert_rational(value, integral=True).numerator
    return poly, time.perf_counter() - start


def _build_one_star(args):
    return _build_one(*args)


_CACHE: dict[CaseTag, SFactorSet] = {}


def build_s_factors(case: CaseTag, workers: int = 1) -> SFactorSet:
    """Expand S1..S6 for the generic element; results are cached per case."""
    if case in _CACHE:
        return _CACHE[case]
    jobs = [(case, s) for s in range(1, 7)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=min(workers, 6)) as pool:
            results = list(pool.map(_build_one_star, jobs))
    else:
        results = [_build_one(*job) for job in jobs]
    sf = SFactorSet(case, tuple(p for p, _ in results), tuple(t for _, t in results))
    _CACHE[case] = sf
    return sf


def extract_q_factors(s: SFactorSet, case: CaseTag | None = None,
                      multipliers: Sequence[IntPolynomial] | None = None) -> QFactorSet:
    """Divide each S by its multiplier exactly; NotDivisible means the table is wrong."""
    case = case or s.case
    if case is not s.case:
        raise ValueError("S-factors were built for the other case")
    mult = tuple(multipliers) if multipliers is not None else tuple(multiplier_table(case))
    qs = []
    for idx, (sp, d) in enumerate(zip(s.factors, mult), start=1):
        try:
            qs.append(exact_div(sp, d))
        except NotDivisible as exc:
            exc.factor_index = idx
            raise
    return QFactorSet(case, tuple(qs), mult)


@dataclass
class ProductIdentity:
    passed: bool
    multiplier_product: IntPolynomial
    expected: IntPolynomial
    sqrt_disc_ok: bool
    factor_ok: bool


def verify_product_identity(s: SFactorSet, q: QFactorSet, case: CaseTag | None = None) -> ProductIdentity:
    """Check prod(multipliers) = 2^9 m^3 (case I) / 2^8 m^3 (case II), that its
    square is the discriminant of the known basis, and that S_i = mult_i * Q_i."""
    case = case or s.case
    m = case.m_poly
    expected = (2 ** 9 if case is CaseTag.CASE_I else 2 ** 8) * m ** 3
    mp = product_of(q.multipliers)
    disc = basis_discriminant(known_basis(case))
    sqrt_ok = mp * mp == disc
    factor_ok = all(d * qq == sp for d, qq, sp in zip(q.multipliers, q.factors, s.factors))
    return ProductIdentity(mp == expected and sqrt_ok and factor_ok, mp, expected, sqrt_ok, factor_ok)


def product_of(polys: Sequence[IntPolynomial]) -> IntPolynomial:
    out = IntPolynomial.const(1)
    for p in polys:
        out = out * p
    return out


@dataclass
class IndexForm:
    """Q1*...*Q6 kept factored; the expanded product is far too large to be useful."""

    case: CaseTag
    factors: tuple[IntPolynomial, ...]

    def evaluate(self, assignment) -> int:
        v = 1
        for f in self.factors:
            v *= f.evaluate(assignment)
            if not v:
                return 0
        return v

    def variables(self) -> set[str]:
        out = set()
        for f in self.factors:
            out |= f.variables()
        return out

    def expand(self) -> IntPolynomial:
        return product_of(self.factors)


def index_symbolic(case: CaseTag, q: QFactorSet | None = None) -> IndexForm:
    if q is None:
        q = extract_q_factors(build_s_factors(case))
    return IndexForm(case, q.factors)


def factor_stats(polys: Sequence[IntPolynomial], prefix: str) -> list[dict]:
    return [
        {"name": f"{prefix}{i}", "terms": len(p), "degree": p.degree(),
         "degree_n": p.degree("n"), "variables": sorted(p.variables())}
        for i, p in enumerate(polys, start=1)
    ]
