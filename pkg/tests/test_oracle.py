import random
from fractions import Fraction

import pytest

from octic_monogenity.field_algebra import CaseTag
from octic_monogenity.index_form import COORD_VARS, index_symbolic
from octic_monogenity.oracle import (
    Mismatch,
    NotPrimitive,
    NumericFieldElement,
    crosscheck,
    direct_index,
    element_discriminant,
    field_discriminant,
    specialize,
)
from octic_monogenity.polyring import IntPolynomial, UnboundVariable

E = [tuple(int(i == j) for i in range(8)) for j in range(8)]

# direct indices from the 28-pair product, frozen after the first computation
GOLDEN = {
    (2, (0, 1, 0, 0, 1, 0, 0, 0)): 73728,   # theta + i, m = 2
    (3, (0, 1, 0, 0, 1, 0, 0, 0)): 29939,   # theta + (i + theta^2)/2, m = 3
}


def test_specialize():
    m = IntPolynomial.var("m")
    assert specialize(2 ** 24 * m ** 6, {"m": 2}) == 2 ** 30
    assert specialize(IntPolynomial.const(0), {"x": 5}) == 0
    with pytest.raises(UnboundVariable):
        specialize(m + IntPolynomial.var("n"), {"m": 1})


def test_numeric_arithmetic():
    th = NumericFieldElement([0, 1, 0, 0, 0, 0, 0, 0], 7)
    assert (th * th * th * th).rational_value() == 7
    i = NumericFieldElement([0, 0, 0, 0, 1, 0, 0, 0], 7)
    assert (i * i).rational_value() == -1
    assert th.conjugate(1, 2) == i * th
    assert i.conjugate(2, 3) == -i
    with pytest.raises(ValueError):
        NumericFieldElement([0] * 8, 5)


def test_field_discriminant():
    assert field_discriminant(2) == 2 ** 18 * 2 ** 6
    assert field_discriminant(3) == 2 ** 16 * 3 ** 6
    with pytest.raises(ValueError):
        field_discriminant(12)


@pytest.mark.parametrize("key", sorted(GOLDEN))
def test_golden_indices(key):
    m, coords = key
    assert direct_index(m, coords) == GOLDEN[key]
    case = CaseTag.from_residue(m)
    point = dict(zip(COORD_VARS, coords), n=(m - case.residue) // 4)
    assert abs(index_symbolic(case).evaluate(point)) == GOLDEN[key]


def test_subfield_generators_are_not_primitive():
    # theta and (i + theta^2)/2 only generate quartic subfields
    with pytest.raises(NotPrimitive):
        direct_index(2, E[1])
    with pytest.raises(NotPrimitive):
        direct_index(3, E[4])
    with pytest.raises(NotPrimitive):
        direct_index(7, (5, 0, 0, 0, 0, 0, 0, 0))


@pytest.mark.parametrize("m", [2, 3, 6, 7])
def test_index_invariance(m):
    rng = random.Random(m)
    coords = [rng.randint(-4, 4) for _ in range(8)]
    coords[1] = 1
    coords[4] = 1
    base = direct_index(m, coords)
    shifted = list(coords)
    shifted[0] += 11
    assert direct_index(m, shifted) == base
    assert direct_index(m, [-c for c in coords]) == base


def test_discriminant_is_square_times_dk():
    d = element_discriminant(
        NumericFieldElement([0, 1, 0, 0, 1, 0, 0, 0], 6)
    )
    q = abs(d) / field_discriminant(6)
    assert q.denominator == 1
    r = int(q.numerator ** 0.5)
    assert any((r + e) ** 2 == q.numerator for e in (-1, 0, 1))
    assert isinstance(d, Fraction)


def test_crosscheck_small():
    rep = crosscheck(7, samples=10, bound=5, seed=0)
    assert rep.ok and rep.checked == 10 and not rep.mismatches
    assert rep.min_index >= 2
    again = crosscheck(7, samples=10, bound=5, seed=0)
    assert again.to_json() == rep.to_json()


def test_crosscheck_zero_bound_skips_everything():
    rep = crosscheck(2, samples=3, bound=0, seed=0)
    assert rep.checked == 0 and rep.skipped > 0 and not rep.ok


def test_mismatch_error_carries_data():
    err = Mismatch(3, (1, 2), 5, 6)
    assert err.direct == 5 and err.symbolic == 6 and "m=3" in str(err)
