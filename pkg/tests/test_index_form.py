import itertools
import random

import pytest

from octic_monogenity.field_algebra import EMBEDDINGS, CaseTag
from octic_monogenity.index_form import (
    COORD_VARS,
    NORMED,
    S_PAIRS,
    all_pairs_used,
    extract_q_factors,
    factor_stats,
    index_symbolic,
    multiplier_table,
    verify_product_identity,
)
from octic_monogenity.oracle import element, numeric_basis
from octic_monogenity.polyring import IntPolynomial, NotDivisible

I, II = CaseTag.CASE_I, CaseTag.CASE_II
n = IntPolynomial.var("n")

# term counts of the expanded factors, frozen from the first full build
TERMS = {
    I: {"S": [2850, 94, 25, 132, 158, 175], "Q": [1822, 67, 25, 132, 158, 175]},
    II: {"S": [3758, 63, 25, 192, 98, 192], "Q": [2358, 43, 25, 192, 98, 192]},
}


def test_pairs_cover_all_28_once():
    pairs = all_pairs_used()
    assert len(pairs) == 28
    assert set(pairs) == {frozenset(p) for p in itertools.combinations(EMBEDDINGS, 2)}


def test_multiplier_tables():
    assert multiplier_table(I) == [16 * (2 * n + 1) ** 2, 16 * (2 * n + 1), 2, 2, 2, 2]
    m = 4 * n + 3
    assert multiplier_table(II) == [m ** 2, 16 * m, 1, 4, 1, 4]


@pytest.mark.parametrize("case", [I, II])
def test_s_factor_shape(case, s_factors):
    s = s_factors[case]
    assert [len(p) for p in s.factors] == TERMS[case]["S"]
    for p in s.factors:
        assert "x1" not in p.variables()
        assert p.variables() <= set(COORD_VARS[1:]) | {"n"}


@pytest.mark.parametrize("case", [I, II])
def test_q_factors(case, s_factors, q_factors):
    q = q_factors[case]
    assert [len(p) for p in q.factors] == TERMS[case]["Q"]
    assert q[3] * q.multipliers[2] == s_factors[case][3]
    if case is II:
        assert q[5] == s_factors[case][5]
        assert 4 * q[4] == s_factors[case][4]
    else:
        assert 2 * q[3] == s_factors[case][3]


@pytest.mark.parametrize("case", [I, II])
def test_product_identity(case, s_factors, q_factors):
    pid = verify_product_identity(s_factors[case], q_factors[case])
    assert pid.passed and pid.sqrt_disc_ok and pid.factor_ok
    m = case.m_poly
    assert pid.multiplier_product == (2 ** 9 if case is I else 2 ** 8) * m ** 3


def test_corrupted_multiplier_is_not_divisible(s_factors):
    bad = multiplier_table(I)
    bad[5] = IntPolynomial.const(4)
    with pytest.raises(NotDivisible) as info:
        extract_q_factors(s_factors[I], multipliers=bad)
    assert info.value.factor_index == 6


def test_rational_alpha_gives_zero(s_factors):
    s3 = s_factors[II][3]
    assert s3.evaluate({v: 0 for v in s3.gens}) == 0


def _numeric_s(m, coords, s):
    alpha = element(m, coords, numeric_basis(m))
    conj = {jk: alpha.conjugate(*jk) for jk in EMBEDDINGS}
    total = None
    js = (1, 2) if s in NORMED else (1,)
    for j in js:
        for a, b in S_PAIRS[s]:
            a2, b2 = ((j, a[1]), (j, b[1])) if s in NORMED else (a, b)
            d = conj[a2] - conj[b2]
            total = d if total is None else total * d
    return total.rational_value()


@pytest.mark.parametrize("m", [2, 3, 6, 7])
def test_s_factors_match_numeric_products(m, s_factors):
    case = CaseTag.from_residue(m)
    rng = random.Random(m)
    for _ in range(3):
        coords = [rng.randint(-3, 3) for _ in range(8)]
        point = dict(zip(COORD_VARS, coords), n=(m - case.residue) // 4)
        for s in range(1, 7):
            assert s_factors[case][s].evaluate(point) == _numeric_s(m, coords, s)


@pytest.mark.parametrize("case", [I, II])
def test_index_form(case, q_factors):
    form = index_symbolic(case, q_factors[case])
    assert "x1" not in form.variables()
    point = {v: i + 1 for i, v in enumerate(COORD_VARS)}
    point["n"] = 1
    v = form.evaluate(point)
    point["x1"] = 7
    assert form.evaluate(point) == v


def test_index_form_expand_small(q_factors):
    # the expanded product agrees with the factored evaluation on a sub-form
    form = index_symbolic(II, q_factors[II])
    sub = type(form)(II, form.factors[2:5])
    point = {"n": 2, "x2": 1, "x3": -1, "x4": 2, "x5": 0, "x6": 1, "x7": 3, "x8": -2}
    assert sub.expand().evaluate(point) == sub.evaluate(point)


def test_factor_stats(q_factors):
    stats = factor_stats(q_factors[I].factors, "Q")
    assert [s["name"] for s in stats] == ["Q1", "Q2", "Q3", "Q4", "Q5", "Q6"]
    assert stats[0]["terms"] == 1822
