import pytest
from hypothesis import strategies as st

from octic_monogenity.field_algebra import CaseTag
from octic_monogenity.index_form import build_s_factors, extract_q_factors
from octic_monogenity.polyring import IntPolynomial
from octic_monogenity.sieve import case1_contradiction, cascade_case2

VARS = ("n", "x2", "t5")


def polynomials(variables=VARS, max_terms=5, max_exp=3, coeff=50):
    mono = st.tuples(*[st.integers(0, max_exp) for _ in variables])
    return st.dictionaries(mono, st.integers(-coeff, coeff), max_size=max_terms).map(
        lambda d: IntPolynomial.from_dict({tuple(zip(variables, m)): c for m, c in d.items()})
    )


@pytest.fixture(scope="session")
def s_factors():
    return {case: build_s_factors(case) for case in CaseTag}


@pytest.fixture(scope="session")
def q_factors(s_factors):
    return {case: extract_q_factors(s) for case, s in s_factors.items()}


@pytest.fixture(scope="session")
def cert1(q_factors):
    return case1_contradiction(q_factors[CaseTag.CASE_I])


@pytest.fixture(scope="session")
def cert2(q_factors):
    return cascade_case2(q_factors[CaseTag.CASE_II])
