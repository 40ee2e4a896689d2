from fractions import Fraction

import pytest

from octic_monogenity.field_algebra import CaseTag, FieldElement
from octic_monogenity.integral_basis import (
    CandidateTuple,
    EnrichmentTrace,
    NoCandidate,
    basis_discriminant,
    candidate_norm_test,
    change_of_basis,
    discriminant_exponent,
    enrich,
    enrich_to_fixed_point,
    fraction_det,
    initial_basis,
    integrality_test,
    known_basis,
    same_lattice,
    subfield_discriminant,
)
from octic_monogenity.polyring import IntPolynomial

I, II = CaseTag.CASE_I, CaseTag.CASE_II
H = Fraction(1, 2)


def mono(a, b, case, c=1):
    return FieldElement.monomial(a, b, case, c)


@pytest.fixture(scope="module")
def enriched():
    out = {}
    for case in CaseTag:
        trace = EnrichmentTrace()
        out[case] = (enrich_to_fixed_point(initial_basis(case), trace), trace)
    return out


def test_basis_elements():
    assert initial_basis(I).elements[4] == FieldElement.i(I)
    assert initial_basis(II).elements[1] == FieldElement.theta(II)
    assert known_basis(I).elements[6] == mono(0, 2, I, H) + mono(1, 2, I, H)
    assert known_basis(II).elements[4] == mono(1, 0, II, H) + mono(0, 2, II, H)
    assert known_basis(II).elements[0] == FieldElement.one(II)


@pytest.mark.parametrize("case", [I, II])
def test_discriminants(case):
    m = case.m_poly
    assert basis_discriminant(initial_basis(case)) == 2 ** 24 * m ** 6
    h = 18 if case is I else 16
    assert basis_discriminant(known_basis(case)) == 2 ** h * m ** 6
    assert discriminant_exponent(basis_discriminant(known_basis(case)), case) == h
    sub = subfield_discriminant(case)
    assert sub == -256 * m ** 3
    assert all(c < 0 for c in sub.coefficients())


def test_discriminant_exponent_rejects_other_shapes():
    with pytest.raises(ValueError):
        discriminant_exponent(3 * I.m_poly ** 6, I)
    with pytest.raises(ValueError):
        discriminant_exponent(I.m_poly ** 5, I)


@pytest.mark.parametrize("case", [I, II])
def test_known_bases_integral(case):
    assert all(integrality_test(e) for e in known_basis(case).elements)


def test_integrality_examples():
    assert integrality_test(mono(1, 0, II, H) + mono(0, 2, II, H))
    assert not integrality_test(mono(0, 1, II, H))
    assert integrality_test(FieldElement.i(I))
    assert not integrality_test(FieldElement.rational(H, I))


def test_candidate_norm_test_examples():
    b = initial_basis(II)
    # bits at b3 = θ² and b5 = i
    lam = CandidateTuple.from_int(0b10100)
    assert lam.bits == (0, 0, 1, 0, 1, 0, 0, 0)
    assert candidate_norm_test(lam, b).passed
    one = candidate_norm_test(CandidateTuple.from_int(1), b)
    assert not one.passed and one.failing_residues == list(range(64))


def test_candidate_tuple_validation():
    with pytest.raises(ValueError):
        CandidateTuple((0,) * 8)
    with pytest.raises(ValueError):
        CandidateTuple((1, 2, 0, 0, 0, 0, 0, 0))


@pytest.mark.parametrize("case", [I, II])
def test_no_candidate_passes_on_known_basis(case):
    b = known_basis(case)
    assert not any(candidate_norm_test(CandidateTuple.from_int(v), b).passed for v in range(1, 256))
    assert isinstance(enrich(b), NoCandidate)


@pytest.mark.parametrize("case", [I, II])
def test_enrichment_reaches_known_basis(case, enriched):
    fixed, trace = enriched[case]
    kb = known_basis(case)
    assert same_lattice(fixed, kb)
    assert basis_discriminant(fixed) == basis_discriminant(kb)
    # the replacements reproduce the printed elements one for one
    assert fixed.elements == kb.elements
    accepted = [r["accepted"] for r in trace.rounds if r["accepted"]]
    assert len(accepted) == (3 if case is I else 4)
    assert trace.rounds[-1]["accepted"] is None


def test_enrichment_trace_case1(enriched):
    _, trace = enriched[I]
    got = [(tuple(r["accepted"]["lambda"]), r["accepted"]["replaced"]) for r in trace.rounds if r["accepted"]]
    assert got == [((0, 1, 0, 1, 0, 1, 0, 0), 6), ((0, 0, 1, 0, 0, 0, 1, 0), 7), ((0, 0, 0, 1, 0, 0, 0, 1), 8)]


def test_lattice_helpers():
    b = known_basis(II)
    c = change_of_basis(b, initial_basis(II))
    assert fraction_det(c) == Fraction(1, 16)
    assert not same_lattice(b, initial_basis(II))
    assert same_lattice(b, b)


def test_coordinate_matrix_rejects_n_dependence():
    b = initial_basis(I).replace(0, FieldElement.rational(IntPolynomial.var("n"), I))
    with pytest.raises(ValueError):
        b.coordinate_matrix()
