"""Acceptance criteria, one PASS/FAIL line each.  All comparisons are exact."""
import copy
import json
import subprocess
import sys
import time
from pathlib import Path

import pytest

from octic_monogenity.checker import Replayer, check_certificate
from octic_monogenity.field_algebra import CaseTag
from octic_monogenity.index_form import (
    build_s_factors,
    extract_q_factors,
    multiplier_table,
    verify_product_identity,
)
from octic_monogenity.integral_basis import (
    basis_discriminant,
    change_of_basis,
    enrich_to_fixed_point,
    fraction_det,
    initial_basis,
    integrality_test,
    known_basis,
    same_lattice,
    subfield_discriminant,
)
from octic_monogenity.oracle import crosscheck
from octic_monogenity.polyring import Constant, IntPolynomial, constancy_mod
from octic_monogenity.sieve import CASE_II_STAGES, Constraint, case1_contradiction, cascade_case2

I, II = CaseTag.CASE_I, CaseTag.CASE_II
n = IntPolynomial.var("n")
TESTS = Path(__file__).parent


@pytest.fixture
def report(capsys):
    def emit(label, ok, detail, elapsed=None, target=None):
        timing = ""
        if elapsed is not None:
            timing = f" [{elapsed:.1f}s, target < {target}s]"
            ok = ok and elapsed < target
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {label}: {detail}{timing}")
        return ok
    return emit


@pytest.fixture(scope="module")
def q_fresh():
    return {case: extract_q_factors(build_s_factors(case)) for case in CaseTag}


def test_criterion_1_discriminants(report):
    t0 = time.perf_counter()
    got = {}
    for case in CaseTag:
        m = case.m_poly
        h = 18 if case is I else 16
        got[case] = [
            basis_discriminant(initial_basis(case)) == 2 ** 24 * m ** 6,
            basis_discriminant(known_basis(case)) == 2 ** h * m ** 6,
            subfield_discriminant(case) == -256 * m ** 3,
        ]
    ok = all(all(v) for v in got.values())
    assert report(1, ok, "D(initial) = 2^24 m^6, D(known) = 2^18 m^6 / 2^16 m^6, "
                         f"D(subfield) = -256 m^3; checks {[got[c] for c in CaseTag]}",
                  time.perf_counter() - t0, 60)


def test_criterion_2_integrality(report):
    t0 = time.perf_counter()
    bad = [(case.name, i) for case in CaseTag
           for i, e in enumerate(known_basis(case).elements) if not integrality_test(e)]
    assert report(2, not bad, f"all 16 basis elements integral in n; failures {bad}",
                  time.perf_counter() - t0, 30)


def test_criterion_3_enrichment(report):
    detail, ok = [], True
    t0 = time.perf_counter()
    for case in CaseTag:
        fixed = enrich_to_fixed_point(initial_basis(case))
        det = fraction_det(change_of_basis(fixed, known_basis(case)))
        ok &= same_lattice(fixed, known_basis(case)) and abs(det) == 1
        detail.append(f"{case.name} det {det}")
    assert report(3, ok, "enrichment fixed point spans the known lattice; " + ", ".join(detail),
                  time.perf_counter() - t0, 1200)


def test_criterion_4_factorization(report):
    detail, ok = [], True
    t0 = time.perf_counter()
    m1, m2 = 2 * n + 1, 4 * n + 3
    tables = {I: [16 * m1 ** 2, 16 * m1, 2, 2, 2, 2], II: [m2 ** 2, 16 * m2, 1, 4, 1, 4]}
    for case in CaseTag:
        s = build_s_factors(case)
        q = extract_q_factors(s, multipliers=tables[case])
        pid = verify_product_identity(s, q)
        exact = all(mu * qi == si for mu, qi, si in zip(tables[case], q.factors, s.factors))
        scale = (2 ** 9 if case is I else 2 ** 8) * case.m_poly ** 3
        good = (multiplier_table(case) == tables[case] and exact and pid.passed
                and pid.multiplier_product == scale)
        ok &= good
        detail.append(f"{case.name} {'ok' if good else 'broken'}")
    assert report(4, ok, "S_i = mu_i Q_i with zero remainder and product identity 2^9 m^3 / 2^8 m^3; "
                         + ", ".join(detail), time.perf_counter() - t0, 600)


def test_criterion_5_case1_literal(report, q_fresh):
    """Taken literally: the 4-term combination is a constant 8 mod 16 on all of Z^8."""
    t0 = time.perf_counter()
    c = Constraint.of([(4, 1), (6, -1), (3, 1), (5, -1)], 4)
    res = constancy_mod(c.polynomial(q_fresh[I].factors), 4)
    ok = res == Constant(8, 4) and 8 not in c.allowed
    assert report(5, ok, f"{c.label} over all of Z^8 gives {res!r}; allowed {sorted(c.allowed)}",
                  time.perf_counter() - t0, 60)


def test_criterion_5_case1_certificate(report):
    """The combination restricted to the branch where every Q_i is odd."""
    t0 = time.perf_counter()
    q = extract_q_factors(build_s_factors(I))
    cert = case1_contradiction(q)
    finals = [l.steps[-1] for l in cert.leaves]
    combo = [s for s in finals if s.constraint.label == "Q4 - Q6 + Q3 - Q5 mod 16"]
    ok = (cert.complete and len(combo) == 1 and combo[0].residue == 8
          and 8 not in combo[0].constraint.allowed
          and all(s.verdict == "KILLED" for s in finals))
    assert report("5 (odd-Q branch)", ok,
                  f"leaves {len(cert.leaves)}, combination residue {[s.residue for s in combo]} mod 16, "
                  f"allowed {sorted(combo[0].constraint.allowed) if combo else None}",
                  time.perf_counter() - t0, 60)


def _stage(cert, name):
    return next(r for r in cert.stage_reports if r["name"] == name)


def test_criterion_6_case2_cascade(report, q_fresh):
    t0 = time.perf_counter()
    cert = cascade_case2(q_fresh[II])
    elapsed = time.perf_counter() - t0
    b, c, d, e = (_stage(cert, x) for x in "bcde")
    late = [l for l in cert.leaves if any(s.stage == "e" for s in l.steps)]
    finals = {l.steps[-1].constraint.label for l in late}
    shaped = [s for l in cert.leaves for s in l.steps if s.stage == "d" and s.shape_match is not None]
    checks = {
        "zero survivors of 256": cert.complete and cert.summary()["root_branches"] == 256
                                 and not cert.survivors,
        "stage c count 4": c["roots_alive_after"] == 4,
        "x5 even, x7 odd": b["parities_after"].get("x5") == 0 and b["parities_after"].get("x7") == 1,
        "x6 even, x8 even": e["parities_before"].get("x6") == 0 and e["parities_before"].get("x8") == 0,
        "Q5 shape": d["checks"]["shape"]["met"] and bool(shaped)
                    and all(s.shape_match for s in shaped)
                    and CASE_II_STAGES[3]["expect"]["shape"]["polynomial"] == "8*t5^2 + 8*t7^2 + 8*t7 + 9",
        "t5 = 4t5'+2": d["refined_classes"] == [{"var": "x5", "modulus": 4, "residue": 2}]
                       and all(l.affine["x5"][:2] == (4, 2) for l in late),
        "final kills": finals == {"Q5 - Q3 mod 32", "Q4 - Q6 mod 16"}
                       and all(l.verdict == "KILLED" for l in cert.leaves),
    }
    failed = [k for k, v in checks.items() if not v]
    assert report(6, not failed, f"{len(checks) - len(failed)}/{len(checks)} cascade facts hold; "
                                 f"failed {failed}", elapsed, 600)


def test_criterion_7_oracle(report):
    t0 = time.perf_counter()
    rows, ok = [], True
    for m in (2, 3, 6, 7, 11, 14):
        rep = crosscheck(m, samples=100, bound=5, seed=0)
        good = rep.ok and rep.checked == 100 and not rep.mismatches and rep.min_index >= 2
        ok &= good
        rows.append(f"m={m}:{rep.checked}/{len(rep.mismatches)}")
    assert report(7, ok, "direct index == |Q1...Q6| on 100 primitive samples each, all >= 2 "
                         "(checked/mismatches " + " ".join(rows) + ")",
                  time.perf_counter() - t0, 300)


def test_criterion_8_replay(report, q_fresh, tmp_path):
    certs = {I: case1_contradiction(q_fresh[I]), II: cascade_case2(q_fresh[II])}
    t0 = time.perf_counter()
    accepted, mutations, missed = {}, 0, []
    for case, cert in certs.items():
        path = tmp_path / f"cert{case.value}.json"
        path.write_text(json.dumps(cert.to_json()))
        accepted[case.name] = check_certificate(path).ok
        data = json.loads(path.read_text())
        replay = Replayer(data, seed=1)
        for br in data["branches"]:
            for idx, st in enumerate(br["steps"]):
                if st["residue"] is None:
                    continue
                for delta in range(1, st["modulus"]):
                    bad = dict(st, residue=(st["residue"] + delta) % st["modulus"])
                    mutations += 1
                    if not replay.check_step(br, idx, bad):
                        missed.append((br["id"], idx, delta))
        # a few whole-certificate rejections through the public entry point
        for bi in (0, len(data["branches"]) - 1):
            m = copy.deepcopy(data)
            st = m["branches"][bi]["steps"][-1]
            st["residue"] = (st["residue"] + 1) % st["modulus"]
            if check_certificate(m).ok:
                missed.append((m["branches"][bi]["id"], "full"))
    ok = all(accepted.values()) and not missed
    assert report(8, ok, f"accepted {accepted}; {mutations} residue mutations, undetected {missed[:5]}",
                  time.perf_counter() - t0, 60)


PROPERTY_TESTS = [
    "test_polyring.py::test_ring_axioms",
    "test_polyring.py::test_constancy_matches_exhaustive",
    "test_field_algebra.py::test_conjugation_is_homomorphism",
    "test_sieve.py::test_parity_partition",
    "test_sieve.py::test_leaves_partition",
]


def test_criterion_9_property_suites(report):
    t0 = time.perf_counter()
    args = [sys.executable, "-m", "pytest", "-q", "-p", "no:cacheprovider", "--hypothesis-show-statistics"]
    proc = subprocess.run(args + [str(TESTS / t) for t in PROPERTY_TESTS],
                          capture_output=True, text=True, cwd=TESTS.parent)
    out = proc.stdout
    passing = [int(x.split(" passing")[0].split()[-1]) for x in out.splitlines() if " passing examples" in x]
    ok = proc.returncode == 0 and len(passing) == len(PROPERTY_TESTS) and min(passing) >= 1000
    assert report(9, ok, f"{len(PROPERTY_TESTS)} property suites, passing examples {passing}",
                  time.perf_counter() - t0, 300), out[-2000:]
