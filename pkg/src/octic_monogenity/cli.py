"""Command-line front end and the `prove` pipeline.

    octic-monogenity prove --case 3 --emit report.json
    octic-monogenity sieve --case 2 --emit cert.json
    octic-monogenity crosscheck --m 7 --samples 100 --bound 5 --seed 1

Exit codes: 0 proved / all checks passed, 2 inconclusive, 3 an internal
identity failed (discriminant, division, product identity, oracle mismatch).
Set OCTIC_LOG_LEVEL=DEBUG for progress logging.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Sequence

from . import __version__
from .checker import check_certificate
from .field_algebra import CaseTag
from .index_form import (
    build_s_factors,
    extract_q_factors,
    factor_stats,
    verify_product_identity,
)
from .integral_basis import (
    EnrichmentTrace,
    basis_discriminant,
    discriminant_exponent,
    enrich_to_fixed_point,
    initial_basis,
    known_basis,
    same_lattice,
    subfield_discriminant,
)
from .oracle import crosscheck
from .polyring import IntPolynomial, NotDivisible
from .sieve import run_case

log = logging.getLogger("octic_monogenity")

REPORT_VERSION = "1.0.0"
EXIT_OK, EXIT_INCONCLUSIVE, EXIT_IDENTITY = 0, 2, 3
DEFAULT_ORACLE_M = {CaseTag.CASE_I: (2, 6), CaseTag.CASE_II: (3, 7)}
DEFAULT_ORACLE_SAMPLES = 25
DEFAULT_ORACLE_BOUND = 5


class IdentityViolation(RuntimeError):
    def __init__(self, stage: str, detail: str):
        super().__init__(f"{stage}: {detail}")
        self.stage = stage
        self.detail = detail


@dataclass
class ProofReport:
    case: int
    verdict: str = "INCONCLUSIVE"
    failed_stage: str | None = None
    basis: list[str] = field(default_factory=list)
    enrichment: list[dict] = field(default_factory=list)
    discriminants: dict[str, Any] = field(default_factory=dict)
    s_factors: list[dict] = field(default_factory=list)
    q_factors: list[dict] = field(default_factory=list)
    product_identity: dict[str, Any] = field(default_factory=dict)
    sieve: dict[str, Any] = field(default_factory=dict)
    replay: dict[str, Any] = field(default_factory=dict)
    oracle: list[dict] = field(default_factory=list)
    timings: dict[str, float] = field(default_factory=dict)
    version: str = REPORT_VERSION

    def to_json(self) -> dict:
        d = asdict(self)
        # version first, timings last; everything else in declaration order
        return {"version": d.pop("version"), **d}

    @classmethod
    def from_json(cls, d: dict) -> "ProofReport":
        return cls(**d)

    def without_timings(self) -> dict:
        d = self.to_json()
        d.pop("timings")
        return d


def emit(report: ProofReport, path: str | Path) -> None:
    Path(path).write_text(dumps(report.to_json()))


def parse(path: str | Path) -> ProofReport:
    return ProofReport.from_json(json.loads(Path(path).read_text()))


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=False) + "\n"


def load_config(path: str | Path | None) -> dict:
    """Optional JSON config.  Recognised keys:

    ``stages``: {"2": [...], "3": [...]} cascade overrides,
    ``oracle``: {"m": {"2": [2, 6]}, "samples": 25, "bound": 5},
    ``multipliers``: {"2": ["16*(2*n+1)^2", ...]}.
    """
    if not path:
        return {}
    return json.loads(Path(path).read_text())


def _case_key(case: CaseTag) -> str:
    return str(case.residue)


def _multipliers(case: CaseTag, config: dict):
    texts = config.get("multipliers", {}).get(_case_key(case))
    if texts is None:
        return None
    return [IntPolynomial.from_expression(t) for t in texts]


class _Timer:
    def __init__(self, timings: dict, name: str):
        self.timings, self.name = timings, name

    def __enter__(self):
        self.start = time.perf_counter()
        log.info("%s ...", self.name)

    def __exit__(self, *exc):
        self.timings[self.name] = round(time.perf_counter() - self.start, 4)


def prove(case: CaseTag, config: dict | None = None, threads: int = 1, seed: int = 0,
          enrich: bool = True) -> ProofReport:
    """Run the full pipeline for one case; never raises for mathematical failures,
    the first failing stage is recorded instead."""
    config = config or {}
    rep = ProofReport(case=case.residue)
    t = rep.timings
    stage = "basis"
    try:
        with _Timer(t, "basis"):
            kb = known_basis(case)
            rep.basis = [str(e) for e in kb.elements]
            m = case.m_poly
            d_init = basis_discriminant(initial_basis(case))
            d_known = basis_discriminant(kb)
            d_sub = subfield_discriminant(case)
            h = discriminant_exponent(d_known, case)
            rep.discriminants = {"initial": str(d_init), "known": str(d_known),
                                 "subfield": str(d_sub), "exponent": h}
            want_h = 18 if case is CaseTag.CASE_I else 16
            if d_init != 2 ** 24 * m ** 6 or h != want_h or d_sub != -256 * m ** 3:
                raise IdentityViolation(stage, f"discriminants {rep.discriminants}")
        if enrich:
            stage = "enrichment"
            with _Timer(t, stage):
                trace = EnrichmentTrace()
                fixed = enrich_to_fixed_point(initial_basis(case), trace)
                rep.enrichment = [r["accepted"] for r in trace.rounds if r["accepted"]]
                if not same_lattice(fixed, kb):
                    raise IdentityViolation(stage, "fixed point differs from the known basis")
        stage = "sfactors"
        with _Timer(t, stage):
            s = build_s_factors(case, workers=threads)
            rep.s_factors = factor_stats(s.factors, "S")
        stage = "qfactors"
        with _Timer(t, stage):
            q = extract_q_factors(s, case, _multipliers(case, config))
            rep.q_factors = factor_stats(q.factors, "Q")
        stage = "product_identity"
        with _Timer(t, stage):
            pid = verify_product_identity(s, q, case)
            rep.product_identity = {"passed": pid.passed, "multiplier_product": str(pid.multiplier_product),
                                    "expected": str(pid.expected), "square_is_discriminant": pid.sqrt_disc_ok,
                                    "factors_match": pid.factor_ok}
            if not pid.passed:
                raise IdentityViolation(stage, "multiplier product identity failed")
        stage = "sieve"
        with _Timer(t, stage):
            cert = run_case(q, config.get("stages", {}).get(_case_key(case)), workers=threads)
            rep.sieve = cert.to_json()
        stage = "replay"
        with _Timer(t, stage):
            chk = check_certificate(rep.sieve, seed=seed)
            rep.replay = {"ok": chk.ok, "errors": chk.errors[:20], "leaves": chk.leaves,
                          "evaluations": chk.evaluations}
        stage = "oracle"
        with _Timer(t, stage):
            oc = config.get("oracle", {})
            ms = oc.get("m", {}).get(_case_key(case), DEFAULT_ORACLE_M[case])
            for mv in ms:
                r = crosscheck(int(mv), int(oc.get("samples", DEFAULT_ORACLE_SAMPLES)),
                               int(oc.get("bound", DEFAULT_ORACLE_BOUND)), seed, workers=threads)
                rep.oracle.append(r.to_json())
            if any(r["mismatches"] for r in rep.oracle):
                raise IdentityViolation(stage, "direct index differs from |Q1...Q6|")
    except NotDivisible as exc:
        rep.verdict, rep.failed_stage = "IDENTITY_VIOLATION", stage
        rep.product_identity.setdefault("error", str(exc))
        return rep
    except IdentityViolation as exc:
        rep.verdict, rep.failed_stage = "IDENTITY_VIOLATION", exc.stage
        return rep
    if not cert.complete:
        rep.verdict, rep.failed_stage = "INCONCLUSIVE", "sieve"
    elif not chk.ok:
        rep.verdict, rep.failed_stage = "INCONCLUSIVE", "replay"
    elif not all(r["ok"] for r in rep.oracle):
        rep.verdict, rep.failed_stage = "INCONCLUSIVE", "oracle"
    else:
        rep.verdict = "PROVED"
    return rep


def exit_code(verdict: str) -> int:
    return {"PROVED": EXIT_OK, "INCONCLUSIVE": EXIT_INCONCLUSIVE}.get(verdict, EXIT_IDENTITY)


# -- verbs --------------------------------------------------------------------

def _cases(arg) -> list[CaseTag]:
    return list(CaseTag) if arg is None else [CaseTag.from_residue(arg)]


def _table(rows: Sequence[dict], cols: Sequence[str]) -> str:
    widths = [max(len(c), *(len(str(r[c])) for r in rows)) for c in cols]
    lines = ["  ".join(c.ljust(w) for c, w in zip(cols, widths))]
    lines += ["  ".join(str(r[c]).ljust(w) for c, w in zip(cols, widths)) for r in rows]
    return "\n".join(lines)


def _write(path, obj):
    if path:
        Path(path).write_text(dumps(obj))
        log.info("wrote %s", path)


def cmd_basis(args, config) -> int:
    out = {}
    for case in _cases(args.case):
        b = known_basis(case)
        d = basis_discriminant(b)
        h = discriminant_exponent(d, case)
        print(f"Case {case.label} (m = {case.m_poly})")
        print(b)
        print(f"  disc(initial) = {basis_discriminant(initial_basis(case))}")
        print(f"  disc(known)   = {d}   (2^{h} m^6)")
        print(f"  disc(Q(i, sqrt m)) = {subfield_discriminant(case)}")
        out[_case_key(case)] = {"basis": [str(e) for e in b.elements], "discriminant": str(d), "exponent": h}
    _write(args.emit, out)
    return EXIT_OK


def cmd_sfactors(args, config) -> int:
    out = {}
    for case in _cases(args.case):
        s = build_s_factors(case, workers=args.threads)
        stats = factor_stats(s.factors, "S")
        print(f"Case {case.label}")
        print(_table(stats, ["name", "terms", "degree", "degree_n"]))
        out[_case_key(case)] = {"stats": stats, "factors": [str(p) for p in s.factors]}
    _write(args.emit, out)
    return EXIT_OK


def cmd_qfactors(args, config) -> int:
    out = {}
    code = EXIT_OK
    for case in _cases(args.case):
        s = build_s_factors(case, workers=args.threads)
        try:
            q = extract_q_factors(s, case, _multipliers(case, config))
        except NotDivisible as exc:
            print(f"Case {case.label}: multiplier does not divide: {exc}", file=sys.stderr)
            return EXIT_IDENTITY
        pid = verify_product_identity(s, q, case)
        stats = factor_stats(q.factors, "Q")
        for row, mult in zip(stats, q.multipliers):
            row["multiplier"] = str(mult)
        print(f"Case {case.label}: product identity {'passed' if pid.passed else 'FAILED'}")
        print(_table(stats, ["name", "multiplier", "terms", "degree", "degree_n"]))
        out[_case_key(case)] = {"stats": stats, "factors": [str(p) for p in q.factors],
                                "product_identity": pid.passed}
        if not pid.passed:
            code = EXIT_IDENTITY
    _write(args.emit, out)
    return code


def cmd_sieve(args, config) -> int:
    if args.case is None:
        raise SystemExit("sieve needs --case 2 or --case 3")
    case = CaseTag.from_residue(args.case)
    q = extract_q_factors(build_s_factors(case, workers=args.threads), case, _multipliers(case, config))
    cert = run_case(q, config.get("stages", {}).get(_case_key(case)), workers=args.threads)
    summary = cert.summary()
    print(f"Case {case.label}: {summary['root_branches']} root branch(es), {summary['leaves']} leaves, "
          f"{summary['killed']} killed -> {summary['verdict']}")
    rows = [{"stage": r["name"], "before": r["roots_alive_before"], "after": r["roots_alive_after"],
             "expectations": "ok" if r["expectations_met"] else "MISSED"} for r in cert.stage_reports]
    print(_table(rows, ["stage", "before", "after", "expectations"]))
    _write(args.emit, cert.to_json())
    return EXIT_OK if cert.complete else EXIT_INCONCLUSIVE


def cmd_check(args, config) -> int:
    rep = check_certificate(args.certificate, seed=args.seed)
    print(f"{'accepted' if rep.ok else 'REJECTED'}: {rep.leaves} leaves, {rep.evaluations} evaluations")
    for e in rep.errors[:20]:
        print("  " + e)
    return EXIT_OK if rep.ok else EXIT_INCONCLUSIVE


def cmd_crosscheck(args, config) -> int:
    r = crosscheck(args.m, args.samples, args.bound, args.seed, workers=args.threads)
    print(_table([{"m": r.m, "checked": r.checked, "skipped": r.skipped,
                   "mismatches": len(r.mismatches), "min_index": r.min_index}],
                 ["m", "checked", "skipped", "mismatches", "min_index"]))
    print(json.dumps(r.to_json()))
    _write(args.emit, r.to_json())
    if r.mismatches:
        return EXIT_IDENTITY
    return EXIT_OK if r.ok else EXIT_INCONCLUSIVE


def cmd_prove(args, config) -> int:
    reports = []
    for case in _cases(args.case):
        rep = prove(case, config, threads=args.threads, seed=args.seed, enrich=not args.skip_enrichment)
        reports.append(rep)
        line = f"Case {case.label}: {rep.verdict}"
        if rep.failed_stage:
            line += f" (failed at {rep.failed_stage})"
        print(line)
        print("  " + ", ".join(f"{k} {v:.2f}s" for k, v in rep.timings.items()))
    if args.emit:
        payload = reports[0].to_json() if len(reports) == 1 else {"version": REPORT_VERSION,
                                                                   "reports": [r.to_json() for r in reports]}
        _write(args.emit, payload)
    return max(exit_code(r.verdict) for r in reports)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="octic-monogenity",
                                description="Non-monogenity of Q(i, m^(1/4)) for m = 2, 3 mod 4.")
    p.add_argument("--version", action="version", version=__version__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--case", type=int, choices=(2, 3), help="m mod 4 (default: both cases)")
    common.add_argument("--emit", metavar="PATH", help="write JSON output here")
    common.add_argument("--threads", type=int, default=1)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--config", metavar="PATH", help="optional JSON config")
    sub = p.add_subparsers(dest="verb", required=True)
    sub.add_parser("basis", parents=[common], help="integral bases and discriminants").set_defaults(fn=cmd_basis)
    sub.add_parser("sfactors", parents=[common], help="expand S1..S6").set_defaults(fn=cmd_sfactors)
    sub.add_parser("qfactors", parents=[common], help="divide out multipliers").set_defaults(fn=cmd_qfactors)
    sub.add_parser("sieve", parents=[common], help="run the congruence cascade").set_defaults(fn=cmd_sieve)
    c = sub.add_parser("check", parents=[common], help="replay a sieve certificate")
    c.add_argument("certificate")
    c.set_defaults(fn=cmd_check)
    x = sub.add_parser("crosscheck", parents=[common], help="compare with direct indices at fixed m")
    x.add_argument("--m", type=int, required=True)
    x.add_argument("--samples", type=int, default=100)
    x.add_argument("--bound", type=int, default=5)
    x.set_defaults(fn=cmd_crosscheck)
    pr = sub.add_parser("prove", parents=[common], help="full pipeline")
    pr.add_argument("--skip-enrichment", action="store_true")
    pr.set_defaults(fn=cmd_prove)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    logging.basicConfig(level=os.environ.get("OCTIC_LOG_LEVEL", "WARNING").upper(),
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    return args.fn(args, load_config(args.config))


if __name__ == "__main__":
    sys.exit(main())
