"""Congruence cascades showing that Q1 = ... = Q6 = +/-1 has no integer solution.

A branch fixes the residue class of each sieve variable (root branches fix
parities, refinements split a variable further).  On a branch the Q factors
are substituted and reduced mod 2^K; each constraint is a signed combination
of Q's with a modulus 2^k, and it

* kills the branch if the combination is constant mod 2^k with a value no
  choice of signs Q_i = +/-1 can produce,
* lets it survive if the constant value is admissible,
* triggers a parity split on a variable of the non-constancy witness otherwise.

The cascade itself is data (lists of stages of constraints), so the same
engine runs both cases and alternative orderings.
"""
from __future__ import annotations

import itertools
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .field_algebra import CaseTag
from .index_form import QFactorSet
from .polyring import (
    Constant,
    ConstancyResult,
    IntPolynomial,
    NonConstant,
    allowed_residues,
    constancy_mod,
    var_sort_key,
)

log = logging.getLogger(__name__)

CERT_VERSION = "1.0.0"
SIEVE_VARS = ("x2", "x3", "x4", "x5", "x6", "x7", "x8", "n")
PARITY_VARS = {"x2": "t2", "x3": "t3", "x4": "t4", "x5": "t5", "x6": "t6",
               "x7": "t7", "x8": "t8", "n": "t9"}

KILLED = "KILLED"
SURVIVES = "SURVIVES"
NONCONSTANT = "NONCONSTANT"
REFINED = "REFINED"
INCONCLUSIVE = "INCONCLUSIVE"


class Inconclusive(RuntimeError):
    def __init__(self, certificate: "SieveCertificate"):
        alive = [l.id for l in certificate.leaves if l.verdict != KILLED]
        super().__init__(f"{len(alive)} branch(es) not killed: {alive[:10]}")
        self.certificate = certificate


@dataclass(frozen=True)
class Constraint:
    combo: tuple[tuple[int, int], ...]
    k: int

    @classmethod
    def of(cls, combo: Iterable[Sequence[int]], k: int) -> "Constraint":
        return cls(tuple((int(i), int(c)) for i, c in combo), int(k))

    @property
    def modulus(self) -> int:
        return 1 << self.k

    @property
    def allowed(self) -> frozenset[int]:
        return allowed_residues([c for _, c in self.combo], self.k)

    @property
    def label(self) -> str:
        parts = []
        for i, c in self.combo:
            mag = "" if abs(c) == 1 else f"{abs(c)}*"
            if not parts:
                parts.append(("-" if c < 0 else "") + f"{mag}Q{i}")
            else:
                parts.append(("- " if c < 0 else "+ ") + f"{mag}Q{i}")
        return " ".join(parts) + f" mod {self.modulus}"

    def polynomial(self, qs: Sequence[IntPolynomial]) -> IntPolynomial:
        out = IntPolynomial.const(0)
        for i, c in self.combo:
            out = out + c * qs[i - 1]
        return out


@dataclass
class Stage:
    name: str
    constraints: list[Constraint]
    expect: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, d: Mapping) -> "Stage":
        return cls(d["name"], [Constraint.of(c, k) for c, k in d["constraints"]], dict(d.get("expect", {})))


def _single(i, k):
    return ([(i, 1)], k)


# Default cascades; each constraint is (combo, k) with combo = [(Q-index, coeff)].
CASE_I_STAGES = [
    {"name": "parity", "constraints": [_single(i, 1) for i in range(1, 7)]},
    {"name": "combo", "constraints": [([(4, 1), (6, -1), (3, 1), (5, -1)], 4)],
     "expect": {"observed": {"Q4 - Q6 + Q3 - Q5 mod 16": [8]}, "survivors": 0}},
]

CASE_II_STAGES = [
    {"name": "a", "constraints": [_single(i, 2) for i in range(1, 7)]
        + [_single(1, 3), _single(3, 3), _single(5, 3), ([(6, 1), (4, -1)], 3)]},
    {"name": "b", "constraints": [_single(1, 4)],
     "expect": {"parities_after": {"x5": 0, "x7": 1}}},
    {"name": "c", "constraints": [_single(2, 2), _single(4, 2), _single(6, 2),
                                  _single(1, 3), _single(3, 3), _single(5, 3),
                                  ([(6, 1), (4, -1)], 3), ([(3, 1), (5, -1)], 4)],
     "expect": {"survivors": 4, "observed": {"Q3 - Q5 mod 16": [0, 8]}}},
    {"name": "d", "constraints": [_single(5, 4)],
     "expect": {"shape": {"label": "Q5 mod 16", "polynomial": "8*t5^2 + 8*t7^2 + 8*t7 + 9"},
                "refinement": {"x5": [4, 2]}}},
    {"name": "e", "constraints": [([(5, 1), (3, -1)], 5), ([(4, 1), (6, -1)], 4)],
     "expect": {"parities_before": {"x6": 0, "x8": 0}, "survivors": 0}},
]


@dataclass(frozen=True)
class Refinement:
    """``var = 2**s * new_var + r``."""

    var: str
    s: int
    r: int
    new_var: str

    def to_json(self) -> dict:
        return {"var": self.var, "s": self.s, "r": self.r, "new_var": self.new_var,
                "text": f"{self.var} = {1 << self.s}*{self.new_var} + {self.r}"}


@dataclass
class Step:
    stage: str
    constraint: Constraint
    verdict: str
    residue: int | None
    witness: tuple | None = None
    shape_match: bool | None = None

    def to_json(self) -> dict:
        d = {
            "stage": self.stage,
            "combo": [list(x) for x in self.constraint.combo],
            "label": self.constraint.label,
            "modulus": self.constraint.modulus,
            "residue": self.residue,
            "allowed": sorted(self.constraint.allowed),
            "verdict": self.verdict,
        }
        if self.witness is not None:
            d["witness"] = {"points": [dict(w) for w in self.witness[0]], "residues": list(self.witness[1])}
        if self.shape_match is not None:
            d["shape_match"] = self.shape_match
        return d


@dataclass
class Leaf:
    id: str
    root: int
    parities: dict[str, int]
    refinements: list[Refinement]
    affine: dict[str, tuple[int, int, str]]
    steps: list[Step]
    verdict: str

    def alive_after(self, stage_names: set[str]) -> bool:
        for st in self.steps:
            if st.stage in stage_names and st.verdict in (KILLED,):
                return False
        return True

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "root": self.root,
            "parities": dict(self.parities),
            "refinements": [r.to_json() for r in self.refinements],
            "affine": {v: list(a) for v, a in sorted(self.affine.items(), key=lambda kv: var_sort_key(kv[0]))},
            "steps": [s.to_json() for s in self.steps],
            "verdict": self.verdict,
            "killed_by": next((i for i, s in enumerate(self.steps) if s.verdict == KILLED), None),
        }


@dataclass
class SieveCertificate:
    case: CaseTag
    stages: list[Stage]
    leaves: list[Leaf]
    root_count: int
    stage_reports: list[dict]
    q_factors: tuple[str, ...]
    extra: dict = field(default_factory=dict)

    @property
    def complete(self) -> bool:
        return all(l.verdict == KILLED for l in self.leaves)

    @property
    def survivors(self) -> list[Leaf]:
        return [l for l in self.leaves if l.verdict != KILLED]

    def summary(self) -> dict:
        return {
            "root_branches": self.root_count,
            "leaves": len(self.leaves),
            "killed": sum(l.verdict == KILLED for l in self.leaves),
            "inconclusive": sum(l.verdict != KILLED for l in self.leaves),
            "verdict": "COMPLETE" if self.complete else INCONCLUSIVE,
            "expectations_met": all(r.get("expectations_met", True) for r in self.stage_reports),
        }

    def to_json(self) -> dict:
        return {
            "version": CERT_VERSION,
            "case": self.case.residue,
            "case_label": self.case.label,
            "sieve_vars": list(SIEVE_VARS),
            "q_factors": {f"Q{i}": t for i, t in enumerate(self.q_factors, start=1)},
            "stages": [
                {"name": s.name, "constraints": [[[list(x) for x in c.combo], c.k] for c in s.constraints],
                 "expect": s.expect}
                for s in self.stages
            ],
            "stage_reports": self.stage_reports,
            "branches": [l.to_json() for l in self.leaves],
            "summary": self.summary(),
            **self.extra,
        }


# -- primitives ---------------------------------------------------------------

def enumerate_parities() -> list[dict[str, int]]:
    """All 256 parity assignments of (x2..x8, n); index 0 is all even, n varies fastest."""
    return [dict(zip(SIEVE_VARS, bits)) for bits in itertools.product((0, 1), repeat=len(SIEVE_VARS))]


def parity_bindings(parities: Mapping[str, int]) -> dict[str, IntPolynomial]:
    return {v: 2 * IntPolynomial.var(PARITY_VARS[v]) + e for v, e in parities.items()}


def apply_constraint(qs: Sequence[IntPolynomial], c: Constraint) -> tuple[str, ConstancyResult]:
    res = constancy_mod(c.polynomial(qs), c.k)
    if isinstance(res, NonConstant):
        return NONCONSTANT, res
    return (SURVIVES if res.residue in c.allowed else KILLED), res


def deduced_parities(parity_sets: Iterable[Mapping[str, int]]) -> dict[str, int]:
    """Variables whose parity is the same across every given assignment."""
    sets = list(parity_sets)
    if not sets:
        return {}
    out = {}
    for v in sets[0]:
        vals = {p[v] for p in sets}
        if len(vals) == 1:
            out[v] = vals.pop()
    return out


def _fresh_name(var: str, taken: set[str]) -> str:
    if var.startswith("x") and var[1:].isdigit():
        cand = "t" + var[1:]
    elif var == "n":
        cand = "t9"
    else:
        cand = var + "'"
    while cand in taken:
        cand += "'"
    return cand


# -- branch processing ----------------------------------------------------------

@dataclass
class _State:
    id: str
    root: int
    parities: dict
    refinements: list
    affine: dict            # original var -> (a, b, current var)
    qs: list
    steps: list


@dataclass(frozen=True)
class Limits:
    max_refinements: int = 8
    max_s_per_var: int = 3


def _split(state: _State, var: str, r: int, modulus: int) -> _State:
    taken = set()
    for q in state.qs:
        taken.update(q.gens)
    taken.update(a[2] for a in state.affine.values())
    new = _fresh_name(var, taken)
    image = 2 * IntPolynomial.var(new) + r
    qs = [q.substitute({var: image}, modulus) for q in state.qs]
    affine = {}
    for orig, (a, b, cur) in state.affine.items():
        affine[orig] = (2 * a, a * r + b, new) if cur == var else (a, b, cur)
    return _State(f"{state.id}.{r}", state.root, state.parities,
                  state.refinements + [Refinement(var, 1, r, new)], affine, qs, list(state.steps))


def _s_used(state: _State, var: str) -> int:
    for orig, (a, b, cur) in state.affine.items():
        if cur == var:
            base = 2 if orig in state.parities else 1
            return (a // base).bit_length() - 1
    return 0


def _process(state: _State, stages: Sequence[Stage], si: int, ci: int, modulus: int,
             limits: Limits, out: list[Leaf]) -> None:
    for s_idx in range(si, len(stages)):
        stage = stages[s_idx]
        shape = stage.expect.get("shape")
        for c_idx in range(ci if s_idx == si else 0, len(stage.constraints)):
            c = stage.constraints[c_idx]
            verdict, res = apply_constraint(state.qs, c)
            shape_match = None
            resumed = bool(state.steps) and state.steps[-1].verdict == REFINED and state.steps[-1].constraint == c
            if shape and shape["label"] == c.label and not resumed:
                target = IntPolynomial.parse(shape["polynomial"])
                diff = constancy_mod(c.polynomial(state.qs) - target, c.k)
                shape_match = isinstance(diff, Constant) and diff.residue == 0
            if verdict == SURVIVES:
                state.steps.append(Step(stage.name, c, SURVIVES, res.residue, shape_match=shape_match))
                continue
            if verdict == KILLED:
                state.steps.append(Step(stage.name, c, KILLED, res.residue, shape_match=shape_match))
                out.append(_leaf(state, KILLED))
                return
            # non-constant: split a witness variable by parity
            a, b = res.witness
            var = next(v for v in sorted(a, key=var_sort_key) if a[v] != b[v])
            wit = ((a, b), res.residues)
            if len(state.refinements) >= limits.max_refinements or _s_used(state, var) >= limits.max_s_per_var:
                state.steps.append(Step(stage.name, c, INCONCLUSIVE, None, wit, shape_match))
                out.append(_leaf(state, INCONCLUSIVE))
                return
            state.steps.append(Step(stage.name, c, REFINED, None, wit, shape_match))
            for r in (0, 1):
                _process(_split(state, var, r, modulus), stages, s_idx, c_idx, modulus, limits, out)
            return
    out.append(_leaf(state, INCONCLUSIVE))


def _leaf(state: _State, verdict: str) -> Leaf:
    return Leaf(state.id, state.root, dict(state.parities), list(state.refinements),
                dict(state.affine), list(state.steps), verdict)


def _run_root(root: int, parities: dict, qs: Sequence[IntPolynomial], stages: Sequence[Stage],
              modulus: int, limits: Limits) -> list[Leaf]:
    if parities:
        sub = [q.substitute(parity_bindings(parities), modulus) for q in qs]
    else:
        sub = [q.reduce_mod(modulus) for q in qs]
    affine = {}
    for v in SIEVE_VARS:
        affine[v] = (2, parities[v], PARITY_VARS[v]) if v in parities else (1, 0, v)
    state = _State(str(root), root, dict(parities), [], affine, sub, [])
    out: list[Leaf] = []
    _process(state, stages, 0, 0, modulus, limits, out)
    return out


_WORKER: dict = {}


def _pool_init(q_texts, stages, modulus, limits):
    _WORKER["qs"] = [IntPolynomial.parse(t) for t in q_texts]
    _WORKER["stages"] = stages
    _WORKER["modulus"] = modulus
    _WORKER["limits"] = limits


def _pool_run(args):
    root, parities = args
    w = _WORKER
    return _run_root(root, parities, w["qs"], w["stages"], w["modulus"], w["limits"])


def run_cascade(qs: Sequence[IntPolynomial], stages: Sequence[Stage], roots: Sequence[dict],
                case: CaseTag, workers: int = 1, limits: Limits = Limits()) -> SieveCertificate:
    K = max(c.k for s in stages for c in s.constraints)
    modulus = 1 << K
    reduced = [q.reduce_mod(modulus) for q in qs]
    jobs = list(enumerate(roots))
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers, initializer=_pool_init,
                                 initargs=([str(q) for q in reduced], list(stages), modulus, limits)) as pool:
            chunks = list(pool.map(_pool_run, jobs, chunksize=8))
    else:
        chunks = [_run_root(i, p, reduced, stages, modulus, limits) for i, p in jobs]
    leaves = [leaf for chunk in chunks for leaf in chunk]
    reports = stage_reports(stages, leaves, len(roots))
    return SieveCertificate(case, list(stages), leaves, len(roots), reports, tuple(str(q) for q in qs))


def _classes_after(leaf: Leaf, done: set[str]) -> dict[str, tuple[int, int]]:
    """Residue classes of refined original variables, using only splits made in ``done`` stages."""
    splits = [st.stage for st in leaf.steps if st.verdict == REFINED]
    cls = {v: (2, e) for v, e in leaf.parities.items()}
    cur = {v: PARITY_VARS[v] for v in leaf.parities}
    for stage, ref in zip(splits, leaf.refinements):
        if stage not in done:
            break
        for v, name in cur.items():
            if name == ref.var:
                a, b = cls[v]
                cls[v] = (a << ref.s, a * ref.r + b)
                cur[v] = ref.new_var
    return {v: ab for v, ab in cls.items() if ab[0] > 2}


def stage_reports(stages: Sequence[Stage], leaves: Sequence[Leaf], root_count: int) -> list[dict]:
    """Per-stage survivor counts, observed residues, deduced parities and expectation checks."""
    reports = []
    by_root: dict[int, list[Leaf]] = {}
    for l in leaves:
        by_root.setdefault(l.root, []).append(l)
    done: set[str] = set()
    prev_alive = sorted(by_root)
    for stage in stages:
        before = deduced_parities(by_root[r][0].parities for r in prev_alive) if prev_alive else {}
        done.add(stage.name)
        alive = [r for r in sorted(by_root) if any(l.alive_after(done) for l in by_root[r])]
        after = deduced_parities(by_root[r][0].parities for r in alive) if alive else {}
        observed: dict[str, set] = {}
        shape_matches = []
        refinements = set()
        seen_steps = set()
        for r in prev_alive:
            for l in by_root[r]:
                for idx, st in enumerate(l.steps):
                    if st.stage != stage.name:
                        continue
                    # steps shared by sibling leaves are counted once
                    key = (r, l.id.rsplit(".", len(l.refinements))[0], idx, st.residue, st.constraint)
                    if st.residue is not None:
                        observed.setdefault(st.constraint.label, set()).add(st.residue)
                    if st.shape_match is not None and key not in seen_steps:
                        shape_matches.append(st.shape_match)
                    seen_steps.add(key)
                if l.alive_after(done):
                    for orig, (a, b) in _classes_after(l, done).items():
                        refinements.add((orig, a, b))
        rep = {
            "name": stage.name,
            "roots_alive_before": len(prev_alive),
            "roots_alive_after": len(alive),
            "leaves_alive_after": sum(l.alive_after(done) for l in leaves),
            "observed": {k: sorted(v) for k, v in observed.items()},
            "parities_before": before,
            "parities_after": after,
            "refined_classes": [{"var": v, "modulus": a, "residue": b} for v, a, b in sorted(refinements)],
        }
        checks = {}
        exp = stage.expect
        if "survivors" in exp:
            checks["survivors"] = {"expected": exp["survivors"], "observed": len(alive)}
        for key in ("parities_before", "parities_after"):
            if key in exp:
                got = rep[key]
                checks[key] = {"expected": exp[key], "observed": {v: got.get(v) for v in exp[key]}}
        if "observed" in exp:
            for label, vals in exp["observed"].items():
                checks[f"observed:{label}"] = {"expected": sorted(vals), "observed": rep["observed"].get(label, [])}
        if "shape" in exp:
            checks["shape"] = {"expected": True, "observed": bool(shape_matches) and all(shape_matches)}
        if "refinement" in exp:
            want = {v: list(ab) for v, ab in exp["refinement"].items()}
            got = {}
            for v, a, b in refinements:
                if v in want:
                    got[v] = [a, b]
            checks["refinement"] = {"expected": want, "observed": got}
        for ch in checks.values():
            ch["met"] = ch["expected"] == ch["observed"]
        rep["checks"] = checks
        rep["expectations_met"] = all(ch["met"] for ch in checks.values())
        reports.append(rep)
        prev_alive = alive
    return reports


# -- the two cases --------------------------------------------------------------

def case1_contradiction(q: QFactorSet, stages: Sequence[Mapping] | None = None,
                        workers: int = 1, limits: Limits = Limits()) -> SieveCertificate:
    """Single root branch (no parity split).  The 4-term combination Q4 - Q6 + Q3 - Q5 is
    preceded by Q_i odd checks, since the combination alone is not constant on
    all of Z^8 (it vanishes at x = 0)."""
    if q.case is not CaseTag.CASE_I:
        raise ValueError("case1_contradiction needs case I Q-factors")
    st = [Stage.from_dict(d) for d in (stages or CASE_I_STAGES)]
    cert = run_cascade(q.factors, st, [{}], q.case, workers, limits)
    combo = Constraint.of([(4, 1), (6, -1), (3, 1), (5, -1)], 4)
    literal = constancy_mod(combo.polynomial(q.factors), combo.k)
    cert.extra["unconditional_check"] = {
        "label": combo.label,
        "result": _result_json(literal),
        "allowed": sorted(combo.allowed),
    }
    return cert


def cascade_case2(q: QFactorSet, stages: Sequence[Mapping] | None = None,
                  workers: int = 1, limits: Limits = Limits()) -> SieveCertificate:
    if q.case is not CaseTag.CASE_II:
        raise ValueError("cascade_case2 needs case II Q-factors")
    st = [Stage.from_dict(d) for d in (stages or CASE_II_STAGES)]
    return run_cascade(q.factors, st, enumerate_parities(), q.case, workers, limits)


def run_case(q: QFactorSet, stages=None, workers: int = 1, strict: bool = False) -> SieveCertificate:
    fn = case1_contradiction if q.case is CaseTag.CASE_I else cascade_case2
    cert = fn(q, stages, workers)
    if strict and not cert.complete:
        raise Inconclusive(cert)
    return cert


def _result_json(res: ConstancyResult) -> dict:
    if isinstance(res, Constant):
        return {"constant": True, "residue": res.residue, "modulus": res.modulus}
    return {"constant": False, "modulus": res.modulus,
            "witness": [dict(res.witness[0]), dict(res.witness[1])], "residues": list(res.residues)}
