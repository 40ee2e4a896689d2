"""Replay a sieve certificate using nothing but polynomial evaluation.

The checker trusts none of the sieve's reasoning.  It re-parses Q1..Q6 from
the certificate text and then checks three things.

1. Coverage: the residue classes of the leaves are pairwise disjoint and their
   densities sum to 1, so they partition the integer points.
2. Allowed sets: every recorded allowed set is recomputed by enumerating signs.
3. Residues: each recorded constant residue is re-evaluated at random integer
   points of the leaf's class, and each verdict must follow from residue and
   allowed set.  Every leaf must end in a kill.
"""
from __future__ import annotations

import itertools
import json
import random
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from .polyring import IntPolynomial

KILL_POINTS = 20
SURVIVE_POINTS = 5


@dataclass
class CheckReport:
    ok: bool
    errors: list[str] = field(default_factory=list)
    leaves: int = 0
    evaluations: int = 0

    def __bool__(self):
        return self.ok


def _enumerate_allowed(coeffs, modulus):
    return sorted({sum(c * e for c, e in zip(coeffs, signs)) % modulus
                   for signs in itertools.product((1, -1), repeat=len(coeffs))})


def _classes(branch) -> dict[str, tuple[int, int]]:
    return {v: (int(a), int(b) % int(a)) for v, (a, b, _) in branch["affine"].items()}


def _disjoint(c1, c2) -> bool:
    for v in c1.keys() & c2.keys():
        (a1, b1), (a2, b2) = c1[v], c2[v]
        g = min(a1, a2)
        if (b1 - b2) % g:
            return True
    return False


def check_coverage(branches) -> list[str]:
    errors = []
    classes = [_classes(b) for b in branches]
    for c in classes:
        for a, _ in c.values():
            if a <= 0 or a & (a - 1):
                errors.append(f"class modulus {a} is not a power of two")
                return errors
    total = sum((Fraction(1, 1) / _prod(a for a, _ in c.values()) for c in classes), Fraction(0))
    if total != 1:
        errors.append(f"leaf classes have total density {total}, not 1")
    for i, j in itertools.combinations(range(len(classes)), 2):
        if not _disjoint(classes[i], classes[j]):
            errors.append(f"leaves {branches[i]['id']} and {branches[j]['id']} overlap")
    return errors


def _prod(xs):
    out = 1
    for x in xs:
        out *= x
    return out


class Replayer:
    """Holds the parsed Q factors of one certificate and replays its steps."""

    def __init__(self, cert: dict | str | Path, seed: int = 0, kill_points: int = KILL_POINTS,
                 survive_points: int = SURVIVE_POINTS):
        if isinstance(cert, (str, Path)):
            cert = json.loads(Path(cert).read_text())
        self.cert = cert
        self.rng = random.Random(seed)
        self.kill_points = kill_points
        self.survive_points = survive_points
        self.qs = {int(k[1:]): IntPolynomial.parse(v) for k, v in cert["q_factors"].items()}
        self.evaluations = 0
        self._combos: dict = {}

    def _combo(self, combo, mod) -> IntPolynomial:
        key = (tuple(map(tuple, combo)), mod)
        if key not in self._combos:
            poly = IntPolynomial.const(0)
            for i, c in combo:
                poly = poly + c * self.qs[int(i)]
            self._combos[key] = poly.reduce_mod(mod)
        return self._combos[key]

    def check_step(self, br: dict, idx: int, st: dict | None = None) -> list[str]:
        """Errors for step ``idx`` of branch ``br`` (``st`` overrides the recorded step)."""
        steps = br["steps"]
        st = steps[idx] if st is None else st
        verdict = st["verdict"]
        if verdict not in ("KILLED", "SURVIVES"):
            return []
        errors = []
        if verdict == "KILLED" and idx != len(steps) - 1:
            errors.append(f"leaf {br['id']}: kill at step {idx} is not the last step")
        mod = int(st["modulus"])
        if mod <= 0 or mod & (mod - 1):
            return errors + [f"leaf {br['id']}: modulus {mod} is not a power of two"]
        allowed = _enumerate_allowed([c for _, c in st["combo"]], mod)
        if sorted(st["allowed"]) != allowed:
            errors.append(f"leaf {br['id']} step {idx}: allowed set {st['allowed']} != {allowed}")
        r = st["residue"]
        if (r in allowed) != (verdict == "SURVIVES"):
            errors.append(f"leaf {br['id']} step {idx}: verdict {verdict} contradicts residue {r}")
        poly = self._combo(st["combo"], mod)
        for _ in range(self.kill_points if verdict == "KILLED" else self.survive_points):
            point = _sample(br["affine"], poly.variables(), self.rng)
            self.evaluations += 1
            v = poly.evaluate(point, modulus=mod)
            if v != r:
                errors.append(f"leaf {br['id']} step {idx}: {st.get('label', st['combo'])} = {v} at {point}, "
                              f"certificate says {r}")
                break
        return errors

    def check(self, expected_q: dict[str, str] | None = None) -> CheckReport:
        errors: list[str] = []
        if expected_q is not None:
            for k, v in expected_q.items():
                if IntPolynomial.parse(v) != self.qs.get(int(k[1:])):
                    errors.append(f"{k} in the certificate differs from the expected factor")
        branches = self.cert["branches"]
        errors += check_coverage(branches)
        for br in branches:
            steps = br["steps"]
            if not steps or steps[-1]["verdict"] != "KILLED":
                errors.append(f"leaf {br['id']} does not end in a kill")
            for idx in range(len(steps)):
                errors += self.check_step(br, idx)
        return CheckReport(not errors, errors, len(branches), self.evaluations)


def check_certificate(cert: dict | str | Path, expected_q: dict[str, str] | None = None,
                      seed: int = 0, kill_points: int = KILL_POINTS,
                      survive_points: int = SURVIVE_POINTS) -> CheckReport:
    return Replayer(cert, seed, kill_points, survive_points).check(expected_q)


def _sample(affine, variables, rng) -> dict[str, int]:
    point = {}
    for v, (a, b, _) in affine.items():
        point[v] = int(a) * rng.randint(-10 ** 6, 10 ** 6) + int(b)
    for v in variables:
        if v not in point:
            point[v] = rng.randint(-10 ** 6, 10 ** 6)
    return point
