"""Randomized testers for graphon parameters under stepping.

Instance distribution (the reference for every "pass" claim):

* atom count uniform in ``2..12``;
* atom weights uniform on the simplex, floored at 1e-3 and renormalized
  (``equal_weights=False``), or all equal;
* values i.i.d. uniform on [0, 1], symmetrized by reflecting the upper triangle;
* partitions are uniform random labellings of the atoms, relabelled canonically.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import AtomPartition, SimpleGraph, StepGraphon, l1_distance, make_step_graphon
from .homdensity import hom_density
from .order import stepping
from .regularity import ThetaParameter, get_theta

VIOLATION_TOL = 1e-6
PASS_TOL = 1e-9
MIN_GAP = 0.01


def random_weights(rng: np.random.Generator, k: int, equal: bool = False) -> np.ndarray:
    if equal:
        return np.full(k, 1.0 / k)
    w = rng.dirichlet(np.ones(k))
    w = np.maximum(w, 1e-3)
    return w / w.sum()


def random_symmetric(rng: np.random.Generator, k: int, low: float = 0.0, high: float = 1.0) -> np.ndarray:
    A = rng.uniform(low, high, (k, k))
    return np.triu(A) + np.triu(A, 1).T


def random_graphon(
    rng: np.random.Generator, k: int | None = None, equal_weights: bool = False, kmin: int = 2, kmax: int = 12
) -> StepGraphon:
    k = int(rng.integers(kmin, kmax + 1)) if k is None else k
    return make_step_graphon(random_weights(rng, k, equal_weights), random_symmetric(rng, k))


def random_kernel(rng: np.random.Generator, k: int | None = None, kmin: int = 2, kmax: int = 12) -> StepGraphon:
    """Kernel with values uniform in [-1, 1]."""
    k = int(rng.integers(kmin, kmax + 1)) if k is None else k
    return make_step_graphon(random_weights(rng, k), random_symmetric(rng, k, -1.0, 1.0), kind="kernel", bound=1.0)


def random_partition(rng: np.random.Generator, k: int, parts: int | None = None) -> AtomPartition:
    parts = int(rng.integers(1, k + 1)) if parts is None else parts
    return AtomPartition.from_labels(rng.integers(0, parts, k).tolist())


def planted_graphon(
    rng: np.random.Generator, k: int = 16, blocks: int | None = None, noise: float = 0.15
) -> StepGraphon:
    """Equal-atom graphon with a hidden block structure plus bounded noise."""
    blocks = int(rng.integers(2, 5)) if blocks is None else blocks
    B = random_symmetric(rng, blocks)
    lab = rng.integers(0, blocks, k)
    V = B[np.ix_(lab, lab)] + random_symmetric(rng, k, -noise, noise)
    return make_step_graphon(np.full(k, 1.0 / k), np.clip(V, 0, 1))


@dataclass
class Violation:
    W: StepGraphon
    P: AtomPartition
    theta_W: float
    theta_stepped: float

    def to_dict(self) -> dict:
        return {
            "W": self.W.to_dict(),
            "P": self.P.to_dict(),
            "theta_W": self.theta_W,
            "theta_stepped": self.theta_stepped,
        }


@dataclass
class ParameterTestReport:
    parameter: str
    trials: int
    violations: list[Violation] = field(default_factory=list)
    min_slack: float = float("inf")
    strict: bool = False
    slacks: list[float] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        if self.strict:
            return self.min_slack > 0
        return not self.violations

    def to_dict(self) -> dict:
        return {
            "parameter": self.parameter,
            "trials": self.trials,
            "strict": self.strict,
            "passed": self.passed,
            "min_slack": self.min_slack,
            "violations": [v.to_dict() for v in self.violations],
        }


def _resolve(theta) -> ThetaParameter:
    return get_theta(theta) if isinstance(theta, str) else theta


def test_step_sidorenko(theta, trials: int = 1000, seed: int = 0, tol: float = PASS_TOL) -> ParameterTestReport:
    """Record ``theta(W) - theta(W_P)`` on random pairs; a pair violates when it is below ``-tol``."""
    theta = _resolve(theta)
    rng = np.random.default_rng(seed)
    rep = ParameterTestReport(theta.name, trials)
    for _ in range(trials):
        W = random_graphon(rng)
        P = random_partition(rng, W.k)
        a, b = theta(W), theta(stepping(W, P))
        s = a - b
        rep.slacks.append(s)
        rep.min_slack = min(rep.min_slack, s)
        if s < -tol:
            rep.violations.append(Violation(W, P, a, b))
    return rep


def test_step_forcing(
    theta, trials: int = 1000, seed: int = 0, min_gap: float = MIN_GAP, tol: float = VIOLATION_TOL
) -> ParameterTestReport:
    """Strict version: pairs are drawn with ``||W - W_P||_1 >= min_gap`` and must have positive slack."""
    theta = _resolve(theta)
    rng = np.random.default_rng(seed)
    rep = ParameterTestReport(theta.name, trials, strict=True)
    for _ in range(trials):
        while True:
            W = random_graphon(rng)
            P = random_partition(rng, W.k, int(rng.integers(1, W.k)))
            WP = stepping(W, P, keep_atoms=True)
            if l1_distance(W, WP) >= min_gap:
                break
        a, b = theta(W), theta(WP)
        s = a - b
        rep.slacks.append(s)
        rep.min_slack = min(rep.min_slack, s)
        if s <= 0:
            rep.violations.append(Violation(W, P, a, b))
    return rep


test_step_sidorenko.__test__ = False
test_step_forcing.__test__ = False


@dataclass
class SearchResult:
    graph: str
    found: bool
    evaluations: int
    best_slack: float
    witness: Violation | None = None

    def to_dict(self) -> dict:
        d = {"graph": self.graph, "found": self.found, "evaluations": self.evaluations, "best_slack": self.best_slack}
        if self.witness is not None:
            d["witness"] = self.witness.to_dict()
        return d


def search_step_sidorenko_violation(
    H: SimpleGraph,
    budget: int = 100_000,
    seed: int = 0,
    threshold: float = VIOLATION_TOL,
    steps_per_restart: int = 400,
    kmax: int = 6,
) -> SearchResult:
    """Hill-climb ``t(H, W_P) - t(H, W)`` over equal-atom ``W`` and non-discrete ``P``.

    Moves perturb one entry of ``W`` or reassign one atom of ``P``; restarts are
    seeded.  Stops at the first slack above ``threshold``.
    """
    rng = np.random.default_rng(seed)
    evals = 0
    best = -np.inf
    best_w: Violation | None = None

    def score(V, P, k):
        W = StepGraphon(np.full(k, 1.0 / k), V)
        a = hom_density(H, W)
        b = hom_density(H, stepping(W, P, keep_atoms=True))
        return b - a, a, b

    while evals < budget:
        k = int(rng.integers(2, kmax + 1))
        V = random_symmetric(rng, k)
        P = random_partition(rng, k, int(rng.integers(1, k)))
        cur, a, b = score(V, P, k)
        evals += 1
        for _ in range(steps_per_restart):
            if evals >= budget:
                break
            V2, P2 = V, P
            if rng.random() < 0.1:
                lab = list(P.part_of)
                lab[int(rng.integers(k))] = int(rng.integers(k))
                cand = AtomPartition.from_labels(lab)
                if cand.part_count < k:
                    P2 = cand
            else:
                V2 = V.copy()
                i, j = rng.integers(k, size=2)
                V2[i, j] = V2[j, i] = np.clip(V2[i, j] + rng.normal(0, 0.3), 0, 1)
            s, a2, b2 = score(V2, P2, k)
            evals += 1
            if s >= cur:
                V, P, cur, a, b = V2, P2, s, a2, b2
        if cur > best:
            best = cur
            best_w = Violation(make_step_graphon(np.full(k, 1.0 / k), V), P, a, b)
        if best > threshold:
            return SearchResult(str(H), True, evals, float(best), best_w)
    return SearchResult(str(H), False, evals, float(best), None)
