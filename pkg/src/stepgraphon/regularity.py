"""Weak regularity by partition pumping with a pluggable index parameter."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .core import AtomPartition, StepGraphon, complete_bipartite, cycle, edge_density, l1_distance
from .cutmetrics import EXACT_CAP, cut_norm, cut_norm_upper, mass_matrix
from .errors import BoundNotMet, DivisibilityViolation, GraphonError, IterationCapExceeded
from .homdensity import hom_density
from .order import SQUARE, XLOGX, int_f, stepping

HARD_CAP = 64
WITNESS_FLOOR = 1e-12  # smaller square integrals are round-off, not witnesses


@dataclass(frozen=True)
class ThetaParameter:
    """A graphon parameter usable as a regularity index or as a test subject."""

    name: str
    evaluator: Callable[[StepGraphon], float]
    continuity_class: str  # "cut-distance-continuous" | "L1-only"
    identifying_flag: str  # "identifying" | "compatible" | "unknown"
    value_range: tuple[float, float] = (0.0, 1.0)

    def __call__(self, W: StepGraphon) -> float:
        return self.evaluator(W)

    @property
    def span(self) -> float:
        return self.value_range[1] - self.value_range[0]


REGISTRY: dict[str, ThetaParameter] = {}


def register(theta: ThetaParameter) -> ThetaParameter:
    if theta.name in REGISTRY:
        raise GraphonError(f"parameter {theta.name!r} already registered")
    REGISTRY[theta.name] = theta
    return theta


def get_theta(name: str) -> ThetaParameter:
    try:
        return REGISTRY[name]
    except KeyError:
        raise GraphonError(f"unknown parameter {name!r}; known: {sorted(REGISTRY)}") from None


_C4, _C6, _K12 = cycle(4), cycle(6), complete_bipartite(1, 2)

register(ThetaParameter("int_square", lambda W: int_f(SQUARE, W), "L1-only", "identifying"))
register(ThetaParameter("int_xlogx", lambda W: int_f(XLOGX, W), "L1-only", "identifying", (-1 / math.e, 0.0)))
register(ThetaParameter("c4", lambda W: hom_density(_C4, W), "cut-distance-continuous", "identifying"))
register(ThetaParameter("c6", lambda W: hom_density(_C6, W), "cut-distance-continuous", "identifying"))
register(ThetaParameter("k12", lambda W: hom_density(_K12, W), "cut-distance-continuous", "compatible"))
register(ThetaParameter("edge_density", edge_density, "cut-distance-continuous", "compatible"))


# ---------------------------------------------------------------------------
# witnesses and pumping


@dataclass
class SymmetricWitness:
    X: tuple[int, ...]
    value: float
    found: bool
    cut_norm: float
    source: str = ""


def square_integral(K: StepGraphon, X) -> float:
    X = np.asarray(list(X), dtype=int)
    if X.size == 0:
        return 0.0
    return float(mass_matrix(K)[np.ix_(X, X)].sum())


def find_symmetric_witness(
    K: StepGraphon, eps: float, seed: int = 0, restarts: int = 256, cap: int = EXACT_CAP
) -> SymmetricWitness:
    """A set ``X`` with ``|int_{X x X} K| > eps/4`` when the cut norm of ``K`` exceeds ``eps``.

    Candidates are ``S, T, S|T, S&T, S-T, T-S`` from a cut-norm witness; for a
    symmetric kernel the best of them is at least half the cut norm.  A seeded
    random search with single-flip ascent is kept as a fallback.
    """
    strategy = "exact" if K.k <= cap else "heuristic"
    norm, w = cut_norm(K, strategy, seed=seed)
    if norm <= eps:
        return SymmetricWitness((), 0.0, False, norm, "cut norm within eps")
    S, T = set(w.S), set(w.T)
    cands = [S, T, S | T, S & T, S - T, T - S]
    best_X, best_v = (), 0.0
    for X in cands:
        v = square_integral(K, sorted(X))
        if abs(v) > abs(best_v):
            best_X, best_v = tuple(sorted(X)), v
    if abs(best_v) > eps / 4:
        return SymmetricWitness(best_X, best_v, True, norm, "candidates")
    M = mass_matrix(K)
    rng = np.random.default_rng(seed)
    for _ in range(restarts):
        x = rng.integers(0, 2, K.k).astype(bool)
        for sgn in (1.0, -1.0):
            y = x.copy()
            val = sgn * M[np.ix_(y, y)].sum()
            improved = True
            while improved:
                improved = False
                for i in range(K.k):
                    y[i] = ~y[i]
                    v = sgn * M[np.ix_(y, y)].sum()
                    if v > val + 1e-15:
                        val, improved = v, True
                    else:
                        y[i] = ~y[i]
            if val > abs(best_v):
                best_X, best_v = tuple(np.flatnonzero(y).tolist()), sgn * val
    return SymmetricWitness(best_X, best_v, abs(best_v) > eps / 4, norm, "random")


def pump_partition(P: AtomPartition, X) -> AtomPartition:
    """Split every part into its intersection with ``X`` and the rest (empty parts dropped)."""
    Xs = set(int(i) for i in X)
    return AtomPartition.from_labels((p, i in Xs) for i, p in enumerate(P.part_of))


@dataclass
class PumpReport:
    witness_value: float
    theta_before: float
    theta_after: float
    slack: float
    vacuous: bool = False


def check_pump_inequality(W: StepGraphon, P: AtomPartition, X) -> PumpReport:
    """Slack of ``t(C4, W_P*) - t(C4, W_P) - eps^4/100`` with ``eps = |int_{X x X}(W - W_P)|``."""
    K = W - stepping(W, P, keep_atoms=True)
    eps_w = abs(square_integral(K, X))
    before = hom_density(_C4, stepping(W, P))
    if eps_w <= WITNESS_FLOOR:
        return PumpReport(eps_w, before, before, 0.0, vacuous=True)
    after = hom_density(_C4, stepping(W, pump_partition(P, X)))
    return PumpReport(eps_w, before, after, after - before - eps_w**4 / 100)


def refinement_slack(Q: StepGraphon, coarse: AtomPartition) -> float:
    """``t(C4, Q) - t(C4, R) - ||Q - R||^4 / 8`` for ``R`` the stepping of ``Q`` over ``coarse``."""
    R = stepping(Q, coarse, keep_atoms=True)
    norm = cut_norm_upper(Q - R)
    return hom_density(_C4, Q) - hom_density(_C4, R) - norm**4 / 8


# ---------------------------------------------------------------------------
# regularization


@dataclass
class TraceRow:
    step: int
    theta: float
    witness_value: float
    parts: int
    X: tuple[int, ...] = ()


@dataclass
class RegularityResult:
    partition: AtomPartition
    final_cutnorm_bound: float
    pump_trace: list[TraceRow]
    iterations: int
    theta_name: str
    theta_initial: float
    bound_exact: bool = True

    def partitions(self, k: int) -> list[AtomPartition]:
        """Partition before each pump, followed by the final one."""
        out = [AtomPartition.trivial(k)]
        for r in self.pump_trace:
            out.append(pump_partition(out[-1], r.X))
        return out

    def trace_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["step", "theta", "witness_value", "parts"])
        for r in self.pump_trace:
            w.writerow([r.step, repr(r.theta), repr(r.witness_value), r.parts])
        return buf.getvalue()


def fk_regularize(
    W: StepGraphon,
    eps: float,
    theta: ThetaParameter | str = "c4",
    seed: int = 0,
    hard_cap: int = HARD_CAP,
    cap: int = EXACT_CAP,
) -> RegularityResult:
    """Refine the trivial partition by symmetric witnesses until ``||W - W_P||_cut <= eps``.

    Termination is checked with a certified upper bound on the cut norm.  Every
    pump must strictly increase ``theta``; the run stops with
    :class:`IterationCapExceeded` if it does not, or if the step count passes
    ``1 + ceil(span / smallest increment)`` (never more than ``hard_cap``).
    """
    if not eps > 0:
        raise GraphonError("eps must be positive")
    if isinstance(theta, str):
        theta = get_theta(theta)
    P = AtomPartition.trivial(W.k)
    th = theta(stepping(W, P))
    th0 = th
    trace: list[TraceRow] = []
    min_inc = math.inf
    limit = hard_cap
    it = 0
    while True:
        K = W - stepping(W, P, keep_atoms=True)
        bound = cut_norm_upper(K, cap)
        if bound <= eps:
            return RegularityResult(P, bound, trace, it, theta.name, th0, W.k <= cap)
        if it >= limit:
            raise IterationCapExceeded(f"no convergence after {it} pumps (cap {limit})", trace)
        wit = find_symmetric_witness(K, eps, seed=seed + it, cap=cap)
        if not wit.found and wit.cut_norm <= eps:
            # the heuristic sees no eps-box but the certified bound is still loose
            # (large atom counts): keep refining with the best nonzero square
            wit = find_symmetric_witness(K, WITNESS_FLOOR, seed=seed + it, cap=cap)
            if not wit.found:
                raise IterationCapExceeded(f"certified bound {bound!r} above eps and no witness at step {it}", trace)
        elif not wit.found:
            raise IterationCapExceeded(f"no symmetric witness above eps/4 at step {it}", trace)
        Pn = pump_partition(P, wit.X)
        th_new = theta(stepping(W, Pn))
        it += 1
        trace.append(TraceRow(it, th_new, wit.value, Pn.part_count, wit.X))
        inc = th_new - th
        if not inc > 0:
            raise IterationCapExceeded(f"{theta.name} did not increase at step {it} ({inc!r})", trace)
        min_inc = min(min_inc, inc)
        limit = min(hard_cap, 1 + math.ceil(theta.span / min_inc))
        P, th = Pn, th_new


def random_grouping(
    G: StepGraphon,
    O: AtomPartition,
    U: AtomPartition,
    t: int,
    seed: int = 0,
    max_attempts: int = 100,
) -> tuple[AtomPartition, float]:
    """Group the cells of ``O`` inside each part of ``U`` randomly into groups of ``t`` cells.

    Resamples until ``||G_U - G_R||_1 <= 2 t^(-1/4)``.  ``O`` must be an
    equipartition refining ``U``; returns ``(R, measured L1 distance)``.
    """
    if t < 1:
        raise DivisibilityViolation("t must be positive")
    cell_mass = G.weights @ O.indicator()
    if not np.allclose(cell_mass, cell_mass[0], rtol=0, atol=1e-12):
        raise GraphonError("O is not an equipartition")
    if not O.refines(U):
        raise GraphonError("O does not refine U")
    cell_part = np.zeros(O.part_count, dtype=int)
    for a in range(G.k):
        cell_part[O.part_of[a]] = U.part_of[a]
    members = [np.flatnonzero(cell_part == u) for u in range(U.part_count)]
    for u, m in enumerate(members):
        if len(m) % t:
            raise DivisibilityViolation(f"part {u} has {len(m)} cells, not a multiple of {t}")
    base = stepping(G, U, keep_atoms=True)
    bound = 2 * t**-0.25
    rng = np.random.default_rng(seed)
    best = None
    for _ in range(max_attempts):
        group_of_cell = np.zeros(O.part_count, dtype=int)
        g = 0
        for m in members:
            shuffled = rng.permutation(m)
            for start in range(0, len(shuffled), t):
                group_of_cell[shuffled[start : start + t]] = g
                g += 1
        R = AtomPartition(tuple(int(group_of_cell[O.part_of[a]]) for a in range(G.k)), g)
        d = l1_distance(base, stepping(G, R, keep_atoms=True))
        if best is None or d < best[1]:
            best = (R, d)
        if d <= bound:
            return R, d
    got = "no sample" if best is None else f"L1 distance {best[1]!r}"
    raise BoundNotMet(f"{got} above {bound!r} after {max_attempts} attempts")
