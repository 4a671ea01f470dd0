"""Stepping, frequency measures, convex order and the structuredness probe."""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog

from .core import (
    AtomPartition,
    AtomPermutation,
    StepGraphon,
    _frozen,
    common_refinement,
    edge_density,
    equal_weight_classes,
    twin_partition,
)
from .errors import DomainViolation, EmptyPart, GraphonError, MassMismatch

MEASURE_TOL = 1e-9
MERGE_TOL = 1e-12
PROBE_L1_TOL = 1e-9
EXHAUSTIVE_LIMIT = 40320


# ---------------------------------------------------------------------------
# stepping


def stepping(W: StepGraphon, P: AtomPartition, keep_atoms: bool = False) -> StepGraphon:
    """Average ``W`` over the rectangles of ``P``.

    Returned on the coarse atom sequence (one atom per part, in part-id order)
    unless ``keep_atoms`` is set, in which case the averaged values are spread
    back over the original atoms.
    """
    if P.k != W.k:
        raise GraphonError(f"partition covers {P.k} atoms, graphon has {W.k}")
    I = P.indicator()
    m = W.weights @ I
    if np.any(m <= 0):
        raise EmptyPart("partition has a part of zero measure")
    avg = (I.T @ W.mass @ I) / np.outer(m, m)
    avg = (avg + avg.T) / 2
    if W.is_graphon():
        avg = np.clip(avg, 0.0, 1.0)
    if keep_atoms:
        po = np.asarray(P.part_of)
        return StepGraphon(W.weights, _frozen(avg[np.ix_(po, po)]), W.kind, W.bound)
    return StepGraphon(_frozen(m), _frozen(avg), W.kind, W.bound)


# ---------------------------------------------------------------------------
# discrete measures


@dataclass(frozen=True, eq=False)
class DiscreteMeasure:
    """Finite atomic measure on the line; atoms sorted by location, duplicates merged."""

    locations: np.ndarray
    masses: np.ndarray

    @classmethod
    def from_pairs(cls, pairs, merge_tol: float = MERGE_TOL) -> "DiscreteMeasure":
        pairs = sorted((float(x), float(m)) for x, m in pairs)
        locs: list[float] = []
        ms: list[float] = []
        for x, m in pairs:
            if m < 0:
                raise GraphonError("negative mass")
            if m == 0:
                continue
            if locs and x - locs[-1] <= merge_tol:
                ms[-1] += m
            else:
                locs.append(x)
                ms.append(m)
        return cls(_frozen(locs), _frozen(ms))

    @property
    def total(self) -> float:
        return float(self.masses.sum())

    @property
    def mean(self) -> float:
        return float(self.locations @ self.masses)

    def call_price(self, t) -> np.ndarray:
        t = np.atleast_1d(np.asarray(t, dtype=float))
        return np.clip(self.locations[None, :] - t[:, None], 0, None) @ self.masses

    def moment(self, p: float) -> float:
        return float(self.masses @ self.locations**p)

    def allclose(self, other: "DiscreteMeasure", tol: float = MEASURE_TOL) -> bool:
        return (
            len(self.locations) == len(other.locations)
            and np.allclose(self.locations, other.locations, rtol=0, atol=tol)
            and np.allclose(self.masses, other.masses, rtol=0, atol=tol)
        )

    def binned(self, resolution: float) -> "DiscreteMeasure":
        """Display helper: snap locations to a grid."""
        return DiscreteMeasure.from_pairs(
            (round(x / resolution) * resolution, m) for x, m in zip(self.locations, self.masses)
        )

    def to_dict(self) -> dict:
        return {"atoms": [[float(x), float(m)] for x, m in zip(self.locations, self.masses)]}

    @classmethod
    def from_dict(cls, d: dict) -> "DiscreteMeasure":
        return cls.from_pairs(d["atoms"])

    def __repr__(self) -> str:
        body = ", ".join(f"{m:.6g}@{x:.6g}" for x, m in zip(self.locations, self.masses))
        return f"DiscreteMeasure({body})"


def pushforward_frequencies(W: StepGraphon, mode: str = "range", resolution: float | None = None) -> DiscreteMeasure:
    """Distribution of values (``mode="range"``) or of degrees (``mode="degree"``)."""
    if mode == "range":
        mu = np.outer(W.weights, W.weights).ravel()
        meas = DiscreteMeasure.from_pairs(zip(W.values.ravel(), mu))
    elif mode == "degree":
        meas = DiscreteMeasure.from_pairs(zip(W.degrees(), W.weights))
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return meas.binned(resolution) if resolution else meas


class Flatness(str, enum.Enum):
    FLATTER = "Flatter"
    STRICTLY_FLATTER = "StrictlyFlatter"
    NOT_FLATTER = "NotFlatter"


@dataclass
class FlatnessResult:
    verdict: Flatness
    reason: str = ""
    coupling: np.ndarray | None = None

    @property
    def flatter(self) -> bool:
        return self.verdict != Flatness.NOT_FLATTER


def martingale_coupling(L1: DiscreteMeasure, L2: DiscreteMeasure) -> np.ndarray | None:
    """Coupling with marginals ``L1, L2`` whose conditional mean given the first coordinate is that coordinate.

    Solved as an LP feasibility problem; returns the ``n1 x n2`` plan or ``None``.
    """
    x, a = L1.locations, L1.masses
    y, b = L2.locations, L2.masses
    n1, n2 = len(x), len(y)
    rows, rhs = [], []
    for i in range(n1):
        r = np.zeros((n1, n2))
        r[i] = 1
        rows.append(r.ravel())
        rhs.append(a[i])
        r = np.zeros((n1, n2))
        r[i] = y - x[i]
        rows.append(r.ravel())
        rhs.append(0.0)
    for j in range(n2):
        r = np.zeros((n1, n2))
        r[:, j] = 1
        rows.append(r.ravel())
        rhs.append(b[j])
    res = linprog(np.zeros(n1 * n2), A_eq=np.array(rows), b_eq=np.array(rhs), bounds=(0, None), method="highs")
    if res.status != 0:
        return None
    return res.x.reshape(n1, n2)


def flatness_compare(
    L1: DiscreteMeasure,
    L2: DiscreteMeasure,
    tol: float = MEASURE_TOL,
    certificate: bool = True,
    on_mass_mismatch: str = "verdict",
) -> FlatnessResult:
    """Is ``L1`` at least as flat as ``L2`` (convex order ``L1 <=cx L2``)?

    Decided by equal mass, equal mean and call-price dominance at every atom
    location of either measure.  A martingale coupling is attached as a
    certificate when the answer is positive.
    """
    if abs(L1.total - L2.total) > tol:
        if on_mass_mismatch == "raise":
            raise MassMismatch(f"total masses {L1.total!r} and {L2.total!r} differ")
        return FlatnessResult(Flatness.NOT_FLATTER, "mass")
    if abs(L1.mean - L2.mean) > tol:
        return FlatnessResult(Flatness.NOT_FLATTER, "mean")
    ts = np.union1d(L1.locations, L2.locations)
    gap = L1.call_price(ts) - L2.call_price(ts)
    if np.any(gap > tol):
        i = int(np.argmax(gap))
        return FlatnessResult(Flatness.NOT_FLATTER, f"call price at {ts[i]!r}")
    coupling = martingale_coupling(L1, L2) if certificate else None
    verdict = Flatness.FLATTER if L1.allclose(L2, tol) else Flatness.STRICTLY_FLATTER
    return FlatnessResult(verdict, "", coupling)


# ---------------------------------------------------------------------------
# convex integral parameters


@dataclass(frozen=True)
class ConvexFunctionSpec:
    """A convex function on [0, 1].

    ``kind`` is ``square``, ``xlogx``, ``piecewise_linear`` (``points`` are
    ``(x, f(x))`` breakpoints, extended linearly) or ``polynomial``
    (``coeffs`` in ascending order).
    """

    kind: str
    points: tuple[tuple[float, float], ...] = ()
    coeffs: tuple[float, ...] = ()

    def __post_init__(self):
        if self.kind == "piecewise_linear":
            pts = sorted(self.points)
            if len(pts) < 2:
                raise GraphonError("piecewise linear needs two breakpoints")
            xs = np.array([p[0] for p in pts])
            ys = np.array([p[1] for p in pts])
            slopes = np.diff(ys) / np.diff(xs)
            if np.any(np.diff(slopes) < -1e-12):
                raise GraphonError("piecewise linear slopes must be nondecreasing")
            object.__setattr__(self, "points", tuple(pts))
        elif self.kind == "polynomial":
            grid = np.linspace(0, 1, 1001)
            d2 = np.polynomial.polynomial.polyval(grid, np.polynomial.polynomial.polyder(self.coeffs, 2))
            if np.any(d2 < -1e-12):
                raise GraphonError("polynomial is not convex on [0, 1]")
        elif self.kind not in ("square", "xlogx"):
            raise GraphonError(f"unknown convex function kind {self.kind!r}")

    @property
    def strictly_convex(self) -> bool:
        if self.kind in ("square", "xlogx"):
            return True
        if self.kind == "piecewise_linear":
            return False
        grid = np.linspace(0, 1, 1001)
        d2 = np.polynomial.polynomial.polyval(grid, np.polynomial.polynomial.polyder(self.coeffs, 2))
        return bool(np.all(d2 > 0))

    def __call__(self, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        if self.kind == "square":
            return v**2
        if self.kind == "xlogx":
            if np.any(v < 0):
                raise DomainViolation("x log x needs nonnegative arguments")
            out = np.zeros_like(v)
            pos = v > 0
            out[pos] = v[pos] * np.log(v[pos])
            return out
        if self.kind == "piecewise_linear":
            xs = np.array([p[0] for p in self.points])
            ys = np.array([p[1] for p in self.points])
            out = np.interp(v, xs, ys)
            lo, hi = v < xs[0], v > xs[-1]
            s0 = (ys[1] - ys[0]) / (xs[1] - xs[0])
            s1 = (ys[-1] - ys[-2]) / (xs[-1] - xs[-2])
            out[lo] = ys[0] + s0 * (v[lo] - xs[0])
            out[hi] = ys[-1] + s1 * (v[hi] - xs[-1])
            return out
        return np.polynomial.polynomial.polyval(v, self.coeffs)


SQUARE = ConvexFunctionSpec("square")
XLOGX = ConvexFunctionSpec("xlogx")


def int_f(f: ConvexFunctionSpec, W: StepGraphon) -> float:
    """``sum mu_i mu_j f(W_ij)``."""
    if np.any(W.values < 0) or np.any(W.values > 1):
        raise DomainViolation("convex integral parameters are defined for values in [0, 1]")
    return float(np.sum(np.outer(W.weights, W.weights) * f(W.values)))


# ---------------------------------------------------------------------------
# structuredness probe


class ProbeRelation(str, enum.Enum):
    CONFIRMED_BELOW = "ConfirmedBelow"
    REFUTED_BELOW = "RefutedBelow"
    UNKNOWN = "Unknown"


@dataclass
class SteppingCertificate:
    """``U`` equals the stepping of ``W^phi`` over ``R`` on the refined atom sequence."""

    weights: np.ndarray
    phi: AtomPermutation
    R: AtomPartition
    l1_error: float


@dataclass
class ProbeVerdict:
    relation: ProbeRelation
    evidence: list[tuple[str, str]] = field(default_factory=list)
    certificate: SteppingCertificate | None = None

    def to_dict(self) -> dict:
        d = {"relation": self.relation.value, "evidence": [list(e) for e in self.evidence]}
        if self.certificate is not None:
            c = self.certificate
            d["certificate"] = {
                "weights": [float(x) for x in c.weights],
                "phi": list(c.phi.perm),
                "R": list(c.R.part_of),
                "l1_error": c.l1_error,
            }
        return d


def _step_l1(Uv: np.ndarray, Wv: np.ndarray, mu: np.ndarray, I: np.ndarray, p: np.ndarray) -> float:
    Wp = Wv[np.ix_(p, p)]
    M = np.outer(mu, mu)
    m = mu @ I
    avg = (I.T @ (M * Wp) @ I) / np.outer(m, m)
    lifted = I @ avg @ I.T
    return float(np.sum(M * np.abs(Uv - lifted)))


def find_stepping_of_version(
    U: StepGraphon, W: StepGraphon, seed: int = 0, restarts: int = 64, tol: float = PROBE_L1_TOL
) -> SteppingCertificate | None:
    """Search an equal-weight permutation ``phi`` with ``U == (W^phi) stepped over R``.

    ``R`` is the twin partition of ``U`` on the common refinement: if any
    partition works, this coarsest one does too.  The permutation search is
    exhaustive up to ``EXHAUSTIVE_LIMIT`` candidates, otherwise a seeded
    swap local search.
    """
    Ur, Wr = common_refinement(U, W)
    k = Ur.k
    R = twin_partition(Ur)
    I = R.indicator()
    mu = Ur.weights
    classes = equal_weight_classes(mu)

    def cert(p, err):
        return SteppingCertificate(mu, AtomPermutation(tuple(int(i) for i in p)), R, err)

    ident = np.arange(k)
    err = _step_l1(Ur.values, Wr.values, mu, I, ident)
    if err <= tol:
        return cert(ident, err)
    count = math.prod(math.factorial(len(c)) for c in classes)
    if count <= EXHAUSTIVE_LIMIT:
        per = [list(itertools.permutations(c.tolist())) for c in classes]
        for combo in itertools.product(*per):
            p = ident.copy()
            for c, img in zip(classes, combo):
                p[c] = img
            err = _step_l1(Ur.values, Wr.values, mu, I, p)
            if err <= tol:
                return cert(p, err)
        return None
    rng = np.random.default_rng(seed)
    swappable = [c for c in classes if len(c) > 1]
    for r in range(restarts):
        p = ident.copy()
        if r:
            for c in swappable:
                p[c] = rng.permutation(c)
        cur = _step_l1(Ur.values, Wr.values, mu, I, p)
        stale = 0
        while stale < 4 * k and cur > tol:
            c = swappable[rng.integers(len(swappable))]
            a, b = rng.choice(c, 2, replace=False)
            q = p.copy()
            q[a], q[b] = q[b], q[a]
            v = _step_l1(Ur.values, Wr.values, mu, I, q)
            if v < cur - 1e-15:
                p, cur, stale = q, v, 0
            else:
                stale += 1
        if cur <= tol:
            return cert(p, cur)
    return None


def structuredness_probe(U: StepGraphon, W: StepGraphon, seed: int = 0, tol: float = MEASURE_TOL) -> ProbeVerdict:
    """Is ``U`` at most as structured as ``W``?  Three-valued.

    Necessary conditions (any failure refutes): equal edge density, flatter
    value and degree frequencies, spectral domination, smaller INT of the square.
    Sufficient condition: ``U`` is a stepping of a version of ``W``.
    """
    from .spectral import SpectralRelation, spectral_compare

    ev: list[tuple[str, str]] = []
    failed = False
    dU, dW = edge_density(U), edge_density(W)
    if abs(dU - dW) > tol:
        ev.append(("edge_density", f"mismatch {dU!r} vs {dW!r}"))
        failed = True
    else:
        ev.append(("edge_density", "equal"))
    for name, mode in (("range_frequencies", "range"), ("degree_frequencies", "degree")):
        r = flatness_compare(pushforward_frequencies(U, mode), pushforward_frequencies(W, mode), tol, certificate=False)
        ev.append((name, r.verdict.value + (f" ({r.reason})" if r.reason else "")))
        failed |= not r.flatter
    sc = spectral_compare(U, W)
    ev.append(("spectral", sc.relation.value))
    if sc.relation in (SpectralRelation.INCOMPARABLE, SpectralRelation.ABOVE):
        failed = True
    iu, iw = int_f(SQUARE, U), int_f(SQUARE, W)
    if iu > iw + tol:
        ev.append(("int_square", f"{iu!r} > {iw!r}"))
        failed = True
    else:
        ev.append(("int_square", f"{iu!r} <= {iw!r}"))
    if failed:
        return ProbeVerdict(ProbeRelation.REFUTED_BELOW, ev)
    c = find_stepping_of_version(U, W, seed=seed)
    if c is not None:
        ev.append(("stepping_certificate", f"l1 error {c.l1_error!r}"))
        return ProbeVerdict(ProbeRelation.CONFIRMED_BELOW, ev, c)
    ev.append(("stepping_certificate", "not found"))
    return ProbeVerdict(ProbeRelation.UNKNOWN, ev)
