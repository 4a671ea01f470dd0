"""Stripes, random reshuffles and approximation of a stepping by averages of versions.

Each part of a partition ``R`` is cut, left to right, into ``s`` stripes of
equal measure.  All stripes of a part receive the same relative subdivision,
so permuting stripes inside a part is an equal-weight atom permutation,
that is, a version.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import (
    DEFAULT_REFINEMENT_CAP,
    AtomPartition,
    AtomPermutation,
    StepGraphon,
    _frozen,
    apply_version,
    common_refinement,
    l1_distance,
)
from .cutmetrics import cut_norm
from .errors import CannotBridge, ConcentrationFailure, GraphonError, RefinementTooLarge
from .order import find_stepping_of_version, stepping

TooManyAtoms = RefinementTooLarge
PIECE_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class StripeRefinement:
    """Atom ``a`` of the refined graphon is piece ``piece[a]`` of stripe ``stripe[a]`` of part ``part[a]``."""

    base_partition: AtomPartition
    s: int
    part: np.ndarray
    stripe: np.ndarray
    piece: np.ndarray
    parent: np.ndarray

    def stripe_of(self, a: int) -> tuple[int, int]:
        return int(self.part[a]), int(self.stripe[a])

    @property
    def partition(self) -> AtomPartition:
        """The partition ``R`` lifted to the refined atoms."""
        return AtomPartition(tuple(int(p) for p in self.part), self.base_partition.part_count)

    @property
    def stripe_partition(self) -> AtomPartition:
        return AtomPartition.from_labels(zip(self.part.tolist(), self.stripe.tolist()))

    def index(self) -> dict[tuple[int, int, int], int]:
        return {(int(i), int(p), int(l)): a for a, (i, p, l) in enumerate(zip(self.part, self.stripe, self.piece))}


def refine_into_stripes(
    W: StepGraphon, R: AtomPartition, s: int, cap: int = DEFAULT_REFINEMENT_CAP
) -> tuple[StepGraphon, StripeRefinement]:
    """Re-express ``W`` so every part of ``R`` is a union of ``s`` equal, order-contiguous stripes."""
    if s < 1:
        raise GraphonError("s must be at least 1")
    if R.k != W.k:
        raise GraphonError("partition does not match the graphon")
    right = W.boundaries
    left = np.concatenate([[0.0], right[:-1]])
    pieces = []  # (global start, part, stripe, piece, parent, length)
    for i, atoms in enumerate(R.parts()):
        mu = W.weights[atoms]
        m = mu.sum()
        h = m / s
        local = np.concatenate([[0.0], np.cumsum(mu)])
        local[-1] = m
        # relative cut positions inside one stripe, shared by all stripes of the part
        rel = np.mod(local[1:-1], h) / h
        rel = rel[(rel > PIECE_TOL) & (rel < 1 - PIECE_TOL)]
        cuts = [0.0]
        for r in np.sort(rel):
            if r - cuts[-1] > PIECE_TOL:
                cuts.append(float(r))
        offs = np.array(cuts + [1.0]) * h
        nsub = len(offs) - 1
        for p in range(s):
            for l in range(nsub):
                a0 = p * h + offs[l]
                a1 = p * h + offs[l + 1]
                mid = (a0 + a1) / 2
                j = min(int(np.searchsorted(local, mid, side="right")) - 1, len(atoms) - 1)
                atom = atoms[j]
                g0 = left[atom] + (a0 - local[j])
                pieces.append((g0, i, p, l, atom, a1 - a0))
        if len(pieces) > cap:
            raise TooManyAtoms(f"stripe refinement needs more than {cap} atoms")
    pieces.sort(key=lambda t: (t[0], t[1], t[2], t[3]))
    arr = np.array([t[1:] for t in pieces], dtype=float)
    part, stripe, piece, parent = (arr[:, c].astype(int) for c in range(4))
    weights = arr[:, 4]
    weights = weights / weights.sum()
    Wr = W.refine(parent, weights)
    return Wr, StripeRefinement(R, s, part, stripe, piece, parent)


def reshuffle_permutation(ref: StripeRefinement, rng: np.random.Generator) -> AtomPermutation:
    """Draw independent uniform stripe permutations per part; atom ``(i,p,l)`` looks like ``(i,pi_i(p),l)``."""
    idx = ref.index()
    pis = [rng.permutation(ref.s) for _ in range(ref.base_partition.part_count)]
    perm = [idx[(i, int(pis[i][p]), l)] for i, p, l in zip(ref.part, ref.stripe, ref.piece)]
    return AtomPermutation(tuple(perm))


def sample_reshuffle(
    G: StepGraphon, R: AtomPartition, s: int, seed: int | np.random.Generator = 0
) -> tuple[StepGraphon, AtomPermutation, StripeRefinement]:
    """One random reshuffle of ``G`` with respect to ``R`` and ``s`` stripes."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    Gr, ref = refine_into_stripes(G, R, s)
    phi = reshuffle_permutation(ref, rng)
    return apply_version(Gr, phi), phi, ref


def _average_of_versions(Gr: StepGraphon, perms: list[AtomPermutation]) -> StepGraphon:
    acc = np.zeros_like(Gr.values)
    for phi in perms:
        p = np.asarray(phi.perm)
        acc += Gr.values[np.ix_(p, p)]
    acc /= len(perms)
    acc = (acc + acc.T) / 2
    return StepGraphon(Gr.weights, _frozen(np.clip(acc, 0, 1)), Gr.kind, Gr.bound)


@dataclass
class ConcentrationReport:
    s: int
    N: int
    trials: int
    target: float
    errors: list[float]
    baseline: float

    @property
    def fraction_under(self) -> float:
        return float(np.mean(np.asarray(self.errors) < self.target))

    @property
    def median(self) -> float:
        return float(np.median(self.errors))

    def to_dict(self) -> dict:
        return {
            "s": self.s,
            "N": self.N,
            "trials": self.trials,
            "target": self.target,
            "errors": self.errors,
            "fraction_under": self.fraction_under,
            "median": self.median,
            "baseline": self.baseline,
        }


def verify_average_concentration(
    G: StepGraphon, R: AtomPartition, s: int, N: int, trials: int, target: float = 0.2, seed: int = 0
) -> ConcentrationReport:
    """L1 error between the average of ``N`` reshuffles and the stepping of ``G`` over ``R``, per trial.

    Each trial draws from its own stream spawned from ``seed``; ``baseline`` is
    ``||G - G_R||_1`` for scale.
    """
    if s < 1 or N < 1 or trials < 1:
        raise GraphonError("s, N and trials must be positive")
    Gr, ref = refine_into_stripes(G, R, s)
    target_graphon = stepping(Gr, ref.partition, keep_atoms=True)
    errors = []
    for child in np.random.SeedSequence(seed).spawn(trials):
        rng = np.random.default_rng(child)
        perms = [reshuffle_permutation(ref, rng) for _ in range(N)]
        errors.append(l1_distance(_average_of_versions(Gr, perms), target_graphon))
    return ConcentrationReport(s, N, trials, target, errors, l1_distance(Gr, target_graphon))


# ---------------------------------------------------------------------------
# approximation by versions


@dataclass
class VersionEnsemble:
    versions: list[AtomPermutation]
    source: StepGraphon
    target: StepGraphon
    l1_error: float
    far_pairs: int
    threshold: float
    s: int
    base_phi: AtomPermutation
    base_weights: np.ndarray
    seed: int
    escalations: int = 0
    pair_lower_bounds: list[float] = field(default_factory=list)

    @property
    def N(self) -> int:
        return len(self.versions)

    def version(self, i: int) -> StepGraphon:
        return apply_version(self.source, self.versions[i])

    def average(self) -> StepGraphon:
        return _average_of_versions(self.source, self.versions)

    def manifest(self) -> dict:
        return {
            "seed": self.seed,
            "s": self.s,
            "N": self.N,
            "escalations": self.escalations,
            "base_weights": [float(x) for x in self.base_weights],
            "base_phi": list(self.base_phi.perm),
            "source_weights": [float(x) for x in self.source.weights],
            "permutations": [list(v.perm) for v in self.versions],
            "l1_error": self.l1_error,
            "far_pairs": self.far_pairs,
            "threshold": self.threshold,
            "pair_lower_bounds": self.pair_lower_bounds,
        }


def approx_by_versions(
    U: StepGraphon,
    V: StepGraphon,
    eps: float,
    delta_lower: float,
    seed: int = 0,
    s0: int = 16,
    N0: int = 16,
    escalations: int = 6,
    pair_restarts: int = 8,
) -> VersionEnsemble:
    """Versions of ``U`` whose average is ``eps``-close to ``V`` in L1, with many far-apart pairs.

    ``V`` must be a stepping of a version of ``U``; the bridge is searched
    first and :class:`CannotBridge` raised if none is found.  Pairs
    ``(2i, 2i+1)`` count as far when a cut-norm lower bound of their difference
    exceeds ``delta_lower / 32``; at least ``N/4`` are required.  ``s`` and
    ``N`` double on failure.
    """
    cert = find_stepping_of_version(V, U, seed=seed)
    if cert is None:
        raise CannotBridge("target is not a stepping of a version of the source (search failed)")
    Ur, Vr = common_refinement(U, V)
    G = apply_version(Ur, cert.phi)
    R = cert.R
    threshold = delta_lower / 32
    if R.part_count == Ur.k:
        # V is itself a version: no averaging needed
        if delta_lower > 0:
            raise GraphonError("delta_lower is positive but the target is a version of the source")
        ident = AtomPermutation.identity(G.k)
        return VersionEnsemble([ident, ident], G, Vr, l1_distance(G, Vr), 0, threshold, 1, cert.phi, Ur.weights, seed)
    s, N = s0, max(2, N0 + N0 % 2)
    rng = np.random.default_rng(seed)
    last = None
    for round_ in range(escalations + 1):
        Gs, ref = refine_into_stripes(G, R, s)
        Vs = Vr.refine(ref.parent, Gs.weights)
        perms = [reshuffle_permutation(ref, rng) for _ in range(N)]
        err = l1_distance(_average_of_versions(Gs, perms), Vs)
        lbs = []
        for i in range(N // 2):
            a = np.asarray(perms[2 * i].perm)
            b = np.asarray(perms[2 * i + 1].perm)
            D = StepGraphon(Gs.weights, _frozen(Gs.values[np.ix_(a, a)] - Gs.values[np.ix_(b, b)]), "kernel", 1.0)
            lbs.append(cut_norm(D, "heuristic", restarts=pair_restarts, seed=seed + i)[0])
        far = int(sum(v > threshold for v in lbs))
        ens = VersionEnsemble(perms, Gs, Vs, err, far, threshold, s, cert.phi, Ur.weights, seed, round_, lbs)
        if err < eps and (delta_lower <= 0 or far >= N / 4):
            return ens
        last = ens
        s, N = 2 * s, 2 * N
    raise ConcentrationFailure(
        f"after {escalations} escalations: l1 error {last.l1_error!r}, far pairs {last.far_pairs}/{last.N}"
    )
