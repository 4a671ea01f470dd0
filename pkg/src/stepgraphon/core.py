"""Step graphons, pattern graphs, partitions and versions.

A step graphon lives on the interval model of the ground space: atom ``i``
occupies ``[c_{i-1}, c_i)`` where ``c`` is the cumulative sum of the weights.
Atom order therefore matters for anything geometric (stripes, dyadic test
sets, interval refinements).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    BadWeights,
    EmptyPart,
    GraphonError,
    LabelMismatch,
    NonSymmetric,
    RangeViolation,
    RefinementTooLarge,
    WeightMismatch,
)

WEIGHT_TOL = 1e-12
NORMALIZE_TOL = 1e-9
MEASURE_TOL = 1e-9
DEFAULT_REFINEMENT_CAP = 4096


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class StepGraphon:
    """Symmetric block function: atom weights plus a symmetric value matrix.

    ``kind`` is ``"graphon"`` (values in [0, 1]) or ``"kernel"`` (values in
    ``[-bound, bound]``).  Instances are immutable; use
    :func:`make_step_graphon` to build validated ones.
    """

    weights: np.ndarray
    values: np.ndarray
    kind: str = "graphon"
    bound: float = 1.0

    @property
    def k(self) -> int:
        return len(self.weights)

    @property
    def mass(self) -> np.ndarray:
        """Matrix of block integrals ``mu_i mu_j W_ij``."""
        return np.outer(self.weights, self.weights) * self.values

    @property
    def boundaries(self) -> np.ndarray:
        """Right endpoints of the atom intervals (last one is 1)."""
        c = np.cumsum(self.weights)
        c[-1] = 1.0
        return c

    def degrees(self) -> np.ndarray:
        return self.values @ self.weights

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values)))

    def is_graphon(self) -> bool:
        return self.kind == "graphon"

    def __sub__(self, other: "StepGraphon") -> "StepGraphon":
        return difference(self, other)

    def __add__(self, other: "StepGraphon") -> "StepGraphon":
        a, b = common_refinement(self, other)
        return _kernel(a.weights, a.values + b.values)

    def scaled(self, c: float) -> "StepGraphon":
        return _kernel(self.weights, c * self.values)

    def as_kernel(self) -> "StepGraphon":
        return _kernel(self.weights, self.values)

    def allclose(self, other: "StepGraphon", atol: float = 1e-12) -> bool:
        """Same atom sequence and values up to ``atol``."""
        return (
            self.k == other.k
            and np.allclose(self.weights, other.weights, rtol=0, atol=atol)
            and np.allclose(self.values, other.values, rtol=0, atol=atol)
        )

    def refine(self, parent: Sequence[int], weights: Sequence[float]) -> "StepGraphon":
        """Re-express on a finer atom sequence; ``parent[a]`` is the old atom of new atom ``a``."""
        parent = np.asarray(parent, dtype=int)
        return StepGraphon(
            _frozen(weights),
            _frozen(self.values[np.ix_(parent, parent)]),
            self.kind,
            self.bound,
        )

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "weights": [float(x) for x in self.weights],
            "values": [[float(x) for x in row] for row in self.values],
        }

    def __repr__(self) -> str:
        return f"StepGraphon(kind={self.kind!r}, k={self.k})"


def make_step_graphon(
    weights: Sequence[float],
    values: Sequence[Sequence[float]],
    kind: str = "graphon",
    bound: float | None = None,
) -> StepGraphon:
    """Validate and build a :class:`StepGraphon`.

    Weights that sum to 1 within 1e-9 are renormalized; anything further off
    raises :class:`BadWeights`.  Symmetry is checked exactly.
    """
    w = np.asarray(weights, dtype=float).ravel()
    v = np.asarray(values, dtype=float)
    if w.size == 0:
        raise BadWeights("at least one atom is required")
    if v.shape != (w.size, w.size):
        raise GraphonError(f"values must be {w.size}x{w.size}, got {v.shape}")
    if not np.all(np.isfinite(w)) or np.any(w <= 0):
        raise BadWeights("atom weights must be positive and finite")
    total = w.sum()
    if abs(total - 1.0) > NORMALIZE_TOL:
        raise BadWeights(f"weights sum to {total!r}, not 1")
    w = w / total
    if not np.all(np.isfinite(v)):
        raise RangeViolation("values must be finite")
    if not np.array_equal(v, v.T):
        raise NonSymmetric("value matrix is not symmetric")
    if kind == "graphon":
        if np.any(v < 0) or np.any(v > 1):
            raise RangeViolation("graphon values must lie in [0, 1]")
        b = 1.0
    elif kind == "kernel":
        m = float(np.max(np.abs(v)))
        b = m if bound is None else float(bound)
        if m > b:
            raise RangeViolation(f"kernel values exceed the bound {b}")
    else:
        raise GraphonError(f"unknown kind {kind!r}")
    return StepGraphon(_frozen(w), _frozen(v), kind, b)


def _kernel(weights, values) -> StepGraphon:
    v = np.asarray(values, dtype=float)
    v = (v + v.T) / 2
    return StepGraphon(_frozen(weights), _frozen(v), "kernel", float(np.max(np.abs(v))))


def uniform_grid(values: Sequence[Sequence[float]], kind: str = "graphon") -> StepGraphon:
    """Graphon on ``n`` equal atoms with the given ``n x n`` matrix."""
    v = np.asarray(values, dtype=float)
    if v.ndim != 2 or v.shape[0] != v.shape[1]:
        raise GraphonError("values must be a square matrix")
    n = v.shape[0]
    return make_step_graphon(np.full(n, 1.0 / n), v, kind)


def constant(p: float, k: int = 1) -> StepGraphon:
    return uniform_grid(np.full((k, k), float(p)))


def edge_density(W: StepGraphon) -> float:
    return float(W.weights @ W.values @ W.weights)


def l1_norm(K: StepGraphon) -> float:
    return float(np.sum(np.outer(K.weights, K.weights) * np.abs(K.values)))


def l2_norm_sq(K: StepGraphon) -> float:
    return float(np.sum(np.outer(K.weights, K.weights) * K.values**2))


def l1_distance(U: StepGraphon, W: StepGraphon) -> float:
    return l1_norm(difference(U, W))


def difference(U: StepGraphon, W: StepGraphon) -> StepGraphon:
    """Kernel ``U - W`` on the common refinement."""
    a, b = common_refinement(U, W)
    return _kernel(a.weights, a.values - b.values)


# ---------------------------------------------------------------------------
# pattern graphs


@dataclass(frozen=True)
class SimpleGraph:
    """Finite simple graph on vertices ``0..n-1``."""

    n: int
    edges: tuple[tuple[int, int], ...]
    name: str = ""

    def __post_init__(self):
        seen = set()
        norm = []
        for u, v in self.edges:
            u, v = int(u), int(v)
            if u == v:
                raise GraphonError(f"loop at vertex {u}")
            if not (0 <= u < self.n and 0 <= v < self.n):
                raise GraphonError(f"edge ({u}, {v}) out of range for n={self.n}")
            e = (min(u, v), max(u, v))
            if e in seen:
                raise GraphonError(f"duplicate edge {e}")
            seen.add(e)
            norm.append(e)
        object.__setattr__(self, "edges", tuple(sorted(norm)))

    @property
    def e(self) -> int:
        return len(self.edges)

    @property
    def v(self) -> int:
        return self.n

    def degrees(self) -> list[int]:
        d = [0] * self.n
        for u, v in self.edges:
            d[u] += 1
            d[v] += 1
        return d

    def is_connected(self) -> bool:
        if self.n == 0:
            return True
        adj = {i: set() for i in range(self.n)}
        for u, v in self.edges:
            adj[u].add(v)
            adj[v].add(u)
        seen, stack = {0}, [0]
        while stack:
            x = stack.pop()
            for y in adj[x] - seen:
                seen.add(y)
                stack.append(y)
        return len(seen) == self.n

    def __str__(self) -> str:
        return self.name or f"G(n={self.n}, e={self.e})"


def path(k: int) -> SimpleGraph:
    """Path on ``k`` vertices (``k - 1`` edges)."""
    return SimpleGraph(k, tuple((i, i + 1) for i in range(k - 1)), f"P{k}")


def cycle(k: int) -> SimpleGraph:
    if k < 3:
        raise GraphonError("cycles need at least 3 vertices")
    return SimpleGraph(k, tuple((i, (i + 1) % k) for i in range(k)), f"C{k}")


def complete_bipartite(a: int, b: int) -> SimpleGraph:
    edges = tuple((i, a + j) for i in range(a) for j in range(b))
    return SimpleGraph(a + b, edges, f"K{a},{b}")


def star(ell: int) -> SimpleGraph:
    g = complete_bipartite(1, ell)
    return SimpleGraph(g.n, g.edges, f"K1,{ell}")


def complete(n: int) -> SimpleGraph:
    return SimpleGraph(n, tuple(itertools.combinations(range(n), 2)), f"K{n}")


def hypercube(d: int = 3) -> SimpleGraph:
    n = 1 << d
    edges = tuple((u, u ^ (1 << b)) for u in range(n) for b in range(d) if u < u ^ (1 << b))
    return SimpleGraph(n, edges, f"Q{d}")


def c4_plus() -> SimpleGraph:
    """4-cycle with a pendant edge."""
    return SimpleGraph(5, ((0, 1), (1, 2), (2, 3), (3, 0), (0, 4)), "C4+")


def single_edge() -> SimpleGraph:
    return SimpleGraph(2, ((0, 1),), "K2")


def catalog(name: str) -> SimpleGraph:
    """Look up a pattern graph by name: ``P4``, ``C6``, ``K2,3``, ``K1,2``, ``Q3``, ``C4+``, ``K2``."""
    s = name.strip().upper().replace("_", "")
    if s in ("C4+", "C4PLUS"):
        return c4_plus()
    if s in ("K2", "EDGE"):
        return single_edge()
    if s.startswith("Q"):
        return hypercube(int(s[1:]))
    if s.startswith("P"):
        return path(int(s[1:]))
    if s.startswith("C"):
        return cycle(int(s[1:]))
    if s.startswith("K") and "," in s:
        a, b = s[1:].split(",")
        g = complete_bipartite(int(a), int(b))
        return SimpleGraph(g.n, g.edges, f"K{a},{b}")
    if s.startswith("K"):
        return complete(int(s[1:]))
    raise GraphonError(f"unknown graph name {name!r}")


@dataclass(frozen=True, eq=False)
class Decoration:
    """A pattern graph with a step kernel attached to every edge."""

    graph: SimpleGraph
    labels: Mapping[tuple[int, int], StepGraphon]

    def __post_init__(self):
        labels = {(min(e), max(e)): W for e, W in self.labels.items()}
        missing = set(self.graph.edges) - set(labels)
        if missing:
            raise LabelMismatch(f"unlabelled edges: {sorted(missing)}")
        extra = set(labels) - set(self.graph.edges)
        if extra:
            raise LabelMismatch(f"labels on non-edges: {sorted(extra)}")
        ws = [W.weights for W in labels.values()]
        for w in ws[1:]:
            if len(w) != len(ws[0]) or not np.allclose(w, ws[0], rtol=0, atol=WEIGHT_TOL):
                raise LabelMismatch("all labels must share the same atom weights")
        object.__setattr__(self, "labels", labels)

    @property
    def weights(self) -> np.ndarray:
        return next(iter(self.labels.values())).weights

    @classmethod
    def constant(cls, H: SimpleGraph, W: StepGraphon) -> "Decoration":
        return cls(H, {e: W for e in H.edges})


# ---------------------------------------------------------------------------
# partitions and versions


@dataclass(frozen=True)
class AtomPartition:
    """Labelling of atoms into parts ``0..part_count-1`` (all nonempty)."""

    part_of: tuple[int, ...]
    part_count: int = -1

    def __post_init__(self):
        po = tuple(int(p) for p in self.part_of)
        object.__setattr__(self, "part_of", po)
        count = self.part_count if self.part_count >= 0 else (max(po) + 1 if po else 0)
        object.__setattr__(self, "part_count", count)
        used = set(po)
        if any(p < 0 or p >= count for p in used):
            raise GraphonError("part ids must lie in 0..part_count-1")
        if len(used) != count:
            missing = sorted(set(range(count)) - used)
            raise EmptyPart(f"parts {missing} are empty")

    @classmethod
    def from_labels(cls, labels: Iterable) -> "AtomPartition":
        """Canonical relabelling by first occurrence; drops unused labels."""
        ids: dict = {}
        out = []
        for lab in labels:
            if lab not in ids:
                ids[lab] = len(ids)
            out.append(ids[lab])
        return cls(tuple(out), len(ids))

    @classmethod
    def trivial(cls, k: int) -> "AtomPartition":
        return cls((0,) * k, 1)

    @classmethod
    def discrete(cls, k: int) -> "AtomPartition":
        return cls(tuple(range(k)), k)

    @property
    def k(self) -> int:
        return len(self.part_of)

    def parts(self) -> list[np.ndarray]:
        po = np.asarray(self.part_of)
        return [np.flatnonzero(po == p) for p in range(self.part_count)]

    def indicator(self) -> np.ndarray:
        """``k x part_count`` 0/1 membership matrix."""
        m = np.zeros((self.k, self.part_count))
        m[np.arange(self.k), self.part_of] = 1.0
        return m

    def lift(self, parent: Sequence[int]) -> "AtomPartition":
        """Pull back to a refined atom sequence."""
        return AtomPartition(tuple(self.part_of[p] for p in parent), self.part_count)

    def refines(self, other: "AtomPartition") -> bool:
        """True if every part of ``self`` lies inside one part of ``other``."""
        seen: dict[int, int] = {}
        for a, b in zip(self.part_of, other.part_of):
            if seen.setdefault(a, b) != b:
                return False
        return True

    def to_dict(self) -> dict:
        return {"part_of": list(self.part_of), "part_count": self.part_count}


@dataclass(frozen=True)
class AtomPermutation:
    """Bijection on atom indices; new atom ``i`` looks like old atom ``perm[i]``."""

    perm: tuple[int, ...]

    def __post_init__(self):
        p = tuple(int(x) for x in self.perm)
        if sorted(p) != list(range(len(p))):
            raise GraphonError("perm is not a bijection")
        object.__setattr__(self, "perm", p)

    @classmethod
    def identity(cls, k: int) -> "AtomPermutation":
        return cls(tuple(range(k)))

    def check_for(self, W: StepGraphon, atol: float = WEIGHT_TOL) -> None:
        if len(self.perm) != W.k:
            raise WeightMismatch(f"permutation has {len(self.perm)} atoms, graphon {W.k}")
        w = W.weights
        bad = [i for i, j in enumerate(self.perm) if abs(w[i] - w[j]) > atol]
        if bad:
            raise WeightMismatch(f"atoms {bad} mapped across unequal weights")

    def compose(self, other: "AtomPermutation") -> "AtomPermutation":
        """``self o other``: ``i -> self[other[i]]``."""
        return AtomPermutation(tuple(self.perm[j] for j in other.perm))

    def inverse(self) -> "AtomPermutation":
        inv = [0] * len(self.perm)
        for i, j in enumerate(self.perm):
            inv[j] = i
        return AtomPermutation(tuple(inv))


def apply_version(W: StepGraphon, phi: AtomPermutation) -> StepGraphon:
    """The version ``W^phi(x, y) = W(phi(x), phi(y))`` for an equal-weight atom permutation."""
    phi.check_for(W)
    p = np.asarray(phi.perm)
    return StepGraphon(W.weights, _frozen(W.values[np.ix_(p, p)]), W.kind, W.bound)


def tensor_product(U: StepGraphon, V: StepGraphon) -> StepGraphon:
    """``(U x V)((x1, x2), (y1, y2)) = U(x1, y1) V(x2, y2)``; atom ``(i, p)`` has index ``i * k_V + p``."""
    w = np.kron(U.weights, V.weights)
    v = np.kron(U.values, V.values)
    if U.is_graphon() and V.is_graphon():
        return StepGraphon(_frozen(w), _frozen(v), "graphon", 1.0)
    return StepGraphon(_frozen(w), _frozen(v), "kernel", U.bound * V.bound)


def block_diagonal_half(U: StepGraphon, V: StepGraphon) -> StepGraphon:
    """``U`` squeezed onto ``[0, 1/2)``, ``V`` onto ``[1/2, 1)``, zero elsewhere."""
    w = np.concatenate([U.weights / 2, V.weights / 2])
    v = np.zeros((U.k + V.k, U.k + V.k))
    v[: U.k, : U.k] = U.values
    v[U.k :, U.k :] = V.values
    kind = "graphon" if U.is_graphon() and V.is_graphon() else "kernel"
    return StepGraphon(_frozen(w), _frozen(v), kind, max(U.bound, V.bound))


# ---------------------------------------------------------------------------
# interval refinements


def merge_cuts(*cut_lists: Iterable[float], tol: float = WEIGHT_TOL) -> np.ndarray:
    """Sorted union of cut points in (0, 1], merging points closer than ``tol``."""
    pts = np.sort(np.concatenate([np.asarray(list(c), dtype=float) for c in cut_lists] + [[1.0]]))
    out = []
    for x in pts:
        if x <= tol:
            continue
        if out and x - out[-1] <= tol:
            continue
        out.append(x)
    out[-1] = 1.0
    return np.asarray(out)


def refine_to_cuts(W: StepGraphon, cuts: np.ndarray) -> tuple[StepGraphon, np.ndarray]:
    """Re-express ``W`` on the atoms delimited by ``cuts`` (which must contain W's boundaries)."""
    left = np.concatenate([[0.0], cuts[:-1]])
    mids = (left + cuts) / 2
    parent = np.searchsorted(W.boundaries, mids, side="right")
    parent = np.minimum(parent, W.k - 1)
    weights = np.diff(np.concatenate([[0.0], cuts]))
    return W.refine(parent, weights), parent


def common_refinement(
    W1: StepGraphon, W2: StepGraphon, cap: int = DEFAULT_REFINEMENT_CAP
) -> tuple[StepGraphon, StepGraphon]:
    """Both graphons on the coarsest common refinement of their atom intervals."""
    if W1.k == W2.k and np.allclose(W1.weights, W2.weights, rtol=0, atol=WEIGHT_TOL):
        if W1.weights is W2.weights or np.array_equal(W1.weights, W2.weights):
            return W1, W2
        return W1, StepGraphon(W1.weights, W2.values, W2.kind, W2.bound)
    cuts = merge_cuts(W1.boundaries, W2.boundaries)
    if len(cuts) > cap:
        raise RefinementTooLarge(f"common refinement needs {len(cuts)} atoms (cap {cap})")
    a, _ = refine_to_cuts(W1, cuts)
    b, _ = refine_to_cuts(W2, cuts)
    b = StepGraphon(a.weights, b.values, b.kind, b.bound)
    return a, b


def equal_weight_classes(weights: np.ndarray, atol: float = WEIGHT_TOL) -> list[np.ndarray]:
    """Groups of atom indices with equal weight (in order of first appearance)."""
    classes: list[list[int]] = []
    reps: list[float] = []
    for i, w in enumerate(weights):
        for c, r in zip(classes, reps):
            if abs(w - r) <= atol:
                c.append(i)
                break
        else:
            classes.append([i])
            reps.append(w)
    return [np.asarray(c) for c in classes]


def twin_partition(W: StepGraphon, atol: float = 1e-12) -> AtomPartition:
    """Coarsest partition on which ``W`` is a step function (atoms with identical rows)."""
    labels = []
    reps: list[np.ndarray] = []
    for i in range(W.k):
        row = W.values[i]
        for j, r in enumerate(reps):
            if np.allclose(row, r, rtol=0, atol=atol):
                labels.append(j)
                break
        else:
            reps.append(row)
            labels.append(len(reps) - 1)
    return AtomPartition(tuple(labels), len(reps))
