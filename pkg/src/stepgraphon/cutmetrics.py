"""Cut norm, cut-distance bounds, disjoint witnesses and a dyadic weak* metric.

For a step kernel the supremum over measurable boxes ``S x T`` is attained on
unions of atoms, so the exact cut norm is a maximization over ``{0,1}^k``.
Given the row indicator ``x`` the best column set is read off the sign of
``x^T M``; we enumerate ``x`` and get ``O(2^k k)`` work.
"""

from __future__ import annotations

import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .core import (
    AtomPermutation,
    StepGraphon,
    common_refinement,
    difference,
    edge_density,
    equal_weight_classes,
    l1_norm,
)
from .errors import TooLargeForExact

EXACT_CAP = 26
_LOW_BITS = 12


@dataclass(frozen=True)
class CutWitness:
    """Atom sets ``S, T`` and the signed integral of the kernel over ``S x T``."""

    S: tuple[int, ...]
    T: tuple[int, ...]
    value: float

    def to_dict(self) -> dict:
        return {"S": list(self.S), "T": list(self.T), "value": self.value}


@dataclass(frozen=True)
class DisjointWitness:
    """Disjoint sets given as pieces ``(atom, lo, hi)`` of atom intervals (fractions in [0, 1])."""

    A: tuple[tuple[int, float, float], ...]
    B: tuple[tuple[int, float, float], ...]
    value: float

    def measure_A(self, weights) -> float:
        return float(sum(weights[i] * (hi - lo) for i, lo, hi in self.A))

    def measure_B(self, weights) -> float:
        return float(sum(weights[i] * (hi - lo) for i, lo, hi in self.B))

    def is_disjoint(self) -> bool:
        for (i, a0, a1), (j, b0, b1) in itertools.product(self.A, self.B):
            if i == j and min(a1, b1) - max(a0, b0) > 0:
                return False
        return True


@dataclass(frozen=True)
class DistanceBounds:
    lower: float
    upper: float
    upper_certificate: AtomPermutation
    exact_upper: bool = True
    lower_source: str = ""
    refined_weights: np.ndarray | None = field(default=None, compare=False)

    def to_dict(self) -> dict:
        return {
            "lower": self.lower,
            "upper": self.upper,
            "upper_certificate": list(self.upper_certificate.perm),
            "exact_upper": self.exact_upper,
            "lower_source": self.lower_source,
        }


def mass_matrix(K: StepGraphon) -> np.ndarray:
    return np.outer(K.weights, K.weights) * K.values


def _bits(k: int, start: int, count: int) -> np.ndarray:
    idx = np.arange(start, start + count, dtype=np.int64)
    return ((idx[:, None] >> np.arange(k)) & 1).astype(float)


def _scan_block(M: np.ndarray, low: np.ndarray, high_rows: np.ndarray, hi_start: int, n_low: int):
    """Best (value, x, sign) over all x whose high part lies in the block."""
    best = (-1.0, 0, 1)
    low_sum = low.sum(axis=1)
    R = np.empty_like(low)
    for h, hrow in enumerate(high_rows):
        np.add(low, hrow, out=R)
        # positive and negative parts from |R| and the plain row sum
        signed = low_sum + hrow.sum()
        absum = np.abs(R, out=R).sum(axis=1)
        pos, neg = (absum + signed) / 2, (absum - signed) / 2
        ip, ineg = int(np.argmax(pos)), int(np.argmax(neg))
        cand = [(pos[ip], ip, 1), (neg[ineg], ineg, -1)]
        for v, i, sgn in cand:
            x = (hi_start + h) * n_low + i
            if v > best[0] or (v == best[0] and (x, -sgn) < (best[1], -best[2])):
                best = (float(v), x, sgn)
    return best


def _exact(M: np.ndarray, threads: int = 1) -> tuple[float, int, int]:
    k = M.shape[0]
    lo = min(k, _LOW_BITS)
    hi = k - lo
    low = _bits(lo, 0, 1 << lo) @ M[:lo]
    high = _bits(hi, 0, 1 << hi) @ M[lo:] if hi else np.zeros((1, k))
    n_high = high.shape[0]
    nblocks = max(1, min(threads * 4, n_high))
    edges = np.linspace(0, n_high, nblocks + 1).astype(int)
    jobs = [(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:]) if b > a]

    def run(job):
        a, b = job
        return _scan_block(M, low, high[a:b], a, 1 << lo)

    if threads > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(threads) as ex:
            results = list(ex.map(run, jobs))
    else:
        results = [run(j) for j in jobs]
    # reduction in block order keeps the lexicographic tie-break
    best = results[0]
    for r in results[1:]:
        if r[0] > best[0]:
            best = r
    return best


def _witness_from(M: np.ndarray, x: int, sign: int) -> CutWitness:
    k = M.shape[0]
    xs = np.array([(x >> i) & 1 for i in range(k)], dtype=bool)
    r = M[xs].sum(axis=0)
    T = r > 0 if sign > 0 else r < 0
    val = float(M[np.ix_(xs, T)].sum())
    return CutWitness(tuple(np.flatnonzero(xs).tolist()), tuple(np.flatnonzero(T).tolist()), val)


def cut_norm_exact(K: StepGraphon, cap: int = EXACT_CAP, threads: int = 1) -> tuple[float, CutWitness]:
    if K.k > cap:
        raise TooLargeForExact(f"{K.k} atoms exceeds the exact cap {cap}")
    M = mass_matrix(K)
    _, x, sign = _exact(M, threads)
    w = _witness_from(M, x, sign)
    return abs(w.value), w


def _ascend(M: np.ndarray, x: np.ndarray, max_iter: int = 100) -> tuple[float, np.ndarray, np.ndarray]:
    """Alternate best responses for ``max 1_S^T M 1_T``."""
    val = -np.inf
    y = np.zeros(M.shape[1], dtype=bool)
    for _ in range(max_iter):
        y = (x @ M) > 0
        x_new = (M @ y) > 0
        new = float(x_new @ M @ y)
        if new <= val + 1e-15:
            break
        x, val = x_new.astype(float), new
    y = (x @ M) > 0
    return float(x @ M @ y), x.astype(bool), y


def cut_norm_heuristic(K: StepGraphon, restarts: int = 32, seed: int = 0) -> tuple[float, CutWitness]:
    """Alternating maximization from seeded starts; the value is a lower bound on the cut norm."""
    M = mass_matrix(K)
    k = K.k
    rng = np.random.default_rng(seed)
    starts = [np.ones(k)]
    for i in range(k):
        e = np.zeros(k)
        e[i] = 1
        starts.append(e)
    starts.extend(rng.integers(0, 2, size=(restarts, k)).astype(float))
    best = (-1.0, None, None, 1)
    for sgn in (1, -1):
        for x0 in starts:
            v, S, T = _ascend(sgn * M, x0.copy())
            if v > best[0] + 1e-15:
                best = (v, S, T, sgn)
    _, S, T, _ = best
    val = float(M[np.ix_(S, T)].sum())
    return abs(val), CutWitness(tuple(np.flatnonzero(S).tolist()), tuple(np.flatnonzero(T).tolist()), val)


def cut_norm(
    K: StepGraphon,
    strategy: str = "exact",
    *,
    cap: int = EXACT_CAP,
    restarts: int = 32,
    seed: int = 0,
    threads: int = 1,
) -> tuple[float, CutWitness]:
    """Cut norm of a step kernel with a witness realizing it.

    ``strategy="exact"`` enumerates row sets (``k <= cap``); ``"heuristic"``
    runs seeded alternating maximization and returns a lower bound.
    """
    if strategy == "exact":
        return cut_norm_exact(K, cap, threads)
    if strategy == "heuristic":
        return cut_norm_heuristic(K, restarts, seed)
    raise ValueError(f"unknown strategy {strategy!r}")


def operator_norm(K: StepGraphon) -> float:
    s = np.sqrt(K.weights)
    A = s[:, None] * K.values * s[None, :]
    return float(np.max(np.abs(np.linalg.eigvalsh(A)))) if K.k else 0.0


def cut_norm_upper(K: StepGraphon, cap: int = EXACT_CAP) -> float:
    """Certified upper bound: exact when feasible, else min(operator norm, L1 norm)."""
    if K.k <= cap:
        return cut_norm_exact(K, cap)[0]
    return min(operator_norm(K), l1_norm(K))


def box_integral(K: StepGraphon, S, T) -> float:
    S = np.asarray(list(S), dtype=int)
    T = np.asarray(list(T), dtype=int)
    if S.size == 0 or T.size == 0:
        return 0.0
    return float(mass_matrix(K)[np.ix_(S, T)].sum())


def piece_integral(K: StepGraphon, A, B) -> float:
    w = K.weights
    return float(
        sum(w[i] * (a1 - a0) * w[j] * (b1 - b0) * K.values[i, j] for i, a0, a1 in A for j, b0, b1 in B)
    )


def disjoint_witness(K: StepGraphon, witness: CutWitness | None = None) -> DisjointWitness:
    """Disjoint ``A, B`` with ``|int_{A x B} K| >= ||K||_cut / 4``.

    Overlapping atoms are bisected: ``A`` takes left halves, ``B`` right halves.
    Two candidates are compared (split everything, split only ``S & T``) and
    the larger is returned.
    """
    if witness is None:
        _, witness = cut_norm(K)
    S, T = set(witness.S), set(witness.T)
    if not (S & T):
        A = tuple((i, 0.0, 1.0) for i in sorted(S))
        B = tuple((j, 0.0, 1.0) for j in sorted(T))
        if not A and not B:
            A, B = ((0, 0.0, 0.5),), ((0, 0.5, 1.0),)
        return DisjointWitness(A, B, piece_integral(K, A, B))
    cands = []
    A = tuple((i, 0.0, 0.5) for i in sorted(S))
    B = tuple((j, 0.5, 1.0) for j in sorted(T))
    cands.append((A, B))
    both = S & T
    A = tuple((i, 0.0, 0.5) if i in both else (i, 0.0, 1.0) for i in sorted(S))
    B = tuple((j, 0.5, 1.0) if j in both else (j, 0.0, 1.0) for j in sorted(T))
    cands.append((A, B))
    scored = [(abs(piece_integral(K, a, b)), n) for n, (a, b) in enumerate(cands)]
    _, n = max(scored, key=lambda t: (t[0], -t[1]))
    A, B = cands[n]
    return DisjointWitness(A, B, piece_integral(K, A, B))


# ---------------------------------------------------------------------------
# cut distance


def _density_gap_lower(U: StepGraphon, W: StepGraphon) -> tuple[float, str]:
    from .core import complete_bipartite, cycle
    from .homdensity import hom_density

    best, src = abs(edge_density(U) - edge_density(W)), "edge_density"
    for H in (cycle(3), cycle(4), complete_bipartite(1, 2)):
        gap = abs(hom_density(H, U) - hom_density(H, W)) / (4 * H.e)
        if gap > best:
            best, src = gap, f"counting:{H}"
    return best, src


def _is_constant(W: StepGraphon) -> bool:
    return bool(np.all(W.values == W.values.flat[0]))


def _cut_objective(Ur: StepGraphon, Wr: StepGraphon, cap: int):
    k = Ur.k
    exact = k <= cap
    M0 = np.outer(Ur.weights, Ur.weights)
    if exact:
        bits = _bits(k, 0, 1 << k) if k <= 14 else None

        def f(p):
            D = M0 * (Ur.values[np.ix_(p, p)] - Wr.values)
            if bits is not None:
                R = bits @ D
                return float(max(np.clip(R, 0, None).sum(1).max(), -np.clip(R, None, 0).sum(1).max()))
            return float(_exact(D)[0])

        return f, True

    def g(p):
        D = Ur.values[np.ix_(p, p)] - Wr.values
        s = np.sqrt(Ur.weights)
        A = s[:, None] * D * s[None, :]
        return min(float(np.max(np.abs(np.linalg.eigvalsh(A)))), float((M0 * np.abs(D)).sum()))

    return g, False


def _batched_cut(M0: np.ndarray, Uv: np.ndarray, Wv: np.ndarray, perms: np.ndarray, bits: np.ndarray) -> np.ndarray:
    P = perms
    Uperm = Uv[P[:, :, None], P[:, None, :]]
    D = M0[None] * (Uperm - Wv[None])
    R = np.einsum("xi,pij->pxj", bits, D)
    pos = np.clip(R, 0, None).sum(2).max(1)
    neg = -np.clip(R, None, 0).sum(2).max(1)
    return np.maximum(pos, neg)


def cut_distance_bounds(
    U: StepGraphon,
    W: StepGraphon,
    effort: int = 200,
    seed: int = 0,
    exact_atoms: int = 8,
    cap: int = EXACT_CAP,
) -> DistanceBounds:
    """Certified bounds on the cut distance.

    The upper bound is the best cut norm ``||U^pi - W||`` over equal-weight
    atom permutations of the common refinement: exhaustive when it has at most
    ``exact_atoms`` atoms, seeded swap local search otherwise.  The lower bound
    comes from density gaps (counting lemma); if either side is constant every
    version gives the same distance and the bounds coincide.
    """
    Ur, Wr = common_refinement(U, W)
    k = Ur.k
    lower, src = _density_gap_lower(U, W)
    ident = AtomPermutation.identity(k)
    if _is_constant(U) or _is_constant(W):
        val = cut_norm_upper(difference(Ur, Wr), cap)
        exact = k <= cap
        return DistanceBounds(val if exact else lower, val, ident, exact, "constant" if exact else src, Ur.weights)
    f, exact = _cut_objective(Ur, Wr, cap)
    classes = equal_weight_classes(Ur.weights)
    best_p = np.arange(k)
    best = f(best_p)
    if k <= exact_atoms:
        best, best_p = _enumerate_perms(Ur, Wr, classes, best, best_p, f, exact)
    else:
        best, best_p = _local_search(classes, k, f, best, best_p, effort, seed)
    upper = max(best, lower)
    return DistanceBounds(lower, upper, AtomPermutation(tuple(int(i) for i in best_p)), exact, src, Ur.weights)


def _class_perms(classes, k):
    per = [list(itertools.permutations(c.tolist())) for c in classes]
    for combo in itertools.product(*per):
        p = np.arange(k)
        for c, img in zip(classes, combo):
            p[c] = img
        yield p


def _enumerate_perms(Ur, Wr, classes, best, best_p, f, exact):
    k = Ur.k
    if not exact:
        for p in _class_perms(classes, k):
            v = f(p)
            if v < best - 1e-15:
                best, best_p = v, p
        return best, best_p
    M0 = np.outer(Ur.weights, Ur.weights)
    bits = _bits(k, 0, 1 << k)
    gen = _class_perms(classes, k)
    while True:
        chunk = list(itertools.islice(gen, 2048))
        if not chunk:
            break
        P = np.array(chunk)
        vals = _batched_cut(M0, Ur.values, Wr.values, P, bits)
        i = int(np.argmin(vals))
        if vals[i] < best - 1e-15:
            best, best_p = float(vals[i]), P[i]
    return best, best_p


def _local_search(classes, k, f, best, best_p, effort, seed):
    rng = np.random.default_rng(seed)
    swappable = [c for c in classes if len(c) > 1]
    if not swappable:
        return best, best_p
    restarts = max(1, effort // 50)
    steps = max(1, effort // restarts)
    for r in range(restarts):
        p = np.arange(k)
        if r:
            for c in swappable:
                p[c] = rng.permutation(c)
        cur = f(p)
        for _ in range(steps):
            c = swappable[rng.integers(len(swappable))]
            a, b = rng.choice(c, 2, replace=False)
            q = p.copy()
            q[a], q[b] = q[b], q[a]
            v = f(q)
            if v < cur:
                p, cur = q, v
        if cur < best:
            best, best_p = cur, p
    return best, best_p


# ---------------------------------------------------------------------------
# weak* metric


def dyadic_overlaps(W: StepGraphon, depth: int) -> np.ndarray:
    """Row ``n-1`` is the Lebesgue measure of ``A_n`` meeting each atom, where ``A_n`` with
    ``n = 2^j + a`` is the dyadic interval ``[a 2^-j, (a+1) 2^-j)``."""
    right = W.boundaries
    left = np.concatenate([[0.0], right[:-1]])
    rows = []
    for j in range(depth + 1):
        h = 2.0**-j
        for a in range(1 << j):
            lo, hi = a * h, (a + 1) * h
            rows.append(np.clip(np.minimum(hi, right) - np.maximum(lo, left), 0, None))
    return np.array(rows)


def weakstar_distance(U: StepGraphon, W: StepGraphon, depth: int = 4) -> float:
    """Truncated series ``sum 2^-(n+m) |int_{A_n x A_m} (U - W)|`` over dyadic intervals of level <= depth."""
    D = difference(U, W)
    O = dyadic_overlaps(D, depth)
    n = np.arange(1, O.shape[0] + 1)
    wts = 2.0 ** -(n[:, None] + n[None, :])
    box = O @ D.values @ O.T
    return float((wts * np.abs(box)).sum())
