import numpy as np
import pytest

from stepgraphon.core import AtomPartition, constant, l1_distance, uniform_grid
from stepgraphon.cutmetrics import box_integral, cut_distance_bounds, cut_norm, cut_norm_upper
from stepgraphon.errors import CannotBridge, GraphonError, RefinementTooLarge
from stepgraphon.order import flatness_compare, pushforward_frequencies, stepping
from stepgraphon.sampling import (
    approx_by_versions,
    refine_into_stripes,
    reshuffle_permutation,
    sample_reshuffle,
    verify_average_concentration,
)
from stepgraphon.testers import random_graphon, random_partition

BLOCKS = AtomPartition.discrete(2)


def test_stripes_examples(U):
    G, ref = refine_into_stripes(constant(0.4), AtomPartition.trivial(1), 2)
    assert G.k == 2 and np.allclose(G.weights, 0.5) and np.allclose(G.values, 0.4)
    G, ref = refine_into_stripes(U, BLOCKS, 2)
    assert G.k == 4 and np.allclose(G.weights, 0.25)
    assert ref.part.tolist() == [0, 0, 1, 1] and ref.stripe.tolist() == [0, 1, 0, 1]
    G, ref = refine_into_stripes(U, BLOCKS, 1)
    assert G.allclose(U, atol=0)
    with pytest.raises(GraphonError):
        refine_into_stripes(U, BLOCKS, 0)
    with pytest.raises(RefinementTooLarge):
        refine_into_stripes(U, BLOCKS, 64, cap=16)


def test_stripes_equal_measure_and_ordered(rng):
    for _ in range(50):
        W = random_graphon(rng)
        R = random_partition(rng, W.k)
        s = int(rng.integers(1, 6))
        G, ref = refine_into_stripes(W, R, s)
        assert G.weights.sum() == pytest.approx(1)
        assert l1_distance(G, W) == pytest.approx(0, abs=1e-12)
        for i in range(R.part_count):
            in_part = ref.part == i
            masses = np.bincount(ref.stripe[in_part], weights=G.weights[in_part], minlength=s)
            assert np.allclose(masses, masses[0], atol=1e-12)
            # stripes are contiguous and ordered left to right within the part
            stripes_in_order = ref.stripe[in_part]
            assert np.all(np.diff(stripes_in_order) >= 0)
            # the original part mass is preserved
            assert masses.sum() == pytest.approx(W.weights[np.asarray(R.part_of) == i].sum(), abs=1e-12)
            # all stripes of a part share one piece structure
            pieces = [G.weights[in_part & (ref.stripe == p)] for p in range(s)]
            assert all(np.allclose(pieces[0], q, atol=1e-12) for q in pieces)


def test_reshuffle_examples(U):
    S, phi, _ = sample_reshuffle(U, BLOCKS, 1, seed=4)
    assert S.allclose(U, atol=0)
    C = constant(0.6)
    for seed in range(5):
        S, _, _ = sample_reshuffle(C, AtomPartition.trivial(1), 4, seed=seed)
        assert np.allclose(S.values, 0.6)


def test_reshuffle_is_a_version(rng):
    for _ in range(30):
        W = random_graphon(rng, int(rng.integers(2, 6)))
        R = random_partition(rng, W.k)
        S, phi, ref = sample_reshuffle(W, R, 4, seed=rng)
        G, _ = refine_into_stripes(W, R, 4)
        # permutation stays inside parts and inside equal-weight pieces
        p = np.asarray(phi.perm)
        assert np.array_equal(ref.part[p], ref.part)
        assert np.allclose(G.weights[p], G.weights)
        assert sorted(S.values.ravel()) == sorted(G.values.ravel())
        for mode in ("range", "degree"):
            a, b = pushforward_frequencies(S, mode), pushforward_frequencies(G, mode)
            assert a.allclose(b, 1e-12)
            assert flatness_compare(a, b).verdict.value == "Flatter"


def test_reshuffle_reproducible(U):
    a = sample_reshuffle(U, AtomPartition.trivial(2), 8, seed=11)[1]
    b = sample_reshuffle(U, AtomPartition.trivial(2), 8, seed=11)[1]
    assert a == b


def test_reshuffle_distribution_uniform():
    # s=3, one part: each stripe lands on every position with probability 1/3
    G, ref = refine_into_stripes(constant(0.5), AtomPartition.trivial(1), 3)
    rng = np.random.default_rng(0)
    counts = np.zeros((3, 3))
    for _ in range(3000):
        p = reshuffle_permutation(ref, rng).perm
        for a in range(3):
            counts[a, p[a]] += 1
    assert np.allclose(counts / 3000, 1 / 3, atol=0.04)


def test_concentration_exact_when_already_stepped(U):
    rep = verify_average_concentration(U, BLOCKS, 16, 8, 5)
    assert rep.errors == [0.0] * 5 and rep.fraction_under == 1.0 and rep.baseline == 0


def test_concentration_trivial_partition(U):
    rep = verify_average_concentration(U, AtomPartition.trivial(2), 16, 64, 20, seed=2)
    assert rep.fraction_under >= 0.9
    assert rep.baseline == pytest.approx(l1_distance(U, constant(0.25)))
    single = verify_average_concentration(U, AtomPartition.trivial(2), 16, 1, 5, seed=2)
    assert single.median > rep.median


def test_concentration_monotone_in_N(rng):
    W = random_graphon(rng, 4)
    R = AtomPartition.from_labels([0, 0, 1, 1])
    medians = [verify_average_concentration(W, R, 8, N, 15, seed=9).median for N in (4, 16, 64, 256)]
    assert all(b <= a + 1e-12 for a, b in zip(medians, medians[1:]))


def test_concentration_validation(U):
    with pytest.raises(GraphonError):
        verify_average_concentration(U, BLOCKS, 4, 0, 1)


def test_random_cut_lower_bound_90_percent(rng):
    # ||G - W|| > dhat/8 - 2 s^(-1/4) in at least 90% of draws; for graphons dhat <= 1, so the
    # threshold is negative until s > 2^16 and the check is vacuous at desk scale
    s = 256
    assert 1 / 8 - 2 * s**-0.25 < 0
    hits = 0
    trials = 10
    for t in range(trials):
        G = random_graphon(rng, 3)
        R = AtomPartition.trivial(3)
        dhat = cut_norm(G - stepping(G, R, keep_atoms=True))[0]
        S, phi, ref = sample_reshuffle(G, R, s, seed=t)
        Gs, _ = refine_into_stripes(G, R, s)
        # one stripe-aligned box already gives a certified lower bound
        X = np.flatnonzero(ref.stripe < s // 2)
        lb = abs(box_integral(Gs - S, X, X))
        hits += lb > dhat / 8 - 2 * s**-0.25
    assert hits >= 0.9 * trials


def test_ensemble_identity_target(U):
    ens = approx_by_versions(U, U, 0.1, 0.0)
    assert ens.N == 2 and ens.l1_error == 0 and ens.far_pairs == 0
    assert all(v.perm == tuple(range(ens.source.k)) for v in ens.versions)


def test_ensemble_clique_to_constant(U, Q):
    delta = cut_distance_bounds(U, Q).lower
    ens = approx_by_versions(U, Q, 0.2, delta, seed=0)
    assert ens.N % 2 == 0
    assert ens.l1_error < 0.2
    assert ens.far_pairs >= ens.N / 4 and ens.far_pairs <= ens.N / 2
    assert l1_distance(ens.average(), ens.target) == pytest.approx(ens.l1_error)
    m = ens.manifest()
    assert m["N"] == ens.N and len(m["permutations"]) == ens.N
    # far-pair lower bounds are certified by an actual box
    for i, lb in enumerate(ens.pair_lower_bounds):
        D = ens.version(2 * i) - ens.version(2 * i + 1)
        assert 0 <= lb <= cut_norm_upper(D) + 1e-12


def test_ensemble_random_bridge(rng):
    W = random_graphon(rng, 6, equal_weights=True)
    P = AtomPartition.from_labels([0, 1, 0, 2, 1, 2])
    V = stepping(W, P, keep_atoms=True)
    delta = cut_distance_bounds(W, V).lower
    ens = approx_by_versions(W, V, 0.2, delta, seed=1)
    assert ens.l1_error < 0.2 and ens.far_pairs >= ens.N / 4


def test_ensemble_unrelated_target(rng):
    A = uniform_grid([[0.9, 0.1], [0.1, 0.2]])
    B = uniform_grid([[0.1, 0.7], [0.7, 0.6]])
    with pytest.raises(CannotBridge):
        approx_by_versions(A, B, 0.1, 0.01)


def test_ensemble_version_with_positive_delta_rejected(U):
    with pytest.raises(GraphonError):
        approx_by_versions(U, U, 0.1, 0.05)
