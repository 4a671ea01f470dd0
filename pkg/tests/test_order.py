import numpy as np
import pytest

from oracles import coupling_feasible_vertices
from stepgraphon.core import AtomPartition, AtomPermutation, apply_version, constant, edge_density, uniform_grid
from stepgraphon.errors import DomainViolation, EmptyPart, GraphonError, MassMismatch
from stepgraphon.order import (
    SQUARE,
    XLOGX,
    ConvexFunctionSpec,
    DiscreteMeasure,
    Flatness,
    ProbeRelation,
    find_stepping_of_version,
    flatness_compare,
    int_f,
    martingale_coupling,
    pushforward_frequencies,
    stepping,
    structuredness_probe,
)
from stepgraphon.testers import random_graphon, random_partition


def _random_measure(rng, n, total=1.0, mean=None):
    x = np.round(rng.uniform(0, 1, n), 2)
    m = rng.dirichlet(np.ones(n)) * total
    if mean is not None and n > 1:
        # shift two atoms' masses along the segment that keeps the total fixed
        cur = x @ m
        i, j = np.argsort(x)[[0, -1]]
        if x[j] > x[i]:
            d = (mean - cur) / (x[j] - x[i])
            d = np.clip(d, -m[j], m[i])
            m[i] -= d
            m[j] += d
    return DiscreteMeasure.from_pairs(zip(x, m))


def test_stepping_examples(U):
    assert stepping(U, AtomPartition.trivial(2)).allclose(constant(0.25))
    assert stepping(U, AtomPartition.discrete(2)).allclose(U, atol=0)
    S = stepping(U, AtomPartition.trivial(2), keep_atoms=True)
    assert S.k == 2 and np.allclose(S.values, 0.25)


def test_stepping_idempotent_and_density(rng):
    for _ in range(50):
        W = random_graphon(rng)
        P = random_partition(rng, W.k)
        S = stepping(W, P)
        assert edge_density(S) == pytest.approx(edge_density(W), abs=1e-14)
        assert stepping(S, AtomPartition.discrete(S.k)).allclose(S, atol=1e-15)
        again = stepping(stepping(W, P, keep_atoms=True), P)
        assert again.allclose(S, atol=1e-14)


def test_stepping_errors(U):
    with pytest.raises(GraphonError):
        stepping(U, AtomPartition.trivial(3))
    with pytest.raises(EmptyPart):
        AtomPartition((0, 2), 3)


def test_pushforward_examples(U, V):
    p = pushforward_frequencies(constant(0.3))
    assert p.locations.tolist() == [0.3] and p.masses.tolist() == [1.0]
    f = pushforward_frequencies(U)
    assert f.locations.tolist() == [0.0, 1.0] and f.masses.tolist() == [0.75, 0.25]
    d = pushforward_frequencies(U, "degree")
    assert d.locations.tolist() == [0.0, 0.5] and d.masses.tolist() == [0.5, 0.5]
    d = pushforward_frequencies(V, "degree")
    assert d.locations.tolist() == [0.25] and d.masses.tolist() == [1.0]
    with pytest.raises(ValueError):
        pushforward_frequencies(U, "bogus")


def test_measure_merging_and_json():
    m = DiscreteMeasure.from_pairs([(0.5, 0.25), (0.5 + 1e-13, 0.25), (0.1, 0.5)])
    assert m.locations.tolist() == [0.1, 0.5] and m.masses.tolist() == [0.5, 0.5]
    assert DiscreteMeasure.from_dict(m.to_dict()).allclose(m)
    assert m.binned(0.25).locations.tolist() == [0.0, 0.5]


def test_flatness_examples():
    a = DiscreteMeasure.from_pairs([(0.25, 1.0)])
    b = DiscreteMeasure.from_pairs([(0.0, 0.75), (1.0, 0.25)])
    r = flatness_compare(a, b)
    assert r.flatter and r.verdict == Flatness.STRICTLY_FLATTER
    assert r.coupling is not None and np.allclose(r.coupling, [[0.75, 0.25]])
    assert not flatness_compare(b, a).flatter
    assert flatness_compare(b, b).verdict == Flatness.FLATTER
    r = flatness_compare(DiscreteMeasure.from_pairs([(0.3, 1)]), DiscreteMeasure.from_pairs([(0.5, 1)]))
    assert r.verdict == Flatness.NOT_FLATTER and r.reason == "mean"


def test_mass_mismatch():
    a = DiscreteMeasure.from_pairs([(0.25, 1.0)])
    b = DiscreteMeasure.from_pairs([(0.25, 0.5)])
    assert flatness_compare(a, b).reason == "mass"
    with pytest.raises(MassMismatch):
        flatness_compare(a, b, on_mass_mismatch="raise")


def test_coupling_is_martingale(rng):
    found = 0
    for _ in range(200):
        a = _random_measure(rng, 3)
        b = _random_measure(rng, 4, mean=a.mean)
        r = flatness_compare(a, b)
        if r.flatter:
            found += 1
            C = r.coupling
            assert np.allclose(C.sum(1), a.masses, atol=1e-8)
            assert np.allclose(C.sum(0), b.masses, atol=1e-8)
            assert np.allclose(C @ b.locations, a.locations * a.masses, atol=1e-8)
            assert np.all(C >= -1e-12)
    assert found > 10


def test_call_price_agrees_with_vertex_enumeration(rng):
    for _ in range(150):
        a = _random_measure(rng, int(rng.integers(1, 5)))
        b = _random_measure(rng, int(rng.integers(1, 5)), mean=a.mean)
        verdict = flatness_compare(a, b, certificate=False).flatter
        feasible = abs(a.mean - b.mean) <= 1e-9 and coupling_feasible_vertices(
            a.locations, a.masses, b.locations, b.masses
        )
        assert verdict == feasible
        assert (martingale_coupling(a, b) is not None) == feasible


def test_flatness_reflexive_transitive(rng):
    for _ in range(100):
        W = random_graphon(rng)
        P = random_partition(rng, W.k)
        Q = AtomPartition.trivial(P.part_count)
        S1 = stepping(W, P)
        S2 = stepping(S1, Q)
        L0, L1, L2 = (pushforward_frequencies(X) for X in (W, S1, S2))
        assert flatness_compare(L0, L0).verdict == Flatness.FLATTER
        assert flatness_compare(L1, L0).flatter and flatness_compare(L2, L1).flatter
        assert flatness_compare(L2, L0).flatter
        # antisymmetry up to equality
        if flatness_compare(L0, L1).flatter:
            assert L0.allclose(L1, 1e-8)


def test_int_f_examples(U, V):
    assert int_f(SQUARE, constant(0.3)) == pytest.approx(0.09)
    assert int_f(SQUARE, U) == 0.25
    assert int_f(SQUARE, V) == 0.125
    assert int_f(XLOGX, constant(1.0)) == 0
    assert int_f(XLOGX, uniform_grid([[0.0, 0.5], [0.5, 0.0]])) == pytest.approx(0.25 * np.log(0.5))


def test_int_f_domain():
    K = uniform_grid([[-0.5]], kind="kernel")
    with pytest.raises(DomainViolation):
        int_f(SQUARE, K)


def test_convex_spec_validation():
    f = ConvexFunctionSpec("piecewise_linear", ((0, 0), (0.5, 0), (1, 1)))
    assert not f.strictly_convex
    assert f(np.array([0.25, 0.75, 2.0])).tolist() == [0, 0.5, 3.0]
    with pytest.raises(GraphonError):
        ConvexFunctionSpec("piecewise_linear", ((0, 0), (0.5, 1), (1, 1)))
    g = ConvexFunctionSpec("polynomial", coeffs=(0, 0, 0, 1))
    assert not g.strictly_convex  # second derivative vanishes at 0
    assert ConvexFunctionSpec("polynomial", coeffs=(1, -1, 1)).strictly_convex
    with pytest.raises(GraphonError):
        ConvexFunctionSpec("polynomial", coeffs=(0, 0, -1))
    with pytest.raises(GraphonError):
        ConvexFunctionSpec("cosh")


def test_stepping_contracts_convex_integrals(rng):
    fs = [SQUARE, XLOGX, ConvexFunctionSpec("piecewise_linear", ((0, 0), (0.3, 0.1), (1, 1)))]
    for _ in range(100):
        W = random_graphon(rng)
        P = random_partition(rng, W.k)
        S = stepping(W, P)
        for f in fs:
            assert int_f(f, S) <= int_f(f, W) + 1e-12


def test_probe_worked_examples(U, V, Q):
    v = structuredness_probe(V, U)
    assert v.relation == ProbeRelation.REFUTED_BELOW
    assert ("spectral", "Incomparable") in v.evidence
    v = structuredness_probe(Q, U)
    assert v.relation == ProbeRelation.CONFIRMED_BELOW and v.certificate is not None
    assert v.certificate.l1_error <= 1e-9
    v = structuredness_probe(constant(0.3), constant(0.5))
    assert v.relation == ProbeRelation.REFUTED_BELOW
    assert v.evidence[0][0] == "edge_density" and "mismatch" in v.evidence[0][1]
    d = v.to_dict()
    assert d["relation"] == "RefutedBelow"


def test_probe_confirms_steppings_of_versions(rng):
    for _ in range(20):
        W = random_graphon(rng, 6, equal_weights=True)
        phi = AtomPermutation(tuple(rng.permutation(6)))
        P = random_partition(rng, 6)
        S = stepping(apply_version(W, phi), P, keep_atoms=True)
        v = structuredness_probe(S, W)
        assert v.relation == ProbeRelation.CONFIRMED_BELOW
        c = v.certificate
        assert c.l1_error <= 1e-9


def test_find_stepping_local_search_branch(rng):
    # 10 equal atoms: 10! candidates exceeds the exhaustive limit
    W = random_graphon(rng, 10, equal_weights=True)
    phi = AtomPermutation(tuple(rng.permutation(10)))
    assert find_stepping_of_version(apply_version(W, phi), W, seed=3) is not None


def test_probe_unknown_is_possible():
    # equal density, flatter frequencies, spectrally below, but no stepping of a version
    W = uniform_grid([[0.9, 0.1, 0.5], [0.1, 0.9, 0.5], [0.5, 0.5, 0.5]])
    U = uniform_grid([[0.6, 0.4, 0.5], [0.4, 0.6, 0.5], [0.5, 0.5, 0.5]])
    v = structuredness_probe(U, W)
    assert v.relation == ProbeRelation.UNKNOWN
    assert v.certificate is None and v.evidence[-1] == ("stepping_certificate", "not found")
