import numpy as np
import pytest

from oracles import cut_norm_bruteforce, cut_norm_grid, split_atom_integral
from stepgraphon.core import (
    AtomPermutation,
    apply_version,
    constant,
    cycle,
    l1_norm,
    make_step_graphon,
    uniform_grid,
)
from stepgraphon.cutmetrics import (
    box_integral,
    cut_distance_bounds,
    cut_norm,
    cut_norm_upper,
    disjoint_witness,
    operator_norm,
    weakstar_distance,
)
from stepgraphon.errors import TooLargeForExact
from stepgraphon.homdensity import hom_density
from stepgraphon.testers import random_graphon, random_kernel


def test_constant_kernel():
    v, w = cut_norm(constant(0.7) - constant(0.2))
    assert v == pytest.approx(0.5)
    assert w.S == (0,) and w.T == (0,)
    K = uniform_grid(np.full((3, 3), -0.25), kind="kernel")
    v, w = cut_norm(K)
    assert v == pytest.approx(0.25) and w.S == (0, 1, 2) and w.T == (0, 1, 2) and w.value < 0


def test_worked_pair(U, V, Q):
    v, w = cut_norm(U - V)
    assert v == 0.125 and w.S == (0,) and w.T == (0,)
    v, w = cut_norm(U - Q)
    assert v == 0.1875 and w.S == (0,) and w.T == (0,)


@pytest.mark.parametrize("k", [1, 2, 3, 5, 7])
def test_exact_matches_bruteforce(rng, k):
    for _ in range(10):
        K = random_kernel(rng, k)
        v, w = cut_norm(K)
        assert v == pytest.approx(cut_norm_bruteforce(K.weights, K.values), abs=1e-14)
        assert abs(w.value) == pytest.approx(v, abs=1e-15)
        assert box_integral(K, w.S, w.T) == pytest.approx(w.value, abs=1e-15)


def test_threads_do_not_change_result(rng):
    K = random_kernel(rng, 16)
    a = cut_norm(K, threads=1)
    b = cut_norm(K, threads=4)
    assert a[0] == b[0] and a[1] == b[1]


def test_exact_cap():
    K = uniform_grid(np.zeros((5, 5)), kind="kernel")
    with pytest.raises(TooLargeForExact):
        cut_norm(K, cap=4)


def test_heuristic_lower_bound_and_agreement():
    agree = 0
    trials = 200
    rng = np.random.default_rng(2024)
    for t in range(trials):
        K = random_kernel(rng, int(rng.integers(2, 13)))
        ex, _ = cut_norm(K)
        h, w = cut_norm(K, "heuristic", restarts=32, seed=t)
        assert h <= ex + 1e-12
        assert abs(box_integral(K, w.S, w.T)) == pytest.approx(h, abs=1e-15)
        agree += abs(h - ex) <= 1e-12
    assert agree >= 0.99 * trials


def test_norm_axioms(rng):
    for _ in range(50):
        k = int(rng.integers(1, 9))
        A, B = random_kernel(rng, k), random_kernel(rng, k)
        B = make_step_graphon(A.weights, B.values, kind="kernel")
        a, b, s = cut_norm(A)[0], cut_norm(B)[0], cut_norm(A + B)[0]
        assert s <= a + b + 1e-9
        c = float(rng.uniform(-3, 3))
        assert cut_norm(A.scaled(c))[0] == pytest.approx(abs(c) * a, abs=1e-9)


def test_upper_bounds(rng):
    for _ in range(100):
        K = random_kernel(rng)
        v = cut_norm(K)[0]
        assert v <= l1_norm(K) + 1e-12
        assert v <= operator_norm(K) + 1e-12
        assert v <= hom_density(cycle(4), K) ** 0.25 + 1e-9
        assert cut_norm_upper(K) == v


def test_zero_one_restriction_is_lossless(rng):
    for _ in range(30):
        K = random_kernel(rng, int(rng.integers(1, 6)))
        assert cut_norm_grid(K.weights, K.values) <= cut_norm(K)[0] + 1e-9


def test_disjoint_witness_split_example(U, V):
    K = U - V
    d = disjoint_witness(K)
    assert d.A == ((0, 0.0, 0.5),) and d.B == ((0, 0.5, 1.0),)
    assert d.value == pytest.approx(0.03125)
    assert d.is_disjoint()
    assert split_atom_integral(K.weights, K.values, d.A, d.B) == pytest.approx(0.03125)


def test_disjoint_witness_zero_kernel():
    d = disjoint_witness(uniform_grid(np.zeros((3, 3)), kind="kernel"))
    assert d.value == 0 and d.is_disjoint()


def test_disjoint_witness_already_disjoint():
    # the optimal box is atom 0 x atom 1, which needs no splitting
    K = make_step_graphon([0.5, 0.5], [[-0.8, 0.8], [0.8, -0.8]], kind="kernel")
    v, w = cut_norm(K)
    assert w.S == (0,) and w.T == (1,)
    d = disjoint_witness(K)
    assert d.A == ((0, 0.0, 1.0),) and d.B == ((1, 0.0, 1.0),)
    assert d.value == pytest.approx(0.2) == v


def test_disjoint_witness_quarter_bound(rng):
    for _ in range(200):
        K = random_kernel(rng, int(rng.integers(1, 9)))
        v = cut_norm(K)[0]
        d = disjoint_witness(K)
        assert d.is_disjoint()
        assert abs(d.value) >= v / 4 - 1e-12
        assert d.value == pytest.approx(split_atom_integral(K.weights, K.values, d.A, d.B), abs=1e-3 * max(v, 1e-3))


def test_cut_distance_versions_and_constants(rng):
    W = random_graphon(rng, 6, equal_weights=True)
    Wp = apply_version(W, AtomPermutation(tuple(rng.permutation(6))))
    b = cut_distance_bounds(W, Wp)
    assert b.upper == pytest.approx(0, abs=1e-15) and b.lower <= 1e-15
    b = cut_distance_bounds(constant(0.3), constant(0.55))
    assert b.lower == pytest.approx(0.25) and b.upper == pytest.approx(0.25)


def test_cut_distance_worked_pair(U, V):
    b = cut_distance_bounds(U, V)
    assert b.lower >= 0.00341796875
    assert b.lower <= b.upper <= 0.125


def test_cut_distance_bounds_ordering(rng):
    for _ in range(20):
        A = random_graphon(rng, int(rng.integers(2, 5)), equal_weights=True)
        B = random_graphon(rng, int(rng.integers(2, 5)), equal_weights=True)
        b = cut_distance_bounds(A, B)
        assert 0 <= b.lower <= b.upper + 1e-12


def test_cut_distance_local_search_branch(rng):
    A = random_graphon(rng, 10, equal_weights=True)
    B = apply_version(A, AtomPermutation(tuple(rng.permutation(10))))
    b = cut_distance_bounds(A, B, effort=400, seed=1)
    assert b.upper <= cut_norm(A - B)[0] + 1e-15


def test_weakstar(U, Q):
    assert weakstar_distance(U, U, 3) == 0
    p, q = constant(0.3), constant(0.5)
    for d in range(4):
        a = weakstar_distance(p, q, d)
        assert a > 0
        assert weakstar_distance(constant(0.3), constant(0.7), d) == pytest.approx(2 * a)
    assert weakstar_distance(p, q, 0) == pytest.approx(0.25 * 0.2)
    assert weakstar_distance(U, Q, 0) == 0
    # the dyadic series for a constant gap c: c * (sum_n 2^-n |A_n|)^2
    c = 0.2
    s = sum(2.0 ** -(2**j + a) * 2.0**-j for j in range(3) for a in range(2**j))
    assert weakstar_distance(p, q, 2) == pytest.approx(c * s * s)
