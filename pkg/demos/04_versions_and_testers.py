"""Random versions average out to a stepping; randomized checks of monotone parameters."""

# %%
import numpy as np

from stepgraphon.core import AtomPartition, constant, cycle, l1_distance, uniform_grid
from stepgraphon.cutmetrics import cut_distance_bounds
from stepgraphon.order import stepping
from stepgraphon.sampling import approx_by_versions, sample_reshuffle, verify_average_concentration
from stepgraphon.testers import random_graphon, search_step_sidorenko_violation, test_step_sidorenko

U = uniform_grid([[1, 0], [0, 0]])

# %% [markdown]
# Cut every atom into stripes and shuffle stripes at random. Each shuffle is a
# measure preserving rearrangement, and their average approaches the stepping.

# %%
S, phi, _ = sample_reshuffle(U, AtomPartition.trivial(2), 4, seed=0)
print(np.round(S.values, 2))
for N in (1, 4, 16, 64):
    rep = verify_average_concentration(U, AtomPartition.trivial(2), 16, N, 20, seed=2)
    print(N, "median L1 error", round(rep.median, 4))

# %%
Q = constant(0.25)
ens = approx_by_versions(U, Q, 0.2, cut_distance_bounds(U, Q).lower, seed=0)
print(ens.N, "versions, L1 error", ens.l1_error, "far pairs", ens.far_pairs)

# %% [markdown]
# Randomized checks: stepping never increases the four-cycle density, while the
# edge density is merely preserved.

# %%
print(test_step_sidorenko("c4", trials=300).passed)
W = random_graphon(np.random.default_rng(1), 5)
print(l1_distance(W, stepping(W, AtomPartition.trivial(5), keep_atoms=True)))

# %%
res = search_step_sidorenko_violation(cycle(4), budget=300)
print("violation for C4 found:", res.found)
