"""Cut norm, homomorphism densities and the spectrum of a few small step graphons."""

# %%
import numpy as np

from stepgraphon.core import catalog, constant, cycle, uniform_grid
from stepgraphon.cutmetrics import cut_distance_bounds, cut_norm, operator_norm
from stepgraphon.homdensity import graph_norm, hom_density
from stepgraphon.spectral import cycle_density_via_spectrum, eigendecompose

# %% [markdown]
# A clique on the first half of [0,1], two disjoint half blocks, and the constant 1/4.
# All three have edge density 1/4, so they are indistinguishable by counting edges.

# %%
U = uniform_grid([[1, 0], [0, 0]])
V = uniform_grid([[0.5, 0], [0, 0.5]])
Q = constant(0.25)

for name, W in [("U", U), ("V", V), ("Q", Q)]:
    print(name, "t(K2) =", hom_density(catalog("K2"), W), " t(C4) =", hom_density(cycle(4), W))

# %% [markdown]
# The four-cycle tells them apart. Its fourth root is a norm, and it dominates the cut norm.

# %%
for name, W in [("U", U), ("V", V)]:
    K = W - Q
    cn, wit = cut_norm(K)
    c4 = graph_norm(cycle(4), K).value
    print(f"{name}-Q: cut norm {cn:.4f} on S={wit.S} T={wit.T}, C4 norm {c4:.4f}, operator norm {operator_norm(K):.4f}")

# %%
b = cut_distance_bounds(U, V)
print("cut distance U,V in", (b.lower, b.upper))

# %% [markdown]
# Cycle densities are power sums of the eigenvalues of the integral operator.

# %%
rng = np.random.default_rng(3)
A = rng.uniform(size=(5, 5))
W = uniform_grid((A + A.T) / 2)
sp = eigendecompose(W)
for k in (3, 4, 5, 6):
    print(k, hom_density(cycle(k), W), cycle_density_via_spectrum(k, sp))
