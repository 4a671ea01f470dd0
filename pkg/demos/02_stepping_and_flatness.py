"""Stepping over a partition makes a graphon flatter, and most parameters notice."""

# %%
import numpy as np

from stepgraphon.core import AtomPartition, cycle
from stepgraphon.homdensity import hom_density
from stepgraphon.order import SQUARE, flatness_compare, int_f, pushforward_frequencies, stepping, structuredness_probe
from stepgraphon.spectral import eigendecompose, spectral_compare
from stepgraphon.testers import random_graphon

rng = np.random.default_rng(11)
W = random_graphon(rng, 6)
P = AtomPartition.from_labels([0, 0, 1, 1, 2, 2])
S = stepping(W, P)

# %% [markdown]
# Averaging over blocks keeps the edge density and shrinks every convex integral.

# %%
print("int x^2:", int_f(SQUARE, W), "->", int_f(SQUARE, S))
print("t(C4):  ", hom_density(cycle(4), W), "->", hom_density(cycle(4), S))

# %%
print("spectrum of W:", eigendecompose(W).positives, eigendecompose(W).negatives)
print("spectrum of S:", eigendecompose(S).positives, eigendecompose(S).negatives)
print("spectral order:", spectral_compare(S, W).relation)

# %% [markdown]
# The value distributions are ordered in the convex order. The comparison returns a
# martingale coupling as a certificate.

# %%
r = flatness_compare(pushforward_frequencies(S), pushforward_frequencies(W))
print(r.verdict, "coupling shape", None if r.coupling is None else r.coupling.shape)
rb = flatness_compare(pushforward_frequencies(W), pushforward_frequencies(S))
print("reverse:", rb.verdict, rb.reason)

# %%
v = structuredness_probe(stepping(W, P, keep_atoms=True), W)
print(v.relation, v.evidence)
