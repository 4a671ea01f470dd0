"""Spectra of step graphon operators and the spectral quasiorder.

On step functions the integral operator of ``W`` acts as ``V diag(mu)``, which
is similar to the symmetric matrix ``diag(sqrt mu) V diag(sqrt mu)``.  The
operator vanishes on the orthogonal complement, so these ``k`` eigenvalues
(plus zeros) are the whole spectrum.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .core import StepGraphon
from .errors import BadCycleLength

COMPARE_TOL = 1e-9


class SpectralRelation(str, enum.Enum):
    BELOW = "Below"
    ABOVE = "Above"
    EQUAL = "Equal"
    INCOMPARABLE = "Incomparable"


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Positive eigenvalues in decreasing order and negative ones in increasing order, zero-padded."""

    positives: np.ndarray
    negatives: np.ndarray

    @property
    def values(self) -> np.ndarray:
        return np.concatenate([self.positives, self.negatives])

    def padded(self, n: int) -> "Spectrum":
        return Spectrum(_pad(self.positives, n), _pad(self.negatives, n))

    def to_dict(self) -> dict:
        return {
            "positives": [float(x) for x in self.positives if x != 0],
            "negatives": [float(x) for x in self.negatives if x != 0],
        }


@dataclass(frozen=True)
class SpectralComparison:
    relation: SpectralRelation
    strict: bool
    max_violation: float = 0.0


def _pad(a: np.ndarray, n: int) -> np.ndarray:
    out = np.zeros(max(n, len(a)))
    out[: len(a)] = a
    return out


def operator_matrix(W: StepGraphon) -> np.ndarray:
    # sqrt of the product is exact for equal weights, unlike the product of square roots
    return W.values * np.sqrt(np.outer(W.weights, W.weights))


def jacobi_eigenvalues(A: np.ndarray, tol: float = 1e-12, max_sweeps: int = 100) -> np.ndarray:
    """Cyclic Jacobi rotations for a symmetric matrix."""
    A = np.array(A, dtype=float)
    n = A.shape[0]
    scale = max(np.abs(A).max(), 1e-300)
    for _ in range(max_sweeps):
        off = np.sqrt(np.sum(np.triu(A, 1) ** 2))
        if off <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                if abs(A[p, q]) <= 1e-300:
                    continue
                theta = (A[q, q] - A[p, p]) / (2 * A[p, q])
                t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1)) if theta != 0 else 1.0
                c = 1 / np.sqrt(t * t + 1)
                s = t * c
                J = np.array([[c, s], [-s, c]])
                idx = [p, q]
                A[:, idx] = A[:, idx] @ J
                A[idx, :] = J.T @ A[idx, :]
    return np.sort(np.diag(A))


def eigendecompose(W: StepGraphon, solver: str = "qr", zero_tol: float = 1e-12) -> Spectrum:
    """Signed spectrum of the operator of ``W``, each side padded to the atom count."""
    A = operator_matrix(W)
    if solver == "qr":
        lam = np.linalg.eigvalsh(A)
    elif solver == "jacobi":
        lam = jacobi_eigenvalues(A)
    else:
        raise ValueError(f"unknown solver {solver!r}")
    lam = np.where(np.abs(lam) <= zero_tol * max(1.0, W.sup_norm()), 0.0, lam)
    pos = np.sort(lam[lam > 0])[::-1]
    neg = np.sort(lam[lam < 0])
    return Spectrum(_pad(pos, W.k), _pad(neg, W.k))


def spectral_compare(W, U, tol: float = COMPARE_TOL) -> SpectralComparison:
    """Decide ``W`` against ``U`` in the spectral quasiorder.

    Accepts graphons or precomputed spectra.  ``Below`` means every positive
    eigenvalue of ``W`` is at most the matching one of ``U`` and every negative
    one at least the matching one of ``U``.
    """
    a = W if isinstance(W, Spectrum) else eigendecompose(W)
    b = U if isinstance(U, Spectrum) else eigendecompose(U)
    n = max(len(a.positives), len(b.positives), len(a.negatives), len(b.negatives))
    a, b = a.padded(n), b.padded(n)
    # d > 0 means W is "bigger" at that coordinate
    d = np.concatenate([a.positives - b.positives, b.negatives - a.negatives])
    up = bool(np.any(d > tol))
    down = bool(np.any(d < -tol))
    gap = float(np.max(np.abs(d))) if d.size else 0.0
    if up and down:
        return SpectralComparison(SpectralRelation.INCOMPARABLE, False, gap)
    if down:
        return SpectralComparison(SpectralRelation.BELOW, True, gap)
    if up:
        return SpectralComparison(SpectralRelation.ABOVE, True, gap)
    return SpectralComparison(SpectralRelation.EQUAL, False, gap)


def cycle_density_via_spectrum(k: int, spectrum: Spectrum) -> float:
    """``t(C_k, W)`` as the ``k``-th power sum of the eigenvalues."""
    if k < 3:
        raise BadCycleLength(f"cycles need length >= 3, got {k}")
    return float(np.sum(spectrum.positives**k) + np.sum(spectrum.negatives**k))
