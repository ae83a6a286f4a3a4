"""Hermitian linear algebra and state constructors.

Everything downstream works with plain complex ndarrays; the only wrapper
here is :class:`SpectralDecomposition`, which fixes the eigenvalue order
convention (ascending) once so the staged algorithm can rely on it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import config

__all__ = [
    "SpectralDecomposition",
    "require_hermitian",
    "require_density",
    "eig_hermitian",
    "psd_sqrt",
    "frob_sq",
    "trace_norm",
    "conjugate",
    "hermitian_part",
    "haar_unitary",
    "random_pure",
    "random_density",
    "maximally_mixed",
    "geometric_spectrum_state",
    "bipartite_product",
    "correlated_pair_state",
    "submatrix",
    "embed",
    "mass_on",
    "restrict",
    "partial_trace",
    "depolarize",
]


# ---------------------------------------------------------------------------
# checks
# ---------------------------------------------------------------------------

def require_hermitian(a: np.ndarray, tol: float = config.HERMITIAN_TOL) -> np.ndarray:
    """Return ``a`` as a complex array, raising if it is not Hermitian."""
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    if np.max(np.abs(a - a.conj().T)) > tol:
        raise ValueError("matrix is not Hermitian within tolerance")
    return a


def require_density(rho: np.ndarray, tol: float = config.PSD_TOL) -> np.ndarray:
    """Validate a density matrix: Hermitian, PSD, unit trace."""
    rho = require_hermitian(rho)
    if abs(np.trace(rho).real - 1.0) > config.TRACE_TOL:
        raise ValueError(f"trace is {np.trace(rho).real}, expected 1")
    w = np.linalg.eigvalsh(rho)
    if w[0] < -tol:
        raise ValueError(f"negative eigenvalue {w[0]}")
    return rho


# ---------------------------------------------------------------------------
# decompositions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SpectralDecomposition:
    """Eigensystem of a Hermitian matrix, eigenvalues ascending.

    ``vectors[:, k]`` is the unit eigenvector for ``values[k]``.  Values are
    the raw eigenvalues; callers that need a genuine spectrum should clip
    at zero themselves.
    """

    values: np.ndarray
    vectors: np.ndarray

    def matrix(self) -> np.ndarray:
        return (self.vectors * self.values) @ self.vectors.conj().T


def eig_hermitian(a: np.ndarray) -> SpectralDecomposition:
    a = require_hermitian(a)
    w, v = np.linalg.eigh(a)
    return SpectralDecomposition(values=w, vectors=v)


def psd_sqrt(a: np.ndarray) -> np.ndarray:
    """Principal square root of a PSD Hermitian matrix.

    Eigenvalues in ``(-PSD_TOL, 0)`` are treated as float noise and
    clipped; anything more negative raises.  Positive values at or
    below SPECTRAL_CUTOFF are rounded to zero too: the square root
    turns 1e-16 of solver noise into 1e-8, which is exactly the
    amplification the cutoff convention exists to stop.
    """
    dec = eig_hermitian(a)
    if dec.values[0] < -config.PSD_TOL:
        raise ValueError(f"matrix is not PSD: min eigenvalue {dec.values[0]}")
    w = np.where(dec.values <= config.SPECTRAL_CUTOFF, 0.0,
                 np.sqrt(np.clip(dec.values, 0.0, None)))
    return (dec.vectors * w) @ dec.vectors.conj().T


def frob_sq(a: np.ndarray) -> float:
    """Squared Frobenius norm."""
    return float(np.sum(np.abs(np.asarray(a)) ** 2))


def trace_norm(a: np.ndarray) -> float:
    """Sum of singular values; for Hermitian input, sum of |eigenvalues|."""
    a = np.asarray(a, dtype=complex)
    if np.max(np.abs(a - a.conj().T)) <= config.HERMITIAN_TOL:
        return float(np.sum(np.abs(np.linalg.eigvalsh(a))))
    return float(np.sum(np.linalg.svd(a, compute_uv=False)))


def conjugate(u: np.ndarray, a: np.ndarray) -> np.ndarray:
    """u a u^dagger."""
    return u @ a @ u.conj().T


def hermitian_part(a: np.ndarray) -> np.ndarray:
    """(a + a^dagger)/2, the closest Hermitian matrix in Frobenius norm."""
    a = np.asarray(a, dtype=complex)
    return (a + a.conj().T) / 2.0


# ---------------------------------------------------------------------------
# random states and fixed families
# ---------------------------------------------------------------------------

def haar_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed unitary via QR of a complex Ginibre matrix."""
    z = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    q, r = np.linalg.qr(z)
    # fix the phase ambiguity so the distribution is exactly Haar
    ph = np.diag(r).copy()
    ph /= np.abs(ph)
    return q * ph


def random_pure(d: int, rng: np.random.Generator) -> np.ndarray:
    """Projector onto a Haar-random unit vector."""
    v = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    v /= np.linalg.norm(v)
    return np.outer(v, v.conj())


def random_density(d: int, r: int, rng: np.random.Generator) -> np.ndarray:
    """Random rank-``r`` density matrix, G G^dagger / tr with Ginibre G."""
    if not 1 <= r <= d:
        raise ValueError(f"rank must be in [1, {d}], got {r}")
    g = rng.standard_normal((d, r)) + 1j * rng.standard_normal((d, r))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def maximally_mixed(d: int) -> np.ndarray:
    return np.eye(d, dtype=complex) / d


def geometric_spectrum_state(d: int, rng: np.random.Generator,
                             ratio: float = 0.5) -> np.ndarray:
    """Full-rank state with spectrum proportional to ratio^k, Haar basis."""
    if not 0.0 < ratio < 1.0:
        raise ValueError("ratio must lie in (0, 1)")
    w = ratio ** np.arange(d)
    w /= w.sum()
    u = haar_unitary(d, rng)
    return (u * w) @ u.conj().T


def bipartite_product(rho_a: np.ndarray, rho_b: np.ndarray) -> np.ndarray:
    return np.kron(rho_a, rho_b)


def correlated_pair_state(d: int, lam: float) -> np.ndarray:
    """(1-lam) * (Id/d x Id/d) + lam * |Phi><Phi| on dimension d*d.

    |Phi> is the maximally entangled pair state.  Both marginals are Id/d
    for every lam, so all the mutual information lives in the correlation.
    """
    if not 0.0 <= lam <= 1.0:
        raise ValueError("lam must lie in [0, 1]")
    phi = np.zeros(d * d, dtype=complex)
    for i in range(d):
        phi[i * d + i] = 1.0 / np.sqrt(d)
    ent = np.outer(phi, phi.conj())
    return (1.0 - lam) * np.eye(d * d, dtype=complex) / (d * d) + lam * ent


# ---------------------------------------------------------------------------
# blocks, restrictions, channels
# ---------------------------------------------------------------------------

def submatrix(a: np.ndarray, subset) -> np.ndarray:
    """Principal submatrix on the index subset, order preserved."""
    idx = np.asarray(subset, dtype=int)
    return np.asarray(a)[np.ix_(idx, idx)]


def embed(block: np.ndarray, subset, d: int) -> np.ndarray:
    """Zero-extend a principal block back to a d x d matrix."""
    idx = np.asarray(subset, dtype=int)
    out = np.zeros((d, d), dtype=complex)
    out[np.ix_(idx, idx)] = block
    return out


def mass_on(rho: np.ndarray, subset) -> float:
    """tr rho[S], the probability a basis measurement lands in S."""
    idx = np.asarray(subset, dtype=int)
    return float(np.sum(np.diag(rho)[idx]).real)


def restrict(rho: np.ndarray, subset) -> np.ndarray | None:
    """Conditional state rho[S] / tr rho[S], or None when the mass is ~0."""
    blk = submatrix(rho, subset)
    tau = np.trace(blk).real
    if tau <= config.SPECTRAL_CUTOFF:
        return None
    return blk / tau


def partial_trace(rho: np.ndarray, d_a: int, d_b: int, keep: str) -> np.ndarray:
    """Marginal of a state on C^{d_a} x C^{d_b}; keep is 'A' or 'B'."""
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (d_a * d_b, d_a * d_b):
        raise ValueError(f"shape {rho.shape} does not match dims ({d_a},{d_b})")
    t = rho.reshape(d_a, d_b, d_a, d_b)
    if keep == "A":
        return np.trace(t, axis1=1, axis2=3)
    if keep == "B":
        return np.trace(t, axis1=0, axis2=2)
    raise ValueError("keep must be 'A' or 'B'")


def depolarize(rho: np.ndarray, eps: float) -> np.ndarray:
    """(1-eps) rho + eps Id/d."""
    if not 0.0 <= eps <= 1.0:
        raise ValueError("eps must lie in [0, 1]")
    d = rho.shape[0]
    return (1.0 - eps) * rho + eps * np.eye(d, dtype=complex) / d
