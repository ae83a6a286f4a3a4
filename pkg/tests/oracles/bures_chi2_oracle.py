"""Independent oracle for the Bures chi-square divergence.

Route: D = 2 Re tr(tau^dagger Omega) where Omega solves the Sylvester
equation sigma Omega + Omega sigma = tau, tau = rho - sigma.  In sigma's
eigenbasis Omega_ij = tau_ij / (q_i + q_j), so this reproduces the
weighted-sum formula without sharing any code with bureslab.

Run:  python tests/oracles/bures_chi2_oracle.py
"""

import numpy as np
from scipy.linalg import solve_sylvester


def bures_chi2_sylvester(rho, sigma):
    tau = rho - sigma
    omega = solve_sylvester(sigma, sigma, tau)
    return float(2.0 * np.trace(tau.conj().T @ omega).real)


if __name__ == "__main__":
    # symmetric qubit pair with a real off-diagonal perturbation
    t = 0.25
    sigma = np.eye(2, dtype=complex) / 2
    rho = np.array([[0.5, t], [t, 0.5]], dtype=complex)
    print(f"qubit off-diagonal t={t}: D = {bures_chi2_sylvester(rho, sigma):.12f}")

    # fixed random full-rank pair, d=3
    rng = np.random.default_rng(20260816)
    g1 = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
    g2 = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
    rho3 = g1 @ g1.conj().T
    rho3 /= np.trace(rho3).real
    sig3 = g2 @ g2.conj().T
    sig3 /= np.trace(sig3).real
    print(f"random d=3 pair (seed 20260816): D = {bures_chi2_sylvester(rho3, sig3):.12f}")

    # diagonal pair, where the divergence must equal the classical chi2
    p = np.array([0.5, 0.3, 0.2])
    q = np.array([0.4, 0.35, 0.25])
    print(f"diagonal pair: D = {bures_chi2_sylvester(np.diag(p).astype(complex), np.diag(q).astype(complex)):.12f}")
    print(f"classical chi2 = {np.sum((p - q) ** 2 / q):.12f}")
