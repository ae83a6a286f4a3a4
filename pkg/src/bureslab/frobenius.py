"""Base estimators with expected Frobenius-squared error f/m.

Everything downstream is parameterized by an :class:`EstimatorSpec`: a
named estimator together with its copy-rate f(d, r), promising expected
squared Frobenius error at most f/m from m copies.  Two families ship:

* ``simple``: a measured estimator built from pair-interference POVMs,
  rate ~ 4.5 d^2 (no rank adaptivity, single-copy measurements only);
* ``oracle:f=...``: a noise oracle that fabricates the estimate by adding
  Gaussian Hermitian noise calibrated to hit the requested rate exactly.
  Useful for exploring how downstream guarantees scale with f without
  paying the d^2 of a real single-copy scheme.

Estimators consume the entire budget they are handed; partial leftovers
from shot granularity are burned, not returned, so copy accounting stays
monotone.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import config, measurement as ms

__all__ = ["EstimatorSpec", "simple_frobenius", "oracle_estimate",
           "parse_estimator"]


@dataclass(frozen=True)
class EstimatorSpec:
    """A base estimator and its promised copy-rate.

    ``run(rho, budget, rng)`` returns a Hermitian estimate after drawing
    from ``budget``; ``rate(d, r)`` is the f in the error promise f/m.
    ``kind`` is "measured" or "oracle".
    """

    name: str
    kind: str
    rate: Callable[[int, int], float]
    run: Callable[[np.ndarray, ms.CopyBudget, np.random.Generator], np.ndarray]


def simple_frobenius(rho: np.ndarray, shots: int, rng: np.random.Generator,
                     budget: ms.CopyBudget | None = None) -> np.ndarray:
    """Measured estimate of every matrix entry, ``shots`` per POVM.

    Each matching round contributes two POVMs (real and imaginary
    interference); outcome frequencies give r_hat = (f+ - f-)/2 per pair
    with variance at most avg(rho_ii, rho_jj)/shots.  One more round of
    computational-basis shots fills in the diagonal.  Total copies:
    (2 rounds + 1) * shots; expected squared Frobenius error is
    (2d - 1)/shots for even d and (2d + 1)/shots for odd.
    """
    d = rho.shape[0]
    est = np.zeros((d, d), dtype=complex)
    for pairs, real_povm, imag_povm in ms.matching_povms(d):
        cr = ms.sample_povm(real_povm, rho, shots, rng, budget) / shots
        ci = ms.sample_povm(imag_povm, rho, shots, rng, budget) / shots
        by_label = {lab: k for k, lab in enumerate(real_povm.labels)}
        for (i, j) in pairs:
            if j is None:
                continue
            re = (cr[by_label[(i, j, 1)]] - cr[by_label[(i, j, -1)]]) / 2.0
            im = (ci[by_label[(i, j, 1)]] - ci[by_label[(i, j, -1)]]) / 2.0
            est[i, j] = re + 1j * im
            est[j, i] = re - 1j * im
    diag = ms.sample_basis(rho, shots, rng, budget) / shots
    est[np.diag_indices(d)] = diag
    return est


def _simple_runner(rho, budget, rng):
    d = rho.shape[0]
    rounds = len(ms.matching_povms(d))
    povms_total = 2 * rounds + 1
    shots = budget.remaining // povms_total
    if shots < 1:
        raise ms.BudgetExhausted(
            f"need at least {povms_total} copies at dimension {d}")
    est = simple_frobenius(rho, shots, rng)
    budget.take(budget.remaining)
    return est


def oracle_estimate(rho: np.ndarray, f: float, m: int,
                    rng: np.random.Generator) -> np.ndarray:
    """rho plus Hermitian Gaussian noise with E ||noise||_F^2 = f/m exactly.

    Per-entry variance is s^2 = (f/m)/d^2: real N(0, s^2) on the diagonal
    and (x + iy) s/sqrt(2) above it.
    """
    if m <= 0:
        raise ValueError("m must be positive")
    d = rho.shape[0]
    s = np.sqrt((f / m) / d ** 2)
    g = np.zeros((d, d), dtype=complex)
    iu = np.triu_indices(d, k=1)
    n_off = iu[0].size
    re = rng.standard_normal(n_off) * (s / np.sqrt(2.0))
    im = rng.standard_normal(n_off) * (s / np.sqrt(2.0))
    g[iu] = re + 1j * im
    g = g + g.conj().T
    g[np.diag_indices(d)] = rng.standard_normal(d) * s
    return np.asarray(rho, dtype=complex) + g


_ORACLE_RATES = {
    "d": lambda d, r: float(d),
    "rd": lambda d, r: float(r * d),
    "d2": lambda d, r: float(d * d),
}


def parse_estimator(text: str, r: int = None) -> EstimatorSpec:
    """Build an EstimatorSpec from its command-line name.

    Accepted: "simple", "oracle:f=d", "oracle:f=rd", "oracle:f=d2".
    The rank argument only matters for rank-sensitive oracle rates and is
    looked up at run time from the rate callable's second argument.
    """
    if text == "simple":
        return EstimatorSpec(
            name="simple", kind="measured",
            rate=lambda d, r: config.K_ACC * d * d,
            run=_simple_runner)
    if text.startswith("oracle:f="):
        key = text[len("oracle:f="):]
        if key not in _ORACLE_RATES:
            raise ValueError(f"unknown oracle rate {key!r}; "
                             f"choose from {sorted(_ORACLE_RATES)}")
        rate = _ORACLE_RATES[key]

        def runner(rho, budget, rng, _rate=rate, _r=r):
            m = budget.remaining
            rr = _r if _r is not None else rho.shape[0]
            est = oracle_estimate(rho, _rate(rho.shape[0], rr), m, rng)
            budget.take(m)
            return est

        return EstimatorSpec(name=text, kind="oracle", rate=rate, run=runner)
    raise ValueError(f"unknown estimator {text!r}")
