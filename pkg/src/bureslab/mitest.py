"""Product testing and mutual-information control.

Mutual information is bounded by closeness to product: a joint state
within squared Hellinger eta^2 of some product state obeys an explicit
MI ceiling, so a tester that certifies closeness-to-product doubles as
a correlation detector.  This module carries the bound functions, the
classical tester (add-one marginal learning plus a chi-square identity
test against the learned product), and the quantum tester (marginals
learned by the staged pipeline with a spectrum floor, compared against
the joint in squared Hellinger).

Everywhere below d means the marginal dimension: classical joints are
d x d tables, quantum joints live on a d^2-dimensional space.  All
entropies and divergences are in nats.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import classical, config
from . import divergences as dv
from . import frobenius as fb
from . import linalg
from . import pipeline as pl

__all__ = [
    "DEPOL_HELLINGER_COEFF",
    "TesterVerdict",
    "depol_hellinger_shift",
    "mi_continuity_bound",
    "hellinger_mi_bound",
    "uniform_product_joint",
    "correlated_joint",
    "learn_marginals",
    "pearson_identity_test",
    "classical_mi_plan",
    "classical_mi_test",
    "quantum_mi_plan",
    "marginal_scale",
    "learn_marginal_floored",
    "learn_product_quantum",
    "product_chi2_decomposition",
    "product_chi2_controls",
    "hellinger_gap_verdict",
    "quantum_mi_test",
]

#: root-Hellinger growth coefficient for depolarizing both arguments
DEPOL_HELLINGER_COEFF = 4.0 + 4.0 * math.sqrt(2.0)


@dataclass(frozen=True)
class TesterVerdict:
    """Outcome of one product test plus everything worth logging."""

    accept: bool
    stats: dict


def _check_gap(d: int, eps: float) -> None:
    # the conversion chain needs ln(d/eps) > 0 and a subconstant gap
    if d < 2:
        raise pl.ParameterError("marginal dimension must be at least 2")
    if not 0.0 < eps <= 0.5:
        raise pl.ParameterError("MI gap eps must lie in (0, 1/2]")


# ---------------------------------------------------------------------------
# bound functions
# ---------------------------------------------------------------------------

def depol_hellinger_shift(eps: float) -> float:
    """Root-Hellinger cost of blending eps of uniform noise into a pair."""
    if eps < 0.0:
        raise ValueError("eps must be nonnegative")
    return DEPOL_HELLINGER_COEFF * math.sqrt(eps)


def mi_continuity_bound(eps: float, d: int) -> float:
    """Largest MI shift between joints at trace distance eps.

    Two bipartite states with marginal dimension d and trace distance at
    most eps have mutual informations within 2 eps ln(4 d / eps) of each
    other.
    """
    if eps < 0.0:
        raise ValueError("eps must be nonnegative")
    if eps == 0.0:
        return 0.0
    return 2.0 * eps * math.log(4.0 * d / eps)


def hellinger_mi_bound(eta: float, d: int) -> float:
    """MI ceiling for a joint near a product in squared Hellinger.

    If some product state sits within squared Hellinger eta^2 of the
    joint, its mutual information is at most this value.  The argument
    eta is the root divergence.  Internally both states are smoothed at
    level eps = min(eta^2, 1): the smoothing costs a root-Hellinger
    shift, the smoothed pair converts divergence to MI through the
    spectrum floor, and continuity carries the MI back to the original
    joint.  Exactly zero at eta = 0.
    """
    if eta < 0.0:
        raise ValueError("eta must be nonnegative")
    if d < 2:
        raise ValueError("marginal dimension must be at least 2")
    if eta == 0.0:
        return 0.0
    eps = min(eta * eta, 1.0)
    conversion = 2.0 + math.log(d * d / eps ** 2)
    core = conversion * (depol_hellinger_shift(eps) + eta)
    return core + mi_continuity_bound(eps, d)


# ---------------------------------------------------------------------------
# classical joint families
# ---------------------------------------------------------------------------

def uniform_product_joint(d: int) -> np.ndarray:
    """The d x d uniform product table, MI exactly zero."""
    return np.full((d, d), 1.0 / (d * d))


def correlated_joint(d: int, lam: float) -> np.ndarray:
    """Uniform product blended with a perfectly correlated diagonal.

    Both marginals stay uniform for every lam, so the family sweeps MI
    from 0 to ln d without moving anything a marginal learner can see.
    """
    if not 0.0 <= lam <= 1.0:
        raise ValueError("lam must lie in [0, 1]")
    joint = np.full((d, d), (1.0 - lam) / (d * d))
    joint[np.diag_indices(d)] += lam / d
    return joint


# ---------------------------------------------------------------------------
# classical tester
# ---------------------------------------------------------------------------

def classical_mi_plan(d: int, eps: float) -> dict:
    """Working accuracies and sample sizes for one classical MI test.

    The route from an MI gap eps to a chi-square testing gap passes
    through the smoothing bound, which eats a ln(d/eps) factor; the
    learner gets enough samples that each marginal lands within a third
    of the working accuracy except with small constant probability, and
    the identity test runs at the usual sqrt(#outcomes) rate.
    """
    _check_gap(d, eps)
    eps_dd = config.C_INEQ * eps / math.log(d / eps)
    eps_t = 2.0 * eps_dd
    n_learn = math.ceil(config.C_LEARN_CLASSICAL * d / eps_dd)
    n_test = math.ceil(config.C_TEST_BUDGET * d / eps_t)
    return {"eps_dd": eps_dd, "eps_t": eps_t,
            "n_learn": int(n_learn), "n_test": int(n_test)}


def learn_marginals(counts: np.ndarray, n: int):
    """Add-one smoothed marginal estimates from a joint count table."""
    counts = np.asarray(counts)
    qa = classical.add_one_hybrid(counts.sum(axis=1), n,
                                  np.arange(counts.shape[0]))
    qb = classical.add_one_hybrid(counts.sum(axis=0), n,
                                  np.arange(counts.shape[1]))
    return qa, qb


def pearson_identity_test(q, counts, n: int, eps_t: float,
                          rng: np.random.Generator,
                          sims: int = config.PEARSON_NULL_SIMS) -> TesterVerdict:
    """Chi-square identity test of observed counts against a reference.

    The statistic is sum (c - n q)^2 / (n q) over the support of q; the
    acceptance threshold is a Monte Carlo null quantile plus a
    separation margin proportional to n eps_t, so distributions with
    chi-square divergence at least eps_t from q land above it.  Any
    observed count outside the support rejects outright.  eps_t above
    1/2 is outside the tester's domain.
    """
    if not 0.0 < eps_t <= 0.5:
        raise pl.ParameterError("eps_t must lie in (0, 1/2]")
    if n < 1:
        raise ValueError("need at least one test sample")
    q = np.asarray(q, dtype=float).ravel()
    counts = np.asarray(counts).ravel()
    if q.shape != counts.shape:
        raise ValueError("reference and counts disagree on outcome count")
    support = q > 0.0
    escaped = int(np.sum(counts[~support]))
    stats = {"n": int(n), "bins": int(q.size), "eps_t": float(eps_t),
             "escaped": escaped}
    if escaped > 0:
        stats.update(statistic=math.inf, threshold=math.nan,
                     null_quantile=math.nan)
        return TesterVerdict(accept=False, stats=stats)
    qs = q[support]
    qs = qs / qs.sum()
    expected = n * qs
    statistic = float(np.sum((counts[support] - expected) ** 2 / expected))
    null = rng.multinomial(n, qs, size=sims)
    null_stats = np.sum((null - expected) ** 2 / expected, axis=1)
    quantile = float(np.quantile(null_stats, config.PEARSON_NULL_LEVEL))
    threshold = quantile + config.PEARSON_MARGIN * n * eps_t
    stats.update(statistic=statistic, threshold=threshold,
                 null_quantile=quantile)
    return TesterVerdict(accept=bool(statistic <= threshold), stats=stats)


def classical_mi_test(joint, eps: float, rng: np.random.Generator,
                      tester=pearson_identity_test) -> TesterVerdict:
    """One round of the classical MI test on a known joint table.

    Draws its own samples: a learning batch fixes add-one marginal
    estimates, then a fresh testing batch feeds the identity tester
    against their product.  Accepting certifies MI below eps with high
    probability; joints with MI at least eps reject with high
    probability.  The lab knows the joint, so the true divergences ride
    along in the stats.
    """
    p = np.asarray(joint, dtype=float)
    if p.ndim != 2:
        raise ValueError("joint must be a 2-D table")
    if np.any(p < 0.0) or abs(p.sum() - 1.0) > 1e-9:
        raise ValueError("joint must be a probability table")
    d = max(p.shape)
    plan = classical_mi_plan(d, eps)
    flat = p.ravel()
    counts_learn = rng.multinomial(plan["n_learn"], flat).reshape(p.shape)
    qa, qb = learn_marginals(counts_learn, plan["n_learn"])
    product = np.outer(qa, qb)
    counts_test = rng.multinomial(plan["n_test"], flat)
    inner = tester(product.ravel(), counts_test, plan["n_test"],
                   plan["eps_t"], rng)
    stats = dict(inner.stats)
    stats.update(plan)
    stats["n_total"] = plan["n_learn"] + plan["n_test"]
    stats["mi"] = dv.classical_mutual_information(p)
    stats["chi2_product"] = dv.chi_sq_divergence(flat, product.ravel())
    stats["hellinger_sq_product"] = dv.hellinger_sq(flat, product.ravel())
    return TesterVerdict(accept=inner.accept, stats=stats)


# ---------------------------------------------------------------------------
# quantum marginal learning
# ---------------------------------------------------------------------------

def quantum_mi_plan(d: int, eps: float) -> dict:
    """Working accuracies for one quantum MI test at marginal dimension d."""
    _check_gap(d, eps)
    eps_prime = config.C_INEQ * eps / math.log(d / eps)
    eps_t = 2.0 * eps_prime
    return {"eps_prime": eps_prime, "eps_t": eps_t,
            "eps_learn": 0.49 * eps_t}


def marginal_scale(d: int, r: int, eps_learn: float) -> float:
    """Per-stage accuracy that lands a floored estimate within eps_learn.

    The cookie blend's chi-square error carries a sqrt(d/r) amplification
    on the blended block and a d^(3/4)/sqrt(r) one through the floor, so
    the stage scale shrinks by the worse of the two.
    """
    return eps_learn * min(d ** -0.5, math.sqrt(r) / d ** 0.75)


def learn_marginal_floored(rho: np.ndarray, eps_learn: float,
                           rng: np.random.Generator, r: int | None = None,
                           spec: fb.EstimatorSpec | None = None,
                           variant: int = 1):
    """Learn one marginal with the staged pipeline and blend in a floor.

    Returns (estimate, record).  The estimate carries eps_learn of
    uniform mass on any unresolved block, giving the spectrum floor the
    product decomposition needs; the record holds budgets and floor
    diagnostics.  floor_ok reports whether every eigenvalue cleared
    eps_learn / d, which a fully resolved rank-deficient state will not.
    """
    rho = np.asarray(rho, dtype=complex)
    d = rho.shape[0]
    if r is None:
        r = d
    if spec is None:
        spec = fb.parse_estimator("oracle:f=d")
    if not 0.0 < eps_learn < 0.5:
        raise pl.ParameterError("eps_learn must lie in (0, 1/2)")
    target = marginal_scale(d, r, eps_learn)
    params = pl.budget_for_scale(d, r, spec.rate(d, r), target,
                                 variant=variant)
    out = pl.staged_learn(rho, spec, params, rng)
    est = pl.to_chi2(out, eta=eps_learn)
    floor = float(np.linalg.eigvalsh(est)[0])
    record = {
        "dim": d, "rank_cap": int(r), "eps_learn": float(eps_learn),
        "eps_tilde": params.eps_tilde, "stage_budget": params.m,
        "consumed": out.consumed, "prefix": out.prefix,
        "eps_residual": out.eps_prime, "stop_reason": out.stop_reason,
        "min_eigenvalue": floor,
        "floor_ok": bool(floor >= eps_learn / d - config.PSD_TOL),
    }
    return est, record


def learn_product_quantum(rho_joint: np.ndarray, d_a: int, d_b: int,
                          eps_learn: float, rng: np.random.Generator,
                          r: int | None = None,
                          spec: fb.EstimatorSpec | None = None,
                          variant: int = 1):
    """Learn both marginals of a bipartite state as floored estimates.

    Local algorithms on disjoint subsystems can share copies, so every
    joint copy yields one copy of each marginal and the joint cost is
    the larger of the two marginal budgets, not their sum.  Returns
    (sigma_hat, tau_hat, record).
    """
    rho_joint = np.asarray(rho_joint, dtype=complex)
    if rho_joint.shape != (d_a * d_b, d_a * d_b):
        raise ValueError("joint dimension mismatch")
    rho_a = linalg.partial_trace(rho_joint, d_a, d_b, keep="A")
    rho_b = linalg.partial_trace(rho_joint, d_a, d_b, keep="B")
    sigma_hat, rec_a = learn_marginal_floored(rho_a, eps_learn, rng,
                                              r=r, spec=spec, variant=variant)
    tau_hat, rec_b = learn_marginal_floored(rho_b, eps_learn, rng,
                                            r=r, spec=spec, variant=variant)
    record = {"a": rec_a, "b": rec_b,
              "joint_copies": max(rec_a["consumed"], rec_b["consumed"]),
              "floor_ok": rec_a["floor_ok"] and rec_b["floor_ok"]}
    return sigma_hat, tau_hat, record


# ---------------------------------------------------------------------------
# product decomposition of the Bures chi-square
# ---------------------------------------------------------------------------

def _aligned(xi, rho, sigma_hat, tau_hat):
    """Rotate each factor into its reference's eigenbasis."""
    dec_s = linalg.eig_hermitian(np.asarray(sigma_hat, dtype=complex))
    dec_t = linalg.eig_hermitian(np.asarray(tau_hat, dtype=complex))
    s, t = dec_s.values, dec_t.values
    if s[0] <= 0.0 or t[0] <= 0.0:
        raise pl.ParameterError("references must have positive spectrum")
    xi_t = linalg.conjugate(dec_s.vectors.conj().T,
                            np.asarray(xi, dtype=complex))
    rho_t = linalg.conjugate(dec_t.vectors.conj().T,
                             np.asarray(rho, dtype=complex))
    return xi_t, rho_t, s, t


def _off_diag_sum(a: np.ndarray, w: np.ndarray) -> float:
    """Off-diagonal Bures chi-square block: sum 2|a_ij|^2 / (w_i + w_j)."""
    val = 2.0 * np.abs(a) ** 2 / (w[:, None] + w[None, :])
    np.fill_diagonal(val, 0.0)
    return float(val.sum())


def product_chi2_decomposition(xi, rho, sigma_hat, tau_hat) -> dict:
    """Exact block split of D(xi x rho || sigma_hat x tau_hat).

    Works in the product eigenbasis of the references and sums the
    Bures chi-square terms by index class: both coordinate pairs
    diagonal (on_on), exactly one diagonal (on_off), neither (off_off).
    The sums are direct, with the 4-index class materialized as a
    tensor, so keep the marginal dimensions modest.  All reference
    eigenvalues must be positive, which the floored learner guarantees.
    """
    xi_t, rho_t, s, t = _aligned(xi, rho, sigma_hat, tau_hat)
    x = np.real(np.diag(xi_t))
    y = np.real(np.diag(rho_t))
    ds, dt = s.size, t.size
    eye_a = np.eye(ds, dtype=bool)
    eye_b = np.eye(dt, dtype=bool)
    a2 = np.abs(xi_t) ** 2
    b2 = np.abs(rho_t) ** 2

    st = np.outer(s, t)
    on_on = float(np.sum((np.outer(x, y) - st) ** 2 / st))

    # a = b, i != j: entries xi_aa rho_ij over s_a (t_i + t_j)
    val_row = 2.0 * (x ** 2)[:, None, None] * b2[None, :, :] \
        / (s[:, None, None] * (t[:, None] + t[None, :])[None, :, :])
    val_row[:, eye_b] = 0.0
    # i = j, a != b: entries xi_ab rho_ii over (s_a + s_b) t_i
    val_col = 2.0 * a2[:, :, None] * (y ** 2)[None, None, :] \
        / ((s[:, None] + s[None, :])[:, :, None] * t[None, None, :])
    val_col[eye_a, :] = 0.0
    on_off = float(val_row.sum() + val_col.sum())

    num = 2.0 * a2[:, :, None, None] * b2[None, None, :, :]
    den = st[:, None, :, None] + st[None, :, None, :]
    mask = eye_a[:, :, None, None] | eye_b[None, None, :, :]
    ratio = num / den
    ratio[mask] = 0.0
    off_off = float(ratio.sum())

    return {"on_on": on_on, "on_off": on_off, "off_off": off_off,
            "total": on_on + on_off + off_off}


def product_chi2_controls(xi, rho, sigma_hat, tau_hat) -> dict:
    """Closed forms controlling each block of the product decomposition.

    on_on multiplies through the diagonal chi-squares exactly, on_off
    factorizes exactly into one-sided off-diagonal sums, and off_off is
    bounded by their product scaled through the spectrum floor: when
    every reference eigenvalue is at least floor_eps / d, the cross
    denominators cost at most a d / floor_eps blow-up.
    """
    xi_t, rho_t, s, t = _aligned(xi, rho, sigma_hat, tau_hat)
    x = np.real(np.diag(xi_t))
    y = np.real(np.diag(rho_t))
    chi_x = dv.chi_sq_divergence(x, s)
    chi_y = dv.chi_sq_divergence(y, t)
    off_xi = _off_diag_sum(xi_t, s)
    off_rho = _off_diag_sum(rho_t, t)
    d = max(s.size, t.size)
    floor_eps = d * float(min(s[0], t[0]))
    return {
        "chi_x": chi_x, "chi_y": chi_y,
        "off_xi": off_xi, "off_rho": off_rho,
        "on_on": (1.0 + chi_x) * (1.0 + chi_y) - 1.0,
        "on_off": (1.0 + chi_x) * off_rho + (1.0 + chi_y) * off_xi,
        "off_off_bound": (d / floor_eps) * off_xi * off_rho,
        "floor_eps": floor_eps,
    }


# ---------------------------------------------------------------------------
# quantum tester
# ---------------------------------------------------------------------------

def hellinger_gap_verdict(joint, product, eps_t: float, rng=None) -> bool:
    """Reference verdict: exact squared Hellinger against the 2 eps_t line.

    The lab knows the joint, so the closeness decision is evaluated
    directly; any sample-based tester with this signature can stand in.
    """
    return bool(dv.hellinger_sq_q(joint, product) < 2.0 * eps_t)


def quantum_mi_test(rho_joint, d_a: int, d_b: int, eps: float,
                    rng: np.random.Generator, r: int | None = None,
                    spec: fb.EstimatorSpec | None = None,
                    verdict=hellinger_gap_verdict) -> TesterVerdict:
    """One round of the quantum MI test on a known bipartite state.

    Learns floored marginal estimates at 0.49 eps_t in Bures chi-square
    and asks the verdict function whether the joint sits within 2 eps_t
    of their product in squared Hellinger.  Accepting certifies MI
    below eps with high probability; states with MI at least eps reject
    with high probability.
    """
    rho_joint = np.asarray(rho_joint, dtype=complex)
    plan = quantum_mi_plan(max(d_a, d_b), eps)
    sigma_hat, tau_hat, record = learn_product_quantum(
        rho_joint, d_a, d_b, plan["eps_learn"], rng, r=r, spec=spec)
    product = linalg.bipartite_product(sigma_hat, tau_hat)
    stats = dict(plan)
    stats["learning"] = record
    stats["joint_copies"] = record["joint_copies"]
    stats["hellinger_sq"] = dv.hellinger_sq_q(rho_joint, product)
    stats["bures_chi2_product"] = dv.bures_chi2(rho_joint, product)
    stats["mi"] = dv.quantum_mutual_information(rho_joint, d_a, d_b)
    return TesterVerdict(accept=bool(verdict(rho_joint, product,
                                             plan["eps_t"], rng)),
                         stats=stats)
