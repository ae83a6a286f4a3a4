import math

import numpy as np
import pytest

from bureslab import classical, config
from bureslab.divergences import chi_sq_divergence


def test_effective_samples_formula():
    m, delta = 100_000, 0.01
    want = m / (config.CONF_SCALE * math.log(1 / delta))
    assert classical.effective_samples(m, delta) == pytest.approx(want)
    assert classical.mass_floor(m, delta) == pytest.approx(1 / want)
    with pytest.raises(ValueError):
        classical.effective_samples(0, 0.1)
    with pytest.raises(ValueError):
        classical.effective_samples(10, 1.5)


def test_empirical_moments():
    # mean is exact, mean squared-l2 error matches the binomial identity
    rng = np.random.default_rng(101)
    p = rng.dirichlet(np.ones(5))
    m, trials = 200, 4000
    hats = rng.multinomial(m, p, size=trials) / m
    err = np.sum((hats - p) ** 2, axis=1)
    exact = np.sum(p * (1 - p)) / m
    se = err.std() / np.sqrt(trials)
    assert abs(err.mean() - exact) < 4 * se
    assert err.mean() <= 1.0 / m + 4 * se  # mass/m bound at full mass
    assert np.max(np.abs(hats.mean(axis=0) - p)) < 0.01


def test_add_one_hybrid_values():
    q = classical.add_one_hybrid([3, 1, 0], m=4, subset=[0, 2])
    assert np.allclose(q, [4 / 6, 1 / 6, 1 / 6])
    # full-support smoothing keeps a normalized vector
    q2 = classical.add_one_hybrid([2, 2, 0], m=4, subset=[0, 1, 2])
    assert q2.sum() == pytest.approx(1.0)
    assert np.all(q2[[0, 1, 2]] > 0)


def test_add_one_mean_uniform_frozen():
    # frozen from tests/oracles/addone_mean_oracle.py (binomial summation)
    d, m = 10, 100
    p = np.full(d, 1.0 / d)
    exact = classical.add_one_expected_chi2(p, m, range(d))
    assert exact == pytest.approx(0.089082875460, abs=1e-10)
    bound = classical.add_one_chi2_bound(1.0, m, d)
    assert bound == pytest.approx(0.089108910891, abs=1e-10)
    assert bound == pytest.approx((d - 1) / (m + 1), abs=1e-12)
    assert exact <= bound
    assert bound <= 2 * d / m

    rng = np.random.default_rng(2026)
    trials = 30_000
    counts = rng.multinomial(m, p, size=trials)
    q = (counts + 1.0) / (m + d)
    vals = np.sum((p - q) ** 2 / q, axis=1)
    se = vals.std() / np.sqrt(trials)
    assert abs(vals.mean() - exact) < 4 * se
    assert vals.mean() <= bound + 3 * se


def test_add_one_mean_skewed_subset_frozen():
    # frozen from tests/oracles/addone_mean_oracle.py
    p = np.array([0.4, 0.3, 0.2, 0.05, 0.05])
    m, subset = 60, [0, 1, 3]
    exact = classical.add_one_expected_chi2(p, m, subset)
    assert exact == pytest.approx(0.034234862230, abs=1e-10)

    rng = np.random.default_rng(2027)
    trials = 30_000
    counts = rng.multinomial(m, p, size=trials)
    q = (counts[:, subset] + 1.0) / (m + len(subset))
    vals = np.sum((p[subset] - q) ** 2 / q, axis=1)
    se = vals.std() / np.sqrt(trials)
    assert abs(vals.mean() - exact) < 4 * se
    # the subset bound needs the subset mass, not 1
    bound = classical.add_one_chi2_bound(p[subset].sum(), m, len(subset))
    assert vals.mean() <= bound + 3 * se


def test_add_one_within_factor_four_on_resolved_coordinates():
    # every p_i in S above the per-coordinate mass floor => all q_i within
    # 4x, with failure probability well under delta
    delta, s = 0.2, 3
    p = np.array([0.3, 0.3, 0.3, 0.1])
    subset = [0, 1, 2]
    m = 400_000
    assert p[subset].min() >= classical.mass_floor(m, delta / s)
    rng = np.random.default_rng(2028)
    bad = 0
    for _ in range(200):
        counts = rng.multinomial(m, p)
        q = classical.add_one_hybrid(counts, m, subset)
        ratio = q[subset] / p[subset]
        if ratio.max() > 4.0 or ratio.min() < 0.25:
            bad += 1
    assert bad / 200 <= delta


def test_chi2_of_product_identity():
    rng = np.random.default_rng(103)
    p1, q1 = rng.dirichlet(np.ones(3)), rng.dirichlet(np.ones(3))
    p2, q2 = rng.dirichlet(np.ones(4)), rng.dirichlet(np.ones(4))
    e1 = chi_sq_divergence(p1, q1)
    e2 = chi_sq_divergence(p2, q2)
    direct = chi_sq_divergence(np.outer(p1, p2).ravel(), np.outer(q1, q2).ravel())
    assert classical.chi2_of_product(e1, e2) == pytest.approx(direct, rel=1e-12)


def test_two_outcome_median_consumption_and_accuracy():
    p = np.array([0.7, 0.3])
    eps, delta = 0.1, 0.05
    rng = np.random.default_rng(104)

    est, used = classical.two_outcome_median(lambda k: rng.multinomial(k, p), eps, delta)
    n_batches = math.ceil(config.BIT_BATCHES_SCALE * math.log(1 / delta))
    batch = math.ceil(config.BIT_BATCH_EPS_SCALE / eps)
    assert used == n_batches * batch
    assert est.sum() == pytest.approx(1.0)

    fails = 0
    trials = 400
    for _ in range(trials):
        est, _ = classical.two_outcome_median(lambda k: rng.multinomial(k, p), eps, delta)
        if chi_sq_divergence(p, est) > eps:
            fails += 1
    assert fails / trials <= delta + 4 * math.sqrt(delta / trials)


def test_two_outcome_median_validates():
    rng = np.random.default_rng(105)
    with pytest.raises(ValueError):
        classical.two_outcome_median(lambda k: rng.multinomial(k, [1, 0]), -1.0, 0.1)
    with pytest.raises(ValueError):
        classical.two_outcome_median(lambda k: np.zeros(3), 0.1, 0.1)
