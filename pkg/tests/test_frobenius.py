import numpy as np
import pytest

from bureslab import config, frobenius as fb, linalg, measurement as ms


def test_simple_frobenius_unbiased_and_hermitian():
    rng = np.random.default_rng(71)
    rho = linalg.random_density(4, 4, rng)
    acc = np.zeros((4, 4), dtype=complex)
    trials = 300
    for _ in range(trials):
        est = fb.simple_frobenius(rho, 400, rng)
        assert np.max(np.abs(est - est.conj().T)) < 1e-12
        assert np.trace(est).real == pytest.approx(1.0)
        acc += est
    assert np.max(np.abs(acc / trials - rho)) < 0.01


def test_simple_frobenius_error_rate():
    rng = np.random.default_rng(73)
    d, shots, trials = 4, 2000, 300
    rho = linalg.random_density(d, d, rng)
    errs = np.array([linalg.frob_sq(fb.simple_frobenius(rho, shots, rng) - rho)
                     for _ in range(trials)])
    se = errs.std() / np.sqrt(trials)
    # per-shot theory: (2d - 1)/shots for even d, and the d^2-rate claim
    assert errs.mean() <= (2 * d - 1) / shots + 4 * se
    m_total = (2 * (d - 1) + 1) * shots
    assert errs.mean() <= config.K_ACC * d ** 2 / m_total + 4 * se


def test_simple_frobenius_odd_dimension():
    rng = np.random.default_rng(79)
    d = 3
    rho = linalg.random_density(d, d, rng)
    errs = [linalg.frob_sq(fb.simple_frobenius(rho, 2000, rng) - rho)
            for _ in range(200)]
    assert np.mean(errs) <= (2 * d + 1) / 2000 * 1.3


def test_oracle_estimate_rate_is_exact():
    rng = np.random.default_rng(83)
    d, f, m, trials = 5, 25.0, 400, 2000
    rho = linalg.random_density(d, d, rng)
    errs = np.empty(trials)
    for t in range(trials):
        est = fb.oracle_estimate(rho, f, m, rng)
        assert np.max(np.abs(est - est.conj().T)) < 1e-12
        errs[t] = linalg.frob_sq(est - rho)
    se = errs.std() / np.sqrt(trials)
    assert abs(errs.mean() - f / m) < 4 * se
    with pytest.raises(ValueError):
        fb.oracle_estimate(rho, f, 0, rng)


def test_parse_estimator_rates():
    assert fb.parse_estimator("simple").rate(4, 2) == config.K_ACC * 16
    assert fb.parse_estimator("oracle:f=d").rate(6, 2) == 6.0
    assert fb.parse_estimator("oracle:f=rd").rate(6, 2) == 12.0
    assert fb.parse_estimator("oracle:f=d2").rate(6, 2) == 36.0
    with pytest.raises(ValueError):
        fb.parse_estimator("oracle:f=bogus")
    with pytest.raises(ValueError):
        fb.parse_estimator("fancy")


def test_runners_consume_whole_budget():
    rng = np.random.default_rng(89)
    rho = linalg.random_density(4, 2, rng)
    for name in ("simple", "oracle:f=rd"):
        spec = fb.parse_estimator(name, r=2)
        budget = ms.CopyBudget(total=7000)
        est = spec.run(rho, budget, rng)
        assert budget.remaining == 0
        assert est.shape == (4, 4)


def test_simple_runner_needs_minimum_budget():
    rng = np.random.default_rng(97)
    rho = linalg.random_density(4, 2, rng)
    spec = fb.parse_estimator("simple")
    with pytest.raises(ms.BudgetExhausted):
        spec.run(rho, ms.CopyBudget(total=3), rng)
