"""Numerical tolerances and frozen algorithm constants.

Constants marked "calibrated" were computed once by the routines in
``bureslab.calibrate`` and frozen here so that budgets and guarantees are
reproducible.  Rerun ``python -m bureslab.calibrate`` to recompute them;
the derivations are documented next to each routine.
"""

# ---------------------------------------------------------------------------
# tolerances (exact linear-algebra identities vs float noise)
# ---------------------------------------------------------------------------

#: eigenvalues below this are treated as zero when inverting or restricting
SPECTRAL_CUTOFF = 1e-12

#: max allowed |A - A^dagger| entry for inputs declared Hermitian
HERMITIAN_TOL = 1e-12

#: slack for PSD / trace-one / completeness checks on states and POVMs
PSD_TOL = 1e-10
TRACE_TOL = 1e-10
UNITARY_TOL = 1e-10

#: tolerance for algebraic identities verified end to end (reconstruction,
#: projector overlap vs fidelity, basis-change invariance)
RECON_TOL = 1e-9

# ---------------------------------------------------------------------------
# confidence schedule
# ---------------------------------------------------------------------------

#: m_delta = m / (CONF_SCALE * ln(1/delta)).  Calibrated: the binding
#: requirement is the 1.01-factor two-sided mass estimate, Chernoff gives
#: c >= 4/eta^2 with eta = 1 - 1/1.01, rounded up.  (calibrate.conf_scale)
CONF_SCALE = 41000.0

# ---------------------------------------------------------------------------
# staged chi-square algorithm
# ---------------------------------------------------------------------------

#: per-stage rate constant C in eps_tilde = C * r * f / m_delta
C_STAGE = 64.0

#: hard ceiling on eps = eps_tilde * l_max; parameter sets violating it
#: are rejected rather than run out of regime
EPS_CEILING = 0.25

#: smallest admissible failure parameter when the stage-count log is <= 1
DELTA_FLOOR = 1e-4

#: planner head-room between the requested final accuracy and the
#: per-stage eps_tilde target (calibrate.plan_scale, frozen at d=8, r=2)
K_PLAN = 24.0

# ---------------------------------------------------------------------------
# component estimators
# ---------------------------------------------------------------------------

#: expected Frobenius-squared error of the matching-POVM estimator is
#: <= K_ACC * d^2 / n at copy count n (calibrate.matching_rate, d=8, r=2)
K_ACC = 4.5

#: two-outcome median-of-batches estimator: batch size 4/eps via Markov,
#: 8*ln(1/delta) batches via Chernoff on the median (calibrate.bit_scale)
BIT_BATCHES_SCALE = 8.0
BIT_BATCH_EPS_SCALE = 4.0

#: single-qubit learner copy count n = QUBIT_SCALE * ln(1/delta) / eps
#: (calibrate.qubit_scale, verified at eps=0.1, delta=0.05)
QUBIT_SCALE = 512.0

# ---------------------------------------------------------------------------
# mutual-information testers
# ---------------------------------------------------------------------------

#: learning-accuracy scale: eps_prime = C_INEQ * eps / ln(d/eps)
C_INEQ = 1.0 / 64.0

#: identity-tester sample budget n = C_TEST_BUDGET * sqrt(#outcomes) / eps_t
C_TEST_BUDGET = 16.0

#: marginal-learning budget n = C_LEARN_CLASSICAL * d / eps_dd, sized so the
#: Markov failure odds of each chi-square-eps_dd/3 learn stay under 0.005
C_LEARN_CLASSICAL = 1200.0

#: Pearson-statistic rejection margin added to the Monte Carlo null
#: quantile, as a fraction of n * eps_t
PEARSON_MARGIN = 0.75

#: Monte Carlo simulations used to place the Pearson null quantile
PEARSON_NULL_SIMS = 10_000
PEARSON_NULL_LEVEL = 0.99
