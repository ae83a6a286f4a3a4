"""bureslab: a desk-scale lab for single-copy quantum state estimation.

Simulates measurements on known density matrices, runs a ladder of
estimator upgrades culminating in a staged spectrum-revealing algorithm
with Bures chi-square guarantees, and provides empirical checks for the
divergence inequalities and mutual-information testers built on top.
"""

__version__ = "0.1.0"
