"""Momentum analysis for point-by-point racket-sport data.

Subpackages cover ingestion and feature engineering, streak existence
tests, entropy-weight momentum, CUSUM change points, shift intensity,
logistic/stepwise statistics, the PSO-seeded neural model, exact Shapley
attribution, synthetic generators, and a CLI front end.
"""

__version__ = "0.1.0"
