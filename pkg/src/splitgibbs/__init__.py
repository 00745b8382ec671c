"""Split and split-augmented Gibbs samplers for Bayesian image restoration."""

__version__ = "0.1.0"
