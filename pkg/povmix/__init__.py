"""Tail-category classification of overdispersed counts via Poisson mixtures."""

__version__ = "1.0.0"
