"""Benchmark of SNN learning rules on Lempel-Ziv-complexity classification of binary sources."""
__version__ = "0.1.0"
