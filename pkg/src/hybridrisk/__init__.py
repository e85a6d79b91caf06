"""Hybrid soft-voting diabetes risk classifiers with a frozen, leakage-safe pipeline."""

__version__ = "0.1.0"
