"""Entropy of hard random geometric graphs: estimators, bounds and a numerical lab."""

__version__ = "0.1.0"
