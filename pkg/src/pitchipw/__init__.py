"""Estimate the effect of inside vs. outside pitch demands with propensity-score IPW."""

__version__ = "0.1.0"
