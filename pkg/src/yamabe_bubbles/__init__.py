"""Bubble blow-up analysis for Yamabe-type equations on model manifolds."""

__version__ = "0.1.0"
