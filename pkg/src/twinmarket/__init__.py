"""Adaptive traders on two competing double-auction markets: finite-N
simulation plus mean-field steady-state and bifurcation analysis."""

__version__ = "0.1.0"
