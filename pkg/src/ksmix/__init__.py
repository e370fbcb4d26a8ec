"""Stochastic Kuramoto-Sivashinsky simulation and mixing diagnostics."""

__version__ = "0.1.0"
