"""Quasilinear approximation of the 1D Vlasov equation: solvers and cross-checks."""

__version__ = "0.1.0"
