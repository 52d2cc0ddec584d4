"""Exact Hecke-operator calculus on the U(3) tree and level-raising checks on finite quotients."""

__version__ = "0.1.0"
