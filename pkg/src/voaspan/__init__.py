"""Exact spanning-set computations for modules of C2-cofinite vertex operator algebras."""

__version__ = "0.1.0"
