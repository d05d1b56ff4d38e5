"""Harmonic analysis and Vladimirov-type operators on the compact Heisenberg group H_d(Z_p)."""

__version__ = "0.1.0"
