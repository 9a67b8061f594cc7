"""Numerical harmonic analysis on SL(n, R)/SO(n): Iwasawa calculus, boundary
transforms, weighted Radon transforms and stationary-phase asymptotics."""

__version__ = "0.1.0"
