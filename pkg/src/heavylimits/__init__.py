"""Simulation and Monte Carlo verification of limit theorems for functionals
of long-memory linear processes with heavy-tailed innovations."""

__version__ = "0.1.0"
