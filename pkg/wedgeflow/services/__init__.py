"""Numerical services: gas dynamics, wave curves, Riemann solvers, tracking, functionals, oracles."""
