"""Numerical laboratory for Newman-Rivlin asymptotics of partial sums of entire functions."""

__version__ = "0.1.0"
