"""Interval-filtered eigenvalue sampling on a dense state-vector simulator."""

__version__ = "0.1.0"
