"""Causal Wiener filtering for signals in scale-free noise."""

__version__ = "0.1.0"
