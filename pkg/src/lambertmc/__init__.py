"""Indifference pricing of claims on a non-traded asset via a Lambert-W decomposition."""

__version__ = "0.1.0"
