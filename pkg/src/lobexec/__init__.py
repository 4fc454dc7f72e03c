"""Limit order book simulation and reinforcement-learning trade execution."""

__version__ = "0.1.0"
