"""Reinforcement-learning generation and evaluation of grid parking garages."""

__version__ = "0.1.0"
