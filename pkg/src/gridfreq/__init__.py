"""Stability analysis and simulation of decentralized multi-area frequency control."""

__version__ = "0.1.0"
