"""Quantum-assisted MUSIC direction finding for hybrid arrays, simulated end to end."""

__version__ = "0.1.0"
