"""Dissipative phonon-state engineering in a qubit-coupled mechanical oscillator."""

from . import analysis, fockspace, lindblad, model, scenarios

__all__ = ["analysis", "fockspace", "lindblad", "model", "scenarios"]
__version__ = "0.1.0"
