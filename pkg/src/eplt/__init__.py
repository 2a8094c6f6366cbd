"""Entanglement preserving local thermalization: channels, verifiers and thermodynamic bounds."""

__version__ = "0.1.0"
