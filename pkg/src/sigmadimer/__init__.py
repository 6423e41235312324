"""Coupled 2-Sigma molecule dimer: spectra, entanglement and CNOT feasibility."""

__version__ = "0.1.0"
