"""Coherent information of CSS codes under erasure and Pauli noise."""

__version__ = "0.1.0"
