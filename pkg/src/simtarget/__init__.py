"""Ligand-based target prediction from set-similarity statistics."""

__version__ = "0.1.0"
