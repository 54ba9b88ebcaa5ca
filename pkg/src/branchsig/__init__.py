"""Branched path signatures, the Hairer-Kelly extension and signature models."""

__version__ = "0.1.0"
