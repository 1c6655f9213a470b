"""Quantum-kernel SVM pipeline on small grayscale image datasets."""

__version__ = "0.1.0"
