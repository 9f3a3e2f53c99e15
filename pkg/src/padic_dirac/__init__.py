"""p-adic Dirac equation: exact wavelet calculus, spinor symbols and causality experiments."""

__version__ = "0.1.0"
