"""Manifold walk lab.

Weighted-graph approximations of spheres, their Laplacian and transition
spectra, stationary random walks with Hermitian-tensor observables, and the
tensor expander Chernoff bound evaluated against Monte Carlo tails.
"""
from .kernels import BACKEND

__version__ = "0.1.0"
__all__ = ["BACKEND", "__version__"]
