"""Branching-type stationary stochastic processes on rooted trees.

Core library for building and testing branching-Toeplitz kernels,
classifying hyper-positive definite sequences, simulating the associated
Gaussian processes, evaluating prediction distances, checking spectral
admissibility criteria and verifying two-weight Hankel inequalities.
"""

__version__ = "0.1.0"

from . import circle, criterion, hankel, kernels, predict, processes, trees

__all__ = [
    "__version__",
    "circle",
    "criterion",
    "hankel",
    "kernels",
    "predict",
    "processes",
    "trees",
]
