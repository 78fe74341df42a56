"""Shared fixtures and random-object generators for the test suite."""

from __future__ import annotations

import numpy as np
import pytest

from bssp.circle import GridDensity, SpectralMeasure, TrigDensity, TrigPoly


def random_nonneg_trig_density(rng: np.random.Generator, max_degree: int = 4) -> TrigDensity:
    """Density |p|^2 for a random analytic polynomial p: exact non-negative trig poly."""
    deg = int(rng.integers(0, max_degree + 1))
    p = rng.normal(size=deg + 1) + 1j * rng.normal(size=deg + 1)
    p = p * rng.uniform(0.2, 1.2)
    w = np.convolve(p, np.conj(p[::-1]))  # coefficients of |p|^2, indices -deg..deg
    return TrigDensity(TrigPoly(-deg, w))


def random_measure(
    rng: np.random.Generator,
    max_degree: int = 4,
    max_atoms: int = 2,
    allow_atoms: bool = True,
) -> SpectralMeasure:
    density = random_nonneg_trig_density(rng, max_degree)
    atoms = ()
    if allow_atoms:
        n_at = int(rng.integers(0, max_atoms + 1))
        atoms = tuple(
            (float(rng.uniform(0, 2 * np.pi)), float(rng.uniform(0.05, 0.8)))
            for _ in range(n_at)
        )
    return SpectralMeasure(atoms, density)


def random_grid_density(rng: np.random.Generator, size: int = 256) -> GridDensity:
    return GridDensity(rng.uniform(0.1, 2.0, size=size))


def random_analytic_poly(rng: np.random.Generator, max_degree: int = 6) -> TrigPoly:
    """Random analytic polynomial with zero mean (support in n >= 1)."""
    deg = int(rng.integers(1, max_degree + 1))
    coeffs = rng.normal(size=deg) + 1j * rng.normal(size=deg)
    return TrigPoly(1, coeffs)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20250811)
