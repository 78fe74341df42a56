"""Prediction distances for branching-type stationary processes.

The distance from the root variable to the span of all other variables on
the q-homogeneous tree equals the square root of the Szego geometric mean
of the a.c. density of the associated spectral measure; finite-depth
least-squares oracles converge to it from above.  On the q-ray star tree
the distance has a closed form in the geometric mean and the total mass.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import criterion as _criterion
from .circle import SpectralMeasure, szego_mean
from .kernels import HermitianMatrix, HpdSequence, PSD_TOL_REL, branching_toeplitz, psd_check
from .trees import truncate

PINV_CUTOFF_REL = 1e-10


def finite_distance(
    matrix: HermitianMatrix,
    target: int,
    cutoff_rel: float = PINV_CUTOFF_REL,
    psd_tol: float = PSD_TOL_REL,
) -> float:
    """L2 distance from one coordinate to the span of the others.

    For a PSD Gram matrix A the squared distance is the Schur complement
    A[t,t] - v B^+ v* with B the Gram of the remaining coordinates; the
    pseudo-inverse acts on the eigenspace above cutoff_rel * lambda_max,
    the correct reading of projection onto a closed span for exactly
    singular kernels.
    """
    check = psd_check(matrix, psd_tol)
    if not check.psd:
        raise ValueError(f"matrix is not PSD (min eigenvalue {check.min_eigenvalue:.3e})")
    n = matrix.size
    if not 0 <= target < n:
        raise ValueError(f"target index {target} out of range for size {n}")
    keep = [i for i in range(n) if i != target]
    b = matrix.data[np.ix_(keep, keep)]
    v = matrix.data[target, keep]
    lam, vecs = np.linalg.eigh(b)
    cutoff = cutoff_rel * max(float(lam[-1]), 0.0) if n > 1 else 0.0
    w = vecs.conj().T @ v.conj()
    mask = lam > cutoff
    reduction = float(np.real(np.sum(np.abs(w[mask]) ** 2 / lam[mask]))) if np.any(mask) else 0.0
    d2 = float(np.real(matrix.data[target, target])) - reduction
    return math.sqrt(max(d2, 0.0))


def spectral_toeplitz(alpha: HpdSequence, order: int) -> HermitianMatrix:
    """Gram matrix of the level averages Theta_0..Theta_order.

    Cov(Theta_i, Theta_j) = q^{|i-j|/2} alpha(|i-j|), the Toeplitz matrix of
    the spectral-measure coefficients.
    """
    if order > alpha.n_max:
        raise ValueError(f"order {order} needs alpha up to {order}, have {alpha.n_max}")
    m = order + 1
    a = np.empty((m, m), dtype=complex)
    for i in range(m):
        for j in range(m):
            a[i, j] = alpha.spectral_coefficient(j - i) if j >= i else np.conj(
                alpha.spectral_coefficient(i - j)
            )
    return HermitianMatrix(a)


def symmetric_reduction(alpha: HpdSequence, order: int) -> float:
    """Distance from Theta_0 to span{Theta_1..Theta_order}.

    By the permutation symmetry of the kernel this equals the full tree
    oracle at depth ``order`` exactly; the property suite asserts the
    equality.
    """
    return finite_distance(spectral_toeplitz(alpha, order), 0)


@dataclass(frozen=True)
class PredictionReport:
    """Szego value with the finite-depth oracle schedule."""

    szego_value: float
    depths: tuple[int, ...]
    oracle_values: tuple[float, ...]
    converged: bool
    decreasing: bool
    gap: float
    method: str


def predict_tq(
    alpha: HpdSequence,
    nu_alpha: SpectralMeasure | None,
    depths: tuple[int, ...] = (1, 2, 3, 4, 6, 8),
    grid: int = 4096,
    method: str = "symmetric",
    tol: float = 1e-6,
    consistency_tol: float = 1e-8,
) -> PredictionReport:
    """Prediction distance from the root on the q-homogeneous tree.

    ``nu_alpha`` is the measure with coefficients q^{n/2} alpha(n), supplied
    with an explicit a.c. representation (atoms are ignored by the Szego
    value per the Lebesgue decomposition).  The oracle schedule reports the
    finite-depth distances; the gap to the Szego value is reported, never
    extrapolated.
    """
    if nu_alpha is None:
        raise ValueError("the spectral measure of alpha must be supplied explicitly")
    for n in range(0, min(8, alpha.n_max) + 1):
        expect = alpha.spectral_coefficient(n)
        got = nu_alpha.fourier(n)
        if abs(expect - got) > consistency_tol * max(1.0, abs(expect)):
            raise ValueError(
                f"measure is inconsistent with alpha at n={n}: {got} vs q^(n/2) alpha = {expect}"
            )
    gm = szego_mean(nu_alpha.density, grid=grid)
    szego_value = math.sqrt(gm.value)
    if method == "symmetric":
        values = tuple(symmetric_reduction(alpha, d) for d in depths)
    elif method == "tree":
        values = tuple(
            finite_distance(branching_toeplitz(alpha, truncate(alpha.q, d)), 0) for d in depths
        )
    else:
        raise ValueError(f"unknown oracle method {method!r}")
    gap = values[-1] - szego_value if values else 0.0
    decreasing = all(values[i + 1] <= values[i] + 1e-12 for i in range(len(values) - 1))
    converged = abs(gap) <= tol
    return PredictionReport(szego_value, tuple(depths), values, converged, decreasing, gap, method)


@dataclass(frozen=True)
class StarPrediction:
    """Prediction distance on the q-ray star tree, when a process exists."""

    value: float | None
    valid: bool
    clipped: bool
    criterion: "_criterion.CriterionReport"


def predict_tq1(
    mu: SpectralMeasure, q: int, grid: int = 4096, tol: float = 1e-9
) -> StarPrediction:
    """sqrt(q * geometric mean - (q-1) * total mass), guarded by the criterion.

    When the admissibility criterion fails there is no process and no
    distance; the radicand is clipped at 0 with a flag when it is within
    tolerance of 0.
    """
    report = _criterion.tq1_criterion(mu, q, grid=grid, tol=tol)
    if not report.holds:
        return StarPrediction(None, False, False, report)
    radicand = q * report.lhs - (q - 1) * report.mass
    clipped = radicand < 0
    return StarPrediction(math.sqrt(max(radicand, 0.0)), True, clipped, report)
