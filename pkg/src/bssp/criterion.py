"""Spectral-measure admissibility tests for branching processes.

The star tree with q rays admits a process with spectral measure mu
exactly when the Szego geometric mean of the a.c. part dominates
(1 - 1/q) times the total mass (an inverse Jensen inequality).  The block
matrix oracle tests positive definiteness of the star-tree kernel
directly; Fourier bounds give necessary conditions on general trees.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .circle import SpectralMeasure, TrigPoly, szego_mean, sup_norm
from .kernels import HermitianMatrix, PSD_TOL_REL, psd_check
from .trees import GeneralRootedTree, TreeTruncation, delta_n, tq1_truncation

CN_ORDER_CAP = 512


@dataclass(frozen=True)
class CriterionReport:
    """Inverse-Jensen admissibility verdict for the q-ray star tree."""

    q: int
    lhs: float  # geometric mean of the a.c. density
    rhs: float  # (1 - 1/q) * total mass
    holds: bool
    margin: float
    mass: float
    szego_flagged: bool


def tq1_criterion(
    mu: SpectralMeasure, q: int, grid: int = 4096, tol: float = 1e-9
) -> CriterionReport:
    """Check exp(int log(d mu_ac / dm) dm) >= (1 - 1/q) mu(T).

    Atoms contribute to the right-hand mass but never to the geometric
    mean: the measure type has no singular-continuous part, so extracting
    the a.c. part is exact.
    """
    if q < 2:
        raise ValueError(f"arity must be >= 2, got {q}")
    gm = szego_mean(mu.density, grid=grid)
    mass = mu.total_mass()
    lhs = gm.value
    rhs = (1.0 - 1.0 / q) * mass
    return CriterionReport(q, lhs, rhs, lhs >= rhs - tol, lhs - rhs, mass, gm.flagged)


def build_cn(mu: SpectralMeasure, q: int, order: int) -> HermitianMatrix:
    """Kernel matrix of the star tree on rays of length ``order``.

    Block form: mu_hat(0) corner, q copies of the Toeplitz block
    [mu_hat(j - i)] on the diagonal, the row (mu_hat(1)..mu_hat(order))
    coupling the root to each block, zeros between blocks.  Rows are
    labelled in ray-by-ray order.
    """
    if order < 1:
        raise ValueError(f"order must be >= 1, got {order}")
    coeffs = {n: mu.fourier(n) for n in range(-order, order + 1)}
    block = np.empty((order, order), dtype=complex)
    for i in range(order):
        for j in range(order):
            block[i, j] = coeffs[j - i]
    v = np.array([coeffs[k] for k in range(1, order + 1)])
    m = 1 + q * order
    data = np.zeros((m, m), dtype=complex)
    data[0, 0] = coeffs[0]
    for b in range(q):
        s = 1 + b * order
        data[0, s : s + order] = v
        data[s : s + order, 0] = np.conj(v)
        data[s : s + order, s : s + order] = block
    labels = tuple(vert.label() for vert in tq1_truncation(q, order))
    return HermitianMatrix(data, labels)


def toeplitz_block(mu: SpectralMeasure, order: int) -> HermitianMatrix:
    """The order x order Toeplitz matrix [mu_hat(j - i)]."""
    return HermitianMatrix(build_cn(mu, 2, order).data[1 : order + 1, 1 : order + 1])


@dataclass(frozen=True)
class CnOracleReport:
    all_psd: bool
    first_failure: int | None
    min_eigenvalues: tuple[float, ...]


def cn_oracle(
    mu: SpectralMeasure,
    q: int,
    n_max: int,
    tol_rel: float = PSD_TOL_REL,
    order_cap: int = CN_ORDER_CAP,
) -> CnOracleReport:
    """Eigensolve sweep of the star kernel matrices for orders 1..n_max.

    Cross-validates the inverse-Jensen criterion; a criterion failure need
    not surface at small order, so agreement carries the finite-order
    caveat.
    """
    if n_max < 1:
        raise ValueError(f"n_max must be >= 1, got {n_max}")
    if n_max > order_cap:
        raise ValueError(f"n_max {n_max} exceeds the order cap {order_cap}")
    eigs = []
    first = None
    for n in range(1, n_max + 1):
        result = psd_check(build_cn(mu, q, n), tol_rel)
        eigs.append(result.min_eigenvalue)
        if first is None and not result.psd:
            first = n
    return CnOracleReport(first is None, first, tuple(eigs))


@dataclass(frozen=True)
class TwoLevelBounds:
    """Interval of sqrt(a/b) for admissible half-and-half two-level densities.

    A density taking value a on half the circle and b on the other half
    satisfies the inverse-Jensen inequality iff sqrt(a/b) lies in
    [lower, upper]; equality holds exactly at the endpoints.
    """

    q: int
    lower: float
    upper: float


def two_level_bounds(q: int) -> TwoLevelBounds:
    if q < 2:
        raise ValueError(f"arity must be >= 2, got {q}")
    lower = (q - 1) / (q + math.sqrt(2 * q - 1))
    return TwoLevelBounds(q, lower, 1.0 / lower)


@dataclass(frozen=True)
class TwoLevelReport:
    geometric_mean: float
    mass: float
    holds: bool
    margin: float


def two_level_report(a: float, b: float, q: int, tol: float = 1e-12) -> TwoLevelReport:
    """Criterion evaluation for the density a on half the circle, b on the rest.

    The value depends only on the measure of the level set, so the
    half-circle layout loses no generality.
    """
    if a <= 0 or b <= 0:
        raise ValueError("two-level densities must be strictly positive")
    gm = math.sqrt(a * b)
    mass = (a + b) / 2.0
    rhs = (1.0 - 1.0 / q) * mass
    return TwoLevelReport(gm, mass, gm >= rhs - tol, gm - rhs)


@dataclass(frozen=True)
class SupNormReport:
    """Sufficient smallness condition for log-densities."""

    threshold: float
    sup: float
    sufficient: bool


def sup_norm_sufficient(g: TrigPoly, q: int, grid: int = 4096) -> SupNormReport:
    """sup|g| <= log(q/(q-1))/2 guarantees e^g passes the criterion.

    The condition is sufficient, not necessary: a False here says nothing
    about the criterion itself.
    """
    if not g.is_hermitian(1e-9):
        raise ValueError("log-density must be real-valued")
    threshold = 0.5 * math.log(q / (q - 1.0))
    sup = sup_norm(g, grid=grid)
    return SupNormReport(threshold, sup, sup <= threshold)


@dataclass(frozen=True)
class FourierBoundReport:
    """Necessary Fourier bounds |nu_hat(n)|^2 <= 1/Delta_n on a tree."""

    violations: tuple[int, ...]
    ratios: tuple[float, ...]  # |nu_hat(n)|^2 * Delta_n for n = 1..n_max (0 where Delta_n = 0)


def fourier_bound_check(
    nu: SpectralMeasure,
    tree: GeneralRootedTree | TreeTruncation,
    n_max: int,
    tol: float = 1e-9,
) -> FourierBoundReport:
    """Flag every n with |nu_hat(n)|^2 above 1 / (max n-th descendant count).

    The measure is normalized to nu_hat(0) = 1 first.  An empty violation
    list is necessary, not sufficient, for nu to be the spectral measure
    of a branching process on the tree.
    """
    if isinstance(tree, TreeTruncation):
        tree = GeneralRootedTree.from_truncation(tree)
    mass = nu.fourier(0).real
    if mass <= 0:
        raise ValueError("measure must have positive mass")
    violations = []
    ratios = []
    for n in range(1, n_max + 1):
        delta = delta_n(tree, n)
        coeff = abs(nu.fourier(n) / mass) ** 2
        if delta == 0:
            ratios.append(0.0)
            continue
        ratios.append(coeff * delta)
        if coeff > 1.0 / delta + tol:
            violations.append(n)
    return FourierBoundReport(tuple(violations), tuple(ratios))
