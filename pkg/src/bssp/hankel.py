"""Hankel operators with hyper-positive symbols and two-weight inequalities.

The Hankel operator used here maps analytic zero-mean polynomials to the
anti-analytic side: H_phi(f) = R_-(phi f), output supported on n <= 0
(this differs from the classical convention by a one-sided shift).
Poisson-convolved symbols are truncated at ``n_sym`` coefficients; the
neglected tail enters the reported slack accounting so that "holds"
verdicts stay sound despite truncation, and grid suprema are lower bounds
on the true sup (a verdict of violation is never issued within the
truncation allowance).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .circle import (
    SpectralMeasure,
    TrigPoly,
    l2_norm,
    poisson_convolve,
    riesz,
    e_n_average,
)

TWO_PI = 2.0 * math.pi
DEFAULT_N_SYM = 128
DEFAULT_GRID = 8192


# --------------------------------------------------------------------------
# Core operator
# --------------------------------------------------------------------------


def hankel_apply(symbol: TrigPoly, f: TrigPoly) -> TrigPoly:
    """H_phi(f) = R_-(phi f): the n <= 0 part of the product.

    Exact on finite supports; coefficient k <= 0 equals
    sum_n phi_hat(n) f_hat(k - n).
    """
    _, minus = riesz(symbol * f)
    return minus


def _require_analytic_zero_mean(f: TrigPoly, name: str = "f") -> None:
    sup = f.support()
    if sup is None:
        return
    if sup[0] < 1:
        raise ValueError(f"{name} must be analytic with vanishing mean (support in n >= 1)")


def _symbol_truncation(mu: SpectralMeasure, r: float, n_sym: int) -> TrigPoly:
    """Poisson-convolved symbol truncated to |n| <= n_sym, exact coefficients."""
    coeffs = np.array([r ** abs(n) * mu.fourier(n) for n in range(-n_sym, n_sym + 1)])
    return TrigPoly(-n_sym, coeffs)


def _theta_grid(grid: int) -> np.ndarray:
    return TWO_PI * np.arange(int(grid)) / int(grid)


@dataclass(frozen=True)
class InequalityReport:
    """Grid-certified verdict of a weighted sup-norm inequality.

    ``slack`` is bound - sup_ratio (negative values within the truncation
    allowance come from the symbol tail, not from a violation);
    ``holds`` is sup_ratio <= bound + truncation_allowance + tol.
    """

    kind: str
    sup_ratio: float
    bound: float
    slack: float
    holds: bool
    argmax_theta: float
    truncation_allowance: float
    n_sym: int
    grid: int


def _report(kind, ratios, theta, bound, allowance, n_sym, grid, tol) -> InequalityReport:
    k = int(np.argmax(ratios))
    sup_ratio = float(ratios[k])
    return InequalityReport(
        kind=kind,
        sup_ratio=sup_ratio,
        bound=float(bound),
        slack=float(bound - sup_ratio),
        holds=bool(sup_ratio <= bound + allowance + tol),
        argmax_theta=float(theta[k]),
        truncation_allowance=float(allowance),
        n_sym=n_sym,
        grid=grid,
    )


# --------------------------------------------------------------------------
# Two-weight inequality (Poisson symbol at radius r)
# --------------------------------------------------------------------------


def two_weight_check(
    mu: SpectralMeasure,
    r: float,
    f: TrigPoly,
    grid: int = DEFAULT_GRID,
    n_sym: int = DEFAULT_N_SYM,
    tol: float = 1e-9,
) -> InequalityReport:
    """sup |H_phi(f)| / sqrt(phi) <= r / sqrt(1 - r^2) * ||f||_{L2(phi)}.

    phi = P_r * mu.  The numerator uses the truncated symbol; the weight in
    the denominator and the L2 norm use the exact convolution, so the only
    sources of slack are the symbol tail (accounted) and grid resolution.
    """
    if not 0.0 <= r < 1.0:
        raise ValueError(f"radius must lie in [0, 1), got {r}")
    mass = mu.total_mass()
    if mass <= 0:
        raise ValueError("measure must have positive mass")
    _require_analytic_zero_mean(f)
    if f.is_zero():
        raise ValueError("test function must not be identically zero")
    phi = poisson_convolve(mu, r)
    symbol = _symbol_truncation(mu, r, n_sym)
    h = hankel_apply(symbol, f)
    theta = _theta_grid(grid)
    numerator = np.abs(h.evaluate(theta))
    weight = phi.density_value(theta)
    ratios = numerator / np.sqrt(weight)
    bound = r / math.sqrt(1.0 - r * r) * l2_norm(f, phi)
    if r > 0:
        tail = 2.0 * mass * r ** (n_sym + 1) / (1.0 - r)
        weight_floor = mass * (1.0 - r) / (1.0 + r)
        allowance = f.l1() * tail / math.sqrt(weight_floor)
    else:
        allowance = 0.0
    return _report("two-weight", ratios, theta, bound, allowance, n_sym, grid, tol)


def poisson_ratio_value(f: TrigPoly, r: float, t: float) -> float:
    """Closed-form |R_-(f P)| / sqrt(P) for the Poisson weight centered at t.

    The ratio is independent of the evaluation angle and equals
    |sum_n f_hat(n) r^n e^{int}| / sqrt(1 - r^2) for analytic f.
    """
    sup = f.support()
    if sup is None:
        return 0.0
    if sup[0] < 0:
        raise ValueError("closed form applies to analytic test functions")
    total = sum(f.coeff(n) * r**n * np.exp(1j * n * t) for n in range(sup[0], sup[1] + 1))
    return abs(total) / math.sqrt(1.0 - r * r)


# --------------------------------------------------------------------------
# Dilation-averaged inequality
# --------------------------------------------------------------------------


def en_inequality_check(
    mu: SpectralMeasure,
    b0: TrigPoly,
    f: TrigPoly,
    n_dilation: int,
    grid: int = DEFAULT_GRID,
    n_sym: int = DEFAULT_N_SYM,
    tol: float = 1e-9,
) -> InequalityReport:
    """sup |E_N[H_phi(B0 f)]| / sqrt(E_N[|B0|^2 phi]) <= ||f||_{L2(phi)}.

    phi = P_{1/sqrt(2)} * mu (binary-tree convention).  B0 must be analytic
    of degree at most N-1 and not identically zero, which keeps the
    averaged weight strictly positive on the circle.
    """
    if n_dilation < 1:
        raise ValueError(f"dilation order must be >= 1, got {n_dilation}")
    mass = mu.total_mass()
    if mass <= 0:
        raise ValueError("measure must have positive mass")
    _require_analytic_zero_mean(f)
    if b0.is_zero():
        raise ValueError("B0 must not be identically zero")
    sup_b = b0.support()
    if sup_b[0] < 0 or sup_b[1] > n_dilation - 1:
        raise ValueError(f"B0 must be analytic of degree <= {n_dilation - 1}")
    r = 1.0 / math.sqrt(2.0)
    phi = poisson_convolve(mu, r)
    symbol = _symbol_truncation(mu, r, n_sym)
    averaged_num = e_n_average(hankel_apply(symbol, b0 * f), n_dilation)
    b2 = b0 * b0.conjugate()
    lim = n_sym // n_dilation + 1
    den_coeffs = {}
    for n in range(-lim, lim + 1):
        m = n * n_dilation
        den_coeffs[n] = sum(
            b2.coeff(j) * r ** abs(m - j) * mu.fourier(m - j)
            for j in range(b2.n_min, b2.n_max + 1)
        )
    averaged_den = TrigPoly.from_dict(den_coeffs)
    theta = _theta_grid(grid)
    weight = np.real(averaged_den.evaluate(theta))
    if np.min(weight) <= 0:
        raise ValueError("averaged weight is not strictly positive on the grid")
    ratios = np.abs(averaged_num.evaluate(theta)) / np.sqrt(weight)
    bound = l2_norm(f, phi)
    tail = 2.0 * mass * r ** (n_sym + 1) / (1.0 - r)
    num_tail = (b0 * f).l1() * tail
    den_exponent = max(n_sym + 1 - 2 * (n_dilation - 1), 0)
    den_tail = b2.l1() * 2.0 * mass * r**den_exponent / (1.0 - r)
    den_floor = max(float(np.min(weight)) - den_tail, 1e-12 * max(mass, 1.0))
    sup_ratio = float(np.max(ratios))
    allowance = num_tail / math.sqrt(den_floor) + 0.5 * sup_ratio * den_tail / den_floor
    return _report("en-averaged", ratios, theta, bound, allowance, n_sym, grid, tol)


# --------------------------------------------------------------------------
# Poisson-smoothed inequality
# --------------------------------------------------------------------------


def smoothed_inequality_check(
    mu: SpectralMeasure,
    f: TrigPoly,
    grid: int = DEFAULT_GRID,
    n_sym: int = DEFAULT_N_SYM,
    tol: float = 1e-9,
) -> InequalityReport:
    """sup |P_{1/sqrt2} * H_phi(f)| / sqrt(P_{1/sqrt2} * phi) <= ||f||_{L2(phi)}.

    phi = P_{sqrt(2/3)} * mu.  Smoothing the (n <= 0)-supported numerator
    acts by the multiplier 2^{-|n|/2} on coefficients, and the smoothed
    weight is the exact convolution at the composite radius 1/sqrt(3).
    """
    mass = mu.total_mass()
    if mass <= 0:
        raise ValueError("measure must have positive mass")
    _require_analytic_zero_mean(f)
    r_phi = math.sqrt(2.0 / 3.0)
    r_smooth = 1.0 / math.sqrt(2.0)
    phi = poisson_convolve(mu, r_phi)
    symbol = _symbol_truncation(mu, r_phi, n_sym)
    h = hankel_apply(symbol, f)
    smoothed = h.multiplier(lambda ns: r_smooth ** np.abs(ns))
    smoothed_weight = poisson_convolve(phi, r_smooth)
    theta = _theta_grid(grid)
    weight = smoothed_weight.density_value(theta)
    ratios = np.abs(smoothed.evaluate(theta)) / np.sqrt(weight)
    bound = l2_norm(f, phi)
    composite = r_phi * r_smooth
    tail = 2.0 * mass * composite ** (n_sym + 1) / (1.0 - composite)
    weight_floor = mass * (1.0 - composite) / (1.0 + composite)
    allowance = f.l1() * tail / math.sqrt(weight_floor)
    return _report("poisson-smoothed", ratios, theta, bound, allowance, n_sym, grid, tol)


# --------------------------------------------------------------------------
# Operator norm to sup-norm and boundedness conditions
# --------------------------------------------------------------------------


def h2_linf_norm(symbol: TrigPoly, n_trunc: int | None = None, grid: int = 4096) -> float:
    """Operator norm of H_phi from the Hardy space to sup-norm.

    Evaluates sup_theta (sum_{n>=0} |sum_{m<=-n} phi_hat(m) e^{im theta}|^2)^(1/2)
    on the grid; exact once n_trunc reaches the symbol's anti-analytic
    degree.
    """
    sup = symbol.support()
    if sup is None:
        return 0.0
    deepest = max(0, -sup[0])
    if n_trunc is None:
        n_trunc = deepest
    n_trunc = min(n_trunc, deepest)
    theta = _theta_grid(grid)
    z = np.exp(-1j * theta)
    partial = np.zeros_like(z)  # sum_{m <= -(n+1)} phi_hat(m) e^{im theta}, built downward
    total = np.zeros(len(theta))
    for n in range(n_trunc, -1, -1):
        partial = partial + symbol.coeff(-n) * z**n
        total += np.abs(partial) ** 2
    return float(np.sqrt(np.max(total)))


@dataclass(frozen=True)
class BoundednessReport:
    """Necessary/sufficient Sobolev tests for H_phi into sup-norm.

    Verdicts for infinite symbols are extrapolated from the supplied
    truncation by comparing partial sums at a quarter, half and the full
    support; ``tri_state`` is one of bounded | unbounded | inconclusive.
    """

    h_half_norm: float
    h_half_diverging: bool
    h_one_norm: float
    h_one_diverging: bool
    positive_coefficients: bool
    positive_test_sum: float | None
    positive_test_diverging: bool | None
    tri_state: str
    truncation: int


def _partial_profile(terms: np.ndarray) -> tuple[float, bool]:
    """Partial-sum value and a divergence flag from quarter/half/full sums.

    The flag fires when the second-half increment dominates the first
    (ratio >= 1.5) and is significant; slowly diverging (logarithmic) sums
    stay unflagged, which is the honest finite-truncation answer.
    """
    m = len(terms)
    total = float(np.sum(terms))
    if m < 8:
        return total, False
    s1 = float(np.sum(terms[: m // 4]))
    s2 = float(np.sum(terms[: m // 2]))
    d1 = s2 - s1
    d2 = total - s2
    significant = d2 > 1e-9 * max(total, 1.0)
    return total, bool(significant and d2 >= 1.5 * d1)


def boundedness_conditions(symbol: TrigPoly, tol: float = 1e-12) -> BoundednessReport:
    """Boundedness tests for H_phi from the Hardy space into sup-norm.

    Computes the Sobolev-1/2 (necessary) and Sobolev-1 (sufficient) norms
    of the anti-analytic part; when all anti-analytic coefficients are
    non-negative the exact square-summable-tails criterion overrides the
    Sobolev gap.
    """
    _, minus = riesz(symbol)
    deepest = max(0, -(minus.support() or (0, 0))[0])
    coeffs = np.array([minus.coeff(-m) for m in range(deepest + 1)])
    ms = np.arange(deepest + 1, dtype=float)
    weights_half = (1.0 + ms**2) ** 0.5 * np.abs(coeffs) ** 2
    weights_one = (1.0 + ms**2) * np.abs(coeffs) ** 2
    h_half_sq, half_div = _partial_profile(weights_half)
    h_one_sq, one_div = _partial_profile(weights_one)
    positive = bool(np.all(np.abs(coeffs.imag) <= tol) and np.all(coeffs.real >= -tol))
    pos_sum = None
    pos_div = None
    if positive:
        def tail_profile(m_cut: int) -> float:
            tails = np.cumsum(coeffs.real[: m_cut + 1][::-1])[::-1]
            return float(np.sum(tails**2))

        full = tail_profile(deepest)
        if deepest >= 8:
            s1 = tail_profile(deepest // 4)
            s2 = tail_profile(deepest // 2)
            d1, d2 = s2 - s1, full - s2
            pos_div = bool(d2 > 1e-9 * max(full, 1.0) and d2 >= 1.5 * d1)
        else:
            pos_div = False
        pos_sum = full
    if positive:
        tri = "unbounded" if pos_div else "bounded"
    elif one_div is False:
        tri = "bounded"
    elif half_div:
        tri = "unbounded"
    else:
        tri = "inconclusive"
    return BoundednessReport(
        h_half_norm=math.sqrt(h_half_sq),
        h_half_diverging=half_div,
        h_one_norm=math.sqrt(h_one_sq),
        h_one_diverging=one_div,
        positive_coefficients=positive,
        positive_test_sum=pos_sum,
        positive_test_diverging=pos_div,
        tri_state=tri,
        truncation=deepest,
    )


# --------------------------------------------------------------------------
# Hilbert-type pairing bounds
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class PairingBound:
    pairing: float
    bound: float


def hlp_pairing(a, b) -> PairingBound:
    """sum a_m b_n / max(m, n) against the bound 4 ||a||_2 ||b||_2 (1-indexed)."""
    av = np.asarray(a, dtype=float)
    bv = np.asarray(b, dtype=float)
    if np.any(av < 0) or np.any(bv < 0):
        raise ValueError("pairing sequences must be non-negative")
    if len(av) == 0 or len(bv) == 0:
        return PairingBound(0.0, 0.0)
    ia = np.arange(1, len(av) + 1, dtype=float)
    ib = np.arange(1, len(bv) + 1, dtype=float)
    denom = np.maximum.outer(ia, ib)
    pairing = float((np.outer(av, bv) / denom).sum())
    bound = 4.0 * float(np.linalg.norm(av) * np.linalg.norm(bv))
    if pairing > bound + 1e-9 * max(bound, 1.0):
        raise ArithmeticError("pairing exceeded its proven bound; numerical corruption")
    return PairingBound(pairing, bound)


def weighted_tail_sum(a, terms: int) -> float:
    """Partial sum of (1 + m^2)^{-1} (|a_0| + ... + |a_m|)^2 for m = 0..terms.

    The sequence is rescaled to unit l2 norm when larger; finiteness of the
    full series is witnessed by the pairing bound.
    """
    av = np.abs(np.asarray(a, dtype=complex)).astype(float)
    norm = float(np.linalg.norm(av))
    if norm > 1.0:
        av = av / norm
    cums = np.cumsum(av)
    total = 0.0
    for m in range(terms + 1):
        partial = cums[min(m, len(cums) - 1)] if len(cums) else 0.0
        total += partial**2 / (1.0 + m * m)
    return total
