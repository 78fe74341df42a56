"""Measures and trigonometric polynomials on the unit circle.

Conventions used throughout the package:

* the reference measure is the normalized Haar measure ``dm`` with m(T) = 1;
* Fourier coefficients are ``mu_hat(n) = int exp(-i n t) dmu(t)``;
* the Poisson kernel is normalized so that its n-th coefficient is
  ``r^|n|`` (equivalently ``int P_r dm = 1``), hence Poisson convolution
  acts on Fourier coefficients as the multiplier ``r^|n|``.  All 2*pi
  factors are absorbed by this choice.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np

TWO_PI = 2.0 * math.pi
LOG_FLOOR = 1e-300
FLOOR_FRACTION = 0.01
DEFAULT_GRID = 4096


# --------------------------------------------------------------------------
# Trigonometric polynomials
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class TrigPoly:
    """Finite Fourier series sum_n a_n e^{i n theta}, stored densely.

    ``coeffs[k]`` is the coefficient of ``e^{i (n_min + k) theta}``.
    Instances are treated as immutable.
    """

    n_min: int
    coeffs: np.ndarray

    def __post_init__(self) -> None:
        c = np.asarray(self.coeffs, dtype=complex)
        object.__setattr__(self, "coeffs", c)

    # -- constructors ------------------------------------------------------
    @staticmethod
    def zero() -> "TrigPoly":
        return TrigPoly(0, np.zeros(1, dtype=complex))

    @staticmethod
    def constant(c: complex) -> "TrigPoly":
        return TrigPoly(0, np.array([c], dtype=complex))

    @staticmethod
    def monomial(n: int, c: complex = 1.0) -> "TrigPoly":
        return TrigPoly(n, np.array([c], dtype=complex))

    @staticmethod
    def from_dict(d: dict[int, complex]) -> "TrigPoly":
        if not d:
            return TrigPoly.zero()
        lo, hi = min(d), max(d)
        c = np.zeros(hi - lo + 1, dtype=complex)
        for n, v in d.items():
            c[n - lo] = v
        return TrigPoly(lo, c)

    # -- basic access -------------------------------------------------------
    @property
    def n_max(self) -> int:
        return self.n_min + len(self.coeffs) - 1

    def coeff(self, n: int) -> complex:
        k = n - self.n_min
        if 0 <= k < len(self.coeffs):
            return complex(self.coeffs[k])
        return 0.0 + 0.0j

    def support(self) -> tuple[int, int] | None:
        nz = np.nonzero(self.coeffs)[0]
        if len(nz) == 0:
            return None
        return self.n_min + int(nz[0]), self.n_min + int(nz[-1])

    def trim(self) -> "TrigPoly":
        sup = self.support()
        if sup is None:
            return TrigPoly.zero()
        lo, hi = sup
        return TrigPoly(lo, self.coeffs[lo - self.n_min : hi - self.n_min + 1].copy())

    def is_zero(self, tol: float = 0.0) -> bool:
        return bool(np.all(np.abs(self.coeffs) <= tol))

    # -- algebra -------------------------------------------------------------
    def __add__(self, other: "TrigPoly") -> "TrigPoly":
        lo = min(self.n_min, other.n_min)
        hi = max(self.n_max, other.n_max)
        c = np.zeros(hi - lo + 1, dtype=complex)
        c[self.n_min - lo : self.n_min - lo + len(self.coeffs)] += self.coeffs
        c[other.n_min - lo : other.n_min - lo + len(other.coeffs)] += other.coeffs
        return TrigPoly(lo, c)

    def __sub__(self, other: "TrigPoly") -> "TrigPoly":
        return self + other.scale(-1.0)

    def __mul__(self, other: "TrigPoly") -> "TrigPoly":
        return TrigPoly(self.n_min + other.n_min, np.convolve(self.coeffs, other.coeffs))

    def scale(self, c: complex) -> "TrigPoly":
        return TrigPoly(self.n_min, self.coeffs * c)

    def conjugate(self) -> "TrigPoly":
        # conj(sum a_n e^{in t}) = sum conj(a_n) e^{-in t}
        return TrigPoly(-self.n_max, np.conj(self.coeffs[::-1]))

    def multiplier(self, factor) -> "TrigPoly":
        """Apply a Fourier multiplier n -> factor(n) to the coefficients."""
        ns = np.arange(self.n_min, self.n_max + 1)
        return TrigPoly(self.n_min, self.coeffs * factor(ns))

    # -- evaluation -----------------------------------------------------------
    def evaluate(self, theta: np.ndarray | float) -> np.ndarray:
        """Evaluate at angles (radians); Horner in z = e^{i theta}."""
        th = np.atleast_1d(np.asarray(theta, dtype=float))
        z = np.exp(1j * th)
        acc = np.full_like(z, self.coeffs[-1])
        for k in range(len(self.coeffs) - 2, -1, -1):
            acc = acc * z + self.coeffs[k]
        return acc * z**self.n_min

    def is_hermitian(self, tol: float = 1e-12) -> bool:
        """Whether a_{-n} = conj(a_n), i.e. the polynomial is real-valued."""
        lo, hi = self.n_min, self.n_max
        scale = max(1.0, float(np.max(np.abs(self.coeffs))) if len(self.coeffs) else 1.0)
        for n in range(min(lo, -hi), max(hi, -lo) + 1):
            if abs(self.coeff(n) - np.conj(self.coeff(-n))) > tol * scale:
                return False
        return True

    def l1(self) -> float:
        return float(np.sum(np.abs(self.coeffs)))

    def to_coeff_list(self) -> list[tuple[int, float, float]]:
        out = []
        for k, c in enumerate(self.coeffs):
            if c != 0:
                out.append((self.n_min + k, float(c.real), float(c.imag)))
        return out


def riesz(f: TrigPoly) -> tuple[TrigPoly, TrigPoly]:
    """Riesz projections (R+ keeps n >= 0, R- keeps n <= 0).

    Both keep the constant term, so R+ f + R- f = f + f_hat(0).
    """
    plus = {n: f.coeff(n) for n in range(max(f.n_min, 0), f.n_max + 1)}
    minus = {n: f.coeff(n) for n in range(f.n_min, min(f.n_max, 0) + 1)}
    return TrigPoly.from_dict(plus), TrigPoly.from_dict(minus)


def e_n_average(f: TrigPoly, n_dilation: int) -> TrigPoly:
    """Dilation average: output coefficient at n is f_hat(n * N).

    Implemented on coefficients, matching the grid definition
    (1/N) sum_k f(e^{i (theta + 2 pi k)/N}).
    """
    if n_dilation < 1:
        raise ValueError(f"dilation order must be >= 1, got {n_dilation}")
    lo = -((-f.n_min) // n_dilation) if f.n_min < 0 else (f.n_min + n_dilation - 1) // n_dilation
    hi = f.n_max // n_dilation
    if hi < lo:
        return TrigPoly.zero()
    return TrigPoly.from_dict({n: f.coeff(n * n_dilation) for n in range(lo, hi + 1)})


# --------------------------------------------------------------------------
# Densities
# --------------------------------------------------------------------------


def poisson_kernel(r: float, theta: np.ndarray | float) -> np.ndarray:
    """Normalized Poisson kernel (1 - r^2) / |1 - r e^{i theta}|^2."""
    th = np.atleast_1d(np.asarray(theta, dtype=float))
    return (1.0 - r * r) / (1.0 - 2.0 * r * np.cos(th) + r * r)


@dataclass(frozen=True, eq=False)
class TrigDensity:
    """Absolutely continuous part given by a real non-negative trig polynomial."""

    poly: TrigPoly

    def __post_init__(self) -> None:
        if not self.poly.is_hermitian(1e-9):
            raise ValueError("trig density coefficients must be Hermitian (real-valued density)")
        g = max(512, 4 * (abs(self.poly.n_min) + abs(self.poly.n_max) + 1))
        vals = np.real(self.poly.evaluate(TWO_PI * np.arange(g) / g))
        scale = max(1.0, float(np.max(np.abs(vals))))
        if float(np.min(vals)) < -1e-9 * scale:
            raise ValueError(
                f"trig density is negative on the verification grid (min {np.min(vals):.3e})"
            )

    def value(self, theta) -> np.ndarray:
        return np.real(self.poly.evaluate(theta))

    def fourier(self, n: int) -> complex:
        return self.poly.coeff(n)

    def mean(self) -> float:
        return float(self.poly.coeff(0).real)


@dataclass(frozen=True, eq=False)
class GridDensity:
    """Non-negative samples on the uniform grid theta_j = 2 pi j / G.

    Off-grid evaluation is periodic linear interpolation; Fourier
    coefficients use the discrete transform of the samples and alias for
    |n| > G/2.
    """

    values: np.ndarray

    def __post_init__(self) -> None:
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1 or len(v) < 2:
            raise ValueError("grid density needs a 1-d array of at least 2 samples")
        if np.min(v) < -1e-9 * max(1.0, float(np.max(np.abs(v)))):
            raise ValueError("grid density has negative samples")
        object.__setattr__(self, "values", np.clip(v, 0.0, None))

    def value(self, theta) -> np.ndarray:
        th = np.mod(np.atleast_1d(np.asarray(theta, dtype=float)), TWO_PI)
        g = len(self.values)
        pos = th * g / TWO_PI
        j = np.floor(pos).astype(int) % g
        frac = pos - np.floor(pos)
        nxt = (j + 1) % g
        return (1.0 - frac) * self.values[j] + frac * self.values[nxt]

    def fourier(self, n: int) -> complex:
        g = len(self.values)
        th = TWO_PI * np.arange(g) / g
        return complex(np.mean(self.values * np.exp(-1j * n * th)))

    def mean(self) -> float:
        return float(np.mean(self.values))


@dataclass(frozen=True, eq=False)
class PoissonDensity:
    """Density of the Poisson convolution P_r * base at radius r."""

    r: float
    base: "SpectralMeasure"

    def __post_init__(self) -> None:
        if not 0.0 <= self.r < 1.0:
            raise ValueError(f"Poisson radius must lie in [0, 1), got {self.r}")

    def value(self, theta) -> np.ndarray:
        th = np.atleast_1d(np.asarray(theta, dtype=float))
        out = np.zeros_like(th)
        for angle, mass in self.base.atoms:
            out += mass * poisson_kernel(self.r, th - angle)
        dens = self.base.density
        if isinstance(dens, TrigDensity):
            out += np.real(
                dens.poly.multiplier(lambda ns: self.r ** np.abs(ns)).evaluate(th)
            )
        elif isinstance(dens, GridDensity):
            g = len(dens.values)
            grid = TWO_PI * np.arange(g) / g
            # chunked quadrature: keeps the kernel matrix under ~4M entries
            step = max(1, 4_000_000 // g)
            for lo in range(0, len(th), step):
                hi = lo + step
                out[lo:hi] += (
                    poisson_kernel(self.r, th[lo:hi, None] - grid[None, :]) @ dens.values / g
                )
        elif isinstance(dens, PoissonDensity):
            inner = PoissonDensity(self.r * dens.r, dens.base)
            out += inner.value(th)
        return out

    def fourier(self, n: int) -> complex:
        return self.r ** abs(n) * self.base.fourier(n)

    def mean(self) -> float:
        return self.base.total_mass()


Density = Union[TrigDensity, GridDensity, PoissonDensity]


# --------------------------------------------------------------------------
# Spectral measures
# --------------------------------------------------------------------------


@dataclass(eq=False)
class SpectralMeasure:
    """Positive measure on the circle: point masses plus an a.c. density.

    Fourier coefficients are exact for atoms and trig-poly densities and
    quadrature-based for grid densities; they obey mu_hat(-n) = conj(mu_hat(n)).
    """

    atoms: tuple[tuple[float, float], ...] = ()
    density: Density | None = None
    _cache: dict[int, complex] = field(default_factory=dict, repr=False)

    def __post_init__(self) -> None:
        cleaned = []
        for angle, mass in self.atoms:
            if mass < 0:
                raise ValueError(f"atom mass must be non-negative, got {mass}")
            if mass > 0:
                cleaned.append((float(angle) % TWO_PI, float(mass)))
        self.atoms = tuple(cleaned)

    # -- constructors ------------------------------------------------------
    @staticmethod
    def lebesgue(mass: float = 1.0) -> "SpectralMeasure":
        return SpectralMeasure((), TrigDensity(TrigPoly.constant(mass)))

    @staticmethod
    def point_mass(theta: float = 0.0, mass: float = 1.0) -> "SpectralMeasure":
        return SpectralMeasure(((theta, mass),), None)

    @staticmethod
    def from_density(density: Density) -> "SpectralMeasure":
        return SpectralMeasure((), density)

    # -- queries -------------------------------------------------------------
    def fourier(self, n: int) -> complex:
        n = int(n)
        if n in self._cache:
            return self._cache[n]
        val = 0.0 + 0.0j
        for angle, mass in self.atoms:
            val += mass * np.exp(-1j * n * angle)
        if self.density is not None:
            val += self.density.fourier(n)
        val = complex(val)
        self._cache[n] = val
        return val

    def fourier_range(self, n_lo: int, n_hi: int) -> np.ndarray:
        return np.array([self.fourier(n) for n in range(n_lo, n_hi + 1)])

    def total_mass(self) -> float:
        mass = sum(m for _, m in self.atoms)
        if self.density is not None:
            mass += self.density.mean()
        return float(mass)

    def density_value(self, theta) -> np.ndarray:
        th = np.atleast_1d(np.asarray(theta, dtype=float))
        if self.density is None:
            return np.zeros_like(th)
        return np.asarray(self.density.value(th), dtype=float)

    def scaled(self, c: float) -> "SpectralMeasure":
        if c < 0:
            raise ValueError("measures scale by non-negative factors only")
        atoms = tuple((a, m * c) for a, m in self.atoms)
        dens = self.density
        if isinstance(dens, TrigDensity):
            dens = TrigDensity(dens.poly.scale(c))
        elif isinstance(dens, GridDensity):
            dens = GridDensity(dens.values * c)
        elif isinstance(dens, PoissonDensity):
            dens = PoissonDensity(dens.r, dens.base.scaled(c))
        return SpectralMeasure(atoms, dens)


def poisson_convolve(mu: SpectralMeasure, r: float) -> SpectralMeasure:
    """Poisson convolution P_r * mu: coefficients become r^|n| mu_hat(n).

    The result is purely absolutely continuous with a strictly positive
    real-analytic density whenever mu has positive mass.  Atom-free trig
    measures stay trig (the multiplier preserves finite support) and nested
    convolutions collapse by the semigroup law.
    """
    if not 0.0 <= r < 1.0:
        raise ValueError(f"Poisson radius must lie in [0, 1), got {r}")
    if not mu.atoms:
        if isinstance(mu.density, TrigDensity):
            poly = mu.density.poly.multiplier(lambda ns: r ** np.abs(ns))
            return SpectralMeasure((), TrigDensity(poly))
        if isinstance(mu.density, PoissonDensity):
            return SpectralMeasure((), PoissonDensity(r * mu.density.r, mu.density.base))
    return SpectralMeasure((), PoissonDensity(r, mu))


# --------------------------------------------------------------------------
# Szego geometric means
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class SzegoResult:
    """Geometric mean exp(int log w dm) with diagnostics."""

    value: float
    method: str
    floored_fraction: float = 0.0
    flagged: bool = False


def _szego_trig_exact(poly: TrigPoly) -> float:
    """Exact geometric mean of a non-negative trig polynomial.

    Writes w(theta) = e^{-iN theta} P(e^{i theta}) and applies Jensen's
    formula to the polynomial P, so the quadrature never sees the
    integrable log-singularities of boundary densities.
    """
    c = poly.trim()
    sup = c.support()
    if sup is None:
        return 0.0
    coeffs = c.coeffs
    lead = coeffs[-1]
    if len(coeffs) == 1:
        val = float(np.real(lead))
        return max(val, 0.0)
    roots = np.roots(coeffs[::-1])
    log_gm = math.log(abs(lead))
    for z in roots:
        az = abs(z)
        if az >= 1.0:
            log_gm += math.log(az)
    return math.exp(log_gm)


def szego_mean(density: Density | None, grid: int = DEFAULT_GRID) -> SzegoResult:
    """Geometric mean exp(int log density dm).

    Trig-poly densities are evaluated exactly through polynomial roots;
    grid densities use the rectangle rule on their own samples; smooth
    Poisson-convolved densities use a midpoint rule, spectrally accurate
    for those strictly positive integrands.  Values are clipped at
    ``LOG_FLOOR`` before taking logs; if more than 1% of nodes hit the
    floor the density is reported as vanishing (value 0, flagged).
    """
    if density is None:
        return SzegoResult(0.0, "absent")
    if isinstance(density, TrigDensity):
        return SzegoResult(_szego_trig_exact(density.poly), "fejer-riesz-jensen")
    if isinstance(density, GridDensity):
        vals = density.values
        method = "grid-quadrature"
    else:
        g = int(grid)
        theta = TWO_PI * (np.arange(g) + 0.5) / g
        vals = density.value(theta)
        method = "midpoint-quadrature"
    floored = np.count_nonzero(vals <= LOG_FLOOR)
    frac = floored / len(vals)
    if frac > FLOOR_FRACTION:
        return SzegoResult(0.0, method, frac, True)
    logs = np.log(np.clip(vals, LOG_FLOOR, None))
    return SzegoResult(float(np.exp(np.mean(logs))), method, frac, False)


@dataclass(frozen=True)
class PoissonLogBound:
    """Check of int log(P_r * mu) dm >= log(1 - r^2) for unit-mass mu."""

    lhs: float
    rhs: float
    holds: bool
    margin: float


def poisson_log_bound(
    mu: SpectralMeasure, r: float, grid: int = DEFAULT_GRID, tol: float = 1e-8
) -> PoissonLogBound:
    mass = mu.total_mass()
    if mass <= 0:
        raise ValueError("measure must have positive mass")
    prob = mu.scaled(1.0 / mass)
    smooth = poisson_convolve(prob, r)
    gm = szego_mean(smooth.density, grid=grid)
    lhs = math.log(gm.value) if gm.value > 0 else -math.inf
    rhs = math.log1p(-r * r)
    return PoissonLogBound(lhs, rhs, lhs >= rhs - tol, lhs - rhs)


# --------------------------------------------------------------------------
# Norms
# --------------------------------------------------------------------------


def sobolev_norm(f: TrigPoly, s: float) -> float:
    """(sum (1 + n^2)^s |f_hat(n)|^2)^(1/2)."""
    ns = np.arange(f.n_min, f.n_max + 1)
    return float(np.sqrt(np.sum((1.0 + ns.astype(float) ** 2) ** s * np.abs(f.coeffs) ** 2)))


def wiener_norm(f: TrigPoly) -> float:
    return f.l1()


def sup_norm(f: TrigPoly, grid: int = DEFAULT_GRID) -> float:
    """Max of |f| on a uniform grid (a lower bound on the true sup)."""
    theta = TWO_PI * np.arange(int(grid)) / int(grid)
    return float(np.max(np.abs(f.evaluate(theta))))


def l2_norm(f: TrigPoly, mu: SpectralMeasure) -> float:
    """(int |f|^2 dmu)^(1/2), exact for atoms plus trig densities."""
    total = 0.0 + 0.0j
    for j in range(f.n_min, f.n_max + 1):
        aj = f.coeff(j)
        if aj == 0:
            continue
        for k in range(f.n_min, f.n_max + 1):
            ak = f.coeff(k)
            if ak == 0:
                continue
            total += aj * np.conj(ak) * mu.fourier(k - j)
    val = float(np.real(total))
    return math.sqrt(max(val, 0.0))


def norm_bundle(
    f: TrigPoly,
    sobolev_orders: tuple[float, ...] = (),
    mu: SpectralMeasure | None = None,
    grid: int = DEFAULT_GRID,
) -> dict:
    """All requested norms of a trig polynomial in one pass."""
    out: dict = {
        "wiener": wiener_norm(f),
        "sup": sup_norm(f, grid=grid),
        "sobolev": {s: sobolev_norm(f, s) for s in sobolev_orders},
    }
    if mu is not None:
        out["l2"] = l2_norm(f, mu)
    return out


# --------------------------------------------------------------------------
# JSON schema for measures and trig polynomials
# --------------------------------------------------------------------------


def trig_poly_from_coeff_list(coeffs) -> TrigPoly:
    d: dict[int, complex] = {}
    for entry in coeffs:
        if len(entry) != 3:
            raise ValueError(f"coefficient entries must be [n, re, im], got {entry!r}")
        n, re, im = entry
        d[int(n)] = d.get(int(n), 0.0) + complex(float(re), float(im))
    return TrigPoly.from_dict(d)


def measure_from_dict(spec: dict) -> SpectralMeasure:
    """Parse the measure JSON schema.

    {"atoms": [{"theta": 0.0, "mass": 1.0}, ...],
     "density": {"kind": "trig", "coeffs": [[n, re, im], ...]}
              | {"kind": "grid", "values": [...]} | null}

    Angles are radians.  Negative masses and densities below -tol are
    rejected.
    """
    if not isinstance(spec, dict):
        raise ValueError("measure spec must be a JSON object")
    unknown = set(spec) - {"atoms", "density"}
    if unknown:
        raise ValueError(f"unknown measure fields: {sorted(unknown)}")
    atoms = []
    for a in spec.get("atoms") or []:
        try:
            atoms.append((float(a["theta"]), float(a["mass"])))
        except (KeyError, TypeError) as exc:
            raise ValueError(f"atom entries must be objects with theta and mass: {a!r}") from exc
        if atoms[-1][1] < 0:
            raise ValueError(f"atom mass must be non-negative, got {atoms[-1][1]}")
    density: Density | None = None
    dspec = spec.get("density")
    if dspec is not None:
        kind = dspec.get("kind")
        if kind == "trig":
            density = TrigDensity(trig_poly_from_coeff_list(dspec.get("coeffs", [])))
        elif kind == "grid":
            density = GridDensity(np.asarray(dspec.get("values", []), dtype=float))
        else:
            raise ValueError(f"unknown density kind {kind!r}")
    return SpectralMeasure(tuple(atoms), density)


def measure_to_dict(mu: SpectralMeasure) -> dict:
    """Serialize a measure back to the JSON schema (trig/grid densities only)."""
    out: dict = {"atoms": [{"theta": a, "mass": m} for a, m in mu.atoms], "density": None}
    dens = mu.density
    if isinstance(dens, TrigDensity):
        coeffs = [[n, re, im] for n, re, im in dens.poly.to_coeff_list()]
        out["density"] = {"kind": "trig", "coeffs": coeffs}
    elif isinstance(dens, GridDensity):
        out["density"] = {"kind": "grid", "values": [float(v) for v in dens.values]}
    elif dens is not None:
        raise ValueError("Poisson-convolved densities have no JSON form; serialize the base measure")
    return out
