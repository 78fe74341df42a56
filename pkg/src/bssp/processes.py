"""Gaussian simulation of branching-type stationary processes.

Two samplers: the explicit descendant-averaging construction (an i.i.d.
field averaged over the subtree below each vertex with geometric weights)
and a generic factorized sampler for any PSD kernel matrix.  Sampling is
reproducible across platforms: sample i draws from a Philox counter block
``i << 128`` keyed by the seed, one substream per sample.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

from .kernels import HermitianMatrix, PSD_TOL_REL, eigenvalues
from .trees import VERTEX_CAP, TreeTruncation, truncate

CI99_FACTOR = 2.576


def substream(seed: int, sample_index: int) -> np.random.Generator:
    """Counter-based generator for one sample; part of the external contract."""
    return np.random.Generator(np.random.Philox(key=seed, counter=sample_index << 128))


@dataclass(frozen=True)
class SimulationConfig:
    """Configuration of the descendant-averaging sampler."""

    q: int
    r: float
    depth: int
    tail: int
    n_samples: int
    seed: int

    def __post_init__(self) -> None:
        if not 0.0 < self.r < 1.0:
            raise ValueError(f"averaging ratio must lie in (0, 1), got {self.r}")
        if self.depth < 0 or self.tail < 0:
            raise ValueError("depth and tail cutoff must be non-negative")
        if self.n_samples < 1:
            raise ValueError("need at least one sample")

    def tail_variance_error(self) -> float:
        """Exact L2 mass omitted by truncating the averaging series at the tail."""
        return self.r ** (2 * (self.tail + 1)) / (1.0 - self.r**2)

    @staticmethod
    def choose_tail(r: float, target: float = 1e-6) -> int:
        """Smallest cutoff whose omitted variance is below the target."""
        k = 0
        while r ** (2 * (k + 1)) / (1.0 - r * r) >= target:
            k += 1
            if k > 10_000:
                raise ValueError("tail target unreachable for this ratio")
        return k

    def provenance(self) -> dict:
        return {
            "q": self.q,
            "r": self.r,
            "depth": self.depth,
            "tail": self.tail,
            "n_samples": self.n_samples,
            "seed": self.seed,
            "tail_variance_error": self.tail_variance_error(),
            "generator": "philox-counter-per-sample",
        }


@dataclass(eq=False)
class SampleBatch:
    """Monte-Carlo samples over a vertex set, columns in breadth-first order."""

    labels: tuple[str, ...]
    samples: np.ndarray  # (n_samples, M) float64
    provenance: dict = field(default_factory=dict)

    @property
    def n_samples(self) -> int:
        return self.samples.shape[0]

    def column(self, key: int | str) -> np.ndarray:
        if isinstance(key, str):
            key = self.labels.index(key)
        return self.samples[:, key]


def _averaging_weights(trunc: TreeTruncation, depth: int, tail: int, r: float) -> sparse.csr_matrix:
    # W[target, noise] = r^d q^{-d/2} whenever noise is a descendant of
    # target at distance d <= tail and target has depth <= depth.
    q = trunc.q
    weights = [r**d * q ** (-d / 2.0) for d in range(tail + 1)]
    target_count = (q ** (depth + 1) - 1) // (q - 1)
    rows: list[int] = []
    cols: list[int] = []
    vals: list[float] = []
    parents = trunc.parents
    for j in range(trunc.size):
        anc = j
        for d in range(tail + 1):
            if anc < target_count:
                rows.append(anc)
                cols.append(j)
                vals.append(weights[d])
            if anc == 0:
                break
            anc = parents[anc]
    return sparse.csr_matrix((vals, (rows, cols)), shape=(target_count, trunc.size))


def simulate_xr(cfg: SimulationConfig, cap: int = VERTEX_CAP) -> SampleBatch:
    """Sample the descendant-averaging process on vertices of depth <= cfg.depth.

    Each sample draws one i.i.d. standard normal per vertex down to depth
    depth + tail and forms the geometrically weighted sums; deterministic
    given the seed.
    """
    trunc = truncate(cfg.q, cfg.depth + cfg.tail, cap=cap)
    w = _averaging_weights(trunc, cfg.depth, cfg.tail, cfg.r)
    noise_dim = trunc.size
    target_count = w.shape[0]
    out = np.empty((cfg.n_samples, target_count))
    block = max(1, min(cfg.n_samples, int(4e6) // max(noise_dim, 1) or 1))
    for start in range(0, cfg.n_samples, block):
        stop = min(start + block, cfg.n_samples)
        g = np.empty((stop - start, noise_dim))
        for i in range(start, stop):
            g[i - start] = substream(cfg.seed, i).standard_normal(noise_dim)
        out[start:stop] = (w @ g.T).T
    labels = tuple(v.label() for v in trunc.vertices[:target_count])
    return SampleBatch(labels, out, cfg.provenance())


def sample_from_kernel(
    matrix: HermitianMatrix,
    n_samples: int,
    seed: int,
    psd_tol: float = PSD_TOL_REL,
) -> SampleBatch:
    """Centered real Gaussian samples with covariance given by the kernel.

    For complex Hermitian input the real part is used as the covariance.
    The factorization clips eigenvalues in [-tol, 0) to 0 because the key
    kernels are exactly singular on the boundary.
    """
    eigs = eigenvalues(matrix)
    tol = psd_tol * max(1.0, float(np.trace(matrix.data).real))
    if eigs[0] < -tol:
        raise ValueError(f"kernel is not positive semi-definite (min eigenvalue {eigs[0]:.3e})")
    cov = matrix.data.real.copy()
    cov = (cov + cov.T) / 2.0
    lam, vecs = np.linalg.eigh(cov)
    lam = np.clip(lam, 0.0, None)
    factor = vecs * np.sqrt(lam)[None, :]
    m = matrix.size
    out = np.empty((n_samples, m))
    block = max(1, min(n_samples, int(4e6) // max(m, 1) or 1))
    for start in range(0, n_samples, block):
        stop = min(start + block, n_samples)
        z = np.empty((stop - start, m))
        for i in range(start, stop):
            z[i - start] = substream(seed, i).standard_normal(m)
        out[start:stop] = z @ factor.T
    labels = matrix.labels or tuple(str(i) for i in range(m))
    return SampleBatch(labels, out, {"seed": seed, "n_samples": n_samples, "kernel_size": m,
                                     "generator": "philox-counter-per-sample"})


def theta_average(batch: SampleBatch, trunc: TreeTruncation) -> np.ndarray:
    """Per-sample level averages q^{-n/2} sum_{|v| = n} X_v for n = 0..depth.

    Batch columns must cover the truncation in breadth-first order.
    """
    if batch.samples.shape[1] < trunc.size:
        raise ValueError("batch does not cover the truncation")
    out = np.empty((batch.n_samples, trunc.depth + 1))
    for level in range(trunc.depth + 1):
        sl = trunc.level_slice(level)
        out[:, level] = batch.samples[:, sl].sum(axis=1) * trunc.q ** (-level / 2.0)
    return out


@dataclass(frozen=True)
class PairEstimate:
    """Unbiased covariance estimate with a 99% CLT half-width."""

    i: int
    j: int
    mean_i: float
    mean_j: float
    covariance: float
    ci99: float


def empirical_cov(samples: np.ndarray, pairs: list[tuple[int, int]]) -> list[PairEstimate]:
    """Sample covariances for the requested column pairs.

    The half-width is CI99_FACTOR * sd(centered products) / sqrt(n), the
    normal-approximation interval for the mean of the product variables.
    """
    x = np.asarray(samples, dtype=float)
    n = x.shape[0]
    if n < 2:
        raise ValueError("need at least two samples")
    out = []
    for i, j in pairs:
        xi = x[:, i]
        xj = x[:, j]
        mi = float(xi.mean())
        mj = float(xj.mean())
        prod = (xi - mi) * (xj - mj)
        cov = float(prod.sum() / (n - 1))
        half = CI99_FACTOR * float(prod.std(ddof=1)) / math.sqrt(n)
        out.append(PairEstimate(i, j, mi, mj, cov, half))
    return out


def batch_to_csv(batch: SampleBatch) -> str:
    """Samples as CSV, one row per sample, labelled header."""
    lines = [",".join(batch.labels)]
    for row in batch.samples:
        lines.append(",".join(repr(float(v)) for v in row))
    return "\n".join(lines) + "\n"
