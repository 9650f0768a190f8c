"""Monte Carlo side: the centered corner-mass process and its statistics.

One sampled matrix is summarized by a 2D prefix-sum grid of squared entry
moduli (`TraceField`), from which every corner trace T_{p,q} reads off in
O(1).  The centered process is

    W(s, t) = T_{floor(ns), floor(nt)} - floor(ns) floor(nt) / n

with right-continuous steps, vanishing on the axes and at (1,1).  Across
replicas we estimate cumulants with unbiased k-statistics, covariances of
grid values, fourth moments of rectangular increments, and the empirical
spectrum of the corner product, each with jackknife or plain standard
errors.  Reference objects for the limits (tied-down bridge covariance,
generalized Kesten-McKay spectral density) live here too.
"""
from __future__ import annotations

import concurrent.futures
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from .errors import DimensionError, InsufficientReplicasError, OrderViolationError
from .cumulants import limit_covariance
from .sampling import SeedSpec, haar_sample

GridPoint = tuple[float, float]


# ---------------------------------------------------------------------------
# Trace fields and the centered process
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TraceField:
    """Prefix sums of squared entry moduli; cell (p, q) holds T_{p,q}."""

    n: int
    cumulative: np.ndarray  # (n+1, n+1), row/col 0 are zero

    def corner(self, p: int, q: int) -> float:
        return float(self.cumulative[p, q])

    def process(self, s: float, t: float) -> float:
        return process_value(self, s, t)


def trace_field(m: np.ndarray) -> TraceField:
    """Build the prefix-sum grid for one sampled matrix.

    Above n = 1000 the accumulation runs in extended precision so that the
    unit-row identity T_{n,n} = n survives to 1e-10.
    """
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {m.shape}")
    n = m.shape[0]
    weights = np.abs(m) ** 2
    if n >= 1000:
        weights = weights.astype(np.longdouble)
    cum = np.zeros((n + 1, n + 1), dtype=weights.dtype)
    np.cumsum(weights, axis=0, out=weights)
    np.cumsum(weights, axis=1, out=weights)
    cum[1:, 1:] = weights
    return TraceField(n, cum.astype(np.float64))


def _floor_index(n: int, x: float) -> int:
    return min(n, max(0, math.floor(n * x)))


def process_value(f: TraceField, s: float, t: float) -> float:
    """Centered process W(s,t); right-continuous step interpolation."""
    p, q = _floor_index(f.n, s), _floor_index(f.n, t)
    return f.corner(p, q) - p * q / f.n


def block_increment(f: TraceField, s: float, s2: float, t: float, t2: float) -> float:
    """Increment of W around the block (s, s2] x (t, t2]."""
    if s > s2 or t > t2:
        raise OrderViolationError("block corners must satisfy s <= s2 and t <= t2")
    p1, p2 = _floor_index(f.n, s), _floor_index(f.n, s2)
    q1, q2 = _floor_index(f.n, t), _floor_index(f.n, t2)
    if p1 == p2 or q1 == q2:
        return 0.0
    raw = (f.corner(p2, q2) - f.corner(p2, q1) - f.corner(p1, q2) + f.corner(p1, q1))
    return raw - (p2 - p1) * (q2 - q1) / f.n


def uniform_lln_deviation(f: TraceField) -> float:
    """max over the full grid of |T_{p,q}/n - pq/n^2|."""
    n = f.n
    p = np.arange(n + 1)
    target = np.outer(p, p) / (n * n)
    return float(np.max(np.abs(f.cumulative / n - target)))


# ---------------------------------------------------------------------------
# Replica pipelines
# ---------------------------------------------------------------------------

def map_replicas(group: str, n: int, replicas: int, master_seed: int,
                 row_fn: Callable[[np.ndarray], np.ndarray],
                 workers: int = 1, start: int = 0) -> np.ndarray:
    """Apply row_fn to each sampled matrix; rows land at their replica index.

    Each replica draws from its own (master_seed, index) stream and writes
    only its own output row, so results are identical for any worker count.
    """
    if replicas < 1:
        raise InsufficientReplicasError("need at least one replica")

    def compute(idx: int) -> np.ndarray:
        return np.atleast_1d(row_fn(haar_sample(group, n, SeedSpec(master_seed, start + idx))))

    first = compute(0)
    out = np.empty((replicas, first.size), dtype=first.dtype)
    out[0] = first
    if workers > 1 and replicas > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as pool:
            for idx, row in zip(range(1, replicas),
                                pool.map(compute, range(1, replicas), chunksize=16)):
                out[idx] = row
    else:
        for idx in range(1, replicas):
            out[idx] = compute(idx)
    return out


def sample_process_values(group: str, n: int, grid_points: Sequence[GridPoint],
                          replicas: int, master_seed: int, workers: int = 1) -> np.ndarray:
    """Matrix of W values, one row per replica, one column per grid point."""
    pts = tuple(grid_points)

    def row(m: np.ndarray) -> np.ndarray:
        f = trace_field(m)
        return np.array([process_value(f, s, t) for s, t in pts])

    return map_replicas(group, n, replicas, master_seed, row, workers=workers)


@dataclass(frozen=True)
class ProcessSample:
    """One realization of the centered process on a grid."""

    grid_points: tuple[GridPoint, ...]
    values: np.ndarray


@dataclass
class ReplicaStats:
    """Replica-indexed grid values with derived sums and estimators.

    Merging concatenates in argument order, so a deterministic merge tree
    gives results independent of how replicas were partitioned.
    """

    grid_points: tuple[GridPoint, ...]
    values: np.ndarray  # (N, G)

    @property
    def count(self) -> int:
        return self.values.shape[0]

    def power_sums(self) -> np.ndarray:
        """Sums of powers 1..4 per grid point, shape (4, G)."""
        return np.stack([np.sum(self.values ** r, axis=0) for r in range(1, 5)])

    def cross_products(self) -> np.ndarray:
        return self.values.T @ self.values

    def merge(self, other: "ReplicaStats") -> "ReplicaStats":
        if self.grid_points != other.grid_points:
            raise DimensionError("cannot merge stats over different grids")
        return ReplicaStats(self.grid_points, np.concatenate([self.values, other.values]))

    def kstats(self, point_index: int) -> "KStats":
        return kstat_estimators(self.values[:, point_index])

    def covariance(self) -> tuple[np.ndarray, np.ndarray]:
        return covariance_mc(self.values)


# ---------------------------------------------------------------------------
# k-statistics and covariance with jackknife standard errors
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class KStats:
    """Unbiased cumulant estimates of orders 2..4 with jackknife SEs."""

    count: int
    k2: float
    k3: float
    k4: float
    se2: float
    se3: float
    se4: float


def _kstats_from_sums(count, s1, s2, s3, s4):
    m = count
    k2 = (m * s2 - s1**2) / (m * (m - 1))
    k3 = (2 * s1**3 - 3 * m * s1 * s2 + m**2 * s3) / (m * (m - 1) * (m - 2))
    k4 = (-6 * s1**4 + 12 * m * s1**2 * s2 - 3 * m * (m - 1) * s2**2
          - 4 * m * (m + 1) * s1 * s3 + m**2 * (m + 1) * s4) / (m * (m - 1) * (m - 2) * (m - 3))
    return k2, k3, k4


def kstat_estimators(values: Sequence[float]) -> KStats:
    """k-statistics k2..k4 of one sample, with leave-one-out jackknife SEs.

    Values are centered by the sample mean first; k-statistics of order >= 2
    are shift-invariant and the centering avoids cancellation in the raw
    power sums.
    """
    x = np.asarray(values, dtype=np.float64)
    n = x.size
    if n < 8:
        raise InsufficientReplicasError(f"k-statistics need at least 8 replicas, got {n}")
    x = x - x.mean()
    powers = np.stack([x, x**2, x**3, x**4])
    sums = powers.sum(axis=1)
    k2, k3, k4 = _kstats_from_sums(n, *sums)
    loo = sums[:, None] - powers  # (4, n): sums with replica i removed
    j2, j3, j4 = _kstats_from_sums(n - 1, loo[0], loo[1], loo[2], loo[3])
    ses = [
        math.sqrt(max(0.0, (n - 1) / n * np.sum((j - j.mean()) ** 2)))
        for j in (j2, j3, j4)
    ]
    return KStats(n, float(k2), float(k3), float(k4), *ses)


def covariance_mc(values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Empirical covariance across grid points with jackknife SEs.

    Returns (estimate, se), both (G, G).  Degenerate columns (identically
    zero boundary points) produce exact zero rows with zero SE.
    """
    a = np.asarray(values, dtype=np.float64)
    if a.ndim != 2:
        raise DimensionError("expected a replicas x grid-points matrix")
    n = a.shape[0]
    if n < 100:
        raise InsufficientReplicasError(f"covariance needs at least 100 replicas, got {n}")
    a = a - a.mean(axis=0)
    s_ab = a.T @ a
    est = s_ab / (n - 1)
    # leave-one-out covariance, vectorized over the removed replica
    outer_i = np.einsum("ia,ib->iab", a, a)
    sums = a.sum(axis=0)  # ~0 after centering, kept for exactness
    rest_mean = (sums[None, :] - a) / (n - 1)
    cross = np.einsum("ia,ib->iab", rest_mean, rest_mean)
    cov_i = (s_ab[None, :, :] - outer_i - (n - 1) * cross) / (n - 2)
    se = np.sqrt(np.maximum(0.0, (n - 1) / n * np.sum((cov_i - cov_i.mean(axis=0)) ** 2, axis=0)))
    return est, se


# ---------------------------------------------------------------------------
# Spectral limit: generalized Kesten-McKay / arcsine family
# ---------------------------------------------------------------------------

@lru_cache(maxsize=8)
def _leggauss(order: int):
    return np.polynomial.legendre.leggauss(order)


@dataclass(frozen=True)
class KestenMcKay:
    """Limiting spectral law of the corner product at aspect ratios (s, t).

    Support endpoints u- and u+ and normalizing constant are closed-form;
    masses and moments are computed by Gauss-Legendre quadrature after the
    substitution x = u- + (u+ - u-) sin^2(theta), which removes the
    square-root edge singularities.
    """

    s: float
    t: float
    u_minus: float
    u_plus: float
    const: float
    clean_regime: bool

    def pdf(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        out = np.zeros_like(x)
        inside = (x > self.u_minus) & (x < self.u_plus) & (x > 0) & (x < 1)
        xi = x[inside]
        out[inside] = (self.const
                       * np.sqrt((xi - self.u_minus) * (self.u_plus - xi))
                       / (2 * np.pi * xi * (1 - xi)))
        return out

    def _theta_of(self, x: float) -> float:
        width = self.u_plus - self.u_minus
        frac = min(1.0, max(0.0, (x - self.u_minus) / width))
        return math.asin(math.sqrt(frac))

    def _quad(self, a: float, b: float, moment: int, order: int = 240) -> float:
        lo = max(a, self.u_minus)
        hi = min(b, self.u_plus)
        if lo >= hi:
            return 0.0
        ta, tb = self._theta_of(lo), self._theta_of(hi)
        nodes, wts = _leggauss(order)
        theta = 0.5 * (tb - ta) * nodes + 0.5 * (ta + tb)
        width = self.u_plus - self.u_minus
        sin2 = np.sin(theta) ** 2
        x = self.u_minus + width * sin2
        dens = (self.const * width**2 * 2 * sin2 * np.cos(theta) ** 2
                / (2 * np.pi * x * (1 - x)))
        return float(0.5 * (tb - ta) * np.sum(wts * dens * x**moment))

    def mass(self, a: float, b: float) -> float:
        """Probability mass of [a, b]."""
        return self._quad(a, b, moment=0)

    def mean(self) -> float:
        return self._quad(self.u_minus, self.u_plus, moment=1)


def kesten_mckay(s: float, t: float) -> KestenMcKay:
    """Limit law parameters for aspect ratios s, t in the open unit square.

    The density form holds on the clean regime s <= min(t, 1-t); outside it
    the limit carries boundary atoms whose masses are not modeled here, and
    the returned object is flagged accordingly.
    """
    if not (0.0 < s < 1.0 and 0.0 < t < 1.0):
        raise ValueError("aspect ratios must lie strictly inside (0,1)")
    u_minus = (math.sqrt(s * (1 - t)) - math.sqrt((1 - s) * t)) ** 2
    u_plus = (math.sqrt(s * (1 - t)) + math.sqrt((1 - s) * t)) ** 2
    inv_const = 0.5 * (1 - math.sqrt(u_minus * u_plus)
                       - math.sqrt((1 - u_minus) * (1 - u_plus)))
    clean = s <= min(t, 1 - t) + 1e-12
    return KestenMcKay(s, t, u_minus, u_plus, 1.0 / inv_const, clean)


@dataclass(frozen=True)
class SpectralHistogram:
    """Pooled eigenvalue histogram of the corner product vs the limit law."""

    group: str
    n: int
    s: float
    t: float
    replicas: int
    bin_edges: np.ndarray
    empirical_mass: np.ndarray
    reference_mass: np.ndarray
    l1_distance: float
    mean_eigenvalue: float
    mean_se: float
    warnings: tuple[str, ...]
    metadata: dict = field(default_factory=dict)


def spectral_compare(n: int, s: float, t: float, replicas: int, master_seed: int,
                     group: str = "unitary", bins: int = 40,
                     workers: int = 1) -> SpectralHistogram:
    """Empirical spectrum of the p x q corner product against the limit law.

    Clean Jacobi regime wants floor(ns) <= floor(nt) and their sum <= n;
    violations only set a warning flag, the computation proceeds.
    """
    p, q = _floor_index(n, s), _floor_index(n, t)
    if p == 0 or q == 0:
        raise ValueError("corner must be nondegenerate: floor(ns), floor(nt) >= 1")
    warnings = []
    if not (p <= q and p + q <= n):
        warnings.append("jacobi-regime violated: expect boundary atoms")
    law = kesten_mckay(s, t)
    if not law.clean_regime:
        warnings.append("density regime s <= min(t, 1-t) violated")

    def row(m: np.ndarray) -> np.ndarray:
        v = m[:p, :q]
        return np.linalg.eigvalsh(v @ v.conj().T).real

    eigs = map_replicas(group, n, replicas, master_seed, row, workers=workers)
    edges = np.linspace(0.0, 1.0, bins + 1)
    pooled = np.clip(eigs.ravel(), 0.0, 1.0)
    counts, _ = np.histogram(pooled, bins=edges)
    emp_mass = counts / counts.sum()
    ref_mass = np.array([law.mass(a, b) for a, b in zip(edges[:-1], edges[1:])])
    means = eigs.mean(axis=1)
    return SpectralHistogram(
        group=group, n=n, s=s, t=t, replicas=replicas,
        bin_edges=edges, empirical_mass=emp_mass, reference_mass=ref_mass,
        l1_distance=float(np.abs(emp_mass - ref_mass).sum()),
        mean_eigenvalue=float(means.mean()),
        mean_se=float(means.std(ddof=1) / math.sqrt(replicas)),
        warnings=tuple(warnings),
        metadata={"bins": bins, "p": p, "q": q, "master_seed": master_seed},
    )


# ---------------------------------------------------------------------------
# Synthetic bridge reference and increment fourth moments
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BridgeSample:
    """Gaussian draws with the limiting tied-down bridge covariance."""

    grid_points: tuple[GridPoint, ...]
    beta: int
    values: np.ndarray  # (count, G)
    ridge_applied: bool

    def path(self, i: int) -> ProcessSample:
        return ProcessSample(self.grid_points, self.values[i])


def bridge_reference(grid_points: Sequence[GridPoint], beta: int, seed,
                     count: int = 1) -> BridgeSample:
    """Sample the limiting Gaussian field on a grid via a PSD square root.

    A numerically indefinite covariance (possible for near-degenerate grids)
    is regularized once by a 1e-12 ridge and reported on the result.
    """
    pts = tuple(grid_points)
    g = len(pts)
    cov = np.array([
        [limit_covariance(s1, t1, s2, t2, beta) for (s2, t2) in pts]
        for (s1, t1) in pts
    ])
    ridge_applied = False
    w, vecs = np.linalg.eigh(cov)
    tol = 1e-10 * max(1.0, float(np.max(np.abs(w))) if g else 1.0)
    if w.min() < -tol:
        ridge_applied = True
        w, vecs = np.linalg.eigh(cov + 1e-12 * np.eye(g))
        if w.min() < -tol:
            raise ArithmeticError("bridge covariance is not positive semidefinite")
    root = vecs * np.sqrt(np.clip(w, 0.0, None))
    rng = seed.rng() if isinstance(seed, SeedSpec) else SeedSpec(int(seed)).rng()
    z = rng.standard_normal((count, g))
    return BridgeSample(pts, beta, z @ root.T, ridge_applied)


@dataclass(frozen=True)
class IncrementFit:
    """Fourth moments of dyadic block increments and the fitted constant.

    For each dyadic block B the ratio E[W(B)^4] * n^4 / ((dp dq)^2) is
    recorded; c_max is the largest ratio over all blocks with nonempty
    integer sides.
    """

    group: str
    n: int
    replicas: int
    levels: tuple[int, ...]
    blocks: tuple[tuple[int, int, int, int, int], ...]  # (level, i, j, dp, dq)
    fourth_moments: np.ndarray
    fourth_moment_ses: np.ndarray
    ratios: np.ndarray
    c_max: float


def increment_fourth_moment_fit(group: str, n: int, replicas: int, master_seed: int,
                                levels: Sequence[int] = (1, 2, 3),
                                workers: int = 1) -> IncrementFit:
    """Estimate E[increment^4] over dyadic blocks and fit the scaling constant."""
    blocks: list[tuple[int, int, int, int, int]] = []
    for lev in levels:
        cells = 2 ** lev
        cuts = [_floor_index(n, i / cells) for i in range(cells + 1)]
        for i in range(cells):
            for j in range(cells):
                dp = cuts[i + 1] - cuts[i]
                dq = cuts[j + 1] - cuts[j]
                if dp > 0 and dq > 0:
                    blocks.append((lev, i, j, dp, dq))

    def row(m: np.ndarray) -> np.ndarray:
        f = trace_field(m)
        out = np.empty(len(blocks))
        for b, (lev, i, j, dp, dq) in enumerate(blocks):
            cells = 2 ** lev
            out[b] = block_increment(f, i / cells, (i + 1) / cells,
                                     j / cells, (j + 1) / cells)
        return out

    deltas = map_replicas(group, n, replicas, master_seed, row, workers=workers)
    fourth = (deltas ** 4).mean(axis=0)
    ses = (deltas ** 4).std(axis=0, ddof=1) / math.sqrt(replicas)
    scale = np.array([float(n) ** 4 / (dp * dp * dq * dq) for (_, _, _, dp, dq) in blocks])
    ratios = fourth * scale
    return IncrementFit(
        group=group, n=n, replicas=replicas, levels=tuple(levels),
        blocks=tuple(blocks), fourth_moments=fourth, fourth_moment_ses=ses,
        ratios=ratios, c_max=float(ratios.max()),
    )
