"""Reproducible Haar sampling on the unitary and orthogonal groups.

A sample is the QR factorization of an i.i.d. Gaussian (Ginibre) matrix with
the gauge freedom of QR removed: each column of Q is rescaled by the unit
phase (complex case) or sign (real case) of the corresponding diagonal entry
of R, which makes the triangular factor's diagonal positive.  Skipping that
correction does NOT give Haar measure.

Every replica is generated from its own Generator seeded by the pair
(master_seed, replica_index), so a replica's matrix is bitwise reproducible
regardless of how replicas are scheduled across workers.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError


@dataclass(frozen=True)
class SeedSpec:
    """Deterministic address of one replica's random stream."""

    master_seed: int
    replica_index: int = 0

    def __post_init__(self) -> None:
        if not 0 <= self.master_seed < 2**64:
            raise ValueError("master_seed must be an unsigned 64-bit integer")
        if self.replica_index < 0:
            raise ValueError("replica_index must be non-negative")

    def rng(self) -> np.random.Generator:
        return np.random.default_rng((self.master_seed, self.replica_index))


def _as_seed(seed) -> SeedSpec:
    return seed if isinstance(seed, SeedSpec) else SeedSpec(int(seed))


def _phase_fix_unitary(q: np.ndarray, r: np.ndarray) -> np.ndarray:
    d = np.diagonal(r, axis1=-2, axis2=-1)
    mod = np.abs(d)
    phase = np.where(mod > 0, d / np.where(mod > 0, mod, 1.0), 1.0)
    return q * phase[..., None, :]


def _sign_fix_orthogonal(q: np.ndarray, r: np.ndarray) -> np.ndarray:
    d = np.diagonal(r, axis1=-2, axis2=-1)
    sign = np.where(d >= 0, 1.0, -1.0)
    return q * sign[..., None, :]


def haar_unitary(n: int, seed) -> np.ndarray:
    """One Haar-distributed n x n unitary matrix for the given SeedSpec."""
    if n < 1:
        raise ValueError(f"matrix size must be positive, got {n}")
    rng = _as_seed(seed).rng()
    z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2.0)
    q, r = np.linalg.qr(z)
    return _phase_fix_unitary(q, r)


def haar_orthogonal(n: int, seed) -> np.ndarray:
    """One Haar-distributed n x n orthogonal matrix for the given SeedSpec."""
    if n < 1:
        raise ValueError(f"matrix size must be positive, got {n}")
    rng = _as_seed(seed).rng()
    z = rng.standard_normal((n, n))
    q, r = np.linalg.qr(z)
    return _sign_fix_orthogonal(q, r)


def haar_sample(group: str, n: int, seed) -> np.ndarray:
    if group == "unitary":
        return haar_unitary(n, seed)
    if group == "orthogonal":
        return haar_orthogonal(n, seed)
    raise ValueError(f"unknown group {group!r}")


def haar_batch(group: str, n: int, count: int, master_seed: int,
               start: int = 0, chunk: int = 4096) -> np.ndarray:
    """Stack of replicas start .. start+count-1, identical to per-replica calls.

    Gaussians are drawn per replica from the replica's own stream, then QR is
    applied to whole chunks at once; the chunk size does not affect values.
    Intended for mass statistics at small n where call overhead dominates.
    """
    if group not in ("unitary", "orthogonal"):
        raise ValueError(f"unknown group {group!r}")
    complex_case = group == "unitary"
    out = np.empty((count, n, n), dtype=np.complex128 if complex_case else np.float64)
    for lo in range(0, count, chunk):
        hi = min(lo + chunk, count)
        z = np.empty((hi - lo, n, n), dtype=out.dtype)
        for idx in range(lo, hi):
            rng = SeedSpec(master_seed, start + idx).rng()
            if complex_case:
                z[idx - lo] = (rng.standard_normal((n, n))
                               + 1j * rng.standard_normal((n, n))) / np.sqrt(2.0)
            else:
                z[idx - lo] = rng.standard_normal((n, n))
        q, r = np.linalg.qr(z)
        out[lo:hi] = _phase_fix_unitary(q, r) if complex_case else _sign_fix_orthogonal(q, r)
    return out


def orthonormality_residual(m: np.ndarray) -> float:
    """Max-norm of M M* - I; the sampling health check."""
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {m.shape}")
    gram = m @ m.conj().T
    return float(np.max(np.abs(gram - np.eye(m.shape[0]))))
