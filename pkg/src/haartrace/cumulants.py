"""Classical and relative cumulants of corner-trace statistics.

The statistic of interest is the squared-entry mass of a p x q corner of a
Haar matrix, written here as the trace of D U Dbar U* for coordinate
projectors D = I_p, Dbar = I_q.  Joint cumulants of several such traces have
an exact finite-n expansion as a double sum over permutation pairs of
relative Weingarten cumulants times products of per-cycle projector traces:

    unitary:     kappa_r = sum_{alpha, beta}  sum_A  C_{beta alpha^-1, A}
                           * Tr_alpha(Dbar) * Tr_{beta^-1}(D)
    orthogonal:  kappa_r = sum_{alpha, beta, eps}  2^(r - #alpha - #beta)
                           * sum_A  C_{sigma, A} * Tr_alpha(D) * Tr_{beta^-1}(Dbar)

where A ranges over partitions that coarsen the cycle partition of the
Weingarten argument while joining with those of alpha and beta to the full
one-block partition, and (orthogonal case) sigma is the double-coset
representative extracted from t_{alpha^-1} tau_eps t_beta.

Everything on this path is exact rational arithmetic.  An independent
moment-side oracle (`mixed_trace_moment` fed through `classical_cumulant`)
recomputes every cumulant from raw joint moments; the two routes are kept
separate so tests can compare them.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Sequence

from .combinatorics import (
    Permutation,
    SetPartition,
    all_permutations,
    cycle_partition,
    enumerate_partitions,
    join,
    mobius,
    one_partition,
    refines,
)
from .errors import DimensionError, OrderViolationError, SizeLimitError
from .weingarten import (
    MAX_ORTHOGONAL_ORDER,
    MAX_UNITARY_ORDER,
    sigma_of,
    t_of_perm,
    tau_of_signs,
    weingarten_orthogonal,
    weingarten_unitary,
)

GROUPS = ("unitary", "orthogonal")


@dataclass(frozen=True)
class ProjectorFamily:
    """Corner dimensions (p_a, q_a), one pair per trace factor, inside [0, n]."""

    n: int
    dims: tuple[tuple[int, int], ...]

    def __post_init__(self) -> None:
        for p, q in self.dims:
            if not (0 <= p <= self.n and 0 <= q <= self.n):
                raise DimensionError(f"corner dims ({p},{q}) outside [0,{self.n}]")

    @classmethod
    def uniform(cls, p: int, q: int, r: int, n: int) -> "ProjectorFamily":
        return cls(n, tuple((p, q) for _ in range(r)))

    @property
    def r(self) -> int:
        return len(self.dims)

    def row_dims(self) -> tuple[int, ...]:
        return tuple(p for p, _ in self.dims)

    def col_dims(self) -> tuple[int, ...]:
        return tuple(q for _, q in self.dims)


@dataclass(frozen=True)
class CumulantRequest:
    group: str
    order: int
    family: ProjectorFamily

    def __post_init__(self) -> None:
        if self.group not in GROUPS:
            raise ValueError(f"group must be one of {GROUPS}")
        if self.order != self.family.r:
            raise ValueError("order must match the number of trace factors")


MomentFunctional = Callable[[SetPartition], Fraction]


def projector_trace(alpha: Permutation, dims: Sequence[int]) -> int:
    """Trace of the cycle products of nested coordinate projectors.

    A cycle of projectors I_{d_1} ... I_{d_m} multiplies to the projector of
    the smallest rank, so the trace over each cycle is the cycle minimum.
    """
    if len(dims) != alpha.size:
        raise DimensionError("one dimension per ground element required")
    out = 1
    for cycle in alpha.cycles():
        out *= min(dims[a - 1] for a in cycle)
    return out


def diagonal_trace(alpha: Permutation, diagonals: Sequence[Sequence]) -> Fraction:
    """Tr_alpha for diagonal matrices, given as per-factor diagonal vectors.

    Generalizes projector_trace: with 0/1 diagonals of the first d entries it
    reduces to the per-cycle minimum rule.
    """
    if len(diagonals) != alpha.size:
        raise DimensionError("one diagonal per ground element required")
    n = len(diagonals[0])
    out = Fraction(1)
    for cycle in alpha.cycles():
        s = Fraction(0)
        for x in range(n):
            term = Fraction(1)
            for a in cycle:
                term *= diagonals[a - 1][x]
            s += term
        out *= s
    return out


def classical_cumulant(moments: MomentFunctional, r: int) -> Fraction:
    """Mobius-weighted alternating sum of the moment functional over P(r)."""
    one_r = one_partition(r)
    return sum(
        (mobius(c, one_r) * moments(c) for c in enumerate_partitions(r)),
        Fraction(0),
    )


# ---------------------------------------------------------------------------
# Relative cumulants of the Weingarten functions
# ---------------------------------------------------------------------------

def _restriction_type(pi: Permutation, block: Sequence[int]) -> tuple[int, ...]:
    """Cycle type of pi restricted to a pi-invariant block."""
    inside = set(block)
    return tuple(sorted((len(c) for c in pi.cycles() if c[0] in inside), reverse=True))


@lru_cache(maxsize=None)
def _cycle_set_cumulant(group: str, n: int, lengths: tuple[int, ...]) -> Fraction:
    """Combinatorial cumulant of Weingarten values over a multiset of cycles.

    Sums over set partitions of the given cycles; each grouping contributes
    the Mobius factor (-1)^(s-1)(s-1)! times the product of Weingarten values
    of the merged cycle types.
    """
    wg = weingarten_unitary if group == "unitary" else weingarten_orthogonal
    m = len(lengths)
    total = Fraction(0)
    for part in enumerate_partitions(m):
        # Mobius factor of the one-block coarsening of this grouping
        coeff = 1
        for i in range(1, part.num_blocks):
            coeff *= -i
        term = Fraction(coeff)
        for block in part.blocks:
            merged = tuple(sorted((lengths[a - 1] for a in block), reverse=True))
            term *= wg(n, merged)
        total += term
    return total


def _relative_cumulant(group: str, pi: Permutation, a: SetPartition, n: int) -> Fraction:
    if a.ground_size != pi.size:
        raise DimensionError("partition and permutation sizes differ")
    if not refines(cycle_partition(pi), a):
        raise OrderViolationError("partition must coarsen the cycle partition")
    out = Fraction(1)
    for block in a.blocks:
        lengths = _restriction_type(pi, block)
        out *= _cycle_set_cumulant(group, n, lengths)
    return out


def relative_cumulant_unitary(pi: Permutation, a: SetPartition, n: int) -> Fraction:
    """Relative cumulant C_{pi, A} of the unitary Weingarten function.

    Defined by the Mobius inversion of block products of Weingarten values
    along the interval [0_pi, A]; it factorizes over the blocks of A.
    """
    if pi.size > MAX_UNITARY_ORDER:
        raise SizeLimitError(f"unitary relative cumulants limited to r <= {MAX_UNITARY_ORDER}")
    return _relative_cumulant("unitary", pi, a, n)


def relative_cumulant_orthogonal(sigma: Permutation, a: SetPartition, n: int) -> Fraction:
    """Relative cumulant of the orthogonal Weingarten function."""
    if sigma.size > MAX_ORTHOGONAL_ORDER:
        raise SizeLimitError(f"orthogonal relative cumulants limited to r <= {MAX_ORTHOGONAL_ORDER}")
    return _relative_cumulant("orthogonal", sigma, a, n)


# ---------------------------------------------------------------------------
# Trace cumulants: the closed double-sum route
# ---------------------------------------------------------------------------

def _admissible_sum(group: str, n: int, pi: Permutation,
                    alpha: Permutation, beta: Permutation) -> Fraction:
    """Sum of relative cumulants C_{pi, A} over admissible partitions A.

    A must coarsen the cycle partition of pi and join with the cycle
    partitions of alpha and beta to the one-block partition.
    """
    r = pi.size
    pi_part = cycle_partition(pi)
    ab = join(cycle_partition(alpha), cycle_partition(beta))
    full = one_partition(r)
    total = Fraction(0)
    for a in enumerate_partitions(r):
        if refines(pi_part, a) and join(a, ab) == full:
            total += _relative_cumulant(group, pi, a, n)
    return total


@lru_cache(maxsize=None)
def _unitary_coeffs(n: int, r: int) -> dict[tuple, Fraction]:
    """Dims-independent coefficient of Tr_alpha(col) Tr_beta(row) per pair."""
    coeffs: dict[tuple, Fraction] = {}
    for alpha in all_permutations(r):
        alpha_inv = alpha.inverse()
        for beta in all_permutations(r):
            pi = beta * alpha_inv
            coeffs[(alpha.images, beta.images)] = _admissible_sum("unitary", n, pi, alpha, beta)
    return coeffs


@lru_cache(maxsize=None)
def _sigma_triple(r: int, alpha_images: tuple, beta_images: tuple, eps: tuple) -> Permutation:
    alpha = Permutation(alpha_images)
    beta = Permutation(beta_images)
    big = t_of_perm(alpha.inverse()) * tau_of_signs(eps) * t_of_perm(beta)
    return sigma_of(big)


@lru_cache(maxsize=None)
def _orthogonal_coeffs(n: int, r: int) -> dict[tuple, Fraction]:
    coeffs: dict[tuple, Fraction] = {}
    for alpha in all_permutations(r):
        for beta in all_permutations(r):
            lam = Fraction(2 ** r, 2 ** (alpha.num_cycles + beta.num_cycles))
            total = Fraction(0)
            for eps in itertools.product((1, -1), repeat=r):
                sigma = _sigma_triple(r, alpha.images, beta.images, eps)
                total += _admissible_sum("orthogonal", n, sigma, alpha, beta)
            coeffs[(alpha.images, beta.images)] = lam * total
    return coeffs


def trace_cumulant_unitary(req: CumulantRequest) -> Fraction:
    """Exact order-r joint cumulant of corner traces of a Haar unitary."""
    if req.group != "unitary":
        raise ValueError("request group must be 'unitary'")
    r = req.order
    if not 1 <= r <= MAX_UNITARY_ORDER:
        raise SizeLimitError(f"unitary trace cumulants limited to r <= {MAX_UNITARY_ORDER}")
    rows, cols = req.family.row_dims(), req.family.col_dims()
    coeffs = _unitary_coeffs(req.family.n, r)
    total = Fraction(0)
    for alpha in all_permutations(r):
        tr_cols = projector_trace(alpha, cols)
        if tr_cols == 0:
            continue
        for beta in all_permutations(r):
            c = coeffs[(alpha.images, beta.images)]
            if c:
                total += c * tr_cols * projector_trace(beta, rows)
    return total


def trace_cumulant_orthogonal(req: CumulantRequest) -> Fraction:
    """Exact order-r joint cumulant of corner traces of a Haar orthogonal."""
    if req.group != "orthogonal":
        raise ValueError("request group must be 'orthogonal'")
    r = req.order
    if not 1 <= r <= MAX_ORTHOGONAL_ORDER:
        raise SizeLimitError(f"orthogonal trace cumulants limited to r <= {MAX_ORTHOGONAL_ORDER}")
    rows, cols = req.family.row_dims(), req.family.col_dims()
    coeffs = _orthogonal_coeffs(req.family.n, r)
    total = Fraction(0)
    for alpha in all_permutations(r):
        tr_rows = projector_trace(alpha, rows)
        if tr_rows == 0:
            continue
        for beta in all_permutations(r):
            c = coeffs[(alpha.images, beta.images)]
            if c:
                total += c * tr_rows * projector_trace(beta, cols)
    return total


def trace_cumulant(req: CumulantRequest) -> Fraction:
    return trace_cumulant_unitary(req) if req.group == "unitary" else trace_cumulant_orthogonal(req)


def trace_cumulant_diagonal(group: str, row_diags: Sequence[Sequence],
                            col_diags: Sequence[Sequence], n: int) -> Fraction:
    """Trace cumulant for general diagonal matrices in place of projectors.

    Same double sum as the projector route with Tr_alpha evaluated on raw
    diagonals; used to exercise multilinearity beyond nested corners.
    """
    r = len(row_diags)
    if len(col_diags) != r:
        raise DimensionError("need matching row and column diagonal families")
    if group == "unitary":
        if r > MAX_UNITARY_ORDER:
            raise SizeLimitError("diagonal trace cumulants limited to r <= 4 (unitary)")
        coeffs = _unitary_coeffs(n, r)
        first, second = col_diags, row_diags
    else:
        if r > MAX_ORTHOGONAL_ORDER:
            raise SizeLimitError("diagonal trace cumulants limited to r <= 3 (orthogonal)")
        coeffs = _orthogonal_coeffs(n, r)
        first, second = row_diags, col_diags
    total = Fraction(0)
    for alpha in all_permutations(r):
        tr1 = diagonal_trace(alpha, first)
        if tr1 == 0:
            continue
        for beta in all_permutations(r):
            c = coeffs[(alpha.images, beta.images)]
            if c:
                total += c * tr1 * diagonal_trace(beta, second)
    return total


# ---------------------------------------------------------------------------
# Independent oracle: joint moments of corner traces
# ---------------------------------------------------------------------------

@lru_cache(maxsize=None)
def _block_moment(group: str, n: int, pq: tuple[tuple[int, int], ...]) -> Fraction:
    """Exact E(prod_a T_{p_a, q_a}) for one block of trace factors.

    Expands the product of corner sums through the group integration
    formula; the index-count of each delta pattern is a product of per-cycle
    corner minima.
    """
    m = len(pq)
    rows = tuple(p for p, _ in pq)
    cols = tuple(q for _, q in pq)
    total = Fraction(0)
    if group == "unitary":
        for alpha in all_permutations(m):
            tr_rows = projector_trace(alpha, rows)
            if tr_rows == 0:
                continue
            alpha_inv = alpha.inverse()
            for beta in all_permutations(m):
                w = weingarten_unitary(n, (beta * alpha_inv).cycle_type())
                total += w * tr_rows * projector_trace(beta, cols)
    else:
        for alpha in all_permutations(m):
            tr_rows = projector_trace(alpha, rows)
            if tr_rows == 0:
                continue
            for beta in all_permutations(m):
                lam = Fraction(2 ** m, 2 ** (alpha.num_cycles + beta.num_cycles))
                tr = lam * tr_rows * projector_trace(beta, cols)
                if tr == 0:
                    continue
                for eps in itertools.product((1, -1), repeat=m):
                    sigma = _sigma_triple(m, alpha.images, beta.images, eps)
                    total += weingarten_orthogonal(n, sigma.cycle_type()) * tr
    return total


def mixed_trace_moment(group: str, c: SetPartition, family: ProjectorFamily) -> Fraction:
    """E_C of the corner traces: product of exact block moments.

    This is the moment-side oracle; feeding it through `classical_cumulant`
    recomputes kappa_r without relative cumulants or the admissibility
    filter.
    """
    if group not in GROUPS:
        raise ValueError(f"group must be one of {GROUPS}")
    limit = MAX_UNITARY_ORDER if group == "unitary" else MAX_ORTHOGONAL_ORDER
    if family.r > limit or c.ground_size != family.r:
        raise SizeLimitError(f"mixed moments limited to r <= {limit} for {group}")
    out = Fraction(1)
    for block in c.blocks:
        key = tuple(sorted(family.dims[a - 1] for a in block))
        out *= _block_moment(group, family.n, key)
    return out


def cumulant_via_moments(group: str, family: ProjectorFamily) -> Fraction:
    """kappa_r recomputed from raw moments (the independent verification route)."""
    return classical_cumulant(lambda c: mixed_trace_moment(group, c, family), family.r)


# ---------------------------------------------------------------------------
# Closed forms and limits
# ---------------------------------------------------------------------------

def _check_dims(n: int, *dims: int) -> None:
    if n < 2:
        raise DimensionError(f"matrix size must be at least 2, got {n}")
    for d in dims:
        if not 1 <= d <= n:
            raise DimensionError(f"corner dimension {d} outside [1,{n}]")


def variance_closed(p: int, q: int, n: int) -> Fraction:
    """Exact variance of the unitary corner trace T_{p,q}."""
    _check_dims(n, p, q)
    return Fraction(p * q * (n * n - n * (p + q) + p * q), n * n * (n * n - 1))


def covariance_closed(p: int, q: int, p2: int, q2: int, n: int) -> Fraction:
    """Exact covariance of unitary corner traces T_{p,q} and T_{p2,q2}."""
    _check_dims(n, p, q, p2, q2)
    d = n * n - 1
    return (
        Fraction(min(p, p2) * min(q, q2), d)
        - Fraction(min(p, p2) * q * q2, n * d)
        - Fraction(p * p2 * min(q, q2), n * d)
        + Fraction(p * p2 * q * q2, n * n * d)
    )


def variance_closed_orthogonal(p: int, q: int, n: int) -> Fraction:
    """Exact variance of the orthogonal corner trace T_{p,q}."""
    _check_dims(n, p, q)
    return Fraction(2 * p * q * (n * n - n * (p + q) + p * q),
                    n * n * (n + 2) * (n - 1))


def limit_covariance(s: float, t: float, s2: float, t2: float, beta: int) -> float:
    """Covariance of the limiting tied-down bridge, scaled by 2/beta."""
    if beta not in (1, 2):
        raise ValueError("beta must be 1 (orthogonal) or 2 (unitary)")
    for x in (s, t, s2, t2):
        if not 0.0 <= x <= 1.0:
            raise ValueError("bridge coordinates must lie in [0,1]")
    return (2.0 / beta) * (min(s, s2) - s * s2) * (min(t, t2) - t * t2)


def _beta_central_fourth(a: int, b: int) -> Fraction:
    """Exact fourth central moment of a Beta(a, b) variable."""
    raw = [Fraction(1)]
    for k in range(1, 5):
        raw.append(raw[-1] * Fraction(a + k - 1, a + b + k - 1))
    mu = raw[1]
    return raw[4] - 4 * mu * raw[3] + 6 * mu**2 * raw[2] - 3 * mu**4


def fourth_central_moment(p: int, q: int, n: int, group: str = "unitary") -> Fraction:
    """Exact E (T_{p,q} - E T_{p,q})^4 = kappa_4 + 3 kappa_2^2 (unitary only).

    For n >= 4 this goes through the order-4 trace cumulant.  Below that the
    order-4 Gram matrix is singular, so the remaining cases reduce exactly
    instead: a full-row or full-column corner is deterministic; a single-row
    corner is a partial sum of a flat Dirichlet vector, hence Beta(q, n-q);
    and p = n-1 (or q = n-1) complements to the single-row case because
    T_{p,q} + T_{p,n-q} is the constant p.

    The orthogonal fourth cumulant needs order-4 orthogonal tables that are
    deliberately out of the exact path; estimate it by Monte Carlo instead.
    """
    if group != "unitary":
        raise SizeLimitError("exact fourth central moment is unitary-only; use the MC estimators")
    _check_dims(n, p, q)
    if p == n or q == n:
        return Fraction(0)
    if n >= 4:
        kappa4 = trace_cumulant_unitary(
            CumulantRequest("unitary", 4, ProjectorFamily.uniform(p, q, 4, n))
        )
        kappa2 = variance_closed(p, q, n)
        return kappa4 + 3 * kappa2 * kappa2
    if p == n - 1 and p != 1:
        p = n - p  # row complement: T_{p,q} is q minus a copy of T_{n-p,q}
    if q == n - 1 and q != 1:
        q = n - q  # column complement, same argument transposed
    if p == 1:
        return _beta_central_fourth(q, n - q)
    if q == 1:
        return _beta_central_fourth(p, n - p)
    raise SizeLimitError(f"no exact route for ({p},{q}) at n={n} without order-4 tables")
