import math

import numpy as np
import pytest

from haartrace.cumulants import variance_closed, variance_closed_orthogonal
from haartrace.empirics import (
    ReplicaStats,
    block_increment,
    bridge_reference,
    covariance_mc,
    increment_fourth_moment_fit,
    kesten_mckay,
    kstat_estimators,
    process_value,
    sample_process_values,
    spectral_compare,
    trace_field,
    uniform_lln_deviation,
)
from haartrace.errors import (
    DimensionError,
    InsufficientReplicasError,
    OrderViolationError,
)
from haartrace.sampling import SeedSpec, haar_orthogonal, haar_unitary


# ---------------------------------------------------------------------------
# trace fields and the centered process
# ---------------------------------------------------------------------------

def test_trace_field_identity_matrix():
    f = trace_field(np.eye(6))
    for p in range(7):
        for q in range(7):
            assert f.corner(p, q) == min(p, q)


def test_trace_field_rotation():
    th = 0.37
    rot = np.array([[math.cos(th), -math.sin(th)], [math.sin(th), math.cos(th)]])
    f = trace_field(rot)
    assert f.corner(1, 1) == pytest.approx(math.cos(th) ** 2, abs=1e-15)
    assert f.corner(2, 2) == pytest.approx(2.0, abs=1e-12)


def test_trace_field_haar_unit_rows():
    for group_sample in (haar_unitary(80, SeedSpec(5)), haar_orthogonal(80, SeedSpec(5))):
        f = trace_field(group_sample)
        assert abs(f.corner(80, 80) - 80) < 1e-10
        assert np.all(np.diff(f.cumulative, axis=0) >= -1e-14)
        assert np.all(np.diff(f.cumulative, axis=1) >= -1e-14)


def test_trace_field_requires_square():
    with pytest.raises(DimensionError):
        trace_field(np.ones((3, 4)))


def test_process_value_boundaries():
    f = trace_field(haar_unitary(40, SeedSpec(8)))
    assert process_value(f, 0.0, 0.63) == 0.0
    assert process_value(f, 0.63, 0.0) == 0.0
    assert abs(process_value(f, 1.0, 1.0)) < 1e-10


def test_process_value_floor_convention():
    f = trace_field(haar_unitary(10, SeedSpec(9)))
    # right-continuous steps: s in [3/10, 4/10) uses p = 3
    assert process_value(f, 0.3, 0.5) == process_value(f, 0.39, 0.5)
    assert process_value(f, 0.3, 0.5) != process_value(f, 0.4, 0.5)


def test_block_increment_examples():
    f = trace_field(haar_unitary(30, SeedSpec(10)))
    assert block_increment(f, 0.4, 0.4, 0.1, 0.9) == 0.0
    assert abs(block_increment(f, 0.0, 1.0, 0.0, 1.0)) < 1e-10
    # additivity: stacked blocks sum to the union block
    top = block_increment(f, 0.2, 0.5, 0.1, 0.4)
    bottom = block_increment(f, 0.5, 0.8, 0.1, 0.4)
    union = block_increment(f, 0.2, 0.8, 0.1, 0.4)
    assert top + bottom == pytest.approx(union, abs=1e-12)
    with pytest.raises(OrderViolationError):
        block_increment(f, 0.6, 0.4, 0.1, 0.2)


def test_uniform_lln_decreases_on_matched_seeds():
    devs = [uniform_lln_deviation(trace_field(haar_unitary(n, SeedSpec(777, 0))))
            for n in (50, 100, 200, 400)]
    assert devs[0] > devs[1] > devs[2] > devs[3]
    assert devs[-1] < 0.06


def test_kappa3_of_process_decays_with_n():
    # the skewness of W(s,t) dies as n grows; at (1/2,1/2) it is exactly 0
    # for even n (complement symmetry), so probe an asymmetric grid point
    from fractions import Fraction
    from haartrace.cumulants import CumulantRequest, ProjectorFamily, trace_cumulant
    values = []
    for n in (50, 100, 200, 400):
        p, q = int(0.3 * n), int(0.45 * n)
        fam = ProjectorFamily.uniform(p, q, 3, n)
        values.append(abs(trace_cumulant(CumulantRequest("unitary", 3, fam))))
    assert values[0] > values[1] > values[2] > values[3] > 0
    center = ProjectorFamily.uniform(200, 200, 3, 400)
    assert trace_cumulant(CumulantRequest("unitary", 3, center)) == Fraction(0)


# ---------------------------------------------------------------------------
# k-statistics
# ---------------------------------------------------------------------------

def test_kstats_constant_sample():
    ks = kstat_estimators(np.full(64, 2.5))
    assert ks.k2 == ks.k3 == ks.k4 == 0.0
    assert ks.se2 == ks.se3 == ks.se4 == 0.0


def test_kstats_requires_replicas():
    with pytest.raises(InsufficientReplicasError):
        kstat_estimators(np.arange(7))


def test_kstats_gaussian_sample():
    rng = np.random.default_rng(1)
    ks = kstat_estimators(rng.standard_normal(100_000))
    assert abs(ks.k2 - 1.0) < 4 * ks.se2
    assert abs(ks.k3) < 4 * ks.se3
    assert abs(ks.k4) < 4 * ks.se4


def test_kstats_exponential_sample():
    rng = np.random.default_rng(2)
    ks = kstat_estimators(rng.exponential(size=100_000))
    assert abs(ks.k2 - 1.0) < 4 * ks.se2
    assert abs(ks.k3 - 2.0) < 4 * ks.se3
    assert abs(ks.k4 - 6.0) < 4 * ks.se4


def test_kstats_unbiasedness_small_sample():
    # average k2, k3 over many tiny exponential samples ~ true cumulants
    rng = np.random.default_rng(3)
    samples = rng.exponential(size=(20_000, 10))
    k2s = np.array([kstat_estimators(s).k2 for s in samples[:2000]])
    assert abs(k2s.mean() - 1.0) < 4 * k2s.std(ddof=1) / math.sqrt(k2s.size)


# ---------------------------------------------------------------------------
# covariance
# ---------------------------------------------------------------------------

def test_covariance_mc_known_covariance():
    rng = np.random.default_rng(4)
    target = np.array([[1.0, 0.3], [0.3, 0.5]])
    vals = rng.standard_normal((30_000, 2)) @ np.linalg.cholesky(target).T
    est, se = covariance_mc(vals)
    assert np.all(np.abs(est - target) < 4 * se)
    assert np.all(se > 0)


def test_covariance_mc_degenerate_column():
    rng = np.random.default_rng(5)
    vals = np.hstack([rng.standard_normal((500, 1)), np.zeros((500, 1))])
    est, se = covariance_mc(vals)
    assert est[0, 1] == est[1, 1] == 0.0
    assert se[0, 1] == se[1, 1] == 0.0


def test_covariance_mc_guards():
    with pytest.raises(InsufficientReplicasError):
        covariance_mc(np.zeros((99, 2)))
    with pytest.raises(DimensionError):
        covariance_mc(np.zeros(100))


# ---------------------------------------------------------------------------
# process sampling pipelines
# ---------------------------------------------------------------------------

def test_sample_process_values_deterministic_across_workers():
    pts = [(0.25, 0.5), (0.5, 0.5), (0.0, 0.7)]
    a = sample_process_values("unitary", 24, pts, 60, 44, workers=1)
    b = sample_process_values("unitary", 24, pts, 60, 44, workers=3)
    assert np.array_equal(a, b)
    assert np.all(a[:, 2] == 0.0)  # boundary point


def test_process_variance_matches_exact_small_n():
    vals = sample_process_values("unitary", 64, [(0.5, 0.5)], 1500, 4040)
    ks = kstat_estimators(vals[:, 0])
    assert abs(ks.k2 - float(variance_closed(32, 32, 64))) < 4 * ks.se2
    vals_o = sample_process_values("orthogonal", 64, [(0.5, 0.5)], 1500, 4041)
    ks_o = kstat_estimators(vals_o[:, 0])
    assert abs(ks_o.k2 - float(variance_closed_orthogonal(32, 32, 64))) < 4 * ks_o.se2


def test_exchange_symmetry_of_corner_laws():
    # k2 for (p,q) on U matches k2 for (q,p) on the transposed ensemble
    pts_a = [(0.25, 0.75)]
    pts_b = [(0.75, 0.25)]
    a = sample_process_values("unitary", 48, pts_a, 1200, 91)
    b = sample_process_values("unitary", 48, pts_b, 1200, 92)
    ka, kb = kstat_estimators(a[:, 0]), kstat_estimators(b[:, 0])
    assert abs(ka.k2 - kb.k2) < 3 * math.hypot(ka.se2, kb.se2)


def test_replica_stats_merge_and_invariants():
    pts = ((0.5, 0.5), (0.25, 0.75))
    vals = sample_process_values("unitary", 16, pts, 32, 7)
    stats_all = ReplicaStats(pts, vals)
    merged = ReplicaStats(pts, vals[:20]).merge(ReplicaStats(pts, vals[20:]))
    assert np.array_equal(stats_all.values, merged.values)
    assert np.allclose(stats_all.power_sums(), merged.power_sums())
    ks = stats_all.kstats(0)
    assert ks.se2 > 0 and ks.se3 > 0 and ks.se4 > 0  # N >= 8: positive SEs
    with pytest.raises(DimensionError):
        stats_all.merge(ReplicaStats(((0.1, 0.1),), vals[:, :1]))


# ---------------------------------------------------------------------------
# Kesten-McKay law
# ---------------------------------------------------------------------------

def test_kesten_mckay_arcsine_case():
    km = kesten_mckay(0.5, 0.5)
    assert km.u_minus == pytest.approx(0.0, abs=1e-15)
    assert km.u_plus == pytest.approx(1.0, abs=1e-15)
    assert km.const == pytest.approx(2.0, abs=1e-12)
    xs = np.array([0.1, 0.33, 0.5, 0.9])
    assert np.allclose(km.pdf(xs), 1 / (np.pi * np.sqrt(xs * (1 - xs))), atol=1e-12)
    assert km.mass(0.0, 1.0) == pytest.approx(1.0, abs=1e-8)
    assert km.mean() == pytest.approx(0.5, abs=1e-8)


def test_kesten_mckay_normalization_and_mean():
    km = kesten_mckay(0.3, 0.5)
    assert km.clean_regime
    assert km.u_minus == pytest.approx((math.sqrt(0.15) - math.sqrt(0.35)) ** 2, abs=1e-14)
    assert km.u_plus == pytest.approx((math.sqrt(0.15) + math.sqrt(0.35)) ** 2, abs=1e-14)
    assert km.mass(0.0, 1.0) == pytest.approx(1.0, abs=1e-8)
    assert km.mean() == pytest.approx(0.5, abs=1e-8)  # mean equals t
    # masses add up over a partition of the support
    assert km.mass(0, 0.3) + km.mass(0.3, 0.7) + km.mass(0.7, 1.0) == \
        pytest.approx(1.0, abs=1e-8)


def test_kesten_mckay_regime_flag_and_errors():
    assert not kesten_mckay(0.6, 0.5).clean_regime
    with pytest.raises(ValueError):
        kesten_mckay(0.0, 0.5)
    with pytest.raises(ValueError):
        kesten_mckay(0.5, 1.0)


def test_pdf_zero_outside_support():
    km = kesten_mckay(0.3, 0.5)
    assert km.pdf(np.array([0.0, km.u_minus / 2, km.u_plus + 0.01, 1.0])).tolist() == \
        [0.0, 0.0, 0.0, 0.0]


# ---------------------------------------------------------------------------
# spectral comparison
# ---------------------------------------------------------------------------

def test_spectral_compare_smoke():
    res = spectral_compare(60, 0.3, 0.5, 12, master_seed=13)
    assert res.warnings == ()
    assert res.empirical_mass.sum() == pytest.approx(1.0, abs=1e-12)
    assert res.reference_mass.sum() == pytest.approx(1.0, abs=1e-6)
    assert 0 <= res.l1_distance <= 2
    assert res.mean_eigenvalue == pytest.approx(0.5, abs=0.05)
    assert res.metadata["p"] == 18 and res.metadata["q"] == 30


def test_spectral_compare_eigenvalues_are_contractions():
    res = spectral_compare(40, 0.4, 0.5, 6, master_seed=14, group="orthogonal")
    # histogram covers [0,1]; nothing escapes (H is a contraction)
    assert res.empirical_mass.sum() == pytest.approx(1.0, abs=1e-12)


def test_spectral_compare_regime_warning():
    res = spectral_compare(40, 0.7, 0.5, 4, master_seed=15)
    assert any("regime" in w for w in res.warnings)


def test_spectral_compare_degenerate_corner_raises():
    with pytest.raises(ValueError):
        spectral_compare(40, 0.01, 0.5, 4, master_seed=16)


# ---------------------------------------------------------------------------
# bridge reference
# ---------------------------------------------------------------------------

def test_bridge_reference_single_point_variance():
    br = bridge_reference([(0.5, 0.5)], 2, SeedSpec(17), count=100_000)
    assert not br.ridge_applied
    var = br.values[:, 0].var()
    assert abs(var - 1 / 16) < 4 * (1 / 16) * math.sqrt(2 / 100_000)
    br1 = bridge_reference([(0.5, 0.5)], 1, SeedSpec(17), count=100_000)
    assert abs(br1.values[:, 0].var() - 1 / 8) < 4 * (1 / 8) * math.sqrt(2 / 100_000)


def test_bridge_reference_correlation_shared_s():
    # two points with equal s: correlation is a pure t-bridge ratio
    t1, t2 = 0.3, 0.6
    br = bridge_reference([(0.5, t1), (0.5, t2)], 2, SeedSpec(18), count=150_000)
    got = np.corrcoef(br.values.T)[0, 1]
    want = (min(t1, t2) - t1 * t2) / math.sqrt(t1 * (1 - t1) * t2 * (1 - t2))
    assert abs(got - want) < 0.01


def test_bridge_reference_covariance_matches_target():
    pts = [(0.25, 0.25), (0.5, 0.5), (0.75, 0.5)]
    br = bridge_reference(pts, 2, SeedSpec(19), count=100_000)
    est, se = covariance_mc(br.values)
    from haartrace.cumulants import limit_covariance
    for a, (s1, t1) in enumerate(pts):
        for b, (s2, t2) in enumerate(pts):
            assert abs(est[a, b] - limit_covariance(s1, t1, s2, t2, 2)) < 4 * max(se[a, b], 1e-12)


def test_bridge_reference_path_view():
    br = bridge_reference([(0.2, 0.8), (0.5, 0.5)], 1, SeedSpec(20), count=3)
    path = br.path(1)
    assert path.grid_points == ((0.2, 0.8), (0.5, 0.5))
    assert path.values.shape == (2,)


# ---------------------------------------------------------------------------
# increment fourth moments
# ---------------------------------------------------------------------------

def test_increment_fit_smoke():
    fit = increment_fourth_moment_fit("unitary", 32, 250, master_seed=21, levels=(1, 2))
    assert fit.c_max > 0 and math.isfinite(fit.c_max)
    assert len(fit.blocks) == 4 + 16
    assert np.all(fit.fourth_moments >= 0)
    # level-1 blocks of an n=32 field have dp = dq = 16
    assert all(dp == 16 for (lev, i, j, dp, dq) in fit.blocks if lev == 1)
