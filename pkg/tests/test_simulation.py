import math

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy import integrate
from scipy.spatial import cKDTree

from dppcell.analytic import PathLossModel, ppp_coverage
from dppcell.curves import CurveTable
from dppcell.data_io import preset
from dppcell.kernels import KernelModel
from dppcell.simulation import (
    GridMismatchError,
    HexGrid,
    PointPattern,
    SimConfig,
    SimConfigError,
    Window,
    analytic_k,
    build_envelope,
    empirical_esf,
    empirical_nn,
    envelope_test,
    link_sir,
    replication_rng,
    ripley_k,
    run_coverage,
    sample_dpp,
    sample_hex_perturbed,
    sample_many,
    sample_pattern,
    sample_ppp,
    spectral_modes,
)

PURE4 = PathLossModel.pure(4.0)


@pytest.fixture(scope="module")
def gauss_patterns(houston_gauss):
    cfg = SimConfig(houston_gauss, Window.square(10.0), replications=150, rng_seed=11)
    return sample_many(cfg)


@pytest.fixture(scope="module")
def ppp_patterns():
    cfg = SimConfig(KernelModel.poisson(0.4492), Window.square(10.0), replications=150, rng_seed=12)
    return sample_many(cfg)


# ---- windows and patterns ------------------------------------------------------


def test_window_parsing_and_geometry():
    w = Window.parse("16,8")
    assert (w.width, w.height, w.area) == (16, 8, 128)
    assert Window.parse([1, 3, 2, 5]).as_list() == [1, 3, 2, 5]
    assert_allclose(w.border_distance([[1.0, 4.0]]), [1.0])
    with pytest.raises(ValueError):
        Window(0, 0, 0, 1)


def test_point_pattern_invariants():
    w = Window.square(2.0)
    with pytest.raises(ValueError):
        PointPattern([[0.5, 0.5], [0.5, 0.5]], w)
    with pytest.raises(ValueError):
        PointPattern([[2.5, 0.5]], w)
    assert len(PointPattern(np.empty((0, 2)), w)) == 0


# ---- samplers ------------------------------------------------------------------------


def test_sampling_is_reproducible(houston_gauss):
    cfg = SimConfig(houston_gauss, Window.square(6.0), rng_seed=5)
    a, b = sample_dpp(cfg, 3), sample_dpp(cfg, 3)
    assert_allclose(a.points, b.points, rtol=0, atol=0)
    assert not np.array_equal(a.points, sample_dpp(cfg, 4).points)
    assert_allclose(replication_rng(1, 2).random(3), replication_rng(1, 2).random(3))


def test_spectral_modes_capture_mass(houston_gauss):
    freqs, eig = spectral_modes(houston_gauss, 20.0, 20.0)
    assert eig.sum() >= (1 - 1e-4) * houston_gauss.lam * 400
    assert np.all((eig >= 0) & (eig <= 1))
    with pytest.raises(SimConfigError):
        spectral_modes(houston_gauss, 20.0, 20.0, max_per_axis=5)


def test_dpp_mean_count_and_reduced_variance(gauss_patterns, houston_gauss):
    counts = np.array([len(p) for p in gauss_patterns])
    expect = houston_gauss.lam * 100.0
    assert abs(counts.mean() - expect) < 3 * counts.std() / math.sqrt(counts.size) + 0.01 * expect
    assert counts.var() < counts.mean()


def test_ppp_counts_are_poisson():
    cfg = SimConfig(KernelModel.poisson(0.4492), Window.square(16.0), replications=1000, rng_seed=2)
    counts = np.array([len(sample_ppp(cfg, i)) for i in range(1000)])
    assert abs(counts.mean() - 0.4492 * 256) < 0.02 * 0.4492 * 256
    assert 0.9 <= counts.var() / counts.mean() <= 1.1


def test_hex_without_perturbation_is_a_lattice():
    grid = HexGrid.from_intensity(0.4492, eta=0.0)
    assert_allclose(grid.lam, 0.4492)
    pat = sample_hex_perturbed(SimConfig(grid, Window.square(16.0), rng_seed=3))
    d, _ = cKDTree(pat.points).query(pat.points, k=2)
    assert_allclose(d[:, 1], math.sqrt(3) * grid.cell_radius, rtol=1e-9)
    assert abs(len(pat) - 0.4492 * 256) < 0.05 * 0.4492 * 256


def test_hex_perturbation_is_bounded():
    lattice = HexGrid.from_intensity(0.4492, eta=0.0)
    moved = HexGrid(0.5, lattice.cell_radius)
    w = Window.square(16.0)
    a = sample_hex_perturbed(SimConfig(lattice, w, rng_seed=9, margin=2 * lattice.cell_radius))
    b = sample_hex_perturbed(SimConfig(moved, w, rng_seed=9, margin=2 * lattice.cell_radius))
    d, _ = cKDTree(a.points).query(b.points[w.border_distance(b.points) > 1.0])
    assert np.all(d <= 0.5 * lattice.cell_radius + 1e-12)
    counts = [len(sample_hex_perturbed(SimConfig(moved, w, rng_seed=1), i)) for i in range(100)]
    assert abs(np.mean(counts) - 0.4492 * 256) < 0.02 * 0.4492 * 256


def test_sim_config_validation(houston_gauss):
    with pytest.raises(SimConfigError):
        SimConfig(houston_gauss, Window.square(5.0), replications=0)
    with pytest.raises(SimConfigError):
        HexGrid(1.5, 1.0)
    assert SimConfig(houston_gauss, "5,5").margin == pytest.approx(3 * houston_gauss.alpha)


# ---- statistics ------------------------------------------------------------------------


def test_esf_single_point_covers_window():
    w = Window.square(4.0)
    pat = PointPattern([[2.0, 2.0]], w)
    r = np.array([1.0, math.hypot(2.0, 2.0)])
    assert empirical_esf(pat, r, border=0.0).value[-1] == 1.0


def test_empirical_esf_poisson(ppp_patterns):
    r = np.linspace(0.1, 1.6, 16)
    f = empirical_esf(ppp_patterns, r)
    ref = 1 - np.exp(-0.4492 * np.pi * r**2)
    keep = ref <= 0.95
    assert np.max(np.abs(f.value - ref)[keep]) < 0.02


def test_empirical_esf_and_nn_match_analytic_gauss(gauss_patterns, houston_gauss):
    r = np.array([0.3, 0.6, 0.9, 1.2])
    from dppcell.analytic import empty_space_fn, nearest_neighbor_fn

    f = empirical_esf(gauss_patterns, r)
    d = empirical_nn(gauss_patterns, r)
    assert np.max(np.abs(f.value - empty_space_fn(houston_gauss, r, method="fredholm").value)) < 0.02
    assert np.max(np.abs(d.value - nearest_neighbor_fn(houston_gauss, r, method="fredholm").value)) < 0.03


def test_dpp_nearest_neighbour_distances_exceed_poisson(gauss_patterns, ppp_patterns):
    r = np.array([0.3, 0.5, 0.7, 0.9])
    assert np.all(empirical_nn(gauss_patterns, r).value < empirical_nn(ppp_patterns, r).value)


def test_analytic_k_gauss_closed_form_vs_quadrature(houston_gauss):
    r = np.array([0.2, 0.7, 1.5, 3.0])
    quad = []
    for ri in r:
        v, _ = integrate.quad(lambda t: t * float(houston_gauss.cov_radial(np.array(t))) ** 2, 0, ri)
        quad.append(np.pi * ri**2 - 2 * np.pi * v / houston_gauss.lam**2)
    assert_allclose(analytic_k(houston_gauss, r), quad, rtol=1e-9)
    for name in ("houston-gauss", "la-cauchy", "la-gengamma"):
        assert np.all(analytic_k(preset(name), r) < np.pi * r**2)


def test_ripley_k_poisson_and_gauss(ppp_patterns, gauss_patterns, houston_gauss):
    r = np.array([0.5, 1.0, 1.5])
    assert_allclose(ripley_k(ppp_patterns, r).value, np.pi * r**2, rtol=0.05)
    assert_allclose(ripley_k(gauss_patterns, r).value, analytic_k(houston_gauss, r), rtol=0.05, atol=0.03)


# ---- coverage -------------------------------------------------------------------------------


def test_single_station_has_infinite_sir():
    pat = PointPattern([[1.0, 1.5]], Window.square(4.0))
    sir = link_sir(pat, PURE4, np.random.default_rng(0), n_fades=5)
    assert np.all(np.isinf(sir))
    run = run_coverage(SimConfig(KernelModel.poisson(1.0), Window.square(4.0), replications=2), PURE4,
                       [-10.0, 30.0], patterns=[pat, pat])
    assert_allclose(run.mean, [1.0, 1.0])


def test_empty_patterns_are_redrawn():
    cfg = SimConfig(KernelModel.poisson(0.05), Window.square(5.0), replications=20, rng_seed=4)
    run = run_coverage(cfg, PURE4, [0.0])
    assert run.resampled > 0
    assert run.per_replication.shape == (20, 1)


def test_poisson_coverage_matches_closed_form():
    cfg = SimConfig(KernelModel.poisson(0.4492), Window.square(30.0), replications=600, rng_seed=8)
    t_db = np.array([-10.0, 0.0, 10.0])
    run = run_coverage(cfg, PURE4, t_db)
    lo, med, hi = run.quantiles()
    assert np.all(lo <= med) and np.all(med <= hi)
    assert np.max(np.abs(run.mean - ppp_coverage(10 ** (t_db / 10)))) < 0.03


def test_coverage_is_reproducible():
    cfg = SimConfig(HexGrid.from_intensity(0.4492), Window.square(10.0), replications=5, rng_seed=1)
    a = run_coverage(cfg, PURE4, [0.0, 5.0])
    b = run_coverage(cfg, PURE4, [0.0, 5.0])
    assert_allclose(a.per_replication, b.per_replication, rtol=0, atol=0)


# ---- envelopes -------------------------------------------------------------------------------


def test_envelope_grid_mismatch(gauss_patterns):
    env = build_envelope(gauss_patterns[:20], [0.5, 1.0])
    with pytest.raises(GridMismatchError):
        envelope_test(gauss_patterns[20], [0.5, 1.1], envelope=env)


def test_hex_lattice_fails_poisson_envelope():
    w = Window.square(12.0)
    lattice = sample_hex_perturbed(SimConfig(HexGrid.from_intensity(0.5, 0.0), w, rng_seed=1))
    res = envelope_test(lattice, np.linspace(0.1, 1.5, 15), model=KernelModel.poisson(0.5), replications=99)
    assert not res.passed
    assert res.exceedance > 0.2


def test_coverage_envelope_contains_poisson_curve():
    m = KernelModel.poisson(0.4492)
    t_db = np.array([-10.0, 0.0, 10.0])
    curve = CurveTable(t_db, ppp_coverage(10 ** (t_db / 10)))
    res = envelope_test(curve, statistic="coverage", model=m, window=Window.square(16.0), replications=200)
    assert res.passed and res.exceedance == 0.0
