import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from dppcell.data_io import PRESETS, preset
from dppcell.kernels import (
    DegenerateAnchor,
    ExistenceError,
    Family,
    KernelModel,
    NoSpectralRepresentation,
    covariance,
    existence_check,
    palm_kernel,
    repulsiveness_mu,
    spectral_density,
)

from conftest import cofactor_det


def dft_spectral(model, xi, h, half_width):
    """Riemann-sum Fourier transform of K0 on a square grid, done as two 1-D DFTs."""
    x = np.arange(-half_width, half_width + h / 2, h)
    k = model.cov_radial(np.hypot(x[:, None], x[None, :]))
    e1 = np.exp(-2j * np.pi * xi[0] * x)
    e2 = np.exp(-2j * np.pi * xi[1] * x)
    return float(np.real(e1 @ k @ e2)) * h * h


def random_freqs(model, seed, count=8):
    rng = np.random.default_rng(seed)
    rad = rng.uniform(0.0, 1.0 / model.alpha, count)
    ang = rng.uniform(0.0, 2 * np.pi, count)
    return np.column_stack((rad * np.cos(ang), rad * np.sin(ang)))


def test_cauchy_spectral_density_matches_dft_oracle():
    m = preset("houston-cauchy")
    for xi in random_freqs(m, 1):
        # alpha/4 spacing aliases at the 1e-5 level for this family; alpha/8 is exact to 1e-13
        ref = dft_spectral(m, xi, m.alpha / 8, 60 * m.alpha)
        assert_allclose(spectral_density(m, xi), ref, rtol=1e-6)


def test_gauss_spectral_density_matches_dft_oracle():
    m = preset("la-gauss")
    for xi in random_freqs(m, 2):
        ref = dft_spectral(m, xi, m.alpha / 4, 10 * m.alpha)
        assert_allclose(spectral_density(m, xi), ref, rtol=1e-9)


def test_gengamma_covariance_matches_adaptive_hankel_oracle():
    # K0(r) = 2 pi int rho phi(rho) J0(2 pi rho r) d rho, by adaptive quadrature
    from scipy import integrate, special

    m = preset("houston-gengamma")
    top = 12.0 / m.alpha
    for r in (0.0, 0.3, 1.0, 2.5, 5.0, 12.0):
        ref, _ = integrate.quad(lambda p: 2 * np.pi * p * float(m.spectral_radial(np.array(p)))
                                * special.j0(2 * np.pi * p * r), 0.0, top, limit=2000, epsabs=1e-13)
        assert_allclose(m.cov_radial(np.array(r)), ref, rtol=1e-6, atol=1e-10)


@pytest.mark.parametrize("name", list(PRESETS))
def test_covariance_at_origin_is_intensity(name):
    m = preset(name)
    assert_allclose(m.cov_radial(np.array(0.0)), m.lam, rtol=1e-7)


@pytest.mark.parametrize("name", list(PRESETS))
def test_spectral_density_integrates_to_intensity(name):
    m = preset(name)
    from scipy import integrate

    val, _ = integrate.quad(lambda p: 2 * np.pi * p * float(m.spectral_radial(np.array(p))), 0, np.inf, limit=400)
    assert_allclose(val, m.lam, rtol=1e-7)


@pytest.mark.parametrize("name", list(PRESETS))
def test_presets_pass_existence(name):
    rep = preset(name).existence
    assert rep.ok
    assert rep.max_spectral <= 1.001
    assert abs(rep.max_spectral - rep.grid_max_spectral) < 1e-3


def test_existence_boundaries():
    # Gauss: lam pi alpha^2 <= 1
    assert existence_check("gauss", 1 / np.pi, 1.0).ok
    assert not existence_check("gauss", 1.01 / np.pi, 1.0).ok
    # Cauchy: lam pi alpha^2 / nu <= 1
    assert existence_check("cauchy", 2.0 / np.pi, 1.0, 2.0).ok
    assert not existence_check("cauchy", 2.1 / np.pi, 1.0, 2.0).ok
    with pytest.raises(ExistenceError):
        KernelModel.gauss(1.0, 1.0)


def test_houston_gauss_sup_phi():
    # lam pi alpha^2 for (0.4492, 0.8417)
    assert_allclose(preset("houston-gauss").existence.max_spectral, 0.4492 * np.pi * 0.8417**2, rtol=1e-12)
    assert_allclose(preset("houston-gauss").existence.max_spectral, 0.99978, atol=1e-5)


def test_mu_presets():
    expect = {"houston-gauss": 0.4999, "houston-cauchy": 0.4365, "houston-gengamma": 0.5905,
              "la-gauss": 0.5004, "la-cauchy": 0.4351, "la-gengamma": 0.5479}
    for name, mu in expect.items():
        assert abs(repulsiveness_mu(preset(name)).mu - mu) < 1e-3


@pytest.mark.parametrize("name", ["houston-cauchy", "la-gengamma"])
def test_mu_matches_integral_of_squared_covariance(name):
    from scipy import integrate

    m = preset(name)
    val, _ = integrate.quad(lambda r: 2 * np.pi * r * float(m.cov_radial(np.array(r))) ** 2, 0, 40 * m.alpha,
                            limit=400)
    assert_allclose(repulsiveness_mu(m).mu, val / m.lam, rtol=1e-6)


def test_poisson_has_no_spectral_density():
    m = KernelModel.poisson(0.5)
    assert repulsiveness_mu(m).mu == 0.0
    with pytest.raises(NoSpectralRepresentation):
        spectral_density(m, [0.1, 0.0])


def test_family_aliases():
    assert Family.parse("Generalized-Gamma") is Family.GENGAMMA
    assert Family.parse("PPP") is Family.POISSON
    with pytest.raises(ValueError):
        Family.parse("matern")


def test_covariance_vector_and_radial_agree(houston_gauss):
    x = np.array([[0.3, 0.4], [1.0, 0.0]])
    assert_allclose(covariance(houston_gauss, x), houston_gauss.cov_radial(np.array([0.5, 1.0])))


coords = st.floats(-3.0, 3.0, allow_nan=False)
point = st.tuples(coords, coords)


@settings(max_examples=60, deadline=None)
@given(family=st.sampled_from(["houston-gauss", "houston-cauchy", "houston-gengamma"]),
       anchor=point, pts=st.lists(point, min_size=1, max_size=5))
def test_palm_determinant_identity(family, anchor, pts):
    m = preset(family)
    pts = np.array(pts)
    if pts.shape[0] > 1 and np.min(np.hypot(*(pts[:, None] - pts[None]).transpose(2, 0, 1))[np.triu_indices(len(pts), 1)]) < 1e-3:
        return
    palm = palm_kernel(m, anchor)
    full = m.gram(np.vstack((np.array(anchor)[None], pts)))
    lhs = cofactor_det(palm.gram(pts))
    rhs = cofactor_det(full) / m.lam
    assert abs(lhs - rhs) <= 1e-10 * max(abs(rhs), m.lam ** len(pts) * 1e-3)


@settings(max_examples=40, deadline=None)
@given(family=st.sampled_from(["houston-gauss", "la-cauchy", "la-gengamma"]), anchor=point,
       pts=st.lists(point, min_size=2, max_size=6))
def test_palm_gram_is_symmetric_psd_with_bounded_diagonal(family, anchor, pts):
    m = preset(family)
    g = palm_kernel(m, anchor).gram(np.array(pts))
    assert_allclose(g, g.T, atol=1e-14)
    assert np.linalg.eigvalsh(g).min() > -1e-9
    d = np.diag(g)
    assert np.all(d >= -1e-12) and np.all(d <= m.lam + 1e-12)


def test_palm_kernel_vanishes_at_anchor(houston_gauss):
    palm = palm_kernel(houston_gauss, (0.5, -0.2))
    assert abs(palm.diag(np.array([0.5, -0.2]))) < 1e-14
    assert_allclose(palm.evaluate([0.5, -0.2], [1.0, 1.0]), 0.0, atol=1e-14)


def test_degenerate_anchor():
    class Zero:
        def cov_radial(self, r):
            return np.zeros_like(np.asarray(r, float))

    with pytest.raises(DegenerateAnchor):
        palm_kernel(Zero(), (0, 0))


def test_gengamma_covariance_decreases(self=None):
    m = preset("la-gengamma")
    r = np.linspace(0, 6 * m.alpha, 200)
    k = m.cov_radial(r)
    assert k[0] > k[-1]
    assert np.all(np.abs(k[-20:]) < 1e-3 * m.lam)
