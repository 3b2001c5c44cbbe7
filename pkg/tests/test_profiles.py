"""Profile binning, shape fitting, and the decay kernel Omega(t)."""

import numpy as np
import pytest
from scipy.integrate import quad

from chaoscorr.errors import ValidationError
from chaoscorr.models import build_spin_chain
from chaoscorr.operators import hermitian_eigendecomposition
from chaoscorr.profiles import (
    ChaoticProfile,
    FitResult,
    _gaussian_bin_avg,
    _lorentzian_bin_avg,
    fit_profile,
    gaussian_density,
    lambda_profile,
    lorentzian_density,
    omega_numeric_asymmetry,
    omega_of_t,
    overlap_matrix,
)


def synthetic_profile(shape, rate, n_bins=101, e_max=1.0, noise=0.0, seed=0):
    """Exact (optionally noisy) bin-averaged density of a known shape."""
    edges = np.linspace(-e_max, e_max, n_bins + 1)
    centers = 0.5 * (edges[:-1] + edges[1:])
    width = edges[1] - edges[0]
    if shape == "lorentzian":
        values = _lorentzian_bin_avg(centers, width, rate)
    else:
        values = _gaussian_bin_avg(centers, width, rate)
    if noise:
        values = values * (1.0 + noise * np.random.default_rng(seed).standard_normal(n_bins))
    return ChaoticProfile(
        bin_centers=centers,
        bin_values=np.maximum(values, 0.0),
        bin_width=float(width),
        mu_window=(0, 1),
        omega_mean=width,
    )


def test_densities_normalized():
    for density, rate in ((lorentzian_density, 0.2), (gaussian_density, 0.1)):
        mass, _ = quad(lambda e: density(np.array([e]), rate)[0], -np.inf, np.inf)
        assert mass == pytest.approx(1.0, abs=1e-8)


def test_bin_averages_match_quadrature():
    width = 0.05
    for avg, density, rate in (
        (_lorentzian_bin_avg, lorentzian_density, 0.13),
        (_gaussian_bin_avg, gaussian_density, 0.07),
    ):
        for e0 in (0.0, 0.11, -0.4):
            exact, _ = quad(
                lambda e: density(np.array([e]), rate)[0], e0 - width / 2, e0 + width / 2
            )
            assert avg(np.array([e0]), width, rate)[0] == pytest.approx(exact / width, abs=1e-10)


@pytest.mark.parametrize("shape,rate", [("lorentzian", 0.08), ("gaussian", 0.3)])
def test_fit_recovers_exact_synthetic_rate(shape, rate):
    profile = synthetic_profile(shape, rate, e_max=12 * rate if shape == "lorentzian" else 4.0)
    fit = fit_profile(profile, shape)
    assert fit.rate == pytest.approx(rate, rel=1e-6)
    assert fit.residual < 1e-8


@pytest.mark.parametrize("shape,rate", [("lorentzian", 0.08), ("gaussian", 0.3)])
def test_fit_tolerates_multiplicative_noise(shape, rate):
    profile = synthetic_profile(
        shape, rate, e_max=12 * rate if shape == "lorentzian" else 4.0, noise=0.03, seed=4
    )
    fit = fit_profile(profile, shape)
    assert fit.rate == pytest.approx(rate, rel=0.03)


def test_fit_log_weighting_pins_lorentzian_tails():
    profile = synthetic_profile("lorentzian", 0.05, e_max=2.0)
    fit = fit_profile(profile, "lorentzian", fit_window_scale=15.0, weighting="log",
                      free_amplitude=False)
    assert fit.rate == pytest.approx(0.05, rel=1e-6)


def test_fit_rejects_bad_arguments():
    profile = synthetic_profile("lorentzian", 0.1)
    with pytest.raises(ValidationError):
        fit_profile(profile, "parabola")
    with pytest.raises(ValidationError):
        fit_profile(profile, "lorentzian", weighting="quadratic")


def test_overlap_matrix_identity_and_validation(small_chain):
    _, hams = small_chain
    d0 = hermitian_eigendecomposition(hams.h0)
    df = hermitian_eigendecomposition(hams.h_full)
    ov = overlap_matrix(df, d0)
    np.testing.assert_allclose(np.linalg.norm(ov.c, axis=1), 1.0, atol=1e-10)
    # same decomposition on both sides gives the identity
    self_ov = overlap_matrix(d0, d0)
    np.testing.assert_allclose(self_ov.c, np.eye(d0.dim), atol=1e-12)


def test_lambda_profile_mass_and_validation(small_chain):
    _, hams = small_chain
    ov = overlap_matrix(
        hermitian_eigendecomposition(hams.h_full), hermitian_eigendecomposition(hams.h0)
    )
    profile = lambda_profile(ov, window_fraction=1.0, n_bins=17)
    mass = float(np.sum(profile.bin_values) * profile.bin_width)
    assert 0.9 <= mass <= 1.0 + 1e-12
    with pytest.raises(ValidationError):
        lambda_profile(ov, window_fraction=0.0)
    with pytest.raises(ValidationError):
        lambda_profile(ov, n_bins=4)


def test_omega_properties():
    t = np.linspace(-5.0, 5.0, 41)
    for source in (("lorentzian", 0.3), ("gaussian", 0.2)):
        om = omega_of_t(source, t)
        assert omega_of_t(source, 0.0) == pytest.approx(1.0)
        np.testing.assert_allclose(om, om[::-1], atol=1e-14)  # symmetric
        assert np.all(np.diff(om[t >= 0]) <= 1e-14)  # decaying
    with pytest.raises(ValidationError):
        omega_of_t(("lorentzian", -1.0), t)
    with pytest.raises(ValidationError):
        omega_of_t(("triangle", 1.0), t)


def test_omega_accepts_fit_result():
    fit = FitResult(shape="gaussian", rate=0.25, residual=0.0, covariance=0.0)
    assert omega_of_t(fit, 2.0) == pytest.approx(np.exp(-0.25 * 4.0))


def test_numeric_omega_matches_closed_form():
    """Cosine transform of the binned density vs the analytic kernel."""
    t = np.linspace(0.0, 8.0, 33)
    for shape, rate, e_max in (("lorentzian", 0.35, 60.0), ("gaussian", 0.25, 8.0)):
        profile = synthetic_profile(shape, rate, n_bins=4001, e_max=e_max)
        numeric = omega_of_t(profile, t)
        closed = omega_of_t((shape, rate), t)
        assert np.max(np.abs(numeric - closed)) <= 0.02
        # symmetric profile carries no sine component
        assert np.max(np.abs(omega_numeric_asymmetry(profile, t))) <= 1e-12
