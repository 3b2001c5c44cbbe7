"""Analytic correlator envelopes: powers of the decay kernel applied to the
non-interacting reference dynamics.

One- and two-point functions relax as Omega^2(t) toward their diagonal
ensemble values; zero-mean four-point functions (OTOC included) carry a
pure Omega^4(t) envelope; the squared commutator is a degree-four
polynomial in Omega(t).
"""

from __future__ import annotations

import numpy as np

from chaoscorr.correlators import CorrelatorSeries
from chaoscorr.errors import ValidationError


def _check_grid(ref: CorrelatorSeries, omega: np.ndarray) -> np.ndarray:
    omega = np.asarray(omega, dtype=float)
    if omega.shape != ref.times.shape:
        raise ValidationError("Omega grid does not match the reference series grid")
    return omega


def _prediction(ref: CorrelatorSeries, values: np.ndarray, tags=None) -> CorrelatorSeries:
    return CorrelatorSeries(
        ref.times, values, "prediction", "prediction", tags or ref.observable_tags
    )


def predict_one_point(
    ref: CorrelatorSeries, omega: np.ndarray, a1_de: float
) -> CorrelatorSeries:
    """<A1(t)> = (<A1(t)>_H0 - (A1)_DE) Omega^2 + (A1)_DE."""
    omega = _check_grid(ref, omega)
    values = (ref.values - a1_de) * omega**2 + a1_de
    return _prediction(ref, values)


def predict_two_point(
    ref: CorrelatorSeries, omega: np.ndarray, a1_de: float, a2_expect: complex
) -> CorrelatorSeries:
    """<A1(t)A2(0)> = (ref - (A1)_DE <A2>) Omega^2 + (A1)_DE <A2>.

    Applied to the complex reference; the imaginary part then obeys
    Im<A1(t)A2(0)> = Im(ref) Omega^2 automatically.
    """
    omega = _check_grid(ref, omega)
    stationary = a1_de * a2_expect
    values = (ref.values - stationary) * omega**2 + stationary
    return _prediction(ref, values)


def predict_two_time(
    ref_shifted: CorrelatorSeries,
    omega_shifted: np.ndarray,
    a1_de: float,
    a2_t2_expect: complex,
) -> CorrelatorSeries:
    """Two-time form <A1(t1)A2(t2)> via the shifted initial state.

    `ref_shifted` is the non-interacting series computed from
    exp(-i H t2)|state> on the t1 grid, and `omega_shifted` is Omega
    evaluated at |t1 - t2|.
    """
    omega = _check_grid(ref_shifted, omega_shifted)
    stationary = a1_de * a2_t2_expect
    values = (ref_shifted.values - stationary) * omega**2 + stationary
    return _prediction(ref_shifted, values)


def predict_four_point(
    ref: CorrelatorSeries,
    omega: np.ndarray,
    de_checks: list[tuple[float, float]] | None = None,
    de_tolerance: float = 1e-8,
) -> CorrelatorSeries:
    """<A1(t)A2 A3(t)A4> = ref * Omega^4 for zero-DE observables.

    `de_checks` pairs each observable's diagonal-ensemble average with its
    norm; any |DE| > de_tolerance * norm is rejected, instructing the
    caller to shift the observable first. Relax de_tolerance explicitly
    when near-zero averages are acceptable (e.g. traceless spin operators
    in mid-spectrum states).
    """
    omega = _check_grid(ref, omega)
    for de, norm in de_checks or []:
        if abs(de) > de_tolerance * norm:
            raise ValidationError(
                f"observable has nonzero diagonal-ensemble average {de:.3e} "
                f"(tolerance {de_tolerance * norm:.3e}); shift it to A - (A)_DE first"
            )
    return _prediction(ref, ref.values * omega**4)


def predict_squared_commutator(
    refs: dict[str, CorrelatorSeries],
    omega: np.ndarray,
    a1sq_de: float,
    a2sq_de: float,
    a2sq_expect: float,
) -> CorrelatorSeries:
    """Degree-four polynomial in Omega(t) for <|[A1(t), A2]|^2>.

    `refs` holds the non-interacting reference series of the *shifted*
    observables (A - (A)_DE): "otoc", "d_term" <A2 A1(t)^2 A2>, "i_term"
    <A1(t) A2^2 A1(t)>, "a1_squared" <A1(t)^2>. The DE constants are those
    of the shifted observables squared; a2sq_expect is the static
    expectation <(A2^0)^2> in the initial state.

    For involutory (spin) observables the Omega^2 coefficient cancels;
    that cancellation emerges numerically from these inputs.
    """
    for key in ("otoc", "d_term", "i_term", "a1_squared"):
        if key not in refs:
            raise ValidationError(f"missing reference series {key!r}")
    base = refs["otoc"]
    omega = _check_grid(base, omega)
    for key, series in refs.items():
        if series.times.shape != base.times.shape or np.any(series.times != base.times):
            raise ValidationError(f"reference series {key!r} is on a different grid")
    coeff4 = -2.0 * refs["otoc"].values.real + refs["i_term"].values.real
    coeff2 = (
        refs["d_term"].values.real
        + refs["a1_squared"].values.real * a2sq_de
        - a1sq_de * a2sq_expect
        - a1sq_de * a2sq_de
    )
    constant = a1sq_de * a2sq_expect + a1sq_de * a2sq_de
    values = coeff4 * omega**4 + coeff2 * omega**2 + constant
    return _prediction(base, values.astype(complex))


def regression_residual(
    series: CorrelatorSeries,
    rate_model: tuple[str, float, int],
    constant_term: float = 0.0,
) -> float:
    """Deviation of the log-envelope derivative from the regression law.

    rate_model is (shape, rate, n) with n the power of Omega in the
    envelope: the law is d/dt log(env) = -n*Gamma (Lorentzian) or -2nKt
    (Gaussian). Exact (up to rounding) on predicted envelopes; a
    diagnostic, not an assertion, on exact data.
    """
    shape, rate, n = rate_model
    if n not in (2, 4):
        raise ValidationError("envelope power n must be 2 or 4")
    envelope = series.values.real - constant_term
    if np.any(envelope <= 0):
        bad = series.times[envelope <= 0]
        raise ValidationError(
            f"envelope non-positive on t in [{bad.min():.4g}, {bad.max():.4g}]"
        )
    log_env = np.log(envelope)
    t = series.times
    dlog = (log_env[2:] - log_env[:-2]) / (t[2:] - t[:-2])
    if shape == "lorentzian":
        target = -n * rate * np.ones_like(dlog)
    elif shape == "gaussian":
        target = -2.0 * n * rate * t[1:-1]
    else:
        raise ValidationError(f"unknown kernel shape {shape!r}")
    return float(np.max(np.abs(dlog - target)))
