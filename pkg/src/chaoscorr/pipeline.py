"""End-to-end runs: simulate exact dynamics, extract profiles, compare to theory.

Three entry points mirror the CLI subcommands:

* :func:`run_simulate` — build the model, diagonalize (with disk cache), compute
  the requested exact correlators plus their decoupled-reference counterparts,
  and write CSV series and a manifest.
* :func:`run_compare` — extract the chaotic wave-function profile, fit both
  envelope shapes, evaluate the analytic predictions for each correlator, and
  report RMS mismatch over a time window.
* :func:`run_rmt_verify` — random-matrix checks: extracted linewidth vs the
  analytic value, and Monte-Carlo eigenstate coefficient correlations vs the
  closed-form expressions.
"""

from __future__ import annotations

import datetime
import warnings
from pathlib import Path

import numpy as np

from chaoscorr import correlators as corr
from chaoscorr import models, predictions, profiles, serialize
from chaoscorr.config import CorrelatorRequest, RunConfig
from chaoscorr.ensembles import (
    LambdaLookup,
    bare_levels,
    eigenstate_corr4,
    ensemble_lambda_experiment,
    monte_carlo_coefficient_product,
)
from chaoscorr.errors import ValidationError
from chaoscorr.models import ChainParams, HamiltonianSet, RmtParams
from chaoscorr.operators import (
    SpectralDecomposition,
    expectation,
    hermitian_eigendecomposition,
)


def _cache_key(tag: str, params: ChainParams) -> str:
    payload = {"tag": tag, "params": {k: getattr(params, k) for k in (
        "n_sites", "bz_s", "bx_s", "bx_b", "jx_b", "jz_i", "jx_i", "r1", "r2")}}
    return serialize.config_hash(payload)[:24]


def _decompose(matrix, cache_dir, tag, params) -> SpectralDecomposition:
    if cache_dir is None:
        return hermitian_eigendecomposition(matrix)
    return serialize.cached_decomposition(Path(cache_dir), _cache_key(tag, params), matrix)


class ChainRun:
    """Shared state for a spin-chain run: Hamiltonians, decompositions, states."""

    def __init__(self, config: RunConfig, cache_dir=None):
        if not isinstance(config.model, ChainParams):
            raise ValidationError("chain pipeline requires a spin_chain model")
        self.config = config
        self.params = config.model
        self.hams: HamiltonianSet = models.build_spin_chain(self.params)
        self.decomp0 = _decompose(self.hams.h0, cache_dir, "h0", self.params)
        self.decomp_full = _decompose(self.hams.h_full, cache_dir, "h_full", self.params)
        self._ops: dict[str, np.ndarray] = {}

    def observable(self, name: str) -> np.ndarray:
        if name not in self._ops:
            self._ops[name] = models.named_observable(name, self.params.n_sites)
        return self._ops[name]

    def initial_states(self):
        """Yield the initial state for each bath realization."""
        spec = self.config.initial_state
        n = self.config.n_bath_realizations if spec.kind == "random_product" else 1
        for i in range(n):
            spec_i = spec if i == 0 else models.InitialStateSpec(
                kind=spec.kind,
                n_sites=spec.n_sites,
                index=spec.index,
                seed=(spec.seed or 0) + i,
                accept_window=spec.accept_window,
            )
            yield models.prepare_initial_state(spec_i, self.decomp0)


def _series_for_request(
    run: ChainRun,
    request: CorrelatorRequest,
    state: np.ndarray,
    decomp: SpectralDecomposition,
    times: np.ndarray,
    tag: str,
) -> corr.CorrelatorSeries:
    ops = [run.observable(name) for name in request.observables]
    if request.kind == "one_point":
        return corr.one_point_series(
            state, decomp, ops[0], times,
            hamiltonian_tag=tag, observable_tag=request.observables[0],
        )
    if request.kind == "two_point":
        return corr.two_point_series(
            state, decomp, ops[0], ops[1], times, t2=request.t2,
            hamiltonian_tag=tag, observable_tags=request.observables,
        )
    if request.kind == "otoc":
        return corr.four_point_series(
            state, decomp, ops[0], ops[1], ops[0], ops[1], times,
            hamiltonian_tag=tag, observable_tags=request.observables * 2,
        )
    if request.kind == "four_point":
        return corr.four_point_series(
            state, decomp, *ops, times,
            hamiltonian_tag=tag, observable_tags=request.observables,
        )
    if request.kind == "squared_commutator":
        return corr.squared_commutator_series(
            state, decomp, ops[0], ops[1], times,
            hamiltonian_tag=tag, observable_tags=request.observables,
        )
    raise ValidationError(f"unknown correlator kind {request.kind!r}")


def _averaged_series(run, request, decomp, times, tag):
    """Average of one correlator over the bath realizations of the state."""
    total = None
    count = 0
    series = None
    for state in run.initial_states():
        series = _series_for_request(run, request, state, decomp, times, tag)
        total = series.values.copy() if total is None else total + series.values
        count += 1
    return corr.CorrelatorSeries(
        times=times,
        values=total / count,
        kind=series.kind,
        hamiltonian_tag=tag,
        observable_tags=series.observable_tags,
    )


def _request_label(request: CorrelatorRequest) -> str:
    obs = "_".join(name.replace("*", "x").replace("(", "").replace(")", "")
                   for name in request.observables)
    return f"{request.kind}_{obs}"


def run_simulate(config: RunConfig, output_dir, cache_dir=None) -> dict:
    """Compute all requested exact correlators; write CSVs and a manifest."""
    output_dir = Path(output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    run = ChainRun(config, cache_dir)
    times = np.linspace(0.0, config.t_max, config.n_points)

    files = {}
    for request in config.correlators:
        label = _request_label(request)
        for tag, decomp in (("full", run.decomp_full), ("reference", run.decomp0)):
            series = _averaged_series(run, request, decomp, times, tag)
            path = output_dir / f"{label}__{tag}.csv"
            serialize.write_series_csv(path, series)
            files[f"{label}__{tag}"] = {
                "path": path.name,
                "sha256": serialize.sha256_file(path),
            }

    manifest = {
        "created": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "config_hash": serialize.config_hash(config.raw),
        "model": "spin_chain",
        "n_sites": run.params.n_sites,
        "n_bath_realizations": config.n_bath_realizations,
        "series": files,
    }
    serialize.write_json(output_dir / "manifest.json", manifest)
    return manifest


def extract_profile(run: ChainRun, config: RunConfig):
    """Overlap matrix -> binned profile -> fit for each requested shape."""
    lam = config.lambda_extraction
    ov = profiles.overlap_matrix(run.decomp_full, run.decomp0)
    profile = profiles.lambda_profile(
        ov, window_fraction=lam.window_fraction, n_bins=lam.n_bins
    )
    fits = {
        shape: profiles.fit_profile(profile, shape, fit_window_scale=lam.fit_window_scale)
        for shape in lam.fit_shapes
    }
    return profile, fits


def _prediction_for_request(run, request, fit, times, de_tolerance):
    """Analytic envelope prediction for one correlator, bath-averaged."""
    ops = [run.observable(name) for name in request.observables]
    omega = profiles.omega_of_t(fit, times)
    results = []
    for state in run.initial_states():
        de = lambda op, st=state: corr.diagonal_ensemble_average(st, run.decomp_full, op)

        if request.kind == "one_point":
            ref = corr.one_point_series(
                state, run.decomp0, ops[0], times,
                hamiltonian_tag="reference", observable_tag=request.observables[0],
            )
            results.append(predictions.predict_one_point(ref, omega, de(ops[0])).values)
        elif request.kind == "two_point":
            if request.t2 == 0.0:
                ref = corr.two_point_series(
                    state, run.decomp0, ops[0], ops[1], times,
                    hamiltonian_tag="reference", observable_tags=request.observables,
                )
                a2_expect = expectation(state, ops[1])
                results.append(
                    predictions.predict_two_point(ref, omega, de(ops[0]), a2_expect).values
                )
            else:
                b = run.decomp_full.vectors.conj().T @ state
                shifted = run.decomp_full.vectors @ (
                    np.exp(-1j * run.decomp_full.energies * request.t2) * b
                )
                ref = corr.two_point_series(
                    shifted, run.decomp0, ops[0], ops[1], times - request.t2,
                    hamiltonian_tag="reference", observable_tags=request.observables,
                )
                omega_shift = profiles.omega_of_t(fit, times - request.t2)
                results.append(
                    predictions.predict_two_time(
                        ref, omega_shift, de(ops[0]), expectation(shifted, ops[1])
                    ).values
                )
        elif request.kind in ("otoc", "four_point"):
            four_ops = ops if request.kind == "four_point" else [ops[0], ops[1], ops[0], ops[1]]
            tags = request.observables if request.kind == "four_point" else request.observables * 2
            ref = corr.four_point_series(
                state, run.decomp0, *four_ops, times,
                hamiltonian_tag="reference", observable_tags=tags,
            )
            de_checks = [(de(op), float(np.linalg.norm(op, 2))) for op in four_ops]
            results.append(
                predictions.predict_four_point(
                    ref, omega, de_checks, de_tolerance=de_tolerance
                ).values
            )
        elif request.kind == "squared_commutator":
            a1, a2 = ops
            dim = a1.shape[0]
            a1s = a1 - de(a1) * np.eye(dim)
            a2s = a2 - de(a2) * np.eye(dim)
            refs = corr.squared_commutator_components(
                state, run.decomp0, a1s, a2s, times, hamiltonian_tag="reference"
            )
            results.append(
                predictions.predict_squared_commutator(
                    refs, omega,
                    a1sq_de=de(a1s @ a1s),
                    a2sq_de=de(a2s @ a2s),
                    a2sq_expect=float(np.real(expectation(state, a2s @ a2s))),
                ).values
            )
        else:
            raise ValidationError(f"unknown correlator kind {request.kind!r}")
    return np.mean(results, axis=0)


def run_compare(config: RunConfig, output_dir, cache_dir=None) -> dict:
    """Exact correlators vs analytic predictions with both envelope shapes."""
    output_dir = Path(output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    run = ChainRun(config, cache_dir)
    times = np.linspace(0.0, config.t_max, config.n_points)
    profile, fits = extract_profile(run, config)

    serialize.write_profile_csv(output_dir / "lambda_profile.csv", profile)
    metrics: dict = {
        "fits": {
            shape: {"rate": fit.rate, "residual": fit.residual}
            for shape, fit in fits.items()
        },
        "correlators": {},
    }

    lo, hi = config.rms_window
    mask = (times >= lo) & (times <= hi)
    for request in config.correlators:
        label = _request_label(request)
        exact = _averaged_series(run, request, run.decomp_full, times, "full")
        columns = {"time": times, "exact_re": exact.values.real,
                   "exact_im": exact.values.imag}
        entry = {}
        for shape, fit in fits.items():
            pred = _prediction_for_request(run, request, fit, times, config.de_tolerance)
            columns[f"pred_{shape}"] = np.real(pred)
            rms = float(np.sqrt(np.mean(np.abs(exact.values[mask] - pred[mask]) ** 2)))
            entry[shape] = {"rms": rms, "rate": fit.rate}
        _write_comparison_csv(output_dir / f"compare_{label}.csv", columns, request)
        metrics["correlators"][label] = entry

    serialize.write_json(output_dir / "metrics.json", metrics)
    return metrics


def _write_comparison_csv(path, columns, request):
    header = [
        f"# kind = {request.kind}",
        f"# observables = {','.join(request.observables)}",
    ]
    names = list(columns)
    rows = [
        ",".join(serialize.fmt(columns[name][i]) for name in names)
        for i in range(len(columns["time"]))
    ]
    serialize.atomic_write_text(path, "\n".join(header + [",".join(names)] + rows) + "\n")


def run_fit_lambda(config: RunConfig, output_dir, cache_dir=None) -> dict:
    """Extract and fit the chaotic profile only; write profile CSV + fit JSON."""
    output_dir = Path(output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    run = ChainRun(config, cache_dir)
    profile, fits = extract_profile(run, config)
    serialize.write_profile_csv(output_dir / "lambda_profile.csv", profile)
    summary = {
        shape: {"rate": fit.rate, "residual": fit.residual,
                "stderr": float(np.sqrt(fit.covariance))}
        for shape, fit in fits.items()
    }
    serialize.write_json(output_dir / "lambda_fit.json", summary)
    return summary


def default_index_tuples(dim: int, n_tuples: int, rng) -> list[tuple[tuple, tuple]]:
    """Random (states, indices) quartets for coefficient-product checks.

    Each quartet is c_mu(a) c_mu(a) c_nu(b) c_nu(b) with mu != nu drawn from
    the central half of the spectrum and bare indices near the matching
    eigenstate, so both the Gaussian product and the normalization
    correction are resolvable above the Monte-Carlo noise.
    """
    lo, hi = dim // 4, 3 * dim // 4
    tuples = []
    for _ in range(n_tuples):
        mu, nu = (int(v) for v in rng.choice(np.arange(lo, hi), size=2, replace=False))
        a = int(np.clip(mu + int(rng.integers(-3, 4)), 0, dim - 1))
        b = int(np.clip(nu + int(rng.integers(-3, 4)), 0, dim - 1))
        tuples.append(((mu, mu, nu, nu), (a, a, b, b)))
    return tuples


def run_rmt_verify(config: RunConfig, output_dir, cache_dir=None) -> dict:
    """Random-matrix validation: linewidth and coefficient-product z-scores."""
    if not isinstance(config.model, RmtParams):
        raise ValidationError("rmt-verify requires a deutsch model")
    output_dir = Path(output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    params = config.model
    rv = config.rmt_verify

    profile, fit, gamma_theory = ensemble_lambda_experiment(
        params, rv.n_realizations, config.seed,
        window_fraction=config.lambda_extraction.window_fraction,
        n_bins=config.lambda_extraction.n_bins,
    )
    serialize.write_profile_csv(output_dir / "rmt_profile.csv", profile)
    gamma_rel_err = abs(fit.rate - gamma_theory) / gamma_theory

    rng = np.random.default_rng(config.seed + 777)
    corr_report = []
    for dim in rv.corr_dims:
        p = RmtParams(dim=dim, omega=params.omega, g=params.g)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            dim_profile, _, _ = ensemble_lambda_experiment(
                p, rv.n_realizations, config.seed + 10 * dim
            )
        lookup = LambdaLookup("empirical", p.omega, bare_levels(p), profile=dim_profile)
        tuples = default_index_tuples(dim, rv.n_index_tuples, rng)
        stats = monte_carlo_coefficient_product(
            p, tuples, rv.corr_realizations, config.seed + dim
        )
        for (states, indices), stat in zip(tuples, stats):
            mu, _, nu, _ = states
            theory = eigenstate_corr4(lookup, mu, nu, *indices)
            z = (stat.mean - theory) / stat.stderr if stat.stderr > 0 else np.nan
            corr_report.append({
                "dim": dim, "states": list(states), "indices": list(indices),
                "mc_mean": stat.mean, "mc_stderr": stat.stderr,
                "theory": theory, "z": float(z),
            })

    max_z = max(abs(r["z"]) for r in corr_report)
    report = {
        "gamma_fit": fit.rate,
        "gamma_theory": gamma_theory,
        "gamma_rel_err": gamma_rel_err,
        "coefficient_products": corr_report,
        "max_abs_z": max_z,
        "pass": bool(gamma_rel_err <= 0.15 and max_z <= 3.0),
    }
    serialize.write_json(output_dir / "rmt_report.json", report)
    return report
