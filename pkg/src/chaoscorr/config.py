"""Run configuration: JSON file with nested sections, strictly validated.

Unknown keys are hard errors (a silently ignored typo would invalidate a
physics run). Every field has a default except the model choice.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from chaoscorr.errors import ValidationError
from chaoscorr.models import ChainParams, InitialStateSpec, RmtParams


class ConfigError(ValidationError):
    """Bad configuration file; message carries the offending field path."""


def _require_keys(section: dict, allowed: set[str], path: str) -> None:
    unknown = set(section) - allowed
    if unknown:
        raise ConfigError(f"{path}: unknown key(s) {sorted(unknown)}")


def _get(section: dict, key: str, types, default, path: str):
    value = section.get(key, default)
    if value is None:
        return None
    if not isinstance(value, types) or isinstance(value, bool) and types is not bool:
        raise ConfigError(f"{path}.{key}: expected {types}, got {type(value).__name__}")
    return value


@dataclass
class CorrelatorRequest:
    kind: str
    observables: tuple[str, ...]
    t2: float = 0.0

    KINDS = ("one_point", "two_point", "four_point", "otoc", "squared_commutator")
    ARITY = {"one_point": 1, "two_point": 2, "four_point": 4, "otoc": 2, "squared_commutator": 2}


@dataclass
class LambdaExtraction:
    window_fraction: float = 0.2
    n_bins: int = 101
    fit_shapes: tuple[str, ...] = ("lorentzian", "gaussian")
    fit_window_scale: float = 5.0


@dataclass
class RmtVerify:
    n_realizations: int = 20
    corr_realizations: int = 5000
    corr_dims: tuple[int, ...] = (120, 200)
    n_index_tuples: int = 5


@dataclass
class RunConfig:
    model: ChainParams | RmtParams
    initial_state: InitialStateSpec
    n_bath_realizations: int
    observables: tuple[str, ...]
    correlators: tuple[CorrelatorRequest, ...]
    t_max: float
    n_points: int
    lambda_extraction: LambdaExtraction
    rmt_verify: RmtVerify
    rms_window: tuple[float, float]
    seed: int
    output_dir: str
    de_tolerance: float
    raw: dict = field(repr=False, default_factory=dict)


def _parse_model(section, path="model"):
    if not isinstance(section, dict) or "type" not in section:
        raise ConfigError(f"{path}: must be an object with a 'type' key")
    kind = section["type"]
    if kind == "spin_chain":
        _require_keys(
            section,
            {"type", "n_sites", "bz_s", "bx_s", "bx_b", "jx_b", "jz_i", "jx_i", "r1", "r2"},
            path,
        )
        try:
            return ChainParams(
                n_sites=_get(section, "n_sites", int, 12, path),
                bz_s=float(_get(section, "bz_s", (int, float), 0.4, path)),
                bx_s=float(_get(section, "bx_s", (int, float), 0.4, path)),
                bx_b=float(_get(section, "bx_b", (int, float), 0.3, path)),
                jx_b=float(_get(section, "jx_b", (int, float), 0.7, path)),
                jz_i=float(_get(section, "jz_i", (int, float), 0.2, path)),
                jx_i=float(_get(section, "jx_i", (int, float), 0.1, path)),
                r1=_get(section, "r1", int, 5, path),
                r2=_get(section, "r2", int, 10, path),
            )
        except ValidationError as exc:
            raise ConfigError(f"{path}: {exc}") from exc
    if kind == "deutsch":
        _require_keys(section, {"type", "dim", "omega", "g"}, path)
        try:
            return RmtParams(
                dim=_get(section, "dim", int, 400, path),
                omega=float(_get(section, "omega", (int, float), 0.01, path)),
                g=float(_get(section, "g", (int, float), 0.1, path)),
            )
        except ValidationError as exc:
            raise ConfigError(f"{path}: {exc}") from exc
    raise ConfigError(f"{path}.type: unknown model type {kind!r}")


def _parse_initial_state(section, n_sites: int, seed: int):
    path = "initial_state"
    _require_keys(
        section, {"kind", "index", "seed", "accept_window", "n_bath_realizations"}, path
    )
    kind = _get(section, "kind", str, "h0_eigenstate", path)
    raw_window = section.get("accept_window", 0.05)
    window = None if raw_window is None else float(raw_window)
    try:
        spec = InitialStateSpec(
            kind=kind,
            n_sites=n_sites,
            index=_get(section, "index", int, 1, path),
            seed=_get(section, "seed", int, seed, path),
            accept_window=window,
        )
    except ValidationError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    n_real = _get(section, "n_bath_realizations", int, 50 if kind == "random_product" else 1, path)
    if n_real < 1:
        raise ConfigError(f"{path}.n_bath_realizations: must be >= 1")
    return spec, n_real


def _parse_correlators(entries, observables, path="correlators"):
    if entries is None:
        entries = [{"kind": "one_point", "observables": [name]} for name in observables]
    requests = []
    for i, entry in enumerate(entries):
        here = f"{path}[{i}]"
        if not isinstance(entry, dict):
            raise ConfigError(f"{here}: must be an object")
        _require_keys(entry, {"kind", "observables", "t2"}, here)
        kind = _get(entry, "kind", str, "one_point", here)
        if kind not in CorrelatorRequest.KINDS:
            raise ConfigError(f"{here}.kind: unknown correlator kind {kind!r}")
        obs = entry.get("observables")
        if not isinstance(obs, list) or not all(isinstance(o, str) for o in obs):
            raise ConfigError(f"{here}.observables: expected a list of names")
        arity = CorrelatorRequest.ARITY[kind]
        if len(obs) != arity:
            raise ConfigError(f"{here}.observables: {kind} needs {arity} observable(s)")
        requests.append(
            CorrelatorRequest(
                kind=kind,
                observables=tuple(obs),
                t2=float(_get(entry, "t2", (int, float), 0.0, here)),
            )
        )
    return tuple(requests)


def parse_config(data: dict) -> RunConfig:
    if not isinstance(data, dict):
        raise ConfigError("top level: expected a JSON object")
    _require_keys(
        data,
        {
            "model", "initial_state", "observables", "correlators", "time_grid",
            "lambda_extraction", "rmt_verify", "comparison", "seed", "output_dir",
            "de_tolerance",
        },
        "top level",
    )
    if "model" not in data:
        raise ConfigError("top level: missing required section 'model'")
    model = _parse_model(data["model"])
    seed = _get(data, "seed", int, 1234, "top level")

    n_sites = model.n_sites if isinstance(model, ChainParams) else 0
    spec, n_bath = _parse_initial_state(data.get("initial_state", {}), n_sites, seed)

    observables = data.get("observables", ["sigma_x(1)", "sigma_z(1)"])
    if not isinstance(observables, list) or not all(isinstance(o, str) for o in observables):
        raise ConfigError("observables: expected a list of names")
    correlators = _parse_correlators(data.get("correlators"), observables)
    if isinstance(model, ChainParams):
        from chaoscorr.models import named_observable

        all_names = set(observables).union(*(c.observables for c in correlators))
        for name in sorted(all_names):
            try:
                named_observable(name, model.n_sites)
            except ValidationError as exc:
                raise ConfigError(f"observables: {exc}") from exc

    grid = data.get("time_grid", {})
    _require_keys(grid, {"t_max", "n_points"}, "time_grid")
    t_max = float(_get(grid, "t_max", (int, float), 40.0, "time_grid"))
    n_points = _get(grid, "n_points", int, 401, "time_grid")
    if t_max <= 0 or n_points < 2:
        raise ConfigError("time_grid: t_max must be > 0 and n_points >= 2")

    lam = data.get("lambda_extraction", {})
    _require_keys(
        lam, {"window_fraction", "n_bins", "fit_shapes", "fit_window_scale"}, "lambda_extraction"
    )
    shapes = lam.get("fit_shapes", ["lorentzian", "gaussian"])
    if not isinstance(shapes, list) or any(s not in ("lorentzian", "gaussian") for s in shapes):
        raise ConfigError("lambda_extraction.fit_shapes: entries must be lorentzian|gaussian")
    lambda_extraction = LambdaExtraction(
        window_fraction=float(_get(lam, "window_fraction", (int, float), 0.2, "lambda_extraction")),
        n_bins=_get(lam, "n_bins", int, 101, "lambda_extraction"),
        fit_shapes=tuple(shapes),
        fit_window_scale=float(_get(lam, "fit_window_scale", (int, float), 5.0, "lambda_extraction")),
    )

    rv = data.get("rmt_verify", {})
    _require_keys(
        rv,
        {"n_realizations", "corr_realizations", "corr_dims", "n_index_tuples"},
        "rmt_verify",
    )
    dims = rv.get("corr_dims", [120, 200])
    if not isinstance(dims, list) or not all(isinstance(d, int) for d in dims):
        raise ConfigError("rmt_verify.corr_dims: expected a list of integers")
    rmt_verify = RmtVerify(
        n_realizations=_get(rv, "n_realizations", int, 20, "rmt_verify"),
        corr_realizations=_get(rv, "corr_realizations", int, 5000, "rmt_verify"),
        corr_dims=tuple(dims),
        n_index_tuples=_get(rv, "n_index_tuples", int, 5, "rmt_verify"),
    )
    if rmt_verify.n_realizations < 1:
        raise ConfigError("rmt_verify.n_realizations: must be >= 1")

    comparison = data.get("comparison", {})
    _require_keys(comparison, {"rms_window"}, "comparison")
    window = comparison.get("rms_window", [0.0, t_max])
    if not (isinstance(window, list) and len(window) == 2):
        raise ConfigError("comparison.rms_window: expected [t_lo, t_hi]")

    return RunConfig(
        model=model,
        initial_state=spec,
        n_bath_realizations=n_bath,
        observables=tuple(observables),
        correlators=correlators,
        t_max=t_max,
        n_points=n_points,
        lambda_extraction=lambda_extraction,
        rmt_verify=rmt_verify,
        rms_window=(float(window[0]), float(window[1])),
        seed=seed,
        output_dir=str(data.get("output_dir", "out")),
        de_tolerance=float(_get(data, "de_tolerance", (int, float), 1e-8, "top level")),
        raw=data,
    )


def load_config(path) -> RunConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file {path} does not exist")
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    return parse_config(data)
