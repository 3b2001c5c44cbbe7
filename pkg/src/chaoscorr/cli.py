"""Command-line front end.

Subcommands: simulate, compare, fit-lambda, rmt-verify. Heavy imports are
deferred until after thread setup so that --threads can pin the BLAS pool
before numpy is first loaded.

Exit codes: 0 success, 1 usage/config error, 2 validation error,
3 numeric failure, 4 failed acceptance check (rmt-verify z-score).
"""

from __future__ import annotations

import os
import sys

import click

CACHE_ENV = "CHAOSCORR_CACHE_DIR"


def _set_threads(n: int | None) -> None:
    if n is None:
        return
    if "numpy" in sys.modules:
        click.echo("warning: numpy already imported; --threads may have no effect", err=True)
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS",
                "NUMEXPR_NUM_THREADS"):
        os.environ[var] = str(n)


def _load(config_path, seed):
    from chaoscorr.config import load_config

    config = load_config(config_path)
    if seed is not None:
        config.seed = seed
    return config


def _resolve_cache(cache_dir):
    return cache_dir if cache_dir is not None else os.environ.get(CACHE_ENV)


def _run(command, config_path, output_dir, cache_dir, seed, threads, emit_plot_data):
    _set_threads(threads)
    from chaoscorr.config import ConfigError
    from chaoscorr.errors import CacheError, NumericError, ValidationError

    try:
        config = _load(config_path, seed)
        from chaoscorr import pipeline

        out = output_dir if output_dir is not None else config.output_dir
        cache = _resolve_cache(cache_dir)
        if command == "simulate":
            result = pipeline.run_simulate(config, out, cache)
            if emit_plot_data:
                _emit_plot_data(out)
        elif command == "compare":
            result = pipeline.run_compare(config, out, cache)
        elif command == "fit-lambda":
            result = pipeline.run_fit_lambda(config, out, cache)
        elif command == "rmt-verify":
            result = pipeline.run_rmt_verify(config, out, cache)
            _echo_rmt(result)
            if not result["pass"]:
                sys.exit(4)
        else:  # pragma: no cover - guarded by click
            raise ValidationError(f"unknown command {command}")
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(1)
    except CacheError as exc:
        click.echo(f"cache error: {exc}", err=True)
        sys.exit(3)
    except NumericError as exc:
        click.echo(f"numeric error: {exc}", err=True)
        sys.exit(3)
    except ValidationError as exc:
        click.echo(f"validation error: {exc}", err=True)
        sys.exit(2)
    click.echo(f"{command}: wrote results to {out}")
    return result


def _echo_rmt(report: dict) -> None:
    click.echo(
        f"linewidth: fit={report['gamma_fit']:.6g} theory={report['gamma_theory']:.6g} "
        f"rel_err={report['gamma_rel_err']:.3f}"
    )
    click.echo(f"coefficient products: max |z| = {report['max_abs_z']:.2f}")


def _emit_plot_data(output_dir, max_points: int = 101) -> None:
    """Write downsampled copies of every series CSV for plotting tools."""
    from pathlib import Path

    out = Path(output_dir)
    for path in sorted(out.glob("*.csv")):
        if path.name.endswith("_plot.csv"):
            continue
        lines = path.read_text().splitlines()
        header = [ln for ln in lines if ln.startswith("#")]
        body = [ln for ln in lines if not ln.startswith("#")]
        columns, rows = body[0], body[1:]
        stride = max(1, (len(rows) + max_points - 1) // max_points)
        kept = rows[::stride]
        target = path.with_name(path.stem + "_plot.csv")
        target.write_text("\n".join(header + [columns] + kept) + "\n")


def _common_options(f):
    f = click.option("--config", "config_path", required=True,
                     type=click.Path(), help="JSON run configuration.")(f)
    f = click.option("--output-dir", type=click.Path(), default=None,
                     help="Override the config's output directory.")(f)
    f = click.option("--cache-dir", type=click.Path(), default=None,
                     help=f"Eigendecomposition cache (or ${CACHE_ENV}).")(f)
    f = click.option("--seed", type=int, default=None, help="Override the config seed.")(f)
    f = click.option("--threads", type=int, default=None,
                     help="BLAS/OpenMP thread count (set before numpy loads).")(f)
    f = click.option("--emit-plot-data", is_flag=True, default=False,
                     help="Also write downsampled *_plot.csv series.")(f)
    return f


@click.group()
@click.version_option(package_name="chaoscorr")
def main():
    """Exact correlation functions vs chaotic wave-function envelope theory."""


def _make_command(name):
    @main.command(name=name)
    @_common_options
    def cmd(config_path, output_dir, cache_dir, seed, threads, emit_plot_data):
        _run(name, config_path, output_dir, cache_dir, seed, threads, emit_plot_data)

    cmd.__doc__ = {
        "simulate": "Compute exact correlator series and write CSVs + manifest.",
        "compare": "Overlay exact series with analytic envelope predictions.",
        "fit-lambda": "Extract and fit the chaotic wave-function profile.",
        "rmt-verify": "Random-matrix checks: linewidth and coefficient statistics.",
    }[name]
    return cmd


for _name in ("simulate", "compare", "fit-lambda", "rmt-verify"):
    _make_command(_name)


if __name__ == "__main__":
    main()
