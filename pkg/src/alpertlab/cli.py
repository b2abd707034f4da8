"""Command line entry point: ``alpertlab run <experiment>`` and ``alpertlab list``."""

from __future__ import annotations

import sys

import click

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .experiments import EXPERIMENTS, ConfigError, Params, run

EXIT_PASS, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def load_params(config_path=None, overrides=()) -> Params:
    """Params from an optional TOML file, then ``key=value`` overrides (values parsed as TOML)."""
    values = {}
    if config_path is not None:
        try:
            with open(config_path, "rb") as fh:
                values.update(tomllib.load(fh))
        except (OSError, tomllib.TOMLDecodeError) as exc:
            raise ConfigError(f"cannot read config {config_path}: {exc}") from exc
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        key, raw = item.split("=", 1)
        key = key.strip()
        try:
            values[key] = tomllib.loads(f"v = {raw.strip()}")["v"]
        except tomllib.TOMLDecodeError:
            values[key] = raw.strip()
    return Params.from_mapping(values)


@click.group()
def main():
    """Smooth Alpert wavelet and averaged extension experiments."""


@main.command("list")
def list_cmd():
    """List the available experiments."""
    for name, fn in EXPERIMENTS.items():
        doc = (fn.__doc__ or "").strip().splitlines()[0] if fn.__doc__ else ""
        click.echo(f"{name:20s} {doc}")


@main.command("run")
@click.argument("experiment")
@click.option("--config", "config_path", type=click.Path(dir_okay=False), default=None, help="TOML parameter file.")
@click.option("--set", "overrides", multiple=True, help="Override one parameter, key=value.")
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default="out", show_default=True)
def run_cmd(experiment, config_path, overrides, out_dir):
    """Run EXPERIMENT and write rows.csv, summary.json and config.resolved."""
    try:
        params = load_params(config_path, overrides)
        params.validate(experiment)
        if experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {experiment!r}; see `alpertlab list`")
    except ConfigError as exc:
        click.echo(f"configuration error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)
    try:
        report = run(experiment, params)
    except ConfigError as exc:
        click.echo(f"configuration error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)
    target = report.write(out_dir)
    for c in report.criteria:
        status = "PASS" if c.passed else "FAIL"
        click.echo(f"{status}  {c.name}: {c.measured:.6g} ({c.comparison} {c.threshold:g})")
    click.echo(f"wrote {target}  ({report.wall_time:.1f} s)")
    sys.exit(EXIT_PASS if report.passed else EXIT_FAIL)


if __name__ == "__main__":
    main()
