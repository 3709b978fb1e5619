"""Command-line driver: ``tilewave run --config path [--suite S] [--grid-m M] [--seed N] [--jobs J] [--plot]``."""
from __future__ import annotations

import csv
import inspect
import json
import os
import sys
from pathlib import Path

import click
import numpy as np

from .suites import SUITES, run_suite

GENERAL_KEYS = {"suite", "grid_m", "seed", "jobs", "outdir", "plot", "nu"}
EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class ConfigError(Exception):
    pass


def load_config(path) -> dict:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        cfg = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a flat JSON object")
    return cfg


def resolve(cfg: dict, **overrides) -> dict:
    """Merge flag overrides into the file config and validate it."""
    cfg = dict(cfg)
    cfg.update({k: v for k, v in overrides.items() if v is not None})
    suite = cfg.get("suite")
    if suite not in SUITES:
        raise ConfigError(f"unknown suite {suite!r}; choose from {', '.join(SUITES)}")
    params = set(inspect.signature(SUITES[suite]).parameters) - {"_"}
    unknown = set(cfg) - GENERAL_KEYS - params
    if unknown:
        raise ConfigError(f"unknown keys for {suite}: {', '.join(sorted(unknown))}")
    if "grid_m" in cfg and not 6 <= int(cfg["grid_m"]) <= 14:
        raise ConfigError("grid_m must lie in [6, 14]")
    if int(cfg.get("nu", 8)) != 8:
        raise ConfigError("suites are built for nu = 8")
    return cfg


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if v is None:
        return ""
    return str(v)


def write_csv(rows: list, path) -> None:
    keys = []
    for r in rows:
        keys.extend(k for k in r if k not in keys)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(keys)
        for r in rows:
            w.writerow([_fmt(r.get(k)) for k in keys])


@click.group()
def main():
    """Time-frequency verification suites."""


@main.command()
@click.option("--config", "config_path", required=True, help="JSON config file with flat keys.")
@click.option("--suite", default=None, help="Suite name; overrides the config.")
@click.option("--grid-m", "grid_m", type=int, default=None, help="Grid exponent m (L = 2^m).")
@click.option("--seed", type=int, default=None)
@click.option("--jobs", type=int, default=None, help="Worker processes.")
@click.option("--plot/--no-plot", default=None, help="Also write an SVG plot.")
@click.option("--outdir", default=None, help="Output directory (default $TILEWAVE_OUTDIR or .).")
def run(config_path, suite, grid_m, seed, jobs, plot, outdir):
    """Run one suite, write <outdir>/<suite>.csv and optionally <suite>.svg."""
    try:
        cfg = resolve(load_config(config_path), suite=suite, grid_m=grid_m, seed=seed, jobs=jobs,
                      plot=plot, outdir=outdir)
    except ConfigError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_USAGE)
    name = cfg.pop("suite")
    out = Path(cfg.pop("outdir", None) or os.environ.get("TILEWAVE_OUTDIR", "."))
    want_plot = bool(cfg.pop("plot", False))
    cfg.pop("nu", None)
    out.mkdir(parents=True, exist_ok=True)
    res = run_suite(name, **cfg)
    csv_path = out / f"{name}.csv"
    write_csv(res.rows, csv_path)
    click.echo(f"{name}: {len(res.rows)} rows -> {csv_path} ({res.seconds:.1f} s)")
    if want_plot:
        from .plotting import plot_rows

        svg = out / f"{name}.svg"
        if plot_rows(name, res.rows, svg):
            click.echo(f"plot -> {svg}")
    for c in res.checks:
        click.echo(f"  {'PASS' if c.passed else 'FAIL'} {c.name}: {c.value:.6g} ({c.bound})")
    if res.exploratory:
        click.echo("exploratory suite: measured, not asserted")
        sys.exit(EXIT_OK)
    bad = res.failures()
    for c in bad:
        where = f"row {c.row}: {res.rows[c.row]}" if c.row is not None and 0 <= c.row < len(res.rows) else "summary"
        click.echo(f"failed {c.name} at {where}", err=True)
    sys.exit(EXIT_FAIL if bad else EXIT_OK)


if __name__ == "__main__":
    main()
