"""Command-line entry points.

Three subcommands: ``simulate`` runs the Monte Carlo bias/variance study and
can emit tick files, ``estimate`` runs the day-by-day pipeline on two tick
files, ``analyze`` aggregates day results into session reports and the
regression battery.

Every run writes a ``manifest.json`` describing the resolved parameters and
input digests.  The worker count is deliberately not part of the manifest:
results are worker-invariant, and the manifest records only what shapes them.

Exit codes: 0 success, 1 usage error, 2 malformed or unusable input data,
3 numerical or estimation failure.
"""

import configparser
import csv
import dataclasses
import hashlib
import pathlib
import sys
from datetime import date as date_type
from datetime import timedelta

import click
import numpy as np

from . import __version__
from .analysis import regression_battery, session_report
from .errors import CojumpError, DataError, EstimatorError, NumericalError, TransformError
from .estimators import EstimatorSettings
from .ingest import SessionCalendar, load_ticks
from .pipeline import SESSION_NAMES, PipelineSettings, estimate_pair
from .results import (day_results_payload, read_day_results_csv,
                      write_cojump_records_csv, write_day_results_csv, write_json)
from .simulate import (JumpPlan, SimConfig, add_noise, day_tick_series,
                       inject_jumps, next_trading_day, run_experiment, simulate_day)
from ._rng import STREAM_JUMPS, STREAM_NOISE, STREAM_PATH, stream_rng

TABLE_COLUMNS = ("plan", "noise_std", "frequency_seconds", "estimator",
                 "replications", "bias_1e4", "variance_1e4")

_SIM_FLOAT_KEYS = {"beta1", "mean_reversion", "delta_seconds", "daily_vol",
                   "beta0", "gamma1", "gamma2", "mu1", "mu2"}
_SIM_INT_KEYS = {"n_steps", "replications", "seed"}
_JUMP_KEYS = {"cojumps", "idiosyncratic", "size_scale", "timing"}


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def _sha256(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            digest.update(block)
    return digest.hexdigest()


def _write_manifest(out_dir, command: str, params: dict, inputs: dict,
                    outputs: list) -> None:
    manifest = {
        "command": command,
        "version": __version__,
        "params": params,
        "inputs": {str(k): _sha256(v) for k, v in inputs.items()},
        "outputs": sorted(outputs),
    }
    write_json(out_dir / "manifest.json", manifest)


def _write_rows_csv(path, rows, columns) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(row[c]) for c in columns])


def _parse_sessions(spec: str) -> tuple:
    names = tuple(s.strip() for s in spec.split(",") if s.strip())
    bad = [s for s in names if s not in SESSION_NAMES]
    if bad:
        raise click.UsageError(
            f"unknown sessions {bad}; choose from {', '.join(SESSION_NAMES)}")
    if not names:
        raise click.UsageError("no sessions requested")
    return names


def _sim_config_from_ini(path) -> tuple[SimConfig, dict]:
    """Parse an INI simulation config into a SimConfig plus jump-plan fields."""
    parser = configparser.ConfigParser()
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise DataError(f"cannot read config {path}: {exc}") from exc
    except configparser.Error as exc:
        raise DataError(f"malformed config {path}: {exc}") from exc
    unknown_sections = set(parser.sections()) - {"simulation", "jumps"}
    if unknown_sections:
        raise DataError(f"{path}: unknown sections {sorted(unknown_sections)}")

    sim = dict(parser["simulation"]) if parser.has_section("simulation") else {}
    unknown = set(sim) - _SIM_FLOAT_KEYS - _SIM_INT_KEYS
    if unknown:
        raise DataError(f"{path}: unknown simulation keys {sorted(unknown)}")
    try:
        values = {k: (int(v) if k in _SIM_INT_KEYS else float(v))
                  for k, v in sim.items()}
    except ValueError as exc:
        raise DataError(f"{path}: {exc}") from exc

    kwargs = {k: values[k] for k in ("beta1", "mean_reversion", "n_steps",
                                     "delta_seconds", "replications", "seed")
              if k in values}
    if "gamma1" in values or "gamma2" in values:
        kwargs["gamma"] = (values.get("gamma1", -0.3), values.get("gamma2", -0.3))
    if "mu1" in values or "mu2" in values:
        kwargs["mu"] = (values.get("mu1", 0.0), values.get("mu2", 0.0))
    try:
        if "beta0" in values and "daily_vol" not in values:
            config = SimConfig(beta0=values["beta0"], **kwargs)
        else:
            config = SimConfig.calibrated(daily_vol=values.get("daily_vol", 0.01),
                                          **kwargs)
    except EstimatorError as exc:
        raise DataError(f"{path}: {exc}") from exc

    jumps = dict(parser["jumps"]) if parser.has_section("jumps") else {}
    unknown = set(jumps) - _JUMP_KEYS
    if unknown:
        raise DataError(f"{path}: unknown jump keys {sorted(unknown)}")
    plan_fields = {}
    try:
        if "cojumps" in jumps:
            plan_fields["cojumps"] = int(jumps["cojumps"])
        if "idiosyncratic" in jumps:
            plan_fields["idiosyncratic"] = int(jumps["idiosyncratic"])
        if "size_scale" in jumps:
            plan_fields["size_scale"] = float(jumps["size_scale"])
        if "timing" in jumps:
            plan_fields["timing"] = jumps["timing"]
    except ValueError as exc:
        raise DataError(f"{path}: {exc}") from exc
    return config, plan_fields


@click.group(context_settings={"auto_envvar_prefix": "COJUMP"})
@click.version_option(version=__version__, prog_name="cojump")
def cli():
    """Co-jump decomposition of high-frequency price pairs."""


@cli.command()
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False),
              default=None, help="INI file with [simulation] and [jumps] sections.")
@click.option("--replications", type=click.IntRange(min=2), default=None,
              help="Monte Carlo days per cell.")
@click.option("--seed", type=int, default=None, envvar="COJUMP_SEED",
              help="Base seed for all streams.")
@click.option("--noise", "noise_stds", type=click.FloatRange(min=0.0), multiple=True,
              help="Observation noise levels (repeatable; default 0 and 0.0015).")
@click.option("--frequency", "frequencies", type=click.FloatRange(min=0.0, min_open=True),
              multiple=True,
              help="Sampling intervals in seconds (repeatable; default 60 300 1800 3600).")
@click.option("--size-scale", type=click.FloatRange(min=0.0), default=None,
              help="Jump size multiplier applied to the jump plans.")
@click.option("--timing", type=click.Choice(["fixed", "poisson"]), default=None,
              help="Jump count scheme for the jump plans.")
@click.option("--emit-ticks", type=click.IntRange(min=0), default=0,
              help="Also write tick files covering this many trading days.")
@click.option("--emit-plan", type=click.Choice(["none", "cojump", "idiosyncratic"]),
              default="cojump", help="Jump plan used for emitted tick days.")
@click.option("--emit-noise", type=click.FloatRange(min=0.0), default=0.0,
              help="Observation noise for emitted ticks.")
@click.option("--start-date", type=str, default="2010-01-04",
              help="First trading day for emitted ticks (ISO date).")
@click.option("--workers", type=click.IntRange(min=1), default=1, envvar="COJUMP_WORKERS",
              help="Worker processes; results do not depend on this.")
@click.option("--out", "out_dir", required=True,
              type=click.Path(file_okay=False), help="Output directory.")
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="csv",
              envvar="COJUMP_FORMAT", help="Table format.")
def simulate(config_path, replications, seed, noise_stds, frequencies,
             size_scale, timing, emit_ticks, emit_plan, emit_noise,
             start_date, workers, out_dir, fmt):
    """Run the Monte Carlo study: bias/variance of all estimators over a
    grid of jump plans, noise levels, and sampling frequencies."""
    out = pathlib.Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    if config_path is not None:
        config, plan_fields = _sim_config_from_ini(config_path)
    else:
        config, plan_fields = SimConfig.calibrated(), {}
    if size_scale is not None:
        plan_fields["size_scale"] = size_scale
    if timing is not None:
        plan_fields["timing"] = timing
    common = {k: plan_fields[k] for k in ("size_scale", "timing") if k in plan_fields}
    plans = {
        "none": JumpPlan(),
        "cojump": JumpPlan(cojumps=plan_fields.get("cojumps", 1), **common),
        "idiosyncratic": JumpPlan(
            idiosyncratic=plan_fields.get("idiosyncratic", 1), **common),
    }
    stds = tuple(noise_stds) if noise_stds else (0.0, 0.0015)
    freqs = tuple(frequencies) if frequencies else (60.0, 300.0, 1800.0, 3600.0)
    reps = config.replications if replications is None else replications
    seed_val = config.seed if seed is None else seed
    if reps < 2:
        raise click.UsageError("need at least 2 replications")

    rows = run_experiment(config, plans, noise_stds=stds, frequencies=freqs,
                          replications=reps, seed=seed_val, workers=workers)

    outputs = []
    if fmt == "csv":
        _write_rows_csv(out / "table.csv", rows, TABLE_COLUMNS)
        outputs.append("table.csv")
    else:
        write_json(out / "table.json", rows)
        outputs.append("table.json")

    if emit_ticks > 0:
        outputs.extend(_emit_tick_days(out, config, plans[emit_plan], emit_noise,
                                       seed_val, emit_ticks, start_date))

    params = {
        "replications": int(reps),
        "seed": int(seed_val),
        "noise_stds": [float(s) for s in stds],
        "frequencies": [float(f) for f in freqs],
        "plans": {name: dataclasses.asdict(plan) for name, plan in plans.items()},
        "model": {
            "mu": list(config.mu), "beta0": config.beta0, "beta1": config.beta1,
            "mean_reversion": config.mean_reversion, "gamma": list(config.gamma),
            "n_steps": config.n_steps, "delta_seconds": config.delta_seconds,
        },
        "emit_ticks": int(emit_ticks),
        "emit_plan": emit_plan if emit_ticks else None,
        "emit_noise": float(emit_noise) if emit_ticks else None,
        "start_date": start_date if emit_ticks else None,
        "format": fmt,
    }
    inputs = {"config": config_path} if config_path else {}
    _write_manifest(out, "simulate", params, inputs, outputs + ["manifest.json"])
    click.echo(f"wrote {', '.join(sorted(outputs))} to {out}")


def _emit_tick_days(out, config: SimConfig, plan: JumpPlan, noise_std: float,
                    seed: int, n_days: int, start_date: str) -> list:
    """Write tick CSVs for consecutive trading days drawn from the model.

    Day r reuses the experiment's diffusion stream for replication r, so an
    emitted day equals the corresponding Monte Carlo day.
    """
    calendar = SessionCalendar()
    try:
        label = date_type.fromisoformat(start_date)
    except ValueError as exc:
        raise click.UsageError(f"invalid --start-date {start_date!r}: {exc}") from exc
    label = next_trading_day(label, calendar)
    ids = ("a1", "a2")
    chunks: dict[str, list] = {i: [] for i in ids}
    for r in range(n_days):
        day = simulate_day(config, stream_rng(seed, r, STREAM_PATH), index=r)
        day = inject_jumps(day, plan, stream_rng(seed, r, STREAM_JUMPS))
        day = add_noise(day, noise_std, stream_rng(seed, r, STREAM_NOISE, 0))
        series_a, series_b = day_tick_series(day, label, calendar, ids)
        chunks[ids[0]].append(series_a)
        chunks[ids[1]].append(series_b)
        label = next_trading_day(label + timedelta(days=1), calendar)

    written = []
    for asset in ids:
        name = f"ticks_{asset}.csv"
        with open(out / name, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["timestamp", "price"])
            for series in chunks[asset]:
                for ts, price in zip(series.timestamps, series.prices):
                    writer.writerow([int(ts), repr(float(price))])
        written.append(name)
    return written


@cli.command()
@click.argument("ticks_a", type=click.Path(exists=True, dir_okay=False))
@click.argument("ticks_b", type=click.Path(exists=True, dir_okay=False))
@click.option("--calendar", "calendar_path", type=click.Path(exists=True, dir_okay=False),
              default=None, help="INI session calendar; built-in defaults otherwise.")
@click.option("--sessions", default=",".join(SESSION_NAMES), envvar="COJUMP_SESSIONS",
              help="Comma-separated subset of asia,eu,us,total.")
@click.option("--alpha", type=click.FloatRange(min=0.0, max=1.0, min_open=True),
              default=0.05, envvar="COJUMP_ALPHA",
              help="Test level for the co-jump test.")
@click.option("--bootstrap-reps", type=click.IntRange(min=2), default=999,
              envvar="COJUMP_BOOTSTRAP_REPS",
              help="Bootstrap replicates per window.")
@click.option("--grids", type=click.IntRange(min=2), default=None,
              help="Subgrid count override for the two-scale estimators.")
@click.option("--levels", type=click.IntRange(min=1), default=None,
              help="Decomposition depth override.")
@click.option("--min-returns", type=click.IntRange(min=4), default=4,
              help="Skip windows with fewer refresh returns.")
@click.option("--seed", type=int, default=0, envvar="COJUMP_SEED",
              help="Base seed for bootstrap streams.")
@click.option("--workers", type=click.IntRange(min=1), default=1, envvar="COJUMP_WORKERS",
              help="Worker processes; results do not depend on this.")
@click.option("--out", "out_dir", required=True,
              type=click.Path(file_okay=False), help="Output directory.")
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="csv",
              envvar="COJUMP_FORMAT", help="Output format.")
def estimate(ticks_a, ticks_b, calendar_path, sessions, alpha, bootstrap_reps,
             grids, levels, min_returns, seed, workers, out_dir, fmt):
    """Estimate covariation matrices and test for co-jumps, one row per
    trading day and session, from two tick CSV files."""
    out = pathlib.Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    calendar = (SessionCalendar.from_file(calendar_path)
                if calendar_path else SessionCalendar())
    session_names = _parse_sessions(sessions)
    settings = PipelineSettings(
        sessions=session_names, alpha=alpha, bootstrap_reps=bootstrap_reps,
        seed=seed, min_returns=min_returns,
        estimator=EstimatorSettings(grids=grids, levels=levels),
    )
    series_a = load_ticks(ticks_a, calendar=calendar)
    series_b = load_ticks(ticks_b, calendar=calendar)
    if series_a.asset_id == series_b.asset_id:
        series_a = dataclasses.replace(series_a, asset_id=series_a.asset_id + "_1")
        series_b = dataclasses.replace(series_b, asset_id=series_b.asset_id + "_2")

    results, records, skipped = estimate_pair(series_a, series_b, calendar,
                                              settings, workers=workers)

    outputs = []
    if fmt == "csv":
        write_day_results_csv(out / "days.csv", results)
        write_cojump_records_csv(out / "cojumps.csv", records)
        outputs += ["days.csv", "cojumps.csv"]
    else:
        write_json(out / "days.json", day_results_payload(results))
        write_json(out / "cojumps.json", [
            {"date": rec.date.isoformat() if rec.date else None,
             "session": rec.session, "index": rec.index,
             "size_1": rec.size_1, "size_2": rec.size_2,
             "direction": rec.direction}
            for rec in records])
        outputs += ["days.json", "cojumps.json"]
    with open(out / "skipped.txt", "w") as fh:
        for line in skipped:
            fh.write(line + "\n")
    outputs.append("skipped.txt")

    params = {
        "sessions": list(session_names),
        "alpha": float(alpha),
        "bootstrap_reps": int(bootstrap_reps),
        "grids": grids, "levels": levels,
        "min_returns": int(min_returns),
        "seed": int(seed),
        "calendar": "file" if calendar_path else "default",
        "format": fmt,
    }
    inputs = {"ticks_a": ticks_a, "ticks_b": ticks_b}
    if calendar_path:
        inputs["calendar"] = calendar_path
    _write_manifest(out, "estimate", params, inputs, outputs + ["manifest.json"])
    click.echo(f"{len(results)} day/session rows, {len(records)} co-jump records, "
               f"{len(skipped)} windows skipped -> {out}")


@cli.command()
@click.argument("days_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--min-days", type=click.IntRange(min=1), default=10,
              help="Minimum usable days per session for the regressions.")
@click.option("--out", "out_dir", required=True,
              type=click.Path(file_okay=False), help="Output directory.")
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="csv",
              envvar="COJUMP_FORMAT", help="Report format.")
def analyze(days_file, min_days, out_dir, fmt):
    """Aggregate a day-results CSV into session summaries, yearly ratios,
    and the regression battery."""
    out = pathlib.Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    results = read_day_results_csv(days_file)
    if not results:
        raise DataError(f"{days_file}: no day results")
    report = session_report(results)
    battery = regression_battery(results, min_days=min_days)

    outputs = []
    if fmt == "json":
        write_json(out / "report.json", {"sessions": report["sessions"],
                                         "yearly": report["yearly"],
                                         "regressions": battery})
        outputs.append("report.json")
    else:
        session_cols = ("session", "days", "cojump_days", "rejected_days",
                        "cj12_sum", "qv12_sum", "cj_share_pct",
                        "total_corr_unconditional", "cont_corr_unconditional",
                        "median_corr_gap")
        rows = [{"session": name, **entry}
                for name, entry in report["sessions"].items()]
        _write_rows_csv(out / "report_sessions.csv", rows, session_cols)

        yearly_cols = ("session", "year", "days", "cojump_days",
                       "cj12_sum", "qv12_sum", "cj_share_pct")
        yearly_rows = []
        for name, years in report["yearly"].items():
            for year, cell in years.items():
                yearly_rows.append({"session": name, "year": year, **cell})
        _write_rows_csv(out / "report_yearly.csv", yearly_rows, yearly_cols)

        reg_cols = ("session", "method", "intercept", "slope", "wald",
                    "wald_pvalue", "r_squared", "n", "skipped")
        reg_rows = []
        for name, entry in sorted(battery.items()):
            if "skipped" in entry:
                reg_rows.append({"session": name, "method": "", "intercept": "",
                                 "slope": "", "wald": "", "wald_pvalue": "",
                                 "r_squared": "", "n": "", "skipped": entry["skipped"]})
                continue
            for method, fit in entry.items():
                if "skipped" in fit:
                    reg_rows.append({"session": name, "method": method,
                                     "intercept": "", "slope": "", "wald": "",
                                     "wald_pvalue": "", "r_squared": "", "n": "",
                                     "skipped": fit["skipped"]})
                else:
                    reg_rows.append({
                        "session": name, "method": method,
                        "intercept": fit["coef"][0], "slope": fit["coef"][1],
                        "wald": fit["wald"], "wald_pvalue": fit["wald_pvalue"],
                        "r_squared": fit["r_squared"], "n": fit["n"], "skipped": "",
                    })
        _write_rows_csv(out / "report_regressions.csv", reg_rows, reg_cols)
        outputs += ["report_sessions.csv", "report_yearly.csv",
                    "report_regressions.csv"]

    params = {"min_days": int(min_days), "format": fmt}
    _write_manifest(out, "analyze", params, {"days": days_file},
                    outputs + ["manifest.json"])
    click.echo(f"wrote {', '.join(sorted(outputs))} to {out}")


def main(argv=None) -> int:
    """Entry point with the documented exit-code mapping."""
    try:
        cli.main(args=argv, standalone_mode=False)
    except click.exceptions.Exit as exc:
        return int(exc.exit_code)
    except click.Abort:
        click.echo("aborted", err=True)
        return 1
    except click.UsageError as exc:
        exc.show()
        return 1
    except click.ClickException as exc:
        exc.show()
        return 1
    except (DataError,) as exc:
        click.echo(f"data error: {exc}", err=True)
        return 2
    except (TransformError, EstimatorError, NumericalError) as exc:
        click.echo(f"estimation error: {exc}", err=True)
        return 3
    except CojumpError as exc:
        click.echo(f"error: {exc}", err=True)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
