"""Command line front end: ``threelevel {simulate,stationary,check,sweep}``.

Exit codes: 0 success, 2 invalid input, 3 numerical failure. Failures print
one ``error kind=... exit=... message=...`` line to stderr.
"""
from __future__ import annotations

import argparse
import csv
import io
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from .errors import ModelError
from .kinetics import fmt, integrate, stationarity_reached
from .scenario import (Scenario, SweepSpec, default_config_path, load_config,
                       scenario_from_dict, sweep_from_dict)
from .stationary import (REPORT_COLUMNS, StationaryReport, emission_condition,
                         emission_condition_beta, emission_margin, shared_beta,
                         stationary_report)

def _kv(d: dict) -> str:
    return "".join(f"{k}={v}\n" for k, v in d.items())


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def run_simulate(sc: Scenario, out: str | None = None) -> dict:
    """Integrate, write the trajectory CSV and return the summary fields."""
    traj = integrate(sc.atom, sc.spectra, sc.initial, sc.t_end, sc.dt, sc.sample_every)
    path = out or sc.trajectory_path or "trajectory.csv"
    with open(path, "w", newline="") as fh:
        traj.to_csv(fh)

    if len(traj) == 1:
        status = "not evaluated"
    else:
        status = "reached" if stationarity_reached(traj, sc.tol)[0] else "not reached"
    p = traj.final_state
    fl = traj.flux_record()
    summary = {
        "stationarity": status,
        "tol": fmt(sc.tol),
        "t_end": fmt(sc.t_end),
        "dt": fmt(traj.dt),
        "samples": str(len(traj)),
        "P1": fmt(p[0]), "P2": fmt(p[1]), "P3": fmt(p[2]),
        "f21": fmt(fl.f21), "f31": fmt(fl.f31), "f32": fmt(fl.f32),
        "dn_lr_rate": fmt(fl.dn_lr), "dn_ud_rate": fmt(fl.dn_ud),
        "dn_lr": fmt(traj.dn_lr[-1]), "dn_ud": fmt(traj.dn_ud[-1]),
        "max_energy_violation": fmt(traj.energy_violation()),
        "max_simplex_drift": fmt(traj.max_simplex_drift),
        "max_renormalization": fmt(traj.max_renormalization),
        "trajectory": str(path),
    }
    return summary


def run_stationary(sc: Scenario) -> StationaryReport:
    return stationary_report(sc.atom, sc.spectra)


def run_check(sc: Scenario) -> dict:
    r = sc.rates
    fn = shared_beta(sc.spectra, sc.atom)
    return {
        "condition_rate_form": "true" if emission_condition(r) else "false",
        "condition_beta_form": "n/a" if fn is None else
        ("true" if emission_condition_beta(fn, sc.atom) else "false"),
        "log_margin": fmt(emission_margin(r)),
    }


def _sweep_point(spec: SweepSpec, values) -> list[str]:
    swept = [fmt(v) for v in values]
    try:
        rep = run_stationary(scenario_from_dict(spec.config_at(values)))
    except ModelError as exc:
        return swept + [""] * len(REPORT_COLUMNS) + [f"{exc.slug}: {exc}"]
    return swept + rep.csv_row() + [""]


def sweep_header(spec: SweepSpec) -> list[str]:
    return [p for p, _ in spec.params] + list(REPORT_COLUMNS) + ["error"]


def run_sweep(spec: SweepSpec, workers: int | None = None) -> str:
    """Aggregated CSV text, one row per grid point in grid order."""
    n = workers or spec.workers
    pts = spec.points()
    if n == 1:
        rows = [_sweep_point(spec, v) for v in pts]
    else:
        with ThreadPoolExecutor(max_workers=n) as pool:
            rows = list(pool.map(lambda v: _sweep_point(spec, v), pts))
    return _csv(sweep_header(spec), rows)


def _emit(text: str, out: str | None):
    if out and out != "-":
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="threelevel", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name, help_ in (("simulate", "integrate the rate equations"),
                        ("stationary", "stationary state report"),
                        ("check", "continuous-emission condition only"),
                        ("sweep", "stationary reports over a parameter grid")):
        s = sub.add_parser(name, help=help_)
        s.add_argument("--config", default=None,
                       help="scenario YAML (default: bundled scenario)")
        s.add_argument("--out", default=None, help="output path")
        s.add_argument("--format", choices=("csv", "txt"), default=None)
        s.add_argument("--workers", type=int, default=None)
        s.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    cfg_path = args.config or default_config_path()
    try:
        cfg = load_config(cfg_path)
        if args.command == "sweep":
            spec = sweep_from_dict(cfg)
            _emit(run_sweep(spec, args.workers), args.out or spec.out)
            return 0

        sc = scenario_from_dict(cfg)
        fmt_ = args.format or "txt"
        if args.command == "simulate":
            summary = run_simulate(sc, args.out)
            text = _kv(summary) if fmt_ == "txt" else _csv(summary.keys(), [summary.values()])
            _emit(text, sc.report_path)
        elif args.command == "stationary":
            rep = run_stationary(sc)
            text = rep.to_text() if fmt_ == "txt" else _csv(REPORT_COLUMNS, [rep.csv_row()])
            _emit(text, args.out or sc.report_path)
        else:
            res = run_check(sc)
            text = _kv(res) if fmt_ == "txt" else _csv(res.keys(), [res.values()])
            _emit(text, args.out)
    except ModelError as exc:
        msg = str(exc).replace("\n", " ")
        print(f"error kind={exc.slug} exit={exc.exit_code} message={msg}", file=sys.stderr)
        return exc.exit_code
    except FloatingPointError as exc:
        print(f"error kind=numerical exit=3 message={exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
