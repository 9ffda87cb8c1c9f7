"""Command-line front end: simulate, sweep, diagnose, plot.

Outputs are diff-friendly: CSV with full-precision (round-trip) floats and
a header row for series, JSON for scalars and fits, and a manifest.json
tying every file of a run to the exact configuration that produced it.
Two invocations with an identical manifest produce byte-identical CSVs.

Exit codes: 0 success, 1 configuration error, 2 numerical failure,
3 I/O failure.
"""

from __future__ import annotations

import argparse
import datetime
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__, analysis
from .errors import ConfigError, FitWindowError, RotorBathError
from .params import (ValidatedConfig, config_from_mapping, config_to_mapping,
                     load_config_file, with_updates)
from .phase_space import run_classical, save_grid
from .quantum import run_quantum
from .standard_map import diffusion_coefficient, lyapunov

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERICAL = 2
EXIT_IO = 3

THREADS_ENV = "ROTORBATH_THREADS"


# ---------------------------------------------------------------------------
# Small output helpers
# ---------------------------------------------------------------------------

def _fmt(value) -> str:
    """Full-precision decimal text that round-trips through float()."""
    if value is None:
        return ""
    return repr(float(value))


def _write_atomic(path: Path, data: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(data, encoding="utf-8")
    os.replace(tmp, path)


def _write_json(path: Path, payload) -> None:
    _write_atomic(path, json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _now() -> str:
    return datetime.datetime.now(datetime.timezone.utc).isoformat()


def write_entropy_csv(path: Path, q_series=None, c_series=None) -> None:
    """Columns: kick, S_quantum, S_classical, E_quantum, E_classical."""
    kick_sets = [s.kicks for s in (q_series, c_series) if s is not None]
    kicks = np.unique(np.concatenate(kick_sets))

    def column(series, attr):
        if series is None:
            return {}
        return dict(zip(series.kicks.tolist(),
                        getattr(series, attr).tolist()))

    sq = column(q_series, "entropy")
    sc = column(c_series, "entropy")
    eq = column(q_series, "energy")
    ec = column(c_series, "energy")
    lines = ["kick,S_quantum,S_classical,E_quantum,E_classical"]
    for n in kicks.tolist():
        lines.append(",".join([
            str(int(n)),
            _fmt(sq.get(n)), _fmt(sc.get(n)),
            _fmt(eq.get(n)), _fmt(ec.get(n)),
        ]))
    _write_atomic(path, "\n".join(lines) + "\n")


def read_entropy_csv(path: Path) -> dict:
    """Read entropy.csv back into arrays (empty cells become NaN)."""
    rows = Path(path).read_text(encoding="utf-8").strip().splitlines()
    header = rows[0].split(",")
    cols = {name: [] for name in header}
    for row in rows[1:]:
        for name, cell in zip(header, row.split(",")):
            cols[name].append(float(cell) if cell else np.nan)
    return {name: np.array(vals) for name, vals in cols.items()}


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------

def _fit_payload(series, window=None):
    try:
        fit = analysis.fit_growth(series, window)
    except FitWindowError:
        return None
    return {"A": fit.A, "B": fit.B, "window": list(fit.window),
            "residual_rms": fit.residual_rms}


def cmd_simulate(config: ValidatedConfig, mode: str, out_dir: Path,
                 dump_grid: bool = False) -> list[Path]:
    out_dir.mkdir(parents=True, exist_ok=True)
    started = _now()
    q_series = c_series = None
    if mode in ("quantum", "both"):
        q_series = run_quantum(config)
    if mode in ("classical", "both"):
        c_series = run_classical(config)

    outputs = []
    entropy_path = out_dir / "entropy.csv"
    write_entropy_csv(entropy_path, q_series, c_series)
    outputs.append(entropy_path)

    fit_payload = {
        "mode": mode,
        "quantum": _fit_payload(q_series) if q_series is not None else None,
        "classical": _fit_payload(c_series) if c_series is not None else None,
        "predict_A": analysis.predict_A(config.rotor.K, config.rotor.hbar),
    }
    fit_path = out_dir / "fit.json"
    _write_json(fit_path, fit_payload)
    outputs.append(fit_path)

    if dump_grid and mode in ("classical", "both"):
        # Re-deriving the final grid would double the cost; dump the initial
        # distribution, which is enough to seed an external evolution.
        from .phase_space import GridSpec, auto_p_extent, husimi_init
        from .quantum import DEFAULT_L_CENTER, make_wavepacket
        hbar = config.rotor.hbar
        p_extent = config.numerics.p_extent or auto_p_extent(
            config.rotor.K, hbar, config.kicks)
        spec = GridSpec(config.numerics.nq, config.numerics.np_grid,
                        p_extent, DEFAULT_L_CENTER * hbar)
        psi = make_wavepacket(hbar, DEFAULT_L_CENTER * hbar, 0.0,
                              int(np.ceil(DEFAULT_L_CENTER)) + 12)
        grid_path = out_dir / "initial_grid.bin"
        save_grid(husimi_init(psi, spec, hbar), grid_path)
        outputs.append(grid_path)

    manifest = {
        "subcommand": "simulate",
        "mode": mode,
        "config": config_to_mapping(config),
        "out_dir": str(out_dir),
        "seed": config.seed,
        "started_at": started,
        "finished_at": _now(),
        "version": __version__,
        "outputs": [p.name for p in outputs],
    }
    manifest_path = out_dir / "manifest.json"
    _write_json(manifest_path, manifest)
    outputs.append(manifest_path)
    return outputs


# ---------------------------------------------------------------------------
# sweep
# ---------------------------------------------------------------------------

def _worker_count(n_jobs: int) -> int:
    cap = os.environ.get(THREADS_ENV)
    if cap:
        try:
            return max(1, min(n_jobs, int(cap)))
        except ValueError:
            pass
    return max(1, min(n_jobs, os.cpu_count() or 1, 4))


def cmd_sweep(config: ValidatedConfig, param: str, values: list[float],
              mode: str, out_dir: Path) -> int:
    """One simulate run per value plus a summary and, for K sweeps, the
    regression of the fitted intercept A against ln K."""
    if param not in ("K", "eta", "hbar"):
        raise ConfigError([f"cannot sweep '{param}': choose K, eta or hbar"])
    if len(values) < 2:
        raise ConfigError(["sweep needs at least 2 values"])
    out_dir.mkdir(parents=True, exist_ok=True)
    started = _now()

    def one(value: float):
        sub = out_dir / f"{param}_{value:g}"
        cfg = with_updates(config, **{param: value})
        cmd_simulate(cfg, mode, sub)
        fit = json.loads((sub / "fit.json").read_text())
        return fit

    results: dict[float, dict] = {}
    failures: dict[float, str] = {}
    with ThreadPoolExecutor(max_workers=_worker_count(len(values))) as pool:
        futures = {pool.submit(one, v): v for v in values}
        for future, value in futures.items():
            try:
                results[value] = future.result()
            except Exception as exc:  # noqa: BLE001 - recorded per value
                failures[value] = f"{type(exc).__name__}: {exc}"

    lines = ["value,A_quantum,B_quantum,A_classical,B_classical"]
    for value in values:
        fit = results.get(value)
        if fit is None:
            lines.append(f"{_fmt(value)},,,,")
            continue
        q = fit.get("quantum") or {}
        c = fit.get("classical") or {}
        lines.append(",".join([
            _fmt(value), _fmt(q.get("A")), _fmt(q.get("B")),
            _fmt(c.get("A")), _fmt(c.get("B")),
        ]))
    _write_atomic(out_dir / "sweep_summary.csv", "\n".join(lines) + "\n")

    if param == "K" and len(results) >= 4:
        regression = {}
        for kind in ("quantum", "classical"):
            pairs = [(v, results[v][kind]) for v in values
                     if v in results and results[v].get(kind)]
            if len(pairs) >= 4:
                fits = [analysis.GrowthFit(A=f["A"], B=f["B"],
                                           window=tuple(f["window"]),
                                           residual_rms=f["residual_rms"])
                        for _, f in pairs]
                slope, intercept, r2 = analysis.regress_A_vs_lnK(
                    [v for v, _ in pairs], fits)
                regression[kind] = {"slope": slope, "intercept": intercept,
                                    "r2": r2}
        _write_json(out_dir / "a_vs_lnk.json", regression)

    manifest = {
        "subcommand": "sweep",
        "param": param,
        "values": values,
        "mode": mode,
        "failures": {str(k): v for k, v in failures.items()},
        "config": config_to_mapping(config),
        "out_dir": str(out_dir),
        "seed": config.seed,
        "started_at": started,
        "finished_at": _now(),
        "version": __version__,
    }
    _write_json(out_dir / "manifest.json", manifest)
    return EXIT_NUMERICAL if failures else EXIT_OK


# ---------------------------------------------------------------------------
# diagnose
# ---------------------------------------------------------------------------

def cmd_diagnose(config: ValidatedConfig, what: str, out_dir: Path) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    K, hbar = config.rotor.K, config.rotor.hbar
    if what == "lyapunov":
        value = lyapunov(K, seed=config.seed)
        _write_json(out_dir / "lyapunov.json", {
            "K": K, "lyapunov": value,
            "large_K_asymptote": float(np.log(K / 2.0)) if K > 2 else None,
            "seed": config.seed,
        })
    elif what == "diffusion":
        value = diffusion_coefficient(K, seed=config.seed)
        _write_json(out_dir / "diffusion.json", {
            "K": K, "diffusion_coefficient": value,
            "quasilinear": K * K / 2.0, "seed": config.seed,
        })
    elif what == "marginals":
        from .phase_space import (GridSpec, auto_p_extent, bath_drift_smear,
                                  husimi_init, marginals)
        from .quantum import DEFAULT_L_CENTER, make_wavepacket
        p_center = DEFAULT_L_CENTER * hbar
        p_extent = config.numerics.p_extent or auto_p_extent(K, hbar, 1)
        spec = GridSpec(config.numerics.nq, config.numerics.np_grid,
                        p_extent, p_center)
        psi = make_wavepacket(hbar, p_center, 0.0,
                              int(np.ceil(DEFAULT_L_CENTER)) + 12)
        grid = husimi_init(psi, spec, hbar)
        g1_0, g2_0 = marginals(grid)
        smeared = bath_drift_smear(grid, 1.0, config.bath, hbar)
        g1_1, g2_1 = marginals(smeared)
        lines = ["q,g1_t0,g1_t1minus"]
        for j in range(grid.nq):
            lines.append(f"{_fmt(grid.q[j])},{_fmt(g1_0[j])},{_fmt(g1_1[j])}")
        _write_atomic(out_dir / "marginal_g1.csv", "\n".join(lines) + "\n")
        lines = ["p,g2_t0,g2_t1minus"]
        for i in range(grid.np_grid):
            lines.append(f"{_fmt(grid.p[i])},{_fmt(g2_0[i])},{_fmt(g2_1[i])}")
        _write_atomic(out_dir / "marginal_g2.csv", "\n".join(lines) + "\n")
    else:
        raise ConfigError([f"unknown diagnostic '{what}'"])

    _write_json(out_dir / "manifest.json", {
        "subcommand": "diagnose", "what": what,
        "config": config_to_mapping(config), "out_dir": str(out_dir),
        "seed": config.seed, "started_at": _now(), "finished_at": _now(),
        "version": __version__,
    })


# ---------------------------------------------------------------------------
# plot
# ---------------------------------------------------------------------------

_PLOT_SCRIPT = '''\
#!/usr/bin/env python3
"""Standalone plot regeneration for a rotorbath run directory."""
import csv
import sys
from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt


def read_csv(path):
    with open(path) as fh:
        rows = list(csv.DictReader(fh))
    cols = {k: [float(r[k]) if r[k] else float("nan") for r in rows]
            for k in rows[0]}
    return cols


def main(run_dir):
    run_dir = Path(run_dir)
    entropy = run_dir / "entropy.csv"
    if entropy.exists():
        cols = read_csv(entropy)
        fig, ax = plt.subplots()
        ax.plot(cols["kick"][1:], cols["S_quantum"][1:], label="quantum")
        ax.plot(cols["kick"][1:], cols["S_classical"][1:], label="classical")
        ax.set_xscale("log")
        ax.set_xlabel("kick n")
        ax.set_ylabel("entropy (nats)")
        ax.legend()
        fig.savefig(run_dir / "entropy_vs_lnn.svg")
        fig, ax = plt.subplots()
        ax.plot(cols["kick"], cols["E_quantum"], label="quantum")
        ax.plot(cols["kick"], cols["E_classical"], label="classical")
        ax.set_xlabel("kick n")
        ax.set_ylabel("energy")
        ax.legend()
        fig.savefig(run_dir / "energy_vs_n.svg")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else ".")
'''


def cmd_plot(run_dir: Path) -> None:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    run_dir = Path(run_dir)
    entropy_csv = run_dir / "entropy.csv"
    summary_csv = run_dir / "sweep_summary.csv"
    if not entropy_csv.exists() and not summary_csv.exists():
        raise FileNotFoundError(
            f"no entropy.csv or sweep_summary.csv in {run_dir}")

    (run_dir / "plot_run.py").write_text(_PLOT_SCRIPT, encoding="utf-8")

    if entropy_csv.exists():
        cols = read_entropy_csv(entropy_csv)
        kick = cols["kick"]
        fig, ax = plt.subplots()
        positive = kick >= 1
        for name, label in (("S_quantum", "quantum"),
                            ("S_classical", "classical")):
            if np.isfinite(cols[name]).any():
                ax.plot(kick[positive], cols[name][positive], label=label)
        ax.set_xscale("log")
        ax.set_xlabel("kick n")
        ax.set_ylabel("entropy (nats)")
        ax.legend()
        fig.savefig(run_dir / "entropy_vs_lnn.svg")
        plt.close(fig)

        fig, ax = plt.subplots()
        for name, label in (("E_quantum", "quantum"),
                            ("E_classical", "classical")):
            if np.isfinite(cols[name]).any():
                ax.plot(kick, cols[name], label=label)
        ax.set_xlabel("kick n")
        ax.set_ylabel("energy")
        ax.legend()
        fig.savefig(run_dir / "energy_vs_n.svg")
        plt.close(fig)

    if summary_csv.exists():
        rows = summary_csv.read_text().strip().splitlines()
        header = rows[0].split(",")
        data = {name: [] for name in header}
        for row in rows[1:]:
            for name, cell in zip(header, row.split(",")):
                data[name].append(float(cell) if cell else np.nan)
        values = np.array(data["value"])
        fig, ax = plt.subplots()
        for kind in ("quantum", "classical"):
            a_col = np.array(data.get(f"A_{kind}", []))
            if a_col.size and np.isfinite(a_col).any():
                ax.plot(np.log(values), a_col, "o-", label=kind)
        ax.set_xlabel("ln value")
        ax.set_ylabel("intercept A")
        ax.legend()
        fig.savefig(run_dir / "a_vs_lnk.svg")
        plt.close(fig)

        fig, ax = plt.subplots()
        for kind in ("quantum", "classical"):
            b_col = np.array(data.get(f"B_{kind}", []))
            if b_col.size and np.isfinite(b_col).any():
                ax.plot(values, b_col, "o-", label=kind)
        ax.axhline(0.5, linestyle="--", color="grey")
        ax.set_xlabel("value")
        ax.set_ylabel("slope B")
        ax.legend()
        fig.savefig(run_dir / "b_vs_k.svg")
        plt.close(fig)

    # Overlay per-value entropy curves when the directory holds sub-runs.
    sub_csvs = sorted(run_dir.glob("*/entropy.csv"))
    if sub_csvs:
        fig, ax = plt.subplots()
        for sub in sub_csvs:
            cols = read_entropy_csv(sub)
            kick = cols["kick"]
            positive = kick >= 1
            series = cols["S_classical"]
            if not np.isfinite(series).any():
                series = cols["S_quantum"]
            ax.plot(kick[positive], series[positive], label=sub.parent.name)
        ax.set_xscale("log")
        ax.set_xlabel("kick n")
        ax.set_ylabel("entropy (nats)")
        ax.legend(fontsize="small")
        fig.savefig(run_dir / "entropy_overlay.svg")
        plt.close(fig)


# ---------------------------------------------------------------------------
# Argument parsing and dispatch
# ---------------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rotorbath",
        description="Kicked rotor in an ohmic bath: entropy production "
                    "simulator")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def common(p):
        p.add_argument("--config", type=Path, default=None,
                       help="key = value configuration file")
        p.add_argument("--kicks", type=int, default=None)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out", type=Path, default=Path("."))

    p_sim = sub.add_parser("simulate", help="run one simulation")
    common(p_sim)
    p_sim.add_argument("--mode", choices=("quantum", "classical", "both"),
                       default="both")
    p_sim.add_argument("--dump-grid", action="store_true",
                       help="also write the initial phase-space grid dump")

    p_sweep = sub.add_parser("sweep", help="run one simulation per value")
    common(p_sweep)
    p_sweep.add_argument("--mode", choices=("quantum", "classical", "both"),
                         default="both")
    p_sweep.add_argument("--param", required=True)
    p_sweep.add_argument("--values", required=True,
                         help="comma-separated list, e.g. 3.5,5,7,10")

    p_diag = sub.add_parser("diagnose", help="classical diagnostics")
    common(p_diag)
    p_diag.add_argument("--what", required=True,
                        choices=("lyapunov", "diffusion", "marginals"))

    p_plot = sub.add_parser("plot", help="render SVG charts for a run dir")
    p_plot.add_argument("run_dir", type=Path)
    return parser


def _load_config(args) -> ValidatedConfig:
    values = load_config_file(args.config) if args.config else {}
    return config_from_mapping(values, kicks=getattr(args, "kicks", None),
                               seed=getattr(args, "seed", None))


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.subcommand == "simulate":
            config = _load_config(args)
            cmd_simulate(config, args.mode, args.out,
                         dump_grid=args.dump_grid)
            return EXIT_OK
        if args.subcommand == "sweep":
            config = _load_config(args)
            values = [float(v) for v in args.values.split(",") if v.strip()]
            return cmd_sweep(config, args.param, values, args.mode, args.out)
        if args.subcommand == "diagnose":
            config = _load_config(args)
            cmd_diagnose(config, args.what, args.out)
            return EXIT_OK
        if args.subcommand == "plot":
            cmd_plot(args.run_dir)
            return EXIT_OK
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except RotorBathError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"i/o failure: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
