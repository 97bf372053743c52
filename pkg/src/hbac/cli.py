"""Command line front end for the cooling, spin, pulse and protocol engines.

Subcommands: ppa, spin, pulse, experiment.  Common flags: --config,
--out, --seed, --format {csv,json}.  Exit codes: 0 success, 1 invalid
input, 2 non-convergence or best-effort result.

Output conventions:
  * tables go to <out>/<name>.csv (first line "# config_hash=... seed=...")
    or <name>.json with the same fields at the top level
  * summaries are always JSON, stamped the same way
  * plots are SVG files rendered by reading the just-written table back
    from disk, so a plot can never disagree with the emitted data
  * polarizations in experiment outputs are in units of the nominal
    per-refresh delivery eta * p_bath

Identical invocations produce byte-identical files: no timestamps, and
the SVG id salt is pinned to the config hash.
"""

from __future__ import annotations

import argparse
import csv
import json
import re
import sys
from pathlib import Path

import numpy as np
import yaml

from .config import (
    bath_from_dict,
    config_hash,
    distribution_from_dict,
    error_model_from_dict,
    load_config,
    load_reference_run,
    optimizer_from_dict,
    schedule_from_dict,
    spin_system_from_dict,
    target_from_dict,
    toggle_sequence_from_dict,
)
from .cooling import BathParameters, ConvergenceError, asymptotic_polarization, run_ppa
from .experiment import ErrorModel, fit_error_model, run_protocol, summarize
from .pulses import fidelity_profile, optimize_pulse, save_pulse
from .spins import (
    SpinSystem,
    exchange_hamiltonian,
    natural_hamiltonian,
    optimal_transfer_time,
    register_hamiltonian,
    toggling_average,
    transfer_curve,
)

EXIT_OK = 0
EXIT_BAD_INPUT = 1
EXIT_INCOMPLETE = 2

_HAMILTONIANS = {
    "natural": natural_hamiltonian,
    "exchange": exchange_hamiltonian,
    "register": register_hamiltonian,
    "register_zz": lambda s: register_hamiltonian(s, flip_flop=False),
}


def _scalar(v):
    if isinstance(v, str):
        return v
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    return float(v)


class _Emitter:
    """Writes stamped tables, summaries and plots under one directory."""

    def __init__(self, out: Path, fmt: str, cfg_hash: str, seed: int):
        out.mkdir(parents=True, exist_ok=True)
        self.out = out
        self.fmt = fmt
        self.cfg_hash = cfg_hash
        self.seed = seed

    def table(self, name: str, columns: list[str], rows: list) -> Path:
        rows = [[_scalar(v) for v in row] for row in rows]
        if self.fmt == "json":
            path = self.out / f"{name}.json"
            payload = {
                "config_hash": self.cfg_hash,
                "seed": self.seed,
                "columns": columns,
                "rows": rows,
            }
            path.write_text(json.dumps(payload, indent=2) + "\n")
        else:
            path = self.out / f"{name}.csv"
            with open(path, "w", newline="") as f:
                f.write(f"# config_hash={self.cfg_hash} seed={self.seed}\n")
                w = csv.writer(f)
                w.writerow(columns)
                w.writerows(rows)
        return path

    def summary(self, name: str, payload: dict) -> Path:
        path = self.out / f"{name}.json"
        record = {"config_hash": self.cfg_hash, "seed": self.seed}
        record.update({k: _scalar(v) if np.isscalar(v) else v for k, v in payload.items()})
        path.write_text(json.dumps(record, indent=2) + "\n")
        return path

    def plot(self, table_path: Path, name: str, draw) -> Path:
        """Render <name>.svg from the table file already on disk."""
        columns, rows = _read_table(table_path)
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt

        plt.rcParams["svg.hashsalt"] = self.cfg_hash
        fig, ax = plt.subplots(figsize=(6.4, 4.2))
        try:
            draw(columns, rows, ax)
            fig.tight_layout()
            path = self.out / f"{name}.svg"
            fig.savefig(
                path,
                format="svg",
                metadata={
                    "Date": None,
                    "Description": f"config_hash={self.cfg_hash} seed={self.seed}",
                },
            )
        finally:
            plt.close(fig)
        return path


def _read_table(path: Path) -> tuple[list[str], list[list]]:
    if path.suffix == ".json":
        record = json.loads(path.read_text())
        return record["columns"], record["rows"]
    lines = [ln for ln in path.read_text().splitlines() if not ln.startswith("#")]
    reader = csv.reader(lines)
    columns = next(reader)
    rows = []
    for raw in reader:
        row = []
        for v in raw:
            try:
                row.append(float(v))
            except ValueError:
                row.append(v)
        rows.append(row)
    return columns, rows


def _spin_index(sys: SpinSystem, v) -> int:
    return sys.index_of(v) if isinstance(v, str) else int(v)


# ---------------------------------------------------------------- ppa


def _parse_sweep(spec: str) -> range:
    m = re.fullmatch(r"n=(\d+)\.\.(\d+)", spec)
    if not m:
        raise ValueError(f"sweep must look like n=2..6, got {spec!r}")
    lo, hi = int(m.group(1)), int(m.group(2))
    if lo > hi:
        raise ValueError("empty sweep range")
    return range(lo, hi + 1)


def cmd_ppa(args, tree: dict, em: _Emitter) -> int:
    section = tree.get("ppa", {})
    n = args.n if args.n is not None else int(section.get("n", 3))
    max_rounds = int(section.get("max_rounds", 100_000))
    tol = float(section.get("tol", 1e-12))
    if args.p_refresh is not None:
        bath = BathParameters(p_bath=args.p_refresh, eta=1.0)
    else:
        bath = bath_from_dict(tree.get("bath", {}))

    traj = run_ppa(n, bath, max_rounds=max_rounds, tol=tol)
    columns = ["round"] + [f"q{i}" for i in range(1, n + 1)]
    rows = [[r + 1, *traj.polarizations[r]] for r in range(traj.rounds)]
    table = em.table("ppa_trajectory", columns, rows)

    def draw(cols, data, ax):
        rounds = [row[0] for row in data]
        for i in range(1, len(cols)):
            ax.plot(rounds, [row[i] for row in data], label=cols[i])
        ax.set_xlabel("round")
        ax.set_ylabel("polarization")
        ax.legend()

    em.plot(table, "ppa_trajectory", draw)

    asym = asymptotic_polarization(n, bath.p_refresh, max_rounds=max_rounds, tol=tol)
    em.summary(
        "ppa_summary",
        {
            "n": n,
            "p_refresh": bath.p_refresh,
            "converged": traj.converged,
            "rounds": traj.rounds,
            "asymptote": asym.value,
            "regime_estimate": asym.regime_estimate,
        },
    )

    if args.sweep is not None:
        rows = []
        for k in _parse_sweep(args.sweep):
            res = asymptotic_polarization(
                k, bath.p_refresh, max_rounds=max_rounds, tol=tol
            )
            rows.append(
                [k, res.value, res.regime_estimate, res.value / bath.p_refresh]
            )
        em.table("ppa_sweep", ["n", "asymptote", "regime_estimate", "ratio"], rows)

    return EXIT_OK if traj.converged else EXIT_INCOMPLETE


# --------------------------------------------------------------- spin


def cmd_spin(args, tree: dict, em: _Emitter) -> int:
    sys_ = spin_system_from_dict(tree["system"])
    transfer = tree.get("transfer", {})
    source = _spin_index(sys_, transfer.get("source", sys_.m))
    target = _spin_index(sys_, transfer.get("target", 1))
    t_max = float(transfer.get("t_max_ms", 0.1))
    samples = int(transfer.get("samples", 512))

    times = np.linspace(0.0, t_max, samples)
    curve = transfer_curve(sys_, source, target, times)
    table = em.table(
        "spin_transfer", ["t_ms", "efficiency"], list(zip(times, curve))
    )

    def draw(cols, data, ax):
        ax.plot([row[0] for row in data], [row[1] for row in data])
        ax.set_xlabel("time (ms)")
        ax.set_ylabel("transfer efficiency")

    em.plot(table, "spin_transfer", draw)

    tau_star, eta_peak = optimal_transfer_time(sys_, source, target, t_max)

    toggle = tree.get("toggle", {})
    ham_name = str(toggle.get("hamiltonian", "natural"))
    if ham_name not in _HAMILTONIANS:
        raise ValueError(f"unknown toggle hamiltonian {ham_name!r}")
    H = _HAMILTONIANS[ham_name](sys_)
    seq = toggle_sequence_from_dict(toggle, sys_.m)
    avg = toggling_average(H, seq)
    dim = avg.shape[0]
    rows = [
        [i, j, avg[i, j].real, avg[i, j].imag]
        for i in range(dim)
        for j in range(dim)
    ]
    em.table("spin_toggle", ["i", "j", "real_khz", "imag_khz"], rows)

    em.summary(
        "spin_summary",
        {
            "source": sys_.labels[source - 1],
            "target": sys_.labels[target - 1],
            "tau_star_ms": tau_star,
            "eta_peak": eta_peak,
            "toggle_hamiltonian": ham_name,
            "toggle_cycle_ms": seq.cycle_time,
            "toggle_dim": dim,
        },
    )
    return EXIT_OK


# -------------------------------------------------------------- pulse


def cmd_pulse(args, tree: dict, em: _Emitter) -> int:
    section = tree.get("pulse")
    if not isinstance(section, dict):
        raise ValueError("config section 'pulse' missing or not a mapping")
    sys_ = spin_system_from_dict(section["register"])
    perm, target_name = target_from_dict(section.get("target", {}), sys_.m)
    cfg = optimizer_from_dict(section.get("optimizer", {}), seed=args.seed)
    dist = distribution_from_dict(section.get("distribution", {}))

    result = optimize_pulse(sys_, perm, cfg, dist)
    profile = fidelity_profile(sys_, result.pulse, perm, dist)

    save_pulse(
        em.out / "pulse.json",
        result.pulse,
        metadata={
            "target": target_name,
            "mean_fidelity": float(result.fidelity),
            "min_fidelity": float(result.min_fidelity),
            "reached_target": bool(result.reached_target),
            "distribution": [[float(s), float(w)] for s, w in dist.points],
            "config_hash": em.cfg_hash,
            "seed": em.seed,
        },
    )
    em.table(
        "pulse_profile",
        ["rf_scale", "weight", "fidelity"],
        list(zip(dist.scales, dist.weights, profile)),
    )
    em.summary(
        "pulse_summary",
        {
            "target": target_name,
            "segments": len(result.pulse.segments),
            "total_duration_ms": result.pulse.total_duration,
            "mean_fidelity": result.fidelity,
            "min_fidelity": result.min_fidelity,
            "target_fidelity": cfg.target_fidelity,
            "reached_target": result.reached_target,
        },
    )
    return EXIT_OK if result.reached_target else EXIT_INCOMPLETE


# --------------------------------------------------------- experiment


def cmd_experiment(args, tree: dict, em: _Emitter) -> int:
    section = tree.get("experiment", {})
    bath = bath_from_dict(tree.get("bath", {}))
    schedule = schedule_from_dict(section.get("schedule"))

    observed = None
    if args.ideal:
        mode = "ideal"
        err = ErrorModel()
    elif args.fit is not None:
        mode = "fit"
        path = None if args.fit is True else args.fit
        observed = load_reference_run(path)
        err = fit_error_model(observed, schedule, bath)
    else:
        mode = "config"
        err = error_model_from_dict(section.get("error_model", {}))

    ideal = run_protocol(schedule, bath, ErrorModel())
    modeled = run_protocol(schedule, bath, err)

    rows = []
    for run_name, reports in (("ideal", ideal), ("modeled", modeled)):
        for rep in reports:
            label = schedule.steps[rep.step - 1].label
            for q, p in zip(rep.qubits, rep.polarizations):
                rows.append([run_name, rep.step, label, q, p])
    table = em.table(
        "experiment_steps", ["run", "step", "label", "qubit", "polarization"], rows
    )

    def draw(cols, data, ax):
        steps = sorted({row[1] for row in data})
        series = sorted({(row[0], row[3]) for row in data}, key=lambda s: (s[0], s[1]))
        width = 0.8 / len(series)
        values = {(r[0], r[1], r[3]): r[4] for r in data}
        for k, (run_name, q) in enumerate(series):
            xs = [s + (k - (len(series) - 1) / 2) * width for s in steps]
            ys = [values.get((run_name, s, q), 0.0) for s in steps]
            ax.bar(xs, ys, width=width, label=f"{run_name} q{int(q)}")
        ax.set_xticks(steps)
        ax.set_xlabel("protocol step")
        ax.set_ylabel("polarization (P' units)")
        ax.legend(fontsize=8)

    em.plot(table, "experiment_steps", draw)

    payload = {
        "mode": mode,
        "refresh_decay": err.refresh_decay,
        "gate_efficiency": err.gate_efficiency,
        "ideal_final": ideal[-1].value_for(1),
        "modeled_final": modeled[-1].value_for(1),
    }
    # Headline figures come from the data that drove the run: the
    # observed reports when fitting, the forward model otherwise.
    payload.update(summarize(observed if observed is not None else modeled))
    em.summary("experiment_summary", payload)
    return EXIT_OK


# --------------------------------------------------------------- main


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hbac",
        description="Algorithmic-cooling toolkit: asymptotics, spin dynamics, "
        "pulse search and protocol modeling.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", default=None, help="YAML config (packaged default)")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--format", choices=("csv", "json"), default="csv")

    p = sub.add_parser("ppa", help="cooling trajectories and asymptotes")
    common(p)
    p.add_argument("--n", type=int, default=None, help="register size override")
    p.add_argument(
        "--p-refresh", type=float, default=None, help="delivered polarization override"
    )
    p.add_argument("--sweep", default=None, metavar="n=A..B", help="asymptote sweep")
    p.set_defaults(func=cmd_ppa)

    p = sub.add_parser("spin", help="transfer curves and toggling averages")
    common(p)
    p.set_defaults(func=cmd_spin)

    p = sub.add_parser("pulse", help="segmented pulse search")
    common(p)
    p.set_defaults(func=cmd_pulse)

    p = sub.add_parser("experiment", help="protocol runs, error fits, summaries")
    common(p)
    group = p.add_mutually_exclusive_group()
    group.add_argument(
        "--ideal", action="store_true", help="error-free run instead of config model"
    )
    group.add_argument(
        "--fit",
        nargs="?",
        const=True,
        default=None,
        metavar="CSV",
        help="fit the error model to step reports (packaged reference by default)",
    )
    p.set_defaults(func=cmd_experiment)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_BAD_INPUT
    try:
        tree = load_config(args.config)
        em = _Emitter(Path(args.out), args.format, config_hash(tree), args.seed)
        return args.func(args, tree, em)
    except ConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INCOMPLETE
    except (ValueError, KeyError, OSError, yaml.YAMLError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT


if __name__ == "__main__":
    sys.exit(main())
