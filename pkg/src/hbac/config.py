"""Config ingestion: one YAML tree feeds every subcommand.

The tree is plain nested mappings; each section below maps onto one
domain object.  A packaged reference tree ships with the distribution,
flagged illustrative because most of its shifts and couplings are
placeholders rather than measured values.
"""

from __future__ import annotations

import csv
import hashlib
import json
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from .cooling import BathParameters, Permutation, swap_gate, three_bit_compression
from .experiment import (
    ErrorModel,
    GateStep,
    ProtocolSchedule,
    RefreshStep,
    StepReport,
    default_schedule,
)
from .pulses import OptimizationConfig, RFDistribution
from .spins import SpinSystem, ToggleSequence, ToggleStep

__all__ = [
    "load_config",
    "load_reference_run",
    "config_hash",
    "spin_system_from_dict",
    "bath_from_dict",
    "error_model_from_dict",
    "schedule_from_dict",
    "toggle_sequence_from_dict",
    "optimizer_from_dict",
    "distribution_from_dict",
    "target_from_dict",
]

_DATA = resources.files("hbac") / "data"


def load_config(path: str | Path | None = None) -> dict:
    """Parse a YAML config tree; the packaged reference when path is None."""
    if path is None:
        text = (_DATA / "malonic_acid.yaml").read_text()
    else:
        text = Path(path).read_text()
    tree = yaml.safe_load(text)
    if not isinstance(tree, dict):
        raise ValueError("config must be a mapping at the top level")
    return tree


def config_hash(tree: dict) -> str:
    """Stable digest of a config tree, for stamping outputs."""
    canonical = json.dumps(tree, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(canonical.encode()).hexdigest()


def load_reference_run(path: str | Path | None = None) -> tuple[StepReport, ...]:
    """Read step reports from CSV (step, qubit, polarization, uncertainty).

    Rows sharing a step index merge into one report; a report's
    uncertainty is the largest of its rows.  Defaults to the packaged
    benchmark readings.
    """
    if path is None:
        text = (_DATA / "reference_run.csv").read_text()
    else:
        text = Path(path).read_text()
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    by_step: dict[int, list[tuple[int, float, float]]] = {}
    for row in csv.DictReader(lines):
        try:
            step = int(row["step"])
            entry = (
                int(row["qubit"]),
                float(row["polarization"]),
                float(row.get("uncertainty") or 0.0),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ValueError(f"malformed report row {row!r}") from exc
        by_step.setdefault(step, []).append(entry)
    if not by_step:
        raise ValueError("report file contains no rows")
    reports = []
    for step in sorted(by_step):
        rows = by_step[step]
        reports.append(
            StepReport(
                step=step,
                polarizations=np.array([p for _, p, _ in rows]),
                qubits=tuple(q for q, _, _ in rows),
                uncertainty=max(u for _, _, u in rows),
            )
        )
    return tuple(reports)


def _section(tree: dict, key: str) -> dict:
    value = tree.get(key)
    if not isinstance(value, dict):
        raise ValueError(f"config section {key!r} missing or not a mapping")
    return value


def spin_system_from_dict(d: dict) -> SpinSystem:
    try:
        spins = tuple((s["label"], s["species"]) for s in d["spins"])
        shifts = np.array(d["shifts_khz"], dtype=float)
        couplings = np.array(d["couplings_khz"], dtype=float)
    except (KeyError, TypeError) as exc:
        raise ValueError(f"bad spin-system config: {exc}") from exc
    return SpinSystem(spins, shifts, couplings)


def bath_from_dict(d: dict) -> BathParameters:
    try:
        return BathParameters(
            p_bath=float(d["polarization"]), eta=float(d.get("efficiency", 1.0))
        )
    except (KeyError, TypeError) as exc:
        raise ValueError(f"bad bath config: {exc}") from exc


def error_model_from_dict(d: dict) -> ErrorModel:
    return ErrorModel(
        refresh_decay=float(d.get("refresh_decay", 0.0)),
        gate_efficiency=float(d.get("gate_efficiency", 1.0)),
    )


def schedule_from_dict(d: dict | None) -> ProtocolSchedule:
    """Build a schedule from {"n": ..., "steps": [...]}; None gives the
    stock six-step run.

    Step forms: {refresh: qubit}, {swap: [i, j]}, {compress: [i, j, k]},
    each gate accepting an optional lossy flag.
    """
    if d is None:
        return default_schedule()
    try:
        n = int(d["n"])
        raw_steps = d["steps"]
    except (KeyError, TypeError) as exc:
        raise ValueError(f"bad schedule config: {exc}") from exc
    steps: list[RefreshStep | GateStep] = []
    for raw in raw_steps:
        if "refresh" in raw:
            steps.append(RefreshStep(int(raw["refresh"])))
        elif "swap" in raw:
            i, j = (int(q) for q in raw["swap"])
            steps.append(
                GateStep(
                    swap_gate(i, j, n),
                    lossy=bool(raw.get("lossy", True)),
                    name=f"swap({i},{j})",
                )
            )
        elif "compress" in raw:
            i, j, k = (int(q) for q in raw["compress"])
            steps.append(
                GateStep(
                    three_bit_compression(n, (i, j, k)),
                    lossy=bool(raw.get("lossy", False)),
                    name=f"compress({i};{j},{k})",
                )
            )
        else:
            raise ValueError(f"unknown schedule step {raw!r}")
    return ProtocolSchedule(n=n, steps=tuple(steps))


def toggle_sequence_from_dict(d: dict, m: int) -> ToggleSequence:
    """Sequence from a name or an explicit step list.

    Named cycles: balanced_xyz, spin_lock.  Explicit steps are mappings
    {axis, angle_deg, dwell_ms} applied collectively to all spins.
    """
    from .spins import balanced_xyz_cycle, spin_lock_cycle

    seq = d.get("sequence", "balanced_xyz")
    dwell = float(d.get("dwell_ms", 1e-3))
    if isinstance(seq, str):
        if seq == "balanced_xyz":
            return balanced_xyz_cycle(m, dwell)
        if seq == "spin_lock":
            return spin_lock_cycle(m, dwell)
        raise ValueError(f"unknown toggle sequence {seq!r}")
    steps = tuple(
        ToggleStep.collective(
            m,
            str(raw["axis"]),
            float(raw["angle_deg"]) * np.pi / 180.0,
            float(raw.get("dwell_ms", dwell)),
        )
        for raw in seq
    )
    return ToggleSequence(steps)


def optimizer_from_dict(d: dict, seed: int = 0) -> OptimizationConfig:
    known = {
        "segments",
        "restarts",
        "max_evaluations",
        "polish_cycles",
        "tolerance",
        "amplitude_penalty",
        "duration_penalty",
        "max_duration",
        "target_fidelity",
    }
    unknown = set(d) - known
    if unknown:
        raise ValueError(f"unknown optimizer options {sorted(unknown)}")
    return OptimizationConfig(seed=seed, **{k: d[k] for k in known & set(d)})


def distribution_from_dict(d: dict) -> RFDistribution:
    if "values" in d:
        return RFDistribution(tuple((float(s), float(w)) for s, w in d["values"]))
    return RFDistribution.gauss_hermite(
        n=int(d.get("points", 5)), sigma=float(d.get("sigma", 0.062))
    )


def target_from_dict(d: dict, m: int) -> tuple[Permutation, str]:
    """Gate permutation plus a short name for reports."""
    kind = d.get("type")
    if kind == "identity":
        return Permutation.identity(1 << m), "identity"
    if kind == "swap":
        i, j = (int(q) for q in d["qubits"])
        return swap_gate(i, j, m), f"swap({i},{j})"
    if kind == "compress":
        i, j, k = (int(q) for q in d["qubits"])
        return three_bit_compression(m, (i, j, k)), f"compress({i};{j},{k})"
    raise ValueError(f"unknown target type {kind!r}")
