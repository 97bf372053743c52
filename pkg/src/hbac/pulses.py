"""Search for segmented RF pulses realizing target gates on a register.

A pulse is a list of piecewise-constant segments (duration ms, amplitude
kHz, phase rad, transmitter offset kHz).  During a segment the register
evolves under

    H = H_register + scale * amplitude * (cos(phase) X + sin(phase) Y)/2
        - offset * Z/2,

where X, Y, Z are collective sums over the register spins and `scale` is
a dimensionless RF-amplitude multiplier.  Robustness is measured over a
small quadrature of scales standing in for the inhomogeneity of the
drive field across the sample.

The search itself is a multi-start adaptive simplex over the raw segment
parameters with two soft penalties: the dwell-weighted mean amplitude is
pushed up to the spectral norm of the register Hamiltonian (the drive
must dominate the internal couplings), and total duration beyond a bound
is discouraged.  A warm-up stage fits the nominal scale only; the full
quadrature objective then takes over, followed by a few fresh-simplex
polish cycles.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from numpy.polynomial.hermite import hermgauss
from scipy.optimize import minimize

from .cooling import DiagonalState, Permutation
from .spins import SpinSystem, pauli, register_hamiltonian

__all__ = [
    "PulseSegment",
    "SegmentedPulse",
    "RFDistribution",
    "OptimizationConfig",
    "PulseSearchResult",
    "pulse_propagator",
    "fidelity_profile",
    "gate_fidelity",
    "populations_after",
    "state_fidelity",
    "optimize_pulse",
    "refine_pulse",
    "save_pulse",
    "load_pulse",
]

# every realized segment lasts at least this long (ms); the search maps
# unconstrained parameters through |d| + floor, so zero-length segments
# cannot appear
MIN_SEGMENT_DURATION = 1e-3


@dataclass(frozen=True)
class PulseSegment:
    """One piecewise-constant slice of RF drive."""

    duration: float
    amplitude: float
    phase: float
    offset: float = 0.0

    def __post_init__(self) -> None:
        if not self.duration > 0:
            raise ValueError("duration must be positive")
        if self.amplitude < 0:
            raise ValueError("amplitude must be non-negative")


@dataclass(frozen=True)
class SegmentedPulse:
    """Ordered pulse segments; gates here conventionally span 0.7 to 1.3 ms."""

    segments: tuple[PulseSegment, ...]

    def __post_init__(self) -> None:
        segments = tuple(self.segments)
        if not segments:
            raise ValueError("pulse must contain at least one segment")
        object.__setattr__(self, "segments", segments)

    @property
    def total_duration(self) -> float:
        return float(sum(seg.duration for seg in self.segments))


@dataclass(frozen=True)
class RFDistribution:
    """Discrete distribution of RF-amplitude scale factors."""

    points: tuple[tuple[float, float], ...]

    def __post_init__(self) -> None:
        points = tuple((float(s), float(w)) for s, w in self.points)
        if not points:
            raise ValueError("distribution needs at least one point")
        weights = np.array([w for _, w in points])
        if weights.min() < 0:
            raise ValueError("weights must be non-negative")
        if abs(weights.sum() - 1.0) > 1e-9:
            raise ValueError("weights must sum to 1")
        object.__setattr__(self, "points", points)

    @property
    def scales(self) -> np.ndarray:
        return np.array([s for s, _ in self.points])

    @property
    def weights(self) -> np.ndarray:
        return np.array([w for _, w in self.points])

    @classmethod
    def delta(cls, scale: float = 1.0) -> "RFDistribution":
        """Single-point distribution: no inhomogeneity."""
        return cls(((scale, 1.0),))

    @classmethod
    def gauss_hermite(cls, n: int = 5, sigma: float = 0.062) -> "RFDistribution":
        """Quadrature of a normal scale distribution centered on 1."""
        if n < 1:
            raise ValueError("need at least one quadrature point")
        if sigma < 0:
            raise ValueError("sigma must be non-negative")
        x, w = hermgauss(n)
        scales = 1.0 + np.sqrt(2.0) * sigma * x
        weights = w / np.sqrt(np.pi)
        return cls(tuple(zip(scales.tolist(), weights.tolist())))


@dataclass(frozen=True)
class OptimizationConfig:
    """Knobs for the pulse search.

    max_evaluations bounds one simplex stage; warm-up and polish stages
    use half of it.  The search stops early once the mean fidelity of
    the best candidate reaches target_fidelity.
    """

    segments: int = 8
    restarts: int = 8
    max_evaluations: int = 6000
    polish_cycles: int = 3
    seed: int = 0
    tolerance: float = 1e-8
    amplitude_penalty: float = 0.02
    duration_penalty: float = 0.1
    max_duration: float = 1.3
    target_fidelity: float = 0.992

    def __post_init__(self) -> None:
        if self.segments < 1 or self.restarts < 1 or self.max_evaluations < 1:
            raise ValueError("segments, restarts and max_evaluations must be >= 1")
        if self.polish_cycles < 0:
            raise ValueError("polish_cycles must be >= 0")
        if self.tolerance <= 0:
            raise ValueError("tolerance must be positive")
        if self.amplitude_penalty < 0 or self.duration_penalty < 0:
            raise ValueError("penalty weights must be non-negative")
        if self.max_duration <= 0:
            raise ValueError("max_duration must be positive")
        if not 0 < self.target_fidelity <= 1:
            raise ValueError("target_fidelity must lie in (0, 1]")


@dataclass(frozen=True)
class PulseSearchResult:
    """Best pulse found, with its robustness summary.

    fidelity is the weighted mean over the distribution, min_fidelity
    the worst point.  reached_target records whether the search hit the
    configured fidelity before exhausting its restarts; a False value is
    a best-effort result, not a failure.
    """

    pulse: SegmentedPulse
    fidelity: float
    min_fidelity: float
    reached_target: bool


class _Register:
    """Cached collective operators for one homonuclear system."""

    def __init__(self, sys: SpinSystem):
        self.m = sys.m
        self.h_reg = register_hamiltonian(sys)
        self.xsum = sum(pauli(i, "x", sys.m) for i in range(1, sys.m + 1))
        self.ysum = sum(pauli(i, "y", sys.m) for i in range(1, sys.m + 1))
        self.zsum = sum(pauli(i, "z", sys.m) for i in range(1, sys.m + 1))
        self.amp_floor = float(np.max(np.abs(np.linalg.eigvalsh(self.h_reg))))

    def propagator(self, segs: np.ndarray, scale: float) -> np.ndarray:
        """Compose the segment propagators in order; segs rows are
        (duration, amplitude, phase, offset) with realized values."""
        dim = 1 << self.m
        U = np.eye(dim, dtype=complex)
        for dur, amp, phase, off in segs:
            H = (
                self.h_reg
                + scale * amp * (np.cos(phase) * self.xsum + np.sin(phase) * self.ysum) / 2.0
                - off * self.zsum / 2.0
            )
            vals, vecs = np.linalg.eigh(H)
            U = ((vecs * np.exp(-2j * np.pi * vals * dur)) @ vecs.conj().T) @ U
        return U


def _segments_array(pulse: SegmentedPulse) -> np.ndarray:
    return np.array(
        [[s.duration, s.amplitude, s.phase, s.offset] for s in pulse.segments]
    )


def _realize(params: np.ndarray) -> np.ndarray:
    """Map raw search parameters to realized segment rows."""
    segs = params.reshape(-1, 4).copy()
    segs[:, 0] = np.abs(segs[:, 0]) + MIN_SEGMENT_DURATION
    segs[:, 1] = np.abs(segs[:, 1])
    return segs


def _target_matrix(target: Permutation | np.ndarray, dim: int) -> np.ndarray:
    mat = target.to_matrix() if isinstance(target, Permutation) else np.asarray(target, dtype=complex)
    if mat.shape != (dim, dim):
        raise ValueError(f"target must be {dim}x{dim}")
    if np.abs(mat @ mat.conj().T - np.eye(dim)).max() > 1e-10:
        raise ValueError("target must be unitary")
    return mat


def pulse_propagator(
    sys: SpinSystem, pulse: SegmentedPulse, rf_scale: float = 1.0
) -> np.ndarray:
    """Propagator of the full pulse at one RF-amplitude scale."""
    return _Register(sys).propagator(_segments_array(pulse), rf_scale)


def fidelity_profile(
    sys: SpinSystem,
    pulse: SegmentedPulse,
    target: Permutation | np.ndarray,
    dist: RFDistribution,
) -> np.ndarray:
    """Gate fidelity |Tr(target^dag U)|^2 / 4^m at each distribution point."""
    reg = _Register(sys)
    mat = _target_matrix(target, 1 << reg.m)
    segs = _segments_array(pulse)
    norm = 4.0 ** reg.m
    return np.array(
        [
            abs(np.trace(mat.conj().T @ reg.propagator(segs, s))) ** 2 / norm
            for s in dist.scales
        ]
    )


def gate_fidelity(
    sys: SpinSystem,
    pulse: SegmentedPulse,
    target: Permutation | np.ndarray,
    dist: RFDistribution,
) -> float:
    """Ensemble-averaged gate fidelity over the RF distribution."""
    return float(fidelity_profile(sys, pulse, target, dist) @ dist.weights)


def populations_after(
    sys: SpinSystem,
    pulse: SegmentedPulse,
    state: DiagonalState,
    rf_scale: float = 1.0,
) -> np.ndarray:
    """Diagonal of U rho U^dag for a diagonal input state."""
    if state.probs.size != 1 << sys.m:
        raise ValueError("state size does not match the register")
    U = pulse_propagator(sys, pulse, rf_scale)
    return np.real(np.abs(U) ** 2 @ state.probs)


def state_fidelity(
    sys: SpinSystem,
    pulse: SegmentedPulse,
    input_states: Sequence[DiagonalState],
    target_perm: Permutation,
    dist: RFDistribution,
) -> float:
    """Classical overlap between evolved and ideally permuted populations.

    For each input state and distribution point, the achieved populations
    are compared with the permuted target populations through the
    Bhattacharyya overlap sum(sqrt(p q)); the result is the plain average
    over states weighted over the distribution.
    """
    states = list(input_states)
    if not states:
        raise ValueError("need at least one input state")
    reg = _Register(sys)
    dim = 1 << reg.m
    if target_perm.n_states != dim:
        raise ValueError("permutation size does not match the register")
    segs = _segments_array(pulse)
    total = 0.0
    for scale, weight in dist.points:
        U = reg.propagator(segs, scale)
        gain = np.abs(U) ** 2
        for state in states:
            achieved = gain @ state.probs
            want = np.empty_like(state.probs)
            want[target_perm.table] = state.probs
            total += weight * float(np.sqrt(achieved * want).sum()) / len(states)
    return total


def _objective(
    reg: _Register,
    mat: np.ndarray,
    params: np.ndarray,
    scales: np.ndarray,
    weights: np.ndarray,
    cfg: OptimizationConfig,
) -> float:
    segs = _realize(params)
    norm = 4.0 ** reg.m
    fid = 0.0
    for scale, weight in zip(scales, weights):
        U = reg.propagator(segs, scale)
        fid += weight * abs(np.trace(mat.conj().T @ U)) ** 2 / norm
    durations = segs[:, 0]
    total = durations.sum()
    mean_amp = float(durations @ segs[:, 1] / total)
    penalty = cfg.amplitude_penalty * max(0.0, reg.amp_floor - mean_amp) ** 2
    penalty += cfg.duration_penalty * max(0.0, total - cfg.max_duration)
    return 1.0 - fid + penalty


def optimize_pulse(
    sys: SpinSystem,
    target: Permutation | np.ndarray,
    cfg: OptimizationConfig | None = None,
    dist: RFDistribution | None = None,
) -> PulseSearchResult:
    """Multi-start simplex search for a pulse implementing the target.

    Deterministic for a fixed config seed.  Runs restarts until the
    configured target fidelity is reached, each one warming up on the
    nominal scale before optimizing the full distribution objective and
    polishing from fresh simplices.
    """
    cfg = cfg or OptimizationConfig()
    dist = dist or RFDistribution.gauss_hermite()
    reg = _Register(sys)
    mat = _target_matrix(target, 1 << reg.m)
    scales, weights = dist.scales, dist.weights
    nominal_s, nominal_w = np.array([1.0]), np.array([1.0])

    def full(params: np.ndarray) -> float:
        return _objective(reg, mat, params, scales, weights, cfg)

    def nominal(params: np.ndarray) -> float:
        return _objective(reg, mat, params, nominal_s, nominal_w, cfg)

    def simplex(fun, x0: np.ndarray, maxfev: int, xatol: float) -> tuple[np.ndarray, float]:
        res = minimize(
            fun,
            x0,
            method="Nelder-Mead",
            options=dict(maxfev=maxfev, xatol=xatol, fatol=1e-13, adaptive=True),
        )
        return res.x, float(res.fun)

    rng = np.random.default_rng(cfg.seed)
    best_x: np.ndarray | None = None
    best_obj = np.inf
    reached = False
    for _ in range(cfg.restarts):
        x0 = np.empty(4 * cfg.segments)
        x0[0::4] = rng.uniform(0.08, 0.22, cfg.segments)
        x0[1::4] = rng.uniform(0.5, 3.0, cfg.segments)
        x0[2::4] = rng.uniform(0.0, 2.0 * np.pi, cfg.segments)
        x0[3::4] = rng.normal(0.0, 0.5, cfg.segments)

        x0, _ = simplex(nominal, x0, max(cfg.max_evaluations // 2, 1), cfg.tolerance)
        x, fx = simplex(full, x0, cfg.max_evaluations, cfg.tolerance)
        for _ in range(cfg.polish_cycles):
            # a fresh simplex around the incumbent escapes collapsed geometry
            x2, fx2 = simplex(
                full, x, max(cfg.max_evaluations // 2, 1), cfg.tolerance / 10
            )
            if fx2 < fx:
                x, fx = x2, fx2
        if fx < best_obj:
            best_x, best_obj = x, fx
        segs = _realize(best_x)
        fids = np.array(
            [
                abs(np.trace(mat.conj().T @ reg.propagator(segs, s))) ** 2 / 4.0 ** reg.m
                for s in scales
            ]
        )
        if float(fids @ weights) >= cfg.target_fidelity:
            reached = True
            break

    segs = _realize(best_x)
    pulse = SegmentedPulse(tuple(PulseSegment(*row) for row in segs))
    fids = fidelity_profile(sys, pulse, mat, dist)
    return PulseSearchResult(
        pulse=pulse,
        fidelity=float(fids @ dist.weights),
        min_fidelity=float(fids.min()),
        reached_target=reached,
    )


def refine_pulse(
    sys: SpinSystem,
    pulse: SegmentedPulse,
    input_states: Sequence[DiagonalState],
    target_perm: Permutation,
    dist: RFDistribution | None = None,
    max_evaluations: int = 2000,
) -> tuple[SegmentedPulse, float]:
    """Polish a pulse for the specific states it will act on.

    Local simplex ascent of the state overlap starting from the given
    pulse; the input pulse is kept whenever the search fails to improve
    on it, so the returned overlap never drops below the starting one.
    """
    dist = dist or RFDistribution.gauss_hermite()
    if any(seg.duration < MIN_SEGMENT_DURATION for seg in pulse.segments):
        raise ValueError(
            f"segment durations must be at least {MIN_SEGMENT_DURATION} ms"
        )
    segs = _segments_array(pulse)
    x0 = segs.copy()
    x0[:, 0] -= MIN_SEGMENT_DURATION
    x0 = x0.reshape(-1)

    def loss(params: np.ndarray) -> float:
        rows = _realize(params)
        candidate = SegmentedPulse(tuple(PulseSegment(*row) for row in rows))
        return -state_fidelity(sys, candidate, input_states, target_perm, dist)

    start = -loss(x0)
    res = minimize(
        loss,
        x0,
        method="Nelder-Mead",
        options=dict(maxfev=max_evaluations, xatol=1e-8, fatol=1e-13, adaptive=True),
    )
    if -res.fun <= start:
        return pulse, float(start)
    rows = _realize(res.x)
    return SegmentedPulse(tuple(PulseSegment(*row) for row in rows)), float(-res.fun)


def save_pulse(path: str | Path, pulse: SegmentedPulse, metadata: dict | None = None) -> None:
    """Write a pulse as JSON: one record per segment plus free metadata."""
    record = {
        "metadata": metadata or {},
        "segments": [
            {
                "duration_ms": seg.duration,
                "amplitude_khz": seg.amplitude,
                "phase_rad": seg.phase,
                "offset_khz": seg.offset,
            }
            for seg in pulse.segments
        ],
    }
    Path(path).write_text(json.dumps(record, indent=2) + "\n")


def load_pulse(path: str | Path) -> tuple[SegmentedPulse, dict]:
    record = json.loads(Path(path).read_text())
    segments = tuple(
        PulseSegment(
            duration=seg["duration_ms"],
            amplitude=seg["amplitude_khz"],
            phase=seg["phase_rad"],
            offset=seg["offset_khz"],
        )
        for seg in record["segments"]
    )
    return SegmentedPulse(segments), record.get("metadata", {})
