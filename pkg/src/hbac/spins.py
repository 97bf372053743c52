"""Spin dynamics for small nuclear registers.

Hamiltonians are expressed in kHz, times in ms, and propagators follow
U = exp(-i 2 pi H t), so the exponent is dimensionless.  Spins are
1-indexed and spin 1 is the most significant bit of the basis index,
matching the cooling engine.

The module covers three interaction forms on a labeled register:

* the isotropic exchange coupling between unlike species, which drives
  polarization transfer in the zero-quantum subspace,
* the truncated (zz) coupling between unlike species,
* the homonuclear register Hamiltonian with chemical shifts and the
  secular dipolar coupling, whose flip-flop terms matter when couplings
  rival the shift differences.

Toggle sequences of ideal delta-pulse rotations give zeroth-order
average Hamiltonians; two reference cycles are provided, one turning
the zz form into the exchange form and one reproducing the -1/2
scaling of homonuclear couplings under a transverse lock.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from .cooling import DiagonalState, new_product_state, polarizations

__all__ = [
    "MAX_SPINS",
    "SpinSystem",
    "ToggleStep",
    "ToggleSequence",
    "pauli",
    "collective_rotation",
    "exchange_hamiltonian",
    "natural_hamiltonian",
    "register_hamiltonian",
    "evolve",
    "transfer_efficiency",
    "transfer_curve",
    "optimal_transfer_time",
    "toggling_average",
    "balanced_xyz_cycle",
    "spin_lock_cycle",
    "state_correlation_fidelity",
]

# eigendecomposition stays exact and cheap at this size; larger registers
# belong to the diagonal cooling engine, which never exponentiates
MAX_SPINS = 5

_I2 = np.eye(2, dtype=complex)
_PAULI = {
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def _require_hermitian(H: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    H = np.asarray(H, dtype=complex)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise ValueError("operator must be a square matrix")
    scale = max(1.0, float(np.abs(H).max(initial=0.0)))
    if np.abs(H - H.conj().T).max(initial=0.0) > tol * scale:
        raise ValueError("operator must be Hermitian")
    return H


def pauli(spin: int, axis: str, m: int) -> np.ndarray:
    """Single-spin Pauli operator embedded in an m-spin register."""
    if axis not in _PAULI:
        raise ValueError(f"axis must be one of x, y, z, not {axis!r}")
    if not 1 <= spin <= m:
        raise ValueError(f"spin {spin} out of range 1..{m}")
    out = np.eye(1, dtype=complex)
    for i in range(1, m + 1):
        out = np.kron(out, _PAULI[axis] if i == spin else _I2)
    return out


def collective_rotation(
    m: int, axis: str, angle: float, spins: Iterable[int] | None = None
) -> np.ndarray:
    """Product of identical single-spin rotations exp(-i angle sigma/2).

    spins selects a subset of the register (1-based); by default every
    spin rotates.
    """
    if axis not in _PAULI:
        raise ValueError(f"axis must be one of x, y, z, not {axis!r}")
    chosen = set(range(1, m + 1)) if spins is None else set(spins)
    for s in chosen:
        if not 1 <= s <= m:
            raise ValueError(f"spin {s} out of range 1..{m}")
    u1 = np.cos(angle / 2) * _I2 - 1j * np.sin(angle / 2) * _PAULI[axis]
    out = np.eye(1, dtype=complex)
    for i in range(1, m + 1):
        out = np.kron(out, u1 if i in chosen else _I2)
    return out


@dataclass(frozen=True, eq=False)
class SpinSystem:
    """Labeled register of spin-1/2 nuclei with shifts and couplings in kHz.

    spins lists (label, species) pairs with species "C" or "H"; shifts
    are rotating-frame offsets; couplings is the symmetric pairwise
    dipolar strength matrix with zero diagonal.
    """

    spins: tuple[tuple[str, str], ...]
    shifts: np.ndarray
    couplings: np.ndarray

    def __post_init__(self) -> None:
        spins = tuple((str(label), str(species)) for label, species in self.spins)
        m = len(spins)
        if not 1 <= m <= MAX_SPINS:
            raise ValueError(f"spin count must lie in 1..{MAX_SPINS}")
        for _, species in spins:
            if species not in ("C", "H"):
                raise ValueError(f"species must be C or H, not {species!r}")
        labels = [label for label, _ in spins]
        if len(set(labels)) != m:
            raise ValueError("spin labels must be unique")
        shifts = np.asarray(self.shifts, dtype=float).copy()
        if shifts.shape != (m,):
            raise ValueError(f"shifts must have shape ({m},)")
        couplings = np.asarray(self.couplings, dtype=float).copy()
        if couplings.shape != (m, m):
            raise ValueError(f"couplings must have shape ({m}, {m})")
        if np.abs(couplings - couplings.T).max(initial=0.0) > 1e-12:
            raise ValueError("couplings must be symmetric")
        if np.abs(np.diag(couplings)).max(initial=0.0) > 1e-12:
            raise ValueError("coupling diagonal must be zero")
        shifts.flags.writeable = False
        couplings.flags.writeable = False
        object.__setattr__(self, "spins", spins)
        object.__setattr__(self, "shifts", shifts)
        object.__setattr__(self, "couplings", couplings)

    @property
    def m(self) -> int:
        """Number of spins."""
        return len(self.spins)

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(label for label, _ in self.spins)

    def species_of(self, spin: int) -> str:
        if not 1 <= spin <= self.m:
            raise ValueError(f"spin {spin} out of range 1..{self.m}")
        return self.spins[spin - 1][1]

    def index_of(self, label: str) -> int:
        """1-based position of the spin with the given label."""
        for i, (name, _) in enumerate(self.spins, start=1):
            if name == label:
                return i
        raise ValueError(f"no spin labeled {label!r}")


def _hetero_pairs(sys: SpinSystem) -> list[tuple[int, int]]:
    return [
        (i, j)
        for i in range(1, sys.m + 1)
        for j in range(i + 1, sys.m + 1)
        if sys.species_of(i) != sys.species_of(j)
    ]


def exchange_hamiltonian(sys: SpinSystem) -> np.ndarray:
    """Isotropic exchange coupling summed over unlike-species pairs.

    Each C-H pair contributes D/3 * (xx + yy + zz)/2.  The operator
    conserves the total z component, so polarization moves between the
    pair members without leaving the zero-quantum subspace.
    """
    pairs = _hetero_pairs(sys)
    if not pairs:
        raise ValueError("system has no heteronuclear pairs")
    dim = 1 << sys.m
    H = np.zeros((dim, dim), dtype=complex)
    for i, j in pairs:
        d = sys.couplings[i - 1, j - 1]
        if d == 0.0:
            continue
        for ax in "xyz":
            H += (d / 3.0) * (pauli(i, ax, sys.m) @ pauli(j, ax, sys.m)) / 2.0
    return H


def natural_hamiltonian(sys: SpinSystem) -> np.ndarray:
    """Truncated coupling between unlike species: D * zz / 2 per pair.

    Diagonal in the computational basis.
    """
    pairs = _hetero_pairs(sys)
    if not pairs:
        raise ValueError("system has no heteronuclear pairs")
    dim = 1 << sys.m
    H = np.zeros((dim, dim), dtype=complex)
    for i, j in pairs:
        d = sys.couplings[i - 1, j - 1]
        if d == 0.0:
            continue
        H += d * (pauli(i, "z", sys.m) @ pauli(j, "z", sys.m)) / 2.0
    return H


def register_hamiltonian(sys: SpinSystem, flip_flop: bool = True) -> np.ndarray:
    """Homonuclear register: chemical shifts plus secular dipolar coupling.

    H = sum_i nu_i z_i/2 + sum_{i<j} D_ij (2 zz - xx - yy)/4.  The
    flip-flop (xx + yy) part is kept by default because the couplings
    here are comparable to the shift differences; flip_flop=False drops
    it, leaving the weak-coupling form sum D_ij zz/2.
    """
    species = {sys.species_of(i) for i in range(1, sys.m + 1)}
    if len(species) != 1:
        raise ValueError("register must contain a single species")
    dim = 1 << sys.m
    H = np.zeros((dim, dim), dtype=complex)
    for i in range(1, sys.m + 1):
        if sys.shifts[i - 1] != 0.0:
            H += sys.shifts[i - 1] * pauli(i, "z", sys.m) / 2.0
    for i in range(1, sys.m + 1):
        for j in range(i + 1, sys.m + 1):
            d = sys.couplings[i - 1, j - 1]
            if d == 0.0:
                continue
            zz = pauli(i, "z", sys.m) @ pauli(j, "z", sys.m)
            if flip_flop:
                xx = pauli(i, "x", sys.m) @ pauli(j, "x", sys.m)
                yy = pauli(i, "y", sys.m) @ pauli(j, "y", sys.m)
                H += d * (2.0 * zz - xx - yy) / 4.0
            else:
                H += d * zz / 2.0
    return H


def evolve(H: np.ndarray, t: float) -> np.ndarray:
    """Propagator U = exp(-i 2 pi H t) for H in kHz and t in ms."""
    H = _require_hermitian(H)
    vals, vecs = np.linalg.eigh(H)
    return (vecs * np.exp(-2j * np.pi * vals * t)) @ vecs.conj().T


def _transfer_setup(
    sys: SpinSystem, source: int, target: int
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    if source == target:
        raise ValueError("source and target must differ")
    for s in (source, target):
        if not 1 <= s <= sys.m:
            raise ValueError(f"spin {s} out of range 1..{sys.m}")
    pols = [1.0 if i == source else 0.0 for i in range(1, sys.m + 1)]
    rho0 = np.diag(new_product_state(pols).probs).astype(complex)
    z_target = pauli(target, "z", sys.m)
    return exchange_hamiltonian(sys), rho0, z_target


def transfer_efficiency(sys: SpinSystem, source: int, target: int, t: float) -> float:
    """Polarization arriving on the target spin after exchange evolution.

    The source spin starts fully polarized with every other spin
    maximally mixed; the return value is the target's z polarization
    after evolving under the exchange coupling for time t.
    """
    H, rho0, z_target = _transfer_setup(sys, source, target)
    U = evolve(H, t)
    return float(np.real(np.trace(U @ rho0 @ U.conj().T @ z_target)))


def transfer_curve(
    sys: SpinSystem, source: int, target: int, times: Sequence[float]
) -> np.ndarray:
    """transfer_efficiency sampled over many times with one diagonalization."""
    H, rho0, z_target = _transfer_setup(sys, source, target)
    vals, vecs = np.linalg.eigh(H)
    rho_eig = vecs.conj().T @ rho0 @ vecs
    z_eig = vecs.conj().T @ z_target @ vecs
    out = np.empty(len(times))
    for k, t in enumerate(times):
        phase = np.exp(-2j * np.pi * vals * t)
        evolved = (phase[:, None] * rho_eig) * phase.conj()[None, :]
        out[k] = float(np.real(np.trace(evolved @ z_eig)))
    return out


def optimal_transfer_time(
    sys: SpinSystem,
    source: int,
    target: int,
    t_max: float,
    samples: int = 512,
) -> tuple[float, float]:
    """Time in (0, t_max] maximizing the transfer, with the value reached.

    A coarse scan brackets the best peak and a bounded scalar search
    refines it.
    """
    if t_max <= 0:
        raise ValueError("t_max must be positive")
    grid = np.linspace(0.0, t_max, samples)
    curve = transfer_curve(sys, source, target, grid)
    k = int(np.argmax(curve))
    lo = grid[max(k - 1, 0)]
    hi = grid[min(k + 1, samples - 1)]
    res = minimize_scalar(
        lambda t: -transfer_efficiency(sys, source, target, t),
        bounds=(lo, hi),
        method="bounded",
        options={"xatol": 1e-12},
    )
    return float(res.x), float(-res.fun)


@dataclass(frozen=True, eq=False)
class ToggleStep:
    """One cycle step: an instantaneous rotation followed by a dwell (ms)."""

    rotation: np.ndarray
    dwell: float

    def __post_init__(self) -> None:
        rot = np.asarray(self.rotation, dtype=complex).copy()
        if rot.ndim != 2 or rot.shape[0] != rot.shape[1]:
            raise ValueError("rotation must be a square matrix")
        if np.abs(rot @ rot.conj().T - np.eye(rot.shape[0])).max() > 1e-10:
            raise ValueError("rotation must be unitary")
        if not self.dwell > 0:
            raise ValueError("dwell must be positive")
        rot.flags.writeable = False
        object.__setattr__(self, "rotation", rot)

    @classmethod
    def collective(
        cls,
        m: int,
        axis: str,
        angle: float,
        dwell: float,
        spins: Iterable[int] | None = None,
    ) -> "ToggleStep":
        return cls(collective_rotation(m, axis, angle, spins), dwell)


@dataclass(frozen=True, eq=False)
class ToggleSequence:
    """Ordered toggle steps forming one cycle of a pulse sequence."""

    steps: tuple[ToggleStep, ...]

    def __post_init__(self) -> None:
        steps = tuple(self.steps)
        if not steps:
            raise ValueError("sequence must contain at least one step")
        dim = steps[0].rotation.shape[0]
        if any(step.rotation.shape[0] != dim for step in steps):
            raise ValueError("all steps must share one dimension")
        object.__setattr__(self, "steps", steps)

    @property
    def cycle_time(self) -> float:
        return float(sum(step.dwell for step in self.steps))

    def net_rotation(self) -> np.ndarray:
        """Accumulated rotation after the full cycle."""
        dim = self.steps[0].rotation.shape[0]
        acc = np.eye(dim, dtype=complex)
        for step in self.steps:
            acc = step.rotation @ acc
        return acc


def toggling_average(H: np.ndarray, seq: ToggleSequence) -> np.ndarray:
    """Zeroth-order average Hamiltonian over one toggle cycle.

    Returns (1/T) sum_k dwell_k * R_k^dag H R_k, where R_k is the
    rotation accumulated up to and including step k's pulse.
    """
    H = _require_hermitian(H)
    if H.shape[0] != seq.steps[0].rotation.shape[0]:
        raise ValueError("operator and sequence dimensions differ")
    acc = np.eye(H.shape[0], dtype=complex)
    out = np.zeros_like(H)
    for step in seq.steps:
        acc = step.rotation @ acc
        out += step.dwell * (acc.conj().T @ H @ acc)
    return out / seq.cycle_time


def balanced_xyz_cycle(m: int, dwell: float = 1e-3) -> ToggleSequence:
    """Six equal dwells whose frames visit the axes z, x, y, y, x, z.

    The palindromic layout closes the cycle (net rotation is the
    identity) and spends equal time on each axis, so a zz coupling
    averages to the isotropic exchange form with prefactor 1/3.
    """
    a = collective_rotation(m, "y", -np.pi / 2)
    b = collective_rotation(m, "x", np.pi / 2)
    eye = np.eye(1 << m, dtype=complex)
    rotations = (eye, a, b, eye, b.conj().T, a.conj().T)
    return ToggleSequence(tuple(ToggleStep(r, dwell) for r in rotations))


def spin_lock_cycle(m: int, dwell: float = 1e-3) -> ToggleSequence:
    """Four equal dwells under successive collective x rotations.

    The frames alternate z, y, z, y, which averages the homonuclear
    secular dipolar form to -1/2 times the same form quantized along x,
    the scaling characteristic of a transverse lock.
    """
    rx = collective_rotation(m, "x", np.pi / 2)
    eye = np.eye(1 << m, dtype=complex)
    steps = (ToggleStep(eye, dwell),) + tuple(ToggleStep(rx, dwell) for _ in range(3))
    return ToggleSequence(steps)


def state_correlation_fidelity(
    achieved: DiagonalState, ideal: DiagonalState, atol: float = 1e-12
) -> float:
    """Mean ratio of achieved to ideal polarization over signal qubits.

    Qubits whose ideal polarization is below atol in magnitude carry no
    signal and are excluded from the mean; if that excludes every qubit
    the comparison is meaningless and a ValueError is raised.
    """
    if achieved.n != ideal.n:
        raise ValueError("states must have the same qubit count")
    got = polarizations(achieved)
    want = polarizations(ideal)
    mask = np.abs(want) > atol
    if not mask.any():
        raise ValueError("every ideal polarization is zero")
    return float(np.mean(got[mask] / want[mask]))
