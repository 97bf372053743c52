"""Classical engine for heat-bath cooling of diagonal qubit states.

Everything in this module acts on diagonal density matrices, stored as
probability vectors over the computational basis.  Conventions:

* qubit 1 is the most significant bit of the basis index,
* bit value 0 is the more probable outcome at positive polarization,
* polarizations are plain floats in [-1, 1],
* a product state has probs[b] = prod_i (1 + s_i(b) p_i) / 2 with
  s_i(b) = +1 where bit i of b is 0 and -1 where it is 1.

Cooling alternates a refresh of the reset qubit against a polarized bath
with a descending sort of the probability vector; the sort is the optimal
entropy-compression permutation for the target qubit.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

__all__ = [
    "ConvergenceError",
    "DiagonalState",
    "BathParameters",
    "Permutation",
    "Trajectory",
    "AsymptoteResult",
    "new_product_state",
    "polarization_of",
    "polarizations",
    "refresh",
    "swap_gate",
    "three_bit_compression",
    "apply_permutation",
    "ppa_sort_step",
    "run_ppa",
    "asymptotic_polarization",
]


class ConvergenceError(RuntimeError):
    """Iteration budget exhausted before reaching a fixed point."""


def _qubit_signs(n: int, qubit: int) -> np.ndarray:
    """Vector of +/-1 over basis indices: +1 where the qubit's bit is 0."""
    idx = np.arange(1 << n)
    return 1.0 - 2.0 * ((idx >> (n - qubit)) & 1)


@dataclass(frozen=True, eq=False)
class DiagonalState:
    """Diagonal n-qubit state: a probability vector over 2**n basis states.

    The stored array is read-only; operations return new states.
    """

    probs: np.ndarray

    def __post_init__(self) -> None:
        probs = np.asarray(self.probs, dtype=float).copy()
        size = probs.size
        if probs.ndim != 1 or size < 2 or size & (size - 1):
            raise ValueError("probs must be a 1-d vector of length 2**n, n >= 1")
        if probs.min() < -1e-12:
            raise ValueError("probabilities must be non-negative")
        if abs(probs.sum() - 1.0) > 1e-12:
            raise ValueError("probabilities must sum to 1")
        probs.flags.writeable = False
        object.__setattr__(self, "probs", probs)

    @property
    def n(self) -> int:
        """Number of qubits."""
        return self.probs.size.bit_length() - 1

    @classmethod
    def maximally_mixed(cls, n: int) -> "DiagonalState":
        if n < 1:
            raise ValueError("need at least one qubit")
        return cls(np.full(1 << n, 0.5 ** n))


@dataclass(frozen=True)
class BathParameters:
    """Heat bath seen by the reset qubit.

    p_bath is the bath polarization; eta in [0, 1] is the contact
    efficiency, so a refresh delivers p_refresh = eta * p_bath.
    """

    p_bath: float
    eta: float = 1.0

    def __post_init__(self) -> None:
        if not -1.0 <= self.p_bath <= 1.0:
            raise ValueError("bath polarization must lie in [-1, 1]")
        if not 0.0 <= self.eta <= 1.0:
            raise ValueError("contact efficiency must lie in [0, 1]")

    @property
    def p_refresh(self) -> float:
        """Polarization delivered to a freshly reset qubit."""
        return self.eta * self.p_bath


def new_product_state(pols: Sequence[float]) -> DiagonalState:
    """Build the product state with the given per-qubit polarizations.

    Parameters
    ----------
    pols : sequence of float
        Polarization of qubit i (1-based order, qubit 1 first), each
        in [-1, 1].
    """
    pols = list(pols)
    if not pols:
        raise ValueError("need at least one qubit")
    probs = np.array([1.0])
    for p in pols:
        if not -1.0 <= p <= 1.0:
            raise ValueError(f"polarization {p} outside [-1, 1]")
        probs = np.kron(probs, [(1.0 + p) / 2.0, (1.0 - p) / 2.0])
    return DiagonalState(probs)


def polarization_of(state: DiagonalState, qubit: int) -> float:
    """Marginal polarization of one qubit: P(bit=0) - P(bit=1)."""
    if not 1 <= qubit <= state.n:
        raise ValueError(f"qubit {qubit} out of range 1..{state.n}")
    return float(state.probs @ _qubit_signs(state.n, qubit))


def polarizations(state: DiagonalState) -> np.ndarray:
    """Marginal polarizations of all qubits, qubit 1 first."""
    return np.array([polarization_of(state, q) for q in range(1, state.n + 1)])


def refresh(state: DiagonalState, qubit: int, bath: BathParameters) -> DiagonalState:
    """Trace out one qubit and replace it with a freshly equilibrated one.

    The refreshed qubit carries polarization eta * p_bath and is
    uncorrelated with the rest of the register; all other marginals and
    their mutual correlations are untouched.
    """
    n = state.n
    if not 1 <= qubit <= n:
        raise ValueError(f"qubit {qubit} out of range 1..{n}")
    ax = qubit - 1
    marg = state.probs.reshape([2] * n).sum(axis=ax, keepdims=True)
    p = bath.p_refresh
    shape = [2 if i == ax else 1 for i in range(n)]
    fresh = np.array([(1.0 + p) / 2.0, (1.0 - p) / 2.0]).reshape(shape)
    return DiagonalState((marg * fresh).reshape(-1))


@dataclass(frozen=True, eq=False)
class Permutation:
    """Permutation of basis states: index b is sent to table[b]."""

    table: np.ndarray

    def __post_init__(self) -> None:
        table = np.asarray(self.table, dtype=np.intp).copy()
        if table.ndim != 1 or not np.array_equal(np.sort(table), np.arange(table.size)):
            raise ValueError("table must be a bijection on 0..N-1")
        table.flags.writeable = False
        object.__setattr__(self, "table", table)

    @property
    def n_states(self) -> int:
        return self.table.size

    @classmethod
    def identity(cls, n_states: int) -> "Permutation":
        return cls(np.arange(n_states))

    def compose(self, other: "Permutation") -> "Permutation":
        """Permutation equivalent to applying `other` first, then self."""
        if self.n_states != other.n_states:
            raise ValueError("size mismatch")
        return Permutation(self.table[other.table])

    def inverse(self) -> "Permutation":
        inv = np.empty_like(self.table)
        inv[self.table] = np.arange(self.table.size)
        return Permutation(inv)

    def to_matrix(self) -> np.ndarray:
        """Unitary matrix U with U |b> = |table[b]>."""
        mat = np.zeros((self.n_states, self.n_states), dtype=complex)
        mat[self.table, np.arange(self.n_states)] = 1.0
        return mat


def apply_permutation(state: DiagonalState, perm: Permutation) -> DiagonalState:
    """Relabel basis states: new probability at table[b] is the old one at b."""
    if perm.n_states != state.probs.size:
        raise ValueError("permutation size does not match state")
    out = np.empty_like(state.probs)
    out[perm.table] = state.probs
    return DiagonalState(out)


def swap_gate(i: int, j: int, n: int) -> Permutation:
    """Permutation that exchanges the bit values of qubits i and j."""
    if i == j:
        raise ValueError("swap qubits must be distinct")
    for q in (i, j):
        if not 1 <= q <= n:
            raise ValueError(f"qubit {q} out of range 1..{n}")
    idx = np.arange(1 << n)
    bi = (idx >> (n - i)) & 1
    bj = (idx >> (n - j)) & 1
    # flip both bits wherever they differ
    flip = ((bi ^ bj) << (n - i)) | ((bi ^ bj) << (n - j))
    return Permutation(idx ^ flip)


def three_bit_compression(n: int, targets: tuple[int, int, int]) -> Permutation:
    """Compression permutation on three qubits: exchange patterns 011 and 100.

    targets = (i, j, k) lists the boosted qubit first; the local pattern is
    read in that order.  Probability mass moves between the two exchanged
    patterns only, boosting the first qubit at the expense of the others.
    """
    i, j, k = targets
    if len({i, j, k}) != 3:
        raise ValueError("target qubits must be distinct")
    for q in targets:
        if not 1 <= q <= n:
            raise ValueError(f"qubit {q} out of range 1..{n}")
    idx = np.arange(1 << n)
    bi = (idx >> (n - i)) & 1
    bj = (idx >> (n - j)) & 1
    bk = (idx >> (n - k)) & 1
    match = ((bi == 0) & (bj == 1) & (bk == 1)) | ((bi == 1) & (bj == 0) & (bk == 0))
    # the two patterns differ in all three bits, so the exchange is an xor
    flip = (1 << (n - i)) | (1 << (n - j)) | (1 << (n - k))
    return Permutation(np.where(match, idx ^ flip, idx))


def ppa_sort_step(state: DiagonalState) -> tuple[DiagonalState, Permutation]:
    """Sort the probability vector into descending order.

    Returns the sorted state and the permutation realizing it.  Ties keep
    their input order, so an already sorted state maps to the identity.
    Descending order maximizes the qubit-1 polarization over every
    permutation of the diagonal.
    """
    order = np.argsort(-state.probs, kind="stable")
    table = np.empty_like(order)
    table[order] = np.arange(order.size)
    return DiagonalState(state.probs[order]), Permutation(table)


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Per-round record of a cooling run.

    polarizations has one row per round, one column per qubit; asymptote
    is the final qubit-1 polarization.
    """

    polarizations: np.ndarray
    converged: bool
    final_state: DiagonalState

    def __post_init__(self) -> None:
        pols = np.asarray(self.polarizations, dtype=float).copy()
        pols.flags.writeable = False
        object.__setattr__(self, "polarizations", pols)

    @property
    def rounds(self) -> int:
        return self.polarizations.shape[0]

    @property
    def asymptote(self) -> float:
        return float(self.polarizations[-1, 0])


def run_ppa(
    n: int,
    bath: BathParameters,
    reset_qubit: int | None = None,
    max_rounds: int = 100_000,
    tol: float = 1e-12,
) -> Trajectory:
    """Iterate refresh-then-sort rounds from the maximally mixed state.

    Each round refreshes the reset qubit (the last qubit by default)
    against the bath and then sorts the distribution.  The run stops when
    the sup-norm change of the full probability vector over a round drops
    below tol; the target-qubit polarization alone is a poor stopping
    signal because it plateaus for a round before compression gains begin.

    Returns a Trajectory; converged is False when max_rounds ran out first.
    """
    if n < 1:
        raise ValueError("need at least one qubit")
    if tol <= 0:
        raise ValueError("tol must be positive")
    if reset_qubit is None:
        reset_qubit = n
    if not 1 <= reset_qubit <= n:
        raise ValueError(f"reset qubit {reset_qubit} out of range 1..{n}")

    size = 1 << n
    signs = np.stack([_qubit_signs(n, q) for q in range(1, n + 1)])
    p = bath.p_refresh
    fresh_shape = [2 if i == reset_qubit - 1 else 1 for i in range(n)]
    fresh = np.array([(1.0 + p) / 2.0, (1.0 - p) / 2.0]).reshape(fresh_shape)

    probs = np.full(size, 1.0 / size)
    history = []
    converged = False
    for _ in range(max_rounds):
        prev = probs
        marg = probs.reshape([2] * n).sum(axis=reset_qubit - 1, keepdims=True)
        probs = (marg * fresh).reshape(-1)
        probs = probs[np.argsort(-probs, kind="stable")]
        history.append(signs @ probs)
        if np.max(np.abs(probs - prev)) < tol:
            converged = True
            break
    return Trajectory(np.array(history), converged, DiagonalState(probs))


class AsymptoteResult(NamedTuple):
    """Limiting qubit-1 polarization and the closed-form regime estimate."""

    value: float
    regime_estimate: float


def asymptotic_polarization(
    n: int,
    p_refresh: float,
    max_rounds: int = 1_000_000,
    tol: float = 1e-13,
) -> AsymptoteResult:
    """Limiting qubit-1 polarization of the refresh-and-sort iteration.

    Runs the iteration to a fixed point and pairs the result with the
    closed-form estimate min(2**(n-2) * p_refresh, 1), which is accurate
    in the dilute regime p_refresh << 2**-n and as an upper bound near
    saturation.

    Raises ConvergenceError when the fixed point is not reached within
    max_rounds.
    """
    traj = run_ppa(n, BathParameters(p_refresh), max_rounds=max_rounds, tol=tol)
    if not traj.converged:
        raise ConvergenceError(
            f"no fixed point within {max_rounds} rounds (n={n}, p={p_refresh})"
        )
    estimate = min(2.0 ** (n - 2) * p_refresh, 1.0)
    return AsymptoteResult(traj.asymptote, estimate)
