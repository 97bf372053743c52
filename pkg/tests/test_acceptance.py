"""Acceptance gate: the shipped guarantees, one printed verdict per item.

Run with -s to see the verdict lines; each also asserts, so the gate
fails loudly under plain pytest.  Stated runtime budgets are asserted
too: blowing one is a regression even if the numbers are right.
"""

import itertools
import time

import numpy as np

from hbac.cooling import (
    BathParameters,
    DiagonalState,
    apply_permutation,
    asymptotic_polarization,
    polarization_of,
    ppa_sort_step,
    run_ppa,
)
from hbac.experiment import (
    DEFAULT_BATH,
    REFERENCE_RUN,
    default_schedule,
    fit_error_model,
    run_protocol,
    summarize,
)
from hbac.pulses import OptimizationConfig, RFDistribution, optimize_pulse
from hbac.spins import (
    SpinSystem,
    optimal_transfer_time,
    pauli,
    spin_lock_cycle,
    balanced_xyz_cycle,
    exchange_hamiltonian,
    natural_hamiltonian,
    toggling_average,
    transfer_curve,
)
from hbac.cooling import swap_gate


def _report(num: int, ok: bool, detail: str) -> None:
    print(f"criterion {num}: {'PASS' if ok else 'FAIL'} - {detail}")
    assert ok, f"criterion {num}: {detail}"


def _pair(d: float = 19.0) -> SpinSystem:
    return SpinSystem(
        (("C", "C"), ("H", "H")),
        np.zeros(2),
        np.array([[0.0, d], [d, 0.0]]),
    )


def test_criterion_1_six_step_protocol():
    start = time.perf_counter()
    bath = BathParameters(p_bath=2.4e-5, eta=1.0)
    reports = run_protocol(default_schedule(), bath)
    final = reports[-1].value_for(1)
    elapsed = time.perf_counter() - start
    ok = abs(final - 1.5) / 1.5 <= 1e-6 and elapsed < 1.0
    _report(1, ok, f"six-step final polarization {final:.8f} P' (target 1.5, {elapsed:.2f}s)")


def test_criterion_2_three_qubit_asymptote():
    start = time.perf_counter()
    bath = BathParameters(p_bath=2.4e-5, eta=1.0)
    traj = run_ppa(3, bath)
    elapsed = time.perf_counter() - start
    target = 2 * bath.p_refresh
    ok = (
        traj.converged
        and abs(traj.asymptote - target) / target <= 1e-3
        and elapsed < 1.0
    )
    _report(2, ok, f"n=3 asymptote {traj.asymptote:.4e} (target {target:.4e}, {elapsed:.2f}s)")


def test_criterion_3_scaling_law():
    start = time.perf_counter()
    p = 1e-6
    ratios = []
    ok = True
    for n in range(2, 7):
        res = asymptotic_polarization(n, p)
        ratios.append(res.value / p)
        ok &= abs(res.value - 2.0 ** (n - 2) * p) / (2.0 ** (n - 2) * p) <= 1e-2
    saturated = asymptotic_polarization(6, 0.2).value
    ok &= saturated >= 0.99
    elapsed = time.perf_counter() - start
    ok &= elapsed < 10.0
    _report(
        3,
        ok,
        f"dilute ratios {[f'{r:.3f}' for r in ratios]}, n=6 at P'=0.2 -> {saturated:.4f} ({elapsed:.2f}s)",
    )


def test_criterion_4_swap_timing():
    start = time.perf_counter()
    sys_ = _pair(19.0)
    tau, eta = optimal_transfer_time(sys_, source=2, target=1, t_max=0.1)
    # independent check: zero-quantum two-level Rabi formula
    times = np.linspace(0.0, 0.1, 257)
    oracle = np.sin(2 * np.pi * 19.0 * times / 3.0) ** 2
    curve = transfer_curve(sys_, 2, 1, times)
    curve_err = float(np.max(np.abs(curve - oracle)))
    elapsed = time.perf_counter() - start
    ok = (
        abs(tau - 3.0 / 76.0) <= 1e-6
        and abs(eta - 1.0) <= 1e-6
        and curve_err <= 1e-6
        and elapsed < 1.0
    )
    _report(
        4,
        ok,
        f"peak at {tau * 1e3:.4f} us, eta {eta:.8f}, Rabi-oracle deviation {curve_err:.1e} ({elapsed:.2f}s)",
    )


def test_criterion_5_average_hamiltonian_identities():
    start = time.perf_counter()
    sys_ = _pair(19.0)
    avg = toggling_average(natural_hamiltonian(sys_), balanced_xyz_cycle(2))
    exchange_err = float(np.max(np.abs(avg - exchange_hamiltonian(sys_))))

    d = 19.0
    xx, yy, zz = (
        pauli(1, a, 2) @ pauli(2, a, 2) for a in ("x", "y", "z")
    )
    secular = d * (2 * zz - xx - yy) / 4.0
    locked = toggling_average(secular, spin_lock_cycle(2))
    expected = -0.5 * d * (2 * xx - yy - zz) / 4.0
    lock_err = float(np.max(np.abs(locked - expected)))
    elapsed = time.perf_counter() - start
    ok = exchange_err <= 1e-12 and lock_err <= 1e-12 and elapsed < 1.0
    _report(
        5,
        ok,
        f"balanced-xyz deviation {exchange_err:.1e}, spin-lock -1/2 deviation {lock_err:.1e} ({elapsed:.2f}s)",
    )


def test_criterion_6_experimental_reproduction():
    start = time.perf_counter()
    err = fit_error_model(REFERENCE_RUN)
    forward = run_protocol(default_schedule(), DEFAULT_BATH, err)
    step5 = forward[4].polarizations
    step6 = forward[5].value_for(1)
    observed = summarize(REFERENCE_RUN)
    modeled = summarize(forward)
    elapsed = time.perf_counter() - start
    ok = (
        np.all(np.abs(step5 - np.array([0.88, 0.83, 0.76])) <= 0.05)
        and abs(step6 - 1.22) <= 0.03
        and abs(observed["boost"] - 0.48) <= 0.03
        and abs(modeled["boost"] - 0.48) <= 0.03
        and abs(observed["fidelity"] - 0.81) <= 0.01
        and abs(modeled["fidelity"] - 0.81) <= 0.01
        and elapsed < 5.0
    )
    _report(
        6,
        ok,
        "step5 ({:.3f}, {:.3f}, {:.3f}), step6 {:.3f}, boost {:.1%}, F {:.3f} ({:.2f}s)".format(
            *step5, step6, observed["boost"], observed["fidelity"], elapsed
        ),
    )


def test_criterion_7_sort_optimality():
    start = time.perf_counter()
    rng = np.random.default_rng(7)
    perms = np.array(list(itertools.permutations(range(8))))
    signs = np.where(np.arange(8) < 4, 1.0, -1.0)  # qubit 1 is the MSB
    sign_rows = signs[perms]  # (40320, 8)
    worst = None
    ok = True
    for _ in range(1000):
        # dyadic rationals keep every signed sum exact in binary floats
        cuts = np.sort(rng.integers(0, 2**20 + 1, size=7))
        parts = np.diff(np.concatenate(([0], cuts, [2**20]))) / 2.0**20
        state = DiagonalState(parts)
        sorted_state, _ = ppa_sort_step(state)
        achieved = polarization_of(sorted_state, 1)
        best = float(np.max(sign_rows @ state.probs))
        if achieved != best:
            ok = False
            worst = (achieved, best)
            break
    elapsed = time.perf_counter() - start
    ok &= elapsed < 60.0
    detail = (
        f"1000 random states, sort always optimal vs 8! brute force ({elapsed:.2f}s)"
        if worst is None
        else f"sort gave {worst[0]} vs brute-force best {worst[1]}"
    )
    _report(7, ok, detail)


def test_criterion_8_pulse_optimization():
    start = time.perf_counter()
    register = SpinSystem(
        (("a", "C"), ("b", "C")),
        np.array([0.5, -0.5]),
        np.array([[0.0, 1.0], [1.0, 0.0]]),
    )
    target = swap_gate(1, 2, 2)
    cfg = OptimizationConfig()
    dist = RFDistribution.gauss_hermite(n=5, sigma=0.062)
    first = optimize_pulse(register, target, cfg, dist)
    second = optimize_pulse(register, target, cfg, dist)
    elapsed = time.perf_counter() - start
    identical = (
        first.pulse.segments == second.pulse.segments
        and first.fidelity == second.fidelity
    )
    ok = first.fidelity >= 0.99 and identical and elapsed < 300.0
    _report(
        8,
        ok,
        f"swap mean fidelity {first.fidelity:.4f} (min {first.min_fidelity:.4f}), "
        f"same-seed runs identical: {identical} ({elapsed:.1f}s)",
    )


def test_criterion_9_excluded_measurements():
    # The physical NMR measurements (recorded spectra, the hardware
    # refresh efficiency) are out of scope by design; they enter only
    # through the fitted error model exercised in criterion 6.
    _report(9, True, "physical measurements excluded by design (N/A)")
