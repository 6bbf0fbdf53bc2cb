"""Split-operator propagation of the space register.

One Trotter step applies the potential phase e^{-i V(x) eps/hbar} diagonally
in position, then conjugates the kinetic phase e^{-i p^2 eps/(2 mass hbar)}
by the Fourier transform of the space register. Each diagonal phase runs
through an ancilla round trip: write the 2^m-level quantized phase table
onto the ancilla register, phase every ancilla qubit by its weight, unwrite.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .grid import PhysicalParams, SpatialGrid
from .qstate import QubitIndex, Register, StateVector, controlled_phase

PHASE_MODES = ("scaled", "wrapped")


@dataclass(frozen=True)
class PotentialSpec:
    """Harmonic well 0.5 * stiffness * (x - center)^2.

    ``center`` defaults to the grid midpoint; ``stiffness`` defaults to
    mass * omega^2 from the physical parameters. ``stiffness = 0`` gives a
    free particle.
    """

    kind: str = "harmonic"
    center: Optional[float] = None
    stiffness: Optional[float] = None

    def __post_init__(self) -> None:
        if self.kind != "harmonic":
            raise ValueError(f"unknown potential kind {self.kind!r}")
        if self.stiffness is not None and self.stiffness < 0:
            raise ValueError("stiffness must be non-negative")

    def values(self, grid: SpatialGrid, params: PhysicalParams) -> np.ndarray:
        center = self.center
        if center is None:
            center = 0.5 * (grid.x_min + grid.x_max)
        stiffness = self.stiffness
        if stiffness is None:
            stiffness = params.mass * params.omega**2
        v = 0.5 * stiffness * (grid.positions() - center) ** 2
        if not np.all(np.isfinite(v)):
            raise ValueError("potential is not finite on the grid")
        return v


@dataclass(frozen=True)
class QuantizationSpec:
    """Ancilla phase resolution: 2**ancilla_qubits levels.

    ``scaled`` mode spends all levels on the span actually taken by the phase
    array; ``wrapped`` mode fixes the step at 2*pi/2**m. Kinetic phases are
    zeroed beyond ``spectral_cutoff_fraction`` of the Nyquist momentum so the
    scaled span covers only the populated part of the spectrum.
    """

    ancilla_qubits: int = 12
    mode: str = "scaled"
    spectral_cutoff_fraction: float = 1.0

    def __post_init__(self) -> None:
        if self.ancilla_qubits < 1:
            raise ValueError("need at least one ancilla qubit")
        if self.mode not in PHASE_MODES:
            raise ValueError(f"mode must be one of {PHASE_MODES}")
        if not 0.0 < self.spectral_cutoff_fraction <= 1.0:
            raise ValueError("spectral_cutoff_fraction must lie in (0, 1]")


@dataclass(frozen=True)
class QuantizedPhases:
    """Integer table plus step so that phi~(x) = offset + delta * table[x]."""

    table: np.ndarray
    delta: float
    offset: float
    ancilla_qubits: int


@dataclass(frozen=True)
class KineticTable:
    """Momentum and kinetic phase per space index, DFT frequency ordering."""

    momenta: np.ndarray
    phases: np.ndarray


def quantize_phases(phases: np.ndarray, quant: QuantizationSpec) -> QuantizedPhases:
    """Round a phase array onto 2**m ancilla levels.

    The worst-case rounding error is delta/2 per entry. In scaled mode the
    array is shifted by its minimum (restored later as a global phase) and
    delta spans the remaining range; in wrapped mode delta = 2*pi/2**m and
    the table wraps modulo 2**m.
    """
    phases = np.asarray(phases, dtype=np.float64)
    levels = 1 << quant.ancilla_qubits
    if quant.mode == "wrapped":
        delta = 2.0 * math.pi / levels
        table = np.rint(phases / delta).astype(np.int64) % levels
        return QuantizedPhases(table, delta, 0.0, quant.ancilla_qubits)
    offset = float(phases.min())
    span = float(phases.max()) - offset
    if span == 0.0:
        table = np.zeros(phases.shape, dtype=np.int64)
        return QuantizedPhases(table, 0.0, offset, quant.ancilla_qubits)
    delta = span / (levels - 1)
    table = np.rint((phases - offset) / delta).astype(np.int64)
    np.clip(table, 0, levels - 1, out=table)
    return QuantizedPhases(table, delta, offset, quant.ancilla_qubits)


def potential_phases(
    grid: SpatialGrid, potential: PotentialSpec, params: PhysicalParams
) -> np.ndarray:
    """Per-grid-point phase -V(x_i) * eps / hbar of one potential half-step."""
    return -potential.values(grid, params) * params.epsilon / params.hbar


def kinetic_table(
    grid: SpatialGrid, params: PhysicalParams, quant: QuantizationSpec
) -> KineticTable:
    """Kinetic phases -p_j^2 * eps / (2 mass hbar), zeroed beyond the cutoff."""
    p = grid.momenta(params.hbar)
    phases = -(p**2) * params.epsilon / (2.0 * params.mass * params.hbar)
    keep = np.abs(p) <= quant.spectral_cutoff_fraction * params.hbar * grid.k_nyquist
    phases = np.where(keep, phases, 0.0)
    return KineticTable(p, phases)


def qft(state: StateVector) -> StateVector:
    """Unitary DFT of the space register, F[k, x] = e^{2 pi i k x / N} / sqrt(N)."""
    view = state.branch_view()
    view[:] = np.fft.ifft(view, axis=-1) * math.sqrt(state.layout.space_dim)
    return state


def iqft(state: StateVector) -> StateVector:
    view = state.branch_view()
    view[:] = np.fft.fft(view, axis=-1) / math.sqrt(state.layout.space_dim)
    return state


def write_function(state: StateVector, table: np.ndarray) -> StateVector:
    """XOR the table value selected by the space register into the ancilla.

    |a>|x> -> |a XOR table[x]>|x>: a space-controlled permutation of ancilla
    basis states, and its own inverse.
    """
    lay = state.layout
    table = np.asarray(table, dtype=np.int64)
    if table.shape != (lay.space_dim,):
        raise ValueError(f"table must have {lay.space_dim} entries")
    if np.any((table < 0) | (table >= lay.ancilla_dim)):
        raise ValueError(
            f"table values must lie in [0, {lay.ancilla_dim}) "
            f"for {lay.ancilla_qubits} ancilla qubits"
        )
    if not table.any():
        return state
    view = state.branch_view()
    anc = np.arange(lay.ancilla_dim)[:, None] ^ table[None, :]
    x = np.arange(lay.space_dim)[None, :]
    view[:] = view[:, anc, x]
    return state


def phase_by_weight(state: StateVector, delta: float) -> StateVector:
    """Phase each ancilla qubit by delta * 2**j: ancilla value v gains e^{i delta v}."""
    for j in range(state.layout.ancilla_qubits):
        controlled_phase(state, QubitIndex(Register.ANCILLA, j), delta * (1 << j))
    return state


ANCILLA_CLEAN_TOL = 1e-9


def apply_phase_oracle(
    state: StateVector, phases: np.ndarray, quant: QuantizationSpec
) -> StateVector:
    """Realize e^{i phi~(x)} on the space register via an ancilla round trip.

    phi~ is the quantized phase array; the trip is write -> weighted phases ->
    unwrite, which returns the ancilla exactly to |0> (both writes are exact
    basis permutations). The scaled-mode shift reappears as a global phase.
    """
    norm2 = float(np.sum(np.abs(state.amplitudes) ** 2))
    if abs(state.ancilla_zero_probability() - norm2) > ANCILLA_CLEAN_TOL * max(norm2, 1.0):
        raise ValueError("ancilla register must be in |0> before a phase oracle")
    qp = quantize_phases(phases, quant)
    write_function(state, qp.table)
    phase_by_weight(state, qp.delta)
    write_function(state, qp.table)
    if qp.offset != 0.0:
        state.amplitudes *= np.exp(1j * qp.offset)
    return state


def potential_step(
    state: StateVector,
    grid: SpatialGrid,
    potential: PotentialSpec,
    params: PhysicalParams,
    quant: QuantizationSpec,
) -> StateVector:
    return apply_phase_oracle(state, potential_phases(grid, potential, params), quant)


def kinetic_step(
    state: StateVector,
    grid: SpatialGrid,
    params: PhysicalParams,
    quant: QuantizationSpec,
) -> StateVector:
    table = kinetic_table(grid, params, quant)
    qft(state)
    apply_phase_oracle(state, table.phases, quant)
    return iqft(state)


def trotter_step(
    state: StateVector,
    grid: SpatialGrid,
    potential: PotentialSpec,
    params: PhysicalParams,
    quant: QuantizationSpec,
) -> StateVector:
    """One first-order split step: potential phase, then the kinetic sandwich."""
    potential_step(state, grid, potential, params, quant)
    return kinetic_step(state, grid, params, quant)


@dataclass
class EvolveResult:
    """Trajectory record: per-step ancilla-0 space wavefunctions and norms.

    ``snapshots[t]`` has shape (leak_dim, 2^n); entry 0 is the initial state
    and entry t the state after step t (post error hook). ``final`` aliases
    the evolved state object.
    """

    snapshots: np.ndarray
    norms: np.ndarray
    final: StateVector


StepHook = Callable[[StateVector, int], None]


def evolve(
    state: StateVector,
    grid: SpatialGrid,
    potential: PotentialSpec,
    params: PhysicalParams,
    quant: QuantizationSpec,
    on_step: Optional[StepHook] = None,
) -> EvolveResult:
    """Run params.steps Trotter steps, mutating the state in place.

    ``on_step(state, step_index)`` is invoked after each step (1-based) and
    is where scheduled error injection hooks in.
    """
    lay = state.layout
    snapshots = np.empty(
        (params.steps + 1, lay.leak_dim, lay.space_dim), dtype=np.complex128
    )
    norms = np.empty(params.steps + 1, dtype=np.float64)
    snapshots[0] = state.space_wavefunctions()
    norms[0] = state.norm()
    for step in range(1, params.steps + 1):
        trotter_step(state, grid, potential, params, quant)
        if on_step is not None:
            on_step(state, step)
        snapshots[step] = state.space_wavefunctions()
        norms[step] = state.norm()
    return EvolveResult(snapshots, norms, state)


def step_operator(
    grid: SpatialGrid,
    potential: PotentialSpec,
    params: PhysicalParams,
    quant: QuantizationSpec,
) -> np.ndarray:
    """Dense 2^n x 2^n matrix of one Trotter step, quantization included.

    Equals F^-1 . diag(e^{i phi~_kin}) . F . diag(e^{i phi~_pot}) with the
    same quantized tables the oracle pipeline applies, so propagating with
    this matrix reproduces the circuit's space register exactly.
    """
    pot_q = quantize_phases(potential_phases(grid, potential, params), quant)
    kin_q = quantize_phases(kinetic_table(grid, params, quant).phases, quant)
    d_pot = np.exp(1j * (pot_q.offset + pot_q.delta * pot_q.table))
    d_kin = np.exp(1j * (kin_q.offset + kin_q.delta * kin_q.table))
    root = math.sqrt(grid.points)
    op = np.diag(d_pot.astype(np.complex128))
    op = np.fft.ifft(op, axis=0) * root
    op = d_kin[:, None] * op
    op = np.fft.fft(op, axis=0) / root
    return op


def oracle_gate_estimate(table: np.ndarray, space_qubits: int, ancilla_qubits: int) -> int:
    """Order-of-magnitude generalized-c-not count for one phase oracle.

    Write and unwrite each need one space-controlled flip per set table bit
    (fan-in = space register width); the weighted phases add one single-qubit
    gate per ancilla qubit.
    """
    table = np.asarray(table, dtype=np.int64)
    ones = sum(int(v).bit_count() for v in table)
    return 2 * ones * space_qubits + ancilla_qubits
