"""Random error models: single-qubit memory errors and two-qubit leaks.

A memory error is a random 2x2 unitary applied to one space qubit each
scheduled timestep, with exactly one of its three angles (alpha, beta,
theta) drawn uniformly in [-max, +max] per application. A leak error
entangles a space qubit with the leak qubit through one of two 4x4
dilations, U1 (pure decoherence) or U2 (decoherence plus relaxation).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Union

import numpy as np

from .qstate import QubitIndex, Register, StateVector, apply_1q, apply_2q


class MemoryMode(str, Enum):
    ALPHA = "alpha"
    BETA = "beta"
    THETA = "theta"


class LeakKind(str, Enum):
    U1 = "U1"
    U2 = "U2"


def _check_target(target: QubitIndex) -> None:
    if target.register is not Register.SPACE:
        raise ValueError("error target must be a space qubit")


@dataclass(frozen=True)
class MemoryErrorSpec:
    """One-parameter memory error on a space qubit, drawn per application."""

    mode: MemoryMode
    max_radians: float
    target: QubitIndex

    def __post_init__(self) -> None:
        if self.max_radians < 0:
            raise ValueError("max_radians must be non-negative")
        _check_target(self.target)


@dataclass(frozen=True)
class LeakErrorSpec:
    """Leak dilation on (leak qubit, space qubit), theta drawn per application."""

    kind: LeakKind
    max_radians: float
    target: QubitIndex

    def __post_init__(self) -> None:
        if self.max_radians < 0:
            raise ValueError("max_radians must be non-negative")
        _check_target(self.target)


ErrorSpec = Union[MemoryErrorSpec, LeakErrorSpec]


@dataclass(frozen=True)
class ErrorSchedule:
    """Steps [first_step, last_step] (1-based, both ends inclusive) get errors."""

    first_step: int = 10
    last_step: int = 30
    total_steps: int = 40

    def __post_init__(self) -> None:
        if not 1 <= self.first_step <= self.last_step <= self.total_steps:
            raise ValueError("need 1 <= first_step <= last_step <= total_steps")

    def active(self, step_index: int) -> bool:
        return self.first_step <= step_index <= self.last_step

    @property
    def applications(self) -> int:
        return self.last_step - self.first_step + 1


@dataclass(frozen=True)
class PoincareVector:
    """Bloch/Poincare parametrization of a single-qubit density matrix."""

    x: float
    y: float
    z: float

    def __post_init__(self) -> None:
        r2 = self.x**2 + self.y**2 + self.z**2
        if r2 > 1.0 + 1e-12:
            raise ValueError(f"(X, Y, Z) length {math.sqrt(r2):.6f} exceeds 1")

    def density(self) -> np.ndarray:
        """rho = 0.5 * [[1+Z, X-iY], [X+iY, 1-Z]]."""
        return 0.5 * np.array(
            [
                [1.0 + self.z, self.x - 1j * self.y],
                [self.x + 1j * self.y, 1.0 - self.z],
            ],
            dtype=np.complex128,
        )


def poincare_from_density(rho: np.ndarray) -> PoincareVector:
    rho = np.asarray(rho, dtype=np.complex128)
    x = float(np.real(rho[1, 0] + rho[0, 1]))
    y = float(np.imag(rho[1, 0] - rho[0, 1]))
    z = float(np.real(rho[0, 0] - rho[1, 1]))
    return PoincareVector(x, y, z)


def memory_error_matrix(alpha: float, beta: float, theta: float) -> np.ndarray:
    """[[cos t, e^{ia} sin t], [-e^{ib} sin t, e^{i(a+b)} cos t]], unitary."""
    c, s = math.cos(theta), math.sin(theta)
    ea, eb = np.exp(1j * alpha), np.exp(1j * beta)
    return np.array([[c, ea * s], [-eb * s, ea * eb * c]], dtype=np.complex128)


def leak_matrix(kind: LeakKind, theta: float) -> np.ndarray:
    """4x4 leak dilation in the |leak, system> basis, leak bit most significant."""
    c, s = math.cos(theta), math.sin(theta)
    if kind is LeakKind.U1:
        rows = [
            [1, 0, 0, 0],
            [0, c, 0, -s],
            [0, 0, 1, 0],
            [0, s, 0, c],
        ]
    elif kind is LeakKind.U2:
        rows = [
            [1, 0, 0, 0],
            [0, c, 0, s],
            [0, s, 0, -c],
            [0, 0, 1, 0],
        ]
    else:
        raise ValueError(f"unknown leak kind {kind!r}")
    return np.array(rows, dtype=np.complex128)


def channel_on_poincare(kind: LeakKind, theta: float, v: PoincareVector) -> PoincareVector:
    """Closed form of the traced leak channel on the Poincare sphere.

    U1 scales the coherence: (X, Y, Z) -> (cos t X, cos t Y, Z).
    U2 also relaxes the population: Z -> sin^2 t + cos^2 t Z.
    """
    c = math.cos(theta)
    if kind is LeakKind.U1:
        return PoincareVector(c * v.x, c * v.y, v.z)
    if kind is LeakKind.U2:
        s2 = math.sin(theta) ** 2
        return PoincareVector(c * v.x, c * v.y, s2 + c * c * v.z)
    raise ValueError(f"unknown leak kind {kind!r}")


def draw_memory_error(spec: MemoryErrorSpec, rng: np.random.Generator) -> np.ndarray:
    """Draw the mode's angle uniform in [-max, +max], other two zero.

    Exactly one uniform is consumed per call, so substreams stay aligned
    across error magnitudes and modes.
    """
    value = float(rng.uniform(-spec.max_radians, spec.max_radians))
    angles = {MemoryMode.ALPHA: 0.0, MemoryMode.BETA: 0.0, MemoryMode.THETA: 0.0}
    angles[spec.mode] = value
    return memory_error_matrix(
        angles[MemoryMode.ALPHA], angles[MemoryMode.BETA], angles[MemoryMode.THETA]
    )


def inject(
    state: StateVector,
    step_index: int,
    schedule: ErrorSchedule,
    error_spec: ErrorSpec,
    rng: np.random.Generator,
) -> StateVector:
    """Apply one drawn error if step_index falls inside the schedule window.

    Outside the window nothing is drawn, so every scheduled run consumes the
    same number of variates regardless of total steps.
    """
    if not schedule.active(step_index):
        return state
    if isinstance(error_spec, MemoryErrorSpec):
        return apply_1q(state, error_spec.target, draw_memory_error(error_spec, rng))
    if isinstance(error_spec, LeakErrorSpec):
        if state.layout.leak_qubits != 1:
            raise ValueError("leak errors need a layout with one leak qubit")
        theta = float(rng.uniform(-error_spec.max_radians, error_spec.max_radians))
        matrix = leak_matrix(error_spec.kind, theta)
        leak = QubitIndex(Register.LEAK, 0)
        return apply_2q(state, leak, error_spec.target, matrix)
    raise TypeError(f"unsupported error spec {type(error_spec).__name__}")
