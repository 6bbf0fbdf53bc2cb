"""Spatial discretization and Gaussian packet preparation.

A wavefunction on x in [x_min, x_max) is sampled at the 2**n midpoints
x_i = x_min + (i + 0.5) * dx and stored as the space register of a state
vector, grid index i == space basis index i.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
import warnings

import numpy as np

from .qstate import RegisterLayout, StateVector


@dataclass(frozen=True)
class PhysicalParams:
    """Units and integration parameters of the continuum problem."""

    hbar: float = 1.0
    mass: float = 1.0
    omega: float = 1.0
    epsilon: float = 0.05
    steps: int = 40

    def __post_init__(self) -> None:
        if self.hbar <= 0 or self.mass <= 0:
            raise ValueError("hbar and mass must be positive")
        if self.epsilon < 0:
            raise ValueError("epsilon must be non-negative")
        if self.steps < 0:
            raise ValueError("steps must be non-negative")


@dataclass(frozen=True)
class SpatialGrid:
    """2**n midpoint samples of [x_min, x_max)."""

    space_qubits: int
    x_min: float = -8.0
    x_max: float = 8.0

    def __post_init__(self) -> None:
        if self.space_qubits < 1:
            raise ValueError("need at least one space qubit")
        if not self.x_max > self.x_min:
            raise ValueError("x_max must exceed x_min")

    @property
    def points(self) -> int:
        return 1 << self.space_qubits

    @property
    def length(self) -> float:
        return self.x_max - self.x_min

    @property
    def dx(self) -> float:
        return self.length / self.points

    def positions(self) -> np.ndarray:
        i = np.arange(self.points)
        return self.x_min + (i + 0.5) * self.dx

    def momenta(self, hbar: float = 1.0) -> np.ndarray:
        """DFT momentum table: k_j = 2*pi*j/L for j < N/2, else 2*pi*(j-N)/L.

        Returns hbar*k in the same ordering the QFT produces, so entry j is
        the momentum carried by space basis index j after the transform.
        """
        n = self.points
        j = np.arange(n)
        j = np.where(j < n // 2, j, j - n)
        return hbar * 2.0 * math.pi * j / self.length

    @property
    def k_nyquist(self) -> float:
        return math.pi / self.dx


@dataclass(frozen=True)
class GaussianPacket:
    """exp(-(x - x0)^2 / (4 sigma^2) + i k0 x), normalized on the grid."""

    x0: float = 2.0
    sigma: float = 0.32
    k0: float = 0.0

    def __post_init__(self) -> None:
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")

    def amplitudes(self, x: np.ndarray) -> np.ndarray:
        psi = np.exp(-((x - self.x0) ** 2) / (4.0 * self.sigma**2) + 1j * self.k0 * x)
        return psi.astype(np.complex128)


def sample_packet(
    grid: SpatialGrid,
    packet: GaussianPacket,
    ancilla_qubits: int = 0,
    leak_qubits: int = 0,
) -> StateVector:
    """Normalized packet on the space register; ancilla and leak start at |0>."""
    if packet.sigma <= grid.dx / 4.0:
        warnings.warn(
            f"sigma={packet.sigma:g} is at most dx/4={grid.dx / 4.0:g}; "
            "the packet is too narrow for this grid",
            stacklevel=2,
        )
    psi = packet.amplitudes(grid.positions())
    return load_wavefunction(grid, psi, ancilla_qubits, leak_qubits)


def load_wavefunction(
    grid: SpatialGrid,
    psi: np.ndarray,
    ancilla_qubits: int = 0,
    leak_qubits: int = 0,
) -> StateVector:
    """Embed 2**n space samples as a normalized register state."""
    psi = np.asarray(psi, dtype=np.complex128)
    if psi.shape != (grid.points,):
        raise ValueError(f"expected {grid.points} samples, got shape {psi.shape}")
    nrm = np.linalg.norm(psi)
    if nrm == 0:
        raise ValueError("cannot normalize the zero wavefunction")
    layout = RegisterLayout(grid.space_qubits, ancilla_qubits, leak_qubits)
    amps = np.zeros(layout.dim, dtype=np.complex128)
    amps[: grid.points] = psi / nrm
    return StateVector(layout, amps)


def aliasing_error(grid: SpatialGrid, packet: GaussianPacket) -> float:
    """Momentum-space probability mass of the packet beyond the Nyquist band.

    The packet's momentum density is a Gaussian of width sigma_k = 1/(2 sigma)
    centered at k0; both tails outside [-pi/dx, pi/dx) are summed.
    """
    sigma_k = 1.0 / (2.0 * packet.sigma)
    k_nyq = grid.k_nyquist
    upper = (k_nyq - packet.k0) / (math.sqrt(2.0) * sigma_k)
    lower = (k_nyq + packet.k0) / (math.sqrt(2.0) * sigma_k)
    return 0.5 * (math.erfc(upper) + math.erfc(lower))


def suggest_space_qubits(
    grid_length: float,
    packet: GaussianPacket,
    tolerance: float = 1e-6,
    max_qubits: int = 16,
) -> int:
    """Smallest n for which the packet's aliasing error is below tolerance."""
    for n in range(1, max_qubits + 1):
        trial = SpatialGrid(n, 0.0, grid_length)
        if aliasing_error(trial, packet) < tolerance:
            return n
    raise ValueError(
        f"no grid up to {max_qubits} qubits reaches aliasing error {tolerance:g}"
    )
