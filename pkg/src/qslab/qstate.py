"""Dense complex state vectors over a [leak | ancilla | space] qubit register.

The amplitude index packs the three sub-registers as
``leak << (n + m) | ancilla << n | space``: space qubit ``j`` carries weight
``2**j``, so the space index coincides with the spatial grid index of the
sampled wavefunction. All gates act in place on a numpy array of
``2**(n + m + l)`` complex amplitudes.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

DEFAULT_QUBIT_CAP = 24


class Register(str, Enum):
    SPACE = "space"
    ANCILLA = "ancilla"
    LEAK = "leak"


@dataclass(frozen=True)
class QubitIndex:
    """One qubit, named by sub-register and weight position (qubit j ~ 2**j)."""

    register: Register
    position: int = 0


@dataclass(frozen=True)
class RegisterLayout:
    """Qubit counts of the composite space + ancilla + leak register."""

    space_qubits: int
    ancilla_qubits: int = 0
    leak_qubits: int = 0
    qubit_cap: int = field(default=DEFAULT_QUBIT_CAP, compare=False, repr=False)

    def __post_init__(self) -> None:
        if self.space_qubits < 1:
            raise ValueError("need at least one space qubit")
        if self.ancilla_qubits < 0:
            raise ValueError("ancilla_qubits must be non-negative")
        if self.leak_qubits not in (0, 1):
            raise ValueError("leak_qubits must be 0 or 1")
        if self.total_qubits > self.qubit_cap:
            raise ValueError(
                f"{self.total_qubits} qubits exceed the cap of {self.qubit_cap}; "
                f"the amplitude array would need {2 ** self.total_qubits} entries"
            )

    @property
    def total_qubits(self) -> int:
        return self.space_qubits + self.ancilla_qubits + self.leak_qubits

    @property
    def dim(self) -> int:
        return 1 << self.total_qubits

    @property
    def space_dim(self) -> int:
        return 1 << self.space_qubits

    @property
    def ancilla_dim(self) -> int:
        return 1 << self.ancilla_qubits

    @property
    def leak_dim(self) -> int:
        return 1 << self.leak_qubits

    def bit(self, q: QubitIndex) -> int:
        """Global bit position of a qubit within the packed amplitude index."""
        counts = {
            Register.SPACE: self.space_qubits,
            Register.ANCILLA: self.ancilla_qubits,
            Register.LEAK: self.leak_qubits,
        }
        if not 0 <= q.position < counts[q.register]:
            raise ValueError(
                f"{q.register.value} register has {counts[q.register]} qubits, "
                f"position {q.position} is out of range"
            )
        offsets = {
            Register.SPACE: 0,
            Register.ANCILLA: self.space_qubits,
            Register.LEAK: self.space_qubits + self.ancilla_qubits,
        }
        return offsets[q.register] + q.position

    def without_leak(self) -> "RegisterLayout":
        return RegisterLayout(self.space_qubits, self.ancilla_qubits, 0, qubit_cap=self.qubit_cap)


class StateVector:
    """2**(n+m+l) complex amplitudes plus their register layout.

    Gate application mutates the amplitude array in place; read-only
    operations never modify it.
    """

    __slots__ = ("layout", "amplitudes")

    def __init__(self, layout: RegisterLayout, amplitudes: np.ndarray):
        amplitudes = np.asarray(amplitudes, dtype=np.complex128)
        if amplitudes.shape != (layout.dim,):
            raise ValueError(
                f"layout needs {layout.dim} amplitudes, got shape {amplitudes.shape}"
            )
        self.layout = layout
        self.amplitudes = amplitudes

    def copy(self) -> "StateVector":
        return StateVector(self.layout, self.amplitudes.copy())

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def branch_view(self) -> np.ndarray:
        """View shaped (leak_dim, ancilla_dim, space_dim), no copy."""
        lay = self.layout
        return self.amplitudes.reshape(lay.leak_dim, lay.ancilla_dim, lay.space_dim)

    def space_wavefunctions(self) -> np.ndarray:
        """Per-leak-branch space wavefunction from the ancilla=0 block, copied."""
        return self.branch_view()[:, 0, :].copy()

    def ancilla_zero_probability(self) -> float:
        """Probability mass carried by amplitudes with the ancilla register at 0."""
        block = self.branch_view()[:, 0, :]
        return float(np.sum(np.abs(block) ** 2))


def new_basis_state(layout: RegisterLayout, index: int) -> StateVector:
    """Computational basis state |index> over the full register."""
    if not 0 <= index < layout.dim:
        raise ValueError(f"basis index {index} out of range for dim {layout.dim}")
    amps = np.zeros(layout.dim, dtype=np.complex128)
    amps[index] = 1.0
    return StateVector(layout, amps)


def unitarity_defect(u: np.ndarray) -> float:
    """max |u†u - I|, zero for an exactly unitary matrix."""
    u = np.asarray(u, dtype=np.complex128)
    eye = np.eye(u.shape[0])
    return float(np.max(np.abs(u.conj().T @ u - eye)))


def _require_unitary(u: np.ndarray, tol: float, check: str) -> None:
    if check == "off":
        return
    defect = unitarity_defect(u)
    if defect <= tol:
        return
    msg = f"matrix is not unitary within {tol:g} (defect {defect:.3e})"
    if check == "warn":
        warnings.warn(msg, stacklevel=3)
    else:
        raise ValueError(msg)


def apply_1q(
    state: StateVector,
    q: QubitIndex,
    u: np.ndarray,
    check: str = "strict",
    tol: float = 1e-10,
) -> StateVector:
    """Apply a 2x2 unitary to one qubit, pairing amplitudes over its bit.

    ``check`` is "strict" (reject non-unitary u), "warn", or "off".
    """
    u = np.asarray(u, dtype=np.complex128)
    if u.shape != (2, 2):
        raise ValueError("apply_1q expects a 2x2 matrix")
    _require_unitary(u, tol, check)
    t = state.layout.bit(q)
    a = state.amplitudes.reshape(-1, 2, 1 << t)
    lo = a[:, 0, :].copy()
    hi = a[:, 1, :]
    a[:, 0, :] = u[0, 0] * lo + u[0, 1] * hi
    a[:, 1, :] = u[1, 0] * lo + u[1, 1] * hi
    return state


def apply_2q(
    state: StateVector,
    q_high: QubitIndex,
    q_low: QubitIndex,
    u: np.ndarray,
    check: str = "strict",
    tol: float = 1e-10,
) -> StateVector:
    """Apply a 4x4 unitary to two qubits in the basis |q_high q_low>.

    q_high supplies the most significant bit of the 4x4 basis index.
    """
    u = np.asarray(u, dtype=np.complex128)
    if u.shape != (4, 4):
        raise ValueError("apply_2q expects a 4x4 matrix")
    bh = state.layout.bit(q_high)
    bl = state.layout.bit(q_low)
    if bh == bl:
        raise ValueError("apply_2q needs two distinct qubits")
    _require_unitary(u, tol, check)
    wh, wl = 1 << bh, 1 << bl
    idx = np.arange(state.layout.dim)
    base = idx[(idx & wh == 0) & (idx & wl == 0)]
    cols = (base, base | wl, base | wh, base | wh | wl)
    amps = state.amplitudes
    block = np.stack([amps[c] for c in cols])
    block = u @ block
    for k, c in enumerate(cols):
        amps[c] = block[k]
    return state


def controlled_phase(state: StateVector, q: QubitIndex, phase: float) -> StateVector:
    """Multiply every amplitude with the target bit set by exp(i*phase)."""
    t = state.layout.bit(q)
    a = state.amplitudes.reshape(-1, 2, 1 << t)
    a[:, 1, :] *= np.exp(1j * phase)
    return state


def overlap(a: StateVector, b: StateVector) -> complex:
    """Inner product <a|b>; its squared modulus is the pure-state fidelity."""
    if a.layout != b.layout:
        raise ValueError("overlap requires identical register layouts")
    return complex(np.vdot(a.amplitudes, b.amplitudes))


def traced_fidelity(reference: StateVector, noisy: StateVector) -> float:
    """<ref| rho |ref> after tracing the leak qubit out of the noisy state.

    Computed as the sum of |<ref|branch>|^2 over the two leak branches of the
    noisy state, which never materializes a density matrix.
    """
    if reference.layout.leak_qubits != 0:
        raise ValueError("reference state must not carry a leak qubit")
    if noisy.layout.leak_qubits != 1:
        raise ValueError("noisy state must carry one leak qubit")
    if noisy.layout.without_leak() != reference.layout:
        raise ValueError("layouts must agree apart from the leak qubit")
    branches = noisy.amplitudes.reshape(2, reference.layout.dim)
    f = sum(abs(np.vdot(reference.amplitudes, br)) ** 2 for br in branches)
    return float(f)


def space_probability_distribution(state: StateVector) -> np.ndarray:
    """Marginal |psi|^2 over the space register, summed over ancilla and leak."""
    probs = np.abs(state.amplitudes) ** 2
    return probs.reshape(-1, state.layout.space_dim).sum(axis=0)
