"""Gate-level quantum simulator lab.

Integrates the 1-D Schroedinger equation on an n-qubit space register with a
split-operator circuit (QFT plus ancilla-mediated phase oracles) and measures
how memory and leak errors on individual qubits degrade the fidelity of the
evolved wavepacket.
"""
from .grid import GaussianPacket, PhysicalParams, SpatialGrid
from .evolve import PotentialSpec, QuantizationSpec
from .noise import (
    ErrorSchedule,
    LeakErrorSpec,
    LeakKind,
    MemoryErrorSpec,
    MemoryMode,
)
from .lab import (
    ExperimentConfig,
    FidelityTrace,
    RunResult,
    TableResult,
    make_error_spec,
    preset_base_config,
    preset_table,
    reference_evolve,
    run_figures,
    run_single,
    run_table,
    verify_suite,
)
from .qstate import QubitIndex, Register, RegisterLayout, StateVector

__version__ = "0.1.0"

__all__ = [
    "ErrorSchedule",
    "ExperimentConfig",
    "FidelityTrace",
    "GaussianPacket",
    "LeakErrorSpec",
    "LeakKind",
    "MemoryErrorSpec",
    "MemoryMode",
    "PhysicalParams",
    "PotentialSpec",
    "QuantizationSpec",
    "QubitIndex",
    "Register",
    "RegisterLayout",
    "RunResult",
    "SpatialGrid",
    "StateVector",
    "TableResult",
    "__version__",
    "make_error_spec",
    "preset_base_config",
    "preset_table",
    "reference_evolve",
    "run_figures",
    "run_single",
    "run_table",
    "verify_suite",
]
