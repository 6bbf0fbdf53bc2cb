"""Experiment harness: baseline-vs-error runs, table sweeps, figure series.

Every experiment pits an erroneous run against a zero-error baseline of the
same circuit pipeline and records the per-step fidelity together with the
space probability distributions. Sweeps aggregate final fidelities over
replicates into (qubit, mode, magnitude) cells; presets bundle the standard
grids (memory errors, leak U1, leak U2) and the six figure runs.
"""
from __future__ import annotations

import dataclasses
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Dict, Iterable, Optional, Sequence, Tuple

import numpy as np

from .evolve import (
    PotentialSpec,
    QuantizationSpec,
    evolve,
    kinetic_table,
    oracle_gate_estimate,
    potential_phases,
    quantize_phases,
    step_operator,
)
from .grid import (
    GaussianPacket,
    PhysicalParams,
    SpatialGrid,
    aliasing_error,
    sample_packet,
    suggest_space_qubits,
)
from .noise import (
    ErrorSchedule,
    ErrorSpec,
    LeakErrorSpec,
    LeakKind,
    MemoryErrorSpec,
    MemoryMode,
    inject,
)
from .qstate import QubitIndex, Register, RegisterLayout, StateVector

SCHEMA_VERSION = 1
ENGINES = ("compact", "full")

TABLE_CSV_HEADER = "qubit,mode,max_radians,mean,std,n"
SNAPSHOT_CSV_HEADER = "step,bin,x,probability"

_MODE_ORDER = {"alpha": 0, "beta": 1, "theta": 2, "U1": 3, "U2": 4}
_NOISE_TAG = 0x51AB0001


def make_error_spec(mode: str, max_radians: float, qubit: int) -> ErrorSpec:
    """Build a memory or leak error spec from its sweep-table mode name."""
    target = QubitIndex(Register.SPACE, int(qubit))
    lowered = mode.strip().lower()
    if lowered in ("alpha", "beta", "theta"):
        return MemoryErrorSpec(MemoryMode(lowered), float(max_radians), target)
    if lowered in ("u1", "u2"):
        return LeakErrorSpec(LeakKind(lowered.upper()), float(max_radians), target)
    raise ValueError(f"unknown error mode {mode!r}")


def _mode_name(error: ErrorSpec) -> str:
    if isinstance(error, MemoryErrorSpec):
        return error.mode.value
    return error.kind.value


@dataclass(frozen=True)
class ExperimentConfig:
    """Fully resolved run description; every field has a working default."""

    grid: SpatialGrid = field(default_factory=lambda: SpatialGrid(6))
    packet: GaussianPacket = field(default_factory=GaussianPacket)
    physical: PhysicalParams = field(default_factory=PhysicalParams)
    potential: PotentialSpec = field(default_factory=PotentialSpec)
    quant: QuantizationSpec = field(default_factory=QuantizationSpec)
    schedule: ErrorSchedule = field(default_factory=ErrorSchedule)
    error: Optional[ErrorSpec] = None
    seed: int = 0
    replicates: int = 200
    shared_stream: bool = True

    def __post_init__(self) -> None:
        if self.seed < 0:
            raise ValueError("seed must be a non-negative integer")
        if self.replicates < 1:
            raise ValueError("replicates must be at least 1")
        if self.error is not None:
            if self.schedule.total_steps != self.physical.steps:
                raise ValueError("schedule total_steps must equal physical steps")
            if self.error.target.position >= self.grid.space_qubits:
                raise ValueError("error target lies beyond the space register")

    @property
    def layout(self) -> RegisterLayout:
        leak = 1 if isinstance(self.error, LeakErrorSpec) else 0
        return RegisterLayout(self.grid.space_qubits, self.quant.ancilla_qubits, leak)


def replicate_seed_sequence(
    config: ExperimentConfig, replicate_index: int
) -> np.random.SeedSequence:
    """Deterministic noise substream for one replicate of one experiment cell.

    With shared_stream the key omits the error identity, so cells that only
    differ in mode or magnitude consume the same underlying uniform string
    (magnitude merely rescales the draws). Otherwise the cell identity is
    folded in and every cell gets an independent stream.
    """
    if replicate_index < 0:
        raise ValueError("replicate_index must be non-negative")
    err = config.error
    if err is None or config.shared_stream:
        entropy = (config.seed, _NOISE_TAG, replicate_index)
    else:
        entropy = (
            config.seed,
            _NOISE_TAG,
            replicate_index,
            err.target.position,
            _MODE_ORDER[_mode_name(err)],
            int(round(err.max_radians * 1e9)),
        )
    return np.random.SeedSequence(entropy)


@dataclass(frozen=True)
class FidelityTrace:
    """Per-step fidelity of the erroneous run against the baseline."""

    values: np.ndarray

    @property
    def final(self) -> float:
        return float(self.values[-1])


@dataclass(frozen=True)
class RunResult:
    """One baseline/error pair: fidelity trace plus both probability series.

    Probability arrays have shape (steps + 1, 2^n); row t is the space
    distribution after step t (row 0 is the initial packet).
    """

    trace: FidelityTrace
    baseline_probability: np.ndarray
    error_probability: np.ndarray


@dataclass(frozen=True)
class TableCell:
    qubit: int
    mode: str
    max_radians: float
    mean: float
    std: float
    n: int


def _cell_key(cell: TableCell) -> Tuple[int, int, float]:
    return (cell.qubit, _MODE_ORDER.get(cell.mode, 99), cell.max_radians)


@dataclass(frozen=True)
class TableResult:
    """Sweep cells sorted by (qubit, mode, magnitude)."""

    cells: Tuple[TableCell, ...]

    def cell(self, qubit: int, mode: str, max_radians: float) -> TableCell:
        for c in self.cells:
            if (
                c.qubit == qubit
                and c.mode == mode
                and math.isclose(c.max_radians, max_radians)
            ):
                return c
        raise KeyError(f"no cell ({qubit}, {mode}, {max_radians})")

    def merged_with(self, other: "TableResult") -> "TableResult":
        return TableResult(tuple(sorted(self.cells + other.cells, key=_cell_key)))


def _initial_space_amplitudes(config: ExperimentConfig) -> np.ndarray:
    psi = config.packet.amplitudes(config.grid.positions())
    return psi / np.linalg.norm(psi)


def _compact_snapshots(
    config: ExperimentConfig,
    leak_qubits: int,
    error: Optional[ErrorSpec],
    rng: Optional[np.random.Generator],
    op: Optional[np.ndarray] = None,
) -> np.ndarray:
    """Propagate with the dense one-step operator; returns (T+1, 2^l, 2^n)."""
    grid, params = config.grid, config.physical
    if op is None:
        op = step_operator(grid, config.potential, params, config.quant)
    op_t = np.ascontiguousarray(op.T)
    layout = RegisterLayout(grid.space_qubits, 0, leak_qubits)
    amps = np.zeros(layout.dim, dtype=np.complex128)
    amps[: grid.points] = _initial_space_amplitudes(config)
    state = StateVector(layout, amps)
    snaps = np.empty(
        (params.steps + 1, layout.leak_dim, grid.points), dtype=np.complex128
    )
    snaps[0] = state.amplitudes.reshape(layout.leak_dim, -1)
    for step in range(1, params.steps + 1):
        view = state.amplitudes.reshape(layout.leak_dim, -1)
        view[:] = view @ op_t
        if error is not None:
            inject(state, step, config.schedule, error, rng)
        snaps[step] = state.amplitudes.reshape(layout.leak_dim, -1)
    return snaps


def _full_snapshots(
    config: ExperimentConfig,
    leak_qubits: int,
    error: Optional[ErrorSpec],
    rng: Optional[np.random.Generator],
) -> np.ndarray:
    """Propagate through the full oracle circuit; returns (T+1, 2^l, 2^n)."""
    state = sample_packet(
        config.grid,
        config.packet,
        ancilla_qubits=config.quant.ancilla_qubits,
        leak_qubits=leak_qubits,
    )
    hook = None
    if error is not None:
        hook = lambda st, step: inject(st, step, config.schedule, error, rng)
    result = evolve(
        state, config.grid, config.potential, config.physical, config.quant, on_step=hook
    )
    return result.snapshots


def _circuit_snapshots(
    config: ExperimentConfig,
    leak_qubits: int,
    error: Optional[ErrorSpec],
    rng: Optional[np.random.Generator],
    engine: str,
    op: Optional[np.ndarray] = None,
) -> np.ndarray:
    if engine == "compact":
        return _compact_snapshots(config, leak_qubits, error, rng, op)
    if engine == "full":
        return _full_snapshots(config, leak_qubits, error, rng)
    raise ValueError(f"engine must be one of {ENGINES}")


def _fidelity_from_snapshots(base: np.ndarray, err: np.ndarray) -> FidelityTrace:
    overlaps = np.einsum("tx,tlx->tl", base[:, 0, :].conj(), err)
    values = np.sum(np.abs(overlaps) ** 2, axis=1)
    return FidelityTrace(np.clip(values, 0.0, 1.0))


def _probability_series(snaps: np.ndarray) -> np.ndarray:
    return np.sum(np.abs(snaps) ** 2, axis=1)


def run_single(
    config: ExperimentConfig, replicate_index: int = 0, engine: str = "compact"
) -> RunResult:
    """One replicate: zero-error baseline vs erroneous run of the same circuit.

    Fidelity per step is |<baseline|err>|^2, summed over leak branches when
    the error entangles the leak qubit (the trace over the leak).
    """
    base = _circuit_snapshots(config, 0, None, None, engine)
    if config.error is None:
        err = base
    else:
        leak_qubits = 1 if isinstance(config.error, LeakErrorSpec) else 0
        rng = np.random.default_rng(replicate_seed_sequence(config, replicate_index))
        err = _circuit_snapshots(config, leak_qubits, config.error, rng, engine)
    return RunResult(
        _fidelity_from_snapshots(base, err),
        _probability_series(base),
        _probability_series(err),
    )


def _cell_final_fidelities(
    config: ExperimentConfig, replicates: int, engine: str
) -> np.ndarray:
    op = None
    if engine == "compact":
        op = step_operator(config.grid, config.potential, config.physical, config.quant)
    base = _circuit_snapshots(config, 0, None, None, engine, op)
    base_final = base[-1, 0]
    leak_qubits = 1 if isinstance(config.error, LeakErrorSpec) else 0
    finals = np.empty(replicates, dtype=np.float64)
    for r in range(replicates):
        rng = np.random.default_rng(replicate_seed_sequence(config, r))
        err = _circuit_snapshots(config, leak_qubits, config.error, rng, engine, op)
        f = sum(abs(np.vdot(base_final, branch)) ** 2 for branch in err[-1])
        finals[r] = min(1.0, float(f))
    return finals


def run_table(
    base_config: ExperimentConfig,
    modes: Sequence[str],
    magnitudes: Sequence[float],
    qubits: Sequence[int],
    replicates: Optional[int] = None,
    threads: int = 1,
    engine: str = "compact",
) -> TableResult:
    """Sweep the (qubit, mode, magnitude) grid; deterministic per master seed.

    Cells are independent tasks keyed by identity, so the result is the same
    for any thread count or completion order.
    """
    reps = base_config.replicates if replicates is None else int(replicates)
    if reps < 1:
        raise ValueError("replicates must be at least 1")
    tasks = [
        (int(q), str(mode), float(mag))
        for q in qubits
        for mode in modes
        for mag in magnitudes
    ]

    def run_cell(task: Tuple[int, str, float]) -> TableCell:
        qubit, mode, mag = task
        cfg = replace(
            base_config, error=make_error_spec(mode, mag, qubit), replicates=reps
        )
        finals = _cell_final_fidelities(cfg, reps, engine)
        std = float(np.std(finals, ddof=1)) if reps > 1 else 0.0
        return TableCell(qubit, _mode_name(cfg.error), mag, float(np.mean(finals)), std, reps)

    results: Dict[Tuple[int, str, float], TableCell] = {}
    if threads <= 1:
        for task in tasks:
            results[task] = run_cell(task)
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            for task, cell in zip(tasks, pool.map(run_cell, tasks)):
                results[task] = cell
    cells = tuple(sorted(results.values(), key=_cell_key))
    return TableResult(cells)


def reference_evolve(
    grid: SpatialGrid,
    packet: GaussianPacket,
    potential: PotentialSpec,
    physical: PhysicalParams,
) -> np.ndarray:
    """Classical split-step FFT oracle: exact phases, no ancilla, no cutoff.

    Returns (steps + 1, 2^n) wavefunction samples with the same potential-
    then-kinetic step ordering as the circuit.
    """
    psi = packet.amplitudes(grid.positions())
    psi = psi / np.linalg.norm(psi)
    p = grid.momenta(physical.hbar)
    kin = np.exp(-1j * p**2 * physical.epsilon / (2.0 * physical.mass * physical.hbar))
    pot = np.exp(
        -1j * potential.values(grid, physical) * physical.epsilon / physical.hbar
    )
    series = np.empty((physical.steps + 1, grid.points), dtype=np.complex128)
    series[0] = psi
    for step in range(1, physical.steps + 1):
        psi = np.fft.ifft(kin * np.fft.fft(pot * psi))
        series[step] = psi
    return series


# ---------------------------------------------------------------- presets

def preset_base_config(seed: int = 0, replicates: int = 200) -> ExperimentConfig:
    """13-qubit working point: 6 space + 7 ancilla qubits, half-Nyquist cutoff."""
    return ExperimentConfig(
        quant=QuantizationSpec(ancilla_qubits=7, spectral_cutoff_fraction=0.5),
        seed=seed,
        replicates=replicates,
    )


TABLE_PRESETS: Dict[str, Tuple[Tuple[str, Tuple[float, ...]], ...]] = {
    "memory": (("alpha", (0.30,)), ("theta", (0.05, 0.10, 0.20, 0.30))),
    "leak-u1": (("U1", (0.05, 0.10, 0.30)),),
    "leak-u2": (("U2", (0.05, 0.10, 0.30)),),
}


def preset_table(
    name: str,
    base_config: Optional[ExperimentConfig] = None,
    replicates: Optional[int] = None,
    threads: int = 1,
    engine: str = "compact",
    qubits: Optional[Sequence[int]] = None,
) -> TableResult:
    if name not in TABLE_PRESETS:
        raise ValueError(f"unknown table preset {name!r}; have {sorted(TABLE_PRESETS)}")
    cfg = base_config if base_config is not None else preset_base_config()
    if qubits is None:
        qubits = tuple(range(cfg.grid.space_qubits))
    result = TableResult(())
    for mode, magnitudes in TABLE_PRESETS[name]:
        part = run_table(cfg, (mode,), magnitudes, qubits, replicates, threads, engine)
        result = result.merged_with(part)
    return result


@dataclass(frozen=True)
class FigureRun:
    name: str
    mode: str
    max_radians: float
    qubit: int


FIGURE_PRESET: Tuple[FigureRun, ...] = (
    FigureRun("theta-q0", "theta", 0.30, 0),
    FigureRun("theta-q5", "theta", 0.30, 5),
    FigureRun("u1-q0", "U1", 0.10, 0),
    FigureRun("u1-q5", "U1", 0.10, 5),
    FigureRun("u2-q0", "U2", 0.10, 0),
    FigureRun("u2-q5", "U2", 0.10, 5),
)


def run_figures(
    base_config: Optional[ExperimentConfig] = None,
    replicate_index: int = 0,
    engine: str = "compact",
) -> Dict[str, RunResult]:
    """The six preset |psi(x;t)|^2 runs: memory theta, U1 and U2 on qubits 0/5."""
    cfg = base_config if base_config is not None else preset_base_config()
    out: Dict[str, RunResult] = {}
    for fig in FIGURE_PRESET:
        run_cfg = replace(
            cfg, error=make_error_spec(fig.mode, fig.max_radians, fig.qubit)
        )
        out[fig.name] = run_single(run_cfg, replicate_index, engine)
    return out


def deviation_autocorrelation(
    baseline_probability: np.ndarray,
    error_probability: np.ndarray,
    first_step: int,
    lags: Sequence[int] = (1, 32),
) -> Dict[int, float]:
    """Mean circular autocorrelation of the probability deviation per lag.

    The deviation d = P_err - P_base is correlated with its cyclic shift,
    normalized by its power, then averaged over all steps from first_step on
    that carry any deviation. Errors on low-weight qubits concentrate the
    correlation at small lags, high-weight qubits at their 2^j lag.
    """
    base = np.asarray(baseline_probability, dtype=np.float64)
    err = np.asarray(error_probability, dtype=np.float64)
    d = err[first_step:] - base[first_step:]
    power = np.sum(d * d, axis=1)
    keep = power > 1e-30
    out: Dict[int, float] = {}
    for lag in lags:
        shifted = np.roll(d, -int(lag), axis=1)
        nums = np.sum(d * shifted, axis=1)
        vals = nums[keep] / power[keep]
        out[int(lag)] = float(np.mean(vals)) if vals.size else 0.0
    return out


# ---------------------------------------------------------------- budget

def budget_report(config: ExperimentConfig) -> Dict[str, object]:
    """Resource summary: qubit counts, sampling quality, gate estimates."""
    grid, params, quant = config.grid, config.physical, config.quant
    pot_q = quantize_phases(potential_phases(grid, config.potential, params), quant)
    kin_q = quantize_phases(kinetic_table(grid, params, quant).phases, quant)
    n, m = grid.space_qubits, quant.ancilla_qubits
    pot_gates = oracle_gate_estimate(pot_q.table, n, m)
    kin_gates = oracle_gate_estimate(kin_q.table, n, m)
    qft_gates = n * (n + 1) // 2
    return {
        "space_qubits": n,
        "ancilla_qubits": m,
        "leak_qubits": config.layout.leak_qubits,
        "total_qubits": config.layout.total_qubits,
        "grid_points": grid.points,
        "dx": grid.dx,
        "aliasing_error": aliasing_error(grid, config.packet),
        "suggested_space_qubits": suggest_space_qubits(grid.length, config.packet),
        "potential_phase_step": pot_q.delta,
        "kinetic_phase_step": kin_q.delta,
        "gates_per_potential_oracle": pot_gates,
        "gates_per_kinetic_oracle": kin_gates,
        "gates_per_trotter_step": pot_gates + kin_gates + 2 * qft_gates,
    }


# ---------------------------------------------------------------- export

def _fmt_float(value: float) -> str:
    return repr(float(value))


def table_csv(result: TableResult) -> str:
    """UTF-8 CSV, one row per cell, byte-stable for a given result."""
    lines = [TABLE_CSV_HEADER]
    for c in result.cells:
        lines.append(
            ",".join(
                [
                    str(c.qubit),
                    c.mode,
                    _fmt_float(c.max_radians),
                    _fmt_float(c.mean),
                    _fmt_float(c.std),
                    str(c.n),
                ]
            )
        )
    return "\n".join(lines) + "\n"


def snapshots_csv(probabilities: np.ndarray, grid: SpatialGrid) -> str:
    """Probability series as (step, bin, x, probability) rows."""
    probs = np.asarray(probabilities, dtype=np.float64)
    x = grid.positions()
    lines = [SNAPSHOT_CSV_HEADER]
    for step in range(probs.shape[0]):
        row = probs[step]
        for i in range(probs.shape[1]):
            lines.append(f"{step},{i},{_fmt_float(x[i])},{_fmt_float(row[i])}")
    return "\n".join(lines) + "\n"


def fidelity_csv(trace: FidelityTrace) -> str:
    """Per-step fidelity as (step, fidelity) rows."""
    lines = ["step,fidelity"]
    for step, value in enumerate(trace.values):
        lines.append(f"{step},{_fmt_float(value)}")
    return "\n".join(lines) + "\n"


def config_to_dict(config: ExperimentConfig) -> Dict[str, object]:
    doc: Dict[str, object] = {
        "grid": dataclasses.asdict(config.grid),
        "packet": dataclasses.asdict(config.packet),
        "physical": dataclasses.asdict(config.physical),
        "potential": dataclasses.asdict(config.potential),
        "quant": dataclasses.asdict(config.quant),
        "schedule": dataclasses.asdict(config.schedule),
        "error": None,
        "seed": config.seed,
        "replicates": config.replicates,
        "shared_stream": config.shared_stream,
    }
    if config.error is not None:
        doc["error"] = {
            "mode": _mode_name(config.error),
            "max_radians": config.error.max_radians,
            "qubit": config.error.target.position,
        }
    return doc


def _section(cls, defaults, overrides: Optional[Dict[str, object]]):
    kwargs = dataclasses.asdict(defaults)
    if overrides:
        unknown = set(overrides) - set(kwargs)
        if unknown:
            raise ValueError(f"unknown {cls.__name__} keys: {sorted(unknown)}")
        kwargs.update(overrides)
    return cls(**kwargs)


def config_from_dict(data: Dict[str, object]) -> ExperimentConfig:
    """Inverse of config_to_dict; absent sections keep their defaults."""
    data = dict(data)
    data.pop("schema_version", None)
    base = ExperimentConfig()
    known = {
        "grid",
        "packet",
        "physical",
        "potential",
        "quant",
        "schedule",
        "error",
        "seed",
        "replicates",
        "shared_stream",
    }
    unknown = set(data) - known
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    error = None
    err_doc = data.get("error")
    if err_doc is not None:
        error = make_error_spec(
            str(err_doc["mode"]), float(err_doc["max_radians"]), int(err_doc["qubit"])
        )
    return ExperimentConfig(
        grid=_section(SpatialGrid, base.grid, data.get("grid")),
        packet=_section(GaussianPacket, base.packet, data.get("packet")),
        physical=_section(PhysicalParams, base.physical, data.get("physical")),
        potential=_section(PotentialSpec, base.potential, data.get("potential")),
        quant=_section(QuantizationSpec, base.quant, data.get("quant")),
        schedule=_section(ErrorSchedule, base.schedule, data.get("schedule")),
        error=error,
        seed=int(data.get("seed", base.seed)),
        replicates=int(data.get("replicates", base.replicates)),
        shared_stream=bool(data.get("shared_stream", base.shared_stream)),
    )


def manifest_json(config: ExperimentConfig, run: Optional[Dict[str, object]] = None) -> str:
    """Run manifest embedding the fully resolved config; reproducible bytes."""
    doc: Dict[str, object] = {
        "schema_version": SCHEMA_VERSION,
        "config": config_to_dict(config),
    }
    if run:
        doc["run"] = run
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


# ---------------------------------------------------------------- verify

@dataclass(frozen=True)
class CheckOutcome:
    name: str
    passed: bool
    detail: str


def _check(name: str, passed: bool, detail: str) -> CheckOutcome:
    return CheckOutcome(name, bool(passed), detail)


def verify_suite(seed: int = 0) -> Tuple[CheckOutcome, ...]:
    """Fast self-contained invariant suite; every check independent of pytest."""
    from .evolve import apply_phase_oracle, iqft, qft
    from .noise import (
        PoincareVector,
        channel_on_poincare,
        leak_matrix,
        memory_error_matrix,
        poincare_from_density,
    )
    from .qstate import unitarity_defect

    rng = np.random.default_rng(seed)
    checks = []

    # QFT against the explicit DFT matrix on a random 5-qubit space state.
    n = 5
    layout = RegisterLayout(n)
    psi = rng.normal(size=layout.dim) + 1j * rng.normal(size=layout.dim)
    psi /= np.linalg.norm(psi)
    state = StateVector(layout, psi.copy())
    qft(state)
    k, x = np.meshgrid(np.arange(layout.dim), np.arange(layout.dim), indexing="ij")
    f = np.exp(2j * np.pi * k * x / layout.dim) / math.sqrt(layout.dim)
    err = float(np.max(np.abs(state.amplitudes - f @ psi)))
    checks.append(_check("qft-matches-dft", err < 1e-12, f"max deviation {err:.2e}"))

    iqft(state)
    err = float(np.max(np.abs(state.amplitudes - psi)))
    checks.append(_check("qft-roundtrip", err < 1e-12, f"max deviation {err:.2e}"))

    # Oracle cleanliness and norm preservation on a small full pipeline.
    cfg = ExperimentConfig(
        grid=SpatialGrid(5),
        quant=QuantizationSpec(ancilla_qubits=6),
        physical=PhysicalParams(steps=10),
    )
    st = sample_packet(cfg.grid, cfg.packet, ancilla_qubits=6)
    phases = rng.uniform(-3.0, 0.0, size=cfg.grid.points)
    apply_phase_oracle(st, phases, cfg.quant)
    leak_anc = abs(st.ancilla_zero_probability() - 1.0)
    checks.append(
        _check("oracle-ancilla-clean", leak_anc < 1e-12, f"ancilla leakage {leak_anc:.2e}")
    )
    res = evolve(st, cfg.grid, cfg.potential, cfg.physical, cfg.quant)
    drift = float(np.max(np.abs(res.norms - 1.0)))
    checks.append(_check("norm-preservation", drift < 1e-12, f"max drift {drift:.2e}"))

    # Leak channel closed forms via dilate-and-trace on density matrices.
    worst = 0.0
    proj0 = np.array([[1.0, 0.0], [0.0, 0.0]], dtype=np.complex128)
    for kind in LeakKind:
        for theta in np.arange(0.0, math.pi / 2 + 1e-9, 0.1):
            u = leak_matrix(kind, float(theta))
            for _ in range(20):
                v = rng.normal(size=3)
                v *= rng.uniform(0.0, 1.0) / np.linalg.norm(v)
                vec = PoincareVector(*v)
                dilated = u @ np.kron(proj0, vec.density()) @ u.conj().T
                reduced = dilated[:2, :2] + dilated[2:, 2:]
                got = poincare_from_density(reduced)
                want = channel_on_poincare(kind, float(theta), vec)
                worst = max(
                    worst,
                    abs(got.x - want.x),
                    abs(got.y - want.y),
                    abs(got.z - want.z),
                )
    checks.append(
        _check("leak-closed-forms", worst < 1e-12, f"max component error {worst:.2e}")
    )

    # Error matrix unitarity over random parameter draws.
    worst = 0.0
    for _ in range(200):
        a, b, t = rng.uniform(-math.pi, math.pi, size=3)
        worst = max(worst, unitarity_defect(memory_error_matrix(a, b, t)))
        worst = max(worst, unitarity_defect(leak_matrix(LeakKind.U1, t)))
        worst = max(worst, unitarity_defect(leak_matrix(LeakKind.U2, t)))
    checks.append(
        _check("error-matrix-unitarity", worst < 1e-13, f"max defect {worst:.2e}")
    )

    # Baseline self-fidelity and the quiet window before the first error.
    base_cfg = preset_base_config(seed=seed)
    quiet = run_single(base_cfg)
    flat = float(np.max(np.abs(quiet.trace.values - 1.0)))
    checks.append(
        _check("baseline-self-fidelity", flat < 1e-12, f"max deviation {flat:.2e}")
    )
    err_cfg = replace(base_cfg, error=make_error_spec("theta", 0.3, 0))
    noisy = run_single(err_cfg)
    pre = float(
        np.max(np.abs(noisy.trace.values[: err_cfg.schedule.first_step] - 1.0))
    )
    dropped = noisy.trace.final < 1.0
    checks.append(
        _check(
            "quiet-before-first-error",
            pre < 1e-12 and dropped,
            f"pre-window deviation {pre:.2e}, final fidelity {noisy.trace.final:.4f}",
        )
    )

    # Compact and full engines agree on the same noise stream.
    small = ExperimentConfig(
        quant=QuantizationSpec(ancilla_qubits=6),
        error=make_error_spec("theta", 0.3, 2),
        seed=seed,
    )
    compact = run_single(small, 0, engine="compact")
    full = run_single(small, 0, engine="full")
    gap = float(np.max(np.abs(compact.trace.values - full.trace.values)))
    checks.append(_check("engines-agree", gap < 1e-12, f"max trace gap {gap:.2e}"))

    # Bit-level determinism of a replicate.
    again = run_single(small, 0, engine="compact")
    same = bool(np.array_equal(compact.trace.values, again.trace.values))
    checks.append(
        _check("replicate-determinism", same, "identical fidelity trace bits")
    )

    return tuple(checks)
