"""Experiment-layer checks: configs, seeding, sweeps, exports, verification."""
import json
import math
from dataclasses import replace

import numpy as np
import pytest

from qslab.evolve import PotentialSpec, QuantizationSpec
from qslab.grid import GaussianPacket, PhysicalParams, SpatialGrid
from qslab.lab import (
    FIGURE_PRESET,
    SCHEMA_VERSION,
    TABLE_CSV_HEADER,
    ExperimentConfig,
    FidelityTrace,
    TableResult,
    budget_report,
    config_from_dict,
    config_to_dict,
    deviation_autocorrelation,
    fidelity_csv,
    make_error_spec,
    manifest_json,
    preset_base_config,
    preset_table,
    reference_evolve,
    replicate_seed_sequence,
    run_figures,
    run_single,
    run_table,
    snapshots_csv,
    table_csv,
    verify_suite,
)
from qslab.noise import ErrorSchedule, LeakErrorSpec, LeakKind, MemoryErrorSpec, MemoryMode


def small_config(**overrides) -> ExperimentConfig:
    base = dict(
        grid=SpatialGrid(4),
        physical=PhysicalParams(steps=12),
        quant=QuantizationSpec(ancilla_qubits=6),
        schedule=ErrorSchedule(first_step=4, last_step=8, total_steps=12),
        replicates=3,
    )
    base.update(overrides)
    return ExperimentConfig(**base)


# ---------------------------------------------------------------------------
# config
# ---------------------------------------------------------------------------

def test_config_layout_tracks_error_kind():
    cfg = ExperimentConfig()
    assert (cfg.layout.space_qubits, cfg.layout.ancilla_qubits, cfg.layout.leak_qubits) == (6, 12, 0)
    leak_cfg = ExperimentConfig(error=make_error_spec("U1", 0.1, 0))
    assert leak_cfg.layout.leak_qubits == 1
    assert leak_cfg.layout.total_qubits == 19
    mem_cfg = ExperimentConfig(error=make_error_spec("theta", 0.1, 3))
    assert mem_cfg.layout.leak_qubits == 0


def test_config_validation():
    with pytest.raises(ValueError):
        ExperimentConfig(seed=-1)
    with pytest.raises(ValueError):
        ExperimentConfig(replicates=0)
    with pytest.raises(ValueError):
        ExperimentConfig(error=make_error_spec("theta", 0.1, 6))  # beyond 6 qubits
    with pytest.raises(ValueError):
        ExperimentConfig(
            error=make_error_spec("theta", 0.1, 0),
            physical=PhysicalParams(steps=39),
        )
    # without an error the schedule is dormant and may disagree
    ExperimentConfig(physical=PhysicalParams(steps=39))


def test_make_error_spec_parsing():
    spec = make_error_spec("theta", 0.2, 3)
    assert isinstance(spec, MemoryErrorSpec)
    assert spec.mode is MemoryMode.THETA
    assert spec.target.position == 3
    assert isinstance(make_error_spec("ALPHA", 0.1, 0), MemoryErrorSpec)
    u1 = make_error_spec("u1", 0.1, 5)
    assert isinstance(u1, LeakErrorSpec) and u1.kind is LeakKind.U1
    assert make_error_spec("U2", 0.1, 0).kind is LeakKind.U2
    with pytest.raises(ValueError):
        make_error_spec("gamma", 0.1, 0)


def test_replicate_seed_streams():
    shared = ExperimentConfig(error=make_error_spec("theta", 0.1, 0))
    other_cell = ExperimentConfig(error=make_error_spec("alpha", 0.3, 4))
    # shared stream: identical entropy across cells, distinct across replicates
    assert replicate_seed_sequence(shared, 0).entropy == replicate_seed_sequence(other_cell, 0).entropy
    assert replicate_seed_sequence(shared, 0).entropy != replicate_seed_sequence(shared, 1).entropy
    ind_a = replace(shared, shared_stream=False)
    ind_b = replace(other_cell, shared_stream=False)
    assert replicate_seed_sequence(ind_a, 0).entropy != replicate_seed_sequence(ind_b, 0).entropy
    assert replicate_seed_sequence(ind_a, 0).entropy != replicate_seed_sequence(ind_a, 1).entropy
    with pytest.raises(ValueError):
        replicate_seed_sequence(shared, -1)


def test_shared_stream_reuses_draws_across_magnitudes():
    lo = small_config(error=make_error_spec("theta", 0.1, 0))
    hi = small_config(error=make_error_spec("theta", 0.3, 0))
    rng_lo = np.random.default_rng(replicate_seed_sequence(lo, 2))
    rng_hi = np.random.default_rng(replicate_seed_sequence(hi, 2))
    a = rng_lo.uniform(-0.1, 0.1, size=5)
    b = rng_hi.uniform(-0.3, 0.3, size=5)
    assert np.allclose(b, 3.0 * a)


# ---------------------------------------------------------------------------
# single runs
# ---------------------------------------------------------------------------

def test_run_single_without_error_is_flat():
    result = run_single(small_config())
    assert result.trace.values.shape == (13,)
    assert np.all(result.trace.values > 1.0 - 1e-12)
    assert result.trace.final == pytest.approx(1.0, abs=1e-12)
    assert np.array_equal(result.baseline_probability, result.error_probability)
    assert result.baseline_probability.shape == (13, 16)


def test_run_single_with_error_degrades_inside_window():
    cfg = small_config(error=make_error_spec("theta", 0.3, 0))
    result = run_single(cfg, replicate_index=1)
    f = result.trace.values
    assert np.all((0.0 <= f) & (f <= 1.0))
    # quiet before the first scheduled step
    assert np.all(f[:4] > 1.0 - 1e-12)
    assert f[-1] < 1.0 - 1e-6


def test_run_single_engines_agree():
    for mode in ("theta", "U2"):
        cfg = small_config(error=make_error_spec(mode, 0.25, 1))
        compact = run_single(cfg, replicate_index=0, engine="compact")
        full = run_single(cfg, replicate_index=0, engine="full")
        assert np.max(np.abs(compact.trace.values - full.trace.values)) < 1e-10
        assert np.max(np.abs(compact.error_probability - full.error_probability)) < 1e-10
    with pytest.raises(ValueError):
        run_single(small_config(), engine="sparse")


def test_small_leak_errors_barely_disturb():
    cfg = replace(preset_base_config(), error=make_error_spec("U1", 0.05, 0))
    finals = [run_single(cfg, replicate_index=r).trace.final for r in range(30)]
    finals = np.array(finals)
    assert np.all(finals > 0.97)
    assert finals.mean() >= 0.99


# ---------------------------------------------------------------------------
# tables
# ---------------------------------------------------------------------------

def test_run_table_zero_magnitude_gives_unit_fidelity():
    table = run_table(small_config(), ("theta",), (0.0,), (0, 2), replicates=2)
    assert len(table.cells) == 2
    for cell in table.cells:
        assert cell.mean == pytest.approx(1.0, abs=1e-12)
        assert cell.std == 0.0
        assert cell.n == 2


def test_run_table_grid_and_ordering():
    cfg = small_config()
    table = run_table(cfg, ("theta", "alpha"), (0.1, 0.05), (2, 0), replicates=2)
    assert len(table.cells) == 8
    keys = [(c.qubit, c.mode, c.max_radians) for c in table.cells]
    assert keys == sorted(keys, key=lambda k: (k[0], {"alpha": 0, "theta": 2}[k[1]], k[2]))
    cell = table.cell(2, "theta", 0.1)
    assert cell.n == 2 and 0.0 <= cell.mean <= 1.0
    with pytest.raises(KeyError):
        table.cell(1, "theta", 0.1)
    with pytest.raises(ValueError):
        run_table(cfg, ("theta",), (0.1,), (0,), replicates=0)


def test_run_table_mean_decreases_with_magnitude():
    table = run_table(small_config(), ("theta",), (0.05, 0.5), (0,), replicates=12)
    weak = table.cell(0, "theta", 0.05)
    strong = table.cell(0, "theta", 0.5)
    assert weak.mean > strong.mean
    assert weak.std < strong.std


def test_run_table_threading_is_deterministic():
    cfg = small_config(error=None, replicates=4)
    args = (("theta", "U1"), (0.1,), (0, 3))
    serial = run_table(cfg, *args, threads=1)
    threaded = run_table(cfg, *args, threads=4)
    assert serial.cells == threaded.cells


def test_preset_table_shapes():
    table = preset_table("memory", replicates=1)
    assert len(table.cells) == 5 * 6  # (alpha@0.3 + theta@4 magnitudes) x 6 qubits
    assert {c.mode for c in table.cells} == {"alpha", "theta"}
    with pytest.raises(ValueError):
        preset_table("memory-extended")


# ---------------------------------------------------------------------------
# classical reference
# ---------------------------------------------------------------------------

def test_reference_evolve_free_packet():
    grid = SpatialGrid(6)
    params = PhysicalParams()
    series = reference_evolve(grid, GaussianPacket(x0=0.0, sigma=0.8), PotentialSpec(stiffness=0.0), params)
    assert series.shape == (41, 64)
    assert np.max(np.abs(np.linalg.norm(series, axis=1) - 1.0)) < 1e-12
    x = grid.positions()
    t = params.steps * params.epsilon
    width = 0.8**2 + 1j * params.hbar * t / (2.0 * params.mass)
    analytic = np.exp(-(x**2) / (4.0 * width))
    analytic /= np.linalg.norm(analytic)
    assert abs(np.vdot(analytic, series[-1])) ** 2 >= 0.9999


def test_reference_evolve_harmonic_period():
    params = PhysicalParams(epsilon=0.01, steps=round(2 * math.pi / 0.01))
    series = reference_evolve(SpatialGrid(6), GaussianPacket(), PotentialSpec(), params)
    assert abs(np.vdot(series[0], series[-1])) ** 2 >= 0.999


# ---------------------------------------------------------------------------
# exports
# ---------------------------------------------------------------------------

def test_table_csv_format():
    table = run_table(small_config(), ("theta",), (0.1,), (0,), replicates=2)
    text = table_csv(table)
    lines = text.split("\n")
    assert lines[0] == TABLE_CSV_HEADER
    assert lines[-1] == ""
    fields = lines[1].split(",")
    assert fields[0] == "0" and fields[1] == "theta"
    assert float(fields[2]) == 0.1
    assert fields[3] == repr(table.cells[0].mean)
    assert fields[5] == "2"
    assert table_csv(TableResult(())) == TABLE_CSV_HEADER + "\n"


def test_snapshots_csv_shape():
    grid = SpatialGrid(3)
    probs = np.full((3, 8), 0.125)
    text = snapshots_csv(probs, grid)
    lines = text.strip().split("\n")
    assert len(lines) == 1 + 3 * 8
    assert lines[1] == f"0,0,{float(grid.positions()[0])!r},0.125"


def test_fidelity_csv_shape():
    text = fidelity_csv(FidelityTrace(np.array([1.0, 0.5])))
    assert text == "step,fidelity\n0,1.0\n1,0.5\n"


def test_config_roundtrip():
    for cfg in (
        ExperimentConfig(),
        small_config(error=make_error_spec("theta", 0.25, 2), seed=7),
        ExperimentConfig(error=make_error_spec("U2", 0.1, 5), shared_stream=False),
    ):
        assert config_from_dict(config_to_dict(cfg)) == cfg


def test_config_from_dict_rejects_unknown_keys():
    with pytest.raises(ValueError):
        config_from_dict({"sead": 3})
    with pytest.raises(ValueError):
        config_from_dict({"grid": {"space_qubits": 4, "x_mn": 0.0}})
    # schema_version is metadata, not an unknown key
    assert config_from_dict({"schema_version": SCHEMA_VERSION}) == ExperimentConfig()


def test_manifest_json_is_reproducible():
    cfg = small_config(error=make_error_spec("U1", 0.1, 0))
    a = manifest_json(cfg, run={"kind": "table"})
    b = manifest_json(cfg, run={"kind": "table"})
    assert a == b
    doc = json.loads(a)
    assert doc["schema_version"] == SCHEMA_VERSION
    assert doc["run"] == {"kind": "table"}
    assert config_from_dict(doc["config"]) == cfg


def test_budget_report_contents():
    report = budget_report(ExperimentConfig())
    assert report["space_qubits"] == 6
    assert report["ancilla_qubits"] == 12
    assert report["leak_qubits"] == 0
    assert report["total_qubits"] == 18
    assert report["grid_points"] == 64
    assert report["dx"] == 0.25
    assert report["aliasing_error"] < 1e-6
    assert report["suggested_space_qubits"] <= 6
    assert report["gates_per_trotter_step"] > report["gates_per_potential_oracle"]
    assert budget_report(ExperimentConfig(error=make_error_spec("U1", 0.1, 0)))["total_qubits"] == 19


# ---------------------------------------------------------------------------
# figures and deviation statistics
# ---------------------------------------------------------------------------

def test_deviation_autocorrelation_synthetic():
    steps, bins = 5, 64
    base = np.zeros((steps, bins))
    err = np.zeros((steps, bins))
    err[3:] = np.where(np.arange(bins) % 2 == 0, 1.0, -1.0) * 0.01
    r = deviation_autocorrelation(base, err, first_step=1, lags=(1, 2))
    assert r[1] == pytest.approx(-1.0)
    assert r[2] == pytest.approx(1.0)
    err = np.zeros((steps, bins))
    err[2:, 0] = 0.02
    err[2:, 32] = -0.02
    r = deviation_autocorrelation(base, err, first_step=2, lags=(1, 32))
    assert r[1] == 0.0
    assert r[32] == pytest.approx(-1.0)


def test_run_figures_preset():
    results = run_figures(replicate_index=0)
    assert set(results) == {f.name for f in FIGURE_PRESET}
    for name, result in results.items():
        assert result.baseline_probability.shape == (41, 64)
        assert 0.0 <= result.trace.final <= 1.0
    assert results["theta-q0"].trace.final < 0.999


# ---------------------------------------------------------------------------
# verification suite
# ---------------------------------------------------------------------------

def test_verify_suite_passes():
    outcomes = verify_suite(seed=0)
    names = [o.name for o in outcomes]
    assert len(names) == len(set(names))
    failing = [o for o in outcomes if not o.passed]
    assert not failing, [f"{o.name}: {o.detail}" for o in failing]
