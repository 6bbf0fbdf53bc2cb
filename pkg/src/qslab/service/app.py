"""FastAPI wrapper around the experiment harness.

Each endpoint resolves the request into lab calls and renders artifacts
(CSV tables, snapshot series, JSON manifests) server-side, returning them as
a filename-to-text map.
"""
from __future__ import annotations

import json
from dataclasses import replace
from typing import Dict

from fastapi import FastAPI, HTTPException

from .. import __version__
from ..lab import (
    FIGURE_PRESET,
    TABLE_PRESETS,
    budget_report,
    config_from_dict,
    deviation_autocorrelation,
    fidelity_csv,
    make_error_spec,
    manifest_json,
    preset_base_config,
    preset_table,
    run_single,
    run_table,
    snapshots_csv,
    table_csv,
    verify_suite,
)
from . import schemas

app = FastAPI(title="qslab", version=__version__)


def _config(data: Dict[str, object]):
    try:
        return config_from_dict(data)
    except (KeyError, TypeError, ValueError) as exc:
        raise HTTPException(status_code=422, detail=str(exc))


@app.get("/health", response_model=schemas.HealthResponse)
def health() -> schemas.HealthResponse:
    return schemas.HealthResponse(status="ok", version=__version__)


@app.post("/run", response_model=schemas.EvolveResponse)
def run(req: schemas.EvolveRequest) -> schemas.EvolveResponse:
    cfg = _config(req.config)
    try:
        result = run_single(cfg, req.replicate_index, req.engine)
    except ValueError as exc:
        raise HTTPException(status_code=422, detail=str(exc))
    artifacts = {
        "baseline.csv": snapshots_csv(result.baseline_probability, cfg.grid),
        "erroneous.csv": snapshots_csv(result.error_probability, cfg.grid),
        "fidelity.csv": fidelity_csv(result.trace),
        "manifest.json": manifest_json(
            cfg,
            {
                "command": "evolve",
                "replicate_index": req.replicate_index,
                "engine": req.engine,
            },
        ),
    }
    return schemas.EvolveResponse(
        final_fidelity=result.trace.final,
        fidelity=[float(v) for v in result.trace.values],
        artifacts=artifacts,
    )


def _cells(result) -> list:
    return [
        schemas.CellModel(
            qubit=c.qubit,
            mode=c.mode,
            max_radians=c.max_radians,
            mean=c.mean,
            std=c.std,
            n=c.n,
        )
        for c in result.cells
    ]


@app.post("/sweep", response_model=schemas.SweepResponse)
def sweep(req: schemas.SweepRequest) -> schemas.SweepResponse:
    cfg = _config(req.config)
    try:
        result = run_table(
            cfg, req.modes, req.magnitudes, req.qubits, req.replicates, req.threads, req.engine
        )
    except ValueError as exc:
        raise HTTPException(status_code=422, detail=str(exc))
    artifacts = {
        "sweep.csv": table_csv(result),
        "manifest.json": manifest_json(
            cfg,
            {
                "command": "sweep",
                "modes": list(req.modes),
                "magnitudes": [float(m) for m in req.magnitudes],
                "qubits": [int(q) for q in req.qubits],
                "replicates": req.replicates,
                "engine": req.engine,
            },
        ),
    }
    return schemas.SweepResponse(cells=_cells(result), artifacts=artifacts)


@app.post("/tables", response_model=schemas.TablesResponse)
def tables(req: schemas.TablesRequest) -> schemas.TablesResponse:
    unknown = [p for p in req.presets if p not in TABLE_PRESETS]
    if unknown:
        raise HTTPException(
            status_code=422,
            detail=f"unknown presets {unknown}; have {sorted(TABLE_PRESETS)}",
        )
    base = preset_base_config(seed=req.seed, replicates=req.replicates)
    tables_out: Dict[str, list] = {}
    artifacts: Dict[str, str] = {}
    for name in req.presets:
        result = preset_table(
            name, base, replicates=req.replicates, threads=req.threads, engine=req.engine
        )
        tables_out[name] = _cells(result)
        artifacts[f"table-{name}.csv"] = table_csv(result)
    artifacts["manifest.json"] = manifest_json(
        base,
        {
            "command": "tables",
            "presets": list(req.presets),
            "replicates": req.replicates,
            "engine": req.engine,
        },
    )
    return schemas.TablesResponse(tables=tables_out, artifacts=artifacts)


@app.post("/figures", response_model=schemas.FiguresResponse)
def figures(req: schemas.FiguresRequest) -> schemas.FiguresResponse:
    base = preset_base_config(seed=req.seed)
    runs = []
    artifacts: Dict[str, str] = {}
    for fig in FIGURE_PRESET:
        cfg = replace(base, error=make_error_spec(fig.mode, fig.max_radians, fig.qubit))
        result = run_single(cfg, req.replicate_index, req.engine)
        corr = deviation_autocorrelation(
            result.baseline_probability,
            result.error_probability,
            cfg.schedule.first_step,
        )
        runs.append(
            schemas.FigureSummary(
                name=fig.name,
                mode=fig.mode,
                max_radians=fig.max_radians,
                qubit=fig.qubit,
                final_fidelity=result.trace.final,
                lag_1=corr[1],
                lag_32=corr[32],
            )
        )
        artifacts[f"figure-{fig.name}.csv"] = snapshots_csv(
            result.error_probability, cfg.grid
        )
        if "figure-baseline.csv" not in artifacts:
            artifacts["figure-baseline.csv"] = snapshots_csv(
                result.baseline_probability, cfg.grid
            )
    artifacts["manifest.json"] = manifest_json(
        base,
        {
            "command": "figures",
            "replicate_index": req.replicate_index,
            "engine": req.engine,
        },
    )
    return schemas.FiguresResponse(runs=runs, artifacts=artifacts)


@app.post("/budget", response_model=schemas.BudgetResponse)
def budget(req: schemas.BudgetRequest) -> schemas.BudgetResponse:
    cfg = _config(req.config)
    try:
        report = budget_report(cfg)
    except ValueError as exc:
        raise HTTPException(status_code=422, detail=str(exc))
    artifacts = {
        "budget.json": json.dumps(report, indent=2, sort_keys=True) + "\n",
        "manifest.json": manifest_json(cfg, {"command": "budget"}),
    }
    return schemas.BudgetResponse(
        report={k: float(v) for k, v in report.items()}, artifacts=artifacts
    )


@app.post("/verify", response_model=schemas.VerifyResponse)
def verify(req: schemas.VerifyRequest) -> schemas.VerifyResponse:
    checks = verify_suite(seed=req.seed)
    return schemas.VerifyResponse(
        passed=all(c.passed for c in checks),
        checks=[
            schemas.CheckModel(name=c.name, passed=c.passed, detail=c.detail)
            for c in checks
        ],
    )
