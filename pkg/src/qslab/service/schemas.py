"""Request and response models for the experiment service.

Experiment configs travel as plain JSON objects (the same shape
``config_to_dict`` produces); artifacts come back as a filename-to-text map
so the rendering stays server-side and byte-deterministic.
"""
from __future__ import annotations

from typing import Dict, List, Optional

from pydantic import BaseModel, Field


class HealthResponse(BaseModel):
    status: str
    version: str


class EvolveRequest(BaseModel):
    config: Dict[str, object] = Field(default_factory=dict)
    replicate_index: int = 0
    engine: str = "compact"


class EvolveResponse(BaseModel):
    final_fidelity: float
    fidelity: List[float]
    artifacts: Dict[str, str]


class CellModel(BaseModel):
    qubit: int
    mode: str
    max_radians: float
    mean: float
    std: float
    n: int


class SweepRequest(BaseModel):
    config: Dict[str, object] = Field(default_factory=dict)
    modes: List[str]
    magnitudes: List[float]
    qubits: List[int]
    replicates: Optional[int] = None
    threads: int = 1
    engine: str = "compact"


class SweepResponse(BaseModel):
    cells: List[CellModel]
    artifacts: Dict[str, str]


class TablesRequest(BaseModel):
    presets: List[str] = Field(default_factory=lambda: ["memory", "leak-u1", "leak-u2"])
    seed: int = 0
    replicates: int = 200
    threads: int = 1
    engine: str = "compact"


class TablesResponse(BaseModel):
    tables: Dict[str, List[CellModel]]
    artifacts: Dict[str, str]


class FiguresRequest(BaseModel):
    seed: int = 0
    replicate_index: int = 0
    engine: str = "compact"


class FigureSummary(BaseModel):
    name: str
    mode: str
    max_radians: float
    qubit: int
    final_fidelity: float
    lag_1: float
    lag_32: float


class FiguresResponse(BaseModel):
    runs: List[FigureSummary]
    artifacts: Dict[str, str]


class BudgetRequest(BaseModel):
    config: Dict[str, object] = Field(default_factory=dict)


class BudgetResponse(BaseModel):
    report: Dict[str, float]
    artifacts: Dict[str, str]


class VerifyRequest(BaseModel):
    seed: int = 0


class CheckModel(BaseModel):
    name: str
    passed: bool
    detail: str


class VerifyResponse(BaseModel):
    passed: bool
    checks: List[CheckModel]
