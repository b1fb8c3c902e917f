"""
FastAPI Endpoint with Results Storage
=====================================

HTTP surface over the precoding library. Designs and criteria are cheap and
answered inline; sweeps run as background tasks and are polled by task_id:

1. POST /sweeps/tmax -> returns task_id
2. GET /sweeps/{task_id} -> returns status and, once completed, the CSV

Request bodies use the scenario-file keys (fc_ghz, bandwidth_ghz,
subcarriers, nt, m_ttd, n_rf, psi_c, tmax_ps, seed), all optional.
"""

from __future__ import annotations

import logging
from datetime import datetime
from typing import Literal, Optional
from uuid import uuid4

from fastapi import BackgroundTasks, FastAPI, HTTPException
from pydantic import BaseModel, Field

from config import configure_logging, settings
from precoding.closed_form import (
    baseline_design,
    max_nt_criterion,
    min_tmax_criterion,
    theorem1_branches,
    theorem1_design,
)
from services.results_store import TaskStatus, get_results_store
from services.scenario_io import ScenarioFile, design_rows, gain_csv, scenario_params
from workers.sweeps import FIG3_NT, FIG4_TMAX_PS, averages, run_fig3, run_fig4

logger = logging.getLogger(__name__)

api_app = FastAPI(
    title="Joint PS/TTD Precoding API",
    description="Closed-form hybrid precoder designs and array-gain sweeps",
    version="1.0.0",
)

results_store = get_results_store()

Designer = Literal["theorem1", "baseline", "fully_digital"]

# ============================================================================
# REQUEST/RESPONSE MODELS
# ============================================================================

class DesignRequest(BaseModel):
    scenario: ScenarioFile = Field(default_factory=ScenarioFile)
    designer: Literal["theorem1", "baseline"] = "theorem1"


class NtSweepRequest(BaseModel):
    scenario: ScenarioFile = Field(default_factory=ScenarioFile)
    nt_list: list[int] = Field(default_factory=lambda: list(FIG3_NT))
    tmax_ps: Optional[float] = Field(default=None, ge=0)
    designers: list[Designer] = Field(default_factory=lambda: ["theorem1", "baseline"])
    per_subcarrier: bool = False


class TmaxSweepRequest(BaseModel):
    scenario: ScenarioFile = Field(default_factory=ScenarioFile)
    tmax_list_ps: list[float] = Field(default_factory=lambda: [float(v) for v in FIG4_TMAX_PS])
    nt: Optional[int] = Field(default=None, ge=1)
    designers: list[Designer] = Field(default_factory=lambda: ["theorem1", "baseline"])
    per_subcarrier: bool = False


class SweepResponse(BaseModel):
    """Response when a sweep is queued"""
    status: str
    task_id: str
    message: str
    queued_at: str
    result_url: str


class TaskResultResponse(BaseModel):
    """Response when retrieving sweep results"""
    task_id: str
    status: TaskStatus
    result: Optional[dict] = None
    error: Optional[str] = None
    metadata: dict
    created_at: str
    updated_at: str


# ============================================================================
# HELPER FUNCTIONS
# ============================================================================

def _params(scenario: ScenarioFile):
    try:
        return scenario_params(scenario)
    except ValueError as e:
        raise HTTPException(status_code=422, detail=str(e)) from e


def run_sweep_with_storage(task_id: str, kind: str, request: BaseModel, metadata: dict) -> None:
    """
    Runs a sweep in the background and stores the result:
    queued -> running -> completed (CSV + averages) or failed (error).
    """
    try:
        results_store.update_status(task_id, TaskStatus.RUNNING)
        sc = scenario_params(request.scenario)
        designers = tuple(request.designers)
        if kind == "nt":
            t_max = sc.t_max if request.tmax_ps is None else request.tmax_ps * 1e-12
            records = run_fig3(sc, request.nt_list, t_max, designers=designers)
        else:
            nt = sc.geom.num_antennas if request.nt is None else request.nt
            records = run_fig4(sc, nt, request.tmax_list_ps, designers=designers)

        # Same labels as the CSV: `designer` for one chain, `designer[l=i]` for several
        chains = range(1, sc.geom.num_rf + 1)
        result = {
            "csv": gain_csv(records, request.per_subcarrier),
            "averages": {
                (d if sc.geom.num_rf == 1 else f"{d}[l={l}]"): [
                    [value, avg] for value, avg in averages(records, d, rf_chain=l).items()
                ]
                for d in designers
                for l in chains
            },
        }
        results_store.store_result(task_id, TaskStatus.COMPLETED, result=result, metadata=metadata)
        logger.info("[API] Task %s completed successfully", task_id)
    except Exception as e:
        results_store.store_result(task_id, TaskStatus.FAILED, error=str(e), metadata=metadata)
        logger.warning("[API] Task %s failed: %s", task_id, e)


def _queue(kind: str, request: BaseModel, background_tasks: BackgroundTasks) -> SweepResponse:
    _params(request.scenario)
    task_id = str(uuid4())
    metadata = {"type": f"sweep-{kind}", "request": request.model_dump()}
    results_store.store_result(task_id=task_id, status=TaskStatus.QUEUED, metadata=metadata)
    background_tasks.add_task(run_sweep_with_storage, task_id, kind, request, metadata)
    return SweepResponse(
        status="queued",
        task_id=task_id,
        message=f"{kind} sweep queued",
        queued_at=datetime.now().isoformat(),
        result_url=f"/sweeps/{task_id}",
    )


# ============================================================================
# API ENDPOINTS
# ============================================================================

@api_app.get("/health")
async def health_check():
    return {"status": "healthy", "timestamp": datetime.now().isoformat()}


@api_app.post("/design")
def design(request: DesignRequest):
    sc = _params(request.scenario)
    designer = theorem1_design if request.designer == "theorem1" else baseline_design
    result = designer(sc)
    return {
        "designer": request.designer,
        "interior": theorem1_branches(sc).tolist(),
        "rows": design_rows(result, sc.grid.fc),
    }


@api_app.post("/criteria")
def criteria(scenario: ScenarioFile):
    sc = _params(scenario)
    return {
        "nt_bound": max_nt_criterion(sc.grid, sc.geom.num_ttd, sc.t_max, sc.psi_c),
        "tmax_bound_ps": min_tmax_criterion(sc.geom, sc.grid, sc.psi_c) * 1e12,
    }


@api_app.post("/sweeps/nt", response_model=SweepResponse)
def sweep_nt(request: NtSweepRequest, background_tasks: BackgroundTasks):
    return _queue("nt", request, background_tasks)


@api_app.post("/sweeps/tmax", response_model=SweepResponse)
def sweep_tmax(request: TmaxSweepRequest, background_tasks: BackgroundTasks):
    return _queue("tmax", request, background_tasks)


@api_app.get("/sweeps/{task_id}", response_model=TaskResultResponse)
async def get_sweep(task_id: str):
    """Poll until status is "completed" or "failed"."""
    result = results_store.get_result(task_id)
    if not result:
        raise HTTPException(status_code=404, detail=f"Task {task_id} not found")
    return TaskResultResponse(**result)


@api_app.get("/sweeps", response_model=list[TaskResultResponse])
async def list_sweeps(limit: int = 10):
    return [TaskResultResponse(**task) for task in results_store.list_recent_tasks(limit=limit)]


# ============================================================================
# RUN SERVER
# ============================================================================

if __name__ == "__main__":
    import uvicorn

    configure_logging()
    logger.info("[API] Starting on %s:%d", settings.API_HOST, settings.API_PORT)
    uvicorn.run("api:api_app", host=settings.API_HOST, port=settings.API_PORT, log_level="info")
