"""
Array-Gain Sweeps
=================

Runs designers over a swept variable (antenna count or TTD range) and
reports the subcarrier-averaged array gain per RF chain:

    avg_gain_l = (1/K) * sum_k g(g_k^(l), psi_c[l])

Sweep points are independent and pure, so they can be farmed out to a
process pool. Executor.map keeps submission order, which keeps the CSV
output identical whatever the worker count.
"""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from config import settings
from precoding.closed_form import ScenarioParams, baseline_design, theorem1_design
from precoding.model import ArrayGeometry, OfdmGrid, RealArray, array_gain, squint_profile
from precoding.precoder import HybridDesign, fully_digital, subcarrier_gains

logger = logging.getLogger(__name__)

Designer = Literal["theorem1", "baseline", "fully_digital"]
SweptVar = Literal["nt", "tmax", "none"]

DESIGNERS = {
    "theorem1": theorem1_design,
    "baseline": baseline_design,
}

# Gains may overshoot 1 by rounding only.
GAIN_SLACK = 1e-9

FIG3_NT = (32, 64, 256, 512, 1024)
FIG3_TMAX = 340e-12
FIG4_NT = 256
FIG4_TMAX_PS = tuple(range(200, 401, 10))


class SweepSpec(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    scenario: ScenarioParams
    variable: SweptVar = "none"
    values: tuple[float, ...] = ()
    designers: tuple[Designer, ...] = ("theorem1", "baseline")

    @field_validator("values")
    @classmethod
    def _positive(cls, values: tuple[float, ...]) -> tuple[float, ...]:
        if any(v <= 0 for v in values):
            raise ValueError("sweep values must be positive")
        return values

    @model_validator(mode="after")
    def _check_values(self) -> SweepSpec:
        if self.variable == "nt":
            M = self.scenario.geom.num_ttd
            for v in self.values:
                if v != int(v) or int(v) % M:
                    raise ValueError(f"N_t={v} is not an integer multiple of M={M}")
        if self.variable != "none" and not self.values:
            raise ValueError(f"no values given for swept variable {self.variable!r}")
        return self

    def points(self) -> list[tuple[Designer, float | None]]:
        values = self.values if self.variable != "none" else (None,)
        return [(designer, value) for value in values for designer in self.designers]


class GainRecord(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    designer: Designer
    swept_var: SweptVar
    swept_value: float | None = None
    rf_chain: int = Field(default=1, ge=1)
    gains: RealArray

    @field_validator("gains")
    @classmethod
    def _bounded(cls, gains: np.ndarray) -> np.ndarray:
        if np.any(gains < 0) or np.any(gains > 1 + GAIN_SLACK):
            raise ValueError("array gains must lie in [0, 1]")
        return gains

    @property
    def average(self) -> float:
        return float(np.mean(self.gains))


# ============================================================================
# METRICS
# ============================================================================

def average_gain(design: HybridDesign, sc: ScenarioParams, l: int) -> float:
    """Subcarrier-averaged array gain of chain l (1-based) toward psi_c[l]."""
    return float(np.mean(subcarrier_gains(design, sc.grid, l, float(sc.psi_c[l - 1]))))


def _designer_gains(designer: Designer, sc: ScenarioParams) -> list[np.ndarray]:
    if designer == "fully_digital":
        reference = fully_digital(sc.grid, sc.geom, sc.psi_c)
        ks = range(1, sc.grid.num_subcarriers + 1)
        out = []
        for l, psi in enumerate(sc.psi_c, start=1):
            out.append(np.array([array_gain(reference.column(k, l), sc.grid, k, float(psi)) for k in ks]))
        return out
    design = DESIGNERS[designer](sc)
    return [
        subcarrier_gains(design, sc.grid, l, float(psi))
        for l, psi in enumerate(sc.psi_c, start=1)
    ]


def scenario_at(sc: ScenarioParams, variable: SweptVar, value: float | None) -> ScenarioParams:
    """The scenario with the swept variable set to value (t_max in seconds)."""
    if variable == "nt":
        geom = ArrayGeometry(
            num_antennas=int(value),
            num_ttd=sc.geom.num_ttd,
            num_rf=sc.geom.num_rf,
            spacing=sc.geom.spacing,
        )
        return sc.replace(geom=geom)
    if variable == "tmax":
        return sc.replace(t_max=value)
    return sc


def evaluate_point(args: tuple[ScenarioParams, SweptVar, Designer, float | None]) -> list[GainRecord]:
    sc, variable, designer, value = args
    point = scenario_at(sc, variable, value)
    records = [
        GainRecord(designer=designer, swept_var=variable, swept_value=value, rf_chain=l, gains=gains)
        for l, gains in enumerate(_designer_gains(designer, point), start=1)
    ]
    logger.debug("[Sweep] %s %s=%s avg=%.6f", designer, variable, value, records[0].average)
    return records


def run_sweep(spec: SweepSpec, workers: int | None = None) -> list[GainRecord]:
    workers = workers or settings.DEFAULT_WORKERS
    jobs = [(spec.scenario, spec.variable, designer, value) for designer, value in spec.points()]
    logger.info("[Sweep] %d points over %s with %d worker(s)", len(jobs), spec.variable, workers)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(evaluate_point, jobs))
    else:
        results = [evaluate_point(job) for job in jobs]
    return [record for batch in results for record in batch]


# ============================================================================
# FIGURE REPRODUCTIONS
# ============================================================================

def default_scenario() -> ScenarioParams:
    """f_c = 300 GHz, B = 30 GHz, K = 129, N_t = 256, M = 16, one path at psi = 0.8, t_max = 340 ps."""
    fc = 300e9
    return ScenarioParams(
        grid=OfdmGrid(fc=fc, bandwidth=30e9, num_subcarriers=129),
        geom=ArrayGeometry.half_wavelength(256, 16, fc),
        psi_c=[0.8],
        t_max=FIG3_TMAX,
    )


def run_fig1(grid: OfdmGrid, psi_c: float, nt_list=(16, 128, 1024)) -> list[tuple[int, int, float]]:
    """Squint profiles (N_t, k, gain) of carrier-matched PS beams."""
    rows = []
    for nt in nt_list:
        geom = ArrayGeometry.half_wavelength(int(nt), 1, grid.fc)
        rows.extend((int(nt), k, gain) for k, gain in squint_profile(grid, geom, psi_c))
    return rows


def run_fig3(
    sc: ScenarioParams,
    nt_list=FIG3_NT,
    t_max: float = FIG3_TMAX,
    designers: tuple[Designer, ...] = ("theorem1", "baseline"),
    workers: int | None = None,
) -> list[GainRecord]:
    """Average gain vs. N_t at a fixed TTD range."""
    spec = SweepSpec(
        scenario=sc.replace(t_max=t_max),
        variable="nt",
        values=tuple(float(v) for v in nt_list),
        designers=designers,
    )
    return run_sweep(spec, workers)


def run_fig4(
    sc: ScenarioParams,
    num_antennas: int = FIG4_NT,
    tmax_list_ps=FIG4_TMAX_PS,
    designers: tuple[Designer, ...] = ("theorem1", "baseline"),
    workers: int | None = None,
) -> list[GainRecord]:
    """Average gain vs. t_max at a fixed antenna count."""
    base = scenario_at(sc, "nt", num_antennas)
    spec = SweepSpec(
        scenario=base,
        variable="tmax",
        values=tuple(ps / 1e12 for ps in tmax_list_ps),
        designers=designers,
    )
    return run_sweep(spec, workers)


def averages(records: list[GainRecord], designer: Designer, rf_chain: int = 1) -> dict[float | None, float]:
    """swept value -> average gain for one designer and chain."""
    return {
        r.swept_value: r.average
        for r in records
        if r.designer == designer and r.rf_chain == rf_chain
    }
