"""
Scenario Files and CSV Output
=============================

Scenario files are flat UTF-8 text, one `key = value` per line, `#` starts a
comment. Units are carried in the key names and converted to SI here:

    fc_ghz = 300
    bandwidth_ghz = 30
    subcarriers = 129
    nt = 256
    m_ttd = 16
    n_rf = 1
    psi_c = 0.8          # comma list, one per RF chain
    tmax_ps = 340
    seed = 42

Missing keys fall back to the single-path default scenario.

CSV files are written with 12 significant digits and "\n" line endings so
that identical inputs give byte-identical files.
"""

from __future__ import annotations

import csv
import io
import logging
from collections.abc import Iterable
from pathlib import Path

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from config import settings
from precoding.closed_form import ScenarioParams
from precoding.errors import ScenarioFileError
from precoding.model import ArrayGeometry, OfdmGrid
from precoding.precoder import HybridDesign
from workers.sweeps import GainRecord

logger = logging.getLogger(__name__)

GAIN_HEADER = ["designer", "swept_var", "swept_value", "avg_gain"]
PROFILE_HEADER = ["nt", "k", "gain"]
DESIGN_HEADER = ["rf_chain", "ttd", "element", "ps_phase", "delay_ps", "theta"]


class ScenarioFile(BaseModel):
    """Scenario as written by users, in GHz and picoseconds."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    fc_ghz: float = Field(default=300.0, gt=0)
    bandwidth_ghz: float = Field(default=30.0, ge=0)
    subcarriers: int = Field(default=129, ge=1)
    nt: int = Field(default=256, ge=1)
    m_ttd: int = Field(default=16, ge=1)
    n_rf: int = Field(default=1, ge=1)
    psi_c: tuple[float, ...] = (0.8,)
    tmax_ps: float = Field(default=340.0, ge=0)
    seed: int = Field(default_factory=lambda: settings.DEFAULT_SEED, ge=0)

    @field_validator("psi_c", mode="before")
    @classmethod
    def _split_list(cls, value):
        if isinstance(value, str):
            return tuple(float(v) for v in value.split(",") if v.strip())
        if isinstance(value, (int, float)):
            return (float(value),)
        return value

    def to_params(self) -> ScenarioParams:
        fc = self.fc_ghz * 1e9
        return ScenarioParams(
            grid=OfdmGrid(fc=fc, bandwidth=self.bandwidth_ghz * 1e9, num_subcarriers=self.subcarriers),
            geom=ArrayGeometry.half_wavelength(self.nt, self.m_ttd, fc, num_rf=self.n_rf),
            psi_c=list(self.psi_c),
            t_max=self.tmax_ps * 1e-12,
        )


# ============================================================================
# SCENARIO FILES
# ============================================================================

def parse_scenario(text: str) -> ScenarioFile:
    values: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key or not value:
            raise ScenarioFileError(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
        if key in values:
            raise ScenarioFileError(f"line {lineno}: duplicate key {key!r}")
        values[key] = value
    try:
        return ScenarioFile(**values)
    except ValidationError as e:
        raise ScenarioFileError(f"invalid scenario: {e}") from e


def load_scenario(path: str | Path | None) -> ScenarioFile:
    """Read a scenario file; None gives the default scenario."""
    if path is None:
        return ScenarioFile()
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise ScenarioFileError(f"cannot read scenario file {path}: {e}") from e
    scenario = parse_scenario(text)
    logger.info("[Scenario] Loaded %s", path)
    return scenario


def scenario_params(scenario: ScenarioFile) -> ScenarioParams:
    try:
        return scenario.to_params()
    except ValidationError as e:
        raise ScenarioFileError(f"inconsistent scenario: {e}") from e


# ============================================================================
# CSV
# ============================================================================

def fmt(value: float | None) -> str:
    if value is None:
        return ""
    return f"{value:.{settings.CSV_DIGITS}g}"


def _swept_label(record: GainRecord) -> str:
    if record.swept_value is None:
        return ""
    if record.swept_var == "tmax":
        return fmt(record.swept_value * 1e12)
    return str(int(record.swept_value))


def _writer(buffer: io.StringIO):
    return csv.writer(buffer, lineterminator="\n")


def gain_rows(records: Iterable[GainRecord], per_subcarrier: bool = False) -> list[list[str]]:
    """
    One row per (designer, swept value) in input order. With several RF
    chains each chain is reported as `designer[l=i]`, followed by a
    `designer[mean]` row.
    """
    records = list(records)
    multi = any(r.rf_chain > 1 for r in records)
    rows: list[list[str]] = []

    def emit(label: str, record: GainRecord, avg: float, gains: np.ndarray | None):
        swept = _swept_label(record)
        head = [label, record.swept_var, swept, fmt(avg)]
        if not per_subcarrier:
            rows.append(head)
            return
        rows.append([*head, "", ""])
        if gains is not None:
            rows.extend([*head, str(k), fmt(g)] for k, g in enumerate(gains, start=1))

    group: list[GainRecord] = []
    for record in records + [None]:
        if group and (record is None or (record.designer, record.swept_value) != (group[0].designer, group[0].swept_value)):
            if multi:
                for r in group:
                    emit(f"{r.designer}[l={r.rf_chain}]", r, r.average, r.gains)
                emit(f"{group[0].designer}[mean]", group[0], float(np.mean([r.average for r in group])), None)
            else:
                emit(group[0].designer, group[0], group[0].average, group[0].gains)
            group = []
        if record is not None:
            group.append(record)
    return rows


def gain_csv(records: Iterable[GainRecord], per_subcarrier: bool = False) -> str:
    buffer = io.StringIO()
    w = _writer(buffer)
    w.writerow(GAIN_HEADER + (["k", "gain_k"] if per_subcarrier else []))
    w.writerows(gain_rows(records, per_subcarrier))
    return buffer.getvalue()


def profile_csv(rows: Iterable[tuple[int, int, float]]) -> str:
    buffer = io.StringIO()
    w = _writer(buffer)
    w.writerow(PROFILE_HEADER)
    w.writerows([nt, k, fmt(g)] for nt, k, g in rows)
    return buffer.getvalue()


def design_rows(design: HybridDesign, fc: float) -> list[dict]:
    theta = design.theta(fc)
    return [
        {
            "rf_chain": l + 1,
            "ttd": m + 1,
            "element": n + 1,
            "ps_phase": float(design.ps_phases[l, m, n]),
            "delay_ps": float(design.delays[l, m] * 1e12),
            "theta": float(theta[l, m]),
        }
        for l, m, n in np.ndindex(design.ps_phases.shape)
    ]


def design_csv(design: HybridDesign, fc: float) -> str:
    buffer = io.StringIO()
    w = _writer(buffer)
    w.writerow(DESIGN_HEADER)
    for row in design_rows(design, fc):
        w.writerow([row["rf_chain"], row["ttd"], row["element"],
                    fmt(row["ps_phase"]), fmt(row["delay_ps"]), fmt(row["theta"])])
    return buffer.getvalue()


def write_output(text: str, path: str | Path | None) -> None:
    """Write CSV text to path, or to stdout when no path is given."""
    if path is None:
        print(text, end="")
        return
    Path(path).write_text(text, encoding="utf-8", newline="")
    logger.info("[Output] Wrote %s", path)
