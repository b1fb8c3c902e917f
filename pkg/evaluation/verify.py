"""
Verification Suite
==================

Runs every numerical cross-check over a batch of scenarios and reports a
pass/fail verdict per scenario:

- closed-form design vs. the KKT-enumeration oracle (coordinates, objective,
  active branch)
- warm-started projected gradient against the KKT oracle; a run that misses
  its error bound is noted, not failed
- block-inverse constants: eta against the numeric Schur complement, the delay
  targets e^T C^-1 d against a generic solve, the block inverse times C
- sign invariance of the per-subcarrier gain
- constant modulus of F_1 F_2k and its columns against the effective beams
- matrix-form objective against the chord sum

Scenarios with B = 0 (or K = 1) make C singular; they are skipped with a
note instead of failing. A chord/phase ordering check on random phases runs
once per batch.

Fault injection shifts one normalized delay of the first checked scenario
by 1e-3 (staying feasible) so that the suite must report a failure. A batch
with no such scenario is rejected.
"""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor

import numpy as np
from pydantic import BaseModel, Field
from scipy import linalg

from config import settings
from evaluation.qp_oracle import (
    build_instance,
    lemma2_check,
    principal_branch_report,
    projected_gradient,
    solve_numeric,
    verify_against_theorem1,
    warm_start,
)
from precoding.closed_form import (
    ScenarioParams,
    appendix_constants,
    closed_form_c_inverse,
    delay_targets,
    theorem1_design,
)
from precoding.errors import InvalidArgumentError, VerificationError
from precoding.model import ArrayGeometry, OfdmGrid
from precoding.precoder import (
    HybridDesign,
    effective_beam,
    objective,
    objective_matrix,
    ps_matrix,
    sign_flip,
    subcarrier_gains,
    ttd_matrix,
)

logger = logging.getLogger(__name__)

BATCH_FC = 300e9
BATCH_N = (2, 4, 8, 16)
BATCH_M = (2, 4, 8, 16)
BATCH_K = (17, 33, 129)
BATCH_BANDWIDTH_RATIO = (0.05, 0.1, 0.2)
BATCH_THETA_MAX_DECADES = (-2.0, 3.0)

FAULT_THETA_SHIFT = 1e-3
APPENDIX_ETA_RTOL = 1e-10
APPENDIX_TARGET_TOL = 1e-9
APPENDIX_INVERSE_TOL = 1e-10
OBJECTIVE_FORMS_TOL = 1e-9
LEMMA2_SAMPLES = 1000


class ScenarioCheck(BaseModel):
    index: int
    skipped: bool = False
    note: str = ""
    failures: list[str] = Field(default_factory=list)
    metrics: dict[str, float] = Field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return not self.failures


class VerificationReport(BaseModel):
    checks: list[ScenarioCheck]
    lemma2_failures: list[str] = Field(default_factory=list)

    @property
    def checked(self) -> int:
        return sum(not c.skipped for c in self.checks)

    @property
    def skipped(self) -> int:
        return sum(c.skipped for c in self.checks)

    @property
    def failures(self) -> list[str]:
        out = [f"scenario {c.index}: {msg}" for c in self.checks for msg in c.failures]
        return out + self.lemma2_failures

    @property
    def passed(self) -> bool:
        return not self.failures

    def worst(self, metric: str) -> float:
        values = [c.metrics[metric] for c in self.checks if metric in c.metrics]
        return max(values, default=0.0)

    def raise_for_failures(self) -> None:
        if self.failures:
            raise VerificationError(f"{len(self.failures)} check(s) failed: " + "; ".join(self.failures[:5]))


# ============================================================================
# SCENARIO BATCH
# ============================================================================

def random_scenarios(seed: int | None = None, count: int | None = None) -> list[ScenarioParams]:
    """Seeded batch: psi ~ U[0, 1], theta_max log-uniform over five decades."""
    seed = settings.DEFAULT_SEED if seed is None else seed
    count = settings.VERIFY_BATCH_SIZE if count is None else count
    rng = np.random.default_rng(seed)
    scenarios = []
    for _ in range(count):
        N = int(rng.choice(BATCH_N))
        M = int(rng.choice(BATCH_M))
        K = int(rng.choice(BATCH_K))
        ratio = float(rng.choice(BATCH_BANDWIDTH_RATIO))
        theta_max = 10 ** rng.uniform(*BATCH_THETA_MAX_DECADES)
        scenarios.append(
            ScenarioParams(
                grid=OfdmGrid(fc=BATCH_FC, bandwidth=ratio * BATCH_FC, num_subcarriers=K),
                geom=ArrayGeometry.half_wavelength(N * M, M, BATCH_FC),
                psi_c=[rng.uniform(0.0, 1.0)],
                t_max=theta_max / (2 * BATCH_FC),
            )
        )
    return scenarios


def inject_fault(design: HybridDesign, fc: float) -> HybridDesign:
    """Move the first normalized delay by FAULT_THETA_SHIFT toward the interior of [0, theta_max]."""
    delays = np.array(design.delays)
    phases = np.array(design.ps_phases)
    shift = FAULT_THETA_SHIFT / (2 * fc)
    if design.t_max >= shift:
        delays[0, 0] += -shift if delays[0, 0] >= shift else shift
    else:
        phases[0, 0, 0] += FAULT_THETA_SHIFT
    return HybridDesign(geom=design.geom, ps_phases=phases, delays=delays, t_max=design.t_max)


# ============================================================================
# PER-SCENARIO CHECKS
# ============================================================================

def _check_appendix(sc: ScenarioParams, check: ScenarioCheck) -> None:
    N = sc.geom.antennas_per_ttd
    consts = appendix_constants(sc.grid, N)
    for l in range(1, sc.geom.num_rf + 1):
        inst = build_instance(sc, l)
        schur = inst.c[N, N] - inst.c[N, :N] @ linalg.solve(inst.c[:N, :N], inst.c[:N, N])
        eta_err = abs(schur - consts.eta) / consts.eta
        numeric_targets = linalg.solve(inst.c, inst.d, assume_a="pos")[N]
        expected = delay_targets(N, sc.geom.num_ttd, float(sc.psi_c[l - 1]))
        target_err = float(np.max(np.abs(numeric_targets - expected) / np.maximum(1.0, np.abs(expected))))
        identity_err = float(np.max(np.abs(closed_form_c_inverse(N, consts.eta) @ inst.c - np.eye(N + 1))))

        check.metrics["eta_rel_error"] = max(check.metrics.get("eta_rel_error", 0.0), eta_err)
        check.metrics["delay_target_error"] = max(check.metrics.get("delay_target_error", 0.0), target_err)
        check.metrics["c_inverse_error"] = max(check.metrics.get("c_inverse_error", 0.0), identity_err)
        if eta_err > APPENDIX_ETA_RTOL:
            check.failures.append(f"eta differs from the Schur complement by {eta_err:.2e} (relative)")
        if target_err > APPENDIX_TARGET_TOL:
            check.failures.append(f"e^T C^-1 d off by {target_err:.2e}")
        if identity_err > APPENDIX_INVERSE_TOL:
            check.failures.append(f"block C^-1 times C deviates from I by {identity_err:.2e}")


def _check_iterative(sc: ScenarioParams, check: ScenarioCheck) -> None:
    worst = 0.0
    for l in range(1, sc.geom.num_rf + 1):
        inst = build_instance(sc, l)
        pgd = projected_gradient(inst, a0=warm_start(inst))
        if not pgd.converged:
            check.note = f"projected gradient did not converge (error bound {pgd.error_bound:.2e})"
            continue
        worst = max(worst, float(np.max(np.abs(pgd.a - solve_numeric(inst).a))))
    check.metrics["pgd_coord_error"] = worst
    if worst > settings.COORD_TOL:
        check.failures.append(f"projected gradient and KKT oracle differ by {worst:.2e}")


def _check_sign_invariance(sc: ScenarioParams, design: HybridDesign, check: ScenarioCheck) -> None:
    flipped, mirrored = sign_flip(design, sc.paths())
    err = 0.0
    for l in range(1, sc.geom.num_rf + 1):
        original = subcarrier_gains(design, sc.grid, l, float(sc.psi_c[l - 1]))
        mirror = subcarrier_gains(flipped, sc.grid, l, float(mirrored.psi_c[l - 1]))
        err = max(err, float(np.max(np.abs(original - mirror))))
    check.metrics["sign_flip_error"] = err
    if err > settings.GAIN_TOL:
        check.failures.append(f"sign flip changes the gain by {err:.2e}")


def _check_modulus(sc: ScenarioParams, design: HybridDesign, check: ScenarioCheck) -> None:
    F1 = ps_matrix(design)
    target = 1 / np.sqrt(sc.geom.num_antennas)
    modulus_err, column_err = 0.0, 0.0
    for k in sorted({1, sc.grid.center_index, sc.grid.num_subcarriers}):
        product = F1 @ ttd_matrix(design, sc.grid, k)
        modulus_err = max(modulus_err, float(np.max(np.abs(np.abs(product) - target))))
        for l in range(1, sc.geom.num_rf + 1):
            beam = effective_beam(design, sc.grid, k, l)
            column_err = max(column_err, float(np.max(np.abs(product[:, l - 1] - beam))))
    check.metrics["modulus_error"] = modulus_err
    check.metrics["column_error"] = column_err
    if modulus_err > settings.GAIN_TOL or column_err > settings.GAIN_TOL:
        check.failures.append(f"F1 F2k modulus/column error {max(modulus_err, column_err):.2e}")


def _check_objective_forms(sc: ScenarioParams, design: HybridDesign, check: ScenarioCheck) -> None:
    paths = sc.paths()
    err = abs(objective(design, sc.grid, paths) - objective_matrix(design, sc.grid, paths))
    check.metrics["objective_forms_error"] = err
    if err > OBJECTIVE_FORMS_TOL:
        check.failures.append(f"matrix and chord objectives differ by {err:.2e}")


def check_scenario(args: tuple[int, ScenarioParams, bool]) -> ScenarioCheck:
    index, sc, fault = args
    check = ScenarioCheck(index=index)
    if sc.grid.bandwidth == 0 or sc.grid.num_subcarriers < 2:
        check.skipped = True
        check.note = "singular C (B = 0 or K = 1); oracle not applicable"
        logger.info("[Verify] scenario %d skipped: %s", index, check.note)
        return check

    # The oracle is posed for psi >= 0; mirrored chains are covered by the sign-flip check.
    positive = sc.replace(psi_c=np.abs(sc.psi_c))
    design = theorem1_design(positive)
    if fault:
        design = inject_fault(design, sc.grid.fc)

    result = verify_against_theorem1(positive, design)
    check.metrics["coord_error"] = result.max_coord_error
    check.metrics["objective_gap"] = result.max_objective_gap
    if not result.passed:
        check.failures.append(
            f"oracle mismatch: coord {result.max_coord_error:.2e}, objective {result.max_objective_gap:.2e}"
        )
    if not result.branches_agree:
        check.failures.append("active KKT branch differs from the closed-form branch")

    _check_appendix(positive, check)
    _check_iterative(positive, check)
    _check_sign_invariance(positive, design, check)
    _check_modulus(positive, design, check)
    _check_objective_forms(positive, design, check)

    branch = principal_branch_report(design, sc.grid, positive.psi_c)
    check.metrics["max_phase_diff"] = branch.max_phase_diff
    if not branch.within_principal_branch:
        note = f"phase differences reach {branch.max_phase_diff:.3g} pi (outside the principal branch)"
        check.note = f"{check.note}; {note}" if check.note else note

    if check.failures:
        logger.warning("[Verify] scenario %d FAILED: %s", index, "; ".join(check.failures))
    else:
        logger.debug("[Verify] scenario %d ok (coord %.2e)", index, result.max_coord_error)
    return check


# ============================================================================
# DRIVER
# ============================================================================

def lemma2_batch(seed: int, samples: int = LEMMA2_SAMPLES) -> list[str]:
    rng = np.random.default_rng(seed)
    x0 = rng.uniform(-np.pi, np.pi)
    y = x0 + rng.uniform(-np.pi, np.pi, size=samples)
    report = lemma2_check(x0, y)
    failures = []
    if report.max_identity_error > 1e-12:
        failures.append(f"chord identity off by {report.max_identity_error:.2e}")
    if not report.ordering_agrees:
        failures.append("chord and phase distances order samples differently")
    return failures


def run_verification(
    scenarios: list[ScenarioParams] | None = None,
    seed: int | None = None,
    count: int | None = None,
    inject: bool = False,
    workers: int | None = None,
) -> VerificationReport:
    seed = settings.DEFAULT_SEED if seed is None else seed
    scenarios = scenarios if scenarios is not None else random_scenarios(seed, count)
    workers = workers or settings.DEFAULT_WORKERS

    first_checked = next(
        (i for i, sc in enumerate(scenarios) if sc.grid.bandwidth > 0 and sc.grid.num_subcarriers > 1),
        None,
    )
    if inject and first_checked is None:
        raise InvalidArgumentError("fault injection needs at least one scenario with B > 0 and K > 1")
    jobs = [(i, sc, inject and i == first_checked) for i, sc in enumerate(scenarios)]
    logger.info("[Verify] %d scenario(s), seed %d, fault injection %s", len(jobs), seed, "on" if inject else "off")

    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            checks = list(pool.map(check_scenario, jobs))
    else:
        checks = [check_scenario(job) for job in jobs]

    report = VerificationReport(checks=checks, lemma2_failures=lemma2_batch(seed))
    logger.info(
        "[Verify] %d checked, %d skipped, %d failure(s)",
        report.checked,
        report.skipped,
        len(report.failures),
    )
    return report


def summary_lines(report: VerificationReport) -> list[str]:
    lines = [
        f"scenarios_checked = {report.checked}",
        f"scenarios_skipped = {report.skipped}",
        f"max_coord_error = {report.worst('coord_error'):.3e}",
        f"max_objective_gap = {report.worst('objective_gap'):.3e}",
        f"max_pgd_coord_error = {report.worst('pgd_coord_error'):.3e}",
        f"max_eta_rel_error = {report.worst('eta_rel_error'):.3e}",
        f"max_delay_target_error = {report.worst('delay_target_error'):.3e}",
        f"max_c_inverse_error = {report.worst('c_inverse_error'):.3e}",
        f"max_sign_flip_error = {report.worst('sign_flip_error'):.3e}",
        f"max_modulus_error = {report.worst('modulus_error'):.3e}",
        f"max_objective_forms_error = {report.worst('objective_forms_error'):.3e}",
        f"failures = {len(report.failures)}",
    ]
    lines.extend(f"note: scenario {c.index}: {c.note}" for c in report.checks if c.note)
    lines.extend(f"FAIL: {msg}" for msg in report.failures)
    lines.append("status = " + ("ok" if report.passed else "FAILED"))
    return lines
