"""
Phase-Domain QP Oracle
======================

Independent numerical path for the per-(l, m) quadratic

    min  a^T C a - 2 d^T a     s.t.  0 <= a[N] <= theta_max,   a = [x; theta]

built explicitly from C_k = [I_N, -zeta_k 1_N] and B_k(n, m) = -zeta_k gamma_nm.
Nothing here uses the closed-form solution: the minimizer comes from KKT
case enumeration with generic dense solves (scipy.linalg.solve), and an
accelerated projected-gradient run provides a second, iterative check that
reports whether it reached its coordinate error bound.
"""

from __future__ import annotations

import logging
from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict
from scipy import linalg

from config import settings
from precoding.closed_form import ScenarioParams, theorem1_branches, theorem1_design
from precoding.errors import InvalidArgumentError, SingularProblemError
from precoding.model import OfdmGrid, RealArray, subcarrier_zetas
from precoding.precoder import HybridDesign, phase_progression

logger = logging.getLogger(__name__)

Branch = Literal["interior", "upper", "lower"]


class QpInstance(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    c_k: RealArray  # (K, N, N+1)
    b_k: RealArray  # (K, N, M)
    c: RealArray  # (N+1, N+1)
    d: RealArray  # (N+1, M)
    theta_max: float
    degenerate: bool

    @property
    def num_vars(self) -> int:
        return self.c.shape[0]


class OracleSolution(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    a: RealArray  # (N+1, M)
    objective: RealArray  # (M,)
    branches: list[Branch]
    lambda_upper: RealArray
    lambda_lower: RealArray
    kkt_residual: RealArray


class PgdResult(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    a: RealArray  # (N+1,) for one TTD, (N+1, M) for all
    iterations: int
    converged: bool
    residual: float
    error_bound: float


class TheoremCheck(BaseModel):
    """Oracle vs closed form for one scenario."""

    max_coord_error: float
    max_objective_gap: float
    branches: list[list[Branch]]
    branches_agree: bool
    passed: bool


class Lemma2Report(BaseModel):
    max_identity_error: float
    ordering_agrees: bool


class BranchReport(BaseModel):
    max_phase_diff: float
    within_principal_branch: bool


# ============================================================================
# INSTANCE CONSTRUCTION
# ============================================================================

def build_instance(sc: ScenarioParams, l: int) -> QpInstance:
    """Matrices of the phase-domain problem for RF chain l (1-based)."""
    if not 1 <= l <= sc.geom.num_rf:
        raise InvalidArgumentError(f"RF chain {l} outside 1..{sc.geom.num_rf}")
    N = sc.geom.antennas_per_ttd
    zetas = subcarrier_zetas(sc.grid)
    K = zetas.size

    c_k = np.zeros((K, N, N + 1))
    c_k[:, :, :N] = np.eye(N)
    c_k[:, :, N] = -zetas[:, None]
    gamma = phase_progression(sc.geom, float(sc.psi_c[l - 1])).T  # (N, M)
    b_k = -zetas[:, None, None] * gamma[None, :, :]

    c = np.einsum("kni,knj->ij", c_k, c_k) / K
    d = np.einsum("kni,knm->im", c_k, b_k) / K
    degenerate = sc.grid.bandwidth == 0 or K < 2
    return QpInstance(c_k=c_k, b_k=b_k, c=c, d=d, theta_max=sc.theta_max, degenerate=degenerate)


def design_to_variables(design: HybridDesign, fc: float, l: int) -> np.ndarray:
    """Stack chain l of a design into A = [x_m; theta_m] columns, shape (N+1, M)."""
    return np.vstack([design.ps_phases[l - 1].T, design.theta(fc)[l - 1]])


# ============================================================================
# OBJECTIVES
# ============================================================================

def quadratic_objective(inst: QpInstance, a: np.ndarray, m: int) -> float:
    """a^T C a - 2 d_m^T a for TTD m (1-based)."""
    return float(a @ inst.c @ a - 2 * inst.d[:, m - 1] @ a)


def stacked_objective(inst: QpInstance, A: np.ndarray) -> float:
    return float(np.einsum("im,ij,jm->", A, inst.c, A) - 2 * np.sum(inst.d * A))


def frobenius_objective(inst: QpInstance, A: np.ndarray) -> float:
    """(1/K) sum_k ||C_k A - B_k||_F^2."""
    residual = np.einsum("kni,im->knm", inst.c_k, A) - inst.b_k
    return float(np.sum(residual**2) / inst.c_k.shape[0])


def objective_gap(inst: QpInstance, a1: np.ndarray, a2: np.ndarray, m: int) -> float:
    """f(a1) - f(a2) via (a1 - a2)^T (C (a1 + a2) - 2 d_m); no cancellation of large values."""
    return float((a1 - a2) @ (inst.c @ (a1 + a2) - 2 * inst.d[:, m - 1]))


def phase_objective(design: HybridDesign, grid: OfdmGrid, psi_c) -> float:
    """(1/K) sum_k sum_{l,m,n} |x - zeta_k theta + zeta_k gamma|^2."""
    psi_c = np.atleast_1d(psi_c)
    if psi_c.size != design.geom.num_rf:
        raise InvalidArgumentError("one direction per RF chain is required")
    zetas = subcarrier_zetas(grid)
    theta = design.theta(grid.fc)
    total = 0.0
    for l, psi in enumerate(psi_c):
        gamma = phase_progression(design.geom, psi)
        diff = design.ps_phases[l][None] + np.multiply.outer(zetas, gamma - theta[l][:, None])
        total += np.sum(diff**2)
    return float(total / zetas.size)


# ============================================================================
# SOLVERS
# ============================================================================

def _kkt_multipliers(inst: QpInstance, a: np.ndarray, m: int, branch: Branch) -> tuple[float, float, float]:
    # Stationarity: 2Ca - 2d + (lambda_upper - lambda_lower) e = 0
    grad = 2 * (inst.c @ a - inst.d[:, m - 1])
    lam_upper = -grad[-1] if branch == "upper" else 0.0
    lam_lower = grad[-1] if branch == "lower" else 0.0
    residual = grad.copy()
    residual[-1] += lam_upper - lam_lower
    return lam_upper, lam_lower, float(np.max(np.abs(residual)))


def _solve_fixed_theta(inst: QpInstance, m: int, theta: float) -> np.ndarray:
    n = inst.num_vars - 1
    rhs = inst.d[:n, m - 1] - theta * inst.c[:n, n]
    x = linalg.solve(inst.c[:n, :n], rhs, assume_a="pos")
    return np.append(x, theta)


def solve_numeric(inst: QpInstance) -> OracleSolution:
    """Global minimizer of every per-m subproblem by KKT case enumeration."""
    if inst.degenerate:
        raise SingularProblemError("C is singular (B = 0 or K = 1); the oracle needs B > 0")
    n_vars, M = inst.d.shape
    A = np.empty((n_vars, M))
    values = np.empty(M)
    branches: list[Branch] = []
    lam_up, lam_lo, residuals = np.zeros(M), np.zeros(M), np.zeros(M)

    for m in range(1, M + 1):
        a = linalg.solve(inst.c, inst.d[:, m - 1], assume_a="pos")
        branch: Branch = "interior"
        if not 0 <= a[-1] <= inst.theta_max:
            candidates = {
                "lower": _solve_fixed_theta(inst, m, 0.0),
                "upper": _solve_fixed_theta(inst, m, inst.theta_max),
            }
            branch = min(candidates, key=lambda b: quadratic_objective(inst, candidates[b], m))
            a = candidates[branch]
        A[:, m - 1] = a
        values[m - 1] = quadratic_objective(inst, a, m)
        branches.append(branch)
        lam_up[m - 1], lam_lo[m - 1], residuals[m - 1] = _kkt_multipliers(inst, a, m, branch)

    if np.max(residuals) > settings.KKT_TOL:
        logger.warning("[Oracle] KKT residual %.3e above %.1e", np.max(residuals), settings.KKT_TOL)
    return OracleSolution(
        a=A,
        objective=values,
        branches=branches,
        lambda_upper=lam_up,
        lambda_lower=lam_lo,
        kkt_residual=residuals,
    )


def warm_start(inst: QpInstance) -> np.ndarray:
    """Unconstrained minimizers of all M subproblems, clipped onto the box; shape (N+1, M)."""
    if inst.degenerate:
        raise SingularProblemError("C is singular (B = 0 or K = 1); no unconstrained minimizer")
    return _project(inst, linalg.solve(inst.c, inst.d, assume_a="pos"))


def _project(inst: QpInstance, A: np.ndarray) -> np.ndarray:
    A[-1] = np.clip(A[-1], 0.0, inst.theta_max)
    return A


def _gradient_mapping(inst: QpInstance, A: np.ndarray, D: np.ndarray, step: float) -> float:
    # Largest column norm of (A - P(A - step * g)) / step. Rows without a bound
    # reduce to g itself, which keeps the residual free of A-sized rounding.
    g = inst.c @ A - D
    theta = A[-1]
    g[-1] = np.where(
        (theta - step * g[-1] < 0.0) | (theta - step * g[-1] > inst.theta_max),
        (theta - np.clip(theta - step * g[-1], 0.0, inst.theta_max)) / step,
        g[-1],
    )
    return float(np.max(np.linalg.norm(g, axis=0)))


def projected_gradient(
    inst: QpInstance,
    m: int | None = None,
    a0: np.ndarray | None = None,
    max_iter: int | None = None,
    tol: float | None = None,
) -> PgdResult:
    """
    Accelerated projected gradient (gradient-restarted momentum) on subproblem m,
    or on all M subproblems at once when m is None. Step 1/lambda_max(C) on the
    half-gradient C a - d.

    Stops once the coordinate error bound 2 ||G|| / lambda_min(C) drops below
    `tol`; G is the gradient mapping. Hitting `max_iter` first returns the last
    iterate with converged=False.
    """
    if inst.degenerate:
        raise SingularProblemError("C is singular (B = 0 or K = 1); the iteration has no unique limit")
    max_iter = settings.PGD_MAX_ITER if max_iter is None else max_iter
    tol = settings.PGD_TOL if tol is None else tol
    eigs = linalg.eigvalsh(inst.c)
    step = 1.0 / eigs[-1]
    D = inst.d if m is None else inst.d[:, [m - 1]]

    A = np.zeros(D.shape) if a0 is None else np.array(a0, dtype=float).reshape(D.shape)
    A = _project(inst, A)
    Y, t = A.copy(), 1.0
    residual = _gradient_mapping(inst, A, D, step)
    iterations = 0
    while 2 * residual / eigs[0] > tol and iterations < max_iter:
        A_next = _project(inst, Y - step * (inst.c @ Y - D))
        t_next = (1 + np.sqrt(1 + 4 * t * t)) / 2
        if np.sum((Y - A_next) * (A_next - A)) > 0:
            # momentum points uphill: restart
            Y, t_next = A_next.copy(), 1.0
        else:
            Y = A_next + ((t - 1) / t_next) * (A_next - A)
        A, t = A_next, t_next
        iterations += 1
        residual = _gradient_mapping(inst, A, D, step)

    error_bound = 2 * residual / eigs[0]
    converged = error_bound <= tol
    if not converged:
        logger.warning(
            "[Oracle] projected gradient stopped after %d iterations: error bound %.3e, cond(C) %.3g",
            iterations,
            error_bound,
            eigs[-1] / eigs[0],
        )
    return PgdResult(
        a=A[:, 0] if m is not None else A,
        iterations=iterations,
        converged=converged,
        residual=residual,
        error_bound=error_bound,
    )


# ============================================================================
# CROSS-CHECKS
# ============================================================================

def verify_against_theorem1(sc: ScenarioParams, design: HybridDesign | None = None) -> TheoremCheck:
    """
    Solve every (l, m) subproblem numerically and compare with the closed form
    (or with `design`, if given). Chains are expected to have psi >= 0.
    """
    if np.any(sc.psi_c < 0):
        raise InvalidArgumentError("oracle comparison is defined for psi >= 0; mirror first")
    design = design if design is not None else theorem1_design(sc)
    expected_interior = theorem1_branches(sc)

    coord_err, gap = 0.0, 0.0
    all_branches: list[list[Branch]] = []
    agree = True
    for l in range(1, sc.geom.num_rf + 1):
        inst = build_instance(sc, l)
        solution = solve_numeric(inst)
        closed = design_to_variables(design, sc.grid.fc, l)
        coord_err = max(coord_err, float(np.max(np.abs(solution.a - closed))))
        for m in range(1, inst.d.shape[1] + 1):
            gap = max(gap, abs(objective_gap(inst, solution.a[:, m - 1], closed[:, m - 1], m)))
        interior = np.array([b == "interior" for b in solution.branches])
        # At the exact threshold both branches coincide, so only disagreements
        # away from it count.
        at_threshold = np.isclose(solution.a[-1], sc.theta_max, rtol=1e-12, atol=1e-12)
        agree &= bool(np.all((interior == expected_interior[l - 1]) | at_threshold))
        all_branches.append(solution.branches)

    passed = coord_err <= settings.COORD_TOL and gap <= settings.OBJECTIVE_TOL
    return TheoremCheck(
        max_coord_error=coord_err,
        max_objective_gap=gap,
        branches=all_branches,
        branches_agree=agree,
        passed=passed,
    )


def lemma2_check(x0: float, samples) -> Lemma2Report:
    """
    Chord distance |e^{j x0} - e^{j y}| equals 2|sin((x0 - y)/2)| and orders
    samples the same way as the phase distance |x0 - y| while |x0 - y| <= pi.
    """
    y = np.asarray(samples, dtype=float)
    dist = np.abs(x0 - y)
    if np.any(dist > np.pi):
        raise InvalidArgumentError("phase differences must stay within [0, pi]")
    chord = np.abs(np.exp(1j * x0) - np.exp(1j * y))
    identity_err = float(np.max(np.abs(chord - 2 * np.abs(np.sin((x0 - y) / 2))), initial=0.0))
    order = np.argsort(dist, kind="stable")
    ordering = bool(np.all(np.diff(chord[order]) >= -1e-12))
    return Lemma2Report(max_identity_error=identity_err, ordering_agrees=ordering)


def principal_branch_report(design: HybridDesign, grid: OfdmGrid, psi_c) -> BranchReport:
    """Largest |x - zeta theta + zeta gamma| (units of pi) over all terms; < 1 keeps the phase rewrite exact."""
    psi_c = np.atleast_1d(psi_c)
    zetas = subcarrier_zetas(grid)
    theta = design.theta(grid.fc)
    worst = 0.0
    for l, psi in enumerate(psi_c):
        gamma = phase_progression(design.geom, psi)
        diff = design.ps_phases[l][None] + np.multiply.outer(zetas, gamma - theta[l][:, None])
        worst = max(worst, float(np.max(np.abs(diff))))
    return BranchReport(max_phase_diff=worst, within_principal_branch=worst < 1.0)
