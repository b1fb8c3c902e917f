"""
Closed-Form Joint PS/TTD Design
===============================

## The problem being solved

Per RF chain l and TTD m, the phase-domain rewrite of the Frobenius
objective is a convex quadratic in a = [x_1..x_N, theta]:

    min  (1/K) sum_k sum_n (x_n - zeta_k*theta + zeta_k*gamma_n)^2
    s.t. 0 <= theta <= theta_max = 2*f_c*t_max

Its unconstrained minimizer sets theta to the subarray mean of gamma, i.e.
theta* = ((2m-1)N - 1) * psi / 2, and x_n = theta* - gamma_n. When theta*
exceeds theta_max the delay saturates at t_max and the phase shifters absorb
what the delay can no longer provide: x_n = theta_max - gamma_n.

Negative directions are solved as |psi| and mirrored with
precoder.sign_flip, which leaves the array gain unchanged.

## Selection criteria

Requiring theta* <= theta_max for the last TTD (m = M, the tightest one)
gives the antenna-count bound and the TTD-range bound exposed below.
"""

from __future__ import annotations

import math

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from precoding.errors import SingularProblemError
from precoding.model import ArrayGeometry, OfdmGrid, PathSet, RealArray
from precoding.precoder import HybridDesign, phase_progression, sign_flip


class ScenarioParams(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    grid: OfdmGrid
    geom: ArrayGeometry
    psi_c: RealArray
    t_max: float = Field(ge=0, description="Per-device delay bound (s)")

    @field_validator("psi_c", mode="after")
    @classmethod
    def _check_psi(cls, value: np.ndarray) -> np.ndarray:
        if value.ndim != 1 or np.any(np.abs(value) > 1):
            raise ValueError("psi_c must be a list of directions in [-1, 1]")
        return value

    @model_validator(mode="after")
    def _check_chains(self) -> ScenarioParams:
        if self.psi_c.size != self.geom.num_rf:
            raise ValueError(
                f"{self.psi_c.size} directions given for {self.geom.num_rf} RF chains"
            )
        return self

    @property
    def theta_max(self) -> float:
        return 2 * self.grid.fc * self.t_max

    def paths(self) -> PathSet:
        return PathSet.from_directions(self.psi_c)

    def replace(self, **changes) -> ScenarioParams:
        """Copy with some fields changed, validated again."""
        return type(self)(**{**dict(self), **changes})


class AppendixConstants(BaseModel):
    model_config = ConfigDict(frozen=True)

    eta: float = Field(gt=0)
    c_inv_corner: float
    schur_gamma: float


# ============================================================================
# DESIGNS
# ============================================================================

def _delay_weights(N: int, M: int) -> np.ndarray:
    m = np.arange(1, M + 1)
    return (2 * m - 1) * N - 1


def theorem1_branches(sc: ScenarioParams) -> np.ndarray:
    """True where the delay of (l, m) is interior, False where it sits at t_max."""
    N, M = sc.geom.antennas_per_ttd, sc.geom.num_ttd
    weights = _delay_weights(N, M)
    return np.abs(sc.psi_c)[:, None] * weights[None, :] <= 4 * sc.grid.fc * sc.t_max


def _solve_nonnegative(sc: ScenarioParams, chain_solver) -> HybridDesign:
    g = sc.geom
    x = np.empty((g.num_rf, g.num_ttd, g.antennas_per_ttd))
    t = np.empty((g.num_rf, g.num_ttd))
    for l, psi in enumerate(np.abs(sc.psi_c)):
        x[l], t[l] = chain_solver(sc, psi)
    design = HybridDesign(geom=g, ps_phases=x, delays=t, t_max=sc.t_max)

    negative = [l + 1 for l, psi in enumerate(sc.psi_c) if psi < 0]
    if negative:
        design, _ = sign_flip(design, PathSet.from_directions(np.abs(sc.psi_c)), chains=negative)
    return design


def _theorem1_chain(sc: ScenarioParams, psi: float) -> tuple[np.ndarray, np.ndarray]:
    N, M = sc.geom.antennas_per_ttd, sc.geom.num_ttd
    fc = sc.grid.fc
    weights = _delay_weights(N, M)
    interior = psi * weights <= 4 * fc * sc.t_max

    n = np.arange(1, N + 1)
    x_interior = np.broadcast_to((N - 2 * n + 1) * psi / 2, (M, N))
    x_boundary = sc.theta_max - phase_progression(sc.geom, psi)
    x = np.where(interior[:, None], x_interior, x_boundary)
    # min() keeps t <= t_max when the threshold test ties up to rounding
    t = np.where(interior, np.minimum(weights * psi / (4 * fc), sc.t_max), sc.t_max)
    return x, t


def theorem1_design(sc: ScenarioParams) -> HybridDesign:
    """Optimal joint PS/TTD values under 0 <= t <= t_max."""
    return _solve_nonnegative(sc, _theorem1_chain)


def _baseline_chain(sc: ScenarioParams, psi: float) -> tuple[np.ndarray, np.ndarray]:
    N, M = sc.geom.antennas_per_ttd, sc.geom.num_ttd
    n = np.arange(1, N + 1)
    m = np.arange(1, M + 1)
    x = np.broadcast_to(-(n - 1) * psi, (M, N))
    t = np.minimum(m * N * psi / (2 * sc.grid.fc), sc.t_max)
    return x, t


def baseline_design(sc: ScenarioParams) -> HybridDesign:
    """Delay-only compensation: t_m = m*N*psi/(2 f_c) knocked down to t_max, PS = -(n-1)psi."""
    return _solve_nonnegative(sc, _baseline_chain)


def clipped_delays(sc: ScenarioParams) -> np.ndarray:
    """Mask of baseline delays that had to be knocked down to t_max."""
    N, M = sc.geom.antennas_per_ttd, sc.geom.num_ttd
    m = np.arange(1, M + 1)
    raw = np.abs(sc.psi_c)[:, None] * (m * N / (2 * sc.grid.fc))[None, :]
    return raw > sc.t_max


# ============================================================================
# SELECTION CRITERIA
# ============================================================================

def nt_bound_family(grid: OfdmGrid, num_ttd: int, t_max: float, psi_max: float) -> np.ndarray:
    """N_t <= M/(2m-1) + 4 M f_c t_max / ((2m-1) psi) for m = 1..M (real-valued)."""
    m = np.arange(1, num_ttd + 1)
    with np.errstate(divide="ignore"):
        return num_ttd / (2 * m - 1) + 4 * num_ttd * grid.fc * t_max / ((2 * m - 1) * abs(psi_max))


def max_nt_criterion(grid: OfdmGrid, num_ttd: int, t_max: float, psi_c) -> int | None:
    """Largest N_t meeting the bound at m = M for the largest |psi|; None when unbounded (psi = 0)."""
    psi_max = float(np.max(np.abs(np.atleast_1d(psi_c))))
    if psi_max == 0:
        return None
    return math.floor(nt_bound_family(grid, num_ttd, t_max, psi_max)[-1])


def tmax_bound_family(geom: ArrayGeometry, grid: OfdmGrid, psi_max: float) -> np.ndarray:
    """t_max >= psi ((2m-1) N_t - M) / (4 M f_c) for m = 1..M (seconds)."""
    M = geom.num_ttd
    m = np.arange(1, M + 1)
    return abs(psi_max) * ((2 * m - 1) * geom.num_antennas - M) / (4 * M * grid.fc)


def min_tmax_criterion(geom: ArrayGeometry, grid: OfdmGrid, psi_max) -> float:
    psi = float(np.max(np.abs(np.atleast_1d(psi_max))))
    return float(tmax_bound_family(geom, grid, psi)[-1])


# ============================================================================
# BLOCK-INVERSE QUANTITIES
# ============================================================================

def appendix_constants(grid: OfdmGrid, N: int) -> AppendixConstants:
    B, fc, K = grid.bandwidth, grid.fc, grid.num_subcarriers
    if B <= 0 or K < 2:
        raise SingularProblemError("eta = 0 when B = 0 or K = 1; C is not invertible")
    eta = N * B**2 / fc**2 * (K**2 - 1) / (12 * K**2)
    return AppendixConstants(eta=eta, c_inv_corner=1 / eta, schur_gamma=N + eta)


def delay_targets(N: int, M: int, psi: float) -> np.ndarray:
    """e^T C^-1 d_m = ((2m-1)N - 1) psi / 2 for m = 1..M."""
    return _delay_weights(N, M) * psi / 2


def closed_form_c_inverse(N: int, eta: float) -> np.ndarray:
    """[[I + 11^T/eta, 1/eta], [1^T/eta, 1/eta]], the inverse of [[I, -1], [-1^T, N + eta]]."""
    inv = np.empty((N + 1, N + 1))
    inv[:N, :N] = np.eye(N) + 1 / eta
    inv[:N, N] = 1 / eta
    inv[N, :N] = 1 / eta
    inv[N, N] = 1 / eta
    return inv


def kkt_closed_form(sc: ScenarioParams, l: int) -> tuple[np.ndarray, np.ndarray]:
    """
    Case solution of the KKT system for chain l (1-based, psi >= 0 assumed):
    a_m = C^-1 d_m if e^T C^-1 d_m <= theta_max, else C^-1 (d_m - lambda_1 e)
    with lambda_1 = (e^T C^-1 d_m - theta_max) / (e^T C^-1 e).

    Returns A (N+1, M) and lambda_1 (M,).
    """
    N, M = sc.geom.antennas_per_ttd, sc.geom.num_ttd
    psi = float(sc.psi_c[l - 1])
    consts = appendix_constants(sc.grid, N)
    c_inv = closed_form_c_inverse(N, consts.eta)

    # d_m = [-gamma_m; (Gamma/N) * sum(gamma_m)] on the symmetric grid
    gamma = phase_progression(sc.geom, psi).T  # (N, M)
    D = np.vstack([-gamma, consts.schur_gamma / N * gamma.sum(axis=0)])

    targets = delay_targets(N, M, psi)
    lam = np.where(targets > sc.theta_max, (targets - sc.theta_max) / consts.c_inv_corner, 0.0)
    e = np.zeros(N + 1)
    e[N] = 1.0
    A = c_inv @ (D - np.outer(e, lam))
    return A, lam
