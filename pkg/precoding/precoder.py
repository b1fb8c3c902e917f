"""
PS / TTD Hybrid Precoder
========================

Each RF chain l drives M true-time-delay (TTD) units; TTD m feeds N phase
shifters (PSs), one per antenna of subarray m. Antenna (m, n) of chain l
therefore radiates

    (1/sqrt(N_t)) * exp(j*pi*x[l, m, n]) * exp(-j*2*pi*f_k*t[l, m])

PS values x are stored in units of pi and never wrapped; delays t are in
seconds with 0 <= t <= t_max. With the normalized delay theta = 2*f_c*t the
TTD phase reads exp(-j*pi*zeta_k*theta).

Indices exposed by this module (subcarrier k, RF chain l) are 1-based, as
in the channel model.
"""

from __future__ import annotations

from collections.abc import Iterable

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from precoding.errors import InvalidArgumentError, SubcarrierIndexError
from precoding.model import (
    ArrayGeometry,
    OfdmGrid,
    PathSet,
    RealArray,
    array_response,
    array_gain,
    subcarrier_frequencies,
    subcarrier_zetas,
)


class HybridDesign(BaseModel):
    """PS phases x (N_rf, M, N) in units of pi and TTD delays t (N_rf, M) in seconds."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    geom: ArrayGeometry
    ps_phases: RealArray
    delays: RealArray
    t_max: float = Field(ge=0, description="Per-device delay bound (s)")

    @model_validator(mode="after")
    def _check_design(self) -> HybridDesign:
        g = self.geom
        if self.ps_phases.shape != (g.num_rf, g.num_ttd, g.antennas_per_ttd):
            raise ValueError(f"ps_phases has shape {self.ps_phases.shape}, expected (N_rf, M, N)")
        if self.delays.shape != (g.num_rf, g.num_ttd):
            raise ValueError(f"delays has shape {self.delays.shape}, expected (N_rf, M)")
        if np.any(self.delays < 0) or np.any(self.delays > self.t_max):
            raise ValueError("TTD delays must satisfy 0 <= t <= t_max")
        return self

    @classmethod
    def zeros(cls, geom: ArrayGeometry, t_max: float) -> HybridDesign:
        return cls(
            geom=geom,
            ps_phases=np.zeros((geom.num_rf, geom.num_ttd, geom.antennas_per_ttd)),
            delays=np.zeros((geom.num_rf, geom.num_ttd)),
            t_max=t_max,
        )

    def theta(self, fc: float) -> np.ndarray:
        """Normalized delays 2*f_c*t."""
        return 2 * fc * self.delays

    def theta_max(self, fc: float) -> float:
        return 2 * fc * self.t_max

    def check_chain(self, l: int) -> None:
        if not 1 <= l <= self.geom.num_rf:
            raise SubcarrierIndexError(f"RF chain {l} outside 1..{self.geom.num_rf}")


class FullyDigitalPrecoder(BaseModel):
    """Per-subcarrier optimum F*_k: column l is f(N_t, zeta_k * psi_c[l])."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    grid: OfdmGrid
    num_antennas: int = Field(ge=1)
    psi_c: RealArray

    def matrix(self, k: int) -> np.ndarray:
        return array_response(self.num_antennas, self.grid.zeta(k) * self.psi_c).T

    def column(self, k: int, l: int) -> np.ndarray:
        return self.matrix(k)[:, l - 1]


def phase_progression(geom: ArrayGeometry, psi: float) -> np.ndarray:
    """gamma[m, n] = ((m-1)N + n - 1) * psi, shape (M, N)."""
    return np.arange(geom.num_antennas).reshape(geom.num_ttd, geom.antennas_per_ttd) * psi


def fully_digital(grid: OfdmGrid, geom: ArrayGeometry, psi_c) -> FullyDigitalPrecoder:
    return FullyDigitalPrecoder(grid=grid, num_antennas=geom.num_antennas, psi_c=np.atleast_1d(psi_c))


# ============================================================================
# MATRIX FORMS
# ============================================================================

def ps_matrix(design: HybridDesign) -> np.ndarray:
    """F_1 (N_t x M*N_rf): chain l, TTD m owns column (l-1)M + m, rows of subarray m."""
    g = design.geom
    N, M = g.antennas_per_ttd, g.num_ttd
    F1 = np.zeros((g.num_antennas, M * g.num_rf), dtype=complex)
    for l in range(g.num_rf):
        for m in range(M):
            F1[m * N:(m + 1) * N, l * M + m] = np.exp(1j * np.pi * design.ps_phases[l, m])
    return F1 / np.sqrt(g.num_antennas)


def ttd_matrix(design: HybridDesign, grid: OfdmGrid, k: int) -> np.ndarray:
    """F_2k (M*N_rf x N_rf): block l holds exp(-j 2 pi f_k t_l) on rows (l-1)M..lM-1."""
    f_k = grid.frequency(k)
    g = design.geom
    M = g.num_ttd
    F2 = np.zeros((M * g.num_rf, g.num_rf), dtype=complex)
    for l in range(g.num_rf):
        F2[l * M:(l + 1) * M, l] = np.exp(-2j * np.pi * f_k * design.delays[l])
    return F2


def _chain_beams(design: HybridDesign, freqs: np.ndarray, l: int) -> np.ndarray:
    # (len(freqs), N_t) effective beams of chain l, 1-based
    ps = np.exp(1j * np.pi * design.ps_phases[l - 1])  # (M, N)
    ttd = np.exp(-2j * np.pi * np.multiply.outer(freqs, design.delays[l - 1]))  # (F, M)
    beams = ttd[:, :, None] * ps[None, :, :]
    return beams.reshape(len(freqs), -1) / np.sqrt(design.geom.num_antennas)


def effective_beam(design: HybridDesign, grid: OfdmGrid, k: int, l: int) -> np.ndarray:
    """Column l of F_1 F_2k, the analog beam g_k^(l)."""
    design.check_chain(l)
    return _chain_beams(design, np.array([grid.frequency(k)]), l)[0]


def beam_gain(design: HybridDesign, grid: OfdmGrid, k: int, l: int, psi_c: float) -> float:
    return array_gain(effective_beam(design, grid, k, l), grid, k, psi_c)


def subcarrier_gains(design: HybridDesign, grid: OfdmGrid, l: int, psi_c: float) -> np.ndarray:
    """Array gain of chain l at all K subcarriers, vectorized over k."""
    design.check_chain(l)
    beams = _chain_beams(design, subcarrier_frequencies(grid), l)
    responses = array_response(design.geom.num_antennas, subcarrier_zetas(grid) * psi_c)
    return np.abs(np.sum(responses.conj() * beams, axis=1))


def phase_domain_gain(design: HybridDesign, grid: OfdmGrid, k: int, l: int, psi_c: float) -> float:
    """(1/N_t)|sum_m sum_n exp(j pi (zeta gamma + x - zeta theta))|, evaluated from the phases."""
    design.check_chain(l)
    zeta = grid.zeta(k)
    gamma = phase_progression(design.geom, psi_c)
    theta = design.theta(grid.fc)[l - 1]
    phase = zeta * gamma + design.ps_phases[l - 1] - zeta * theta[:, None]
    return float(abs(np.exp(1j * np.pi * phase).sum()) / design.geom.num_antennas)


# ============================================================================
# OBJECTIVE
# ============================================================================

def _check_paths(design: HybridDesign, paths: PathSet) -> None:
    if paths.num_paths != design.geom.num_rf:
        raise InvalidArgumentError(
            f"design has {design.geom.num_rf} RF chains but paths carry {paths.num_paths} directions"
        )


def objective_terms(design: HybridDesign, grid: OfdmGrid, paths: PathSet) -> np.ndarray:
    """
    Chord terms (1/N_t)|exp(-j pi zeta_k gamma) - exp(j pi x) exp(-j pi zeta_k theta)|^2
    with shape (K, N_rf, M, N).
    """
    _check_paths(design, paths)
    g = design.geom
    zetas = subcarrier_zetas(grid)
    freqs = subcarrier_frequencies(grid)
    terms = np.empty((grid.num_subcarriers, g.num_rf, g.num_ttd, g.antennas_per_ttd))
    for l, psi in enumerate(paths.psi_c):
        target = np.exp(-1j * np.pi * np.multiply.outer(zetas, phase_progression(g, psi)))
        beams = _chain_beams(design, freqs, l + 1).reshape(target.shape) * np.sqrt(g.num_antennas)
        terms[:, l] = np.abs(target - beams) ** 2
    return terms / g.num_antennas


def objective(design: HybridDesign, grid: OfdmGrid, paths: PathSet) -> float:
    """(1/K) sum_k ||F*_k - F_1 F_2k||_F^2, summed from the chord terms."""
    return float(objective_terms(design, grid, paths).sum() / grid.num_subcarriers)


def objective_matrix(design: HybridDesign, grid: OfdmGrid, paths: PathSet) -> float:
    """Same objective through dense F*_k and F_1 F_2k. Meant for cross-checks on small arrays."""
    _check_paths(design, paths)
    reference = fully_digital(grid, design.geom, paths.psi_c)
    F1 = ps_matrix(design)
    total = 0.0
    for k in range(1, grid.num_subcarriers + 1):
        diff = reference.matrix(k) - F1 @ ttd_matrix(design, grid, k)
        total += np.linalg.norm(diff, "fro") ** 2
    return float(total / grid.num_subcarriers)


# ============================================================================
# SIGN INVARIANCE
# ============================================================================

def sign_flip(
    design: HybridDesign,
    paths: PathSet,
    chains: Iterable[int] | None = None,
) -> tuple[HybridDesign, PathSet]:
    """
    Mirror a design onto the opposite direction: x -> -x, t -> t_max - t,
    psi -> -psi. The array gain at every subcarrier is unchanged. `chains`
    (1-based) restricts the flip to some RF chains; default is all of them.
    """
    _check_paths(design, paths)
    selected = np.zeros(design.geom.num_rf, dtype=bool)
    if chains is None:
        selected[:] = True
    else:
        for l in chains:
            design.check_chain(l)
            selected[l - 1] = True

    x = np.where(selected[:, None, None], -design.ps_phases, design.ps_phases)
    t = np.where(selected[:, None], design.t_max - design.delays, design.delays)
    psi = np.where(selected, -paths.psi_c, paths.psi_c)

    flipped = HybridDesign(geom=design.geom, ps_phases=x, delays=t, t_max=design.t_max)
    mirrored = PathSet(
        gains=paths.gains,
        delays=paths.delays,
        psi_c=psi,
        phi_c=paths.phi_c,
        num_rx=paths.num_rx,
    )
    return flipped, mirrored
