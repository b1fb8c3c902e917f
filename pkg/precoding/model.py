"""
Wideband Channel and Array Model
================================

OFDM subcarrier grid, uniform linear array (ULA) geometry, the multipath
MIMO-OFDM channel and the per-subcarrier array gain.

## Beam squint in one paragraph

A phase-shifter beam is steered with frequency-flat phases computed at the
carrier f_c. Subcarrier k sees the path at spatial direction
psi_k = zeta_k * psi_c with zeta_k = f_k / f_c, so a beam matched at the
center drifts away from the path as |f_k - f_c| grows. The resulting gain is

    g = |sin(N_t * Delta) / (N_t * sin(Delta))|,  Delta = (pi/2)(psi_k - psi_c)

which tends to zero off-center as N_t grows. Everything in this module is SI
(Hz, seconds, meters); unit conversion happens at the CLI/API boundary.
"""

from __future__ import annotations

from typing import Annotated

import numpy as np
from pydantic import BaseModel, BeforeValidator, ConfigDict, Field, field_validator, model_validator

from config import SPEED_OF_LIGHT
from precoding.errors import InvalidArgumentError, SubcarrierIndexError

# Below this |sin(Delta)| the closed-form gain ratio takes its limit value.
SINGULARITY_EPS = 1e-12
# Tolerance on the unit-norm precondition of array_gain.
NORM_TOL = 1e-9


def _readonly(dtype):
    def convert(value):
        arr = np.array(value, dtype=dtype)
        arr.setflags(write=False)
        return arr

    return convert


RealArray = Annotated[np.ndarray, BeforeValidator(_readonly(float))]
ComplexArray = Annotated[np.ndarray, BeforeValidator(_readonly(complex))]


# ============================================================================
# DOMAIN TYPES
# ============================================================================

class OfdmGrid(BaseModel):
    """Symmetric OFDM grid: K (odd) subcarriers spread over B around f_c."""

    model_config = ConfigDict(frozen=True)

    fc: float = Field(gt=0, description="Carrier frequency (Hz)")
    bandwidth: float = Field(ge=0, description="Bandwidth B (Hz)")
    num_subcarriers: int = Field(ge=1, description="Subcarrier count K (odd)")

    @model_validator(mode="after")
    def _check_grid(self) -> OfdmGrid:
        if self.num_subcarriers % 2 == 0:
            raise ValueError(f"subcarrier count must be odd, got {self.num_subcarriers}")
        if self.bandwidth >= 2 * self.fc:
            raise ValueError("bandwidth must stay below 2*fc so every f_k is positive")
        return self

    @property
    def center_index(self) -> int:
        """1-based index of the subcarrier sitting exactly at f_c."""
        return (self.num_subcarriers + 1) // 2

    def check_index(self, k: int) -> None:
        if not 1 <= k <= self.num_subcarriers:
            raise SubcarrierIndexError(f"subcarrier index {k} outside 1..{self.num_subcarriers}")

    def frequency(self, k: int) -> float:
        self.check_index(k)
        K = self.num_subcarriers
        return self.fc + (self.bandwidth / K) * (k - 1 - (K - 1) / 2)

    def zeta(self, k: int) -> float:
        return self.frequency(k) / self.fc


class ArrayGeometry(BaseModel):
    """ULA of N_t elements split into M subarrays of N = N_t / M elements per RF chain."""

    model_config = ConfigDict(frozen=True)

    num_antennas: int = Field(ge=1, description="N_t")
    num_ttd: int = Field(ge=1, description="M, TTDs per RF chain")
    num_rf: int = Field(default=1, ge=1, description="N_RF")
    spacing: float = Field(gt=0, description="Element spacing d (m)")

    @model_validator(mode="after")
    def _check_split(self) -> ArrayGeometry:
        if self.num_antennas % self.num_ttd:
            raise ValueError(
                f"N_t={self.num_antennas} is not a multiple of M={self.num_ttd}"
            )
        if self.num_antennas < self.num_rf:
            raise ValueError("N_t must be at least N_RF")
        return self

    @classmethod
    def half_wavelength(cls, num_antennas: int, num_ttd: int, fc: float, num_rf: int = 1) -> ArrayGeometry:
        return cls(
            num_antennas=num_antennas,
            num_ttd=num_ttd,
            num_rf=num_rf,
            spacing=SPEED_OF_LIGHT / (2 * fc),
        )

    @property
    def antennas_per_ttd(self) -> int:
        """N, the number of phase shifters behind each TTD."""
        return self.num_antennas // self.num_ttd

    def spatial_scale(self, freq: float | np.ndarray) -> float | np.ndarray:
        """2*d*f/nu: multiply sin(angle) by this to get the spatial direction at f."""
        return 2 * self.spacing * np.asarray(freq) / SPEED_OF_LIGHT


class PathSet(BaseModel):
    """
    L propagation paths. Directions are stored at the carrier under the
    half-wavelength convention, i.e. psi_c = sin(AoD) and phi_c = sin(AoA).
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    gains: ComplexArray
    delays: RealArray
    psi_c: RealArray
    phi_c: RealArray
    num_rx: int = Field(default=1, ge=1)

    @field_validator("psi_c", "phi_c")
    @classmethod
    def _check_direction(cls, value: np.ndarray) -> np.ndarray:
        if value.ndim != 1:
            raise ValueError("directions must be a 1-D sequence, one per path")
        if np.any(np.abs(value) > 1):
            raise ValueError("spatial directions must lie in [-1, 1]")
        return value

    @model_validator(mode="after")
    def _check_lengths(self) -> PathSet:
        sizes = {self.gains.shape, self.delays.shape, self.psi_c.shape, self.phi_c.shape}
        if len(sizes) != 1:
            raise ValueError(f"per-path fields disagree in length: {sorted(sizes)}")
        if self.psi_c.size == 0:
            raise ValueError("a PathSet needs at least one path")
        return self

    @classmethod
    def from_directions(cls, psi_c, phi_c=None, gains=None, delays=None, num_rx: int = 1) -> PathSet:
        psi = np.atleast_1d(np.asarray(psi_c, dtype=float))
        L = psi.size
        return cls(
            gains=np.ones(L) if gains is None else gains,
            delays=np.zeros(L) if delays is None else delays,
            psi_c=psi,
            phi_c=np.zeros(L) if phi_c is None else phi_c,
            num_rx=num_rx,
        )

    @classmethod
    def from_angles(cls, aod, aoa, gains, delays, num_rx: int = 1) -> PathSet:
        aod = np.atleast_1d(np.asarray(aod, dtype=float))
        aoa = np.atleast_1d(np.asarray(aoa, dtype=float))
        if np.any(np.abs(aod) > np.pi / 2) or np.any(np.abs(aoa) > np.pi / 2):
            raise InvalidArgumentError("AoD/AoA must lie in [-pi/2, pi/2]")
        return cls(gains=gains, delays=delays, psi_c=np.sin(aod), phi_c=np.sin(aoa), num_rx=num_rx)

    @classmethod
    def random(
        cls,
        num_paths: int,
        rng: np.random.Generator,
        delay_window: tuple[float, float] = (0.0, 100e-9),
        num_rx: int = 1,
    ) -> PathSet:
        """Unit-variance CN(0, 1) gains, uniform delays, uniform AoD/AoA."""
        gains = (rng.standard_normal(num_paths) + 1j * rng.standard_normal(num_paths)) / np.sqrt(2)
        delays = rng.uniform(*delay_window, size=num_paths)
        aod = rng.uniform(-np.pi / 2, np.pi / 2, size=num_paths)
        aoa = rng.uniform(-np.pi / 2, np.pi / 2, size=num_paths)
        return cls.from_angles(aod, aoa, gains, delays, num_rx=num_rx)

    @property
    def num_paths(self) -> int:
        return int(self.psi_c.size)

    @property
    def aod(self) -> np.ndarray:
        return np.arcsin(self.psi_c)

    @property
    def aoa(self) -> np.ndarray:
        return np.arcsin(self.phi_c)


class SteeringVector(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    entries: ComplexArray
    direction: float


# ============================================================================
# OPERATIONS
# ============================================================================

def subcarrier_frequencies(grid: OfdmGrid) -> np.ndarray:
    """f_k for k = 1..K (Hz)."""
    K = grid.num_subcarriers
    offsets = np.arange(K) - (K - 1) / 2
    return grid.fc + (grid.bandwidth / K) * offsets


def subcarrier_zetas(grid: OfdmGrid) -> np.ndarray:
    return subcarrier_frequencies(grid) / grid.fc


def array_response(num_antennas: int, psi) -> np.ndarray:
    # Rows follow the leading shape of psi, columns are antenna indices.
    n = np.arange(num_antennas)
    return np.exp(-1j * np.pi * np.multiply.outer(np.asarray(psi, dtype=float), n)) / np.sqrt(num_antennas)


def steering(num_antennas: int, psi: float) -> SteeringVector:
    """Array response f(N, psi) of an N-element ULA."""
    if num_antennas < 1:
        raise InvalidArgumentError(f"antenna count must be >= 1, got {num_antennas}")
    return SteeringVector(entries=array_response(num_antennas, psi), direction=float(psi))


def channel_matrix(grid: OfdmGrid, geom: ArrayGeometry, paths: PathSet, k: int) -> np.ndarray:
    """H_k (N_t x N_r) of the multipath channel at subcarrier k."""
    grid.check_index(k)
    if paths.num_paths > geom.num_rf:
        raise InvalidArgumentError(
            f"{paths.num_paths} paths exceed the {geom.num_rf} RF chains of the array"
        )
    f_k = grid.frequency(k)
    N_t, N_r, L = geom.num_antennas, paths.num_rx, paths.num_paths

    # Transmit side follows the configured spacing; the receiver is half-wavelength.
    psi_k = geom.spatial_scale(f_k) * paths.psi_c
    phi_k = (f_k / grid.fc) * paths.phi_c
    tx = array_response(N_t, psi_k)  # (L, N_t)
    rx = array_response(N_r, phi_k)  # (L, N_r)
    weights = paths.gains * np.exp(-2j * np.pi * paths.delays * f_k)
    H = np.einsum("l,li,lj->ij", weights, tx, rx.conj())
    return np.sqrt(N_t * N_r / L) * H


def matched_gain(num_antennas: int, psi_k: float, psi_c: float) -> float:
    """Closed-form |sin(N_t D)/(N_t sin D)| with D = (pi/2)(psi_k - psi_c)."""
    delta = 0.5 * np.pi * (psi_k - psi_c)
    s = np.sin(delta)
    if abs(s) < SINGULARITY_EPS:
        return 1.0
    return float(abs(np.sin(num_antennas * delta) / (num_antennas * s)))


def array_gain(beam: np.ndarray, grid: OfdmGrid, k: int, psi_c: float) -> float:
    """|f(N_t, zeta_k psi_c)^H beam| for a unit-norm beam."""
    beam = np.asarray(beam)
    if abs(np.linalg.norm(beam) - 1.0) > NORM_TOL:
        raise InvalidArgumentError(f"beam must have unit 2-norm, got {np.linalg.norm(beam):.3e}")
    response = array_response(beam.size, grid.zeta(k) * psi_c)
    return float(abs(np.vdot(response, beam)))


def squint_profile(grid: OfdmGrid, geom: ArrayGeometry, psi_c: float) -> list[tuple[int, float]]:
    """Gain at every subcarrier of the beam matched to psi_c at the carrier."""
    beam = steering(geom.num_antennas, psi_c).entries
    responses = array_response(geom.num_antennas, subcarrier_zetas(grid) * psi_c)  # (K, N_t)
    gains = np.abs(responses.conj() @ beam)
    return [(k, float(g)) for k, g in enumerate(gains, start=1)]
