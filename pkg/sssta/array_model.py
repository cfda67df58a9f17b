"""
SSSTA Designer - Array Model

Directions, polarization, dipole geometry, steering vectors and array
responses for spatially stretched tripole arrays.

All lengths are in wavelengths and all angles are degrees at the API
boundary. Stored dipole weights enter the response conjugated:

    p(src) = sum_k s_k(src) * conj(w_k)

so a weight vector ``w`` produces ``S @ w.conj()`` for a steering matrix
``S`` whose columns follow the placements. Every module in the package
uses this convention.
"""

from dataclasses import dataclass
from enum import IntEnum
from typing import Iterable, Literal, Sequence

import numpy as np

from .errors import InvalidScenarioError


# =============================================================================
# TYPE DEFINITIONS
# =============================================================================

PolarizationConvention = Literal["as-printed", "textbook"]

_ANGLE_TOL = 1e-9


class Orientation(IntEnum):
    """Dipole axis; the integer value is the index within a location triple."""

    X = 0
    Y = 1
    Z = 2


@dataclass(frozen=True)
class SourceState:
    """Direction and polarization of an incoming plane wave, in degrees."""

    theta: float
    phi: float
    gamma: float
    eta: float

    def __post_init__(self) -> None:
        if not -_ANGLE_TOL <= self.theta <= 90.0 + _ANGLE_TOL:
            raise InvalidScenarioError(f"theta {self.theta} outside [0, 90]")
        if not -_ANGLE_TOL <= self.gamma <= 90.0 + _ANGLE_TOL:
            raise InvalidScenarioError(f"gamma {self.gamma} outside [0, 90]")
        if not -180.0 <= self.eta < 180.0:
            raise InvalidScenarioError(f"eta {self.eta} outside [-180, 180)")

    @property
    def theta_signed(self) -> float:
        """Signed theta: positive on the phi=+90 half-plane, negative on phi=-90."""
        return -self.theta if self.phi < 0 else self.theta


@dataclass(frozen=True)
class SamplingGrid:
    """Uniform candidate positions ``origin + m * spacing`` for m = 0..count-1."""

    origin: float
    spacing: float
    count: int

    def __post_init__(self) -> None:
        if self.count < 1:
            raise InvalidScenarioError(f"grid count must be positive, got {self.count}")
        if self.spacing <= 0:
            raise InvalidScenarioError(f"grid spacing must be positive, got {self.spacing}")

    @classmethod
    def spanning(cls, start: float, end: float, count: int) -> "SamplingGrid":
        """Grid of ``count`` points from ``start`` to ``end`` inclusive."""
        if count == 1 or end <= start:
            return cls(origin=start, spacing=1.0, count=1)
        return cls(origin=start, spacing=(end - start) / (count - 1), count=count)

    @property
    def positions(self) -> np.ndarray:
        return self.origin + self.spacing * np.arange(self.count)

    @property
    def end(self) -> float:
        return self.origin + self.spacing * (self.count - 1)


@dataclass(frozen=True)
class DipolePlacement:
    """One dipole: position in wavelengths, axis, and stored complex weight."""

    position: float
    orientation: Orientation
    weight: complex = 0j

    def with_weight(self, weight: complex) -> "DipolePlacement":
        return DipolePlacement(self.position, self.orientation, complex(weight))


# =============================================================================
# STEERING
# =============================================================================

def _source_arrays(sources: Sequence[SourceState]) -> tuple[np.ndarray, ...]:
    theta = np.deg2rad([s.theta for s in sources])
    phi = np.deg2rad([s.phi for s in sources])
    gamma = np.deg2rad([s.gamma for s in sources])
    eta = np.deg2rad([s.eta for s in sources])
    return theta, phi, gamma, eta


def _spatial_phase(positions: np.ndarray, theta: np.ndarray, phi: np.ndarray) -> np.ndarray:
    """exp(-j 2 pi x sin(theta) sin(phi)) with sources on rows, positions on columns."""
    kx = np.sin(theta) * np.sin(phi)
    return np.exp(-2j * np.pi * np.outer(kx, positions))


def _polarization_rows(
    theta: np.ndarray,
    phi: np.ndarray,
    gamma: np.ndarray,
    eta: np.ndarray,
    convention: PolarizationConvention,
) -> np.ndarray:
    """Spatial-polarization coherent vectors, one (x, y, z) row per source."""
    if convention not in ("as-printed", "textbook"):
        raise InvalidScenarioError(f"unknown polarization convention {convention!r}")

    ellip = np.sin(gamma) * np.exp(1j * eta)
    x = ellip * np.cos(theta) * np.cos(phi) - np.cos(gamma) * np.sin(phi)
    y_sign = -1.0 if convention == "as-printed" else 1.0
    y = ellip * np.cos(theta) * np.sin(phi) + y_sign * np.cos(gamma) * np.cos(phi)
    z = -ellip * np.sin(theta)
    return np.stack([x, y, z], axis=-1)


def spatial_steering(grid: SamplingGrid, src: SourceState) -> np.ndarray:
    """
    Spatial steering vector of a uniform grid.

    Args:
        grid: Candidate positions
        src: Incoming wave

    Returns:
        Complex vector of length ``grid.count``
    """
    theta, phi, _, _ = _source_arrays([src])
    return _spatial_phase(grid.positions, theta, phi)[0]


def polarization_vector(
    src: SourceState,
    convention: PolarizationConvention = "as-printed",
) -> np.ndarray:
    """
    Spatial-polarization coherent vector (s_x, s_y, s_z).

    The ``as-printed`` convention keeps the minus sign on the cos(gamma)
    cos(phi) term of the y component; ``textbook`` flips it.
    """
    return _polarization_rows(*_source_arrays([src]), convention)[0]


def steering_matrix(
    positions: Iterable[float],
    sources: Sequence[SourceState],
    convention: PolarizationConvention = "as-printed",
) -> np.ndarray:
    """
    Interleaved tripole steering matrix.

    Row ``l`` is the full steering vector at ``sources[l]``; columns run
    ``[x_0, y_0, z_0, x_1, y_1, z_1, ...]`` over the positions.

    Args:
        positions: Dipole locations in wavelengths
        sources: Sample directions, one per row
        convention: Polarization sign convention

    Returns:
        Complex array of shape (len(sources), 3 * len(positions))
    """
    positions = np.asarray(list(positions), dtype=float)
    theta, phi, gamma, eta = _source_arrays(sources)
    spatial = _spatial_phase(positions, theta, phi)
    pol = _polarization_rows(theta, phi, gamma, eta, convention)
    return (spatial[:, :, None] * pol[:, None, :]).reshape(len(sources), 3 * positions.size)


def full_steering(
    grid: SamplingGrid,
    src: SourceState,
    convention: PolarizationConvention = "as-printed",
) -> np.ndarray:
    """Full steering vector of length 3M, interleaved per location as x, y, z."""
    return steering_matrix(grid.positions, [src], convention)[0]


def placement_steering(
    placements: Sequence[DipolePlacement],
    sources: Sequence[SourceState],
    convention: PolarizationConvention = "as-printed",
) -> np.ndarray:
    """Steering matrix with one column per placement (its own axis only)."""
    if not placements:
        return np.zeros((len(sources), 0), dtype=complex)
    positions = np.array([p.position for p in placements])
    axes = np.array([int(p.orientation) for p in placements])
    theta, phi, gamma, eta = _source_arrays(sources)
    spatial = _spatial_phase(positions, theta, phi)
    pol = _polarization_rows(theta, phi, gamma, eta, convention)
    return spatial * pol[:, axes]


def placement_weights(placements: Sequence[DipolePlacement]) -> np.ndarray:
    return np.array([p.weight for p in placements], dtype=complex)


def responses(
    placements: Sequence[DipolePlacement],
    sources: Sequence[SourceState],
    convention: PolarizationConvention = "as-printed",
) -> np.ndarray:
    """Array response at every source, stored weights applied conjugated."""
    if not placements:
        return np.zeros(len(sources), dtype=complex)
    return placement_steering(placements, sources, convention) @ placement_weights(placements).conj()


def response(
    placements: Sequence[DipolePlacement],
    src: SourceState,
    convention: PolarizationConvention = "as-printed",
) -> complex:
    """
    Array response to one source.

    Args:
        placements: Dipoles with stored weights
        src: Incoming wave
        convention: Polarization sign convention

    Returns:
        Complex response; 0 for an empty array
    """
    return complex(responses(placements, [src], convention)[0])
