"""Uniform planar array layout and exact element-user distances.

The array sits on the y-z plane, centered at the origin, with element
centers spaced ``spacing`` meters apart along both axes.  Element indices
are centered: along an axis with ``n`` elements the index m runs over
-(n-1)/2, ..., (n-1)/2 in unit steps, so indices are integers for odd
counts and half-integers for even counts.  Either parity yields the same
distance and array-factor formulas.

Users live in the x >= 0 half space at spherical coordinates
(r, theta, phi) with direction cosines

    u_x = sin(theta) * cos(phi)     (normal to the array plane)
    u_y = sin(theta) * sin(phi)
    u_z = cos(theta)

so the user position is r * (u_x, u_y, u_z).  The exact distance between
the user and the element at index (m_y, m_z) is

    r * sqrt(1 - 2*m_y*e*u_y - 2*m_z*e*u_z + (m_y^2 + m_z^2) * e^2)

with e = spacing / r, which equals the Euclidean distance between the two
points; both forms are implemented and the Euclidean one serves as the
test oracle.
"""

from __future__ import annotations

import hashlib
import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DegenerateGeometryError

# Warn when the element spacing is no longer small against the user range;
# the square-root expansion stays exact but the scenario is suspicious.
NEAR_ARRAY_RATIO = 0.1


class NearArrayWarning(UserWarning):
    """User range is within a few element spacings of the array."""


class Vector3(NamedTuple):
    """Cartesian point, meters."""

    x: float
    y: float
    z: float

    def as_array(self) -> np.ndarray:
        return np.array(self, dtype=float)


@dataclass(frozen=True)
class ArrayGeometry:
    """Uniform planar array on the y-z plane.

    Attributes:
        num_y: element count along the y axis.
        num_z: element count along the z axis.
        spacing: center-to-center element separation d, meters.
        element_area: physical aperture of a single element, square meters.
        wavelength: carrier wavelength, meters.
    """

    num_y: int
    num_z: int
    spacing: float
    element_area: float
    wavelength: float

    def __post_init__(self):
        for name in ("num_y", "num_z"):
            count = getattr(self, name)
            if not isinstance(count, (int, np.integer)) or isinstance(count, bool):
                raise ValueError(f"{name} must be an integer, got {count!r}")
            if count < 1:
                raise ValueError(f"{name} must be positive, got {count}")
        for name in ("spacing", "element_area", "wavelength"):
            value = getattr(self, name)
            if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be a positive finite number, got {value!r}")
        if self.element_area > self.spacing**2 * (1.0 + 1e-12):
            raise ValueError(
                f"elements overlap: spacing {self.spacing} is smaller than "
                f"sqrt(element_area) {math.sqrt(self.element_area)}"
            )

    @property
    def num_elements(self) -> int:
        return self.num_y * self.num_z

    @property
    def occupation_ratio(self) -> float:
        """Fraction of the array plate covered by elements, element_area / spacing^2."""
        return self.element_area / self.spacing**2

    @property
    def aperture_y(self) -> float:
        """Physical array dimension along y, num_y * spacing, meters."""
        return self.num_y * self.spacing

    @property
    def aperture_z(self) -> float:
        """Physical array dimension along z, num_z * spacing, meters."""
        return self.num_z * self.spacing

    def indices_y(self) -> np.ndarray:
        """Centered element indices along y, ascending."""
        return np.arange(self.num_y) - (self.num_y - 1) / 2.0

    def indices_z(self) -> np.ndarray:
        """Centered element indices along z, ascending."""
        return np.arange(self.num_z) - (self.num_z - 1) / 2.0

    def index_grid(self) -> tuple[np.ndarray, np.ndarray]:
        """Flattened (m_y, m_z) index pairs, m_z outermost and m_y innermost."""
        mz, my = np.meshgrid(self.indices_z(), self.indices_y(), indexing="ij")
        return my.ravel(), mz.ravel()

    def digest(self) -> str:
        """Short stable identifier used to match channel vectors to geometries."""
        raw = (
            f"{self.num_y},{self.num_z},{self.spacing!r},"
            f"{self.element_area!r},{self.wavelength!r}"
        )
        return hashlib.sha1(raw.encode()).hexdigest()[:12]


@dataclass(frozen=True)
class UserLocation:
    """Spherical user position: range r (m), zenith theta and azimuth phi (rad).

    theta is measured from the +z axis and phi from the +x axis inside the
    x-y plane, so phi in [-pi/2, pi/2] keeps the user in front of the array.
    """

    r: float
    theta: float
    phi: float

    def __post_init__(self):
        if not (isinstance(self.r, (int, float)) and math.isfinite(self.r) and self.r > 0):
            raise ValueError(f"r must be a positive finite range, got {self.r!r}")
        if not 0.0 <= self.theta <= math.pi:
            raise ValueError(f"theta must lie in [0, pi], got {self.theta!r}")
        if not -math.pi / 2 <= self.phi <= math.pi / 2:
            raise ValueError(f"phi must lie in [-pi/2, pi/2], got {self.phi!r}")

    @property
    def u_x(self) -> float:
        """Direction cosine along x; non-negative for the allowed angle ranges."""
        return math.sin(self.theta) * math.cos(self.phi)

    @property
    def u_y(self) -> float:
        """Direction cosine along y."""
        return math.sin(self.theta) * math.sin(self.phi)

    @property
    def u_z(self) -> float:
        """Direction cosine along z."""
        return math.cos(self.theta)


def _checked_index(count: int, m: float, name: str) -> float:
    """Validate a centered element index against an axis with `count` elements."""
    offset = m + (count - 1) / 2.0
    if abs(offset - round(offset)) > 1e-9 or not -1e-9 <= offset <= count - 1 + 1e-9:
        raise IndexError(
            f"{name}={m} is not on the centered index grid of {count} elements"
        )
    return float(m)


def element_position(geom: ArrayGeometry, m_y: float, m_z: float) -> Vector3:
    """Center of the element at index (m_y, m_z): (0, m_y*d, m_z*d)."""
    m_y = _checked_index(geom.num_y, m_y, "m_y")
    m_z = _checked_index(geom.num_z, m_z, "m_z")
    return Vector3(0.0, m_y * geom.spacing, m_z * geom.spacing)


def user_position(loc: UserLocation) -> Vector3:
    """Cartesian user position r * (u_x, u_y, u_z)."""
    return Vector3(loc.r * loc.u_x, loc.r * loc.u_y, loc.r * loc.u_z)


def cartesian_to_spherical(p) -> UserLocation:
    """Convert a point in the x >= 0 half space to (r, theta, phi).

    The polar-degenerate directions (on the z axis) get phi = 0 so the
    conversion is deterministic and round-trips through user_position.
    """
    x, y, z = (float(v) for v in p)
    r = math.sqrt(x * x + y * y + z * z)
    if r == 0.0:
        raise DegenerateGeometryError("cannot assign angles to the origin")
    if x < 0.0:
        raise ValueError(f"point {p!r} lies behind the array plane (x < 0)")
    # atan2 form stays accurate near the poles, unlike acos(z/r)
    theta = math.atan2(math.hypot(x, y), z)
    phi = math.atan2(y, x) if (x != 0.0 or y != 0.0) else 0.0
    return UserLocation(r=r, theta=theta, phi=phi)


def _warn_if_near(eps: float) -> None:
    if eps >= NEAR_ARRAY_RATIO:
        warnings.warn(
            f"element spacing is {eps:.3g} of the user range; "
            "the scenario is unusually close to the array",
            NearArrayWarning,
            stacklevel=3,
        )


def element_distance(geom: ArrayGeometry, loc: UserLocation, m_y: float, m_z: float) -> float:
    """Exact distance between the user and the (m_y, m_z) element center."""
    m_y = _checked_index(geom.num_y, m_y, "m_y")
    m_z = _checked_index(geom.num_z, m_z, "m_z")
    eps = geom.spacing / loc.r
    _warn_if_near(eps)
    # Same operation order as the vectorized path so both agree bitwise.
    radicand = (
        1.0
        - (2.0 * eps * loc.u_y) * m_y
        - (2.0 * eps * loc.u_z) * m_z
        + (m_y * m_y + m_z * m_z) * (eps * eps)
    )
    if radicand <= 0.0:
        raise DegenerateGeometryError(
            f"user at r={loc.r} coincides with element ({m_y}, {m_z})"
        )
    return loc.r * math.sqrt(radicand)


def element_distances(geom: ArrayGeometry, loc: UserLocation) -> np.ndarray:
    """Distances from the user to every element, flattened m_z-outer."""
    my, mz = geom.index_grid()
    eps = geom.spacing / loc.r
    _warn_if_near(eps)
    radicand = (
        1.0
        - (2.0 * eps * loc.u_y) * my
        - (2.0 * eps * loc.u_z) * mz
        + (my * my + mz * mz) * (eps * eps)
    )
    if np.any(radicand <= 0.0):
        raise DegenerateGeometryError(
            f"user at r={loc.r} is numerically coincident with an array element"
        )
    return loc.r * np.sqrt(radicand)
