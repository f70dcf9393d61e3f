"""Sinusoidal equal-area grid on a sphere centred at (0N, 0E)."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from ..errors import ConfigurationError, DomainError

SPHERE_RADIUS = 6371007.181
PIXEL_SIZE = 1100.0
_EPS_DEG = 1e-9


@dataclass(frozen=True)
class GridSpec:
    """Tile grid; ``origin_row``/``origin_col`` locate the projection centre in
    fractional pixel coordinates. Pixel ``(i, j)`` spans ``[i, i+1) x [j, j+1)``,
    so its centre is at ``(i + 0.5, j + 0.5)``."""

    rows: int
    cols: int
    pixel_size: float = PIXEL_SIZE
    sphere_radius: float = SPHERE_RADIUS
    origin_row: float = 0.0
    origin_col: float = 0.0

    def __post_init__(self):
        if int(self.rows) != self.rows or int(self.cols) != self.cols or self.rows < 1 or self.cols < 1:
            raise ConfigurationError(f"grid must have at least one row and column, got {self.rows}x{self.cols}")
        if not self.pixel_size > 0 or not self.sphere_radius > 0:
            raise ConfigurationError("pixel_size and sphere_radius must be > 0")
        object.__setattr__(self, "rows", int(self.rows))
        object.__setattr__(self, "cols", int(self.cols))
        for name in ("pixel_size", "sphere_radius", "origin_row", "origin_col"):
            object.__setattr__(self, name, float(getattr(self, name)))

    @property
    def shape(self):
        return (self.rows, self.cols)

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        return cls(**d)

    def pixel_centers(self):
        """Latitude/longitude of every pixel centre; off-globe pixels are NaN."""
        rr, cc = np.meshgrid(np.arange(self.rows) + 0.5, np.arange(self.cols) + 0.5, indexing="ij")
        return unproject(rr, cc, self, strict=False)


def project(lat, lon, grid: GridSpec):
    """Fractional (row, col) of geographic coordinates in degrees."""
    lat = np.asarray(lat, dtype=float)
    lon = np.asarray(lon, dtype=float)
    if np.any(np.abs(lat) > 90) or np.any(np.abs(lon) > 180):
        raise DomainError("latitude must lie in [-90, 90] and longitude in [-180, 180]")
    phi = np.radians(lat)
    x = grid.sphere_radius * np.radians(lon) * np.cos(phi)
    y = grid.sphere_radius * phi
    row = grid.origin_row - y / grid.pixel_size
    col = grid.origin_col + x / grid.pixel_size
    if row.ndim == 0:
        return float(row), float(col)
    return row, col


def unproject(row, col, grid: GridSpec, strict=True):
    """Inverse of :func:`project`.

    Off-globe positions raise :class:`DomainError`, or become NaN when
    ``strict`` is false.
    """
    row = np.asarray(row, dtype=float)
    col = np.asarray(col, dtype=float)
    y = (grid.origin_row - row) * grid.pixel_size
    x = (col - grid.origin_col) * grid.pixel_size
    phi = y / grid.sphere_radius
    lat = np.degrees(phi)
    cos_phi = np.cos(phi)
    with np.errstate(divide="ignore", invalid="ignore"):
        lon = np.degrees(x / (grid.sphere_radius * cos_phi))
    # at the poles only the central meridian position is on the globe
    pole = np.abs(np.abs(lat) - 90.0) <= _EPS_DEG
    lon = np.where(pole & (np.abs(x) <= 1e-6), 0.0, lon)
    bad = ~(np.abs(lat) <= 90.0 + _EPS_DEG) | ~(np.abs(lon) <= 180.0 + _EPS_DEG)
    if strict and np.any(bad):
        raise DomainError("pixel position lies off the globe")
    lat = np.where(bad, np.nan, np.clip(lat, -90.0, 90.0))
    lon = np.where(bad, np.nan, np.clip(lon, -180.0, 180.0))
    if lat.ndim == 0:
        return float(lat), float(lon)
    return lat, lon
