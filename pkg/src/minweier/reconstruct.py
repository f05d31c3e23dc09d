"""Rebuild a surface from a sampled Gauss map.

Given unit normals n on a uniform grid with |n_x|^2 = |n_y|^2 = nu > 0 and
n_x . n_y = 0, the immersion solves z_x = -n_x / nu, z_y = n_y / nu.  That
system is integrated with the composite trapezoidal rule.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import GaussFieldError
from .geometry import ResidualField

UNIT_TOL = 1e-9
SPACING_TOL = 1e-9


@dataclass
class GaussField:
    """Unit normals ``normals[i, j]`` at ``(x[i], y[j])`` on a uniform grid."""

    x: np.ndarray
    y: np.ndarray
    normals: np.ndarray

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.y = np.asarray(self.y, dtype=float)
        self.normals = np.asarray(self.normals, dtype=float)
        nx, ny = len(self.x), len(self.y)
        if nx < 3 or ny < 3:
            raise GaussFieldError(f"Gauss field needs at least 3x3 samples, got {nx}x{ny}")
        if self.normals.shape != (nx, ny, 3):
            raise GaussFieldError(f"normals have shape {self.normals.shape}, expected {(nx, ny, 3)}")
        for name, v in (("x", self.x), ("y", self.y)):
            d = np.diff(v)
            if np.any(d <= 0):
                raise GaussFieldError(f"{name} coordinates must increase strictly")
            if np.max(np.abs(d - d.mean())) > SPACING_TOL:
                raise GaussFieldError(f"{name} spacing is not uniform")

    @property
    def hx(self):
        return float((self.x[-1] - self.x[0]) / (len(self.x) - 1))

    @property
    def hy(self):
        return float((self.y[-1] - self.y[0]) / (len(self.y) - 1))

    @property
    def points(self):
        return self.x[:, None] + 1j * self.y[None, :]

    def norm_violations(self):
        """Indices (i, j) whose sample is not unit length within 1e-9."""
        bad = np.abs(np.linalg.norm(self.normals, axis=-1) - 1.0) > UNIT_TOL
        return [tuple(int(k) for k in idx) for idx in np.argwhere(bad)]

    @classmethod
    def from_grid(cls, grid):
        """Gauss field of a :class:`~minweier.weierstrass.SurfaceGrid`."""
        if not np.all(np.isfinite(grid.normal)):
            raise GaussFieldError("surface grid has undefined normals (poles)")
        return cls(grid.x.copy(), grid.y.copy(), grid.normal.copy())


def gauss_derivatives(field: GaussField):
    """n_x, n_y: central differences inside, second-order one-sided at the edges."""
    dn_x = np.gradient(field.normals, field.hx, axis=0, edge_order=2)
    dn_y = np.gradient(field.normals, field.hy, axis=1, edge_order=2)
    return dn_x, dn_y


@dataclass
class Validation:
    residual: ResidualField      # interior points only
    nu: np.ndarray               # recovered nu = |n_x|^2 on the full grid
    flagged: np.ndarray          # recovered nu <= nu_floor
    norm_violations: list

    @property
    def ok(self):
        return not self.norm_violations and not np.any(self.flagged)


def validate_33(field: GaussField, nu_floor=1e-12) -> Validation:
    """Check |n_x|^2 = |n_y|^2 = nu > 0 and n_x . n_y = 0 on the grid.

    The residual per point is ``max(| |n_y|^2 - nu |, |n_x . n_y|)`` with
    ``nu = |n_x|^2``; edge samples are left out of the residual field.
    """
    dn_x, dn_y = gauss_derivatives(field)
    nu = np.einsum("ijk,ijk->ij", dn_x, dn_x)
    res = np.maximum(np.abs(np.einsum("ijk,ijk->ij", dn_y, dn_y) - nu),
                     np.abs(np.einsum("ijk,ijk->ij", dn_x, dn_y)))
    interior = (slice(1, -1), slice(1, -1))
    return Validation(
        residual=ResidualField("gauss_properties_grid", res[interior].ravel(),
                               field.points[interior].ravel()),
        nu=nu,
        flagged=~(nu > nu_floor),
        norm_violations=field.norm_violations(),
    )


@dataclass
class Reconstruction:
    positions: np.ndarray        # row-then-column order, base pinned at the origin
    alternative: np.ndarray      # column-then-row order, same pinning
    base: tuple
    nu: np.ndarray

    @property
    def commutator(self):
        """Max difference between the two integration orders (discrete integrability defect)."""
        return float(np.max(np.abs(self.positions - self.alternative)))


def _cumtrapz(f, h, axis):
    avg = 0.5 * (np.take(f, range(1, f.shape[axis]), axis=axis)
                 + np.take(f, range(0, f.shape[axis] - 1), axis=axis))
    steps = np.cumsum(avg * h, axis=axis)
    zero = np.zeros_like(np.take(f, [0], axis=axis))
    return np.concatenate([zero, steps], axis=axis)


def integrate_34(field: GaussField, base=(0, 0), nu_floor=1e-12) -> Reconstruction:
    """Positions from z_x = -n_x / nu, z_y = n_y / nu.

    Integration always starts at grid corner (0, 0): first along row j=0,
    then up every column (and the transposed order for the commutator).
    ``base`` only fixes the translation, so changing it shifts every position
    by one constant vector.
    """
    i0, j0 = base
    nx, ny = len(field.x), len(field.y)
    if not (0 <= i0 < nx and 0 <= j0 < ny):
        raise IndexError(f"base index {base} outside the {nx}x{ny} grid")
    if field.norm_violations():
        i, j = field.norm_violations()[0]
        raise GaussFieldError(f"sample ({i}, {j}) is not a unit vector")
    dn_x, dn_y = gauss_derivatives(field)
    nu = np.einsum("ijk,ijk->ij", dn_x, dn_x)
    if np.any(~(nu > nu_floor)):
        i, j = np.argwhere(~(nu > nu_floor))[0]
        raise GaussFieldError(
            f"recovered nu <= {nu_floor:g} at sample ({i}, {j}); the integration path crosses a flagged region"
        )
    zx = -dn_x / nu[..., None]
    zy = dn_y / nu[..., None]

    row = _cumtrapz(zx[:, :1], field.hx, axis=0)
    rows_first = row + _cumtrapz(zy, field.hy, axis=1)
    col = _cumtrapz(zy[:1, :], field.hy, axis=1)
    cols_first = col + _cumtrapz(zx, field.hx, axis=0)

    rows_first -= rows_first[i0, j0]
    cols_first -= cols_first[i0, j0]
    return Reconstruction(rows_first, cols_first, (i0, j0), nu)
