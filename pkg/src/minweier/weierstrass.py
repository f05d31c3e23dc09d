"""Canonical Weierstrass data: mu, nu, the stereographic Gauss map, and the
three canonical integrals evaluated over a rectangular parameter domain.

All point-wise functions accept a scalar complex ``z`` or an array of them and
broadcast with numpy.  Scalar calls raise on poles; grid code works with the
status-returning helpers instead.
"""
from __future__ import annotations

import functools
from dataclasses import dataclass, field
from enum import IntEnum

import numpy as np

from . import _backend
from .errors import PoleError, QuadratureError
from .expr import DEFAULT_POLE_FLOOR, Expr, derivatives, parse_expr

VALIDATION_POLE_FLOOR = 1e-8
MAX_PANELS = 2**14


class Flag(IntEnum):
    """Per-point admissibility, in increasing order of severity."""

    ADMISSIBLE = 0
    REG_FLOOR = 1
    MU_FLOOR = 2
    POLE = 3


@dataclass(frozen=True, eq=False)
class Holo:
    """An expression together with its first three symbolic derivatives."""

    w: Expr
    dw: Expr
    d2w: Expr
    d3w: Expr

    def values(self, z, order=1, pole_floor=DEFAULT_POLE_FLOOR):
        """``([w, w', ...][:order+1], status)``; status is the worst kernel code per point."""
        exprs = (self.w, self.dw, self.d2w, self.d3w)[: order + 1]
        out, status = [], None
        for e in exprs:
            v, st = _backend.eval_points(e.program, z, pole_floor)
            out.append(v)
            status = st if status is None else np.maximum(status, st)
        return out, status


@functools.lru_cache(maxsize=64)
def _holo(e: Expr) -> Holo:
    return Holo(*derivatives(e, 3))


def holo(expr) -> Holo:
    """Coerce an expression string, :class:`Expr`, or :class:`Holo`."""
    if isinstance(expr, Holo):
        return expr
    if isinstance(expr, str):
        expr = parse_expr(expr)
    return _holo(expr)


def _strict(expr, z, order):
    h = holo(expr)
    scalar = np.ndim(z) == 0
    vals, status = h.values(np.asarray(z, dtype=complex), order)
    if np.any(status != _backend.STATUS_OK):
        bad = np.asarray(z, dtype=complex).ravel()[np.flatnonzero(np.ravel(status))[0]]
        raise PoleError(f"w cannot be evaluated at z={complex(bad)!r}")
    return vals, scalar


def _out(v, scalar):
    return v.item() if scalar else v


# --------------------------------------------------------------------------
# closed forms in terms of w, w', w'', w'''


def mu_from(w, dw):
    return np.abs(dw) ** 2 / (1.0 + np.abs(w) ** 2) ** 2


def mu_dz_from(w, dw, d2w):
    """Complex derivative d(mu)/dz; mu_x = 2 Re, mu_y = -2 Im."""
    m = 1.0 + np.abs(w) ** 2
    return (d2w * np.conj(dw) * m - 2.0 * np.abs(dw) ** 2 * dw * np.conj(w)) / m**3


def gauss_from(w):
    u, v = w.real, w.imag
    d = u * u + v * v + 1.0
    return np.stack([2.0 * u / d, 2.0 * v / d, (u * u + v * v - 1.0) / d], axis=-1)


def log_nu_hessian_from(w, dw, d2w, d3w):
    """Second partials of ln(nu), returned as (g_xx, g_xy, g_yy)."""
    m = 1.0 + np.abs(w) ** 2
    r = d2w / dw
    a = d3w / dw - r * r - 2.0 * d2w * np.conj(w) / m + 2.0 * (dw * np.conj(w)) ** 2 / m**2
    b = -2.0 * np.abs(dw) ** 2 / m**2
    return 2.0 * a.real + 2.0 * b, -2.0 * a.imag, -2.0 * a.real + 2.0 * b


# --------------------------------------------------------------------------
# public point-wise operations


def eval_mu(expr, z):
    """mu = |w'|^2 / (1 + |w|^2)^2."""
    (w, dw), scalar = _strict(expr, z, 1)
    return _out(mu_from(w, dw), scalar)


def eval_nu(expr, z):
    """Normal curvature function nu = 4 mu."""
    return 4.0 * eval_mu(expr, z)


def mu_gradient(expr, z):
    """(mu_x, mu_y) from the closed form in w, w', w''."""
    (w, dw, d2w), scalar = _strict(expr, z, 2)
    g = mu_dz_from(w, dw, d2w)
    return _out(2.0 * g.real, scalar), _out(-2.0 * g.imag, scalar)


def nu_gradient(expr, z):
    mx, my = mu_gradient(expr, z)
    return 4.0 * mx, 4.0 * my


def gauss_map(expr, z):
    """Unit normal from the stereographic parametrization applied to (Re w, Im w)."""
    (w,), _ = _strict(expr, z, 0)
    return gauss_from(w)[()] if np.ndim(z) == 0 else gauss_from(w)


def weierstrass_integrand(expr, z):
    """The three canonical integrands at ``z``.

    Returns ``(0.5 (w^2-1)/w', -0.5i (w^2+1)/w', -w/w')``; raises
    :class:`PoleError` where w' vanishes.
    """
    (w, dw), scalar = _strict(expr, z, 1)
    if np.any(np.abs(dw) < DEFAULT_POLE_FLOOR):
        raise PoleError("w' vanishes; the integrands are singular there")
    out = (0.5 * (w * w - 1.0) / dw, -0.5j * (w * w + 1.0) / dw, -w / dw)
    return tuple(_out(v, scalar) for v in out)


# --------------------------------------------------------------------------
# jobs and grids


@dataclass(frozen=True)
class WeierstrassJob:
    """A generation request over ``[x_min, x_max] x [y_min, y_max]``."""

    expr: Expr
    z0: complex
    domain: tuple[float, float, float, float]
    grid: tuple[int, int] = (33, 33)
    quad_tol: float = 1e-10
    mu_floor: float = 1e-12
    reg_floor: float = 1e-12
    path_via: tuple[complex, ...] = ()
    max_panels: int = MAX_PANELS

    def __post_init__(self):
        if isinstance(self.expr, str):
            object.__setattr__(self, "expr", parse_expr(self.expr))
        object.__setattr__(self, "z0", complex(self.z0))
        object.__setattr__(self, "domain", tuple(float(v) for v in self.domain))
        object.__setattr__(self, "grid", tuple(int(n) for n in self.grid))
        object.__setattr__(self, "path_via", tuple(complex(p) for p in self.path_via))
        x0, x1, y0, y1 = self.domain
        if not (x0 < x1 and y0 < y1):
            raise ValueError(f"degenerate domain {self.domain}")
        if not (x0 <= self.z0.real <= x1 and y0 <= self.z0.imag <= y1):
            raise ValueError(f"base point z0={self.z0} lies outside the domain")
        if min(self.grid) < 2:
            raise ValueError(f"grid must be at least 2x2, got {self.grid[0]}x{self.grid[1]}")
        if not self.quad_tol > 0:
            raise ValueError("quad_tol must be positive")
        if not self.mu_floor > 0:
            raise ValueError("mu_floor must be positive")
        if self.reg_floor < 0:
            raise ValueError("reg_floor must be non-negative")

    @property
    def holo(self) -> Holo:
        return holo(self.expr)

    @property
    def x(self):
        return np.linspace(self.domain[0], self.domain[1], self.grid[0])

    @property
    def y(self):
        return np.linspace(self.domain[2], self.domain[3], self.grid[1])

    @property
    def points(self):
        """Complex parameter lattice, indexed ``[i, j]`` with ``i`` along x."""
        return self.x[:, None] + 1j * self.y[None, :]

    def diagonal(self):
        x0, x1, y0, y1 = self.domain
        return float(np.hypot(x1 - x0, y1 - y0))


def classify_points(h: Holo, z, mu_floor, reg_floor):
    """Admissibility flags for an array of points."""
    z = np.asarray(z, dtype=complex)
    (w, dw, d2w), status = h.values(z, 2, VALIDATION_POLE_FLOOR)
    flags = np.full(z.shape, Flag.ADMISSIBLE, dtype=np.int8)
    bad = status != _backend.STATUS_OK
    with np.errstate(all="ignore"):
        mu = mu_from(w, dw)
        g = mu_dz_from(w, dw, d2w)
        reg = np.abs((2.0 * g.real) * (-2.0 * g.imag))
    flags[np.abs(reg) < reg_floor] = Flag.REG_FLOOR
    flags[~(mu > mu_floor)] = Flag.MU_FLOOR
    flags[bad | ~np.isfinite(mu)] = Flag.POLE
    return flags


def validate_domain(job: WeierstrassJob):
    """Flag every grid point: ADMISSIBLE, REG_FLOOR, MU_FLOOR or POLE."""
    return classify_points(job.holo, job.points, job.mu_floor, job.reg_floor)


def _path_integrals(job, targets, path_via=None):
    """Integrals from z0 to each target along z0 -> via... -> target."""
    h = job.holo
    targets = np.asarray(targets, dtype=complex)
    via = job.path_via if path_via is None else tuple(complex(p) for p in path_via)
    total = np.zeros(targets.shape + (3,), dtype=complex)
    status = np.zeros(targets.shape, dtype=np.int32)
    nodes = [job.z0, *via]
    for a, b in zip(nodes[:-1], nodes[1:]):
        out, st, _ = _backend.integrate_segments(
            h.w.program, h.dw.program, np.full(targets.shape, a), np.full(targets.shape, b),
            job.quad_tol, job.max_panels, job.mu_floor, DEFAULT_POLE_FLOOR,
        )
        total += out
        status = np.maximum(status, st)
    out, st, _ = _backend.integrate_segments(
        h.w.program, h.dw.program, np.full(targets.shape, nodes[-1]), targets,
        job.quad_tol, job.max_panels, job.mu_floor, DEFAULT_POLE_FLOOR,
    )
    return total + out, np.maximum(status, st)


_STATUS_TEXT = {
    _backend.STATUS_POLE: "the path crosses a pole",
    _backend.STATUS_NONFINITE: "the integrand overflowed on the path",
    _backend.STATUS_BUDGET: "quadrature did not converge within the subdivision budget",
    _backend.STATUS_MU_FLOOR: "the path crosses a region where mu <= mu_floor",
}


def integrate_surface(job: WeierstrassJob, z, path_via=None):
    """Position (z1, z2, z3) at ``z``; the base point maps to the origin.

    The default path is the straight segment from ``job.z0``; ``path_via``
    (or ``job.path_via``) inserts intermediate polyline vertices.
    """
    out, status = _path_integrals(job, np.array([complex(z)]), path_via)
    if status[0] != _backend.STATUS_OK:
        raise QuadratureError(f"integration to z={complex(z)!r} failed: {_STATUS_TEXT[int(status[0])]}")
    return out[0].real.copy()


@dataclass
class SurfaceSample:
    x: float
    y: float
    flag: Flag
    position: np.ndarray | None
    normal: np.ndarray | None
    nu: float | None
    forms: object = None


@dataclass
class SurfaceGrid:
    """Lattice of samples. Arrays are indexed ``[i, j]`` (x index first).

    ``position`` is NaN wherever the flag is not ADMISSIBLE; ``normal`` and
    ``nu`` are filled wherever w is finite.
    """

    job: WeierstrassJob
    flags: np.ndarray
    position: np.ndarray
    normal: np.ndarray
    nu: np.ndarray
    extra: dict = field(default_factory=dict)

    @property
    def x(self):
        return self.job.x

    @property
    def y(self):
        return self.job.y

    @property
    def shape(self):
        return self.flags.shape

    @property
    def admissible(self):
        return self.flags == Flag.ADMISSIBLE

    def sample(self, i, j) -> SurfaceSample:
        flag = Flag(int(self.flags[i, j]))
        ok = flag == Flag.ADMISSIBLE
        has_normal = np.all(np.isfinite(self.normal[i, j]))
        return SurfaceSample(
            x=float(self.x[i]), y=float(self.y[j]), flag=flag,
            position=self.position[i, j].copy() if ok else None,
            normal=self.normal[i, j].copy() if has_normal else None,
            nu=float(self.nu[i, j]) if has_normal else None,
        )

    def flag_counts(self):
        return {f.name: int(np.count_nonzero(self.flags == f)) for f in Flag}


def generate_grid(job: WeierstrassJob) -> SurfaceGrid:
    """Evaluate the immersion at every admissible grid point."""
    flags = validate_domain(job)
    pts = job.points
    h = job.holo
    (w, dw), status = h.values(pts, 1)
    finite = status == _backend.STATUS_OK
    normal = np.full(pts.shape + (3,), np.nan)
    nu = np.full(pts.shape, np.nan)
    with np.errstate(all="ignore"):
        normal[finite] = gauss_from(w[finite])
        nu[finite] = 4.0 * mu_from(w[finite], dw[finite])

    position = np.full(pts.shape + (3,), np.nan)
    adm = flags == Flag.ADMISSIBLE
    if np.any(adm):
        out, st = _path_integrals(job, pts[adm])
        failed = np.flatnonzero(st != _backend.STATUS_OK)
        if failed.size:
            idx = np.argwhere(adm)[failed[0]]
            k = int(st[failed[0]])
            raise QuadratureError(
                f"grid point ({idx[0]}, {idx[1]}) at z={complex(pts[tuple(idx)])!r}: {_STATUS_TEXT[k]}"
            )
        position[adm] = out.real
    return SurfaceGrid(job=job, flags=flags, position=position, normal=normal, nu=nu)
