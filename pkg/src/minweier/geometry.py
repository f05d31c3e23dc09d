"""Finite-difference verification of the differential geometry of generated surfaces.

Positions at stencil nodes come from fresh quadrature on the short segment
from the check point to each node, so the difference quotients see only the
truncation error of the stencil and not the error of a long integration
path.  nu and its gradient are always the analytic values.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _backend
from .errors import StencilError
from .expr import DEFAULT_POLE_FLOOR
from .weierstrass import (
    MAX_PANELS, Flag, Holo, classify_points, gauss_from, holo, log_nu_hessian_from,
    mu_dz_from, mu_from,
)

# (dx, dy) multipliers of the 3x3 stencil, indexed [a, b] -> ((a-1) h, (b-1) h)
_OFFSETS = np.array([[(a - 1) + 1j * (b - 1) for b in range(3)] for a in range(3)])


def default_fd_step(diagonal):
    return float(np.clip(1e-4 * diagonal, 1e-6, 1e-2))


@dataclass
class ResidualField:
    """Per-point values of one residual family."""

    name: str
    values: np.ndarray
    points: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        self.points = np.asarray(self.points, dtype=complex)
        if np.any(self.values < 0):
            raise ValueError(f"residual family {self.name!r} has negative entries")

    @property
    def max(self):
        return float(self.values.max()) if self.values.size else None

    @property
    def mean(self):
        return float(self.values.mean()) if self.values.size else None

    @property
    def argmax(self):
        if not self.values.size:
            return None
        z = self.points[int(np.argmax(self.values))]
        return (float(z.real), float(z.imag))

    def summary(self):
        return {"name": self.name, "max": self.max, "mean": self.mean,
                "argmax": self.argmax, "count": int(self.values.size)}


@dataclass
class FundamentalForms:
    E: np.ndarray
    F: np.ndarray
    G: np.ndarray
    e: np.ndarray
    f: np.ndarray
    g: np.ndarray
    nu1: np.ndarray
    nu2: np.ndarray
    gamma1: np.ndarray
    gamma2: np.ndarray


@dataclass
class Jet:
    """Central-difference partials of a vector field at a batch of points."""

    d_x: np.ndarray
    d_y: np.ndarray
    d_xx: np.ndarray
    d_xy: np.ndarray
    d_yy: np.ndarray
    center: np.ndarray

    @classmethod
    def from_stencil(cls, s, h):
        """``s`` has shape (N, 3, 3, k); entry [n, a, b] sits at ((a-1) h, (b-1) h)."""
        return cls(
            d_x=(s[:, 2, 1] - s[:, 0, 1]) / (2 * h),
            d_y=(s[:, 1, 2] - s[:, 1, 0]) / (2 * h),
            d_xx=(s[:, 2, 1] - 2 * s[:, 1, 1] + s[:, 0, 1]) / h**2,
            d_yy=(s[:, 1, 2] - 2 * s[:, 1, 1] + s[:, 1, 0]) / h**2,
            d_xy=(s[:, 2, 2] - s[:, 2, 0] - s[:, 0, 2] + s[:, 0, 0]) / (4 * h**2),
            center=s[:, 1, 1],
        )


def _dot(a, b):
    return np.einsum("...k,...k->...", a, b)


def _norm(a):
    return np.sqrt(_dot(a, a))


class Sampler:
    """Analytic sampler: evaluates positions, normals and nu for one Weierstrass datum."""

    def __init__(self, expr, quad_tol=1e-10, mu_floor=1e-12, reg_floor=1e-12,
                 max_panels=MAX_PANELS):
        self.holo: Holo = holo(expr)
        self.quad_tol = quad_tol
        self.mu_floor = mu_floor
        self.reg_floor = reg_floor
        self.max_panels = max_panels

    @classmethod
    def from_job(cls, job):
        return cls(job.expr, job.quad_tol, job.mu_floor, job.reg_floor, job.max_panels)

    def checkable(self, points):
        """Points where the checks are defined: not POLE and not MU_FLOOR."""
        flags = classify_points(self.holo, points, self.mu_floor, self.reg_floor)
        return flags <= Flag.REG_FLOOR

    def _require(self, points):
        points = np.atleast_1d(np.asarray(points, dtype=complex))
        ok = self.checkable(points)
        if not np.all(ok):
            bad = points[~ok][0]
            raise StencilError(f"point z={complex(bad)!r} is flagged POLE or MU_FLOOR")
        return points

    def nu(self, points):
        (w, dw), _ = self.holo.values(points, 1)
        return 4.0 * mu_from(w, dw)

    def nu_and_gradient(self, points):
        (w, dw, d2w), _ = self.holo.values(points, 2)
        g = mu_dz_from(w, dw, d2w)
        return 4.0 * mu_from(w, dw), 8.0 * g.real, -8.0 * g.imag

    def position_stencil(self, points, h):
        """Offsets z(p + node) - z(p) on the 3x3 stencil, shape (N, 3, 3, 3)."""
        points = self._require(points)
        starts = np.repeat(points[:, None, None], 3, axis=1).repeat(3, axis=2)
        ends = points[:, None, None] + h * _OFFSETS[None]
        out, status, _ = _backend.integrate_segments(
            self.holo.w.program, self.holo.dw.program, starts, ends,
            self.quad_tol, self.max_panels, self.mu_floor, DEFAULT_POLE_FLOOR,
        )
        if np.any(status != _backend.STATUS_OK):
            n = np.argwhere(status != _backend.STATUS_OK)[0]
            raise StencilError(f"stencil around z={complex(points[n[0]])!r} leaves the admissible region")
        return out.real

    def gauss_stencil(self, points, h):
        points = self._require(points)
        nodes = points[:, None, None] + h * _OFFSETS[None]
        (w,), status = self.holo.values(nodes, 0)
        if np.any(status != _backend.STATUS_OK):
            raise StencilError("Gauss-map stencil hits a pole")
        return gauss_from(w)

    def surface_jet(self, points, h) -> Jet:
        return Jet.from_stencil(self.position_stencil(points, h), h)

    def gauss_jet(self, points, h) -> Jet:
        return Jet.from_stencil(self.gauss_stencil(points, h), h)


# --------------------------------------------------------------------------
# quantities derived from a surface jet


def _frame(jet):
    zx, zy = jet.d_x, jet.d_y
    n = np.cross(zx, zy)
    nn = _norm(n)
    return zx, zy, n / nn[:, None], nn


def forms_from_jet(jet) -> FundamentalForms:
    zx, zy, unit_n, _ = _frame(jet)
    E, F, G = _dot(zx, zx), _dot(zx, zy), _dot(zy, zy)
    e, f, g = _dot(jet.d_xx, unit_n), _dot(jet.d_xy, unit_n), _dot(jet.d_yy, unit_n)
    E_y = 2.0 * _dot(zx, jet.d_xy)
    G_x = 2.0 * _dot(zy, jet.d_xy)
    return FundamentalForms(
        E=E, F=F, G=G, e=e, f=f, g=g, nu1=e / E, nu2=g / G,
        gamma1=-E_y / (2.0 * E * np.sqrt(G)), gamma2=G_x / (2.0 * G * np.sqrt(E)),
    )


def fundamental_forms(sampler: Sampler, points, h) -> FundamentalForms:
    """First and second fundamental forms, principal and geodesic curvatures by central differences."""
    return forms_from_jet(sampler.surface_jet(points, h))


def _proj(v, unit):
    # component of v orthogonal to unit; d(n/|n|) = proj(dn) / |n|
    return v - unit * _dot(unit, v)[:, None]


def frame_vectors(jet):
    """Unit tangents, unit normal and their partial derivatives along x and y."""
    zx, zy, unit_n, nn = _frame(jet)
    sE, sG = _norm(zx), _norm(zy)
    tx, ty = zx / sE[:, None], zy / sG[:, None]
    tx_x = _proj(jet.d_xx, tx) / sE[:, None]
    tx_y = _proj(jet.d_xy, tx) / sE[:, None]
    ty_x = _proj(jet.d_xy, ty) / sG[:, None]
    ty_y = _proj(jet.d_yy, ty) / sG[:, None]
    N_x = np.cross(jet.d_xx, zy) + np.cross(zx, jet.d_xy)
    N_y = np.cross(jet.d_xy, zy) + np.cross(zx, jet.d_yy)
    n_x = _proj(N_x, unit_n) / nn[:, None]
    n_y = _proj(N_y, unit_n) / nn[:, None]
    return dict(tx=tx, ty=ty, unit_n=unit_n, tx_x=tx_x, tx_y=tx_y, ty_x=ty_x, ty_y=ty_y,
                n_x=n_x, n_y=n_y, sE=sE, sG=sG)


def _frame_residual(jet, nu, nu_x, nu_y):
    fr = frame_vectors(jet)
    tx, ty, unit_n = fr["tx"], fr["ty"], fr["unit_n"]
    sq = np.sqrt(nu)
    rx = (nu_x / (2.0 * sq))[:, None]
    ry = (nu_y / (2.0 * sq))[:, None]
    n = nu[:, None]
    inv_sE = 1.0 / fr["sE"][:, None]
    inv_sG = 1.0 / fr["sG"][:, None]
    eqs = [
        inv_sE * fr["tx_x"] - (ry * ty + n * unit_n),
        inv_sE * fr["ty_x"] + ry * tx,
        inv_sE * fr["n_x"] + n * tx,
        inv_sG * fr["tx_y"] + rx * ty,
        inv_sG * fr["ty_y"] - (rx * tx - n * unit_n),
        inv_sG * fr["n_y"] - n * ty,
    ]
    return np.max(np.stack([_norm(r) for r in eqs]), axis=0)


def frame_residual_31(sampler: Sampler, points, h) -> ResidualField:
    """Max over the six moving-frame equations of |LHS - RHS| (unit tangents and normal)."""
    points = np.atleast_1d(np.asarray(points, dtype=complex))
    nu, nu_x, nu_y = sampler.nu_and_gradient(points)
    return ResidualField("frame_equations", _frame_residual(sampler.surface_jet(points, h),
                                                            nu, nu_x, nu_y), points)


def _gauss_system(gj, nu, nu_x, nu_y):
    a = (nu_x / (2 * nu))[:, None]
    b = (nu_y / (2 * nu))[:, None]
    n = nu[:, None]
    unit_n = gj.center
    r1 = gj.d_xx - (a * gj.d_x - b * gj.d_y - n * unit_n)
    r2 = gj.d_xy - (b * gj.d_x + a * gj.d_y)
    r3 = gj.d_yy - (-a * gj.d_x + b * gj.d_y - n * unit_n)
    system = np.max(np.stack([_norm(r1), _norm(r2), _norm(r3)]), axis=0)
    laplace = _norm(gj.d_xx + gj.d_yy + 2.0 * n * unit_n)
    unscaled = _norm(gj.d_xx + gj.d_yy + 2.0 * unit_n)
    return system, laplace, unscaled


def gaussmap_residual_32(sampler: Sampler, points, h):
    """Residuals of the second-order Gauss-map system.

    Returns three fields: the system itself, the combined form
    ``n_xx + n_yy + 2 nu n`` and the unscaled ``n_xx + n_yy + 2 n``
    (which vanishes only where nu = 1; reported, never asserted).
    """
    points = np.atleast_1d(np.asarray(points, dtype=complex))
    nu, nu_x, nu_y = sampler.nu_and_gradient(points)
    system, laplace, unscaled = _gauss_system(sampler.gauss_jet(points, h), nu, nu_x, nu_y)
    return (ResidualField("gauss_map_system", system, points),
            ResidualField("gauss_map_laplace", laplace, points),
            ResidualField("gauss_map_laplace_unscaled", unscaled, points))


def _gauss_props(gj, nu):
    xx, yy, xy = _dot(gj.d_x, gj.d_x), _dot(gj.d_y, gj.d_y), _dot(gj.d_x, gj.d_y)
    props = np.max(np.stack([np.abs(xx - nu), np.abs(yy - nu), np.abs(xy)]), axis=0)
    return props, xx


def gauss_properties_33(sampler: Sampler, points, h):
    """|n_x.n_x - nu|, |n_y.n_y - nu|, |n_x.n_y| (max of the three) and the
    relative mismatch of the recovered nu = n_x.n_x against the analytic nu."""
    points = np.atleast_1d(np.asarray(points, dtype=complex))
    nu = sampler.nu(points)
    props, recovered = _gauss_props(sampler.gauss_jet(points, h), nu)
    return (ResidualField("gauss_properties", props, points),
            ResidualField("nu_recovered", np.abs(recovered - nu) / nu, points))


def pde_residual_25(expr, points, h):
    """|Laplacian(ln nu) + 2 nu|, analytically and by a five-point stencil on ln nu.

    The analytic route forms ln(nu)_xx and ln(nu)_yy separately from w, w',
    w'', w'''.  Returns ``(analytic, fd)`` arrays.
    """
    hl = holo(expr)
    points = np.atleast_1d(np.asarray(points, dtype=complex))
    (w, dw, d2w, d3w), status = hl.values(points, 3)
    if np.any(status != _backend.STATUS_OK):
        raise StencilError("pole inside the natural-PDE check set")
    nu = 4.0 * mu_from(w, dw)
    g_xx, _, g_yy = log_nu_hessian_from(w, dw, d2w, d3w)
    analytic = np.abs(g_xx + g_yy + 2.0 * nu)

    nodes = points[:, None] + h * np.array([0, 1, -1, 1j, -1j])[None]
    (wn, dwn), status = hl.values(nodes, 1)
    if np.any(status != _backend.STATUS_OK):
        raise StencilError("pole inside a natural-PDE stencil")
    ln = np.log(4.0 * mu_from(wn, dwn))
    lap = (ln[:, 1] + ln[:, 2] + ln[:, 3] + ln[:, 4] - 4.0 * ln[:, 0]) / h**2
    fd = np.abs(lap + 2.0 * nu)
    return analytic, fd


def mean_curvature(sampler: Sampler, points, h):
    """|H| with H = (eG - 2fF + gE) / (2(EG - F^2)) from finite-difference forms."""
    f = fundamental_forms(sampler, points, h)
    return np.abs((f.e * f.G - 2 * f.f * f.F + f.g * f.E) / (2 * (f.E * f.G - f.F**2)))


def classify_subclass(expr, points, reg_floor=1e-12):
    """Sign of nu_x nu_y: +1, -1, or 0 where |nu_x nu_y| < reg_floor."""
    hl = holo(expr)
    points = np.asarray(points, dtype=complex)
    (w, dw, d2w), status = hl.values(points, 2)
    if np.any(status != _backend.STATUS_OK):
        raise StencilError("pole inside the classification set")
    g = mu_dz_from(w, dw, d2w)
    prod = (8.0 * g.real) * (-8.0 * g.imag)
    out = np.sign(prod).astype(int)
    out[np.abs(prod) < reg_floor] = 0
    return out


# --------------------------------------------------------------------------
# residual suite


FAMILIES = (
    "canonical_form",
    "principal_curvature",
    "geodesic_curvature",
    "frame_equations",
    "gauss_map_system",
    "gauss_map_laplace",
    "gauss_map_laplace_unscaled",
    "gauss_properties",
    "nu_recovered",
    "mean_curvature",
    "natural_pde_analytic",
    "natural_pde_fd",
)

# families whose residual is pure truncation error of a second-order stencil
SECOND_ORDER = (
    "canonical_form", "principal_curvature", "geodesic_curvature", "frame_equations",
    "gauss_map_system", "gauss_map_laplace", "gauss_properties", "nu_recovered",
    "mean_curvature", "natural_pde_fd",
)
INFORMATIONAL = ("gauss_map_laplace_unscaled",)


def residual_suite(sampler: Sampler, points, h) -> dict[str, ResidualField]:
    """Every residual family at ``points`` with step ``h``, keyed by :data:`FAMILIES`."""
    points = np.atleast_1d(np.asarray(points, dtype=complex))
    out = {}
    if points.size == 0:
        empty = np.zeros(0)
        return {name: ResidualField(name, empty, points) for name in FAMILIES}
    nu, nu_x, nu_y = sampler.nu_and_gradient(points)
    sq = np.sqrt(nu)
    jet = sampler.surface_jet(points, h)
    f = forms_from_jet(jet)
    out["canonical_form"] = np.max(np.stack([
        np.abs(f.E - 1 / nu), np.abs(f.F), np.abs(f.G - 1 / nu),
        np.abs(f.e - 1), np.abs(f.f), np.abs(f.g + 1),
    ]), axis=0)
    out["principal_curvature"] = np.maximum(np.abs(f.nu1 - nu), np.abs(f.nu2 + nu))
    out["geodesic_curvature"] = np.maximum(np.abs(f.gamma1 - nu_y / (2 * sq)),
                                           np.abs(f.gamma2 + nu_x / (2 * sq)))
    out["frame_equations"] = _frame_residual(jet, nu, nu_x, nu_y)
    gj = sampler.gauss_jet(points, h)
    out["gauss_map_system"], out["gauss_map_laplace"], out["gauss_map_laplace_unscaled"] = \
        _gauss_system(gj, nu, nu_x, nu_y)
    props, recovered = _gauss_props(gj, nu)
    out["gauss_properties"] = props
    out["nu_recovered"] = np.abs(recovered - nu) / nu
    out["mean_curvature"] = np.abs((f.e * f.G - 2 * f.f * f.F + f.g * f.E)
                                   / (2 * (f.E * f.G - f.F**2)))
    out["natural_pde_analytic"], out["natural_pde_fd"] = pde_residual_25(sampler.holo, points, h)
    return {name: ResidualField(name, out[name], points) for name in FAMILIES}


def richardson_ratios(coarse: dict, fine: dict) -> dict[str, float | None]:
    """max residual at h over max residual at h/2, per family (about 4 for second order)."""
    ratios = {}
    for name in FAMILIES:
        a, b = coarse[name].max, fine[name].max
        ratios[name] = None if a is None or b is None or b == 0 else a / b
    return ratios
