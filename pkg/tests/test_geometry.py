"""Finite-difference geometry checks against closed-form oracles."""
import numpy as np
import pytest

from minweier.errors import StencilError
from minweier.geometry import (
    FAMILIES, INFORMATIONAL, SECOND_ORDER, ResidualField, Sampler, classify_subclass,
    default_fd_step, frame_residual_31, fundamental_forms, gauss_properties_33,
    gaussmap_residual_32, mean_curvature, pde_residual_25, residual_suite, richardson_ratios,
)

P = np.array([0.5 + 0.5j])


def enneper_forms(x, y, h):
    """Forms of Enneper's surface from its polynomial parametrization, by hand-rolled FD."""
    def pos(z):
        return np.array([(0.5 * (z**3 / 3 - z)).real,
                         (-0.5j * (z**3 / 3 + z)).real,
                         (-z**2 / 2).real])
    z = x + 1j * y
    zx = (pos(z + h) - pos(z - h)) / (2 * h)
    zy = (pos(z + 1j * h) - pos(z - 1j * h)) / (2 * h)
    zxx = (pos(z + h) - 2 * pos(z) + pos(z - h)) / h**2
    zyy = (pos(z + 1j * h) - 2 * pos(z) + pos(z - 1j * h)) / h**2
    n = np.cross(zx, zy)
    n /= np.linalg.norm(n)
    return zx @ zx, zx @ zy, zy @ zy, zxx @ n, zyy @ n


class TestForms:
    def test_canonical_at_half(self):
        s = Sampler("z")
        f = fundamental_forms(s, P, 1e-3)
        inv_nu = 1 / s.nu(P)[0]
        assert abs(inv_nu - 9 / 16) < 1e-15
        assert abs(f.E[0] - inv_nu) < 1e-5
        assert abs(f.G[0] - inv_nu) < 1e-5
        assert abs(f.F[0]) < 1e-5
        assert abs(f.e[0] - 1) < 1e-5
        assert abs(f.f[0]) < 1e-5
        assert abs(f.g[0] + 1) < 1e-5

    def test_matches_polynomial_parametrization(self):
        f = fundamental_forms(Sampler("z"), P, 1e-3)
        E, F, G, e, g = enneper_forms(0.5, 0.5, 1e-3)
        np.testing.assert_allclose([f.E[0], f.F[0], f.G[0], f.e[0], f.g[0]], [E, F, G, e, g],
                                   atol=1e-7)

    def test_principal_curvatures(self):
        s = Sampler("exp(z)")
        pts = np.array([0.3 + 0.2j, 0.6 + 0.7j])
        f = fundamental_forms(s, pts, 1e-3)
        nu = s.nu(pts)
        assert np.max(np.abs(f.nu1 - nu)) < 1e-5
        assert np.max(np.abs(f.nu2 + nu)) < 1e-5

    def test_default_step(self):
        assert default_fd_step(np.hypot(1, 1)) == pytest.approx(1.4142135623730951e-4)
        assert default_fd_step(1e-6) == 1e-6
        assert default_fd_step(1e6) == 1e-2


class TestResiduals:
    def test_frame(self):
        r = frame_residual_31(Sampler("z"), P, 1e-3)
        assert r.name == "frame_equations"
        assert r.max < 1e-4

    def test_gauss_system(self):
        system, laplace, unscaled = gaussmap_residual_32(Sampler("z"), P, 1e-3)
        assert system.max < 1e-4
        assert laplace.max < 1e-4
        # nu(0.5+0.5i) = 16/9, so the unscaled combination stays finite-sized
        assert unscaled.max > 0.1

    def test_gauss_properties(self):
        props, recovered = gauss_properties_33(Sampler("z"), P, 1e-4)
        assert props.max < 1e-6
        assert recovered.max < 1e-6

    def test_gauss_properties_on_reg_floor(self):
        # the real axis is REG_FLOOR for w=z but still checkable
        props, _ = gauss_properties_33(Sampler("z"), np.array([0.5 + 0j]), 1e-4)
        assert props.max < 1e-6

    def test_refuses_mu_floor(self):
        with pytest.raises(StencilError):
            gauss_properties_33(Sampler("z^2/2"), np.array([0j]), 1e-4)

    def test_mean_curvature(self):
        assert mean_curvature(Sampler("z"), P, 1e-3)[0] < 1e-4

    def test_residual_field_rejects_negative(self):
        with pytest.raises(ValueError):
            ResidualField("x", np.array([-1.0]), np.array([0j]))

    def test_empty_field_summary(self):
        s = ResidualField("x", np.zeros(0), np.zeros(0, complex)).summary()
        assert s["max"] is None and s["count"] == 0


class TestPDE:
    # z^2/2 stays off the origin, where the 5-point truncation grows like |z|^-4
    @pytest.mark.parametrize("src, corner", [("z", 0.1 + 0.1j), ("exp(z)", 0.1 + 0.1j),
                                             ("z^2/2", 0.5 + 0.5j), ("z+z^3/3", 0.2 - 0.3j)])
    def test_analytic_and_fd(self, src, corner):
        rng = np.random.default_rng(9)
        pts = corner + rng.uniform(0, 0.8, 50) + 1j * rng.uniform(0, 0.6, 50)
        analytic, fd = pde_residual_25(src, pts, 1e-3)
        assert analytic.max() < 1e-10
        assert fd.max() < 1e-5

    def test_fd_second_order(self):
        pts = np.array([0.4 + 0.3j, 0.8 + 0.6j])
        _, a = pde_residual_25("z+z^3/3", pts, 2e-3)
        _, b = pde_residual_25("z+z^3/3", pts, 1e-3)
        assert 3 <= a.max() / b.max() <= 5


class TestClassify:
    def test_examples(self):
        got = classify_subclass("z", np.array([1 + 1j, 1 - 1j, 1 + 0j]))
        assert list(got) == [1, -1, 0]

    def test_quadrants(self):
        x = np.linspace(0.1, 1.1, 7)
        pos = x[:, None] + 1j * x[None, :]
        assert np.all(classify_subclass("z", pos) == 1)
        assert np.all(classify_subclass("z", -pos.conj()) == -1)

    def test_exp_is_degenerate(self):
        # nu depends on x only for w=exp(z)
        pts = np.array([0.2 + 0.3j, 0.7 + 0.1j])
        assert list(classify_subclass("exp(z)", pts)) == [0, 0]


class TestSuite:
    def test_families_and_ratios(self):
        s = Sampler("z")
        x = np.linspace(0.2, 1.0, 4)
        pts = (x[:, None] + 1j * x[None, :]).ravel()
        coarse = residual_suite(s, pts, 1e-3)
        fine = residual_suite(s, pts, 5e-4)
        assert tuple(coarse) == FAMILIES
        ratios = richardson_ratios(coarse, fine)
        for name in SECOND_ORDER:
            assert 3 <= ratios[name] <= 5, (name, ratios[name])
        for name in INFORMATIONAL:
            assert coarse[name].max > 1e-2

    def test_empty_points(self):
        out = residual_suite(Sampler("z"), np.zeros(0, complex), 1e-3)
        assert all(r.max is None for r in out.values())
