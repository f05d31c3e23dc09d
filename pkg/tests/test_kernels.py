"""Compiled and pure-Python kernels agree; fallback selection works."""
import os
import subprocess
import sys

import numpy as np
import pytest

from minweier import _backend
from minweier.expr import parse_expr

try:
    from minweier import _ckernels  # noqa: F401
    HAVE_EXT = True
except ImportError:
    HAVE_EXT = False

needs_ext = pytest.mark.skipif(not HAVE_EXT, reason="compiled extension not built")


@pytest.fixture
def backend():
    previous = _backend.BACKEND

    def switch(name):
        _backend.use_backend(name)

    yield switch
    _backend.use_backend(previous)


SOURCES = ["z", "exp(z)", "z^2/2", "z+z^3/3", "sin(z)*cosh(z)/(z+2)", "z^(-2)+1i*z", "(1+2i)*z^3"]


@needs_ext
@pytest.mark.parametrize("src", SOURCES)
def test_eval_parity(backend, src):
    rng = np.random.default_rng(3)
    zs = rng.normal(size=500) + 1j * rng.normal(size=500)
    prog = parse_expr(src).program
    backend("python")
    a, sa = _backend.eval_points(prog, zs, 1e-300)
    backend("cython")
    b, sb = _backend.eval_points(prog, zs, 1e-300)
    assert np.array_equal(sa, sb)
    ok = sa == 0
    np.testing.assert_allclose(a[ok], b[ok], rtol=1e-13, atol=1e-300)


@needs_ext
@pytest.mark.parametrize("src", ["z", "exp(z)", "z^2/2", "z+z^3/3"])
def test_integrate_parity(backend, src):
    e = parse_expr(src)
    rng = np.random.default_rng(5)
    ends = 0.5 + rng.uniform(-0.3, 0.3, 40) + 1j * rng.uniform(0.1, 0.6, 40)
    starts = np.full(ends.shape, 0.5 + 0.3j)
    args = (e.program, e.derivative().program, starts, ends, 1e-10, 2**14, 1e-12, 1e-300)
    backend("python")
    a, sa, pa = _backend.integrate_segments(*args)
    backend("cython")
    b, sb, pb = _backend.integrate_segments(*args)
    assert np.array_equal(sa, sb)
    assert np.array_equal(pa, pb)
    np.testing.assert_allclose(a, b, rtol=0, atol=1e-13)


def test_status_codes():
    e = parse_expr("1/z")
    _, status = _backend.eval_points(e.program, np.array([0j, 1 + 0j]), 1e-300)
    assert list(status) == [_backend.STATUS_POLE, _backend.STATUS_OK]
    _, status = _backend.eval_points(parse_expr("exp(z)").program, np.array([1000 + 0j]), 1e-300)
    assert status[0] == _backend.STATUS_NONFINITE


def test_quadrature_flags_mu_floor():
    # w = z^2 has w' = 0 at the origin, which the segment passes through
    e = parse_expr("z^2")
    out, status, _ = _backend.integrate_segments(
        e.program, e.derivative().program, np.array([-1 + 0j]), np.array([1 + 0j]),
        1e-10, 2**14, 1e-12, 1e-300)
    assert status[0] in (_backend.STATUS_MU_FLOOR, _backend.STATUS_POLE)


def test_quadrature_exact_for_polynomials():
    # w = z: integrands are polynomials, antiderivatives known in closed form
    e = parse_expr("z")
    b = np.array([0.7 + 0.4j])
    out, status, panels = _backend.integrate_segments(
        e.program, e.derivative().program, np.zeros(1, complex), b, 1e-10, 2**14, 1e-12, 1e-300)
    want = [0.5 * (b**3 / 3 - b), -0.5j * (b**3 / 3 + b), -b**2 / 2]
    assert status[0] == 0
    for k in range(3):
        assert abs(out[0, k] - want[k][0]) < 1e-14


def test_pure_python_env_forces_fallback():
    env = dict(os.environ, MINWEIER_PURE_PYTHON="1")
    out = subprocess.run(
        [sys.executable, "-c", "import minweier; print(minweier.BACKEND)"],
        env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


def test_thread_count_env(monkeypatch):
    monkeypatch.setenv("MINWEIER_THREADS", "3")
    assert _backend.thread_count() == 3
    monkeypatch.setenv("MINWEIER_THREADS", "0")
    assert _backend.thread_count() == 1


def test_chunking_is_order_preserving(monkeypatch):
    e = parse_expr("z^3 - z")
    zs = np.linspace(-1, 1, 3000) + 0.25j
    monkeypatch.setenv("MINWEIER_THREADS", "1")
    a, _ = _backend.eval_points(e.program, zs, 1e-300)
    monkeypatch.setenv("MINWEIER_THREADS", "4")
    b, _ = _backend.eval_points(e.program, zs, 1e-300)
    assert a.tobytes() == b.tobytes()


def test_unknown_backend():
    with pytest.raises(ValueError):
        _backend.use_backend("fortran")
