"""Kernel backend selection.

The compiled ``_ckernels`` extension is used when it imports; otherwise the
pure-Python ``_pykernels`` module.  ``MINWEIER_PURE_PYTHON=1`` forces the
fallback.  Batched calls are split into contiguous chunks and run on a thread
pool capped by ``MINWEIER_THREADS``; chunk results are concatenated in input
order, so outputs do not depend on the thread count.
"""
import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import _pykernels

STATUS_OK = _pykernels.STATUS_OK
STATUS_POLE = _pykernels.STATUS_POLE
STATUS_NONFINITE = _pykernels.STATUS_NONFINITE
STATUS_BUDGET = _pykernels.STATUS_BUDGET
STATUS_MU_FLOOR = _pykernels.STATUS_MU_FLOOR

GL_ORDER = 10
GL_NODES, GL_WEIGHTS = np.polynomial.legendre.leggauss(GL_ORDER)


def _load():
    if os.environ.get("MINWEIER_PURE_PYTHON", "") not in ("", "0"):
        return _pykernels
    try:
        from . import _ckernels
    except ImportError:
        return _pykernels
    return _ckernels


kernels = _load()
BACKEND = kernels.BACKEND


def use_backend(name):
    """Switch backends at runtime (``"cython"`` or ``"python"``); returns the previous name."""
    global kernels, BACKEND
    previous = BACKEND
    if name == "python":
        kernels = _pykernels
    elif name == "cython":
        from . import _ckernels
        kernels = _ckernels
    else:
        raise ValueError(f"unknown backend {name!r}")
    BACKEND = kernels.BACKEND
    return previous


def thread_count():
    raw = os.environ.get("MINWEIER_THREADS", "")
    if raw.strip():
        try:
            return max(1, int(raw))
        except ValueError:
            raise ValueError(f"MINWEIER_THREADS must be an integer, got {raw!r}") from None
    return max(1, min(8, os.cpu_count() or 1))


_MIN_CHUNK = 256


def _chunked(fn, n, *arrays):
    threads = thread_count()
    if threads == 1 or n < 2 * _MIN_CHUNK:
        return [fn(*arrays)]
    bounds = np.linspace(0, n, min(threads, n // _MIN_CHUNK) + 1).astype(int)
    pieces = [tuple(a[lo:hi] for a in arrays) for lo, hi in zip(bounds[:-1], bounds[1:])]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda p: fn(*p), pieces))


def eval_points(program, zs, pole_floor):
    """Evaluate a compiled program at every point of ``zs`` (any shape)."""
    zs = np.asarray(zs, dtype=complex)
    flat = np.ascontiguousarray(zs.ravel())
    k = kernels
    parts = _chunked(lambda z: k.eval_points(program, z, pole_floor), len(flat), flat)
    values = np.concatenate([p[0] for p in parts]) if parts else np.zeros(0, complex)
    status = np.concatenate([p[1] for p in parts]) if parts else np.zeros(0, np.int32)
    return values.reshape(zs.shape), status.reshape(zs.shape)


def integrate_segments(wprog, dwprog, starts, ends, tol, max_panels, mu_floor, pole_floor):
    """Integrate the three Weierstrass integrands along straight segments.

    Returns ``(integrals, status, panels)`` with ``integrals`` of shape
    ``starts.shape + (3,)``.
    """
    starts = np.asarray(starts, dtype=complex)
    ends = np.broadcast_to(np.asarray(ends, dtype=complex), starts.shape)
    shape = starts.shape
    s = np.ascontiguousarray(starts.ravel())
    e = np.ascontiguousarray(ends.ravel())
    k = kernels

    def run(a, b):
        return k.integrate_segments(wprog, dwprog, a, b, GL_NODES, GL_WEIGHTS, tol,
                                    max_panels, mu_floor, pole_floor)

    parts = _chunked(run, len(s), s, e)
    out = np.concatenate([p[0] for p in parts]).reshape(shape + (3,))
    status = np.concatenate([p[1] for p in parts]).reshape(shape)
    panels = np.concatenate([p[2] for p in parts]).reshape(shape)
    return out, status, panels
