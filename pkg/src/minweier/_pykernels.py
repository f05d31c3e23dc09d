"""Pure-Python kernels. Same contract and algorithm as the compiled ``_ckernels``."""
import cmath
import math

import numpy as np

from .expr import (
    OP_ADD, OP_CONST, OP_COS, OP_COSH, OP_DIV, OP_EXP, OP_MUL, OP_POW,
    OP_SIN, OP_SINH, OP_SUB, OP_VAR,
)

STATUS_OK, STATUS_POLE, STATUS_NONFINITE, STATUS_BUDGET, STATUS_MU_FLOOR = range(5)

BACKEND = "python"

_UNARY = {OP_EXP: cmath.exp, OP_SIN: cmath.sin, OP_COS: cmath.cos,
          OP_SINH: cmath.sinh, OP_COSH: cmath.cosh}


class _Pole(Exception):
    pass


def _closure(program):
    """Turn a postfix program into a nested closure ``f(z, floor) -> complex``."""
    fn = program.cache.get("py")
    if fn is not None:
        return fn
    consts = [complex(r, i) for r, i in zip(program.consts_re, program.consts_im)]
    stack = []
    for op, arg in zip(program.ops.tolist(), program.args.tolist()):
        if op == OP_CONST:
            c = consts[arg]
            stack.append(lambda z, fl, c=c: c)
        elif op == OP_VAR:
            stack.append(lambda z, fl: z)
        elif op == OP_POW:
            a = stack.pop()
            stack.append(_pow_closure(a, arg))
        elif op in _UNARY:
            a = stack.pop()
            f = _UNARY[op]
            stack.append(lambda z, fl, a=a, f=f: f(a(z, fl)))
        else:
            b = stack.pop()
            a = stack.pop()
            if op == OP_ADD:
                stack.append(lambda z, fl, a=a, b=b: a(z, fl) + b(z, fl))
            elif op == OP_SUB:
                stack.append(lambda z, fl, a=a, b=b: a(z, fl) - b(z, fl))
            elif op == OP_MUL:
                stack.append(lambda z, fl, a=a, b=b: a(z, fl) * b(z, fl))
            elif op == OP_DIV:
                stack.append(_div_closure(a, b))
            else:
                raise ValueError(f"bad opcode {op}")
    (fn,) = stack
    program.cache["py"] = fn
    return fn


def _div_closure(a, b):
    def f(z, fl):
        den = b(z, fl)
        if abs(den) < fl:
            raise _Pole
        return a(z, fl) / den
    return f


def _pow_closure(a, n):
    if n >= 0:
        return lambda z, fl: a(z, fl) ** n

    def f(z, fl):
        den = a(z, fl) ** (-n)
        if abs(den) < fl:
            raise _Pole
        return 1.0 / den
    return f


def _call(fn, z, floor):
    """Evaluate, mapping failures to a status code."""
    try:
        v = fn(z, floor)
    except (_Pole, ZeroDivisionError):
        return 0j, STATUS_POLE
    except OverflowError:
        return 0j, STATUS_NONFINITE
    if not (math.isfinite(v.real) and math.isfinite(v.imag)):
        return 0j, STATUS_NONFINITE
    return v, STATUS_OK


def eval_points(program, zs, pole_floor):
    fn = _closure(program)
    out = np.zeros(len(zs), dtype=complex)
    status = np.zeros(len(zs), dtype=np.int32)
    for k, z in enumerate(zs.tolist()):
        out[k], status[k] = _call(fn, complex(z), pole_floor)
    return out, status


def _probe(fw, fdw, z, mu_floor, pole_floor):
    """Status of the integrand at z without accumulating anything."""
    w, st = _call(fw, z, pole_floor)
    if st:
        return st
    dw, st = _call(fdw, z, pole_floor)
    if st:
        return st
    if abs(dw) < pole_floor:
        return STATUS_POLE
    if abs(dw) ** 2 / (abs(w) ** 2 + 1.0) ** 2 <= mu_floor:
        return STATUS_MU_FLOOR
    return STATUS_OK


def _panel(fw, fdw, a, d, t0, t1, nodes, weights, mu_floor, pole_floor):
    """Gauss-Legendre estimate of the three integrands over parameter [t0, t1]."""
    half = 0.5 * (t1 - t0)
    mid = 0.5 * (t1 + t0)
    # a singularity exactly at the midpoint is invisible to the (even) node set
    st = _probe(fw, fdw, a + mid * d, mu_floor, pole_floor)
    if st:
        return None, st
    s1 = s2 = s3 = 0j
    for x, wt in zip(nodes, weights):
        z = a + (mid + half * x) * d
        w, st = _call(fw, z, pole_floor)
        if st:
            return None, st
        dw, st = _call(fdw, z, pole_floor)
        if st:
            return None, st
        m = abs(w) ** 2 + 1.0
        if abs(dw) < pole_floor:
            return None, STATUS_POLE
        if abs(dw) ** 2 / (m * m) <= mu_floor:
            return None, STATUS_MU_FLOOR
        w2 = w * w
        s1 += wt * (0.5 * (w2 - 1.0) / dw)
        s2 += wt * (-0.5j * (w2 + 1.0) / dw)
        s3 += wt * (-w / dw)
    scale = half * d
    return (s1 * scale, s2 * scale, s3 * scale), STATUS_OK


def integrate_one(fw, fdw, a, b, nodes, weights, tol, max_panels, mu_floor, pole_floor):
    d = b - a
    if d == 0:
        return (0j, 0j, 0j), STATUS_OK, 0
    st = _probe(fw, fdw, a, mu_floor, pole_floor) or _probe(fw, fdw, b, mu_floor, pole_floor)
    if st:
        return (0j, 0j, 0j), st, 0
    q, st = _panel(fw, fdw, a, d, 0.0, 1.0, nodes, weights, mu_floor, pole_floor)
    if st:
        return (0j, 0j, 0j), st, 0
    stack = [(0.0, 1.0, q, 0)]
    total = [0j, 0j, 0j]
    accepted = 0
    while stack:
        t0, t1, q, level = stack.pop()
        tm = 0.5 * (t0 + t1)
        ql, st = _panel(fw, fdw, a, d, t0, tm, nodes, weights, mu_floor, pole_floor)
        if st:
            return (0j, 0j, 0j), st, accepted
        qr, st = _panel(fw, fdw, a, d, tm, t1, nodes, weights, mu_floor, pole_floor)
        if st:
            return (0j, 0j, 0j), st, accepted
        err = max(abs(ql[k] + qr[k] - q[k]) for k in range(3))
        if err <= tol * (t1 - t0):
            for k in range(3):
                total[k] += ql[k] + qr[k]
            accepted += 2
        else:
            if level >= 60 or accepted + len(stack) + 2 > max_panels:
                return (0j, 0j, 0j), STATUS_BUDGET, accepted
            stack.append((tm, t1, qr, level + 1))
            stack.append((t0, tm, ql, level + 1))
    return tuple(total), STATUS_OK, accepted


def integrate_segments(wprog, dwprog, starts, ends, nodes, weights, tol, max_panels,
                       mu_floor, pole_floor):
    fw, fdw = _closure(wprog), _closure(dwprog)
    n = len(starts)
    out = np.zeros((n, 3), dtype=complex)
    status = np.zeros(n, dtype=np.int32)
    panels = np.zeros(n, dtype=np.int64)
    nodes = [float(x) for x in nodes]
    weights = [float(x) for x in weights]
    for k, (a, b) in enumerate(zip(starts.tolist(), ends.tolist())):
        out[k], status[k], panels[k] = integrate_one(
            fw, fdw, complex(a), complex(b), nodes, weights, tol, max_panels,
            mu_floor, pole_floor,
        )
    return out, status, panels
