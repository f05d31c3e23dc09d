# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels: postfix expression interpreter and adaptive Gauss-Legendre
quadrature of the three Weierstrass integrands along straight segments.

Mirrors ``_pykernels`` exactly in algorithm and status codes.  Complex
arithmetic is spelled out on (re, im) pairs so the inner loops run without
the GIL.
"""
import numpy as np

from libc.stdint cimport int64_t
from libc.math cimport exp, sin, cos, sinh, cosh, hypot, isfinite, fabs

BACKEND = "cython"

cdef enum:
    MAX_STACK = 256
    MAX_NODES = 64
    QSTACK = 128

cdef enum:
    OP_CONST = 0
    OP_VAR = 1
    OP_ADD = 2
    OP_SUB = 3
    OP_MUL = 4
    OP_DIV = 5
    OP_POW = 6
    OP_EXP = 7
    OP_SIN = 8
    OP_COS = 9
    OP_SINH = 10
    OP_COSH = 11

cdef enum:
    ST_OK = 0
    ST_POLE = 1
    ST_NONFINITE = 2
    ST_BUDGET = 3
    ST_MU_FLOOR = 4

STATUS_OK = ST_OK
STATUS_POLE = ST_POLE
STATUS_NONFINITE = ST_NONFINITE
STATUS_BUDGET = ST_BUDGET
STATUS_MU_FLOOR = ST_MU_FLOOR


cdef inline void cdivide(double ar, double ai, double br, double bi,
                         double* outr, double* outi) noexcept nogil:
    # Smith's algorithm
    cdef double r, den
    if fabs(br) >= fabs(bi):
        r = bi / br
        den = br + bi * r
        outr[0] = (ar + ai * r) / den
        outi[0] = (ai - ar * r) / den
    else:
        r = br / bi
        den = bi + br * r
        outr[0] = (ar * r + ai) / den
        outi[0] = (ai * r - ar) / den


cdef inline void cipow(double ar, double ai, int64_t n,
                       double* outr, double* outi) noexcept nogil:
    cdef double rr = 1.0, ri = 0.0, br = ar, bi = ai, t
    while n > 0:
        if n & 1:
            t = rr * br - ri * bi
            ri = rr * bi + ri * br
            rr = t
        n >>= 1
        if n:
            t = br * br - bi * bi
            bi = 2.0 * br * bi
            br = t
    outr[0] = rr
    outi[0] = ri


cdef int run(const int[::1] ops, const int64_t[::1] args,
             const double[::1] cre, const double[::1] cim,
             double zr, double zi, double floor,
             double* outr, double* outi) noexcept nogil:
    cdef double sr[MAX_STACK]
    cdef double si[MAX_STACK]
    cdef int sp = 0
    cdef Py_ssize_t k, n = ops.shape[0]
    cdef int op
    cdef double ar, ai, br, bi, tr, ti, e
    for k in range(n):
        op = ops[k]
        if op == OP_CONST:
            sr[sp] = cre[args[k]]
            si[sp] = cim[args[k]]
            sp += 1
        elif op == OP_VAR:
            sr[sp] = zr
            si[sp] = zi
            sp += 1
        elif op == OP_POW:
            ar = sr[sp - 1]
            ai = si[sp - 1]
            if args[k] >= 0:
                cipow(ar, ai, args[k], &sr[sp - 1], &si[sp - 1])
            else:
                cipow(ar, ai, -args[k], &tr, &ti)
                if hypot(tr, ti) < floor:
                    return ST_POLE
                cdivide(1.0, 0.0, tr, ti, &sr[sp - 1], &si[sp - 1])
        elif op >= OP_EXP:
            ar = sr[sp - 1]
            ai = si[sp - 1]
            if op == OP_EXP:
                e = exp(ar)
                sr[sp - 1] = e * cos(ai)
                si[sp - 1] = e * sin(ai)
            elif op == OP_SIN:
                sr[sp - 1] = sin(ar) * cosh(ai)
                si[sp - 1] = cos(ar) * sinh(ai)
            elif op == OP_COS:
                sr[sp - 1] = cos(ar) * cosh(ai)
                si[sp - 1] = -sin(ar) * sinh(ai)
            elif op == OP_SINH:
                sr[sp - 1] = sinh(ar) * cos(ai)
                si[sp - 1] = cosh(ar) * sin(ai)
            else:
                sr[sp - 1] = cosh(ar) * cos(ai)
                si[sp - 1] = sinh(ar) * sin(ai)
        else:
            br = sr[sp - 1]
            bi = si[sp - 1]
            sp -= 1
            ar = sr[sp - 1]
            ai = si[sp - 1]
            if op == OP_ADD:
                sr[sp - 1] = ar + br
                si[sp - 1] = ai + bi
            elif op == OP_SUB:
                sr[sp - 1] = ar - br
                si[sp - 1] = ai - bi
            elif op == OP_MUL:
                sr[sp - 1] = ar * br - ai * bi
                si[sp - 1] = ar * bi + ai * br
            else:
                if hypot(br, bi) < floor:
                    return ST_POLE
                cdivide(ar, ai, br, bi, &sr[sp - 1], &si[sp - 1])
    if not (isfinite(sr[0]) and isfinite(si[0])):
        return ST_NONFINITE
    outr[0] = sr[0]
    outi[0] = si[0]
    return ST_OK


def eval_points(program, zs, double pole_floor):
    cdef const int[::1] ops = program.ops
    cdef const int64_t[::1] args = program.args
    cdef const double[::1] cre = program.consts_re
    cdef const double[::1] cim = program.consts_im
    zs = np.ascontiguousarray(zs, dtype=complex)
    cdef const double[::1] zr = np.ascontiguousarray(zs.real)
    cdef const double[::1] zi = np.ascontiguousarray(zs.imag)
    cdef Py_ssize_t n = zr.shape[0], k
    out_r = np.zeros(n)
    out_i = np.zeros(n)
    status = np.zeros(n, dtype=np.int32)
    cdef double[::1] orr = out_r
    cdef double[::1] oii = out_i
    cdef int[::1] st = status
    with nogil:
        for k in range(n):
            st[k] = run(ops, args, cre, cim, zr[k], zi[k], pole_floor, &orr[k], &oii[k])
            if st[k] != ST_OK:
                orr[k] = 0.0
                oii[k] = 0.0
    return out_r + 1j * out_i, status


cdef struct Ctx:
    double ar, ai, dr, di
    double mu_floor, pole_floor
    int nnodes


cdef int probe(const int[::1] wops, const int64_t[::1] wargs,
               const double[::1] wre, const double[::1] wim,
               const int[::1] dops, const int64_t[::1] dargs,
               const double[::1] dre, const double[::1] dim,
               Ctx* c, double t) noexcept nogil:
    # integrand status at parameter t, nothing accumulated
    cdef double zr = c.ar + t * c.dr, zi = c.ai + t * c.di
    cdef double wr, wi, dwr, dwi, m
    cdef int st = run(wops, wargs, wre, wim, zr, zi, c.pole_floor, &wr, &wi)
    if st != ST_OK:
        return st
    st = run(dops, dargs, dre, dim, zr, zi, c.pole_floor, &dwr, &dwi)
    if st != ST_OK:
        return st
    if hypot(dwr, dwi) < c.pole_floor:
        return ST_POLE
    m = wr * wr + wi * wi + 1.0
    if (dwr * dwr + dwi * dwi) / (m * m) <= c.mu_floor:
        return ST_MU_FLOOR
    return ST_OK


cdef int panel(const int[::1] wops, const int64_t[::1] wargs,
               const double[::1] wre, const double[::1] wim,
               const int[::1] dops, const int64_t[::1] dargs,
               const double[::1] dre, const double[::1] dim,
               Ctx* c, const double* nodes, const double* weights,
               double t0, double t1, double* q) noexcept nogil:
    cdef double half = 0.5 * (t1 - t0), mid = 0.5 * (t1 + t0)
    cdef double t, zr, zi, wr, wi, dwr, dwi, m, a2, w2r, w2i, fr, fi, sr_, si_
    cdef int j, st
    for j in range(6):
        q[j] = 0.0
    # the even node set never lands on the midpoint
    st = probe(wops, wargs, wre, wim, dops, dargs, dre, dim, c, mid)
    if st != ST_OK:
        return st
    for j in range(c.nnodes):
        t = mid + half * nodes[j]
        zr = c.ar + t * c.dr
        zi = c.ai + t * c.di
        st = run(wops, wargs, wre, wim, zr, zi, c.pole_floor, &wr, &wi)
        if st != ST_OK:
            return st
        st = run(dops, dargs, dre, dim, zr, zi, c.pole_floor, &dwr, &dwi)
        if st != ST_OK:
            return st
        m = wr * wr + wi * wi + 1.0
        a2 = dwr * dwr + dwi * dwi
        if hypot(dwr, dwi) < c.pole_floor:
            return ST_POLE
        if a2 / (m * m) <= c.mu_floor:
            return ST_MU_FLOOR
        w2r = wr * wr - wi * wi
        w2i = 2.0 * wr * wi
        # 0.5 (w^2 - 1) / w'
        cdivide(0.5 * (w2r - 1.0), 0.5 * w2i, dwr, dwi, &fr, &fi)
        q[0] += weights[j] * fr
        q[1] += weights[j] * fi
        # -0.5 i (w^2 + 1) / w'  ==  (0.5 w2i, -0.5 (w2r + 1)) / w'
        cdivide(0.5 * w2i, -0.5 * (w2r + 1.0), dwr, dwi, &fr, &fi)
        q[2] += weights[j] * fr
        q[3] += weights[j] * fi
        cdivide(-wr, -wi, dwr, dwi, &fr, &fi)
        q[4] += weights[j] * fr
        q[5] += weights[j] * fi
    # multiply by half * d
    sr_ = half * c.dr
    si_ = half * c.di
    for j in range(3):
        fr = q[2 * j] * sr_ - q[2 * j + 1] * si_
        fi = q[2 * j] * si_ + q[2 * j + 1] * sr_
        q[2 * j] = fr
        q[2 * j + 1] = fi
    return ST_OK


cdef int integrate_one(const int[::1] wops, const int64_t[::1] wargs,
                       const double[::1] wre, const double[::1] wim,
                       const int[::1] dops, const int64_t[::1] dargs,
                       const double[::1] dre, const double[::1] dim,
                       Ctx* c, const double* nodes, const double* weights,
                       double tol, int64_t max_panels,
                       double* total, int64_t* accepted) noexcept nogil:
    cdef double st0[QSTACK]
    cdef double st1[QSTACK]
    cdef int slevel[QSTACK]
    cdef double sq[QSTACK][6]
    cdef double ql[6]
    cdef double qr[6]
    cdef double q[6]
    cdef int sp = 0, j, st, level
    cdef double t0, t1, tm, err, d
    for j in range(6):
        total[j] = 0.0
    accepted[0] = 0
    if c.dr == 0.0 and c.di == 0.0:
        return ST_OK
    st = probe(wops, wargs, wre, wim, dops, dargs, dre, dim, c, 0.0)
    if st == ST_OK:
        st = probe(wops, wargs, wre, wim, dops, dargs, dre, dim, c, 1.0)
    if st != ST_OK:
        return st
    st = panel(wops, wargs, wre, wim, dops, dargs, dre, dim, c, nodes, weights, 0.0, 1.0, q)
    if st != ST_OK:
        return st
    st0[0] = 0.0
    st1[0] = 1.0
    slevel[0] = 0
    for j in range(6):
        sq[0][j] = q[j]
    sp = 1
    while sp > 0:
        sp -= 1
        t0 = st0[sp]
        t1 = st1[sp]
        level = slevel[sp]
        for j in range(6):
            q[j] = sq[sp][j]
        tm = 0.5 * (t0 + t1)
        st = panel(wops, wargs, wre, wim, dops, dargs, dre, dim, c, nodes, weights, t0, tm, ql)
        if st != ST_OK:
            return st
        st = panel(wops, wargs, wre, wim, dops, dargs, dre, dim, c, nodes, weights, tm, t1, qr)
        if st != ST_OK:
            return st
        err = 0.0
        for j in range(3):
            d = hypot(ql[2 * j] + qr[2 * j] - q[2 * j],
                      ql[2 * j + 1] + qr[2 * j + 1] - q[2 * j + 1])
            if d > err:
                err = d
        if err <= tol * (t1 - t0):
            for j in range(6):
                total[j] += ql[j] + qr[j]
            accepted[0] += 2
        else:
            if level >= 60 or accepted[0] + sp + 2 > max_panels or sp + 2 > QSTACK:
                return ST_BUDGET
            st0[sp] = tm
            st1[sp] = t1
            slevel[sp] = level + 1
            for j in range(6):
                sq[sp][j] = qr[j]
            sp += 1
            st0[sp] = t0
            st1[sp] = tm
            slevel[sp] = level + 1
            for j in range(6):
                sq[sp][j] = ql[j]
            sp += 1
    return ST_OK


def integrate_segments(wprog, dwprog, starts, ends, nodes, weights, double tol,
                       int64_t max_panels, double mu_floor, double pole_floor):
    cdef const int[::1] wops = wprog.ops
    cdef const int64_t[::1] wargs = wprog.args
    cdef const double[::1] wre = wprog.consts_re
    cdef const double[::1] wim = wprog.consts_im
    cdef const int[::1] dops = dwprog.ops
    cdef const int64_t[::1] dargs = dwprog.args
    cdef const double[::1] dre = dwprog.consts_re
    cdef const double[::1] dim = dwprog.consts_im
    starts = np.ascontiguousarray(starts, dtype=complex)
    ends = np.ascontiguousarray(ends, dtype=complex)
    cdef const double[::1] sr = np.ascontiguousarray(starts.real)
    cdef const double[::1] si = np.ascontiguousarray(starts.imag)
    cdef const double[::1] er = np.ascontiguousarray(ends.real)
    cdef const double[::1] ei = np.ascontiguousarray(ends.imag)
    cdef double[::1] gn = np.ascontiguousarray(nodes, dtype=float)
    cdef double[::1] gw = np.ascontiguousarray(weights, dtype=float)
    cdef Py_ssize_t n = sr.shape[0], k
    if gn.shape[0] > MAX_NODES:
        raise ValueError("too many quadrature nodes")
    raw = np.zeros((n, 6))
    status = np.zeros(n, dtype=np.int32)
    panels = np.zeros(n, dtype=np.int64)
    cdef double[:, ::1] out = raw
    cdef int[::1] st = status
    cdef int64_t[::1] pc = panels
    cdef Ctx c
    c.mu_floor = mu_floor
    c.pole_floor = pole_floor
    c.nnodes = gn.shape[0]
    with nogil:
        for k in range(n):
            c.ar = sr[k]
            c.ai = si[k]
            c.dr = er[k] - sr[k]
            c.di = ei[k] - si[k]
            st[k] = integrate_one(wops, wargs, wre, wim, dops, dargs, dre, dim, &c,
                                  &gn[0], &gw[0], tol, max_panels, &out[k, 0], &pc[k])
            if st[k] != ST_OK:
                out[k, 0] = 0.0
                out[k, 1] = 0.0
                out[k, 2] = 0.0
                out[k, 3] = 0.0
                out[k, 4] = 0.0
                out[k, 5] = 0.0
    result = raw[:, 0::2] + 1j * raw[:, 1::2]
    return result, status, panels
