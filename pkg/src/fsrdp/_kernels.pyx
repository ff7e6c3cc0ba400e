# Compiled twin of _kernels_py.py; see that module for the math.
from libc.math cimport exp, log, log1p, sqrt, fabs, INFINITY

import numpy as np


cdef inline void _acc(double v, double* s, double* c) noexcept nogil:
    cdef double t = s[0] + v
    if fabs(s[0]) >= fabs(v):
        c[0] += (s[0] - t) + v
    else:
        c[0] += (v - t) + s[0]
    s[0] = t


def signed_log_sum(signs, logs):
    cdef Py_ssize_t n = len(logs)
    cdef Py_ssize_t i
    cdef double top = -INFINITY
    cdef double lg
    cdef long long s
    cdef int inf_sign = 0
    cdef double tot = 0.0, comp = 0.0
    cdef double[::1] lv = np.ascontiguousarray(logs, dtype=np.float64)
    cdef long long[::1] sv = np.ascontiguousarray(signs, dtype=np.int64)
    for i in range(n):
        s = sv[i]
        lg = lv[i]
        if s == 0 or lg == -INFINITY:
            continue
        if lg == INFINITY:
            if inf_sign == 0 or inf_sign == s:
                inf_sign = s
            else:
                inf_sign = 2
        elif lg > top:
            top = lg
    if inf_sign != 0:
        return (1 if inf_sign == 2 else inf_sign), INFINITY
    if top == -INFINITY:
        return 0, -INFINITY
    for i in range(n):
        s = sv[i]
        lg = lv[i]
        if s == 0 or lg == -INFINITY:
            continue
        _acc(s * exp(lg - top), &tot, &comp)
    tot = tot + comp
    if tot == 0.0:
        return 0, -INFINITY
    return (1 if tot > 0 else -1), top + log(fabs(tot))


def log_moment_direct(double x, int kmax, double[:, ::1] log_binom):
    cdef double half_x = 0.5 * x
    signs_a = np.zeros(kmax + 1, dtype=np.int64)
    logmag_a = np.full(kmax + 1, -INFINITY)
    logabs_a = np.full(kmax + 1, -INFINITY)
    cdef long long[::1] signs = signs_a
    cdef double[::1] logmag = logmag_a
    cdef double[::1] logabs = logabs_a
    cdef int k, ell, sg
    cdef double top, v, tot, comp, ab, abc, const_log
    signs[0] = 1
    logmag[0] = 0.0
    logabs[0] = 0.0
    with nogil:
        for k in range(2, kmax + 1):
            const_log = log(<double>(k - 1))
            top = const_log
            for ell in range(k, 1, -1):
                v = log_binom[k, ell] + half_x * <double>(ell * (ell - 1))
                if v > top:
                    top = v
            if top == INFINITY:
                signs[k] = 1
                logmag[k] = INFINITY
                logabs[k] = INFINITY
                continue
            tot = 0.0
            comp = 0.0
            ab = 0.0
            abc = 0.0
            for ell in range(k, 1, -1):
                v = exp(log_binom[k, ell] + half_x * <double>(ell * (ell - 1)) - top)
                sg = 1 if (k - ell) % 2 == 0 else -1
                _acc(sg * v, &tot, &comp)
                _acc(v, &ab, &abc)
            v = exp(const_log - top)
            sg = 1 if (k - 1) % 2 == 0 else -1
            _acc(sg * v, &tot, &comp)
            _acc(v, &ab, &abc)
            tot = tot + comp
            ab = ab + abc
            logabs[k] = top + log(ab)
            if tot == 0.0:
                signs[k] = 0
                logmag[k] = -INFINITY
            else:
                signs[k] = 1 if tot > 0 else -1
                logmag[k] = top + log(fabs(tot))
    return signs_a, logmag_a, logabs_a


cdef inline double _logaddexp(double a, double b) noexcept nogil:
    if a == -INFINITY:
        return b
    if b == -INFINITY:
        return a
    if a > b:
        return a + log1p(exp(b - a))
    return b + log1p(exp(a - b))


def log_moment_series(double x, int kmax, long max_steps):
    cdef double h = 0.5 * x
    cdef double sh = sqrt(h)
    cdef int n = kmax + 1
    v_a = np.zeros(n)
    new_a = np.zeros(n)
    acc_a = np.full(n, -INFINITY)
    cdef double[::1] v = v_a
    cdef double[::1] new = new_a
    cdef double[::1] acc = acc_a
    cdef double lscale = 0.0
    cdef double growth = 1.0 + 2.0 * kmax * sh + (<double>kmax) * (<double>kmax) * h
    cdef long p = 0
    cdef int j
    cdef double t, inv, mx, floor
    v[0] = 1.0
    acc[0] = 0.0
    with nogil:
        while p < max_steps:
            inv = 1.0 / (p + 1)
            for j in range(n):
                t = (<double>(j * (j - 1))) * h * v[j]
                if j >= 1:
                    t += (<double>(2 * (j - 1))) * sh * v[j - 1]
                if j >= 2:
                    t += v[j - 2]
                new[j] = t * inv
            p += 1
            mx = 0.0
            for j in range(n):
                if new[j] > mx:
                    mx = new[j]
            if mx == 0.0:
                break
            lscale += log(mx)
            for j in range(n):
                v[j] = new[j] / mx
                if v[j] > 0.0:
                    acc[j] = _logaddexp(acc[j], lscale + log(v[j]))
            if 2 * p >= kmax and (p + 1) >= 2.0 * growth:
                floor = INFINITY
                for j in range(n):
                    if j != 1 and acc[j] < floor:
                        floor = acc[j]
                if lscale < floor - 40.0:
                    break
    return acc_a
