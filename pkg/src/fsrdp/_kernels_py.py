"""Pure-Python kernels.

Function-for-function twin of ``_kernels.pyx``. Both perform the same
floating-point operations in the same order, so the two backends agree
bit for bit on platforms where ``exp``/``log``/``log1p`` come from the same libm.
"""
import math

import numpy as np

_INF = math.inf


def _neumaier(values):
    s = 0.0
    c = 0.0
    for v in values:
        t = s + v
        if abs(s) >= abs(v):
            c += (s - t) + v
        else:
            c += (v - t) + s
        s = t
    return s + c


def signed_log_sum(signs, logs):
    """Return ``(sign, log|S|)`` for ``S = sum(signs[i] * exp(logs[i]))``.

    Zero terms (sign 0 or log -inf) are ignored. If infinite terms of both
    signs are present the result is ``(1, inf)``, which is the safe answer
    for every caller (all of them assemble upper bounds).
    """
    top = -_INF
    inf_sign = 0
    for s, lg in zip(signs, logs):
        if s == 0 or lg == -_INF:
            continue
        if lg == _INF:
            inf_sign = s if inf_sign in (0, s) else 2
        elif lg > top:
            top = lg
    if inf_sign:
        return (1 if inf_sign == 2 else inf_sign), _INF
    if top == -_INF:
        return 0, -_INF
    total = _neumaier(
        s * math.exp(lg - top) for s, lg in zip(signs, logs) if s != 0 and lg != -_INF
    )
    if total == 0.0:
        return 0, -_INF
    return (1 if total > 0 else -1), top + math.log(abs(total))


def log_moment_direct(x, kmax, log_binom):
    """Alternating-sum moment table.

    For k = 0..kmax returns the sign and log-magnitude of
    ``sum_{l=0}^{k} (-1)^(k-l) C(k,l) exp(x l(l-1)/2)``, summed from the
    largest l downward, together with log of the sum of absolute terms
    (used by the caller to detect cancellation).
    """
    lb = log_binom.tolist() if hasattr(log_binom, "tolist") else log_binom
    half_x = 0.5 * x
    signs = [0] * (kmax + 1)
    logmag = [-_INF] * (kmax + 1)
    logabs = [-_INF] * (kmax + 1)
    signs[0] = 1
    logmag[0] = 0.0
    logabs[0] = 0.0
    for k in range(2, kmax + 1):
        row = lb[k]
        ts = []
        tl = []
        for ell in range(k, 1, -1):
            ts.append(1 if (k - ell) % 2 == 0 else -1)
            tl.append(row[ell] + half_x * float(ell * (ell - 1)))
        ts.append(1 if (k - 1) % 2 == 0 else -1)
        tl.append(math.log(k - 1))
        top = tl[0]
        for v in tl:
            if v > top:
                top = v
        if top == _INF:
            signs[k] = 1
            logmag[k] = _INF
            logabs[k] = _INF
            continue
        total = _neumaier(s * math.exp(v - top) for s, v in zip(ts, tl))
        absum = _neumaier(math.exp(v - top) for v in tl)
        logabs[k] = top + math.log(absum)
        if total == 0.0:
            signs[k] = 0
            logmag[k] = -_INF
        else:
            signs[k] = 1 if total > 0 else -1
            logmag[k] = top + math.log(abs(total))
    return (
        np.array(signs, dtype=np.int64),
        np.array(logmag, dtype=np.float64),
        np.array(logabs, dtype=np.float64),
    )


def _logaddexp(a, b):
    if a == -_INF:
        return b
    if b == -_INF:
        return a
    if a > b:
        return a + math.log1p(math.exp(b - a))
    return b + math.log1p(math.exp(a - b))


def log_moment_series(x, kmax, max_steps):
    """Cancellation-free moment table from the power series in ``x``.

    Expanding ``exp(x l(l-1)/2)`` in powers of ``x`` and the powers of
    ``l(l-1)`` in falling factorials gives

        M_k = k! (x/2)^(k/2) sum_p v_p(k),
        v_{p+1}(j) = [v_p(j-2) + 2(j-1) sqrt(x/2) v_p(j-1) + j(j-1)(x/2) v_p(j)] / (p+1),

    with ``v_0 = e_0``. Every term is non-negative. Returns
    ``log sum_p v_p(k)`` for k = 0..kmax; the caller adds the prefactor.
    """
    h = 0.5 * x
    sh = math.sqrt(h)
    n = kmax + 1
    v = [0.0] * n
    v[0] = 1.0
    acc = [-_INF] * n
    acc[0] = 0.0
    lscale = 0.0
    # once p+1 exceeds twice this, the largest coefficient halves every step
    growth = 1.0 + 2.0 * kmax * sh + float(kmax) * float(kmax) * h
    p = 0
    while p < max_steps:
        new = [0.0] * n
        inv = 1.0 / (p + 1)
        for j in range(n):
            t = float(j * (j - 1)) * h * v[j]
            if j >= 1:
                t += float(2 * (j - 1)) * sh * v[j - 1]
            if j >= 2:
                t += v[j - 2]
            new[j] = t * inv
        p += 1
        mx = 0.0
        for t in new:
            if t > mx:
                mx = t
        if mx == 0.0:
            break
        lscale += math.log(mx)
        for j in range(n):
            v[j] = new[j] / mx
            if v[j] > 0.0:
                acc[j] = _logaddexp(acc[j], lscale + math.log(v[j]))
        if 2 * p >= kmax and (p + 1) >= 2.0 * growth:
            floor = _INF
            for j in range(n):
                if j != 1 and acc[j] < floor:
                    floor = acc[j]
            if lscale < floor - 40.0:
                break
    return np.array(acc, dtype=np.float64)
