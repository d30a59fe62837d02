"""Dense nonsymmetric eigenvalues: balancing, Householder Hessenberg reduction
and Francis double-shift QR.  Real arithmetic throughout; complex pairs come
back as (re, +-im).
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

from .errors import DomainError, NumericalFailure

MAX_DIM = 1024
MAX_ITS_PER_EIGENVALUE = 60


@njit(cache=True)


def _balance(a):
    # Parlett-Reinsch balancing with powers of two (exact rescaling).
    n = a.shape[0]
    done = False
    while not done:
        done = True
        for i in range(n):
            c = 0.0
            r = 0.0
            for j in range(n):
                if j != i:
                    c += abs(a[j, i])
                    r += abs(a[i, j])
            if c != 0.0 and r != 0.0:
                g = r / 2.0
                f = 1.0
                s = c + r
                while c < g:
                    f *= 2.0
                    c *= 4.0
                g = r * 2.0
                while c > g:
                    f /= 2.0
                    c /= 4.0
                if (c + r) / f < 0.95 * s:
                    done = False
                    g = 1.0 / f
                    for j in range(n):
                        a[i, j] *= g
                    for j in range(n):
                        a[j, i] *= f


@njit(cache=True)


def _hessenberg(a):
    n = a.shape[0]
    v = np.empty(n)
    for k in range(n - 2):
        m = n - k - 1
        norm = 0.0
        for i in range(m):
            norm += a[k + 1 + i, k] ** 2
        norm = math.sqrt(norm)
        if norm == 0.0:
            continue
        x0 = a[k + 1, k]
        alpha = -norm if x0 >= 0 else norm
        for i in range(m):
            v[i] = a[k + 1 + i, k]
        v[0] -= alpha
        vn = 0.0
        for i in range(m):
            vn += v[i] ** 2
        vn = math.sqrt(vn)
        if vn == 0.0:
            continue
        for i in range(m):
            v[i] /= vn
        for j in range(k, n):
            s = 0.0
            for i in range(m):
                s += v[i] * a[k + 1 + i, j]
            s *= 2.0
            for i in range(m):
                a[k + 1 + i, j] -= s * v[i]
        for i in range(n):
            s = 0.0
            for jj in range(m):
                s += a[i, k + 1 + jj] * v[jj]
            s *= 2.0
            for jj in range(m):
                a[i, k + 1 + jj] -= s * v[jj]
        for i in range(k + 2, n):
            a[i, k] = 0.0


@njit(cache=True)


def _hqr(h, max_its):
    # Francis double-shift QR on an upper Hessenberg matrix, deflating from the
    # bottom.  Indices are 1-based on a padded copy; exceptional shifts at
    # sweeps 10 and 20 break cycles.
    n = h.shape[0]
    a = np.zeros((n + 1, n + 1))
    a[1:, 1:] = h
    wr = np.zeros(n + 1)
    wi = np.zeros(n + 1)
    anorm = 0.0
    for i in range(1, n + 1):
        for j in range(max(i - 1, 1), n + 1):
            anorm += abs(a[i, j])
    nn = n
    t = 0.0
    x = y = z = w = p = q = r = s = 0.0
    while nn >= 1:
        its = 0
        while True:
            l = 1
            for ll in range(nn, 1, -1):
                s = abs(a[ll - 1, ll - 1]) + abs(a[ll, ll])
                if s == 0.0:
                    s = anorm
                if abs(a[ll, ll - 1]) + s == s:
                    a[ll, ll - 1] = 0.0
                    l = ll
                    break
            x = a[nn, nn]
            if l == nn:
                wr[nn] = x + t
                wi[nn] = 0.0
                nn -= 1
            else:
                y = a[nn - 1, nn - 1]
                w = a[nn, nn - 1] * a[nn - 1, nn]
                if l == nn - 1:
                    p = 0.5 * (y - x)
                    q = p * p + w
                    z = math.sqrt(abs(q))
                    x += t
                    if q >= 0.0:
                        z = p + (z if p >= 0 else -z)
                        wr[nn - 1] = x + z
                        wr[nn] = x + z
                        if z != 0.0:
                            wr[nn] = x - w / z
                        wi[nn - 1] = 0.0
                        wi[nn] = 0.0
                    else:
                        wr[nn - 1] = x + p
                        wr[nn] = x + p
                        wi[nn - 1] = -z
                        wi[nn] = z
                    nn -= 2
                else:
                    if its == max_its:
                        return wr[1:], wi[1:], False
                    if its == 10 or its == 20:
                        t += x
                        for i in range(1, nn + 1):
                            a[i, i] -= x
                        s = abs(a[nn, nn - 1]) + abs(a[nn - 1, nn - 2])
                        x = 0.75 * s
                        y = x
                        w = -0.4375 * s * s
                    its += 1
                    m = nn - 2
                    while m >= l:
                        z = a[m, m]
                        r = x - z
                        s = y - z
                        p = (r * s - w) / a[m + 1, m] + a[m, m + 1]
                        q = a[m + 1, m + 1] - z - r - s
                        r = a[m + 2, m + 1]
                        s = abs(p) + abs(q) + abs(r)
                        p /= s
                        q /= s
                        r /= s
                        if m == l:
                            break
                        u = abs(a[m, m - 1]) * (abs(q) + abs(r))
                        v = abs(p) * (abs(a[m - 1, m - 1]) + abs(z) + abs(a[m + 1, m + 1]))
                        if u + v == v:
                            break
                        m -= 1
                    for i in range(m + 2, nn + 1):
                        a[i, i - 2] = 0.0
                        if i != m + 2:
                            a[i, i - 3] = 0.0
                    for k in range(m, nn):
                        if k != m:
                            p = a[k, k - 1]
                            q = a[k + 1, k - 1]
                            r = 0.0
                            if k != nn - 1:
                                r = a[k + 2, k - 1]
                            x = abs(p) + abs(q) + abs(r)
                            if x != 0.0:
                                p /= x
                                q /= x
                                r /= x
                        s = math.sqrt(p * p + q * q + r * r)
                        if p < 0:
                            s = -s
                        if s != 0.0:
                            if k == m:
                                if l != m:
                                    a[k, k - 1] = -a[k, k - 1]
                            else:
                                a[k, k - 1] = -s * x
                            p += s
                            x = p / s
                            y = q / s
                            z = r / s
                            q /= p
                            r /= p
                            for j in range(k, nn + 1):
                                p = a[k, j] + q * a[k + 1, j]
                                if k != nn - 1:
                                    p += r * a[k + 2, j]
                                    a[k + 2, j] -= p * z
                                a[k + 1, j] -= p * y
                                a[k, j] -= p * x
                            mmin = nn if nn < k + 3 else k + 3
                            for i in range(l, mmin + 1):
                                p = x * a[i, k] + y * a[i, k + 1]
                                if k != nn - 1:
                                    p += z * a[i, k + 2]
                                    a[i, k + 2] -= p * r
                                a[i, k + 1] -= p * q
                                a[i, k] -= p
            if not (l < nn - 1):
                break
    return wr[1:], wi[1:], True


def _square(matrix) -> np.ndarray:
    a = np.array(matrix, dtype=np.float64, copy=True)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
        raise DomainError(f"expected a non-empty square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise DomainError("matrix has non-finite entries")
    return a


def eigvals(matrix, max_its: int = MAX_ITS_PER_EIGENVALUE) -> np.ndarray:
    """All eigenvalues of a real square matrix, as a complex array (unordered)."""
    a = _square(matrix)
    if a.shape[0] > MAX_DIM:
        raise DomainError(f"dimension {a.shape[0]} exceeds {MAX_DIM}")
    if a.shape[0] == 1:
        return a[0].astype(np.complex128)
    _balance(a)
    _hessenberg(a)
    wr, wi, ok = _hqr(a, max_its)
    if not ok:
        raise NumericalFailure(f"QR iteration did not converge within {max_its} sweeps per eigenvalue")
    return wr + 1j * wi


def spectral_radius(matrix) -> float:
    return float(np.max(np.abs(eigvals(matrix))))


def infinity_norm(matrix) -> float:
    """Maximum absolute row sum."""
    a = _square(matrix)
    return float(np.max(np.sum(np.abs(a), axis=1)))
