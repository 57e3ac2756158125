"""Compiled inner loops. Callers validate shapes; nothing here checks input."""

import numpy as np
from numba import njit


@njit(cache=True, nogil=True)
def glynn_gray(a):
    n = a.shape[0]
    row = np.empty(n, dtype=np.complex128)
    for i in range(n):
        s = 0j
        for j in range(n):
            s += a[i, j]
        row[i] = s
    prod = 1.0 + 0j
    for i in range(n):
        prod *= row[i]
    total = prod
    # delta[j] = +1 initially; column 0 is never flipped.
    delta = np.ones(n, dtype=np.int8)
    sign = 1.0
    count = 1 << (n - 1)
    for g in range(1, count):
        j = 0
        x = g
        while (x & 1) == 0:
            x >>= 1
            j += 1
        j += 1
        if delta[j] == 1:
            delta[j] = -1
            for i in range(n):
                row[i] -= 2.0 * a[i, j]
        else:
            delta[j] = 1
            for i in range(n):
                row[i] += 2.0 * a[i, j]
        sign = -sign
        prod = 1.0 + 0j
        for i in range(n):
            prod *= row[i]
        total += sign * prod
    return total / count


@njit(cache=True, nogil=True)
def glynn_poly_values(a, z):
    """p(M, z) for each row of ``z`` (shape (B, N))."""
    b, n = z.shape
    out = np.empty(b, dtype=np.complex128)
    for s in range(b):
        val = 1.0 + 0j
        for k in range(n):
            acc = 0j
            for j in range(n):
                acc += a[k, j] * z[s, j]
            val *= acc * np.conj(z[s, k])
        out[s] = val
    return out


@njit(cache=True, nogil=True)
def glynn_poly_sum(a, z):
    b, n = z.shape
    total = 0j
    for s in range(b):
        val = 1.0 + 0j
        for k in range(n):
            acc = 0j
            for j in range(n):
                acc += a[k, j] * z[s, j]
            val *= acc * np.conj(z[s, k])
        total += val
    return total


@njit(cache=True, nogil=True)
def fourier_extract(m, roots, order):
    """(1/D) sum_j w_j^-order prod_k (1 + w_j m[s, k]) for each row of ``m``."""
    b, kk = m.shape
    d = roots.shape[0]
    out = np.empty(b, dtype=np.complex128)
    for s in range(b):
        acc = 0j
        for j in range(d):
            w = roots[j]
            p = 1.0 + 0j
            for k in range(kk):
                p *= 1.0 + w * m[s, k]
            acc += p * np.conj(roots[(j * order) % d])
        out[s] = acc / d
    return out


@njit(cache=True, nogil=True)
def combined_sum(t_sel, z, zt, roots, order):
    """Sum over samples of prod(y) * F_order(m) for the kept output rows ``t_sel``.

    ``t_sel`` is (K, N): kept output channels by input channels.
    """
    b, n = z.shape
    kk = t_sel.shape[0]
    d = roots.shape[0]
    m = np.empty(kk, dtype=np.complex128)
    total = 0j
    for s in range(b):
        y = 1.0 + 0j
        for i in range(n):
            y *= zt[s, i] * np.conj(z[s, i])
        for k in range(kk):
            alpha = 0j
            beta = 0j
            for i in range(n):
                alpha += t_sel[k, i] * z[s, i]
                beta += t_sel[k, i] * zt[s, i]
            m[k] = alpha * np.conj(beta)
        acc = 0j
        for j in range(d):
            w = roots[j]
            p = 1.0 + 0j
            for k in range(kk):
                p *= 1.0 + w * m[k]
            acc += p * np.conj(roots[(j * order) % d])
        total += y * acc / d
    return total
