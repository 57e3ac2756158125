"""Exact matrix permanents: brute force over permutations and Glynn's formula."""

from __future__ import annotations

import itertools

import numpy as np

from . import _kernels
from .errors import SizeLimitError
from .matrix import TransmissionMatrix, as_complex_matrix, submatrix

NAIVE_MAX_N = 10
GLYNN_MAX_N = 30


def _square(a) -> np.ndarray:
    a = as_complex_matrix(a)
    if a.shape[0] != a.shape[1]:
        raise ValueError(f"permanent needs a square matrix, got {a.shape}")
    return a


def permanent_naive(a) -> complex:
    """Permanent as the sum over all ``N!`` permutation products (``N <= 10``)."""
    a = _square(a)
    n = a.shape[0]
    if n > NAIVE_MAX_N:
        raise SizeLimitError(f"naive permanent limited to N <= {NAIVE_MAX_N}; use permanent_glynn")
    if n == 0:
        return 1.0 + 0j
    rows = np.arange(n)
    perms = itertools.permutations(range(n))
    total = 0j
    # Blocks of permutations keep memory flat up to N = 10.
    while block := list(itertools.islice(perms, 40320)):
        total += a[rows, np.array(block)].prod(axis=1).sum()
    return complex(total)


def permanent_glynn(a) -> complex:
    """Permanent via Glynn's +/-1 formula walked in binary-reflected Gray order.

    Each step flips one sign, so the row sums are updated in ``O(N)`` and the
    total cost is ``O(N 2^N)``. The ``2^(N-1)`` normalisation is applied once
    at the end.
    """
    a = _square(a)
    n = a.shape[0]
    if n > GLYNN_MAX_N:
        raise SizeLimitError(f"Glynn permanent limited to N <= {GLYNN_MAX_N}")
    if n == 0:
        return 1.0 + 0j
    return complex(_kernels.glynn_gray(np.ascontiguousarray(a)))


def perm_squared_exact(T: TransmissionMatrix, out, inp) -> float:
    """``|perm T(out, inp)|^2``, the coincidence probability for that channel pattern."""
    p = permanent_glynn(submatrix(T, out, inp))
    return float(p.real * p.real + p.imag * p.imag)
