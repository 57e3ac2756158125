"""Complex matrices, Haar-random unitaries and transmission sub-matrices.

Matrices are plain ``numpy`` ``complex128`` arrays. The wrappers here only add
validation (finite entries, unitarity) and the channel bookkeeping needed to
cut an ``N x N`` block out of an ``M x M`` network.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np

from .errors import InvalidSelectionError, NonUnitaryError

UNITARITY_TOL = 1e-10


def as_complex_matrix(a) -> np.ndarray:
    """Coerce ``a`` to a 2-D finite ``complex128`` array (copying if needed)."""
    m = np.asarray(a, dtype=np.complex128)
    if m.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    return m


def unitarity_defect(u) -> float:
    """Largest absolute entry of ``U U^dagger - I``."""
    u = as_complex_matrix(u)
    if u.shape[0] != u.shape[1]:
        raise ValueError(f"unitarity defect needs a square matrix, got {u.shape}")
    g = u @ u.conj().T
    return float(np.max(np.abs(g - np.eye(u.shape[0]))))


def haar_random_unitary(m: int, rng: np.random.Generator) -> np.ndarray:
    """Draw an ``m x m`` unitary from the Haar measure.

    Ginibre matrix, QR factorisation, then each column of ``Q`` is multiplied
    by the phase of the matching diagonal entry of ``R``. Without that phase
    fix the result is unitary but not Haar distributed.

    Parameters
    ----------
    m : int
        Matrix dimension, at least 1.
    rng : numpy.random.Generator
        Source of randomness; the call is deterministic given its state.
    """
    if m < 1:
        raise ValueError(f"dimension must be >= 1, got {m}")
    z = (rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))) / np.sqrt(2.0)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    return q * (d / np.abs(d))


@dataclass(frozen=True)
class ChannelSet:
    """Strictly increasing tuple of 0-based channel indices below ``universe``."""

    indices: tuple
    universe: int

    def __post_init__(self):
        idx = tuple(int(i) for i in self.indices)
        object.__setattr__(self, "indices", idx)
        if self.universe < 0:
            raise InvalidSelectionError("universe size must be non-negative")
        for a, b in zip(idx, idx[1:]):
            if b <= a:
                raise InvalidSelectionError(f"channel indices must be strictly increasing: {idx}")
        if idx and (idx[0] < 0 or idx[-1] >= self.universe):
            raise InvalidSelectionError(f"channel index out of range [0, {self.universe}): {idx}")

    @classmethod
    def of(cls, indices: Iterable[int], universe: int) -> "ChannelSet":
        """Build from any iterable of distinct indices (sorted for you)."""
        idx = sorted(int(i) for i in indices)
        if len(set(idx)) != len(idx):
            raise InvalidSelectionError(f"duplicate channel indices: {idx}")
        return cls(tuple(idx), universe)

    @classmethod
    def first(cls, n: int, universe: int) -> "ChannelSet":
        return cls(tuple(range(n)), universe)

    def complement(self) -> "ChannelSet":
        taken = set(self.indices)
        return ChannelSet(tuple(i for i in range(self.universe) if i not in taken), self.universe)

    def __len__(self):
        return len(self.indices)

    def __iter__(self):
        return iter(self.indices)

    def __contains__(self, item):
        return item in self.indices

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.indices, dtype=np.intp)


def as_channels(x, universe: int) -> ChannelSet:
    if isinstance(x, ChannelSet):
        if x.universe != universe:
            raise InvalidSelectionError(
                f"channel set lives in a universe of {x.universe}, expected {universe}"
            )
        return x
    return ChannelSet.of(x, universe)


@dataclass(frozen=True, eq=False)
class TransmissionMatrix:
    """A lossy network ``T = sqrt(t) U`` with equal loss ``t`` in every channel."""

    unitary: np.ndarray
    transmission: float = 1.0

    def __post_init__(self):
        u = as_complex_matrix(self.unitary)
        if u.shape[0] != u.shape[1]:
            raise ValueError(f"unitary must be square, got {u.shape}")
        defect = unitarity_defect(u)
        if defect > UNITARITY_TOL:
            raise NonUnitaryError(f"unitarity defect {defect:.3e} exceeds {UNITARITY_TOL:g}")
        if not 0.0 < self.transmission <= 1.0:
            raise ValueError(f"transmission must lie in (0, 1], got {self.transmission}")
        u = u.copy()
        u.setflags(write=False)
        object.__setattr__(self, "unitary", u)
        object.__setattr__(self, "transmission", float(self.transmission))

    @property
    def modes(self) -> int:
        return self.unitary.shape[0]

    @property
    def effective(self) -> np.ndarray:
        return np.sqrt(self.transmission) * self.unitary


def submatrix(T: TransmissionMatrix, rows, cols) -> np.ndarray:
    """Return ``sqrt(t) * U[rows][:, cols]`` for equal-sized channel sets."""
    rows = as_channels(rows, T.modes)
    cols = as_channels(cols, T.modes)
    if len(rows) != len(cols):
        raise InvalidSelectionError(
            f"need |rows| == |cols|, got {len(rows)} and {len(cols)}"
        )
    block = T.unitary[np.ix_(rows.array, cols.array)]
    return np.sqrt(T.transmission) * block


def matrix_to_dict(a) -> dict:
    a = as_complex_matrix(a)
    return {
        "rows": int(a.shape[0]),
        "cols": int(a.shape[1]),
        "re": a.real.ravel().tolist(),
        "im": a.imag.ravel().tolist(),
    }


def matrix_from_dict(obj: dict) -> np.ndarray:
    rows, cols = int(obj["rows"]), int(obj["cols"])
    re = np.asarray(obj["re"], dtype=float)
    im = np.asarray(obj["im"], dtype=float)
    if re.size != rows * cols or im.size != rows * cols:
        raise ValueError(f"matrix payload has {re.size}/{im.size} entries, expected {rows * cols}")
    return as_complex_matrix((re + 1j * im).reshape(rows, cols))


def save_matrix(path, a) -> None:
    Path(path).write_text(json.dumps(matrix_to_dict(a)))


def load_matrix(path) -> np.ndarray:
    return matrix_from_dict(json.loads(Path(path).read_text()))
