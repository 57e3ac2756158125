"""Randomised phase-space estimators of permanents and permanents squared.

A sample draws one unit-modulus phase per input channel and evaluates the
Glynn polynomial ``p(M, z)``, whose phase average is ``perm(M)``. Samples are
grouped in ``L2`` sub-ensembles of ``L1`` samples; sub-ensemble means are the
statistical units. Two estimators of ``|perm|^2`` are built from them:

* QCP: adjacent sub-ensembles ``(2i, 2i+1)`` are multiplied as a
  quasi-conjugate pair, ``Re[a * conj(b)]``. Unbiased.
* Gurvits-squared: ``|mean|^2`` of each sub-ensemble. Biased upward by the
  variance of a sub-ensemble mean; kept as the comparator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import partial

import numpy as np

from . import _kernels
from ._parallel import ordered_map
from .errors import ConfigError, DegenerateDispersionError, DomainError
from .matrix import as_complex_matrix, haar_random_unitary
from .permanent import GLYNN_MAX_N, permanent_glynn
from .seeding import HAAR, PHASES, stream

CHUNK = 8192


def _root_table(d: int) -> np.ndarray:
    q = np.arange(d)
    roots = np.exp(2j * np.pi * q / d)
    # Quarter turns are representable exactly; keep them exact.
    for i in q[(4 * q) % d == 0]:
        roots[i] = (1, 1j, -1, -1j)[(4 * i) // d]
    return roots


@dataclass(frozen=True)
class PhaseConfig:
    """Phase discretisation: ``d``-th roots of unity, or ``d=None`` for continuous angles."""

    d: int | None = None

    def __post_init__(self):
        if self.d is not None:
            if int(self.d) != self.d or self.d < 2:
                raise ConfigError(f"discretisation d must be an integer >= 2, got {self.d}")
            object.__setattr__(self, "d", int(self.d))

    @property
    def continuous(self) -> bool:
        return self.d is None

    @classmethod
    def parse(cls, value) -> "PhaseConfig":
        if isinstance(value, PhaseConfig):
            return value
        if value is None:
            return cls(None)
        if isinstance(value, str):
            v = value.strip().lower()
            if v in ("inf", "infinity", "continuous", "cont"):
                return cls(None)
            try:
                value = int(v)
            except ValueError:
                raise ConfigError(f"cannot parse discretisation {value!r}") from None
        return cls(value)

    def roots(self) -> np.ndarray:
        if self.continuous:
            raise ValueError("continuous phases have no root table")
        return _root_table(self.d)

    def draw(self, rng: np.random.Generator, shape) -> np.ndarray:
        """Array of random unit phases of the given shape."""
        if self.continuous:
            return np.exp(2j * np.pi * rng.random(shape))
        return self.roots()[rng.integers(0, self.d, size=shape)]

    def __str__(self):
        return "inf" if self.continuous else str(self.d)


CONTINUOUS = PhaseConfig(None)


@dataclass(frozen=True, eq=False)
class PhaseVector:
    """Sampled phases; ``indices`` holds ``q`` with ``z = exp(2 pi i q / d)`` when ``d`` is finite."""

    values: np.ndarray
    indices: np.ndarray | None = None


def sample_phase_vector(n: int, phase, rng: np.random.Generator) -> PhaseVector:
    phase = PhaseConfig.parse(phase)
    if n < 1:
        raise ValueError(f"need at least one phase, got n={n}")
    if phase.continuous:
        return PhaseVector(np.exp(2j * np.pi * rng.random(n)))
    q = rng.integers(0, phase.d, size=n)
    return PhaseVector(phase.roots()[q], q)


@dataclass(frozen=True)
class EnsembleConfig:
    """Sampling plan: ``L2`` sub-ensembles of ``L1`` samples each.

    ``L2`` must be even so QCP can consume sub-ensembles in pairs; the same
    plan is used for every estimator so that comparisons share a seed budget.
    """

    L1: int
    L2: int
    phase: PhaseConfig = CONTINUOUS
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "phase", PhaseConfig.parse(self.phase))
        if self.L1 < 1:
            raise ConfigError(f"L1 must be >= 1, got {self.L1}")
        if self.L2 < 2 or self.L2 % 2:
            raise ConfigError(f"L2 must be even and >= 2, got {self.L2}")
        if self.seed < 0:
            raise ConfigError("seed must be non-negative")

    @property
    def total_samples(self) -> int:
        return self.L1 * self.L2


@dataclass(frozen=True, eq=False)
class EstimateResult:
    mean: complex | float
    std_error: float
    subensemble_values: np.ndarray = field(repr=False)
    effective_subensembles: int

    @classmethod
    def from_values(cls, values) -> "EstimateResult":
        """Mean and standard error of the mean (``n - 1`` variance) of independent values."""
        v = np.asarray(values)
        n = v.size
        mean = v.mean()
        if n < 2:
            se = 0.0
        elif np.iscomplexobj(v):
            se = math.sqrt((v.real.var(ddof=1) + v.imag.var(ddof=1)) / n)
        else:
            se = math.sqrt(v.var(ddof=1) / n)
        mean = complex(mean) if np.iscomplexobj(v) else float(mean)
        return cls(mean, se, v, n)


def glynn_polynomial(a, z) -> complex:
    """``p(M, z) = prod_l conj(z_l) * prod_k sum_j M_kj z_j`` for unit phases ``z``."""
    a = as_complex_matrix(a)
    zv = np.asarray(z.values if isinstance(z, PhaseVector) else z, dtype=np.complex128)
    if a.shape[0] != a.shape[1] or zv.shape != (a.shape[0],):
        raise ValueError(f"need an N x N matrix and N phases, got {a.shape} and {zv.shape}")
    return complex(_kernels.glynn_poly_values(np.ascontiguousarray(a), zv[None, :])[0])


def _subensemble_mean(a, phase, L1, seed, matrix_index, s):
    rng = stream(seed, PHASES, matrix_index, s)
    n = a.shape[0]
    total = 0j
    done = 0
    while done < L1:
        b = min(CHUNK, L1 - done)
        total += _kernels.glynn_poly_sum(a, phase.draw(rng, (b, n)))
        done += b
    return total / L1


def subensemble_means(a, cfg: EnsembleConfig, matrix_index: int = 0, threads: int = 1) -> np.ndarray:
    """Complex ``<p(M, z)>_{L1}`` for each of the ``L2`` sub-ensembles.

    Sub-ensemble ``s`` draws from the stream keyed ``(seed, matrix_index, s)``,
    so the output does not depend on ``threads``.
    """
    a = np.ascontiguousarray(as_complex_matrix(a))
    if a.shape[0] != a.shape[1]:
        raise ValueError(f"need a square matrix, got {a.shape}")
    fn = partial(_subensemble_mean, a, cfg.phase, cfg.L1, cfg.seed, matrix_index)
    return np.asarray(ordered_map(fn, range(cfg.L2), threads), dtype=np.complex128)


def qcp_from_means(means) -> EstimateResult:
    means = np.asarray(means)
    if means.size % 2:
        raise ConfigError("QCP pairing needs an even number of sub-ensembles")
    pairs = (means[0::2] * np.conj(means[1::2])).real
    return EstimateResult.from_values(pairs)


def gurvits_from_means(means) -> EstimateResult:
    means = np.asarray(means)
    return EstimateResult.from_values(means.real ** 2 + means.imag ** 2)


def estimate_permanent(a, cfg: EnsembleConfig, matrix_index: int = 0, threads: int = 1) -> EstimateResult:
    """Unbiased complex estimate of ``perm(M)``; with ``d=2`` this is Gurvits' estimator."""
    return EstimateResult.from_values(subensemble_means(a, cfg, matrix_index, threads))


def estimate_perm_squared_qcp(a, cfg: EnsembleConfig, matrix_index: int = 0, threads: int = 1) -> EstimateResult:
    return qcp_from_means(subensemble_means(a, cfg, matrix_index, threads))


def estimate_perm_squared_gurvits_biased(a, cfg: EnsembleConfig, matrix_index: int = 0, threads: int = 1) -> EstimateResult:
    if cfg.phase.d != 2:
        raise ConfigError("the Gurvits comparator is defined for d = 2")
    return gurvits_from_means(subensemble_means(a, cfg, matrix_index, threads))


def actual_error(estimate: EstimateResult, exact) -> float:
    return float(abs(estimate.mean - exact))


def error_ratio_delta(estimate: EstimateResult, exact) -> float:
    """Actual error in units of the estimated standard error."""
    e = actual_error(estimate, exact)
    if estimate.std_error == 0:
        if e == 0:
            return 0.0
        raise DegenerateDispersionError(f"std_error is zero but actual error is {e:g}")
    return e / estimate.std_error


def experimental_error(mean_probability: float, samples: int) -> float:
    """Poissonian shot-noise error ``sqrt(P / L)`` of a measured rate."""
    if mean_probability < 0 or samples < 1:
        raise ValueError("need mean_probability >= 0 and samples >= 1")
    return math.sqrt(mean_probability / samples)


def scaling_law_epsilon(k: float) -> float:
    """Leading log-rate ``k ln k - (1 + k) ln(1 + k)`` of the Haar-averaged coincidence rate."""
    if k < 1:
        raise DomainError(f"channel ratio k must be >= 1, got {k}")
    return k * math.log(k) - (1 + k) * math.log1p(k)


def modes_for(n: int, k: float) -> int:
    m = round(k * n)
    if m < 1 or abs(m - k * n) > 1e-9:
        raise ConfigError(f"k * n must be a positive integer, got k={k}, n={n}")
    return m


def haar_member(seed: int, j: int, m: int) -> np.ndarray:
    """The ``j``-th unitary of the Haar ensemble fixed by ``seed``."""
    return haar_random_unitary(m, stream(seed, HAAR, j))


def _haar_point(n, m, cfg, seed, exact, j):
    a = haar_member(seed, j, m)[:n, :n]
    if exact:
        p = permanent_glynn(a)
        return p.real ** 2 + p.imag ** 2
    return estimate_perm_squared_qcp(a, cfg, matrix_index=j).mean


def haar_average_perm_squared(
    n: int,
    k: float,
    n_matrices: int,
    cfg: EnsembleConfig | None = None,
    seed: int = 0,
    exact: bool = False,
    threads: int = 1,
) -> EstimateResult:
    """Unitary average of ``|perm|^2`` of the leading ``n x n`` block of ``kn x kn`` Haar matrices.

    Each matrix contributes either the exact value (``exact=True`` or no
    ``cfg``) or its QCP estimate. The returned standard error is the spread
    over matrices divided by ``sqrt(n_matrices)``.
    """
    m = modes_for(n, k)
    if n_matrices < 1:
        raise ConfigError("need at least one matrix")
    exact = exact or cfg is None
    if exact and n > GLYNN_MAX_N:
        raise ConfigError(f"exact averages need n <= {GLYNN_MAX_N}")
    fn = partial(_haar_point, n, m, cfg, seed, exact)
    return EstimateResult.from_values(np.asarray(ordered_map(fn, range(n_matrices), threads), dtype=float))
