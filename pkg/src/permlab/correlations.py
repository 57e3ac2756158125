"""Combined N-fold correlations over all output channel combinations.

``C_N`` sums ``|perm|^2`` over every ``N``-subset of the output channels that
avoids a deleted set ``rho``. It equals the elementary symmetric polynomial
``e_N`` of the photon-number variables, which a discrete Fourier transform of
``prod_k (1 + w m_k)`` picks out. Sampling the phase-space variables ``m_k``
makes the whole sum a single Monte Carlo average.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import partial

import numpy as np

from . import _kernels
from ._parallel import ordered_map
from .errors import ConfigError, DomainError, InvalidSelectionError, SizeLimitError
from .estimators import CHUNK, EnsembleConfig, EstimateResult, PhaseVector, modes_for
from .matrix import ChannelSet, TransmissionMatrix, as_channels, haar_random_unitary
from .permanent import GLYNN_MAX_N, permanent_glynn
from .seeding import HAAR, PHASES, stream

ORACLE_MAX_COMBINATIONS = 10**6


@dataclass(frozen=True)
class CorrelationSpec:
    """Input channels ``sigma`` and deleted (never-counted) channels ``rho``."""

    input_set: ChannelSet
    deleted_set: ChannelSet

    def __post_init__(self):
        if self.input_set.universe != self.deleted_set.universe:
            raise InvalidSelectionError("input and deleted sets must share one universe")
        if self.n_photons > self.total_modes - self.q:
            raise InvalidSelectionError(
                f"N={self.n_photons} photons cannot fit in {self.total_modes - self.q} kept channels"
            )

    @classmethod
    def make(cls, total_modes: int, inputs=None, deleted=(), n_photons=None) -> "CorrelationSpec":
        """Convenience constructor; ``inputs`` defaults to the first ``n_photons`` channels."""
        if inputs is None:
            if n_photons is None:
                raise ValueError("give inputs or n_photons")
            inputs = range(n_photons)
        deleted = tuple(deleted)
        if len(deleted) >= total_modes:
            raise ConfigError(f"deleting {len(deleted)} of {total_modes} channels leaves none")
        return cls(as_channels(inputs, total_modes), as_channels(deleted, total_modes))

    @property
    def n_photons(self) -> int:
        return len(self.input_set)

    @property
    def total_modes(self) -> int:
        return self.input_set.universe

    @property
    def q(self) -> int:
        return len(self.deleted_set)

    @property
    def kept(self) -> ChannelSet:
        return self.deleted_set.complement()


class FourierExtractor:
    """Pull one coefficient out of ``prod_k (1 + x m_k)`` by a ``D``-point DFT.

    With ``K`` factors the polynomial has degree ``K``; order ``N`` aliases with
    orders ``N +/- D``, so extraction of order ``N`` is exact iff
    ``D > max(N, K - N)``. The default ``D = K + 1`` is exact for every order.
    """

    def __init__(self, period: int):
        if period < 1:
            raise ValueError("period must be >= 1")
        self.period = int(period)
        self.step = 2 * math.pi / self.period
        j = np.arange(self.period)
        self.roots = np.exp(1j * self.step * j)

    @classmethod
    def for_factors(cls, n_factors: int) -> "FourierExtractor":
        return cls(n_factors + 1)

    def check(self, n_factors: int, order: int) -> None:
        if not 0 <= order <= n_factors:
            raise ValueError(f"order {order} outside [0, {n_factors}]")
        if self.period <= max(order, n_factors - order):
            raise ValueError(
                f"period {self.period} aliases order {order} of a degree-{n_factors} polynomial"
            )

    def extract(self, m, order: int) -> np.ndarray | complex:
        """Order-``order`` coefficient for a vector ``m`` or each row of a 2-D ``m``."""
        m = np.asarray(m, dtype=np.complex128)
        single = m.ndim == 1
        m2 = np.ascontiguousarray(m[None, :] if single else m)
        self.check(m2.shape[1], order)
        out = _kernels.fourier_extract(m2, self.roots, order)
        return complex(out[0]) if single else out


def elementary_symmetric(m, order: int) -> complex:
    """``e_order(m)`` by the standard recurrence; independent of the DFT route."""
    e = np.zeros(order + 1, dtype=np.complex128)
    e[0] = 1.0
    for x in np.asarray(m, dtype=np.complex128):
        e[1:] = e[1:] + x * e[:-1]
    return complex(e[order])


def _combinations_guard(spec: CorrelationSpec) -> None:
    count = math.comb(spec.total_modes - spec.q, spec.n_photons)
    if count > ORACLE_MAX_COMBINATIONS:
        raise SizeLimitError(
            f"{count} output combinations exceed the brute-force limit of {ORACLE_MAX_COMBINATIONS}"
        )
    if spec.n_photons > GLYNN_MAX_N:
        raise SizeLimitError(f"N={spec.n_photons} exceeds the Glynn limit")


def combined_correlation_exact(T: TransmissionMatrix, spec: CorrelationSpec) -> float:
    """Brute-force sum of ``|perm|^2`` over every allowed output combination."""
    _check_spec(T, spec)
    _combinations_guard(spec)
    cols = spec.input_set.array
    eff = np.ascontiguousarray(T.effective[:, cols])
    total = 0.0
    for rows in itertools.combinations(spec.kept.indices, spec.n_photons):
        p = permanent_glynn(eff[list(rows), :])
        total += p.real * p.real + p.imag * p.imag
    return float(total)


def combined_correlation_terms(T: TransmissionMatrix, spec: CorrelationSpec) -> dict:
    """Every ``|perm|^2`` term, keyed by output combination."""
    _check_spec(T, spec)
    _combinations_guard(spec)
    cols = spec.input_set.array
    eff = T.effective[:, cols]
    out = {}
    for rows in itertools.combinations(spec.kept.indices, spec.n_photons):
        p = permanent_glynn(eff[list(rows), :])
        out[rows] = float(p.real * p.real + p.imag * p.imag)
    return out


def _check_spec(T: TransmissionMatrix, spec: CorrelationSpec) -> None:
    if spec.total_modes != T.modes:
        raise InvalidSelectionError(f"spec has {spec.total_modes} modes, network has {T.modes}")


def output_amplitude_pair(T: TransmissionMatrix, inputs, z, zt) -> np.ndarray:
    """Scaled boson numbers ``m_k = (T z)_k * conj((T zt)_k)`` for every output channel.

    Only the input columns ``sigma`` of ``T`` carry photons; the vanishing
    contour radius has already been divided out.
    """
    sigma = as_channels(inputs, T.modes)
    zv = np.asarray(z.values if isinstance(z, PhaseVector) else z, dtype=np.complex128)
    ztv = np.asarray(zt.values if isinstance(zt, PhaseVector) else zt, dtype=np.complex128)
    if zv.shape != (len(sigma),) or ztv.shape != (len(sigma),):
        raise ValueError(f"need {len(sigma)} phases for each of z and zt")
    cols = T.effective[:, sigma.array]
    return (cols @ zv) * np.conj(cols @ ztv)


def _combined_subensemble(t_sel, roots, order, phase, L1, seed, matrix_index, s):
    rng = stream(seed, PHASES, matrix_index, s)
    n = t_sel.shape[1]
    total = 0j
    done = 0
    while done < L1:
        b = min(CHUNK, L1 - done)
        z = phase.draw(rng, (b, n))
        zt = phase.draw(rng, (b, n))
        total += _kernels.combined_sum(t_sel, z, zt, roots, order)
        done += b
    return total / L1


def combined_correlation_qcp(
    T: TransmissionMatrix,
    spec: CorrelationSpec,
    cfg: EnsembleConfig,
    matrix_index: int = 0,
    threads: int = 1,
    period: int | None = None,
) -> EstimateResult:
    """Sampled combined correlation ``C_N^(rho)``.

    Each sample draws independent phase vectors ``z`` and ``zt``, weights the
    extracted order-``N`` coefficient of ``prod_{k not in rho} (1 + w m_k)``
    by ``prod_m zt_m / z_m``, and is unbiased on its own. The real part of
    each sub-ensemble mean is one statistical unit, so ``L2`` units result.
    ``period`` overrides the default ``(M - Q) + 1`` extraction points.
    """
    _check_spec(T, spec)
    kept = spec.kept
    k_count = len(kept)
    if k_count == 0:
        raise ConfigError("no channels left after deletion")
    extractor = FourierExtractor(period if period is not None else k_count + 1)
    extractor.check(k_count, spec.n_photons)
    t_sel = np.ascontiguousarray(T.effective[np.ix_(kept.array, spec.input_set.array)])
    fn = partial(
        _combined_subensemble, t_sel, extractor.roots, spec.n_photons,
        cfg.phase, cfg.L1, cfg.seed, matrix_index,
    )
    means = np.asarray(ordered_map(fn, range(cfg.L2), threads), dtype=np.complex128)
    return EstimateResult.from_values(means.real)


def effective_loss(u, p: int, t: float, inputs) -> float:
    """Effective transmission ``t (1 - sum_{i in sigma} |U_pi|^2 / N)`` seen with channel ``p`` deleted."""
    u = np.asarray(u)
    if not 0 <= p < u.shape[0]:
        raise InvalidSelectionError(f"channel {p} out of range")
    sigma = as_channels(inputs, u.shape[1])
    n = len(sigma)
    overlap = float(np.sum(np.abs(u[p, sigma.array]) ** 2))
    return t * (1.0 - overlap / n)


def log_conjecture_value(n: int, k: float, t_p: float) -> float:
    m = modes_for(n, k)
    if m <= n:
        raise DomainError(f"conjecture needs k > 1, got k={k}")
    if t_p <= 0:
        raise DomainError("effective transmission must be positive")
    return (
        n * math.log(t_p)
        + math.lgamma(m) + math.lgamma(m - 1)
        - math.lgamma(m - n) - math.lgamma(m + n - 1)
    )


def conjecture_value(n: int, k: float, t_p: float) -> float:
    """Analytic large-``k`` estimate of the single-channel-deleted combined correlation.

    ``t_p^N (kN-1)! (kN-2)! / (((k-1)N-1)! ((k+1)N-2)!)``, evaluated with
    log-gamma.
    """
    if n < 1:
        raise DomainError("need n >= 1")
    return math.exp(log_conjecture_value(n, k, t_p))


def conjecture_spread(n: int, k: float, t: float, n_matrices: int, seed: int = 0, sampler=None):
    """Mean and standard deviation of the conjecture over an ensemble of unitaries.

    Channel ``M - 1`` is deleted and photons enter channels ``0..N-1``.
    ``sampler(m, rng)`` replaces the Haar draw (e.g. to pin a fixed matrix).
    """
    if n_matrices < 2:
        raise ConfigError("need at least two matrices for a spread")
    m = modes_for(n, k)
    sampler = sampler or haar_random_unitary
    sigma = ChannelSet.first(n, m)
    vals = np.empty(n_matrices)
    for j in range(n_matrices):
        u = sampler(m, stream(seed, HAAR, j))
        vals[j] = conjecture_value(n, k, effective_loss(u, m - 1, t, sigma))
    return float(vals.mean()), float(vals.std(ddof=1))
