"""Experiment drivers behind the ``permlab`` CLI.

Each driver takes a :class:`RunConfig` and returns a list of row dicts keyed
by :data:`COLUMNS`. Per-matrix rows have ``aggregated = False``; each
parameter point also gets one matrix-averaged row with ``aggregated = True``.
Sweeps expand as the Cartesian product ``n x L1 x d`` in that order.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, fields

import numpy as np

from .correlations import (
    CorrelationSpec,
    ORACLE_MAX_COMBINATIONS,
    combined_correlation_exact,
    combined_correlation_qcp,
    conjecture_spread,
    conjecture_value,
    effective_loss,
)
from .errors import ConfigError, NumericalGuardError
from .estimators import (
    CONTINUOUS,
    EnsembleConfig,
    PhaseConfig,
    actual_error,
    error_ratio_delta,
    experimental_error,
    gurvits_from_means,
    haar_member,
    modes_for,
    qcp_from_means,
    scaling_law_epsilon,
    subensemble_means,
)
from .matrix import TransmissionMatrix, load_matrix
from .permanent import GLYNN_MAX_N, permanent_glynn

EXPERIMENTS = ("perm2-bias", "scaling", "combined", "conjecture-spread", "verify-oracles")

COLUMNS = (
    "experiment", "method", "n", "k", "modes", "d", "L1", "L2", "L", "matrix",
    "aggregated", "n_matrices", "mean", "std_error", "exact", "actual_error",
    "relative_error", "delta", "experimental_error", "t_p", "conjecture",
    "relative_difference", "spread", "reference",
)


def _int_list(value, name):
    if value is None:
        raise ConfigError(f"{name} is required")
    if isinstance(value, bool):
        raise ConfigError(f"{name} must be an integer or range")
    if isinstance(value, int):
        out = [value]
    elif isinstance(value, str):
        if ".." in value:
            lo, hi = value.split("..", 1)
            out = list(range(int(lo), int(hi) + 1))
        else:
            out = [int(x) for x in value.split(",") if x.strip()]
    elif isinstance(value, dict):
        out = list(range(int(value["start"]), int(value["stop"]) + 1, int(value.get("step", 1))))
    else:
        out = [int(x) for x in value]
    if not out:
        raise ConfigError(f"{name} sweep is empty")
    return out


def _phase_list(value):
    if not isinstance(value, (list, tuple)):
        value = str(value).split(",") if isinstance(value, str) else [value]
    out = [PhaseConfig.parse(v) for v in value]
    if not out:
        raise ConfigError("d sweep is empty")
    return out


@dataclass
class RunConfig:
    """Everything needed to reproduce one experiment run."""

    experiment: str
    n: list = field(default_factory=lambda: [4])
    k: float = 2.0
    d: list = field(default_factory=lambda: [CONTINUOUS])
    L1: list = field(default_factory=lambda: [1000])
    L2: int = 100
    n_matrices: int = 10
    t: float = 1.0
    deleted: list | None = None
    seed: int = 0
    threads: int = 1
    output_path: str | None = None
    unitary_path: str | None = None
    exact: bool = True

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}; choose from {EXPERIMENTS}")
        self.n = _int_list(self.n, "n")
        self.L1 = _int_list(self.L1, "L1")
        self.d = _phase_list(self.d)
        self.L2 = int(self.L2)
        self.n_matrices = int(self.n_matrices)
        self.seed = int(self.seed)
        self.threads = max(1, int(self.threads))
        self.k = float(self.k)
        self.t = float(self.t)
        if self.n_matrices < 1:
            raise ConfigError("n_matrices must be >= 1")
        if not 0 < self.t <= 1:
            raise ConfigError("t must lie in (0, 1]")
        if self.seed < 0 or self.seed >= 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if any(v < 1 for v in self.n) or any(v < 1 for v in self.L1):
            raise ConfigError("n and L1 values must be positive")
        if self.L2 < 2 or self.L2 % 2:
            raise ConfigError(f"L2 must be even and >= 2, got {self.L2}")
        if self.deleted is not None:
            self.deleted = [int(x) for x in self.deleted]
        for n in self.n:
            modes_for(n, self.k)

    @classmethod
    def from_dict(cls, obj: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(obj) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**obj)

    def to_dict(self) -> dict:
        return {
            "experiment": self.experiment,
            "n": list(self.n),
            "k": self.k,
            "d": [str(p) for p in self.d],
            "L1": list(self.L1),
            "L2": self.L2,
            "n_matrices": self.n_matrices,
            "t": self.t,
            "deleted": self.deleted,
            "seed": self.seed,
            "threads": self.threads,
            "output_path": self.output_path,
            "unitary_path": self.unitary_path,
            "exact": self.exact,
        }


def _row(**kw) -> dict:
    row = dict.fromkeys(COLUMNS)
    for key, value in kw.items():
        if key not in row:
            raise KeyError(key)
        row[key] = value
    return row


def _aggregate(rows, **extra) -> dict:
    """Matrix-averaged row over per-matrix rows of one parameter point."""
    first = rows[0]
    base = {c: first[c] for c in ("experiment", "method", "n", "k", "modes", "d", "L1", "L2", "L")}
    out = _row(**base, aggregated=True, n_matrices=len(rows))
    for col in ("mean", "std_error", "exact", "actual_error", "relative_error", "delta",
                "t_p", "conjecture", "relative_difference"):
        vals = [r[col] for r in rows if r[col] is not None]
        if len(vals) == len(rows):
            out[col] = float(np.mean(vals))
    out.update(extra)
    return out


def _unitary(cfg: RunConfig, j: int, m: int) -> np.ndarray:
    if cfg.unitary_path:
        u = load_matrix(cfg.unitary_path)
        if u.shape != (m, m):
            raise ConfigError(f"pinned unitary is {u.shape}, experiment needs {m} x {m}")
        return u
    return haar_member(cfg.seed, j, m)


def _check_exact(n):
    if n > GLYNN_MAX_N:
        raise ConfigError(
            f"n={n} exceeds the exact-permanent limit {GLYNN_MAX_N}; "
            "perm2-bias and scaling need exact values, use the combined experiment instead"
        )


def _perm2_point(a, cfg, j, L1, phase):
    ens = EnsembleConfig(L1, cfg.L2, phase, cfg.seed)
    return subensemble_means(a, ens, matrix_index=j, threads=cfg.threads)


def _estimate_row(experiment, method, n, m, cfg, L1, phase, j, est, exact):
    L = L1 * cfg.L2
    e = actual_error(est, exact)
    return _row(
        experiment=experiment, method=method, n=n, k=cfg.k, modes=m, d=str(phase),
        L1=L1, L2=cfg.L2, L=L, matrix=j, aggregated=False, n_matrices=1,
        mean=est.mean, std_error=est.std_error, exact=exact, actual_error=e,
        relative_error=e / exact if exact > 0 else None,
        delta=error_ratio_delta(est, exact),
        experimental_error=experimental_error(max(est.mean, 0.0), L),
    )


def run_perm2_bias(cfg: RunConfig) -> list:
    """Gurvits-squared vs QCP on Haar sub-matrices against exact ``|perm|^2``."""
    rows = []
    d2 = PhaseConfig(2)
    for n in cfg.n:
        _check_exact(n)
        m = modes_for(n, cfg.k)
        mats = []
        for j in range(cfg.n_matrices):
            a = np.ascontiguousarray(_unitary(cfg, j, m)[:n, :n])
            p = permanent_glynn(a)
            mats.append((a, p.real ** 2 + p.imag ** 2))
        for L1 in cfg.L1:
            groups = {}
            for j, (a, exact) in enumerate(mats):
                # d=2 means feed both Gurvits and QCP(d=2): one shared seed budget.
                cache = {ph: _perm2_point(a, cfg, j, L1, ph) for ph in [d2, *cfg.d]}
                est = gurvits_from_means(cache[d2])
                groups.setdefault(("gurvits", d2), []).append(
                    _estimate_row("perm2-bias", "gurvits", n, m, cfg, L1, d2, j, est, exact))
                for phase in cfg.d:
                    est = qcp_from_means(cache[phase])
                    groups.setdefault(("qcp", phase), []).append(
                        _estimate_row("perm2-bias", "qcp", n, m, cfg, L1, phase, j, est, exact))
            for group in groups.values():
                rows.extend(group)
                agg = _aggregate(group)
                agg["experimental_error"] = experimental_error(max(agg["mean"], 0.0), group[0]["L"])
                rows.append(agg)
    return rows


def run_scaling(cfg: RunConfig) -> list:
    """Unitary-averaged ``|perm|^2`` vs ``N``: exact mean, QCP error and shot noise."""
    rows = []
    for n in cfg.n:
        _check_exact(n)
        m = modes_for(n, cfg.k)
        mats = []
        for j in range(cfg.n_matrices):
            a = np.ascontiguousarray(_unitary(cfg, j, m)[:n, :n])
            p = permanent_glynn(a)
            mats.append((a, p.real ** 2 + p.imag ** 2))
        pbar = float(np.mean([e for _, e in mats]))
        for L1 in cfg.L1:
            for phase in cfg.d:
                group = []
                for j, (a, exact) in enumerate(mats):
                    est = qcp_from_means(_perm2_point(a, cfg, j, L1, phase))
                    group.append(_estimate_row("scaling", "qcp", n, m, cfg, L1, phase, j, est, exact))
                rows.extend(group)
                agg = _aggregate(group)
                agg["experimental_error"] = experimental_error(pbar, L1 * cfg.L2)
                agg["reference"] = n * scaling_law_epsilon(cfg.k)
                rows.append(agg)
    return rows


def _deleted_for(cfg: RunConfig, m: int) -> tuple:
    raw = cfg.deleted if cfg.deleted is not None else [m - 1]
    out = []
    for p in raw:
        q = p + m if p < 0 else p
        if not 0 <= q < m:
            raise ConfigError(f"deleted channel {p} out of range for {m} modes")
        out.append(q)
    if len(set(out)) >= m:
        raise ConfigError(f"deleting {len(set(out))} of {m} channels leaves none")
    return tuple(sorted(set(out)))


def run_combined(cfg: RunConfig) -> list:
    """Sampled channel-deleted combined correlations against the conjecture and brute force."""
    rows = []
    for n in cfg.n:
        m = modes_for(n, cfg.k)
        deleted = _deleted_for(cfg, m)
        spec = CorrelationSpec.make(m, n_photons=n, deleted=deleted)
        nets = []
        for j in range(cfg.n_matrices):
            u = _unitary(cfg, j, m)
            T = TransmissionMatrix(u, cfg.t)
            exact = None
            if cfg.exact and math.comb(m - len(deleted), n) <= ORACLE_MAX_COMBINATIONS and n <= GLYNN_MAX_N:
                exact = combined_correlation_exact(T, spec)
            t_p = conj = None
            if len(deleted) == 1:
                t_p = effective_loss(u, deleted[0], cfg.t, spec.input_set)
                if m > n:
                    conj = conjecture_value(n, cfg.k, t_p)
            nets.append((T, exact, t_p, conj))
        for L1 in cfg.L1:
            for phase in cfg.d:
                ens = EnsembleConfig(L1, cfg.L2, phase, cfg.seed)
                group = []
                for j, (T, exact, t_p, conj) in enumerate(nets):
                    est = combined_correlation_qcp(T, spec, ens, matrix_index=j, threads=cfg.threads)
                    row = _row(
                        experiment="combined", method="qcp", n=n, k=cfg.k, modes=m, d=str(phase),
                        L1=L1, L2=cfg.L2, L=L1 * cfg.L2, matrix=j, aggregated=False, n_matrices=1,
                        mean=est.mean, std_error=est.std_error, exact=exact, t_p=t_p, conjecture=conj,
                    )
                    if exact is not None:
                        row["actual_error"] = actual_error(est, exact)
                        row["relative_error"] = row["actual_error"] / exact if exact > 0 else None
                        row["delta"] = error_ratio_delta(est, exact)
                    if conj is not None:
                        row["relative_difference"] = abs(est.mean - conj) / conj
                    group.append(row)
                rows.extend(group)
                rows.append(_aggregate(group))
    return rows


def run_conjecture_spread(cfg: RunConfig) -> list:
    """Mean and spread of the last-channel-deleted conjecture over Haar unitaries."""
    if cfg.n_matrices < 2:
        raise ConfigError("conjecture-spread needs n_matrices >= 2")
    rows = []
    for n in cfg.n:
        m = modes_for(n, cfg.k)
        mean, std = conjecture_spread(n, cfg.k, cfg.t, cfg.n_matrices, seed=cfg.seed)
        rows.append(_row(
            experiment="conjecture-spread", method="conjecture", n=n, k=cfg.k, modes=m,
            aggregated=True, n_matrices=cfg.n_matrices, mean=mean, spread=std,
            std_error=std / math.sqrt(cfg.n_matrices),
            relative_difference=std / mean,
        ))
    return rows


DRIVERS = {
    "perm2-bias": run_perm2_bias,
    "scaling": run_scaling,
    "combined": run_combined,
    "conjecture-spread": run_conjecture_spread,
}


def run(cfg: RunConfig):
    """Run a table-producing experiment; returns ``(rows, wall_time_s)``."""
    if cfg.experiment not in DRIVERS:
        raise ConfigError(f"{cfg.experiment} does not produce a table")
    start = time.perf_counter()
    rows = DRIVERS[cfg.experiment](cfg)
    check_finite(rows)
    return rows, time.perf_counter() - start


def check_finite(rows) -> None:
    for i, row in enumerate(rows):
        for col in ("mean", "std_error"):
            v = row[col]
            if v is None or not math.isfinite(v):
                raise NumericalGuardError(f"row {i}: {col} is {v!r}")
        for col, v in row.items():
            if isinstance(v, float) and not math.isfinite(v):
                raise NumericalGuardError(f"row {i}: {col} is {v!r}")
