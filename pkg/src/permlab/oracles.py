"""Self-check batteries run by ``permlab verify-oracles``.

Each suite returns ``(passed, detail)``; nothing raises on a failed check so
the CLI can report every suite before choosing an exit code.
"""

from __future__ import annotations

import math

import numpy as np

from .correlations import (
    CorrelationSpec,
    FourierExtractor,
    combined_correlation_exact,
    combined_correlation_terms,
    elementary_symmetric,
)
from .estimators import (
    EnsembleConfig,
    error_ratio_delta,
    estimate_perm_squared_qcp,
    estimate_permanent,
    haar_member,
)
from .matrix import UNITARITY_TOL, TransmissionMatrix, unitarity_defect
from .permanent import permanent_glynn, permanent_naive
from .seeding import EXTRA, stream


def suite_unitarity(seed=0, pinned=None):
    worst = max(unitarity_defect(haar_member(seed, j, m)) for j, m in enumerate((1, 2, 4, 8, 16, 32)))
    detail = f"worst Haar defect {worst:.2e}"
    ok = worst <= UNITARITY_TOL
    if pinned is not None:
        pd = unitarity_defect(pinned)
        detail += f"; pinned unitary defect {pd:.2e}"
        ok = ok and pd <= UNITARITY_TOL
    return ok, detail


def suite_glynn_vs_naive(seed=0, count=100, n=7):
    rng = stream(seed, EXTRA, 1)
    worst = 0.0
    for _ in range(count):
        a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        g, b = permanent_glynn(a), permanent_naive(a)
        worst = max(worst, abs(g - b) / abs(b))
    ones_ok = all(permanent_glynn(np.ones((k, k))) == math.factorial(k) for k in range(1, 13))
    return worst <= 1e-10 and ones_ok, f"max relative gap {worst:.2e}; all-ones N! exact: {ones_ok}"


def suite_fourier_extraction(seed=0, count=200, max_len=20):
    rng = stream(seed, EXTRA, 2)
    worst = 0.0
    for _ in range(count):
        length = int(rng.integers(1, max_len + 1))
        order = int(rng.integers(0, length + 1))
        m = rng.standard_normal(length) + 1j * rng.standard_normal(length)
        got = FourierExtractor.for_factors(length).extract(m, order)
        want = elementary_symmetric(m, order)
        worst = max(worst, abs(got - want) / max(abs(want), 1e-300))
    return worst <= 1e-10, f"max relative gap {worst:.2e}"


def suite_partition_identity(seed=0, m=10, n=3):
    u = haar_member(seed, 0, m)
    T = TransmissionMatrix(u)
    full = combined_correlation_exact(T, CorrelationSpec.make(m, n_photons=n))
    worst = 0.0
    monotone = True
    terms = combined_correlation_terms(T, CorrelationSpec.make(m, n_photons=n))
    for p in range(m):
        deleted = combined_correlation_exact(T, CorrelationSpec.make(m, n_photons=n, deleted=(p,)))
        containing = sum(v for rows, v in terms.items() if p in rows)
        worst = max(worst, abs(full - deleted - containing))
        monotone = monotone and deleted <= full
    return worst <= 1e-12 and monotone, f"max partition gap {worst:.2e}; deletion monotone: {monotone}"


def suite_unbiasedness(seed=0, n_matrices=8, n=4, m=8):
    worst = 0.0
    for j in range(n_matrices):
        a = haar_member(seed, j, m)[:n, :n]
        p = permanent_glynn(a)
        exact2 = p.real ** 2 + p.imag ** 2
        worst = max(worst, error_ratio_delta(estimate_permanent(a, EnsembleConfig(2000, 50, 2, seed), j), p))
        for d in (2, 4, None):
            est = estimate_perm_squared_qcp(a, EnsembleConfig(2000, 50, d, seed), j)
            worst = max(worst, error_ratio_delta(est, exact2))
    return worst <= 4.0, f"max delta {worst:.2f} over {n_matrices} matrices"


SUITES = {
    "unitarity": suite_unitarity,
    "glynn_vs_naive": suite_glynn_vs_naive,
    "fourier_extraction": suite_fourier_extraction,
    "partition_identity": suite_partition_identity,
    "unbiasedness": suite_unbiasedness,
}


def run_all(seed=0, pinned=None) -> dict:
    report = {}
    for name, fn in SUITES.items():
        kwargs = {"seed": seed}
        if name == "unitarity":
            kwargs["pinned"] = pinned
        try:
            ok, detail = fn(**kwargs)
        except Exception as exc:  # a crashing suite is a failed suite
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        report[name] = {"passed": bool(ok), "detail": detail}
    return report
