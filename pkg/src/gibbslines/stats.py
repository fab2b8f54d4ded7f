"""Basic statistical instruments: KS distances, Wilson intervals, chi-square."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import special, stats

from .errors import DomainError

DEFAULT_LEVEL = 0.01


@dataclass
class TestReport:
    """Outcome of one statistical check; ``passed`` means ``p_value >= level``."""

    __test__ = False  # keep pytest from collecting this class

    name: str
    statistic: float
    p_value: float
    n: tuple
    level: float = DEFAULT_LEVEL
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.p_value = min(1.0, max(0.0, float(self.p_value)))
        self.statistic = float(self.statistic)

    @property
    def passed(self) -> bool:
        return self.p_value >= self.level

    @property
    def verdict(self) -> str:
        return "pass" if self.passed else "fail"

    def to_dict(self) -> dict:
        d = asdict(self)
        d["n"] = list(self.n)
        d["verdict"] = self.verdict
        return d


def ks_distance(a, b) -> float:
    """Supremum distance between the empirical CDFs of ``a`` and ``b``."""
    a = np.sort(np.asarray(a, dtype=float).ravel())
    b = np.sort(np.asarray(b, dtype=float).ravel())
    if a.size == 0 or b.size == 0:
        raise DomainError("KS needs two nonempty samples")
    grid = np.concatenate([a, b])
    fa = np.searchsorted(a, grid, side="right") / a.size
    fb = np.searchsorted(b, grid, side="right") / b.size
    return float(np.max(np.abs(fa - fb)))


def kolmogorov_pvalue(d: float, n_eff: float) -> float:
    """Asymptotic p-value with Stephens' small-sample correction."""
    s = math.sqrt(n_eff)
    return float(special.kolmogorov((s + 0.12 + 0.11 / s) * d))


def ks_two_sample(a, b, name: str = "ks_two_sample", level: float = DEFAULT_LEVEL) -> TestReport:
    d = ks_distance(a, b)
    n, m = np.size(a), np.size(b)
    return TestReport(name, d, kolmogorov_pvalue(d, n * m / (n + m)), (n, m), level)


def ks_one_sample(a, cdf, name: str = "ks_one_sample", level: float = DEFAULT_LEVEL) -> TestReport:
    """KS distance of ``a`` to a continuous reference ``cdf``."""
    x = np.sort(np.asarray(a, dtype=float).ravel())
    if x.size == 0:
        raise DomainError("KS needs a nonempty sample")
    f = cdf(x)
    i = np.arange(1, x.size + 1)
    d = float(max(np.max(i / x.size - f), np.max(f - (i - 1) / x.size)))
    return TestReport(name, d, kolmogorov_pvalue(d, x.size), (x.size,), level)


def binomial_ci(hits: int, trials: int, level: float = 0.95) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if not 0.0 < level < 1.0:
        raise DomainError(f"confidence level {level} outside (0, 1)")
    if trials <= 0 or hits < 0 or hits > trials:
        raise DomainError(f"need 0 <= hits <= trials and trials > 0, got {hits}/{trials}")
    z = stats.norm.ppf(0.5 + level / 2)
    phat = hits / trials
    denom = 1 + z * z / trials
    centre = (phat + z * z / (2 * trials)) / denom
    half = z * math.sqrt(phat * (1 - phat) / trials + z * z / (4 * trials * trials)) / denom
    lo = 0.0 if hits == 0 else max(0.0, centre - half)
    hi = 1.0 if hits == trials else min(1.0, centre + half)
    return float(lo), float(hi)


def binomial_se(p: float, n: int) -> float:
    return math.sqrt(max(p * (1 - p), 0.0) / n)


def chi_square_gof(counts, probs, min_expected: float = 5.0, name: str = "chi_square",
                   level: float = 0.001) -> TestReport:
    """Pearson goodness of fit; cells with small expectation are pooled.

    ``counts`` may carry one trailing extra cell for observations outside the
    support of ``probs`` (expected count zero); any such hit fails the test.
    """
    counts = np.asarray(counts, dtype=float)
    probs = np.asarray(probs, dtype=float)
    n = counts.sum()
    outside = 0.0
    if counts.size == probs.size + 1:
        outside = counts[-1]
        counts = counts[:-1]
    if outside > 0:
        return TestReport(name, math.inf, 0.0, (int(n),), level, {"outside_support": int(outside)})
    expected = probs / probs.sum() * n
    order = np.argsort(expected)
    e_sorted, c_sorted = expected[order], counts[order]
    cut = int(np.searchsorted(e_sorted, min_expected))
    while cut < e_sorted.size and e_sorted[:cut].sum() < min_expected and cut > 0:
        cut += 1
    if cut > 1:
        e_sorted = np.concatenate([[e_sorted[:cut].sum()], e_sorted[cut:]])
        c_sorted = np.concatenate([[c_sorted[:cut].sum()], c_sorted[cut:]])
    if e_sorted.size < 2:
        return TestReport(name, 0.0, 1.0, (int(n),), level, {"cells": int(e_sorted.size)})
    stat = float(np.sum((c_sorted - e_sorted) ** 2 / e_sorted))
    dof = e_sorted.size - 1
    return TestReport(name, stat, float(stats.chi2.sf(stat, dof)), (int(n),), level,
                      {"cells": int(e_sorted.size), "dof": dof})
