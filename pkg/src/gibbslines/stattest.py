"""Composite statistical tests: Gibbs resampling consistency and scaled convergence."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import stats as sps

from .avoid import AvoidanceSpec, sample_avoiding
from .bridge import sample_bridges
from .brownian import sample_avoiding_brownian
from .errors import AcceptanceTooSmallError, DomainError
from .hamiltonian import Hamiltonian, make_hamiltonian, tilt_to_mean
from .stats import (DEFAULT_LEVEL, TestReport, binomial_ci, binomial_se, chi_square_gof,
                    kolmogorov_pvalue, ks_distance, ks_one_sample, ks_two_sample)

__all__ = [
    "TestReport", "ks_distance", "ks_two_sample", "ks_one_sample", "kolmogorov_pvalue",
    "binomial_ci", "binomial_se", "chi_square_gof", "GibbsTestConfig", "resample_interior",
    "flat_hamiltonian", "gibbs_resampling_test", "ConvergenceResult", "convergence_test",
    "scaled_endpoints",
]

MAX_RESAMPLE_ROUNDS = 100_000
FLOOR_SLACK = 1e-9


def flat_hamiltonian(h: Hamiltonian) -> Hamiltonian:
    """Uniform jump law on the support of ``h``.

    Its avoiding law is what a Metropolis chain converges to when the weight
    ratio is skipped and every admissible proposal is accepted.
    """
    return make_hamiltonian("weights", [1.0] * len(h.weights), alpha=h.alpha)


def resample_interior(h: Hamiltonian, x, y, upper, lower, mask, rng: np.random.Generator):
    """Redraw ordered bridges row by row under per-row boundary data.

    ``x``, ``y`` have shape ``(S, c)``; ``upper``/``lower`` have shape
    ``(S, m+1)`` (use +-inf for no barrier) and ``mask`` selects the
    constrained times.  Each row is drawn by rejection from free bridges with
    that row's endpoints.  Returns an ``(S, c, m+1)`` integer array.
    """
    x = np.asarray(x, dtype=np.int64)
    y = np.asarray(y, dtype=np.int64)
    S, c = x.shape
    m = upper.shape[1] - 1
    out = np.empty((S, c, m + 1), dtype=np.int64)
    todo = np.arange(S)
    for _ in range(MAX_RESAMPLE_ROUNDS):
        if todo.size == 0:
            return out
        draw = np.stack([sample_bridges(h, m, x[todo, i], y[todo, i], rng) for i in range(c)], axis=1)
        dm = draw[..., mask]
        ok = np.all(dm[:, :-1] >= dm[:, 1:], axis=(1, 2))
        ok &= np.all(dm[:, 0] <= upper[todo][:, mask], axis=1)
        ok &= np.all(dm[:, -1] >= lower[todo][:, mask], axis=1)
        out[todo[ok]] = draw[ok]
        todo = todo[~ok]
    raise AcceptanceTooSmallError(f"{todo.size} rows still unaccepted after "
                                  f"{MAX_RESAMPLE_ROUNDS} rounds", 0.0, S - todo.size, S)


STATISTICS = {
    "midpoint": lambda v: v[:, 0, v.shape[2] // 2],
    "area": lambda v: v[:, 0, 1:-1].sum(axis=1),
    "max": lambda v: v[:, 0].max(axis=1),
}


@dataclass
class GibbsTestConfig:
    """Fixture and window of a Gibbs resampling test.

    ``window`` is the time interval ``(a, b)`` inside the spec's domain and
    ``curves`` the 0-based inclusive index range ``(k1, k2)`` redrawn; the
    curve below ``k2`` must exist since it is frozen boundary data.
    ``statistic`` is a name from ``STATISTICS`` or a callable on the
    resampled block of shape ``(S, k2-k1+1, b-a+1)``.  With ``jitter`` the
    integer statistic is smoothed by an independent uniform on
    ``(-1/2, 1/2)`` so the KS null law is continuous.
    """

    spec: AvoidanceSpec
    window: tuple
    curves: tuple
    statistic: str | Callable = "midpoint"
    n_samples: int = 10_000
    level: float = DEFAULT_LEVEL
    method: str = "rejection"
    interior_sampler: str = "exact"
    jitter: bool = True

    def __post_init__(self):
        a, b = self.window
        k1, k2 = self.curves
        if not self.spec.t0 <= a < b <= self.spec.t1:
            raise DomainError(f"window {self.window} not inside [{self.spec.t0}, {self.spec.t1}]")
        if not 0 <= k1 <= k2 <= self.spec.k - 2:
            raise DomainError(f"curve range {self.curves} must satisfy 0 <= k1 <= k2 <= k-2")
        if self.interior_sampler not in ("exact", "flat"):
            raise DomainError(f"unknown interior sampler {self.interior_sampler!r}")
        if self.n_samples < 2:
            raise DomainError("need at least two samples")


def _statistic(config, block):
    stat = config.statistic
    fn = STATISTICS.get(stat) if isinstance(stat, str) else stat
    if fn is None:
        raise DomainError(f"unknown statistic {stat!r}")
    return np.asarray(fn(block), dtype=float)


def gibbs_resampling_test(h: Hamiltonian, config: GibbsTestConfig, rng: np.random.Generator) -> TestReport:
    """Compare an interior statistic of sampled ensembles with fresh interior redraws.

    Samples are split into two independent halves: the statistic of the
    first half as sampled is compared with the statistic of the second half
    after its interior is redrawn from the avoiding law given its own
    boundary data.  Under the Gibbs property both halves have the same law.
    """
    spec = config.spec
    a, b = config.window
    k1, k2 = config.curves
    ia, ib = a - spec.t0, b - spec.t0
    samples = sample_avoiding(h, spec, config.n_samples, rng, method=config.method)
    half = config.n_samples // 2
    kept, redrawn = samples[:half], samples[half:2 * half]
    boundary = redrawn[:, :, ia:ib + 1]
    mask = spec.mask[ia:ib + 1]
    if k1 == 0:
        upper = np.broadcast_to(spec.f_values[ia:ib + 1], (half, ib - ia + 1))
    else:
        upper = boundary[:, k1 - 1].astype(float)
    lower = boundary[:, k2 + 1].astype(float)
    inner = h if config.interior_sampler == "exact" else flat_hamiltonian(h)
    block = boundary[:, k1:k2 + 1]
    fresh = resample_interior(inner, block[:, :, 0], block[:, :, -1], upper, lower, mask, rng)
    s_kept = _statistic(config, kept[:, k1:k2 + 1, ia:ib + 1])
    s_fresh = _statistic(config, fresh)
    if config.jitter:
        s_kept = s_kept + rng.uniform(-0.5, 0.5, s_kept.size)
        s_fresh = s_fresh + rng.uniform(-0.5, 0.5, s_fresh.size)
    rep = ks_two_sample(s_kept, s_fresh, name="gibbs_resampling", level=config.level)
    rep.metadata.update({"window": [a, b], "curves": [k1, k2],
                         "statistic": config.statistic if isinstance(config.statistic, str) else "custom",
                         "interior_sampler": config.interior_sampler,
                         "spec": spec.to_dict()})
    return rep


def scaled_endpoints(h: Hamiltonian, p: float, x, y, T: int, sigma: float | None = None):
    """Integer data ``floor(sigma sqrt(T) x_i)`` and ``floor(sigma sqrt(T) y_i + pT)``."""
    sigma = tilt_to_mean(h, p).sigma if sigma is None else sigma
    r = sigma * math.sqrt(T)
    xs = tuple(_floor(r * v) for v in x)
    ys = tuple(_floor(r * v + p * T) for v in y)
    return xs, ys


def _floor(v: float) -> int:
    # sigma comes out of a root solve, so exact lattice values land a hair low
    return int(math.floor(v + FLOOR_SLACK * max(1.0, abs(v))))


@dataclass
class ConvergenceResult:
    T_list: list
    reports: list
    distances: list
    successive: list
    monotone: bool
    final_p: float
    level: float
    metadata: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.monotone and self.final_p >= self.level

    def to_dict(self) -> dict:
        return {"T_list": list(self.T_list), "reports": [r.to_dict() for r in self.reports],
                "distances": list(self.distances), "successive": list(self.successive),
                "monotone": self.monotone, "final_p": self.final_p, "level": self.level,
                "passed": self.passed, "metadata": self.metadata}


def convergence_test(h: Hamiltonian, p: float, k: int, x, y, T_list, t: float, n_samples: int,
                     rng: np.random.Generator, level: float = DEFAULT_LEVEL, *,
                     sigma: float | None = None, curve: int = 0, reference: str = "brownian",
                     matched: bool = True, n_reference: int | None = None,
                     reference_m: int = 512, method: str = "rejection") -> ConvergenceResult:
    """Track ``Z^T(t) = (Q(tT) - ptT) / (sigma sqrt T)`` along ``T_list``.

    Every ``T`` is compared with unit-variance avoiding Brownian bridges on
    ``[0, 1]`` sampled with the between-knot crossing correction, or for
    ``reference="gaussian"`` (``k = 1`` only) with the exact Gaussian
    marginal.  With ``matched`` the reference starts and ends at the rescaled
    integer data ``(x^T - 0) / (sigma_p sqrt T)``, ``(y^T - pT) / (sigma_p sqrt T)``
    of each ``T``; otherwise at the limit data ``x``, ``y`` for all ``T``.
    Distances use the raw lattice values; p-values use samples jittered
    uniformly within one lattice cell so that their law is continuous.
    ``sigma`` (default: the tilted-jump standard deviation at ``p``) only
    enters the normalization of ``Z``, so a wrong value shows up as a
    dilation.
    """
    x = tuple(float(v) for v in np.atleast_1d(x))
    y = tuple(float(v) for v in np.atleast_1d(y))
    if len(x) != k or len(y) != k:
        raise DomainError(f"need {k} entry and exit values")
    T_list = [int(T) for T in T_list]
    if any(b <= a for a, b in zip(T_list, T_list[1:])):
        raise DomainError("T_list must be strictly increasing")
    if not 0 < t < 1:
        raise DomainError("t must lie in (0, 1)")
    if not 0 <= curve < k:
        raise DomainError(f"curve {curve} outside [0, {k})")
    if reference == "gaussian" and k != 1:
        raise DomainError("the Gaussian reference exists only for k = 1")
    if reference not in ("gaussian", "brownian"):
        raise DomainError(f"unknown reference {reference!r}")
    j = t * reference_m
    if reference == "brownian" and abs(j - round(j)) > 1e-9:
        raise DomainError(f"t={t} is not a point of the {reference_m}-interval reference grid")
    sigma_true = tilt_to_mean(h, p).sigma
    sigma = sigma_true if sigma is None else float(sigma)
    n_reference = n_samples if n_reference is None else n_reference

    def reference_for(xr, yr):
        if reference == "gaussian":
            mean = xr[0] * (1 - t) + yr[0] * t
            sd = math.sqrt(t * (1 - t))
            return None, lambda z: sps.norm.cdf(z, loc=mean, scale=sd)
        ref = sample_avoiding_brownian(1.0, 0.0, 1.0, xr, yr, rng, m=reference_m,
                                       n_samples=n_reference, columns=[int(round(j))],
                                       bridge_correction=True)
        return ref.values[:, curve, 0], None

    if not matched:
        fixed = reference_for(x, y)
    reports, distances, successive, prev = [], [], [], None
    for T in T_list:
        xs, ys = scaled_endpoints(h, p, x, y, T, sigma_true)
        r_true = sigma_true * math.sqrt(T)
        ref_sample, cdf = reference_for([v / r_true for v in xs],
                                        [(v - p * T) / r_true for v in ys]) if matched else fixed
        s = int(math.floor(t * T))
        spec = AvoidanceSpec(0, T, xs, ys)
        draws = sample_avoiding(h, spec, n_samples, rng, method=method, columns=[s])[:, curve, 0]
        r = sigma * math.sqrt(T)
        z = (draws - p * s) / r
        zj = z + rng.uniform(-0.5, 0.5, z.size) / r
        if ref_sample is None:
            raw = ks_one_sample(z, cdf).statistic
            rep = ks_one_sample(zj, cdf, name=f"convergence_T{T}", level=level)
        else:
            raw = ks_distance(z, ref_sample)
            rep = ks_two_sample(zj, ref_sample, name=f"convergence_T{T}", level=level)
        rep.metadata.update({"T": T, "raw_distance": raw, "x": list(xs), "y": list(ys), "s": s,
                             "sigma": sigma})
        reports.append(rep)
        distances.append(raw)
        if prev is not None:
            successive.append(ks_distance(prev, zj))
        prev = zj
    monotone = all(b <= a for a, b in zip(distances, distances[1:]))
    return ConvergenceResult(T_list, reports, distances, successive, monotone,
                             reports[-1].p_value, level,
                             {"p": p, "k": k, "t": t, "sigma": sigma, "sigma_p": sigma_true,
                              "reference": reference, "matched": matched,
                              "n_samples": n_samples,
                              "n_reference": n_reference if reference == "brownian" else None})
