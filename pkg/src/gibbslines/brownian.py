"""Brownian bridges, their extreme-value laws and avoiding Brownian ensembles.

Bridges with variance ``sigma2`` on ``[a, b]`` are
``sqrt(sigma2 (b-a)) * Bt((t-a)/(b-a))`` plus the chord from ``x`` to ``y``,
where ``Bt(u) = W(u) - u W(1)`` is a standard bridge on ``[0, 1]``.
Continuous avoidance is checked on the simulation grid only, with strict
inequalities.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import AcceptanceTooSmallError, DomainError

SERIES_TOL = 1e-15
_BATCH_ELEMENTS = 4_000_000


@dataclass(frozen=True, eq=False)
class ContinuousEnsemble:
    """``k`` real curves sampled on a common grid; row 0 is the top curve."""

    grid: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "grid", np.asarray(self.grid, dtype=float))
        object.__setattr__(self, "values", np.array(self.values, dtype=float, ndmin=2))

    @property
    def k(self) -> int:
        return self.values.shape[0]


def uniform_grid(a: float, b: float, m: int) -> np.ndarray:
    """``m + 1`` equally spaced times from ``a`` to ``b``."""
    if not a < b:
        raise DomainError(f"need a < b, got [{a}, {b}]")
    if m < 2:
        raise DomainError(f"grid needs m >= 2 intervals, got {m}")
    g = a + (b - a) * np.arange(m + 1) / m
    g[-1] = b
    return g


def standard_bridges(m: int, rng: np.random.Generator, size: int) -> np.ndarray:
    """Standard bridges ``W(u) - u W(1)`` on the unit grid; shape ``(size, m+1)``."""
    w = np.zeros((size, m + 1))
    np.cumsum(rng.standard_normal((size, m)) * math.sqrt(1.0 / m), axis=1, out=w[:, 1:])
    u = np.arange(m + 1) / m
    return w - u * w[:, -1:]


def brownian_bridges(sigma2, a, b, x, y, m, rng, size) -> np.ndarray:
    """``size`` bridges from ``x`` to ``y`` (scalars or length-``size`` arrays)."""
    if not sigma2 > 0:
        raise DomainError(f"variance must be positive, got {sigma2}")
    grid = uniform_grid(a, b, m)
    u = (grid - a) / (b - a)
    u[-1] = 1.0
    bt = standard_bridges(m, rng, size)
    x = np.asarray(x, dtype=float).reshape(-1, 1)
    y = np.asarray(y, dtype=float).reshape(-1, 1)
    out = math.sqrt(sigma2 * (b - a)) * bt + (1 - u) * x + u * y
    out[:, 0] = x[:, 0]
    out[:, -1] = y[:, 0]
    return out


def sample_brownian_bridge(sigma2, a, b, x, y, m, rng) -> ContinuousEnsemble:
    return ContinuousEnsemble(uniform_grid(a, b, m), brownian_bridges(sigma2, a, b, x, y, m, rng, 1))


def bridge_at(u, sigma2: float, rng: np.random.Generator, size: int) -> np.ndarray:
    """Exact 0-to-0 bridge values on ``[0, 1]`` at arbitrary sorted times ``u``.

    Uses the Markov property: given ``B(v) = z``, ``B(w)`` for ``w > v`` is
    normal with mean ``z (1-w)/(1-v)`` and variance ``sigma2 (w-v)(1-w)/(1-v)``.
    """
    u = np.asarray(u, dtype=float)
    if np.any(np.diff(u) < 0) or (u.size and (u[0] < 0 or u[-1] > 1)):
        raise DomainError("bridge times must be sorted inside [0, 1]")
    out = np.zeros((size, u.size))
    prev_u, prev = 0.0, np.zeros(size)
    for j, w in enumerate(u):
        if w <= 0.0 or w >= 1.0:
            continue
        if w == prev_u:
            out[:, j] = prev
            continue
        mean = prev * (1 - w) / (1 - prev_u)
        sd = math.sqrt(sigma2 * (w - prev_u) * (1 - w) / (1 - prev_u))
        out[:, j] = mean + sd * rng.standard_normal(size)
        prev_u, prev = w, out[:, j]
    return out


def bridge_covariance(s, sigma2: float, T: float = 1.0) -> np.ndarray:
    """Covariance ``sigma2 (u ^ v - u v)`` of a bridge indexed by ``u = s / T``."""
    u = np.asarray(s, dtype=float) / T
    return sigma2 * (np.minimum.outer(u, u) - np.outer(u, u))


def max_tail(sigma2: float, C: float) -> float:
    """``P(max B >= C)`` for a 0-to-0 bridge of variance ``sigma2``: ``exp(-2 C^2 / sigma2)``."""
    if C < 0:
        raise DomainError(f"level C must be nonnegative, got {C}")
    if not sigma2 > 0:
        raise DomainError(f"variance must be positive, got {sigma2}")
    return math.exp(-2.0 * C * C / sigma2)


def _abs_terms(sigma2, C):
    r = 2.0 * C * C / sigma2
    n = 1
    while True:
        yield n, 2.0 * math.exp(-r * n * n)
        n += 1


def max_abs_tail(sigma2: float, C: float, tol: float = 1e-12) -> float:
    """``P(max |B| >= C)`` from the alternating reflection series.

    Summation stops once the next term is below ``tol``, so the truncation
    error is below ``tol``.  ``C = 0`` returns 1.
    """
    if C < 0 or not tol > 0:
        raise DomainError("need C >= 0 and tol > 0")
    if not sigma2 > 0:
        raise DomainError(f"variance must be positive, got {sigma2}")
    if C == 0:
        return 1.0
    total = 0.0
    for n, term in _abs_terms(sigma2, C):
        if term < tol:
            break
        total += term if n % 2 else -term
    return min(1.0, max(0.0, total))


def max_abs_partial_sums(sigma2: float, C: float, n_terms: int) -> np.ndarray:
    """First ``n_terms`` partial sums of the ``max |B|`` series (unclamped)."""
    n = np.arange(1, n_terms + 1)
    terms = 2.0 * (-1.0) ** (n - 1) * np.exp(-2.0 * n * n * C * C / sigma2)
    return np.cumsum(terms)


def prob_abs_below(c: float) -> float:
    """``P(max |B| < c)`` for a standard bridge.

    For ``c >= 1`` sums ``1 - 2 sum (-1)^(n-1) exp(-2 n^2 c^2)``; for small ``c``
    the Jacobi-transformed series ``sqrt(2 pi)/c sum exp(-(2j-1)^2 pi^2 / (8 c^2))``
    avoids cancellation.  Both are truncated below 1e-15 relative size.
    """
    if c <= 0:
        return 0.0
    if c >= 1.0:
        total, n = 0.0, 1
        while True:
            term = math.exp(-2.0 * n * n * c * c)
            if term < SERIES_TOL:
                break
            total += term if n % 2 else -term
            n += 1
        return 1.0 - 2.0 * total
    total, j = 0.0, 1
    while True:
        term = math.exp(-((2 * j - 1) ** 2) * math.pi ** 2 / (8 * c * c))
        if j > 1 and term < SERIES_TOL * total:
            break
        total += term
        j += 1
    return math.sqrt(2 * math.pi) / c * total


def separation_bound(C: float, sigma2: float, k: int, mode: str = "series") -> float:
    """Lower bound on the probability that separated free bridges do not cross.

    ``series``: ``(1/2 - sum (-1)^(n-1) exp(-n^2 C^2 / (8 sigma2)))^(k-1)``.
    ``weak``:   ``(1 - 3 exp(-C^2 / (8 sigma2)))^(k-1)``, valid for
    ``C^2 >= 8 sigma2 log 3``.
    """
    if k < 1:
        raise DomainError("k must be positive")
    if not sigma2 > 0 or C <= 0:
        raise DomainError("need C > 0 and sigma2 > 0")
    if mode == "weak":
        if C * C < 8 * sigma2 * math.log(3):
            raise DomainError("weak separation bound needs C^2 >= 8 sigma2 log 3")
        base = 1.0 - 3.0 * math.exp(-C * C / (8 * sigma2))
    elif mode == "series":
        # the bracket equals P(max |B^sigma| < C/4) / 2
        base = 0.5 * prob_abs_below(C / (4 * math.sqrt(sigma2)))
    else:
        raise DomainError(f"unknown mode {mode!r}")
    return base ** (k - 1)


def separation_series_direct(C: float, sigma2: float, n_max: int = 10_000) -> float:
    """The bracket of the series bound summed term by term (reference form)."""
    total = 0.0
    for n in range(1, n_max + 1):
        term = math.exp(-n * n * C * C / (8 * sigma2))
        if term < SERIES_TOL:
            break
        total += term if n % 2 else -term
    return 0.5 - total


def high_curves_log_bound(k: int, sigma: float, M: float, M1: float) -> float:
    """Log of the lower bound on ``P(Q_k(T/2) - pT/2 >= M sqrt(T))``.

    The bound is
    ``2^(3k/2) / (pi^(k/2) sigma^k) * P(max|B^sigma| < 1)^(2k)
    * exp(-2k (M + M1 + 10k - 4)^2 / sigma^2)``.
    """
    if k < 1 or not sigma > 0 or not M > 0 or not M1 > 0:
        raise DomainError("need k >= 1 and sigma, M, M1 > 0")
    inner = prob_abs_below(1.0 / sigma)
    return (1.5 * k * math.log(2) - 0.5 * k * math.log(math.pi) - k * math.log(sigma)
            + 2 * k * math.log(inner) - 2 * k * (M + M1 + 10 * k - 4) ** 2 / sigma ** 2)


def high_curves_bound(k: int, sigma: float, M: float, M1: float) -> float:
    return math.exp(high_curves_log_bound(k, sigma, M, M1))


def compose_two_bridges(sigma2: float, T: float, t: float, rng: np.random.Generator,
                        grid=None, size: int = 1):
    """Glue two independent bridges at a Gaussian midpoint value.

    ``xi ~ N(0, sigma2 (t/T)(1 - t/T))``; the left bridge has variance
    ``sigma2 t/T`` on ``[0, t]`` and the right one ``sigma2 (T-t)/T`` on ``[t, T]``.
    Returns ``(grid, values, xi)`` with ``values`` of shape ``(size, len(grid))``.
    """
    if not 0 < t < T:
        raise DomainError(f"split point {t} outside (0, {T})")
    grid = np.linspace(0.0, T, 5) if grid is None else np.asarray(grid, dtype=float)
    if np.any(np.diff(grid) < 0) or grid[0] < 0 or grid[-1] > T:
        raise DomainError("grid must be sorted inside [0, T]")
    xi = rng.normal(0.0, math.sqrt(sigma2 * (t / T) * (1 - t / T)), size)
    left = grid <= t
    right = grid >= t
    vals = np.empty((size, grid.size))
    s_l = grid[left]
    b1 = bridge_at(s_l / t, sigma2 * t / T, rng, size)
    vals[:, left] = (s_l / t) * xi[:, None] + b1
    s_r = grid[right & ~left]
    b2 = bridge_at((s_r - t) / (T - t), sigma2 * (T - t) / T, rng, size)
    vals[:, right & ~left] = ((T - s_r) / (T - t)) * xi[:, None] + b2
    return grid, vals, xi


def _barrier_on(barrier, grid, fill):
    if barrier is None:
        return np.full(grid.size, fill)
    if callable(barrier):
        return np.asarray(barrier(grid), dtype=float) * np.ones(grid.size)
    arr = np.asarray(barrier, dtype=float)
    if arr.ndim == 0:
        return np.full(grid.size, float(arr))
    if arr.shape != grid.shape:
        raise DomainError("barrier array must match the grid")
    return arr


def strictly_ordered(values, f_grid, g_grid) -> np.ndarray:
    """``f > row_0 > ... > row_{k-1} > g`` at every grid point; shape ``(...)``."""
    v = np.asarray(values)
    ok = np.all(v[..., :-1, :] > v[..., 1:, :], axis=(-2, -1))
    ok &= np.all(v[..., 0, :] < f_grid, axis=-1)
    ok &= np.all(v[..., -1, :] > g_grid, axis=-1)
    return ok


@dataclass
class AvoidingBrownianSample:
    grid: np.ndarray
    values: np.ndarray  # (n_samples, k, m+1)
    hits: int
    tries: int

    @property
    def acceptance(self) -> float:
        return self.hits / self.tries

    def ensemble(self, j: int = 0) -> ContinuousEnsemble:
        return ContinuousEnsemble(self.grid, self.values[j])


def _log_no_crossing(gaps, var):
    """Log-probability that bridges with variance ``var`` per cell, pinned at
    the positive ``gaps`` on consecutive knots, stay positive in between."""
    with np.errstate(divide="ignore", invalid="ignore"):
        e = np.exp(-2.0 * gaps[..., :-1] * gaps[..., 1:] / var)
        return np.log1p(-np.nan_to_num(e, nan=0.0)).sum(axis=-1)


def crossing_log_weight(values, f_grid, g_grid, sigma2: float, dt: float) -> np.ndarray:
    """Log-probability that strictly ordered grid values stay ordered between knots.

    Each gap between neighbours (and between the extreme curves and the
    barriers, taken linear between knots) is a Brownian bridge per cell;
    the pair factors are multiplied, which is exact for ``k <= 2`` with at
    most one barrier and a close approximation otherwise.
    """
    v = np.asarray(values, dtype=float)
    lw = _log_no_crossing(v[..., :-1, :] - v[..., 1:, :], 2.0 * sigma2 * dt).sum(axis=-1)
    lw = lw + _log_no_crossing(f_grid - v[..., 0, :], sigma2 * dt)
    return lw + _log_no_crossing(v[..., -1, :] - g_grid, sigma2 * dt)


def sample_avoiding_brownian(sigma2, a, b, x, y, rng, *, f=None, g=None, m: int = 256,
                             n_samples: int = 1, max_tries: int = 10**7,
                             columns=None, bridge_correction: bool = False) -> AvoidingBrownianSample:
    """Rejection sampler for strictly avoiding Brownian bridges on a grid.

    Independent bridges are accepted iff ``f > B_1 > ... > B_k > g`` at every
    grid point.  By default crossings strictly between grid points go
    undetected; ``bridge_correction`` additionally rejects with the
    between-knot crossing probability from ``crossing_log_weight``.
    ``columns`` keeps only the given grid indices in the returned sample.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if x.shape != y.shape:
        raise DomainError("entry and exit data need the same length")
    if np.any(np.diff(x) >= 0) or np.any(np.diff(y) >= 0):
        raise DomainError("entry and exit data must be strictly decreasing")
    grid = uniform_grid(a, b, m)
    fg = _barrier_on(f, grid, math.inf)
    gg = _barrier_on(g, grid, -math.inf)
    if not (fg[0] > x[0] and fg[-1] > y[0]):
        raise DomainError("top barrier must lie strictly above the first curve at both ends")
    if not (gg[0] < x[-1] and gg[-1] < y[-1]):
        raise DomainError("bottom barrier must lie strictly below the last curve at both ends")
    k = x.size
    chunks, hits, tries = [], 0, 0
    while hits < n_samples:
        if tries >= max_tries:
            z = hits / tries
            raise AcceptanceTooSmallError(
                f"only {hits} of {n_samples} accepted after {tries} tries", z, hits, tries)
        z_est = (hits + 1) / (tries + 2)
        size = int(math.ceil(1.2 * (n_samples - hits) / z_est)) + 16
        size = max(16, min(size, _BATCH_ELEMENTS // (k * (m + 1)), max_tries - tries))
        draws = np.stack([brownian_bridges(sigma2, a, b, x[i], y[i], m, rng, size)
                          for i in range(k)], axis=1)
        ok = strictly_ordered(draws, fg, gg)
        if bridge_correction:
            u = rng.random(size)
            ok &= np.log(u) < crossing_log_weight(draws, fg, gg, sigma2, (b - a) / m)
        tries += size
        hits += int(ok.sum())
        chunks.append(draws[ok] if columns is None else draws[ok][..., columns])
    if columns is not None:
        grid = grid[columns]
    return AvoidingBrownianSample(grid, np.concatenate(chunks)[:n_samples], hits, tries)


@dataclass
class ExceedanceEstimate:
    """Grid-level and bridge-corrected estimates of ``P(max B >= C)``.

    ``grid`` counts paths whose sampled maximum reaches ``C``; it is biased
    low because excursions between grid points are missed.  ``corrected``
    adds, for every path, the exact probability that the Brownian bridge
    interpolating two grid values crosses ``C``, which removes that bias.
    """

    grid: float
    corrected: float
    grid_se: float
    corrected_se: float
    n: int


def max_exceedance_estimate(paths, C: float, sigma2: float, dt: float) -> ExceedanceEstimate:
    """Estimate ``P(max B >= C)`` from bridge samples on a grid of spacing ``dt``."""
    paths = np.asarray(paths, dtype=float)
    n = paths.shape[0]
    hit = paths.max(axis=1) >= C
    u, v = C - paths[:, :-1], C - paths[:, 1:]
    # between grid points the path is a bridge of variance sigma2*dt
    with np.errstate(divide="ignore"):
        log_stay = np.log1p(-np.exp(-2.0 * np.maximum(u, 0) * np.maximum(v, 0) / (sigma2 * dt)))
    cross = np.where(hit, 1.0, -np.expm1(log_stay.sum(axis=1)))
    g = float(hit.mean())
    c = float(cross.mean())
    return ExceedanceEstimate(g, c, math.sqrt(g * (1 - g) / n), float(cross.std(ddof=1) / math.sqrt(n)), n)
