"""Diffusive rescaling of line ensembles and the diagnostics built on it.

A discrete curve ``L`` becomes ``f(x) = N^{-g/2} (L(x N^g) - p x N^g)`` on
``[-psi, psi]``, extended by constants outside.  The estimators below are
plain Monte Carlo frequencies over stored samples, each with a Wilson
interval.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple

import mpmath
import numpy as np

from .avoid import AvoidanceSpec, DiscreteEnsemble, estimate_acceptance
from .errors import DomainError
from .hamiltonian import Hamiltonian
from .stats import binomial_ci

EXACT_DENOMINATOR_LIMIT = 64
MP_DIGITS = 60


def _as_fraction(v):
    if isinstance(v, Fraction):
        return v
    if isinstance(v, (int, np.integer)):
        return Fraction(int(v))
    if isinstance(v, str):
        return Fraction(v)
    # floats: use the shortest decimal repr so that 0.1 means 1/10
    return Fraction(repr(float(v)))


def _iroot_floor(num: int, den: int, b: int) -> int:
    """Largest integer ``m >= 0`` with ``m**b * den <= num``."""
    if num <= 0:
        return 0
    guess = int((num / den) ** (1.0 / b)) if num.bit_length() < 1000 else int(
        mpmath.floor(mpmath.root(mpmath.mpf(num) / den, b)))
    m = max(guess - 2, 0)
    while (m + 1) ** b * den <= num:
        m += 1
    while m > 0 and m ** b * den > num:
        m -= 1
    return m


def lattice_floor(x, N: int, gamma) -> int:
    """Exact ``floor(x * N**gamma)`` for rational ``x`` and ``gamma``.

    ``x`` and ``gamma`` may be ints, Fractions, decimal strings or floats
    (read through their shortest repr).  Negative ``x`` rounds toward -inf.
    Exponents whose reduced denominator exceeds 64 fall back to 60-digit
    arithmetic.
    """
    if N < 1:
        raise DomainError(f"N must be a positive integer, got {N}")
    xf, gf = _as_fraction(x), _as_fraction(gamma)
    if gf <= 0:
        raise DomainError(f"gamma must be positive, got {gamma}")
    if xf == 0:
        return 0
    a, b = gf.numerator, gf.denominator
    if b > EXACT_DENOMINATOR_LIMIT:
        with mpmath.workdps(MP_DIGITS):
            val = mpmath.mpf(xf.numerator) / xf.denominator * mpmath.power(N, mpmath.mpf(a) / b)
            return int(mpmath.floor(val))
    # |x| N^(a/b) = y with y^b = |x|^b N^a = num/den
    ax = abs(xf)
    num = ax.numerator ** b * N ** a
    den = ax.denominator ** b
    m = _iroot_floor(num, den, b)
    if xf > 0:
        return m
    return -m if m ** b * den == num else -(m + 1)


@dataclass(frozen=True)
class ScalingParams:
    gamma: float
    p: float
    lam: float
    theta: float
    N: int
    psi: float

    def __post_init__(self):
        if not self.gamma > 0:
            raise DomainError("gamma must be positive")
        if not self.lam > 0:
            raise DomainError("lambda must be positive")
        if not 0 <= self.theta < 2:
            raise DomainError("theta must lie in [0, 2)")
        if self.N < 1:
            raise DomainError("N must be a positive integer")
        if not self.psi > 0:
            raise DomainError("psi must be positive")

    @property
    def time_scale(self) -> float:
        return float(self.N) ** float(self.gamma)

    @property
    def space_scale(self) -> float:
        return float(self.N) ** (float(self.gamma) / 2)

    def lattice(self, x) -> int:
        return lattice_floor(x, self.N, self.gamma)

    def to_dict(self) -> dict:
        return {"gamma": float(self.gamma), "p": float(self.p), "lambda": float(self.lam),
                "theta": float(self.theta), "N": self.N, "psi": float(self.psi)}


class ScaledCurve(NamedTuple):
    x: np.ndarray
    f: np.ndarray


@dataclass(frozen=True, eq=False)
class ScaledEnsemble:
    """Piecewise-linear curves through ``(knots, values[i])``, constant outside."""

    knots: np.ndarray
    values: np.ndarray
    psi: float

    @property
    def k(self) -> int:
        return self.values.shape[0]

    def curve(self, i: int) -> ScaledCurve:
        return ScaledCurve(self.knots, self.values[i])

    def __call__(self, x, i: int | None = None):
        if i is not None:
            return np.interp(x, self.knots, self.values[i])
        return np.stack([np.interp(x, self.knots, row) for row in self.values])


def scaled_embed(ensemble: DiscreteEnsemble, params: ScalingParams) -> ScaledEnsemble:
    """Rescale a discrete ensemble onto ``[-psi, psi]``.

    Knots sit at every lattice time ``t / N^g`` inside the window, plus
    ``+-psi`` themselves where the curve is linearly interpolated.
    """
    lo = -params.lattice(-params.psi)  # ceil(psi N^g)
    hi = params.lattice(params.psi)
    t_first, t_last = ensemble.t0, ensemble.t0 + ensemble.values.shape[1] - 1
    if t_first > -lo or t_last < lo:
        raise DomainError(
            f"ensemble on [{t_first}, {t_last}] does not cover [-{lo}, {lo}] = psi*N^gamma window")
    scale = params.time_scale
    ts = np.arange(-hi, hi + 1, dtype=float)
    edge = params.psi * scale
    s = ts
    if hi < edge:
        s = np.concatenate([[-edge], ts, [edge]])
    x = s / scale
    x[0], x[-1] = -params.psi, params.psi
    times = ensemble.times.astype(float)
    vals = np.asarray(ensemble.values, dtype=float)
    L = np.stack([np.interp(s, times, row) for row in vals])
    f = (L - params.p * s) / params.space_scale
    return ScaledEnsemble(x, f, float(params.psi))


def unscale(scaled: ScaledEnsemble, params: ScalingParams, t) -> np.ndarray:
    """Recover ``L_i(t)`` at integer times ``t``; shape ``(k, len(t))``."""
    t = np.asarray(t, dtype=float)
    return params.space_scale * scaled(t / params.time_scale) + params.p * t


@dataclass(frozen=True)
class DiagnosticRow:
    n: float
    estimate: float
    ci_low: float
    ci_high: float
    n_samples: int

    def to_dict(self) -> dict:
        return {"n": self.n, "estimate": self.estimate, "ci_low": self.ci_low,
                "ci_high": self.ci_high, "n_samples": self.n_samples}


def _row(key, hits, total, level):
    lo, hi = binomial_ci(hits, total, level)
    return DiagnosticRow(key, hits / total, lo, hi, total)


def top_curve_at_lattice(samples, t0: int, params: ScalingParams, n_values) -> dict:
    """Top-curve values ``L_1(floor(n N^g))`` from an ``(S, k, m)`` sample array."""
    samples = np.asarray(samples)
    out = {}
    for n in n_values:
        idx = params.lattice(n) - t0
        if not 0 <= idx < samples.shape[-1]:
            raise DomainError(f"lattice time for n={n} lies outside the sampled domain")
        out[n] = samples[:, 0, idx]
    return out


def parabola_diagnostic(samples: dict, params: ScalingParams, phi: float,
                        level: float = 0.95) -> list[DiagnosticRow]:
    """Frequency of ``|N^{-g/2}(L_1(s_n) - p s_n) + lam n^2| >= phi + |n|^theta``.

    ``samples`` maps each ``n`` to the observed ``L_1(s_n)`` with
    ``s_n = floor(n N^g)``.  ``0**0`` counts as 1.
    """
    rows = []
    for n, vals in samples.items():
        vals = np.asarray(vals, dtype=float).ravel()
        if vals.size == 0:
            raise DomainError(f"no samples at n={n}")
        s = params.lattice(n)
        dev = np.abs((vals - params.p * s) / params.space_scale + params.lam * float(n) ** 2)
        slack = phi + abs(float(n)) ** params.theta
        rows.append(_row(float(n), int(np.count_nonzero(dev >= slack)), vals.size, level))
    return rows


@dataclass(frozen=True)
class TailEstimate:
    estimate: float
    ci_low: float
    ci_high: float
    hits: int
    n: int

    def to_dict(self) -> dict:
        return {"estimate": self.estimate, "ci_low": self.ci_low, "ci_high": self.ci_high,
                "hits": self.hits, "n": self.n}


def extreme_tail_estimate(samples, t0: int, params: ScalingParams, side: str, R: float,
                          t3: int, curve: int | None = None, level: float = 0.95) -> TailEstimate:
    """Estimate the upper tail of ``sup (L_1 - ps)`` or lower tail of ``inf (L_{k-1} - ps)``.

    The window is the integer interval ``[-t3, t3]`` and the threshold is
    ``R N^{g/2}``.  ``curve`` (0-based) overrides the default curve: the top
    one for ``sup_top``, the second to last one for ``inf_bottom``.
    """
    samples = np.asarray(samples)
    if samples.ndim != 3:
        raise DomainError("samples must have shape (S, k, m)")
    k = samples.shape[1]
    if curve is None:
        curve = 0 if side == "sup_top" else max(k - 2, 0)
    lo, hi = -t3 - t0, t3 - t0
    if lo < 0 or hi >= samples.shape[2]:
        raise DomainError(f"window [-{t3}, {t3}] exceeds the sampled domain")
    s = np.arange(-t3, t3 + 1)
    centered = samples[:, curve, lo:hi + 1] - params.p * s
    thr = R * params.space_scale
    if side == "sup_top":
        hit = centered.max(axis=1) >= thr
    elif side == "inf_bottom":
        hit = centered.min(axis=1) <= -thr
    else:
        raise DomainError(f"unknown side {side!r}")
    h = int(hit.sum())
    ci = binomial_ci(h, samples.shape[0], level)
    return TailEstimate(h / samples.shape[0], ci[0], ci[1], h, samples.shape[0])


def min_gap_profile(samples, t0: int, t: int, delta_grid, T: float | None = None,
                    level: float = 0.95) -> list[DiagnosticRow]:
    """Frequency of ``min_i (Q_i(t) - Q_{i+1}(t)) < delta sqrt(T)`` for each delta.

    ``T`` defaults to the sampled horizon.  Rows carry ``delta`` in the ``n``
    field.
    """
    samples = np.asarray(samples)
    if samples.ndim != 3 or samples.shape[1] < 2:
        raise DomainError("min gap needs at least two curves")
    T = samples.shape[2] - 1 if T is None else T
    idx = t - t0
    if not 0 <= idx < samples.shape[2]:
        raise DomainError(f"time {t} outside the sampled domain")
    col = samples[:, :, idx]
    gaps = np.sort(np.min(col[:, :-1] - col[:, 1:], axis=1))
    rows = []
    for d in delta_grid:
        hits = int(np.searchsorted(gaps, d * math.sqrt(T), side="left"))
        rows.append(_row(float(d), hits, gaps.size, level))
    return rows


def _sliding_extrema(x, f, delta):
    """For each j: max and min of ``f[i]`` over ``i <= j`` with ``x[j] - x[i] < delta``."""
    mx, mn = np.empty_like(f), np.empty_like(f)
    qmax, qmin = deque(), deque()
    left = 0
    for j in range(x.size):
        while x[j] - x[left] >= delta:
            left += 1
        while qmax and f[qmax[-1]] <= f[j]:
            qmax.pop()
        qmax.append(j)
        while qmin and f[qmin[-1]] >= f[j]:
            qmin.pop()
        qmin.append(j)
        while qmax[0] < left:
            qmax.popleft()
        while qmin[0] < left:
            qmin.popleft()
        mx[j], mn[j] = f[qmax[0]], f[qmin[0]]
    return mx, mn


def modulus_of_continuity(curve, delta: float, window=None) -> float:
    """``sup |f(x) - f(y)|`` over knot pairs in ``window`` with ``|x - y| < delta``."""
    if not delta > 0:
        raise DomainError("delta must be positive")
    x, f = (np.asarray(v, dtype=float) for v in curve)
    if window is not None:
        a, b = window
        keep = (x >= a) & (x <= b)
        x, f = x[keep], f[keep]
    if x.size == 0:
        raise DomainError("window contains no grid points")
    mx, mn = _sliding_extrema(x, f, delta)
    return float(max(np.max(mx - f), np.max(f - mn)))


def separation_fixture(h: Hamiltonian, p: float, T: int, C: float, k: int) -> AvoidanceSpec:
    """``k-1`` curves spaced ``ceil(C sqrt T)`` apart with slope ``p`` and a lower
    barrier at least ``C sqrt T`` under the line of the last one."""
    if k < 2:
        raise DomainError("the separation fixture needs k >= 2")
    z = p * T
    if abs(z - round(z)) > 1e-9:
        raise DomainError(f"p*T = {z} is not an integer")
    z = int(round(z))
    if not h.alpha * T <= z <= h.beta * T:
        raise DomainError("slope outside the jump support")
    c = math.ceil(C * math.sqrt(T))
    x = tuple(-i * c for i in range(k - 1))
    y = tuple(v + z for v in x)
    s = np.arange(T + 1)
    g = np.floor(x[-1] + z * s / T - C * math.sqrt(T))
    return AvoidanceSpec(0, T, x, y, g=g)


def separation_frequency(h: Hamiltonian, p: float, T: int, C: float, k: int, n_samples: int,
                         rng: np.random.Generator):
    """Monte Carlo probability of the ordered-above-barrier event on the fixture."""
    return estimate_acceptance(h, separation_fixture(h, p, T, C, k), n_samples, rng)
