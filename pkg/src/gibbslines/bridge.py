"""Random-walk bridges with fixed endpoints.

The bridge law on paths from ``(t0, z0)`` to ``(t1, z1)`` is proportional to
the product of jump weights.  Its normalizer is the ``n``-fold convolution of
the jump weights evaluated at the displacement ``z1 - z0``; all of it lives in
log space because products over thousands of steps underflow.
"""
from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DomainError, InfeasibleError, TooLargeError
from .hamiltonian import Hamiltonian

NEG_INF = -math.inf


@dataclass(frozen=True)
class BridgeSpec:
    t0: int
    t1: int
    z0: int
    z1: int

    def __post_init__(self):
        if self.t1 <= self.t0:
            raise DomainError(f"bridge needs t0 < t1, got {self.t0} >= {self.t1}")

    @property
    def n(self) -> int:
        return self.t1 - self.t0

    @property
    def d(self) -> int:
        return self.z1 - self.z0

    def is_feasible(self, h: Hamiltonian) -> bool:
        return h.alpha * self.n <= self.d <= h.beta * self.n

    def check(self, h: Hamiltonian) -> None:
        if not self.is_feasible(h):
            raise InfeasibleError(
                f"displacement {self.d} over {self.n} steps outside "
                f"[{h.alpha * self.n}, {h.beta * self.n}]")

    def reachable(self, h: Hamiltonian, t: int) -> tuple[int, int]:
        """Interval of values at time ``t`` lying on some admissible path."""
        a, b = t - self.t0, self.t1 - t
        lo = max(self.z0 + h.alpha * a, self.z1 - h.beta * b)
        hi = min(self.z0 + h.beta * a, self.z1 - h.alpha * b)
        return lo, hi


@dataclass(frozen=True)
class DiscretePath:
    t0: int
    values: tuple

    @property
    def t1(self) -> int:
        return self.t0 + len(self.values) - 1

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.t0, self.t1 + 1)

    @property
    def increments(self) -> np.ndarray:
        return np.diff(np.asarray(self.values))

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.values, dtype=dtype)


class PartitionTable:
    """Log-weights ``log Z(m, e)`` of all ``m``-step paths with displacement ``e``.

    Row ``m`` covers ``e`` in ``[alpha*m, beta*m]``; entry ``i`` is ``e = alpha*m + i``.
    Rows are appended on demand and never modified afterwards.
    """

    def __init__(self, h: Hamiltonian):
        self.h = h
        self.span = h.beta - h.alpha
        self.rows = [np.zeros(1)]
        self._lock = threading.Lock()

    def extend(self, n: int) -> None:
        if n < len(self.rows):
            return
        with self._lock:
            logw = self.h.logw
            while len(self.rows) <= n:
                prev = self.rows[-1]
                row = np.full(prev.size + self.span, NEG_INF)
                for r, lw in enumerate(logw):
                    seg = row[r:r + prev.size]
                    np.logaddexp(seg, lw + prev, out=seg)
                self.rows.append(row)

    def row(self, m: int) -> np.ndarray:
        self.extend(m)
        return self.rows[m]

    def log_z(self, m: int, d):
        """``log Z(m, d)``; ``-inf`` outside ``[alpha*m, beta*m]``. Vectorized in ``d``."""
        row = self.row(m)
        idx = np.asarray(d) - self.h.alpha * m
        ok = (idx >= 0) & (idx < row.size)
        out = np.where(ok, row[np.clip(idx, 0, row.size - 1)], NEG_INF)
        return float(out) if out.ndim == 0 else out


@lru_cache(maxsize=64)
def partition_table(h: Hamiltonian) -> PartitionTable:
    return PartitionTable(h)


def log_partition(h: Hamiltonian, n: int, d: int) -> float:
    """Log of the total weight of ``n``-step paths with displacement ``d``."""
    if n < 0:
        raise DomainError("step count must be nonnegative")
    return partition_table(h).log_z(n, d)


def _require_state(h, spec, t, z):
    if not spec.t0 <= t < spec.t1:
        raise DomainError(f"time {t} outside [{spec.t0}, {spec.t1})")
    lo, hi = spec.reachable(h, t)
    if not lo <= z <= hi:
        raise DomainError(f"state ({t}, {z}) does not lie on any admissible path")


def step_distribution(h: Hamiltonian, spec: BridgeSpec, t: int, z: int):
    """Conditional law of the value at ``t+1`` given value ``z`` at ``t``.

    Returns ``(next_values, probs)`` over every jump in the support; jumps
    that cannot reach the endpoint get probability zero.
    """
    spec.check(h)
    _require_state(h, spec, t, z)
    m = spec.t1 - t - 1
    logp = h.logw + partition_table(h).log_z(m, spec.z1 - z - h.jumps)
    logp = logp - logp.max()
    p = np.exp(logp)
    return z + h.jumps, p / p.sum()


def sample_bridges(h: Hamiltonian, n: int, z0, z1, rng: np.random.Generator, size: int | None = None):
    """Draw bridges of ``n`` steps from ``z0`` to ``z1``, one per row.

    ``z0`` and ``z1`` may be arrays so that a single call serves bridges with
    differing endpoints.  Returns an integer array of shape ``(size, n+1)``.
    """
    z0 = np.asarray(z0, dtype=np.int64)
    z1 = np.asarray(z1, dtype=np.int64)
    if size is None:
        size = int(np.broadcast(z0, z1).size)
    z0 = np.broadcast_to(z0, (size,))
    z1 = np.broadcast_to(z1, (size,))
    d = z1 - z0
    if np.any(d < h.alpha * n) or np.any(d > h.beta * n):
        raise InfeasibleError(f"some displacement lies outside [{h.alpha * n}, {h.beta * n}]")
    table = partition_table(h)
    table.extend(n)
    jumps, logw = h.jumps, h.logw
    out = np.empty((size, n + 1), dtype=np.int64)
    out[:, 0] = z0
    rem = d.copy()
    cur = z0.copy()
    last = len(jumps) - 1
    for s in range(n):
        m = n - s - 1
        row = table.rows[m]
        idx = rem[:, None] - jumps[None, :] - h.alpha * m
        ok = (idx >= 0) & (idx < row.size)
        lp = np.where(ok, logw + row[np.clip(idx, 0, row.size - 1)], NEG_INF)
        lp -= lp.max(axis=1, keepdims=True)
        cdf = np.cumsum(np.exp(lp), axis=1)
        u = rng.random(size) * cdf[:, -1]
        r = np.minimum((cdf < u[:, None]).sum(axis=1), last)
        step = jumps[r]
        cur += step
        rem -= step
        out[:, s + 1] = cur
    return out


def sample_bridge(h: Hamiltonian, spec: BridgeSpec, rng: np.random.Generator) -> DiscretePath:
    """One exact draw from the bridge law by sequential conditional steps."""
    spec.check(h)
    values = sample_bridges(h, spec.n, spec.z0, spec.z1, rng, size=1)[0]
    return DiscretePath(spec.t0, tuple(values.tolist()))


def path_log_weight(h: Hamiltonian, spec: BridgeSpec, path) -> float:
    """Log of the normalized bridge probability of ``path``."""
    values = np.asarray(path, dtype=np.int64)
    if values.size != spec.n + 1:
        raise DomainError(f"path has {values.size} values, bridge needs {spec.n + 1}")
    if values[0] != spec.z0 or values[-1] != spec.z1:
        raise DomainError("path endpoints do not match the bridge")
    spec.check(h)
    inc = np.diff(values)
    if np.any(inc < h.alpha) or np.any(inc > h.beta):
        return NEG_INF
    return float(h.logw[inc - h.alpha].sum() - log_partition(h, spec.n, spec.d))


def count_paths(h: Hamiltonian, spec: BridgeSpec) -> int:
    """Exact number of admissible paths (integer convolution of indicator weights)."""
    counts = [1]
    span = h.beta - h.alpha
    for _ in range(spec.n):
        new = [0] * (len(counts) + span)
        for i, c in enumerate(counts):
            if c:
                for r in range(span + 1):
                    new[i + r] += c
        counts = new
    i = spec.d - h.alpha * spec.n
    return counts[i] if 0 <= i < len(counts) else 0


def enumerate_paths(h: Hamiltonian, spec: BridgeSpec, cap: int = 10**6):
    """All admissible paths with their bridge probabilities.

    Returns ``(paths, probs)``: an ``(M, n+1)`` integer array and a length ``M``
    probability vector computed from raw weight products (independent of the
    partition table).
    """
    spec.check(h)
    total = count_paths(h, spec)
    if total > cap:
        raise TooLargeError(f"{total} paths exceed the enumeration cap {cap}")
    paths = []
    weights = []
    values = [spec.z0]

    def walk(t, z, logw):
        if t == spec.t1:
            paths.append(tuple(values))
            weights.append(logw)
            return
        lo, hi = spec.reachable(h, t + 1)
        for j in h.support:
            nz = z + j
            if lo <= nz <= hi:
                values.append(nz)
                walk(t + 1, nz, logw - h.energy(j))
                values.pop()

    walk(spec.t0, spec.z0, 0.0)
    lw = np.asarray(weights)
    p = np.exp(lw - lw.max())
    return np.asarray(paths, dtype=np.int64), p / p.sum()
