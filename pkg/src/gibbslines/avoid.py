"""Avoiding random-walk line ensembles.

``k`` independent bridges on ``[t0, t1]`` conditioned on the weak ordering
``f >= Q_1 >= ... >= Q_k >= g`` at every time of the constraint set ``S``.
Three samplers are provided: exact rejection from free bridges, the single
site Metropolis chain started from the maximal configuration, and a pair of
such chains driven by shared randomness (the monotone coupling).

Curves are indexed from 0 (top) to k-1 (bottom); times are absolute.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .bridge import BridgeSpec, enumerate_paths, sample_bridges
from .errors import AcceptanceTooSmallError, DomainError, InfeasibleError, TooLargeError
from .hamiltonian import Hamiltonian, validate
from .stats import binomial_ci

DEFAULT_MAX_TRIES = 10**7
DEFAULT_ENUMERATION_CAP = 10**7
_BATCH_ELEMENTS = 4_000_000


def _barrier(values, n, fill):
    if values is None:
        return None
    arr = np.asarray(values, dtype=float)
    if arr.shape != (n + 1,):
        raise DomainError(f"barrier needs {n + 1} values, got shape {arr.shape}")
    if np.all(arr == fill):
        return None
    return tuple(arr.tolist())


@dataclass(frozen=True)
class AvoidanceSpec:
    """Entry/exit data, barriers and constraint set of an avoiding ensemble.

    ``f``/``g`` are per-time barrier values on ``[t0, t1]`` (``None`` for
    +inf / -inf).  ``S`` lists the constrained times; ``None`` means all.
    """

    t0: int
    t1: int
    x: tuple
    y: tuple
    f: tuple | None = None
    g: tuple | None = None
    S: tuple | None = None

    def __post_init__(self):
        if self.t1 <= self.t0:
            raise DomainError("avoidance spec needs t0 < t1")
        x = tuple(int(v) for v in np.atleast_1d(self.x))
        y = tuple(int(v) for v in np.atleast_1d(self.y))
        if len(x) != len(y) or not x:
            raise DomainError("entry and exit data need the same positive length")
        if any(a < b for a, b in zip(x, x[1:])) or any(a < b for a, b in zip(y, y[1:])):
            raise DomainError("entry and exit data must be weakly decreasing")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        n = self.t1 - self.t0
        object.__setattr__(self, "f", _barrier(self.f, n, math.inf))
        object.__setattr__(self, "g", _barrier(self.g, n, -math.inf))
        if self.S is not None:
            s = tuple(sorted(set(int(t) for t in self.S)))
            if s and (s[0] < self.t0 or s[-1] > self.t1):
                raise DomainError("constraint set must lie inside [t0, t1]")
            object.__setattr__(self, "S", None if s == tuple(range(self.t0, self.t1 + 1)) else s)

    @property
    def k(self) -> int:
        return len(self.x)

    @property
    def n(self) -> int:
        return self.t1 - self.t0

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.t0, self.t1 + 1)

    @property
    def mask(self) -> np.ndarray:
        m = np.zeros(self.n + 1, dtype=bool)
        if self.S is None:
            m[:] = True
        else:
            m[np.asarray(self.S, dtype=int) - self.t0] = True
        return m

    @property
    def f_values(self) -> np.ndarray:
        return np.full(self.n + 1, math.inf) if self.f is None else np.asarray(self.f)

    @property
    def g_values(self) -> np.ndarray:
        return np.full(self.n + 1, -math.inf) if self.g is None else np.asarray(self.g)

    def bridge(self, i: int) -> BridgeSpec:
        return BridgeSpec(self.t0, self.t1, self.x[i], self.y[i])

    def check_bridges(self, h: Hamiltonian) -> None:
        for i in range(self.k):
            self.bridge(i).check(h)

    def to_dict(self) -> dict:
        enc = lambda v: None if v is None else [None if math.isinf(a) else a for a in v]
        return {"t0": self.t0, "t1": self.t1, "x": list(self.x), "y": list(self.y),
                "f": enc(self.f), "g": enc(self.g),
                "S": None if self.S is None else list(self.S)}

    @classmethod
    def from_dict(cls, d: dict) -> "AvoidanceSpec":
        def dec(v, fill):
            return None if v is None else [fill if a is None else a for a in v]
        return cls(int(d["t0"]), int(d["t1"]), tuple(d["x"]), tuple(d["y"]),
                   dec(d.get("f"), math.inf), dec(d.get("g"), -math.inf), d.get("S"))


@dataclass(frozen=True, eq=False)
class DiscreteEnsemble:
    """``k`` integer curves on ``[t0, t0 + n]``; row 0 is the top curve."""

    t0: int
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=np.int64, ndmin=2)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def k(self) -> int:
        return self.values.shape[0]

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.t0, self.t0 + self.values.shape[1])

    def curve(self, i: int) -> np.ndarray:
        return self.values[i]

    def key(self) -> bytes:
        return self.values.tobytes()

    def __eq__(self, other):
        return (isinstance(other, DiscreteEnsemble) and self.t0 == other.t0
                and np.array_equal(self.values, other.values))

    def __hash__(self):
        return hash((self.t0, self.key()))


def avoids(values, spec: AvoidanceSpec) -> np.ndarray | bool:
    """Whether curves satisfy the weak avoidance event on ``S``.

    ``values`` has shape ``(..., k, n+1)``; the result has shape ``(...)``.
    """
    v = np.asarray(values)
    m = spec.mask
    vm = v[..., m]
    ok = np.all(vm[..., :-1, :] >= vm[..., 1:, :], axis=(-2, -1))
    if spec.f is not None:
        ok &= np.all(vm[..., 0, :] <= spec.f_values[m], axis=-1)
    if spec.g is not None:
        ok &= np.all(vm[..., -1, :] >= spec.g_values[m], axis=-1)
    return ok


def _greatest_path(h, t0, x, y, cap):
    """Largest path from ``x`` to ``y`` with jumps in ``[alpha, beta]`` below ``cap``."""
    n = cap.size - 1
    if cap[0] < x or cap[-1] < y:
        return None
    m = np.floor(np.minimum(cap, np.iinfo(np.int64).max // 4)).astype(np.int64)
    m[0], m[-1] = x, y
    for t in range(1, n + 1):
        m[t] = min(m[t], m[t - 1] + h.beta)
    for t in range(n - 1, -1, -1):
        m[t] = min(m[t], m[t + 1] - h.alpha)
    if m[0] != x or m[-1] != y:
        return None
    inc = np.diff(m)
    if np.any(inc < h.alpha) or np.any(inc > h.beta):
        return None
    return m


def maximal_config(spec: AvoidanceSpec, h: Hamiltonian) -> DiscreteEnsemble:
    """Pointwise greatest element of the avoiding set.

    Without barriers and with ``alpha = 0`` this is
    ``min(x_i + beta (t - t0), y_i)``.  In general each curve, top to bottom,
    is the largest admissible path lying below the curve above it (or ``f``)
    on ``S``; the set is a lattice under pointwise max, so the greedy choice is
    the maximum and the final ``g`` check decides feasibility.
    """
    spec.check_bridges(h)
    mask = spec.mask
    n = spec.n
    curves = []
    above = spec.f_values
    for i in range(spec.k):
        cap = np.where(mask, above, math.inf)
        path = _greatest_path(h, spec.t0, spec.x[i], spec.y[i], cap)
        if path is None:
            raise InfeasibleError(f"no admissible curve {i} below the curve above it")
        curves.append(path)
        above = path.astype(float)
    g = spec.g_values
    if np.any(curves[-1][mask] < g[mask]):
        raise InfeasibleError("the maximal configuration falls below the bottom barrier")
    return DiscreteEnsemble(spec.t0, np.vstack(curves).reshape(spec.k, n + 1))


def is_feasible(spec: AvoidanceSpec, h: Hamiltonian) -> bool:
    try:
        maximal_config(spec, h)
    except InfeasibleError:
        return False
    return True


class MetropolisChain:
    """Single-site Metropolis dynamics on the avoiding set.

    A move ``(i, t, zeta)`` proposes ``Q_i(t) += zeta``; it is accepted iff the
    candidate stays admissible and avoiding and the weight ratio of the two
    affected jumps is at least the uniform ``u``.  Moves at ``t0``/``t1`` are
    always rejected.
    """

    def __init__(self, h: Hamiltonian, spec: AvoidanceSpec, state=None):
        self.h = h
        self.spec = spec
        if state is None:
            state = maximal_config(spec, h)
        vals = np.asarray(state.values if isinstance(state, DiscreteEnsemble) else state)
        if vals.shape != (spec.k, spec.n + 1):
            raise DomainError("state shape does not match the spec")
        self._rows = [list(map(int, r)) for r in vals]
        self._mask = spec.mask.tolist()
        self._f = spec.f_values.tolist()
        self._g = spec.g_values.tolist()
        self._steps = h.energy_steps
        self.accepted = 0
        self.proposed = 0

    @property
    def values(self) -> np.ndarray:
        return np.array(self._rows, dtype=np.int64)

    @property
    def state(self) -> DiscreteEnsemble:
        return DiscreteEnsemble(self.spec.t0, self.values)

    def log_ratio(self, i: int, s: int, zeta: int) -> float | None:
        """Log weight ratio of the move at column ``s``; ``None`` if inadmissible."""
        rows, alpha, beta = self._rows, self.h.alpha, self.h.beta
        if s <= 0 or s >= self.spec.n:
            return None
        row = rows[i]
        v = row[s]
        a = v - row[s - 1]
        b = row[s + 1] - v
        D = self._steps
        if zeta > 0:
            if a >= beta or b <= alpha:
                return None
            if self._mask[s]:
                if (i == 0 and v + 1 > self._f[s]) or (i > 0 and v + 1 > rows[i - 1][s]):
                    return None
            return D[b - 1 - alpha] - D[a - alpha]
        if a <= alpha or b >= beta:
            return None
        if self._mask[s]:
            k = len(rows)
            if (i == k - 1 and v - 1 < self._g[s]) or (i < k - 1 and v - 1 < rows[i + 1][s]):
                return None
        return D[a - 1 - alpha] - D[b - alpha]

    def step(self, i: int, t: int, zeta: int, u: float) -> bool:
        s = t - self.spec.t0
        self.proposed += 1
        lr = self.log_ratio(i, s, zeta)
        if lr is None:
            return False
        if lr >= 0.0 or u <= math.exp(lr):
            self._rows[i][s] += zeta
            self.accepted += 1
            return True
        return False

    def run(self, n_steps: int, rng: np.random.Generator, chunk: int = 65536) -> None:
        done = 0
        while done < n_steps:
            m = min(chunk, n_steps - done)
            self._run_moves(*draw_moves(self.spec, rng, m))
            done += m

    def _run_moves(self, moves_i, moves_t, moves_z, moves_u) -> None:
        # inlined copy of step()/log_ratio() for speed; keep the two in sync
        rows, mask, f, g, D = self._rows, self._mask, self._f, self._g, self._steps
        alpha, beta = self.h.alpha, self.h.beta
        t0, n, last = self.spec.t0, self.spec.n, len(rows) - 1
        exp = math.exp
        acc = 0
        for i, t, z, u in zip(moves_i, moves_t, moves_z, moves_u):
            s = t - t0
            if s <= 0 or s >= n:
                continue
            row = rows[i]
            v = row[s]
            a = v - row[s - 1]
            b = row[s + 1] - v
            if z > 0:
                if a >= beta or b <= alpha:
                    continue
                if mask[s] and v + 1 > (f[s] if i == 0 else rows[i - 1][s]):
                    continue
                lr = D[b - 1 - alpha] - D[a - alpha]
            else:
                if a <= alpha or b >= beta:
                    continue
                if mask[s] and v - 1 < (g[s] if i == last else rows[i + 1][s]):
                    continue
                lr = D[a - 1 - alpha] - D[b - alpha]
            if lr >= 0.0 or u <= exp(lr):
                row[s] = v + z
                acc += 1
        self.proposed += len(moves_i)
        self.accepted += acc


class ParallelChains:
    """Independent copies of the single-site chain advanced in lockstep.

    Same move set and acceptance rule as ``MetropolisChain``; the state is a
    float array padded with the barriers as rows ``0`` and ``k+1`` so that the
    neighbour lookups need no special cases.
    """

    def __init__(self, h: Hamiltonian, spec: AvoidanceSpec, n_chains: int, state=None):
        if n_chains < 1:
            raise DomainError("need at least one chain")
        self.h = h
        self.spec = spec
        if state is None:
            state = maximal_config(spec, h)
        vals = np.asarray(state.values if isinstance(state, DiscreteEnsemble) else state)
        if vals.shape != (spec.k, spec.n + 1):
            raise DomainError("state shape does not match the spec")
        pad = np.vstack([spec.f_values, vals.astype(float), spec.g_values])
        self._P = np.repeat(pad[None], n_chains, axis=0)
        self._D = np.asarray(h.energy_steps, dtype=float)
        self._c = np.arange(n_chains)
        self.accepted = 0
        self.proposed = 0

    @property
    def n_chains(self) -> int:
        return self._c.size

    @property
    def values(self) -> np.ndarray:
        return self._P[:, 1:-1].astype(np.int64)

    def step(self, i, s, zeta, u) -> np.ndarray:
        """One proposal per chain at curve ``i`` and column ``s``; returns the accept mask."""
        P, c, D = self._P, self._c, self._D
        alpha, beta, n = self.h.alpha, self.h.beta, self.spec.n
        r = i + 1
        v = P[c, r, s]
        a = v - P[c, r, np.maximum(s - 1, 0)]
        b = P[c, r, np.minimum(s + 1, n)] - v
        up = zeta > 0
        masked = self.spec.mask[s]
        ok_up = (a < beta) & (b > alpha) & (~masked | (v + 1 <= P[c, r - 1, s]))
        ok_dn = (a > alpha) & (b < beta) & (~masked | (v - 1 >= P[c, r + 1, s]))
        ok = (s > 0) & (s < n) & np.where(up, ok_up, ok_dn)
        last = D.size - 1
        ai = (a - alpha).astype(np.int64)
        bi = (b - alpha).astype(np.int64)
        lr = np.where(up, D[np.clip(bi - 1, 0, last)] - D[np.clip(ai, 0, last)],
                      D[np.clip(ai - 1, 0, last)] - D[np.clip(bi, 0, last)])
        with np.errstate(over="ignore"):
            acc = ok & ((lr >= 0.0) | (u <= np.exp(np.minimum(lr, 0.0))))
        P[c[acc], r[acc], s[acc]] += zeta[acc]
        self.accepted += int(acc.sum())
        self.proposed += c.size
        return acc

    def run(self, n_steps: int, rng: np.random.Generator, block: int = 256) -> None:
        """``n_steps`` proposals in every chain."""
        k, n, C = self.spec.k, self.spec.n, self.n_chains
        done = 0
        while done < n_steps:
            m = min(block, n_steps - done)
            i = rng.integers(0, k, (m, C))
            s = rng.integers(0, n + 1, (m, C))
            z = 2 * rng.integers(0, 2, (m, C)) - 1
            u = rng.random((m, C))
            for j in range(m):
                self.step(i[j], s[j], z[j], u[j])
            done += m


def draw_moves(spec: AvoidanceSpec, rng: np.random.Generator, size: int):
    """Uniform triplets ``(i, t, zeta)`` plus uniforms ``u``, as Python lists."""
    i = rng.integers(0, spec.k, size)
    t = rng.integers(spec.t0, spec.t1 + 1, size)
    zeta = 2 * rng.integers(0, 2, size) - 1
    u = rng.random(size)
    return i.tolist(), t.tolist(), zeta.tolist(), u.tolist()


def mh_step(state: DiscreteEnsemble, spec: AvoidanceSpec, h: Hamiltonian, move, u: float) -> DiscreteEnsemble:
    """Apply one Metropolis update to ``state`` and return the resulting state."""
    i, t, zeta = move
    if not spec.t0 <= t <= spec.t1 or zeta not in (-1, 1) or not 0 <= i < spec.k:
        raise DomainError(f"invalid move {move}")
    chain = MetropolisChain(h, spec, state)
    chain.step(i, t, zeta, u)
    return chain.state


def transition_probability(h: Hamiltonian, spec: AvoidanceSpec, omega, tau) -> float:
    """Exact one-step probability of moving from ``omega`` to a different ``tau``."""
    a = np.asarray(getattr(omega, "values", omega))
    b = np.asarray(getattr(tau, "values", tau))
    diff = np.argwhere(a != b)
    if len(diff) != 1:
        return 0.0
    i, s = map(int, diff[0])
    zeta = int(b[i, s] - a[i, s])
    if abs(zeta) != 1:
        return 0.0
    lr = MetropolisChain(h, spec, a).log_ratio(i, s, zeta)
    if lr is None:
        return 0.0
    proposal = 1.0 / (2 * spec.k * (spec.n + 1))
    return proposal * min(1.0, math.exp(lr))


def _batch_size(remaining, z_est, spec):
    per = spec.k * (spec.n + 1)
    want = int(math.ceil(1.2 * remaining / max(z_est, 1e-4))) + 16
    return max(16, min(want, _BATCH_ELEMENTS // per))


def draw_free(h: Hamiltonian, spec: AvoidanceSpec, rng: np.random.Generator, size: int) -> np.ndarray:
    """``size`` draws of ``k`` independent bridges; shape ``(size, k, n+1)``."""
    out = np.empty((size, spec.k, spec.n + 1), dtype=np.int64)
    for i in range(spec.k):
        out[:, i] = sample_bridges(h, spec.n, spec.x[i], spec.y[i], rng, size)
    return out


def _rejection(h, spec, n_samples, rng, max_tries, columns=None):
    chunks, hits, tries = [], 0, 0
    while hits < n_samples:
        if tries >= max_tries:
            z = hits / tries if tries else 0.0
            raise AcceptanceTooSmallError(
                f"only {hits} of {n_samples} accepted after {tries} tries (Z ~ {z:.3g})",
                z, hits, tries)
        z_est = (hits + 1) / (tries + 2)
        size = min(_batch_size(n_samples - hits, z_est, spec), max_tries - tries)
        draws = draw_free(h, spec, rng, size)
        ok = avoids(draws, spec)
        tries += size
        acc = draws[ok] if columns is None else draws[ok][..., columns]
        hits += len(acc)
        chunks.append(acc)
    return np.concatenate(chunks)[:n_samples]


DEFAULT_CHAINS = 1000
THIN_SWEEPS = 10
BURN_IN_SWEEPS = 50


def default_burn_in(spec: AvoidanceSpec) -> int:
    """Fifty sweeps, one sweep being ``k (t1 - t0)`` proposals."""
    return BURN_IN_SWEEPS * spec.k * spec.n


def default_thin(spec: AvoidanceSpec) -> int:
    return THIN_SWEEPS * spec.k * spec.n


def sample_avoiding(h: Hamiltonian, spec: AvoidanceSpec, n_samples: int, rng: np.random.Generator,
                    method: str = "rejection", *, max_tries: int = DEFAULT_MAX_TRIES,
                    burn_in: int | None = None, thin: int | None = None,
                    chains: int | None = None, columns=None) -> np.ndarray:
    """Draw ``n_samples`` avoiding ensembles, shape ``(n_samples, k, n+1)``.

    ``rejection`` gives independent exact draws.  ``metropolis`` starts
    ``chains`` independent chains (default ``min(n_samples, 1000)``) at the
    maximal configuration, discards ``burn_in`` proposals per chain and then
    records every chain after each further ``thin`` proposals; rows are
    ordered record by record.  Draws within a chain are correlated but the
    invariant law is exact.  ``columns`` keeps only the given time indices
    (offsets from ``t0``).
    """
    spec.check_bridges(h)
    start = maximal_config(spec, h)
    width = spec.n + 1 if columns is None else len(np.arange(spec.n + 1)[columns])
    if n_samples == 0:
        return np.empty((0, spec.k, width), dtype=np.int64)
    if method == "rejection":
        return _rejection(h, spec, n_samples, rng, max_tries, columns)
    if method != "metropolis":
        raise DomainError(f"unknown sampling method {method!r}")
    burn_in = default_burn_in(spec) if burn_in is None else burn_in
    thin = default_thin(spec) if thin is None else thin
    n_chains = min(n_samples, DEFAULT_CHAINS) if chains is None else chains
    pc = ParallelChains(h, spec, n_chains, start)
    pc.run(burn_in, rng)
    records = -(-n_samples // n_chains)
    out = np.empty((records, n_chains, spec.k, width), dtype=np.int64)
    for j in range(records):
        pc.run(thin, rng)
        vals = pc.values
        out[j] = vals if columns is None else vals[..., columns]
    return out.reshape(-1, spec.k, width)[:n_samples]


@dataclass
class AcceptanceEstimate:
    z_hat: float
    ci_low: float
    ci_high: float
    n: int
    hits: int

    @property
    def zero_hit(self) -> bool:
        return self.hits == 0

    @property
    def std_error(self) -> float:
        return math.sqrt(self.z_hat * (1 - self.z_hat) / self.n)

    def to_dict(self) -> dict:
        return {"z_hat": self.z_hat, "ci_low": self.ci_low, "ci_high": self.ci_high,
                "n": self.n, "hits": self.hits}


def estimate_acceptance(h: Hamiltonian, spec: AvoidanceSpec, n_samples: int, rng: np.random.Generator,
                        level: float = 0.95) -> AcceptanceEstimate:
    """Fraction of free ``k``-tuples of bridges that satisfy the avoidance event."""
    if n_samples < 1:
        raise DomainError("need at least one sample")
    spec.check_bridges(h)
    hits = done = 0
    while done < n_samples:
        size = min(n_samples - done, _BATCH_ELEMENTS // (spec.k * (spec.n + 1)))
        hits += int(avoids(draw_free(h, spec, rng, size), spec).sum())
        done += size
    lo, hi = binomial_ci(hits, n_samples, level)
    return AcceptanceEstimate(hits / n_samples, lo, hi, n_samples, hits)


def _per_curve_paths(h, spec, cap):
    per = []
    total = 1
    for i in range(spec.k):
        paths, probs = enumerate_paths(h, spec.bridge(i), cap=cap)
        per.append((paths, probs))
        total *= len(paths)
        if total > cap:
            raise TooLargeError(f"more than {cap} path tuples to enumerate")
    return per


def _compatibility(upper, lower, mask):
    return np.all(upper[:, None, mask] >= lower[None, :, mask], axis=-1)


def exact_acceptance(h: Hamiltonian, spec: AvoidanceSpec, cap: int = DEFAULT_ENUMERATION_CAP) -> float:
    """Exact acceptance probability by enumerating admissible paths per curve.

    Neighbouring curves interact only pairwise, so the sum over tuples is a
    product of compatibility matrices.
    """
    per = _per_curve_paths(h, spec, cap)
    mask = spec.mask
    paths0, probs0 = per[0]
    top_ok = np.all(paths0[:, mask] <= spec.f_values[mask], axis=1)
    v = probs0 * top_ok
    for (up, _), (lo, p) in zip(per, per[1:]):
        v = (v @ _compatibility(up, lo, mask)) * p
    last = per[-1][0]
    v = v * np.all(last[:, mask] >= spec.g_values[mask], axis=1)
    return float(v.sum())


def exact_avoiding_law(h: Hamiltonian, spec: AvoidanceSpec, cap: int = DEFAULT_ENUMERATION_CAP):
    """Every avoiding configuration with its conditional probability.

    Returns ``(states, probs)`` with ``states`` of shape ``(M, k, n+1)``.
    """
    per = _per_curve_paths(h, spec, cap)
    mask = spec.mask
    paths0, probs0 = per[0]
    keep = np.flatnonzero(np.all(paths0[:, mask] <= spec.f_values[mask], axis=1))
    idx = keep[:, None]
    w = probs0[keep]
    for c in range(1, spec.k):
        comp = _compatibility(per[c - 1][0], per[c][0], mask)
        rows, cols = np.nonzero(comp[idx[:, -1]])
        idx = np.column_stack([idx[rows], cols])
        w = w[rows] * per[c][1][cols]
    last = per[-1][0][idx[:, -1]]
    ok = np.all(last[:, mask] >= spec.g_values[mask], axis=1)
    idx, w = idx[ok], w[ok]
    if w.size == 0:
        raise InfeasibleError("the avoiding set is empty")
    states = np.stack([per[c][0][idx[:, c]] for c in range(spec.k)], axis=1)
    return states, w / w.sum()


def state_counts(samples: np.ndarray, states: np.ndarray) -> np.ndarray:
    """Occupation counts of ``states`` in ``samples``; last cell counts strays."""
    index = {s.tobytes(): j for j, s in enumerate(np.ascontiguousarray(states))}
    counts = np.zeros(len(states) + 1, dtype=np.int64)
    for s in np.ascontiguousarray(samples):
        counts[index.get(s.tobytes(), len(states))] += 1
    return counts


@dataclass
class CouplingResult:
    low: np.ndarray
    high: np.ndarray
    steps: int
    violations: int
    accepted_low: int
    accepted_high: int
    recorded_steps: list = field(default_factory=list)

    @property
    def ordered(self) -> bool:
        return self.violations == 0

    def to_dict(self) -> dict:
        return {"steps": self.steps, "violations": self.violations,
                "ordered": self.ordered, "accepted_low": self.accepted_low,
                "accepted_high": self.accepted_high, "records": len(self.recorded_steps)}


def check_comparable(h: Hamiltonian, low: AvoidanceSpec, high: AvoidanceSpec) -> None:
    if (low.t0, low.t1, low.k, low.S) != (high.t0, high.t1, high.k, high.S):
        raise DomainError("coupled specs need the same interval, curve count and constraint set")
    if any(a > b for a, b in zip(low.x, high.x)) or any(a > b for a, b in zip(low.y, high.y)):
        raise DomainError("entry/exit data of the low spec must lie below the high spec")
    m = low.mask
    if np.any(low.g_values[m] > high.g_values[m]) or np.any(low.f_values[m] > high.f_values[m]):
        raise DomainError("barriers of the low spec must lie below those of the high spec on S")
    report = validate(h)
    if not report.convex:
        raise DomainError(f"Hamiltonian is not convex (first violation at jump {report.first_violation}); "
                          "the monotone coupling needs convex energies")


def coupled_sample(h: Hamiltonian, low: AvoidanceSpec, high: AvoidanceSpec, n_steps: int,
                   rng: np.random.Generator, record_every: int = 1) -> CouplingResult:
    """Run two Metropolis chains on shared moves and uniforms from their maximal states.

    Every step checks the updated site; every recorded step checks the full
    ensembles.  ``violations`` counts steps at which ``low > high`` anywhere.
    """
    check_comparable(h, low, high)
    x_chain = MetropolisChain(h, low)
    y_chain = MetropolisChain(h, high)
    lows, highs, rec = [], [], []
    violations = 0

    def record(step):
        xv, yv = x_chain.values, y_chain.values
        lows.append(xv)
        highs.append(yv)
        rec.append(step)
        return bool(np.any(xv > yv))

    if record(0):
        violations += 1
    done = 0
    while done < n_steps:
        m = min(65536, n_steps - done)
        for j, (i, t, zeta, u) in enumerate(zip(*draw_moves(low, rng, m))):
            x_chain.step(i, t, zeta, u)
            y_chain.step(i, t, zeta, u)
            s = t - low.t0
            bad = x_chain._rows[i][s] > y_chain._rows[i][s]
            step = done + j + 1
            if step % record_every == 0 or step == n_steps:
                bad = record(step) or bad
            violations += bad
        done += m
    return CouplingResult(np.stack(lows), np.stack(highs), n_steps, violations,
                          x_chain.accepted, y_chain.accepted, rec)
