"""Random-walk jump Hamiltonians on an integer support interval.

A Hamiltonian ``H`` assigns the jump ``j`` the weight ``w(j) = exp(-H(j))``.
Weights are positive on ``[alpha, beta]`` and zero elsewhere.  Infinite
support laws (geometric) are truncated and renormalized so that every
downstream dynamic program works with a finite table.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.special import logsumexp

from .errors import DomainError, NumericError

NORMALIZATION_TOL = 1e-12
CONVEXITY_TOL = 1e-12
TILT_BRACKET = (-50.0, 50.0)
TILT_MAX_ITER = 200
TILT_TOL = 1e-10
GEOMETRIC_TAIL_MASS = 1e-12
GEOMETRIC_MIN_TRUNCATION = 8


@dataclass(frozen=True)
class Hamiltonian:
    """Jump weights on ``[alpha, beta]``.

    ``energies[r]`` is ``H(alpha + r)``; ``weights[r] = exp(-energies[r])``.
    ``infinite_support`` marks a truncated law whose true ``beta`` is +inf.
    """

    kind: str
    params: tuple
    alpha: int
    weights: tuple
    energies: tuple
    infinite_support: bool = False

    def __post_init__(self):
        if len(self.weights) < 2:
            raise DomainError("a Hamiltonian needs at least two support points")
        if len(self.weights) != len(self.energies):
            raise DomainError("weights and energies differ in length")

    @property
    def beta(self) -> int:
        return self.alpha + len(self.weights) - 1

    @property
    def truncation(self) -> int | None:
        return self.beta if self.infinite_support else None

    @property
    def support(self) -> range:
        return range(self.alpha, self.beta + 1)

    @cached_property
    def w(self) -> np.ndarray:
        return np.asarray(self.weights, dtype=float)

    @cached_property
    def logw(self) -> np.ndarray:
        return -np.asarray(self.energies, dtype=float)

    @cached_property
    def jumps(self) -> np.ndarray:
        return np.arange(self.alpha, self.beta + 1)

    @cached_property
    def energy_steps(self) -> tuple:
        """``H(j+1) - H(j)`` for ``j = alpha .. beta-1``.

        For convex laws the running maximum is taken, which removes floating
        point jitter so that coupled Metropolis ratios stay ordered exactly;
        non-convex laws keep their raw differences.
        """
        d = np.diff(np.asarray(self.energies, dtype=float))
        if validate(self).convex:
            d = np.maximum.accumulate(d)
        return tuple(d.tolist())

    def energy(self, j: int) -> float:
        if self.alpha <= j <= self.beta:
            return self.energies[j - self.alpha]
        return math.inf

    def weight(self, j: int) -> float:
        if self.alpha <= j <= self.beta:
            return self.weights[j - self.alpha]
        return 0.0

    @property
    def mean(self) -> float:
        return float(np.dot(self.jumps, self.w) / self.w.sum())

    @property
    def variance(self) -> float:
        p = self.w / self.w.sum()
        m = float(np.dot(self.jumps, p))
        return float(np.dot((self.jumps - m) ** 2, p))

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "params": list(self.params),
            "support": [self.alpha, "inf" if self.infinite_support else self.beta],
            "truncation": self.truncation,
            "weights": list(self.weights),
        }

    def spec_string(self) -> str:
        if self.kind == "weights":
            return "weights:" + ",".join(repr(float(v)) for v in self.params)
        return ":".join([self.kind] + [repr(v) for v in self.params])


def _from_weights(kind, params, raw, alpha=0, normalize=True, infinite_support=False):
    raw = np.asarray(raw, dtype=float)
    if raw.ndim != 1 or raw.size < 2:
        raise DomainError("weights need at least two entries")
    if not np.all(np.isfinite(raw)):
        raise DomainError("weights must be finite")
    if np.any(raw <= 0):
        # zero entries would make some jumps in [alpha, beta] impossible
        bad = int(np.flatnonzero(raw <= 0)[0])
        raise DomainError(f"weight at jump {alpha + bad} is not positive")
    w = raw / raw.sum() if normalize else raw
    energies = -np.log(w)
    return Hamiltonian(kind, tuple(params), int(alpha), tuple(w.tolist()),
                       tuple(energies.tolist()), infinite_support)


def default_geometric_truncation(q: float) -> int:
    """Smallest cap K >= 8 whose discarded tail (1-q)^(K+1) is below 1e-12."""
    k = math.ceil(math.log(GEOMETRIC_TAIL_MASS) / math.log1p(-q)) - 1
    return max(GEOMETRIC_MIN_TRUNCATION, k)


def make_hamiltonian(kind: str, params=(), *, normalize: bool = True, alpha: int = 0) -> Hamiltonian:
    """Build a normalized Hamiltonian.

    ``bernoulli`` takes ``(q,)`` with ``w(0) = q``, ``w(1) = 1 - q``.
    ``geometric`` takes ``(q,)`` or ``(q, truncation)`` with ``w(k) ∝ q(1-q)^k``.
    ``weights`` takes the weight vector itself, placed on ``[alpha, ...]``.
    """
    if np.isscalar(params):
        params = (params,)
    params = tuple(params)
    if kind == "bernoulli":
        if len(params) != 1:
            raise DomainError("bernoulli takes a single parameter q")
        q = float(params[0])
        if not 0.0 < q < 1.0:
            raise DomainError(f"bernoulli q={q} outside (0, 1)")
        w = (q, 1.0 - q)
        return Hamiltonian("bernoulli", (q,), 0, w, (-math.log(q), -math.log1p(-q)))
    if kind == "geometric":
        if len(params) not in (1, 2):
            raise DomainError("geometric takes q and an optional truncation")
        q = float(params[0])
        if not 0.0 < q < 1.0:
            raise DomainError(f"geometric q={q} outside (0, 1)")
        trunc = int(params[1]) if len(params) == 2 else default_geometric_truncation(q)
        if trunc < GEOMETRIC_MIN_TRUNCATION:
            raise DomainError(f"geometric truncation {trunc} < {GEOMETRIC_MIN_TRUNCATION}")
        k = np.arange(trunc + 1)
        log_mass = math.log(-math.expm1((trunc + 1) * math.log1p(-q)))
        # linear energies keep the energy steps exactly constant
        energies = -math.log(q) - k * math.log1p(-q) + log_mass
        w = np.exp(-energies)
        return Hamiltonian("geometric", (q, trunc), 0, tuple(w.tolist()),
                           tuple(energies.tolist()), infinite_support=True)
    if kind == "weights":
        return _from_weights("weights", params, params, alpha=alpha, normalize=normalize)
    raise DomainError(f"unknown Hamiltonian kind {kind!r}")


def parse_hamiltonian(text: str) -> Hamiltonian:
    """Parse ``bernoulli:q``, ``geometric:q[:trunc]`` or ``weights:w0,w1,...``."""
    kind, _, rest = text.strip().partition(":")
    if not rest:
        raise DomainError(f"malformed Hamiltonian spec {text!r}")
    try:
        if kind == "weights":
            return make_hamiltonian(kind, [float(v) for v in rest.split(",")])
        parts = rest.split(":")
        if kind == "geometric" and len(parts) == 2:
            return make_hamiltonian(kind, (float(parts[0]), int(parts[1])))
        return make_hamiltonian(kind, tuple(float(v) for v in parts))
    except ValueError as exc:
        if isinstance(exc, DomainError):
            raise
        raise DomainError(f"malformed Hamiltonian spec {text!r}: {exc}") from None


def hamiltonian_from_dict(d: dict) -> Hamiltonian:
    return make_hamiltonian(d["kind"], d["params"])


@dataclass(frozen=True)
class ValidationReport:
    normalized: bool
    convex: bool
    contiguous: bool
    total_mass: float
    first_violation: int | None = None

    @property
    def ok(self) -> bool:
        return self.normalized and self.convex and self.contiguous


def validate(h: Hamiltonian) -> ValidationReport:
    """Check normalization, positivity on the support and discrete convexity.

    ``first_violation`` is the first jump ``j`` with
    ``H(j-1) + H(j+1) < 2 H(j)``.
    """
    w = np.asarray(h.weights, dtype=float)
    total = float(w.sum())
    normalized = abs(total - 1.0) <= NORMALIZATION_TOL
    contiguous = bool(np.all(w > 0))
    energies = np.asarray(h.energies, dtype=float)
    second = energies[2:] - 2 * energies[1:-1] + energies[:-2]
    scale = np.maximum(1.0, np.abs(energies[1:-1]))
    bad = np.flatnonzero(second < -CONVEXITY_TOL * scale)
    first = int(h.alpha + 1 + bad[0]) if bad.size else None
    return ValidationReport(normalized, first is None, contiguous, total, first)


@dataclass(frozen=True)
class TiltedLaw:
    """Exponential tilt ``w(j) e^{theta j} / norm`` with mean ``p``.

    ``sigma2`` is the variance of the tilted jump law; it plays the role of
    the Brownian bridge variance at slope ``p``.
    """

    theta: float
    p: float
    sigma2: float
    alpha: int
    tilted_weights: tuple

    @property
    def sigma(self) -> float:
        return math.sqrt(self.sigma2)


def _tilted(h: Hamiltonian, theta: float) -> np.ndarray:
    logits = h.logw + theta * h.jumps
    return np.exp(logits - logsumexp(logits))


def tilt_to_mean(h: Hamiltonian, p: float) -> TiltedLaw:
    """Solve for the tilt whose jump law has mean ``p`` by bisection."""
    p = float(p)
    if not h.alpha < p < h.beta:
        raise DomainError(f"slope p={p} outside the open support ({h.alpha}, {h.beta})")
    jumps = h.jumps
    lo, hi = TILT_BRACKET
    for _ in range(TILT_MAX_ITER):
        mid = 0.5 * (lo + hi)
        if float(np.dot(jumps, _tilted(h, mid))) < p:
            lo = mid
        else:
            hi = mid
    theta = 0.5 * (lo + hi)
    probs = _tilted(h, theta)
    mean = float(np.dot(jumps, probs))
    if abs(mean - p) > TILT_TOL:
        raise NumericError(f"tilt solver stalled at theta={theta}: mean {mean} != {p}")
    sigma2 = float(np.dot((jumps - mean) ** 2, probs))
    return TiltedLaw(theta, p, sigma2, h.alpha, tuple(probs.tolist()))


def sigma_p(h: Hamiltonian, p: float) -> float:
    return tilt_to_mean(h, p).sigma
