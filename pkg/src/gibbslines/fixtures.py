"""Small named ensembles used by the tests, the acceptance suite and the scripts.

Every enumerable fixture has at most three curves, horizon at most eight
and at most three jump values, so its avoiding law can be listed exactly.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .avoid import AvoidanceSpec
from .hamiltonian import Hamiltonian, make_hamiltonian


@dataclass(frozen=True)
class Fixture:
    name: str
    h: Hamiltonian
    spec: AvoidanceSpec


def _line(n, slope, offset):
    return np.floor(slope * np.arange(n + 1) + offset)


SYM = make_hamiltonian("bernoulli", 0.5)
THREE_POINT = make_hamiltonian("weights", (0.25, 0.5, 0.25))

# the k=2 fixture whose acceptance probability is exactly 3/4
K2_BERNOULLI = Fixture("k2_bernoulli", SYM, AvoidanceSpec(0, 2, (0, 0), (1, 1)))


def enumerable_fixtures() -> list[Fixture]:
    b3 = make_hamiltonian("bernoulli", 0.3)
    b4 = make_hamiltonian("bernoulli", 0.4)
    b6 = make_hamiltonian("bernoulli", 0.6)
    skew = make_hamiltonian("weights", (0.2, 0.5, 0.3))
    wide = make_hamiltonian("weights", (0.3, 0.4, 0.3))
    return [
        K2_BERNOULLI,
        Fixture("k2_bern03_T4", b3, AvoidanceSpec(0, 4, (0, 0), (2, 2))),
        Fixture("k3_sym_T4", SYM, AvoidanceSpec(0, 4, (0, 0, 0), (2, 2, 2))),
        Fixture("k2_three_point_T4", THREE_POINT, AvoidanceSpec(0, 4, (0, 0), (4, 4))),
        Fixture("k2_skew_T5", skew, AvoidanceSpec(0, 5, (1, 0), (5, 4))),
        Fixture("k3_three_point_T4", THREE_POINT, AvoidanceSpec(0, 4, (0, 0, 0), (4, 4, 4))),
        Fixture("k2_sym_T6_sparse_S", SYM, AvoidanceSpec(0, 6, (0, 0), (3, 3), S=(0, 2, 4, 6))),
        Fixture("k2_bern04_T6_top_barrier", b4,
                AvoidanceSpec(0, 6, (0, -1), (3, 2), f=_line(6, 0.5, 1.0))),
        Fixture("k2_wide_T6_bottom_barrier", wide,
                AvoidanceSpec(0, 6, (0, -1), (6, 5), g=_line(6, 1.0, -2.0))),
        Fixture("k3_bern06_T6", b6, AvoidanceSpec(0, 6, (1, 0, 0), (4, 3, 2))),
        Fixture("k1_three_point_T8_tube", THREE_POINT,
                AvoidanceSpec(0, 8, (0,), (8,), f=_line(8, 1.0, 1.5), g=_line(8, 1.0, -1.5))),
        Fixture("k2_sym_shifted_T7", SYM, AvoidanceSpec(-3, 4, (2, 0), (5, 4))),
    ]


def comparable_pairs() -> list[tuple[str, Hamiltonian, AvoidanceSpec, AvoidanceSpec]]:
    """``(name, h, low, high)`` with ``low`` data below ``high`` data and convex ``h``."""
    geo = make_hamiltonian("geometric", 0.5)
    return [
        ("sym_k2_T8", SYM, AvoidanceSpec(0, 8, (0, -1), (3, 2)), AvoidanceSpec(0, 8, (1, 0), (5, 3))),
        ("three_point_k3_T10", THREE_POINT, AvoidanceSpec(0, 10, (0, -2, -4), (8, 6, 5)),
         AvoidanceSpec(0, 10, (2, 0, -1), (12, 9, 8))),
        ("bern03_k2_barrier", make_hamiltonian("bernoulli", 0.3),
         AvoidanceSpec(0, 12, (0, -1), (6, 5), g=_line(12, 0.5, -3.0)),
         AvoidanceSpec(0, 12, (1, 0), (8, 6), g=_line(12, 0.5, -1.0))),
        ("geometric_k2_T10", geo, AvoidanceSpec(0, 10, (0, -1), (10, 8)),
         AvoidanceSpec(0, 10, (3, 0), (14, 10))),
        ("skew_k3_sparse_S", make_hamiltonian("weights", (0.2, 0.5, 0.3)),
         AvoidanceSpec(0, 9, (0, -1, -3), (9, 8, 6), S=(0, 3, 4, 5, 9)),
         AvoidanceSpec(0, 9, (0, 0, -2), (11, 9, 7), S=(0, 3, 4, 5, 9))),
        ("sym_k2_top_barrier", SYM,
         AvoidanceSpec(0, 8, (0, -1), (4, 3), f=_line(8, 0.5, 2.0)),
         AvoidanceSpec(0, 8, (0, 0), (5, 4), f=_line(8, 0.75, 2.0))),
    ]


# Gibbs resampling fixtures
GIBBS_K3 = AvoidanceSpec(-8, 8, (0, -1, -2), (8, 7, 6))
POWER_SPEC = AvoidanceSpec(-8, 8, (0, -1, -2), (16, 15, 14))
POWER_WINDOW = (-4, 4)
