import math
from fractions import Fraction

import numpy as np
import pytest
import sympy
from hypothesis import assume, given
from hypothesis import strategies as st

from gibbslines.avoid import AvoidanceSpec, DiscreteEnsemble, sample_avoiding
from gibbslines.errors import DomainError
from gibbslines.fixtures import SYM
from gibbslines.scaling import (ScalingParams, extreme_tail_estimate, lattice_floor, min_gap_profile,
                                modulus_of_continuity, parabola_diagnostic, scaled_embed, separation_fixture,
                                top_curve_at_lattice, unscale)


def params(**kw):
    base = dict(gamma=1.0, p=1.0, lam=0.5, theta=0.5, N=4, psi=2.0)
    base.update(kw)
    return ScalingParams(**base)


def test_integer_slope_cancels():
    ens = DiscreteEnsemble(-8, [np.arange(-8, 9)])
    sc = scaled_embed(ens, params())
    np.testing.assert_allclose(sc.values, 0.0, atol=1e-15)


def test_value_at_origin():
    rng = np.random.default_rng(3)
    vals = np.cumsum(rng.integers(0, 2, (2, 21)), axis=1)
    ens = DiscreteEnsemble(-10, np.sort(vals, axis=0)[::-1])
    P = params(gamma=0.5, p=0.5, N=16, psi=2.5)
    sc = scaled_embed(ens, P)
    np.testing.assert_allclose(sc(0.0), ens.values[:, 10] / 16 ** 0.25)


def test_constant_extension():
    ens = DiscreteEnsemble(-9, [np.arange(19) ** 2 % 7])
    P = params(gamma=1.0, p=0.25, N=3, psi=2.5)
    sc = scaled_embed(ens, P)
    assert sc(7.0, 0) == sc(2.5, 0)
    assert sc(-40.0, 0) == sc(-2.5, 0)
    assert sc.knots[0] == -2.5 and sc.knots[-1] == 2.5


def test_domain_too_short():
    ens = DiscreteEnsemble(-5, [np.zeros(11)])
    with pytest.raises(DomainError):
        scaled_embed(ens, params(N=4, psi=2.0))


@given(st.integers(0, 2**31), st.sampled_from([(0.5, 16), (1.0, 5), (2 / 3, 27), (0.75, 10)]),
       st.floats(-1.0, 1.5))
def test_round_trip(seed, gN, p):
    gamma, N = gN
    rng = np.random.default_rng(seed)
    P = ScalingParams(gamma, p, 1.0, 0.0, N, 1.0)
    half = math.ceil(N ** gamma) + 2
    vals = np.cumsum(rng.integers(-2, 3, (3, 2 * half + 1)), axis=1)
    ens = DiscreteEnsemble(-half, vals)
    sc = scaled_embed(ens, P)
    hi = lattice_floor(1.0, N, gamma)
    t = np.arange(-hi, hi + 1)
    back = unscale(sc, P, t)
    np.testing.assert_allclose(back, vals[:, t + half], atol=1e-12 * max(1, np.abs(vals).max()))


@given(st.fractions(min_value=-20, max_value=20, max_denominator=50), st.integers(1, 10_000),
       st.fractions(min_value=Fraction(1, 12), max_value=3, max_denominator=12))
def test_lattice_floor_exact(x, N, g):
    exact = int(sympy.floor(sympy.Rational(x.numerator, x.denominator)
                            * sympy.Integer(N) ** sympy.Rational(g.numerator, g.denominator)))
    assert lattice_floor(x, N, g) == exact


def test_lattice_floor_boundaries():
    assert lattice_floor("2.5", 4, "0.5") == 5
    assert lattice_floor(-1, 2, 0.5) == -2
    assert lattice_floor(Fraction(-1, 3), 8, Fraction(2, 3)) == -2
    assert lattice_floor(0.1, 100, 1) == 10
    assert lattice_floor(Fraction(1, 7), 10, Fraction(1, 97)) == int(sympy.floor(sympy.Rational(1, 7) * 10 ** sympy.Rational(1, 97)))


def test_parabola_synthetic_frequencies():
    P = ScalingParams(0.5, 0.5, 0.3, 0.5, 64, 3.0)
    phi = 0.7
    zero, one = {}, {}
    for n in (-2, -1, 0, 1, 2):
        s = P.lattice(n)
        base = P.p * s - P.lam * n * n * P.space_scale
        zero[n] = np.full(200, base)
        one[n] = np.full(200, base + (phi + abs(n) ** P.theta + 1) * P.space_scale)
    for samples, freq in ((zero, 0.0), (one, 1.0)):
        rows = parabola_diagnostic(samples, P, phi)
        for r in rows:
            assert r.estimate == freq
            assert r.ci_low <= freq <= r.ci_high
            assert 0 <= r.ci_low <= r.ci_high <= 1


def test_parabola_zero_power_convention():
    P = ScalingParams(0.5, 0.0, 1.0, 0.0, 16, 1.0)
    # |0 + 0| >= phi + 0^0 = phi + 1 fails, |1.5| >= 0.25 + 1 holds
    rows = parabola_diagnostic({0: [0.0, 1.5 * 2]}, P, 0.25)
    assert rows[0].estimate == 0.5


def test_top_curve_at_lattice():
    samples = np.arange(2 * 2 * 9).reshape(2, 2, 9)
    P = ScalingParams(1.0, 0.0, 1.0, 0.0, 2, 2.0)
    out = top_curve_at_lattice(samples, -4, P, [-1, 0, 2])
    np.testing.assert_array_equal(out[0], samples[:, 0, 4])
    np.testing.assert_array_equal(out[-1], samples[:, 0, 2])
    with pytest.raises(DomainError):
        top_curve_at_lattice(samples, -4, P, [3])


@pytest.fixture(scope="module")
def sym_k1():
    spec = AvoidanceSpec(-32, 32, (-16,), (16,))
    return sample_avoiding(SYM, spec, 20_000, np.random.default_rng(5))


def test_tail_deterministic_below():
    samples = np.zeros((10, 2, 9), dtype=np.int64)
    P = ScalingParams(1.0, 0.0, 1.0, 0.0, 4, 1.0)
    assert extreme_tail_estimate(samples, -4, P, "sup_top", 0.5, 3).estimate == 0.0
    assert extreme_tail_estimate(samples, -4, P, "inf_bottom", 0.5, 3).estimate == 0.0


def test_tail_monotone_in_R(sym_k1):
    P = ScalingParams(1.0, 0.5, 1.0, 0.0, 16, 1.0)
    ests = [extreme_tail_estimate(sym_k1, -32, P, "sup_top", R, 16).estimate
            for R in np.linspace(0, 2, 21)]
    assert all(b <= a for a, b in zip(ests, ests[1:]))


def test_tail_reflection_symmetry(sym_k1):
    P = ScalingParams(1.0, 0.5, 1.0, 0.0, 16, 1.0)
    for R in (0.5, 1.0):
        up = extreme_tail_estimate(sym_k1, -32, P, "sup_top", R, 16)
        dn = extreme_tail_estimate(sym_k1, -32, P, "inf_bottom", R, 16)
        assert up.ci_low <= dn.ci_high and dn.ci_low <= up.ci_high


def test_min_gap_point_mass():
    T = 16
    samples = np.zeros((50, 2, T + 1), dtype=np.int64)
    samples[:, 0] += 3
    rows = min_gap_profile(samples, 0, 8, [0.5, 0.74, 0.76, 1.0])
    assert [r.estimate for r in rows] == [0.0, 0.0, 1.0, 1.0]


def test_min_gap_needs_two_curves():
    with pytest.raises(DomainError):
        min_gap_profile(np.zeros((5, 1, 9)), 0, 4, [0.1])


@given(st.lists(st.floats(0, 2), min_size=1, max_size=12), st.integers(0, 2**31))
def test_min_gap_monotone(deltas, seed):
    rng = np.random.default_rng(seed)
    samples = np.sort(rng.integers(0, 20, (100, 3, 5)), axis=1)[:, ::-1]
    rows = min_gap_profile(samples, 0, 2, sorted(deltas), T=16)
    est = [r.estimate for r in rows]
    assert all(b >= a for a, b in zip(est, est[1:]))


def brute_modulus(x, f, delta):
    best = 0.0
    for i in range(len(x)):
        for j in range(len(x)):
            if abs(x[i] - x[j]) < delta:
                best = max(best, abs(f[i] - f[j]))
    return best


def test_modulus_trivial_cases():
    x = np.linspace(0, 1, 11)
    assert modulus_of_continuity((x, np.full(11, 3.0)), 0.35) == 0.0
    # largest grid distance below 0.35 is 0.3
    assert modulus_of_continuity((x, 2.0 * x), 0.35) == pytest.approx(0.6)
    x5 = np.array([0.0, 1.0, 2.0, 3.0, 4.0])
    f5 = np.array([0.0, 3.0, -1.0, 2.0, 2.5])
    assert modulus_of_continuity((x5, f5), 1.5) == brute_modulus(x5, f5, 1.5) == 4.0
    with pytest.raises(DomainError):
        modulus_of_continuity((x5, f5), 1.0, window=(10, 11))
    with pytest.raises(DomainError):
        modulus_of_continuity((x5, f5), 0.0)


curves = st.lists(st.floats(-5, 5), min_size=2, max_size=30)


@given(curves, st.floats(0.01, 3.0))
def test_modulus_matches_brute_force(vals, delta):
    x = np.linspace(-1, 1, len(vals))
    f = np.array(vals)
    assert modulus_of_continuity((x, f), delta) == pytest.approx(brute_modulus(x, f, delta))


@given(curves, st.floats(0.01, 1.5), st.floats(0.01, 1.5))
def test_modulus_monotone_in_delta(vals, d1, d2):
    x = np.linspace(-1, 1, len(vals))
    lo, hi = sorted((d1, d2))
    assert modulus_of_continuity((x, vals), lo) <= modulus_of_continuity((x, vals), hi)


@given(curves, st.floats(0.01, 2.0), st.integers(0, 29))
def test_modulus_subadditive_over_windows(vals, delta, split):
    x = np.linspace(0, 1, len(vals))
    assume(split < len(vals))
    b = x[split]
    whole = modulus_of_continuity((x, vals), delta, (0, 1))
    left = modulus_of_continuity((x, vals), delta, (0, b))
    right = modulus_of_continuity((x, vals), delta, (b, 1))
    assert whole <= left + right + 1e-12


def test_separation_fixture_shape():
    spec = separation_fixture(SYM, 0.5, 64, 1.0, 3)
    assert spec.k == 2 and spec.x == (0, -8) and spec.y == (32, 24)
    assert spec.g_values[0] == -16
    with pytest.raises(DomainError):
        separation_fixture(SYM, 0.5, 64, 1.0, 1)


def test_scaling_params_validation():
    with pytest.raises(DomainError):
        ScalingParams(1.0, 0.0, 1.0, 2.0, 4, 1.0)
    with pytest.raises(DomainError):
        ScalingParams(1.0, 0.0, 0.0, 0.0, 4, 1.0)
