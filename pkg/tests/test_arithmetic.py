import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from uamo.arithmetic import (
    DegenerateNodesError,
    continued_fraction,
    diophantine_check,
    kappa_uniformity,
    lagrange_interpolate,
    node_values,
    resonance_exponent,
    resonant_phase,
    torus_norm,
    trig_product_bound,
)
from uamo.model import GOLDEN

SILVER = math.sqrt(2) - 1


def _fib(k):
    a, b = 1, 1
    for _ in range(k):
        a, b = b, a + b
    return a


def test_golden_denominators_are_fibonacci():
    cf = continued_fraction(GOLDEN)
    assert cf.truncated and not cf.rational
    assert set(cf.partial_quotients[:-2]) == {1}
    assert list(cf.q[:20]) == [_fib(k) for k in range(20)]


def test_pi_convergents():
    cf = continued_fraction(math.pi - 3)
    assert cf.q[1:4] == (7, 106, 113)
    assert cf.convergent(1) == Fraction(1, 7)
    assert cf.convergent(3) == Fraction(16, 113)


def test_silver_quotients_are_twos():
    cf = continued_fraction(SILVER)
    assert set(cf.partial_quotients[:15]) == {2}


def test_rational_terminates():
    cf = continued_fraction(Fraction(2, 7))
    assert cf.rational and not cf.truncated
    assert cf.partial_quotients == (3, 2)
    assert cf.convergent(cf.depth) == Fraction(2, 7)


def test_float_expansion_is_of_the_binary_value():
    cf = continued_fraction(0.5)
    assert cf.rational and cf.partial_quotients == (2,)


@given(st.floats(0.001, 0.999))
def test_convergents_alternate_and_improve(x):
    cf = continued_fraction(x, 12)
    errs = [cf.error(k) for k in range(1, cf.depth + 1)]
    assert all(e2 <= e1 + 1e-17 for e1, e2 in zip(errs, errs[1:]))
    for k in range(1, cf.depth + 1):
        # |q_k omega - p_k| < 1/q_{k+1} <= 1/q_k
        assert errs[k - 1] <= 1.0 / cf.q[k] + 1e-15
        assert cf.p[k] * cf.q[k - 1] - cf.p[k - 1] * cf.q[k] == (-1) ** (k + 1)


def test_continued_fraction_rejects_zero_depth():
    with pytest.raises(ValueError):
        continued_fraction(GOLDEN, 0)


def test_torus_norm():
    assert torus_norm(0.9) == pytest.approx(0.1)
    assert np.allclose(torus_norm(np.array([0.2, -0.7, 3.5])), [0.2, 0.3, 0.5])


def test_diophantine_pass_and_fail():
    assert diophantine_check(GOLDEN, 1.5, 0.3, 10000).passed
    assert diophantine_check(SILVER, 1.5, 0.3, 10000).passed
    # Liouville-like: sum of 10^{-k!}
    rep = diophantine_check(0.1 + 0.01 + 1e-6, 1.5, 0.3, 10000)
    assert not rep.passed
    assert rep.worst_value < 0.3
    assert not diophantine_check(0.25, 2.0, 0.1, 8).passed


def test_diophantine_validates_arguments():
    with pytest.raises(ValueError):
        diophantine_check(GOLDEN, 1.0, 0.3, 10)


def test_non_resonant_phase_tail_sup_decays():
    sups = []
    for N in (1000, 10000, 100000):
        rep = resonance_exponent(GOLDEN, 0.1234, N)
        # generic decay is about ln n / n from the start of the tail
        assert rep.tail_sup < 2 * math.log(rep.tail_start) / rep.tail_start
        assert rep.partial_sup >= rep.tail_sup
        assert np.all(np.diff(rep.running_sup) >= 0)
        sups.append(rep.tail_sup)
    assert sups[0] > sups[1] > sups[2]


def test_resonant_phase_stands_out():
    # levels 3 and 8 put a near-zero at |n| = q_3 + q_8 = 37
    theta = resonant_phase(GOLDEN)
    res = resonance_exponent(GOLDEN, theta, 20000, tail_start=20)
    ref = resonance_exponent(GOLDEN, 0.1234, 20000, tail_start=20)
    assert res.values[36] > 0.35
    assert res.tail_sup > 2 * ref.tail_sup


def test_exact_resonance_is_infinite():
    # 2 theta - 1/2 + 4 omega = 0 mod 1 with omega = 1/8
    rep = resonance_exponent(0.125, 0.0, 16)
    assert rep.infinite and rep.partial_sup == math.inf
    assert abs(rep.witness) == 4


def test_node_values_variables():
    assert node_values([0.0], 1, 0.3, "sin")[0] == pytest.approx(0.0)
    with pytest.raises(ValueError):
        node_values([0.0], 1, 0.3, "tan")


@pytest.mark.parametrize("n", [3, 8, 16])
def test_lagrange_exact_on_sine_polynomials(n):
    rng = np.random.default_rng(n)
    coef = rng.standard_normal(n + 1) + 1j * rng.standard_normal(n + 1)
    omega = GOLDEN
    nodes = (np.arange(n + 1) + 0.5) / (2 * (n + 1)) - 0.25 - (n - 1) * omega / 2

    def poly(th):
        return np.polyval(coef, node_values(th, n, omega, "sin"))

    targets = rng.random(25)
    approx = lagrange_interpolate(poly(nodes), nodes, n, omega, targets)
    exact = poly(targets)
    assert np.abs(approx - exact).max() < 1e-10 * np.abs(exact).max()
    assert abs(lagrange_interpolate(poly(nodes), nodes, n, omega, 0.3) - poly(np.array([0.3]))[0]) < 1e-10


def test_lagrange_rejects_degenerate_nodes():
    with pytest.raises(DegenerateNodesError):
        lagrange_interpolate([1, 2], [0.1, 0.1], 1, 0.0, 0.3)
    with pytest.raises(ValueError):
        lagrange_interpolate([1, 2, 3], [0.1, 0.2], 1, 0.0, 0.3)


def test_kappa_chebyshev_nodes_are_uniform():
    # Chebyshev-like cosines give a bounded Lebesgue function, so kappa is near 0
    n = 20
    nodes = (np.arange(n + 1) + 0.5) / (2 * (n + 1))
    rep = kappa_uniformity(nodes, n, 0.0)
    assert rep.kappa < 0.1
    assert rep.kappa_unit <= rep.kappa + 1e-12


def test_kappa_clustered_nodes_are_poor():
    n = 20
    nodes = np.linspace(0.0, 0.05, n + 1)
    assert kappa_uniformity(nodes, n, 0.0).kappa > 0.5


def test_kappa_rejects_wrong_count():
    with pytest.raises(ValueError):
        kappa_uniformity([0.1, 0.2], 3, 0.0)


def test_trig_product_band_up_to_ten_thousand():
    cf = continued_fraction(GOLDEN)
    ks = [k for k in range(1, cf.depth + 1) if 3 <= cf.q[k] <= 10_000]
    assert cf.q[ks[-1]] == 6765
    for k in ks:
        rep = trig_product_bound(GOLDEN, 0.1234, n_index=k)
        assert rep.within, (rep.q, rep.total, rep.band)


def test_trig_product_validation():
    with pytest.raises(ValueError):
        trig_product_bound(GOLDEN, 0.1)
    with pytest.raises(ValueError):
        trig_product_bound(GOLDEN, 0.1, q=2)
