import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from uamo.model import (
    GOLDEN,
    ModelParams,
    StateVector,
    WindowError,
    apply_walk,
    build_window,
    theta_block,
    unitary_window,
    verblunsky,
    verblunsky_pair,
    walk_vs_cmv_equivalence,
)

from .strategies import params, phases


def test_params_reduce_mod_one():
    p = ModelParams(0.3, 0.4, omega=1.25, theta=-0.25)
    assert p.omega == 0.25
    assert p.theta == 0.75


@pytest.mark.parametrize("l1, l2", [(-0.1, 0.5), (0.5, 1.2), (math.nan, 0.5)])
def test_params_reject_out_of_range(l1, l2):
    with pytest.raises(ValueError):
        ModelParams(l1, l2)


@given(st.floats(0, 1), st.floats(0, 1))
def test_primed_couplings_complete_the_circle(l1, l2):
    p = ModelParams(l1, l2)
    assert abs(p.lambda1p**2 + p.lambda1**2 - 1) < 1e-15
    assert abs(p.lambda2p**2 + p.lambda2**2 - 1) < 1e-15


def test_even_site_coefficients():
    v = verblunsky_pair(ModelParams(0.6, 0.8, theta=0.0), 0)
    assert v.alpha == pytest.approx(0.8, abs=1e-15)
    assert v.rho == pytest.approx(0.6, abs=1e-15)


def test_odd_site_at_zero_phase():
    v = verblunsky_pair(ModelParams(0.6, 0.8, theta=0.0), 1)
    assert abs(v.alpha) < 1e-15
    assert v.rho == pytest.approx(0.8 + 0.6j, abs=1e-15)
    assert abs(v.rho) == pytest.approx(1.0, abs=1e-15)


def test_odd_site_quarter_phase():
    v = verblunsky_pair(ModelParams(0.6, 0.8, omega=0.0, theta=0.25), 3)
    assert v.alpha == pytest.approx(0.8, abs=1e-15)
    assert v.rho == pytest.approx(0.6j, abs=1e-15)


def test_negative_indices_use_floor_cells():
    p = ModelParams(0.6, 0.8, theta=0.1)
    v = verblunsky_pair(p, -1)
    assert v.alpha == pytest.approx(0.8 * math.sin(2 * math.pi * (0.1 - GOLDEN)), abs=1e-14)


@given(params(), st.integers(-500, 500))
def test_coefficients_on_unit_sphere(p, n):
    v = verblunsky_pair(p, n)
    assert abs(abs(v.alpha) ** 2 + abs(v.rho) ** 2 - 1) < 1e-14


@given(params())
def test_vectorised_matches_scalar(p):
    idx = np.arange(-7, 9)
    alpha, rho = verblunsky(p, idx)
    for k, n in enumerate(idx):
        v = verblunsky_pair(p, int(n))
        assert abs(alpha[k] - v.alpha) < 1e-14 and abs(rho[k] - v.rho) < 1e-14


@given(params(), st.integers(-50, 50))
def test_theta_block_unitary_with_det_minus_one(p, n):
    v = verblunsky_pair(p, n)
    B = theta_block(v.alpha, v.rho)
    assert np.abs(B @ B.conj().T - np.eye(2)).max() < 1e-13
    assert abs(np.linalg.det(B) + 1) < 1e-13


def _direct_cmv(window):
    """Entrywise W = L M by explicit block products, without sparse assembly."""
    n = window.size
    L = np.zeros((n, n), dtype=complex)
    M = np.zeros((n, n), dtype=complex)
    for k in range(window.a - 1, window.b + 1):
        B = theta_block(window.alpha[k - window.a + 1], window.rho[k - window.a + 1])
        target = L if k % 2 == 0 else M
        for i in range(2):
            for j in range(2):
                r, c = k + i - window.a, k + j - window.a
                if 0 <= r < n and 0 <= c < n:
                    target[r, c] = B[i, j]
    return L @ M


@given(params(), st.integers(-20, 20), st.integers(2, 30), phases, phases)
def test_window_factorisation(p, a, size, x, y):
    w = build_window(p, a, a + size - 1, (np.exp(2j * np.pi * x), 0.5 * np.exp(2j * np.pi * y)))
    assert np.abs(w.dense() - _direct_cmv(w)).max() < 1e-14
    assert np.abs(w.dense() - (w.L @ w.M).toarray()).max() < 1e-14


@given(params(), st.integers(1, 20))
def test_det_M_on_even_window_is_theta_free(p, n):
    # n full odd blocks of determinant -1 each
    w = build_window(p, 1, 2 * n)
    assert abs(np.linalg.det(w.M.toarray()) - (-1) ** n) < 1e-12


@given(params(), st.integers(-10, 10), st.integers(2, 40), phases, phases)
def test_unitary_boundary_gives_unitary_window(p, a, size, x, y):
    w = unitary_window(p, a, a + size - 1, np.exp(2j * np.pi * x), np.exp(2j * np.pi * y))
    W = w.dense()
    assert np.abs(W @ W.conj().T - np.eye(size)).max() < 1e-12
    ev = np.linalg.eigvals(W)
    assert np.abs(np.abs(ev) - 1).max() < 1e-10


def test_window_errors(p68):
    with pytest.raises(WindowError):
        build_window(p68, 3, 3)
    with pytest.raises(WindowError):
        build_window(p68, 1, 4, (1.2, 1.0))
    with pytest.raises(WindowError):
        build_window(p68, 1, 4, (1.0, 1.5j))


def test_apply_walk_norm_and_dense(p68, rng):
    w = unitary_window(p68, -5, 30, np.exp(0.3j), np.exp(-1.1j))
    v = rng.standard_normal(w.size) + 1j * rng.standard_normal(w.size)
    out = apply_walk(w, StateVector(v, -5))
    assert abs(out.norm() - np.linalg.norm(v)) < 1e-12
    assert np.abs(out.amplitudes - w.dense() @ v).max() < 1e-13


def test_apply_walk_dimension_mismatch(p68):
    w = build_window(p68, 1, 10)
    with pytest.raises(WindowError):
        apply_walk(w, np.ones(9))
    with pytest.raises(WindowError):
        apply_walk(w, StateVector(np.ones(10), 2))


def test_pure_shift_support():
    # lambda1 = 1 removes the coin mixing in the shift
    p = ModelParams(1.0, 0.7, theta=0.31)
    w = build_window(p, -10, 11)
    n = 2
    e = np.zeros(w.size, dtype=complex)
    e[n + 10] = 1.0
    image = apply_walk(w, e)
    support = set(int(s) for s in image.indices[np.abs(image.amplitudes) > 1e-14])
    assert support == {n - 2, n + 1}


def test_walk_matches_cmv_under_index_map():
    p = ModelParams(0.6, 0.8, GOLDEN, 0.13)
    assert walk_vs_cmv_equivalence(p, 32) <= 1e-13


def test_walk_matches_cmv_with_constant_coin():
    assert walk_vs_cmv_equivalence(ModelParams(0.6, 0.0, GOLDEN, 0.13), 16) <= 1e-13


def test_naive_index_map_leaves_order_one_gap():
    p = ModelParams(0.6, 0.8, GOLDEN, 0.13)
    assert walk_vs_cmv_equivalence(p, 16, index_offset=0, conjugate=False) > 0.1


def test_zero_lambda1_decouples_into_blocks():
    p = ModelParams(0.0, 0.7, theta=0.2)
    W = build_window(p, 1, 12).dense()
    for i in range(12):
        for j in range(12):
            if abs(W[i, j]) > 1e-15:
                # sites i+1, j+1 share the block {2k-1, 2k}
                assert (i + 1 + 1) // 2 == (j + 1 + 1) // 2
