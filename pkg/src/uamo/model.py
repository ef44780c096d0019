"""Construction of the unitary almost Mathieu operator.

Two equivalent descriptions are provided:

* the quantum-walk form ``W = S_{l1} Q`` acting on l^2(Z) (x) C^2, and
* the extended CMV form ``W = L M`` with ``L = (+) Theta_{2n}`` and
  ``M = (+) Theta_{2n+1}``, ``Theta_k`` acting on sites ``{k, k+1}``.

All phases are kept in cycles (reals mod 1) and multiplied by 2 pi only when a
trigonometric function is evaluated.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi
GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
SILVER = math.sqrt(2.0) - 1.0


class WindowError(ValueError):
    """Invalid window endpoints or boundary coefficients."""


@dataclass(frozen=True)
class ModelParams:
    """Couplings, frequency and phase of the operator family.

    ``omega`` and ``theta`` are reduced mod 1 on construction.
    """

    lambda1: float
    lambda2: float
    omega: float = GOLDEN
    theta: float = 0.0
    lambda1p: float = field(init=False, repr=False)
    lambda2p: float = field(init=False, repr=False)

    def __post_init__(self):
        for name in ("lambda1", "lambda2"):
            value = float(getattr(self, name))
            if not 0.0 <= value <= 1.0 or math.isnan(value):
                raise ValueError(f"{name}={value} must lie in [0, 1]")
            object.__setattr__(self, name, value)
        object.__setattr__(self, "omega", float(self.omega) % 1.0)
        object.__setattr__(self, "theta", float(self.theta) % 1.0)
        object.__setattr__(self, "lambda1p", math.sqrt(max(0.0, 1.0 - self.lambda1**2)))
        object.__setattr__(self, "lambda2p", math.sqrt(max(0.0, 1.0 - self.lambda2**2)))
        if self.lambda1 == 0.0:
            logger.debug("lambda1 = 0: the operator decouples into 2x2 blocks")

    def with_theta(self, theta: float) -> "ModelParams":
        return ModelParams(self.lambda1, self.lambda2, self.omega, theta)

    def shifted(self, cells: int) -> "ModelParams":
        """Parameters whose site ``k`` carries the coefficients of site ``k + 2*cells``."""
        return self.with_theta(self.theta + cells * self.omega)

    def as_dict(self) -> dict:
        return {
            "lambda1": self.lambda1,
            "lambda2": self.lambda2,
            "omega": self.omega,
            "theta": self.theta,
        }


@dataclass(frozen=True)
class VerblunskyPair:
    alpha: complex
    rho: complex
    index: int


def cell_phase(params: ModelParams, cell, theta=None):
    """``(theta + cell*omega) mod 1``; works on integer arrays."""
    th = params.theta if theta is None else theta
    return np.mod(np.add(th, np.multiply(cell, params.omega)), 1.0)


def verblunsky(params: ModelParams, index, theta=None):
    """Vectorised Verblunsky coefficients ``(alpha_k, rho_k)``.

    ``theta`` may be an array; it broadcasts against ``index``.
    """
    index = np.asarray(index)
    th = params.theta if theta is None else np.asarray(theta, dtype=float)
    even = (index % 2) == 0
    phase = cell_phase(params, (index - 1) // 2, th)
    s = np.sin(TWO_PI * phase)
    c = np.cos(TWO_PI * phase)
    alpha = np.where(even, params.lambda1p, params.lambda2 * s).astype(complex)
    rho = np.where(even, params.lambda1 + 0j, params.lambda2 * c + 1j * params.lambda2p)
    return alpha, rho


def verblunsky_pair(params: ModelParams, n: int) -> VerblunskyPair:
    n = int(n)
    if n % 2 == 0:
        return VerblunskyPair(complex(params.lambda1p), complex(params.lambda1), n)
    arg = TWO_PI * float(cell_phase(params, (n - 1) // 2))
    return VerblunskyPair(
        complex(params.lambda2 * math.sin(arg)),
        complex(params.lambda2 * math.cos(arg), params.lambda2p),
        n,
    )


def theta_block(alpha: complex, rho: complex) -> np.ndarray:
    return np.array([[np.conj(alpha), rho], [np.conj(rho), -alpha]], dtype=complex)


@dataclass
class StateVector:
    """Amplitudes on consecutive lattice sites ``start, start+1, ...``."""

    amplitudes: np.ndarray
    start: int = 0

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex)

    @property
    def stop(self) -> int:
        return self.start + len(self.amplitudes) - 1

    @property
    def indices(self) -> np.ndarray:
        return np.arange(self.start, self.stop + 1)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def __getitem__(self, site: int) -> complex:
        k = site - self.start
        if 0 <= k < len(self.amplitudes):
            return complex(self.amplitudes[k])
        return 0j

    def __len__(self):
        return len(self.amplitudes)


@dataclass(frozen=True)
class CMVWindow:
    """Restriction ``W|[a,b] = L|[a,b] M|[a,b]`` with boundary coefficients.

    ``alpha`` and ``rho`` hold the coefficients of sites ``a-1 .. b`` after the
    boundary modification ``alpha_{a-1} -> beta``, ``alpha_b -> gamma``.
    """

    params: ModelParams
    a: int
    b: int
    beta: complex
    gamma: complex
    alpha: np.ndarray
    rho: np.ndarray
    L: sp.csr_matrix
    M: sp.csr_matrix
    W: sp.csr_matrix

    @property
    def size(self) -> int:
        return self.b - self.a + 1

    @property
    def sites(self) -> np.ndarray:
        return np.arange(self.a, self.b + 1)

    def alpha_at(self, k: int) -> complex:
        return complex(self.alpha[k - self.a + 1])

    def rho_at(self, k: int) -> complex:
        return complex(self.rho[k - self.a + 1])

    def dense(self) -> np.ndarray:
        return self.W.toarray()

    def is_unitary_bc(self, tol: float = 1e-12) -> bool:
        return abs(abs(self.beta) - 1) <= tol and abs(abs(self.gamma) - 1) <= tol


def _factor(alpha, rho, a, b, parity):
    """Sparse restriction of ``(+) Theta_k`` over ``k`` of the given parity."""
    n = b - a + 1
    rows, cols, vals = [], [], []
    for k in range(a - 1, b + 1):
        if k % 2 != parity:
            continue
        block = theta_block(alpha[k - a + 1], rho[k - a + 1])
        for i in range(2):
            for j in range(2):
                r, c = k + i, k + j
                if a <= r <= b and a <= c <= b:
                    rows.append(r - a)
                    cols.append(c - a)
                    vals.append(block[i, j])
    return sp.csr_matrix((vals, (rows, cols)), shape=(n, n), dtype=complex)


def build_window(params: ModelParams, a: int, b: int, bc=None, theta=None) -> CMVWindow:
    """Finite window ``[a, b]``.

    ``bc`` is ``None`` (native coefficients) or a pair ``(beta, gamma)``; either
    entry may itself be ``None`` to keep the native value on that side.
    """
    a, b = int(a), int(b)
    if b <= a:
        raise WindowError(f"window needs a < b, got [{a}, {b}]")
    if theta is not None:
        params = params.with_theta(theta)
    alpha, rho = verblunsky(params, np.arange(a - 1, b + 1))
    beta, gamma = (None, None) if bc is None else bc
    if beta is not None:
        if abs(beta) > 1 + 1e-14:
            raise WindowError(f"|beta| = {abs(beta)} exceeds 1")
        alpha[0] = beta
    if gamma is not None:
        if abs(gamma) > 1 + 1e-14:
            raise WindowError(f"|gamma| = {abs(gamma)} exceeds 1")
        alpha[-1] = gamma
    alpha.setflags(write=False)
    rho.setflags(write=False)
    L = _factor(alpha, rho, a, b, 0)
    M = _factor(alpha, rho, a, b, 1)
    return CMVWindow(params, a, b, complex(alpha[0]), complex(alpha[-1]), alpha, rho, L, M, (L @ M).tocsr())


def unitary_window(params: ModelParams, a: int, b: int, beta=1.0, gamma=1.0, theta=None) -> CMVWindow:
    return build_window(params, a, b, (beta, gamma), theta=theta)


def apply_walk(window: CMVWindow, v) -> StateVector:
    """``W| v`` as ``L| (M| v)``; linear in the window size."""
    if isinstance(v, StateVector):
        if v.start != window.a or len(v) != window.size:
            raise WindowError(
                f"state on [{v.start}, {v.stop}] does not match window [{window.a}, {window.b}]"
            )
        x = v.amplitudes
    else:
        x = np.asarray(v, dtype=complex)
        if x.shape != (window.size,):
            raise WindowError(f"state has shape {x.shape}, window has {window.size} sites")
    return StateVector(window.L @ (window.M @ x), window.a)


# -- quantum-walk form ------------------------------------------------------


def coin(params: ModelParams, n: int) -> np.ndarray:
    arg = TWO_PI * float(cell_phase(params, n))
    c, s = math.cos(arg), math.sin(arg)
    l2, l2p = params.lambda2, params.lambda2p
    return np.array([[l2 * c + 1j * l2p, -l2 * s], [l2 * s, l2 * c - 1j * l2p]])


def walk_matrix(params: ModelParams, n_min: int, n_max: int) -> np.ndarray:
    """Dense ``S_{l1} Q`` on cells ``n_min..n_max`` (open ends).

    Basis order is ``delta_n^+, delta_n^-`` for increasing ``n``.
    """
    cells = n_max - n_min + 1
    dim = 2 * cells
    S = np.zeros((dim, dim), dtype=complex)
    Q = np.zeros((dim, dim), dtype=complex)
    l1, l1p = params.lambda1, params.lambda1p
    for n in range(n_min, n_max + 1):
        p = 2 * (n - n_min)
        Q[p : p + 2, p : p + 2] = coin(params, n)
        if n < n_max:
            S[p + 2, p] = l1
        S[p + 1, p] = l1p
        if n > n_min:
            S[p - 1, p + 1] = l1
        S[p, p + 1] = -l1p
    return S @ Q


def walk_vs_cmv_equivalence(params: ModelParams, n_max: int, index_offset: int = 1,
                            conjugate: bool = True, margin: int = 3) -> float:
    """Max entrywise gap between ``S Q`` and ``L M`` under an index map.

    Cell ``n`` is sent to CMV sites ``2n + index_offset`` (spin up) and
    ``2n + 1 + index_offset`` (spin down).  With ``conjugate`` the CMV side is
    complex conjugated, i.e. ``rho_{2n+1}`` is replaced by its conjugate.
    The walk equals ``conj(L M)`` for ``index_offset=1``; the plain map
    ``delta_n^+ -> delta_{2n}`` leaves an O(1) residual.
    """
    if n_max < 2:
        raise ValueError("n_max must be at least 2")
    walk = walk_matrix(params, -n_max, n_max)
    lo = -2 * n_max + index_offset
    window = build_window(params, lo, lo + walk.shape[0] - 1)
    cmv = window.dense()
    if conjugate:
        cmv = np.conj(cmv)
    # the two truncations differ only in the outermost cells
    cut = slice(2 * margin, walk.shape[0] - 2 * margin)
    return float(np.abs(walk[cut, cut] - cmv[cut, cut]).max())
