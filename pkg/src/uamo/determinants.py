"""Box determinants ``P_[a,b](z) = det(z - W|[a,b])`` and Green's functions.

Determinants are carried on a log scale as ``(log|P|, phase)`` because
``|P|`` grows or shrinks exponentially in the window length.  Four routes are
available:

``lu``    pivoted elimination of the dense matrix ``z - W|``
``cmv``   ``det(L|) det(z L|^-1 - M|)`` (``M|`` variant when ``L|`` is singular)
``sze1``  the two boundary determinants ``P^{+-1}`` read off the Szego
          transfer product, then interpolated affinely in ``beta``
``sze2``  right-to-left row sweep using ``T_00 = z P_[a+1,b]``

The transfer routes use the unnormalised Szego matrices
``S'_n = [[z, -conj(alpha_n)], [-alpha_n z, 1]]``, so no ``|rho|`` factors
need to be divided out.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from uamo.model import ModelParams, StateVector, TWO_PI, build_window, verblunsky

UNDERFLOW_LOG = math.log(1e-300)
# |P| below this makes z numerically an eigenvalue of the window
SINGULAR_LOG = math.log(1e-12)
SZE2_ALPHA_TOL = 1e-8


class SingularWindowError(ArithmeticError):
    """``z`` is (numerically) an eigenvalue of the window."""


class IdentityInapplicableError(ValueError):
    """The transfer identity divides by a vanishing boundary coefficient."""


class Route(str, Enum):
    LU = "lu"
    CMV = "cmv"
    SZE1 = "sze1"
    SZE2 = "sze2"


@dataclass(frozen=True)
class BoxDeterminant:
    a: int
    b: int
    z: complex
    theta: float
    route: Route
    log_abs: float
    phase: complex

    @property
    def underflow(self) -> bool:
        return self.log_abs < UNDERFLOW_LOG

    @property
    def value(self) -> complex:
        # may underflow to 0 or overflow to inf; log_abs is always exact
        return self.phase * math.exp(self.log_abs) if self.log_abs < 709 else self.phase * math.inf


# -- coefficients ------------------------------------------------------------


def window_coefficients(params: ModelParams, a: int, b: int, theta=None, bc=None):
    """``(alpha, rho)`` for sites ``a-1 .. b`` with boundary values applied.

    With an array ``theta`` the arrays have shape ``(b - a + 2,) + theta.shape``.
    """
    sites = np.arange(a - 1, b + 1)
    th = params.theta if theta is None else np.asarray(theta, dtype=float)
    sites = sites.reshape(sites.shape + (1,) * np.ndim(th))
    alpha, rho = verblunsky(params, sites, th)
    alpha = np.array(np.broadcast_to(alpha, np.broadcast(sites, th).shape), dtype=complex)
    rho = np.array(np.broadcast_to(rho, alpha.shape), dtype=complex)
    beta, gamma = (None, None) if bc is None else bc
    if beta is not None:
        alpha[0] = beta
    if gamma is not None:
        alpha[-1] = gamma
    return alpha, rho


def _as_log(v):
    v = np.asarray(v, dtype=complex)
    mag = np.abs(v)
    with np.errstate(divide="ignore"):
        return np.log(mag), np.where(mag > 0, v / np.where(mag > 0, mag, 1), 1.0 + 0j)


# -- transfer sweeps ------------------------------------------------------------


def _column_sweep(alpha, z, start):
    """Propagate the column ``start`` through ``S'_a, S'_{a+1}, ...``.

    ``alpha`` holds sites ``a-1 .. b``; returns per-site scaled columns
    ``(c0, c1)`` and cumulative log scales, each of shape ``(b-a+1,) + batch``.
    """
    n = alpha.shape[0] - 1
    batch = np.broadcast(alpha[0], z).shape
    c0 = np.broadcast_to(start[0], batch).astype(complex)
    c1 = np.broadcast_to(start[1], batch).astype(complex)
    log = np.zeros(batch)
    out0 = np.empty((n,) + batch, dtype=complex)
    out1 = np.empty_like(out0)
    logs = np.empty((n,) + batch)
    for k in range(n):
        al = alpha[k + 1]
        c0, c1 = z * c0 - np.conj(al) * c1, c1 - al * z * c0
        s = np.maximum(np.abs(c0), np.abs(c1))
        s = np.where(s > 0, s, 1.0)
        c0, c1 = c0 / s, c1 / s
        log = log + np.log(s)
        out0[k], out1[k], logs[k] = c0, c1, log
    return out0, out1, logs


def _row_sweep(alpha, z):
    """Row vectors ``e1^T S'_b ... S'_k`` for ``k = b .. a`` (scaled).

    Returned arrays are indexed by ``k - a``.
    """
    n = alpha.shape[0] - 1
    batch = np.broadcast(alpha[0], z).shape
    r0 = np.ones(batch, dtype=complex)
    r1 = np.zeros(batch, dtype=complex)
    log = np.zeros(batch)
    out0 = np.empty((n,) + batch, dtype=complex)
    out1 = np.empty_like(out0)
    logs = np.empty((n,) + batch)
    for k in range(n - 1, -1, -1):
        al = alpha[k + 1]
        r0, r1 = r0 * z - r1 * al * z, -r0 * np.conj(al) + r1
        s = np.maximum(np.abs(r0), np.abs(r1))
        s = np.where(s > 0, s, 1.0)
        r0, r1 = r0 / s, r1 / s
        log = log + np.log(s)
        out0[k], out1[k], logs[k] = r0, r1, log
    return out0, out1, logs


def prefix_logdets(params: ModelParams, a: int, b: int, z, theta=None, bc=None):
    """``(log|P_[a,k]|, phase)`` for ``k = a .. b``; vectorised over ``theta``/``z``.

    Each ``P_[a,k]`` uses the native ``alpha_k`` on its right edge (``bc``'s
    ``gamma`` only affects ``k = b``).
    """
    alpha, _ = window_coefficients(params, a, b, theta, bc)
    z = np.asarray(z, dtype=complex)
    # P_[a,k] = e1^T T_k (1, -beta)^T
    c0, _, logs = _column_sweep(alpha, z, (np.ones_like(alpha[0]), -alpha[0]))
    la, ph = _as_log(c0)
    return la + logs, ph


def suffix_logdets(params: ModelParams, a: int, b: int, z, theta=None, bc=None):
    """``(log|P_[k,b]|, phase)`` for ``k = a .. b``; vectorised over ``theta``/``z``.

    Each ``P_[k,b]`` uses the native ``alpha_{k-1}`` on its left edge (``bc``'s
    ``beta`` only affects ``k = a``).
    """
    alpha, _ = window_coefficients(params, a, b, theta, bc)
    z = np.asarray(z, dtype=complex)
    r0, r1, logs = _row_sweep(alpha, z)
    la, ph = _as_log(r0 - alpha[:-1] * r1)
    return la + logs, ph


def transfer_logdet(params: ModelParams, a: int, b: int, z, theta=None, bc=None):
    """``(log|P_[a,b]|, phase)`` from the full transfer product; vectorised."""
    alpha, _ = window_coefficients(params, a, b, theta, bc)
    z = np.asarray(z, dtype=complex)
    one, zero = np.ones_like(alpha[0]), np.zeros_like(alpha[0])
    t00, _, l0 = _column_sweep(alpha, z, (one, zero))
    t01, _, l1 = _column_sweep(alpha, z, (zero, one))
    t00, t01, l0, l1 = t00[-1], t01[-1], l0[-1], l1[-1]
    ref = np.maximum(l0, l1)
    t00 = t00 * np.exp(l0 - ref)
    t01 = t01 * np.exp(l1 - ref)
    # boundary determinants with beta = -1 and beta = +1
    p_minus = t00 + t01
    p_plus = t00 - t01
    beta = alpha[0]
    la, ph = _as_log(0.5 * ((1 - beta) * p_minus + (1 + beta) * p_plus))
    return la + ref, ph


def _sze2_logdet(params, a, b, z, theta, bc):
    alpha, _ = window_coefficients(params, a, b, theta, bc)
    z = np.asarray(z, dtype=complex)
    r0, r1, logs = _row_sweep(alpha, z)
    if b == a:
        la, ph = _as_log(r0[0] - alpha[0] * r1[0])
        return la + logs[0], ph
    # P_[a+1,b] from the previous stage, then P_[a,b] = z P_[a+1,b] - beta T_01
    inner = (r0[1] - alpha[1] * r1[1]) * np.exp(logs[1] - logs[0])
    la, ph = _as_log(z * inner - alpha[0] * r1[0])
    return la + logs[0], ph


# -- dense routes -------------------------------------------------------------


def _slogdet(m):
    sign, logabs = np.linalg.slogdet(m)
    return float(logabs), complex(sign)


def _single_site(params, k, z, theta, bc):
    alpha, _ = window_coefficients(params, k, k, theta, bc)
    return _as_log(z + np.conj(alpha[1]) * alpha[0])


def _lu_logdet(window, z):
    return _slogdet(z * np.eye(window.size) - window.dense())


def _cmv_logdet(window, z):
    L = window.L.toarray()
    M = window.M.toarray()
    ld_L, ph_L = _slogdet(L)
    if np.isfinite(ld_L) and ld_L > -30:
        ld_A, ph_A = _slogdet(z * np.linalg.inv(L) - M)
        return ld_L + ld_A, ph_L * ph_A
    ld_M, ph_M = _slogdet(M)
    if not np.isfinite(ld_M):
        # both factors singular: fall back to elimination
        return _lu_logdet(window, z)
    ld_A, ph_A = _slogdet(z * np.linalg.inv(M) - L)
    return ld_M + ld_A, ph_M * ph_A


def box_logdet(params: ModelParams, a: int, b: int, z, theta=None, route="lu", bc=None):
    """``(log|P_[a,b],z|, phase)`` for a single window and a scalar ``z``.

    ``b < a`` is the empty window (``P = 1``); a single site is handled in
    closed form.
    """
    route = Route(route)
    z = complex(z)
    if b < a:
        return 0.0, 1 + 0j
    if b == a:
        la, ph = _single_site(params, a, z, theta, bc)
        return float(la), complex(ph)
    if route in (Route.LU, Route.CMV):
        window = build_window(params, a, b, bc, theta=theta)
        return _lu_logdet(window, z) if route is Route.LU else _cmv_logdet(window, z)
    if route is Route.SZE1:
        la, ph = transfer_logdet(params, a, b, z, theta, bc)
    else:
        la, ph = _sze2_logdet(params, a, b, z, theta, bc)
    return float(la), complex(ph)


def box_determinant(params: ModelParams, a: int, b: int, z, theta=None, route="lu", bc=None) -> BoxDeterminant:
    la, ph = box_logdet(params, a, b, z, theta, route, bc)
    th = params.theta if theta is None else float(theta) % 1.0
    return BoxDeterminant(a, b, complex(z), th, Route(route), la, ph)


def factor_logdet(params: ModelParams, a: int, b: int, parity: int, theta=None, bc=None) -> float:
    """``log|det|`` of ``L|[a,b]`` (parity 0) or ``M|[a,b]`` (parity 1).

    Interior blocks have determinant -1; only the half-blocks cut by the
    window edges contribute, through ``-alpha_{a-1}`` and ``conj(alpha_b)``.
    """
    if b < a:
        return 0.0
    alpha, _ = window_coefficients(params, a, b, theta, bc)
    total = 0.0
    with np.errstate(divide="ignore"):
        if (a - 1) % 2 == parity:
            total += float(np.log(np.abs(alpha[0])))
        if b % 2 == parity:
            total += float(np.log(np.abs(alpha[-1])))
    return total


def z_polynomial_coefficients(params: ModelParams, a: int, b: int, theta=None, bc=None, radius: float = 1.0):
    """Coefficients of ``z -> P_[a,b],z`` (ascending) from samples on ``|z| = radius``."""
    d = b - a + 1
    K = 2 * d + 2
    zs = radius * np.exp(1j * TWO_PI * np.arange(K) / K)
    la, ph = transfer_logdet(params, a, b, zs, theta, bc)
    vals = ph * np.exp(la)
    coef = np.fft.fft(vals) / K
    return coef / radius ** np.arange(K)


# -- transfer-matrix identities -------------------------------------------------------


def _normalized_product(alpha, rho, z):
    T = np.eye(2, dtype=complex)
    for k in range(1, len(alpha)):
        S = np.array([[z, -np.conj(alpha[k])], [-alpha[k] * z, 1.0]]) / abs(rho[k])
        T = S @ T
    return T


def _dual(pz, pw, z, degree):
    """``p^*(z) = z^degree conj(p(1/conj z))`` given ``pz = p(z)`` and ``pw = p(1/conj z)``."""
    return z**degree * np.conj(pw)


def det_transfer_identity(params: ModelParams, a: int, b: int, z, theta=None):
    """Relative residuals of the two determinant expressions for ``S_b ... S_a``.

    The first expression uses the one-sided determinants ``P^{+-1, .}`` with
    the dual taken at degree ``b - a + 1``; the second uses ``P_[a,b]`` and
    ``P_[a+1,b]`` with duals at degree ``b - a``.  All determinants come
    from the LU route.
    """
    z = complex(z)
    if z == 0:
        raise ValueError("z must be nonzero")
    alpha, rho = window_coefficients(params, a, b, theta)
    if abs(alpha[0]) < SZE2_ALPHA_TOL:
        raise IdentityInapplicableError(
            f"alpha_{a - 1} = {alpha[0]:.3g}; the second identity divides by it"
        )
    T = _normalized_product(alpha, rho, z)
    scale = 1.0 / np.prod(np.abs(rho[1:]))
    w = 1.0 / np.conj(z)
    d = b - a + 1

    def det(zz, lo, hi, beta=None):
        la, ph = box_logdet(params, lo, hi, zz, theta, "lu", None if beta is None else (beta, None))
        return ph * math.exp(la)

    pm_z, pp_z = det(z, a, b, -1.0), det(z, a, b, 1.0)
    pm_w, pp_w = det(w, a, b, -1.0), det(w, a, b, 1.0)
    sum_z, diff_z = pm_z + pp_z, pm_z - pp_z
    sum_w, diff_w = pm_w + pp_w, pm_w - pp_w
    rhs1 = scale / 2 * np.array([[sum_z, diff_z], [_dual(diff_z, diff_w, z, d), _dual(sum_z, sum_w, z, d)]])

    inner_z, inner_w = det(z, a + 1, b), det(w, a + 1, b)
    full_z, full_w = det(z, a, b), det(w, a, b)
    off_z = (z * inner_z - full_z) / alpha[0]
    off_w = (w * inner_w - full_w) / alpha[0]
    rhs2 = scale * np.array([
        [z * inner_z, off_z],
        [z * _dual(off_z, off_w, z, d - 1), _dual(inner_z, inner_w, z, d - 1)],
    ])
    nrm = np.linalg.norm(T, 2)
    return float(np.linalg.norm(T - rhs1, 2) / nrm), float(np.linalg.norm(T - rhs2, 2) / nrm)


def two_step_block(params: ModelParams, theta, z) -> np.ndarray:
    """``|rho_0 rho_1| z^-1 S_1 S_0`` written out entrywise (first row uses ``l1' l2 sin``)."""
    s = params.lambda2 * math.sin(TWO_PI * theta)
    l1p = params.lambda1p
    return np.array([
        [l1p * s + z, -l1p - s / z],
        [-l1p - s * z, l1p * s + 1 / z],
    ], dtype=complex)


def upper_left_corner(params: ModelParams, n: int, z, theta=None) -> complex:
    """Upper-left entry of ``z^{n-1} S'_{2n} D(theta+(n-1)omega) ... D(theta)``.

    ``S'_{2n}`` is the unnormalised Szego matrix; with the normalised one the
    entry is ``P_[1,2n] / lambda1``.
    """
    z = complex(z)
    th = params.theta if theta is None else theta
    T = np.eye(2, dtype=complex)
    for j in range(n):
        T = two_step_block(params, (th + j * params.omega) % 1.0, z) @ T
    al = params.lambda1p
    last = np.array([[z, -al], [-al * z, 1.0]])
    return complex(z ** (n - 1) * (last @ T)[0, 0])


# -- structure of P_[1,2n] in theta ---------------------------------------------------


@dataclass
class SinePolynomialReport:
    n: int
    z: complex
    grid_size: int
    coefficients: np.ndarray = field(repr=False)
    tail_mass: float
    evenness_residual: float

    @property
    def frequencies(self) -> np.ndarray:
        return np.fft.fftfreq(self.grid_size, 1.0 / self.grid_size).astype(int)


def theta_profile(params: ModelParams, n: int, z, thetas) -> np.ndarray:
    """``P_[1,2n],z(theta)`` over an array of phases."""
    la, ph = transfer_logdet(params, 1, 2 * n, complex(z), np.asarray(thetas, dtype=float))
    return ph * np.exp(la)


def sine_polynomial_check(params: ModelParams, n: int, z, grid_size: int | None = None) -> SinePolynomialReport:
    """Fourier tail beyond degree ``n`` and evenness after recentering.

    Evenness is measured for ``g(t) = P(t + 1/4 - (n-1) omega / 2)`` as
    ``max |g(t) - g(-t)| / max |g|``.
    """
    if n < 1:
        raise ValueError("n must be positive")
    G = 8 * n + 8 if grid_size is None else int(grid_size)
    if G < 4 * n + 4:
        raise ValueError(f"grid_size {G} is below 4n+4 = {4 * n + 4}")
    t = np.arange(G) / G
    vals = theta_profile(params, n, z, t)
    coef = np.fft.fft(vals) / G
    freq = np.abs(np.fft.fftfreq(G, 1.0 / G))
    power = np.abs(coef) ** 2
    tail = math.sqrt(power[freq > n].sum() / power.sum())
    shift = 0.25 - (n - 1) * params.omega / 2
    g_plus = theta_profile(params, n, z, t + shift)
    g_minus = theta_profile(params, n, z, -t + shift)
    even = float(np.abs(g_plus - g_minus).max() / np.abs(g_plus).max())
    return SinePolynomialReport(n, complex(z), G, coef, tail, even)


@dataclass
class AverageLogDetReport:
    n: int
    z: complex
    grid_size: int
    numeric: float
    bound_a: float
    bound_b: float
    excluded: int
    tolerance: float

    @property
    def holds_a(self) -> bool:
        return self.numeric >= self.bound_a - self.tolerance

    @property
    def holds_b(self) -> bool:
        return self.numeric >= self.bound_b - self.tolerance

    @property
    def supported(self) -> str:
        """Which candidate lower bound the data is consistent with."""
        if self.holds_a and self.holds_b:
            return "both"
        if self.holds_b:
            return "bound_b"
        if self.holds_a:
            return "bound_a"
        return "neither"


def average_log_det(params: ModelParams, n: int, z, grid_size: int = 1 << 12, tolerance: float = 0.01) -> AverageLogDetReport:
    """``(1/2n) * mean_theta ln|P_[1,2n],z(theta)|`` against the two candidate bounds.

    ``bound_a = ln(l2 (1 + l1')) / 2`` and ``bound_b = ln(l2 (1 + l1') / 2) / 2``.
    Grid points with ``|P| < 1e-250`` are dropped and counted.
    """
    if grid_size < 1 << 12:
        raise ValueError("grid_size must be at least 4096")
    t = np.arange(grid_size) / grid_size
    la, _ = transfer_logdet(params, 1, 2 * n, complex(z), t)
    keep = la > math.log(1e-250)
    numeric = float(np.mean(la[keep]) / (2 * n))
    base = params.lambda2 * (1 + params.lambda1p)
    with np.errstate(divide="ignore"):
        bound_a = 0.5 * float(np.log(base))
        bound_b = 0.5 * float(np.log(base / 2))
    return AverageLogDetReport(n, complex(z), grid_size, numeric, bound_a, bound_b,
                               int(np.count_nonzero(~keep)), tolerance)


# -- Green's functions ------------------------------------------------------------------


@dataclass(frozen=True)
class GreenEntry:
    """``G(y, edge)`` from the direct inverse, with its Cramer-rule modulus.

    ``variant`` is ``"G"`` for ``(z L|^-1 - M|)^-1`` and ``"G~"`` for
    ``(z M|^-1 - L|)^-1``.
    """

    a: int
    b: int
    z: complex
    y: int
    edge: str
    variant: str
    value: complex
    cramer: float

    @property
    def rel_err(self) -> float:
        return abs(abs(self.value) - self.cramer) / self.cramer


def green_variant(y: int, edge: str) -> str:
    """Which inverse carries the Cramer factorisation for ``(y, edge)``.

    Left edge: odd ``y`` uses ``G``, even ``y`` uses ``G~``.  Right edge:
    the parities swap.
    """
    odd = y % 2 == 1
    if edge == "left":
        return "G" if odd else "G~"
    if edge == "right":
        return "G~" if odd else "G"
    raise ValueError(f"edge must be 'left' or 'right', got {edge!r}")


def _check_denominator(params, a, b, z, theta, bc=None):
    la, _ = box_logdet(params, a, b, z, theta, "lu", bc)
    if not np.isfinite(la) or la < SINGULAR_LOG:
        raise SingularWindowError(f"z = {z} is an eigenvalue of the window [{a}, {b}]")
    return la


def green_log_modulus(params: ModelParams, a: int, b: int, z, theta=None, edge="left"):
    """``log|G(y, edge)|`` for every ``y`` in ``[a, b]`` by the Cramer formulas.

    Uses the transfer sweeps, so it scales to long windows.  Each ``y`` is
    routed to ``G`` or ``G~`` by ``green_variant``.  Off the unit circle a
    factor ``|z|^ceil(d/2)`` enters, ``d`` the distance from ``y`` to the edge.
    """
    z = complex(z)
    ys = np.arange(a, b + 1)
    _, rho = window_coefficients(params, a, b, theta)
    log_rho = np.log(np.abs(rho[1:]))
    cum = np.concatenate([[0.0], np.cumsum(log_rho)])  # cum[i] = sum_{j<a+i} ln|rho_j|
    full, _ = transfer_logdet(params, a, b, z, theta)
    full = float(full)
    pre, _ = prefix_logdets(params, a, b, z, theta)
    suf, _ = suffix_logdets(params, a, b, z, theta)
    out = np.empty(len(ys))
    log_z = math.log(abs(z))
    for i, y in enumerate(ys):
        parity = 0 if green_variant(int(y), edge) == "G" else 1
        f_full = factor_logdet(params, a, b, parity, theta)
        if edge == "left":
            rho_sum = cum[i]
            sub = float(suf[i + 1]) if y < b else 0.0
            f_sub = factor_logdet(params, int(y) + 1, b, parity, theta)
        else:
            rho_sum = cum[b - a] - cum[i]
            sub = float(pre[i - 1]) if y > a else 0.0
            f_sub = factor_logdet(params, a, int(y) - 1, parity, theta)
        dist = y - a if edge == "left" else b - y
        out[i] = rho_sum + sub - full + f_full - f_sub + (dist + 1) // 2 * log_z
    return ys, out


def green_entry(params: ModelParams, a: int, b: int, z, theta=None, y: int | None = None, edge: str = "left") -> GreenEntry:
    if y is None or not a <= y <= b:
        raise ValueError(f"y must lie in [{a}, {b}]")
    z = complex(z)
    _check_denominator(params, a, b, z, theta)
    window = build_window(params, a, b, theta=theta)
    variant = green_variant(y, edge)
    L, M = window.L.toarray(), window.M.toarray()
    if variant == "G":
        A = z * np.linalg.inv(L) - M
    else:
        A = z * np.linalg.inv(M) - L
    col = 0 if edge == "left" else window.size - 1
    rhs = np.zeros(window.size, dtype=complex)
    rhs[col] = 1.0
    value = complex(sla.solve(A, rhs)[y - a])
    ys, logs = green_log_modulus(params, a, b, z, theta, edge)
    return GreenEntry(a, b, z, y, edge, variant, value, float(np.exp(logs[y - a])))


def green_columns(params: ModelParams, a: int, b: int, z, theta=None):
    """Columns ``G(., a)`` and ``G(., b)`` of ``(z L|^-1 - M|)^-1``.

    Computed as ``(z - W|)^-1 L| e`` with a sparse solve, which avoids
    inverting ``L|``.
    """
    z = complex(z)
    window = build_window(params, a, b, theta=theta)
    n = window.size
    lu = spla.splu(sp.csc_matrix(z * sp.identity(n, dtype=complex, format="csc") - window.W))
    rhs = window.L[:, [0, n - 1]].toarray()
    cols = lu.solve(np.ascontiguousarray(rhs))
    if not np.all(np.isfinite(cols)):
        raise SingularWindowError(f"z = {z} is an eigenvalue of the window [{a}, {b}]")
    return cols[:, 0], cols[:, 1]


def _boundary_terms(params, a, b, z, theta, psi):
    alpha, rho = verblunsky(params if theta is None else params.with_theta(theta), np.array([a - 1, b]))
    am1, rm1, ab, rb = alpha[0], rho[0], alpha[1], rho[1]
    if a % 2:
        if abs(am1) < 1e-300:
            raise SingularWindowError(f"alpha_{a - 1} = 0 in the left boundary term")
        left = z * (1 / am1 - np.conj(am1)) * psi[a] + z * rm1 * psi[a - 1]
    else:
        left = -np.conj(rm1) * psi[a - 1]
    if b % 2:
        right = -rb * psi[b + 1]
    else:
        if abs(ab) < 1e-300:
            raise SingularWindowError(f"alpha_{b} = 0 in the right boundary term")
        right = -z * (1 / np.conj(ab) - ab) * psi[b] + z * np.conj(rb) * psi[b + 1]
    return complex(left), complex(right)


def poisson_reconstruct(params: ModelParams, a: int, b: int, z, theta, psi: StateVector, y: int | None = None):
    """Rebuild ``Psi_y`` inside ``[a, b]`` from boundary data of a solution of ``W Psi = z Psi``.

    ``psi`` must cover ``[a-1, b+1]``.  Returns a complex number for a given
    ``y`` and a ``StateVector`` on ``[a, b]`` when ``y`` is ``None``.
    """
    if psi.start > a - 1 or psi.stop < b + 1:
        raise ValueError(f"psi must cover [{a - 1}, {b + 1}]")
    z = complex(z)
    col_a, col_b = green_columns(params, a, b, z, theta)
    left, right = _boundary_terms(params, a, b, z, theta, psi)
    rebuilt = -col_a * left - col_b * right
    if y is None:
        return StateVector(rebuilt, a)
    if not a <= y <= b:
        raise ValueError(f"y must lie in [{a}, {b}]")
    return complex(rebuilt[y - a])


def poisson_bound_terms(params: ModelParams, a: int, b: int, z, theta=None):
    """Log of the two coefficients in the Poisson bound, for each ``y`` in ``[a, b]``.

    ``left[y] = sum_{a<=j<y} ln|rho_j| + ln|P_[y+1,b]| - ln|P_[a,b]|`` and
    ``right[y] = sum_{y<=j<b} ln|rho_j| + ln|P_[a,y-1]| - ln|P_[a,b]|``.
    """
    z = complex(z)
    _, rho = window_coefficients(params, a, b, theta)
    cum = np.concatenate([[0.0], np.cumsum(np.log(np.abs(rho[1:])))])
    full = float(transfer_logdet(params, a, b, z, theta)[0])
    pre, _ = prefix_logdets(params, a, b, z, theta)
    suf, _ = suffix_logdets(params, a, b, z, theta)
    n = b - a + 1
    left = cum[:n] + np.append(suf[1:], 0.0) - full
    right = (cum[n - 1] - cum[:n]) + np.insert(pre[:-1], 0, 0.0) - full
    return left, right


def poisson_bound_constant(params: ModelParams, a: int, b: int, z, theta, psi: StateVector) -> float:
    """Smallest ``C`` with ``|Psi_y| <= C * (Poisson bound)`` over ``y`` in ``[a, b]``."""
    left, right = poisson_bound_terms(params, a, b, z, theta)
    edge_a = max(abs(psi[a - 1]), abs(psi[a]))
    edge_b = max(abs(psi[b]), abs(psi[b + 1]))
    bound = np.exp(left) * edge_a + np.exp(right) * edge_b
    vals = np.abs(np.array([psi[y] for y in range(a, b + 1)]))
    return float(np.max(vals / bound))
