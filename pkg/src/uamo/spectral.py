"""Spectra and eigenfunctions of finite windows; localization diagnostics.

Coordinates: windows are ``[a, b]`` in CMV sites.  The localization
certificate works in coordinates centred on the eigenfunction peak, shifted
by an even number of sites ``c`` so that parities are preserved; the window
``[c + x, c + x']`` of the operator at phase ``theta`` is the window
``[x, x']`` of the operator at phase ``theta + (c/2) omega``.
"""

from __future__ import annotations

import functools
import logging
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.optimize as opt
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from uamo.arithmetic import continued_fraction
from uamo.cocycles import LyapunovConstants, gz_matrices
from uamo.determinants import (
    poisson_bound_constant,
    prefix_logdets,
    suffix_logdets,
    transfer_logdet,
    window_coefficients,
)
from uamo.model import TWO_PI, CMVWindow, ModelParams, StateVector, build_window, verblunsky

logger = logging.getLogger(__name__)


class NoEigenpairError(RuntimeError):
    pass


class UninformativeFitError(ValueError):
    pass


class SchemeUnavailableError(ValueError):
    def __init__(self, message, nearest_y=None):
        self.nearest_y = nearest_y
        super().__init__(message if nearest_y is None else f"{message}; nearest valid y = {nearest_y}")


@dataclass
class EigenPair:
    z: complex
    psi: StateVector | None = None
    residual: float = math.nan
    window: CMVWindow | None = field(default=None, repr=False)

    @property
    def phase(self) -> float:
        """Eigenphase ``x`` in ``[0, 1)`` with ``z = |z| e^{2 pi i x}``."""
        return (np.angle(self.z) / TWO_PI) % 1.0

    @property
    def center(self) -> int:
        return int(self.psi.indices[np.argmax(np.abs(self.psi.amplitudes))])


def centered_window(N: int) -> tuple:
    a = -(N // 2)
    return a, a + N - 1


def phase_distance(x, y) -> np.ndarray:
    d = np.abs(np.asarray(x) - np.asarray(y)) % 1.0
    return np.minimum(d, 1.0 - d)


def hausdorff_phase_distance(xs, ys) -> float:
    xs, ys = np.sort(np.asarray(xs)), np.sort(np.asarray(ys))

    def one_way(p, q):
        k = np.searchsorted(q, p)
        lo, hi = q[(k - 1) % len(q)], q[k % len(q)]
        return float(np.max(np.minimum(phase_distance(p, lo), phase_distance(p, hi))))

    return max(one_way(xs, ys), one_way(ys, xs))


# -- spectrum ----------------------------------------------------------------------------


def _dense_phases(window):
    ev = np.linalg.eigvals(window.dense())
    return ev


def _char_values(params, N, xs, theta, bc, c, found):
    """Sign and log-modulus of ``P_[1,N](e^{2 pi i x})`` with known roots divided out.

    On the circle ``e^{-i pi N x} c P`` is real and equals a constant times
    ``prod_j 2 sin(pi (x - x_j))``, so dividing by the factors of the roots
    in ``found`` leaves a function whose sign changes and log-singularities
    sit only at the roots still missing.
    """
    shape = np.shape(xs)
    xs = np.ravel(xs)
    sign = np.empty(len(xs))
    logmod = np.empty(len(xs))
    chunk = max(64, (1 << 21) // max(N, len(found), 1))
    for s in range(0, len(xs), chunk):
        x = xs[s:s + chunk]
        la, ph = transfer_logdet(params, 1, N, np.exp(1j * TWO_PI * x), theta, bc)
        sg = np.sign((ph * np.exp(-1j * np.pi * N * x) * c).real)
        if len(found):
            sines = np.sin(np.pi * (x[:, None] - found[None, :]))
            sg = sg * np.prod(np.sign(sines), axis=1)
            with np.errstate(divide="ignore"):
                la = la - np.sum(np.log(np.abs(2 * sines)), axis=1)
        sign[s:s + chunk] = sg
        logmod[s:s + chunk] = la
    return sign.reshape(shape), logmod.reshape(shape)


def _bisect(sign_of, lo, hi, slo, xtol=1e-15):
    """Simultaneous bisection of many sign-change brackets."""
    lo, hi, slo = lo.copy(), hi.copy(), slo.copy()
    steps = int(np.ceil(np.log2(max(float(np.max(hi - lo)), xtol) / xtol))) + 1
    for _ in range(steps):
        mid = 0.5 * (lo + hi)
        sm = sign_of(mid)
        left = sm == slo
        lo = np.where(left, mid, lo)
        hi = np.where(left, hi, mid)
    return 0.5 * (lo + hi)


def _root_phases(params, N, theta, bc, oversample=16, rounds=12, zoom=65):
    la0, ph0 = transfer_logdet(params, 1, N, 0j, theta, bc)
    if abs(float(la0)) > 1e-8:
        logger.warning("non-unitary boundary: roots may leave the circle")
    c = np.sqrt(np.conj(complex(ph0)))
    values = lambda x, known: _char_values(params, N, x, theta, bc, c, known)
    found = np.empty(0)
    base = np.arange(oversample * N + 1)[None, :] / (oversample * N)
    zooms = np.empty((0, zoom))
    for _ in range(rounds):
        for grid in (base, zooms):
            if not len(grid):
                continue
            sg, _ = values(grid, found)
            r, k = np.nonzero(sg[:, :-1] * sg[:, 1:] < 0)
            if len(k):
                frozen = found.copy()
                new = _bisect(lambda x: values(x, frozen)[0], grid[r, k], grid[r, k + 1], sg[r, k])
                found = np.sort(np.concatenate([found, np.mod(new, 1.0)]))
        missing = N - len(found)
        logger.debug("%d of %d roots after scanning %d zoomed cells", len(found), N, len(zooms))
        if missing <= 0:
            break
        # after deflation, minima of the modulus flanked by equal signs hide
        # roots that share a cell with another root
        cells = []
        for grid in (base, zooms):
            if not len(grid):
                continue
            sg, lm = values(grid, found)
            dip = (lm[:, 1:-1] < lm[:, :-2]) & (lm[:, 1:-1] < lm[:, 2:]) & (sg[:, :-2] == sg[:, 2:])
            r, k = np.nonzero(dip)
            cells += [(v, grid[i, j], grid[i, j + 2]) for i, j, v in zip(r, k, lm[r, k + 1])]
        if not cells:
            break
        cells = sorted(cells)[: 2 * missing]
        t = np.linspace(0.0, 1.0, zoom)
        zooms = np.array([lo + (hi - lo) * t for _, lo, hi in cells])
    if len(found) != N:
        logger.warning("root isolation found %d of %d eigenphases", len(found), N)
    return found


def truncated_spectrum(params: ModelParams, N: int, bc=(1.0, 1.0), method: str = "dense", theta=None) -> list:
    """Eigenvalues of the window ``[1, N]``, sorted by eigenphase.

    ``method="roots"`` isolates the zeros of ``x -> P_[1,N](e^{2 pi i x})`` on
    the circle; it needs unimodular boundary values.
    """
    if N < 2:
        raise ValueError("N must be at least 2")
    if method == "dense":
        if N > 4096:
            raise ValueError("dense route is limited to N <= 4096")
        window = build_window(params, 1, N, bc, theta=theta)
        if not window.is_unitary_bc():
            logger.warning("non-unitary boundary: eigenvalues may leave the circle")
        ev = _dense_phases(window)
    elif method == "roots":
        ev = np.exp(1j * TWO_PI * _root_phases(params, N, theta, bc))
    else:
        raise ValueError(f"unknown method {method!r}")
    pairs = [EigenPair(complex(z)) for z in ev]
    return sorted(pairs, key=lambda p: p.phase)


def spectral_gaps(phases, factor: float = 10.0) -> np.ndarray:
    """Gaps between consecutive eigenphases exceeding ``factor`` times the median spacing."""
    x = np.sort(np.asarray(phases) % 1.0)
    gaps = np.diff(np.append(x, x[0] + 1.0))
    return gaps[gaps > factor * np.median(gaps)]


# -- eigenvectors ------------------------------------------------------------------------


def eigenpair_extract(params: ModelParams, N: int, target_phase: float, bc=(1.0, 1.0), a: int | None = None,
                      tol: float = 1e-12, maxiter: int = 40, seed: int = 0) -> EigenPair:
    """Inverse iteration with Rayleigh-quotient shifts on ``z - W|``.

    The window is ``[a, a + N - 1]`` (centred on 0 by default).
    """
    if a is None:
        a, _ = centered_window(N)
    window = build_window(params, a, a + N - 1, bc)
    W = window.W.tocsc()
    eye = sp.identity(N, dtype=complex, format="csc")
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(N) + 1j * rng.standard_normal(N)
    v /= np.linalg.norm(v)
    z = np.exp(2j * math.pi * target_phase)
    residual = math.inf
    for it in range(maxiter):
        try:
            lu = spla.splu(z * eye - W)
        except RuntimeError:
            # z hit an eigenvalue exactly; nudge it
            z *= np.exp(1e-13j)
            continue
        x = lu.solve(v)
        v = x / np.linalg.norm(x)
        Wv = W @ v
        z_new = complex(np.vdot(v, Wv))
        residual = float(np.linalg.norm(Wv - z_new * v))
        if residual <= tol:
            z = z_new
            break
        # shift update only once the vector has settled on one eigenvalue
        if it >= 1:
            z = z_new
    else:
        raise NoEigenpairError(f"no convergence after {maxiter} iterations (residual {residual:.3g})")
    return EigenPair(z, StateVector(v, a), residual, window)


def mid_window_eigenpair(params: ModelParams, N: int, candidates: int = 48, bc=(1.0, 1.0), seed: int = 0) -> EigenPair:
    """The extracted eigenpair whose amplitude peak is closest to the window middle."""
    a, b = centered_window(N)
    mid = (a + b) / 2
    best = None
    for k in range(candidates):
        try:
            pair = eigenpair_extract(params, N, (k + 0.5) / candidates, bc, a, seed=seed + k)
        except NoEigenpairError:
            continue
        if best is None or abs(pair.center - mid) < abs(best.center - mid):
            best = pair
    if best is None:
        raise NoEigenpairError("no candidate converged")
    return best


@dataclass
class GZSolutionPair:
    u: np.ndarray
    v: np.ndarray
    start: int
    z: complex


def gz_pair(pair: EigenPair) -> GZSolutionPair:
    """``u = Psi`` and ``v = L|^-1 u`` on the eigenpair's window."""
    w = pair.window
    u = pair.psi.amplitudes
    v = spla.spsolve(w.L.tocsc(), u)
    return GZSolutionPair(u, np.asarray(v), w.a, pair.z)


def gz_residual(pair: EigenPair) -> float:
    """``max_n |(u, v)_{n+1} - M_{n,z} (u, v)_n| / ||Psi||_inf`` along the window."""
    g = gz_pair(pair)
    w = pair.window
    sites = np.arange(w.a, w.b)
    alpha, rho = verblunsky(w.params, sites)
    M = gz_matrices(alpha, rho, g.z, sites)
    state = np.stack([g.u[:-1], g.v[:-1]], axis=-1)
    nxt = np.einsum("nij,nj->ni", M, state)
    err = np.abs(nxt - np.stack([g.u[1:], g.v[1:]], axis=-1)).max()
    return float(err / np.abs(g.u).max())


# -- decay -------------------------------------------------------------------------------


def _edge_ratio(w: CMVWindow, z, side):
    """``v/u`` at a window edge, fixed by the boundary coefficient there."""
    if side == "right":
        return w.gamma if w.b % 2 == 0 else np.conj(w.gamma) / z
    return -np.conj(w.beta) if w.a % 2 else -w.beta / z


def shooting_log_profile(pair: EigenPair, side: str) -> np.ndarray:
    """``log|u_n|`` (up to a constant) of the solution obeying one edge condition.

    Integrated from that edge towards the other with renormalisation; the
    solution grows away from the edge, so the integration is stable.
    """
    w = pair.window
    z = complex(pair.z)
    sites = np.arange(w.a, w.b)
    alpha, rho = verblunsky(w.params, sites)
    M = gz_matrices(alpha, rho, z, sites)
    n = w.size
    out = np.empty(n)
    acc = 0.0
    if side == "right":
        s = np.array([1.0, _edge_ratio(w, z, "right")], dtype=complex)
        out[-1] = 0.0
        for k in range(n - 2, -1, -1):
            s = np.linalg.solve(M[k], s)
            r = np.abs(s).max()
            s /= r
            acc += math.log(r)
            out[k] = acc + math.log(abs(s[0])) if s[0] != 0 else -math.inf
    elif side == "left":
        s = np.array([1.0, _edge_ratio(w, z, "left")], dtype=complex)
        out[0] = 0.0
        for k in range(n - 1):
            s = M[k] @ s
            r = np.abs(s).max()
            s /= r
            acc += math.log(r)
            out[k + 1] = acc + math.log(abs(s[0])) if s[0] != 0 else -math.inf
    else:
        raise ValueError("side must be 'left' or 'right'")
    return out


def log_amplitude_profile(pair: EigenPair, match_level: float = 1e-6) -> np.ndarray:
    """``log|Psi_y|`` across the window with tails below roundoff restored by shooting."""
    amp = np.abs(pair.psi.amplitudes)
    with np.errstate(divide="ignore"):
        prof = np.log(amp)
    peak = int(np.argmax(amp))
    top = amp[peak]
    right = shooting_log_profile(pair, "right")
    left = shooting_log_profile(pair, "left")
    above = amp >= match_level * top
    r_idx = peak + int(np.argmin(above[peak:])) - 1 if not above[peak:].all() else len(amp) - 1
    l_run = above[: peak + 1][::-1]
    l_idx = peak - (int(np.argmin(l_run)) - 1) if not l_run.all() else 0
    if r_idx < len(amp) - 1:
        prof[r_idx:] = right[r_idx:] + (prof[r_idx] - right[r_idx])
    if l_idx > 0:
        prof[: l_idx + 1] = left[: l_idx + 1] + (prof[l_idx] - left[l_idx])
    return prof


@dataclass(frozen=True)
class DecayFit:
    slope: float
    intercept: float
    r2: float
    center: int
    npoints: int

    @property
    def decaying(self) -> bool:
        """False when the fitted rate is below 0.02 per site."""
        return self.slope < -0.02


def decay_rate_fit(pair: EigenPair, fit_window=(0.2, 0.8), edge_buffer: float = 0.05) -> DecayFit:
    """Least-squares slope of ``(1/2) ln(|Psi_y|^2 + |Psi_{y+1}|^2)`` against ``|y - center|``.

    Radii ``fit_window * N/2`` around the peak; ``edge_buffer * N`` sites are
    dropped at each window edge.
    """
    w = pair.window
    N = w.size
    prof = log_amplitude_profile(pair)
    pair_log = 0.5 * np.logaddexp(2 * prof[:-1], 2 * prof[1:])
    ys = np.arange(w.a, w.b)
    center = pair.center
    buf = int(math.ceil(edge_buffer * N))
    if not w.a + buf <= center <= w.b - buf:
        raise UninformativeFitError(f"peak at {center} lies within {buf} sites of the edge")
    dist = np.abs(ys - center)
    lo, hi = fit_window[0] * N / 2, fit_window[1] * N / 2
    keep = (dist >= lo) & (dist <= hi) & (ys >= w.a + buf) & (ys + 1 <= w.b - buf) & np.isfinite(pair_log)
    if np.count_nonzero(keep) < 20:
        raise UninformativeFitError("fewer than 20 usable sites in the fit window")
    x, yv = dist[keep].astype(float), pair_log[keep]
    A = np.vstack([x, np.ones_like(x)]).T
    (slope, intercept), *_ = np.linalg.lstsq(A, yv, rcond=None)
    fitted = A @ np.array([slope, intercept])
    ss_res = float(np.sum((yv - fitted) ** 2))
    ss_tot = float(np.sum((yv - yv.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 0.0
    return DecayFit(float(slope), float(intercept), r2, center, int(np.count_nonzero(keep)))


# -- dynamics ----------------------------------------------------------------------------


@dataclass
class SpreadSeries:
    times: np.ndarray
    second_moment: np.ndarray
    complete: bool = True

    def loglog_slope(self, t_min: float, t_max: float) -> float:
        sel = (self.times >= t_min) & (self.times <= t_max) & (self.times > 0)
        x, y = np.log(self.times[sel]), np.log(self.second_moment[sel])
        return float(np.polyfit(x, y, 1)[0])

    def ballistic_fit(self, t_min: float = 0.0):
        """``<X^2> ~ c t^2 + d``; returns ``(c, r2)``."""
        sel = self.times >= t_min
        t2, m = self.times[sel].astype(float) ** 2, self.second_moment[sel]
        c, d = np.polyfit(t2, m, 1)
        resid = m - (c * t2 + d)
        r2 = 1.0 - float(np.sum(resid**2) / np.sum((m - m.mean()) ** 2))
        return float(c), r2


def evolve_moments(params: ModelParams, N: int, T: int, edge_margin: int = 50, edge_tol: float = 1e-12,
                   bc=(1.0, 1.0)) -> SpreadSeries:
    """``<X^2>(t)``, ``X = site / 2``, for ``W|^t delta_0`` on the centred window of ``N`` sites.

    Stops early (``complete=False``) once more than ``edge_tol`` of the
    probability sits within ``edge_margin`` sites of an edge.
    """
    if T < 0:
        raise ValueError("T must be nonnegative")
    a, b = centered_window(N)
    window = build_window(params, a, b, bc)
    L, M = window.L.tocsr(), window.M.tocsr()
    sites = np.arange(a, b + 1)
    x2 = (sites / 2.0) ** 2
    near_edge = (sites < a + edge_margin) | (sites > b - edge_margin)
    psi = np.zeros(N, dtype=complex)
    psi[-a] = 1.0
    times, moments = [0], [0.0]
    for t in range(1, T + 1):
        psi = L @ (M @ psi)
        prob = np.abs(psi) ** 2
        if prob[near_edge].sum() > edge_tol:
            logger.info("wavefront reached the edge at t=%d", t)
            return SpreadSeries(np.array(times), np.array(moments), complete=False)
        times.append(t)
        moments.append(float(prob @ x2))
    return SpreadSeries(np.array(times), np.array(moments))


# -- localization scheme -----------------------------------------------------------------------


def _odd_between(lo: int, hi: int) -> np.ndarray:
    start = lo if lo % 2 else lo + 1
    return np.arange(start, hi + 1, 2)


@dataclass
class LocalizationScheme:
    y: int
    epsilon: float
    omega: float
    n: int
    q_n: int
    q_next: int
    m: int
    q_m: int
    q_m_next: int
    s: int
    h: int
    I1: np.ndarray = field(repr=False)
    I2: np.ndarray = field(repr=False)

    @property
    def nodes(self) -> np.ndarray:
        return np.union1d(self.I1, self.I2)

    @property
    def degree(self) -> int:
        """Degree in the sine variable of ``P`` over a window of ``h`` sites."""
        return self.h // 2

    def checks(self) -> dict:
        y, e = self.y, self.epsilon
        return {
            "n_sandwich": e * self.q_n < y < self.q_next / 20,
            "m_largest": y >= 6 * self.q_m and y < 6 * self.q_m_next,
            "s_sandwich": max(e * self.q_n, 6 * self.s * self.q_m) <= y
            < min(6 * (self.s + 1) * self.q_m, 6 * self.q_m_next),
            "node_count": len(self.nodes) >= self.degree + 1,
        }


def localization_scheme(y: int, omega: float, epsilon: float = 0.05) -> LocalizationScheme:
    """Scales ``n, m, s, h`` and the odd-integer node intervals around ``y``."""
    y = int(y)
    cf = continued_fraction(omega)
    q = cf.q
    n = next((k for k in range(1, len(q) - 1) if epsilon * q[k] < y < q[k + 1] / 20), None)
    if n is None:
        nearest = None
        for k in range(1, len(q) - 1):
            lo, hi = math.floor(epsilon * q[k]) + 1, math.ceil(q[k + 1] / 20) - 1
            if lo <= hi:
                cand = min(max(y, lo), hi)
                if nearest is None or abs(cand - y) < abs(nearest - y):
                    nearest = cand
        raise SchemeUnavailableError(f"no continued-fraction scale n fits y={y}", nearest)
    ms = [k for k in range(1, len(q)) if y >= 6 * q[k]]
    if not ms:
        raise SchemeUnavailableError(f"y={y} is below 6 q_1", 6 * q[1])
    m = max(ms)
    s = y // (6 * q[m])
    if not (max(epsilon * q[n], 6 * s * q[m]) <= y < min(6 * (s + 1) * q[m], 6 * q[m + 1])):
        raise SchemeUnavailableError(f"no admissible s for y={y}")
    sq = s * q[m]
    h = 2 * sq - 2
    I1 = _odd_between(y - sq - sq // 4 + 1, y - sq // 4)
    I2 = _odd_between(-2 * sq + sq // 4 + 1, -sq + sq // 4)
    return LocalizationScheme(y, epsilon, cf.omega, n, q[n], q[n + 1], m, q[m], q[m + 1], s, h, I1, I2)


# -- certificate -------------------------------------------------------------------------------


@dataclass
class LocalizationCertificate:
    """Log-scale margins of the inequality chain at one point ``y``.

    Every ``*_margin`` is (right side) - (left side) of its inequality in
    logarithms, so positive means the inequality holds.
    """

    scheme: LocalizationScheme
    z: complex
    center: int
    theta_shift: float
    x1: int
    x2: int
    best_I1: tuple
    best_I2: tuple
    p_den_margin: float
    nu1_margin: float
    nu2_margin: float
    rate_left: float
    rate_right: float
    target_rate: float
    poisson_constant: float
    log_iterated_bound: float
    log_decay_target: float
    iterations: int
    decay_floor: float = 0.05
    translation: dict = field(default_factory=dict)

    @property
    def min_rate(self) -> float:
        return min(self.rate_left, self.rate_right)

    @property
    def contraction_factor(self) -> float:
        """Per-site contraction ``e^{-min_rate}`` achieved by the Poisson step."""
        return math.exp(-self.min_rate)

    @property
    def contraction_margin(self) -> float:
        return self.min_rate - self.target_rate

    @property
    def iterated_margin(self) -> float:
        return self.log_decay_target - self.log_iterated_bound

    @property
    def passed(self) -> bool:
        """All margins positive and the Poisson step contracts by at least ``decay_floor`` per site."""
        return (
            self.p_den_margin > 0
            and self.nu1_margin > 0
            and self.nu2_margin > 0
            and self.contraction_margin >= 0
            and self.min_rate > self.decay_floor
        )


class _Chain:
    """Determinant data for the certificate, in centred coordinates."""

    def __init__(self, params: ModelParams, z, epsilon):
        self.params = params
        self.z = complex(z)
        self.eps = epsilon
        self.consts = LyapunovConstants.from_params(params)

    def window_logdets(self, starts, h):
        """``log|P_[x, x+h-1]|`` for odd ``x`` via the phase covariance."""
        starts = np.asarray(starts)
        cells = (starts - 1) // 2
        thetas = np.mod(self.params.theta + cells * self.params.omega, 1.0)
        la, _ = transfer_logdet(self.params, 1, h, self.z, thetas)
        return np.asarray(la)

    def best_start(self, candidates, h):
        la = self.window_logdets(candidates, h)
        k = int(np.argmax(la))
        return int(candidates[k]), float(la[k])

    def choose_start(self, y, candidates, h):
        """Start ``x1`` meeting the denominator bound with the best upper-bound margins.

        Falls back to the start maximising ``|P|`` when none qualifies.
        Returns ``(x1, log|P|, step)``.
        """
        candidates = np.asarray(candidates)
        la = self.window_logdets(candidates, h)
        floor = (self.consts.L_plus / 2 - 2 * self.eps) * h
        ok = np.flatnonzero(la >= floor)
        if not len(ok):
            k = int(np.argmax(la))
            return int(candidates[k]), float(la[k]), self.step(y, int(candidates[k]), int(candidates[k]) + h - 1)
        best = None
        for k in ok:
            x1 = int(candidates[k])
            st = self.step(y, x1, x1 + h - 1)
            score = min(st["nu1"], st["nu2"])
            if best is None or score > best[0]:
                best = (score, x1, float(la[k]), st)
        return best[1], best[2], best[3]

    def step(self, y, x1, x2):
        """Margins and Poisson log-coefficients for ``y`` inside ``[x1, x2]``."""
        p = self.params
        _, rho = window_coefficients(p, x1, x2)
        log_rho = np.log(np.abs(rho[1:]))  # sites x1 .. x2
        full = float(transfer_logdet(p, x1, x2, self.z)[0])
        pre, _ = prefix_logdets(p, x1, x2, self.z)
        suf, _ = suffix_logdets(p, x1, x2, self.z)
        i = y - x1
        left_det = float(pre[i - 1]) if y > x1 else 0.0  # P_[x1, y-1]
        right_det = float(suf[i + 1]) if y < x2 else 0.0  # P_[y+1, x2]
        Lp, Lm, eps = self.consts.L_plus, self.consts.L_minus, self.eps
        d1, d2 = y - x1, x2 - y
        nu1_lhs = float(np.sum(log_rho[i + 1:])) + left_det
        nu1_rhs = d1 / 2 * (Lp + 2 * eps) + d2 / 2 * (Lm + eps)
        nu2_lhs = float(np.sum(log_rho[:i])) + right_det
        nu2_rhs = d2 / 2 * (Lp + 2 * eps) + d1 / 2 * (Lm + eps)
        f_left = float(np.sum(log_rho[:i])) + right_det - full
        f_right = float(np.sum(log_rho[i:-1])) + left_det - full
        return {
            "nu1": nu1_rhs - nu1_lhs,
            "nu2": nu2_rhs - nu2_lhs,
            "f_left": f_left,
            "f_right": f_right,
            "rate_left": -f_left / d1,
            "rate_right": -f_right / d2,
        }


def certificate_replay(params: ModelParams, pair: EigenPair, y: int, epsilon: float = 0.05,
                       depth_cap: int | None = None, decay_floor: float = 0.05,
                       calibration_radius: int = 40) -> LocalizationCertificate:
    """Replay the localization inequalities for ``pair`` at distance ``y`` from its peak.

    The good window start ``x1`` is searched in ``I1`` (the interval near
    ``y``); the best start in ``I2`` is recorded alongside.  The iterated
    Poisson bound recurses on ``x1 - 1, x1`` and ``x2, x2 + 1`` down to the
    base ``||Psi||_inf`` once no scheme is available or after ``depth_cap``
    levels (default ``ceil(10 / epsilon)``).
    """
    scheme = localization_scheme(y, params.omega, epsilon)
    center = pair.center - (pair.center % 2)
    cells = center // 2
    shifted = params.with_theta(params.theta + cells * params.omega)
    chain = _Chain(shifted, pair.z, epsilon)
    h = scheme.h
    best1 = chain.best_start(scheme.I1, h)
    best2 = chain.best_start(scheme.I2, h)
    x1, p_den_log, st = chain.choose_start(scheme.y, scheme.I1, h)
    x2 = x1 + h - 1
    consts = chain.consts
    p_den_margin = p_den_log - (consts.L_plus / 2 - 2 * epsilon) * h
    target = consts.L / 2 - 25 * epsilon

    a = center - calibration_radius
    b = center + calibration_radius
    psi = pair.psi
    if a - 1 >= psi.start and b + 1 <= psi.stop:
        C = poisson_bound_constant(params, a, b, pair.z, None, psi)
    else:
        C = 1.0
    C = max(C, 1.0)
    sup = float(np.abs(psi.amplitudes).max())
    cap = math.ceil(10 / epsilon) if depth_cap is None else depth_cap
    log_sup = math.log(sup)

    @functools.lru_cache(maxsize=None)
    def bound(yy: int, depth: int) -> float:
        if depth >= cap or yy <= 0:
            return log_sup
        try:
            sch = localization_scheme(yy, params.omega, epsilon)
        except SchemeUnavailableError:
            return log_sup
        s1, _, stp = chain.choose_start(yy, sch.I1, sch.h)
        s2 = s1 + sch.h - 1
        if s1 <= epsilon * sch.q_n or s2 >= sch.q_next / 20:
            return log_sup
        left = max(bound(s1 - 1, depth + 1), bound(s1, depth + 1))
        right = log_sup  # the outer side is bounded by the supremum
        val = math.log(C) + np.logaddexp(stp["f_left"] + left, stp["f_right"] + right)
        return float(min(val, log_sup))

    log_bound = bound(scheme.y, 0)
    iterations = bound.cache_info().currsize
    log_target = -(consts.L / 2 - 30 * epsilon) * scheme.y + log_sup
    return LocalizationCertificate(
        scheme=scheme,
        z=complex(pair.z),
        center=center,
        theta_shift=shifted.theta,
        x1=x1,
        x2=x2,
        best_I1=best1,
        best_I2=best2,
        p_den_margin=float(p_den_margin),
        nu1_margin=float(st["nu1"]),
        nu2_margin=float(st["nu2"]),
        rate_left=float(st["rate_left"]),
        rate_right=float(st["rate_right"]),
        target_rate=float(target),
        poisson_constant=float(C),
        log_iterated_bound=float(log_bound),
        log_decay_target=float(log_target),
        iterations=int(iterations),
        decay_floor=decay_floor,
        translation={"center_site": center, "cells": cells, "theta": shifted.theta,
                     "rule": "site c + j at phase theta equals site j at phase theta + (c/2) omega"},
    )
