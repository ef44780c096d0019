"""Transfer-matrix cocycles and Lyapunov exponents.

Kinds of cocycle (``Kind``):

``szego1``   one-site Szego matrix ``S_{n,z}``
``szego2``   two-step Szego cocycle ``S~(theta, z) = z^{-1} S_{1,z} S_{0,z}``
``gz``       one-site Gesztesy-Zinchenko matrix ``M_{n,z}``
``gz2``      two-step GZ cocycle ``M~(theta, z) = M_{2,z} M_{1,z}``
``standard`` the cocycle ``A(theta, z) = A_{0,z}`` read off ``W u = z u``

Lyapunov values are reported per cocycle application; ``sites_per_step``
gives the conversion to a per-lattice-site rate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from uamo.model import ModelParams, TWO_PI, verblunsky


class Kind(str, Enum):
    SZEGO1 = "szego1"
    SZEGO2 = "szego2"
    GZ = "gz"
    GZ2 = "gz2"
    STANDARD = "standard"

    @property
    def sites_per_step(self) -> int:
        return 1 if self in (Kind.SZEGO1, Kind.GZ) else 2

    @property
    def stepped_by_site(self) -> bool:
        return self.sites_per_step == 1


class SingularCoefficientError(ArithmeticError):
    """A coefficient ``rho`` vanished, so the transfer matrix is undefined."""

    def __init__(self, site, message=None):
        self.site = site
        super().__init__(message or f"rho vanishes at site {site}")


class SingularConjugatorError(SingularCoefficientError):
    pass


class DivergentRateError(ArithmeticError):
    pass


RHO_TOL = 1e-14


@dataclass
class CocycleMatrix:
    matrix: np.ndarray
    kind: Kind
    index: float
    z: complex

    def det(self) -> complex:
        return complex(np.linalg.det(self.matrix))

    def norm(self) -> float:
        return float(np.linalg.norm(self.matrix, 2))


@dataclass(frozen=True)
class LyapunovConstants:
    L_plus: float
    L_minus: float

    @property
    def L(self) -> float:
        return self.L_plus - self.L_minus

    @classmethod
    def from_params(cls, params: ModelParams) -> "LyapunovConstants":
        if params.lambda1 == 0.0:
            raise DivergentRateError("L_minus = ln(0) for lambda1 = 0")
        if params.lambda2 == 0.0:
            raise DivergentRateError("L_plus = ln(0) for lambda2 = 0")
        return cls(
            math.log(params.lambda2 * (1 + params.lambda1p) / 2),
            math.log(params.lambda1 * (1 + params.lambda2p) / 2),
        )


@dataclass
class LyapunovEstimate:
    kind: Kind
    z: complex
    N: int
    samples: np.ndarray
    mean: float
    stderr: float
    sites_per_step: int
    thetas: np.ndarray = field(repr=False, default=None)

    @property
    def per_site(self) -> float:
        return self.mean / self.sites_per_step


@dataclass
class TransferProduct:
    """Ordered product ``D(theta+(N-1)omega) ... D(theta)`` kept as ``matrix * e^log_scale``."""

    matrix: np.ndarray
    log_scale: float
    log_norms: np.ndarray
    kind: Kind
    z: complex

    def full(self) -> np.ndarray:
        return self.matrix * math.exp(self.log_scale)

    @property
    def rate(self) -> float:
        return float(self.log_norms[-1])


# -- single steps -------------------------------------------------------------


def _check_rho(rho, sites):
    bad = np.abs(rho) <= RHO_TOL
    if np.any(bad):
        raise SingularCoefficientError(np.asarray(sites)[bad].ravel()[0] if np.ndim(sites) else sites)


def szego_matrices(alpha, rho, z, normalized=True):
    """Stack of ``S_{n,z}`` (shape ``(..., 2, 2)``) for coefficient arrays."""
    alpha = np.asarray(alpha, dtype=complex)
    z = np.asarray(z, dtype=complex)
    out = np.empty(np.broadcast(alpha, z).shape + (2, 2), dtype=complex)
    out[..., 0, 0] = z
    out[..., 0, 1] = -np.conj(alpha)
    out[..., 1, 0] = -alpha * z
    out[..., 1, 1] = 1.0
    if normalized:
        out /= np.abs(np.asarray(rho))[..., None, None]
    return out


def gz_matrices(alpha, rho, z, sites):
    alpha = np.asarray(alpha, dtype=complex)
    rho = np.asarray(rho, dtype=complex)
    odd = (np.asarray(sites) % 2) == 1
    shape = np.broadcast(alpha, z, odd).shape
    z = np.broadcast_to(np.asarray(z, dtype=complex), shape)
    out = np.empty(shape + (2, 2), dtype=complex)
    out[..., 0, 0] = np.where(odd, -np.conj(alpha), -alpha)
    out[..., 0, 1] = np.where(odd, z, 1.0)
    out[..., 1, 0] = np.where(odd, 1.0 / z, 1.0)
    out[..., 1, 1] = np.where(odd, -alpha, -np.conj(alpha))
    return out / rho[..., None, None]


def standard_matrices(params: ModelParams, thetas, z):
    """``A(theta, z) = A_{0,z}``, built from sites ``-2, -1, 0``."""
    thetas = np.asarray(thetas, dtype=float)
    a2, r2 = verblunsky(params, 0, thetas)
    a1, r1 = verblunsky(params, -1, thetas)
    a0, r0 = verblunsky(params, -2, thetas)
    a2, a1, a0, r2, r1, r0 = np.broadcast_arrays(a2, a1, a0, r2, r1, r0)
    z = np.asarray(z, dtype=complex)
    out = np.empty(thetas.shape + (2, 2), dtype=complex)
    out[..., 0, 0] = 1 / z + a2 * np.conj(a1) + a1 * np.conj(a0) + a2 * np.conj(a0) * z
    out[..., 0, 1] = -np.conj(r0) * a1 - np.conj(r0) * a2 * z
    out[..., 1, 0] = -r2 * np.conj(a1) - r2 * np.conj(a0) * z
    out[..., 1, 1] = r2 * np.conj(r0) * z
    return out / (r2 * r1)[..., None, None]


def step_matrices(params: ModelParams, kind, index, z):
    """Vectorised cocycle matrices.

    ``index`` is a site (or array of sites) for the one-site kinds and a phase
    (or array of phases) for the two-step kinds.
    """
    kind = Kind(kind)
    if kind in (Kind.SZEGO1, Kind.GZ):
        sites = np.asarray(index, dtype=int)
        alpha, rho = verblunsky(params, sites)
        _check_rho(rho, sites)
        if kind is Kind.SZEGO1:
            return szego_matrices(alpha, rho, z)
        return gz_matrices(alpha, rho, z, sites)
    thetas = np.asarray(index, dtype=float)
    if kind is Kind.STANDARD:
        _, r2 = verblunsky(params, 0, thetas)
        _, r1 = verblunsky(params, -1, thetas)
        _check_rho(np.broadcast_to(r2 * r1, thetas.shape), thetas)
        return standard_matrices(params, thetas, z)
    if kind is Kind.SZEGO2:
        a0, r0 = verblunsky(params, 0, thetas)
        a1, r1 = verblunsky(params, 1, thetas)
        _check_rho(np.broadcast_to(r0 * r1, thetas.shape), thetas)
        return szego_matrices(a1, r1, z) @ szego_matrices(a0, r0, z) / z
    a1, r1 = verblunsky(params, 1, thetas)
    a2, r2 = verblunsky(params, 2, thetas)
    _check_rho(np.broadcast_to(r1 * r2, thetas.shape), thetas)
    return gz_matrices(a2, r2, z, 2) @ gz_matrices(a1, r1, z, 1)


def cocycle_step(params: ModelParams, kind, site_or_theta, z) -> CocycleMatrix:
    if z == 0:
        raise ValueError("spectral parameter z must be nonzero")
    kind = Kind(kind)
    mat = step_matrices(params, kind, site_or_theta, complex(z))
    return CocycleMatrix(np.asarray(mat).reshape(2, 2), kind, site_or_theta, complex(z))


def conjugator(params: ModelParams) -> np.ndarray:
    """``B_n`` (constant in ``n`` for this model)."""
    alpha, rho = verblunsky(params, 0)
    if abs(rho) <= RHO_TOL:
        raise SingularConjugatorError(0, "B_n is singular: rho_{2n} = lambda1 = 0")
    return np.array([[1, 0], [-np.conj(alpha), np.conj(rho)]], dtype=complex)


def conjugacy_residuals(params: ModelParams, theta: float, z: complex):
    """Operator-norm residuals of the GZ/Szego and standard/GZ conjugacies.

    ``r1`` checks ``M_{n+1}M_n = |rho_n rho_{n+1}| / (z rho_n rho_{n+1}) R^{-1} S_{n+1} S_n R``
    at ``n = 1``; ``r2`` checks ``A_{n} = B_n^{-1} M_{2n} M_{2n-1} B_{n-1}`` at ``n = 0``.
    Both are relative to the norm of the left-hand side.
    """
    p = params.with_theta(theta)
    R = np.array([[0, 1], [1, 0]], dtype=complex)
    n = 1
    alpha, rho = verblunsky(p, np.array([n, n + 1]))
    _check_rho(rho, np.array([n, n + 1]))
    lhs = gz_matrices(alpha[1], rho[1], z, n + 1) @ gz_matrices(alpha[0], rho[0], z, n)
    S = szego_matrices(alpha, rho, z)
    phase = abs(rho[0] * rho[1]) / (z * rho[0] * rho[1])
    rhs = phase * (R @ S[1] @ S[0] @ R)
    r1 = np.linalg.norm(lhs - rhs, 2) / np.linalg.norm(lhs, 2)

    B = conjugator(p)
    sites = np.array([-1, 0])
    alpha, rho = verblunsky(p, sites)
    _check_rho(rho, sites)
    MM = gz_matrices(alpha[1], rho[1], z, 0) @ gz_matrices(alpha[0], rho[0], z, -1)
    A = standard_matrices(p, p.theta, z)
    r2 = np.linalg.norm(A - np.linalg.solve(B, MM @ B), 2) / np.linalg.norm(A, 2)
    return float(r1), float(r2)


# -- products -----------------------------------------------------------------


def _orbit_indices(params, kind, theta, N):
    kind = Kind(kind)
    if kind.stepped_by_site:
        # site n of the orbit started at phase theta
        return np.arange(N)
    return np.mod(theta + np.arange(N) * params.omega, 1.0)


def transfer_product(params: ModelParams, kind, theta: float, z, N: int, renorm_every: int = 32) -> TransferProduct:
    """Ordered product over the orbit with running ``(1/k) ln ||product_k||``.

    The product is rescaled every ``renorm_every`` steps; the discarded log
    norms are summed with Neumaier compensation.
    """
    if N < 1:
        raise ValueError("N must be at least 1")
    kind = Kind(kind)
    p = params.with_theta(theta)
    mats = step_matrices(p, kind, _orbit_indices(p, kind, p.theta, N), complex(z))
    # plain complex scalars keep the sequential loop cheap
    m = mats.reshape(N, 4).tolist()
    a, b, c, d = 1 + 0j, 0j, 0j, 1 + 0j
    acc = comp = 0.0  # Neumaier-compensated sum of discarded log norms
    trace = np.empty(N)
    log, sqrt = math.log, math.sqrt
    for k in range(N):
        e, f, g, h = m[k]
        a, b, c, d = e * a + f * c, e * b + f * d, g * a + h * c, g * b + h * d
        sq = abs(a) ** 2 + abs(b) ** 2 + abs(c) ** 2 + abs(d) ** 2
        det = abs(a * d - b * c)
        nrm = sqrt(0.5 * (sq + sqrt(max(sq * sq - 4 * det * det, 0.0))))
        lg = log(nrm)
        trace[k] = (acc + comp + lg) / (k + 1)
        if (k + 1) % renorm_every == 0:
            t = acc + lg
            comp += (acc - t) + lg if abs(acc) >= abs(lg) else (lg - t) + acc
            acc = t
            a, b, c, d = a / nrm, b / nrm, c / nrm, d / nrm
    return TransferProduct(np.array([[a, b], [c, d]]), acc + comp, trace, kind, complex(z))


def _norm2x2(m):
    sq = np.sum(np.abs(m) ** 2, axis=(-2, -1))
    det = np.abs(m[..., 0, 0] * m[..., 1, 1] - m[..., 0, 1] * m[..., 1, 0])
    return np.sqrt(0.5 * (sq + np.sqrt(np.maximum(sq * sq - 4 * det * det, 0.0))))


def _reduce(mats):
    """Ordered product of a ``(N, K, 2, 2)`` stack as ``(unit-norm matrix, log norm)``.

    Pairwise (tree) reduction, rescaling at every level.
    """
    mats = np.array(mats, dtype=complex)
    logs = np.zeros(mats.shape[:2])
    while mats.shape[0] > 1:
        carry = None
        if mats.shape[0] % 2:
            carry, carry_log = mats[-1:], logs[-1:]
            mats, logs = mats[:-1], logs[:-1]
        mats = mats[1::2] @ mats[0::2]
        logs = logs[1::2] + logs[0::2]
        nrm = _norm2x2(mats)
        mats /= nrm[..., None, None]
        logs += np.log(nrm)
        if carry is not None:
            mats = np.concatenate([mats, carry])
            logs = np.concatenate([logs, carry_log])
    nrm = _norm2x2(mats[0])
    return mats[0] / nrm[..., None, None], logs[0] + np.log(nrm)


def log_norm_of_product(mats: np.ndarray) -> np.ndarray:
    """``ln ||m[N-1] ... m[0]||`` for a stack of shape ``(N, K, 2, 2)``."""
    return _reduce(mats)[1]


def lyapunov_estimate(params: ModelParams, kind, z, N: int, theta_samples: int = 8,
                      chunk: int = 4096) -> LyapunovEstimate:
    """Mean over an equidistributed phase grid of ``(1/N) ln ||product_N(theta)||``."""
    kind = Kind(kind)
    if N < 1 or theta_samples < 1:
        raise ValueError("N and theta_samples must be positive")
    thetas = np.mod(params.theta + np.arange(theta_samples) / theta_samples, 1.0)
    z = complex(z)
    total = np.zeros(theta_samples)
    carry = np.broadcast_to(np.eye(2, dtype=complex), (theta_samples, 2, 2))
    for start in range(0, N, chunk):
        steps = np.arange(start, min(N, start + chunk))
        if kind.stepped_by_site:
            mats = np.stack([step_matrices(params.with_theta(t), kind, steps, z) for t in thetas], axis=1)
        else:
            idx = np.mod(thetas[None, :] + steps[:, None] * params.omega, 1.0)
            mats = step_matrices(params, kind, idx, z)
        carry, logs = _reduce(np.concatenate([carry[None], mats]))
        total += logs
    samples = total / N
    mean = float(np.mean(samples))
    stderr = float(np.std(samples, ddof=1) / math.sqrt(theta_samples)) if theta_samples > 1 else float("nan")
    return LyapunovEstimate(kind, z, N, samples, mean, stderr, kind.sites_per_step, thetas)


def lyapunov_closed_form(params: ModelParams) -> float:
    """``max(0, ln(l2 (1 + l1') / (l1 (1 + l2'))))`` per two-site step."""
    if params.lambda1 == 0.0:
        raise DivergentRateError("the closed form diverges at lambda1 = 0")
    if params.lambda2 == 0.0:
        return 0.0
    return max(0.0, math.log(params.lambda2 * (1 + params.lambda1p) / (params.lambda1 * (1 + params.lambda2p))))


def szego_polynomials(params: ModelParams, z, N: int) -> np.ndarray:
    """Rows ``(phi_n(z), phi_n^*(z))`` for ``n = 0..N`` from ``phi_0 = phi_0^* = 1``."""
    if z == 0:
        raise ValueError("z must be nonzero")
    alpha, rho = verblunsky(params, np.arange(max(N, 0)))
    _check_rho(rho, np.arange(max(N, 0)))
    out = np.empty((N + 1, 2), dtype=complex)
    out[0] = 1.0
    for n in range(N):
        phi, phis = out[n]
        r = abs(rho[n])
        out[n + 1, 0] = (z * phi - np.conj(alpha[n]) * phis) / r
        out[n + 1, 1] = (phis - alpha[n] * z * phi) / r
    return out


@dataclass(frozen=True)
class IntegralCheck:
    numeric: float
    closed: float
    excluded: int


def log_rho_integral_check(params: ModelParams, grid_size: int = 1 << 16, offset: float = 0.0) -> IntegralCheck:
    """Uniform-grid mean of ``ln|l1 (l2 cos 2 pi t + i l2')|`` against ``ln(l1 (1 + l2') / 2)``.

    Grid points where the integrand is exactly singular are dropped; when
    ``l2' = 0`` the rule then converges only like ``log(G)/G``.
    """
    if grid_size < 64:
        raise ValueError("grid_size must be at least 64")
    if params.lambda1 == 0.0:
        raise DivergentRateError("integrand is identically -inf for lambda1 = 0")
    t = (np.arange(grid_size) + offset) / grid_size
    g = np.abs(params.lambda1 * (params.lambda2 * np.cos(TWO_PI * t) + 1j * params.lambda2p))
    keep = g > 1e-300
    # exact zeros only occur at cos = 0, which the float cos misses by ~1e-17
    keep &= ~((params.lambda2p == 0.0) & np.isclose(np.mod(4 * t, 2.0), 1.0, rtol=0, atol=1e-12))
    numeric = float(np.mean(np.log(g[keep])))
    closed = math.log(params.lambda1 * (1 + params.lambda2p) / 2)
    return IntegralCheck(numeric, closed, int(np.count_nonzero(~keep)))


def scalar_orbit_average(params: ModelParams, theta: float, N: int) -> float:
    """``(1/N) sum_j ln|l1 (l2 cos 2 pi (theta + j omega) + i l2')|``."""
    t = np.mod(theta + np.arange(N) * params.omega, 1.0)
    g = np.abs(params.lambda1 * (params.lambda2 * np.cos(TWO_PI * t) + 1j * params.lambda2p))
    return float(np.mean(np.log(g)))
