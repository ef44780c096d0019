"""Continued fractions, Diophantine and resonance scans, interpolation nodes."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

TWO_PI = 2.0 * math.pi
PRECISION_FLOOR = 1e-15


class DegenerateNodesError(ValueError):
    """Two interpolation nodes give the same cosine/sine value."""


def torus_norm(x):
    """Distance to the nearest integer; accepts arrays."""
    x = np.asarray(x, dtype=float)
    d = np.abs(x - np.round(x))
    return float(d) if d.ndim == 0 else d


@dataclass(frozen=True)
class ContinuedFraction:
    """Expansion ``omega = [0; a_1, a_2, ...]`` with convergents ``p_k / q_k``.

    ``p`` and ``q`` are indexed from ``k = 0`` (``p_0 = 0``, ``q_0 = 1``);
    ``partial_quotients[k - 1]`` is ``a_k``.
    """

    omega: float
    partial_quotients: tuple
    p: tuple
    q: tuple
    rational: bool
    truncated: bool

    @property
    def depth(self) -> int:
        return len(self.partial_quotients)

    def convergent(self, k: int) -> Fraction:
        return Fraction(self.p[k], self.q[k])

    def error(self, k: int) -> float:
        """``|q_k omega - p_k|``."""
        return abs(float(Fraction(self.omega) * self.q[k] - self.p[k]))

    def denominators(self, upto: int | None = None) -> list:
        """``q_1, q_2, ...`` (optionally only those ``<= upto``)."""
        qs = list(self.q[1:])
        return qs if upto is None else [q for q in qs if q <= upto]


def continued_fraction(omega, K: int = 64) -> ContinuedFraction:
    """Euclidean expansion of ``omega mod 1``, at most ``K`` partial quotients.

    A float is expanded exactly as the binary rational it is.  The expansion
    stops with ``truncated`` set once ``|omega - p_k/q_k|`` drops below
    ``1e-15``, past which the quotients describe rounding rather than
    ``omega``; it stops with ``rational`` set if it terminates first.  Pass a
    ``Fraction`` to expand an exact rational.
    """
    if K < 1:
        raise ValueError("K must be at least 1")
    exact = Fraction(omega) % 1
    x = exact
    a_list, p, q = [], [1, 0], [0, 1]  # (p_{-1}, p_0), (q_{-1}, q_0)
    rational = truncated = False
    while len(a_list) < K:
        if x == 0:
            rational = True
            break
        inv = 1 / x
        a = math.floor(inv)
        x = inv - a
        a_list.append(a)
        p.append(a * p[-1] + p[-2])
        q.append(a * q[-1] + q[-2])
        if x == 0:
            rational = True
            break
        if not isinstance(omega, Fraction) and abs(exact - Fraction(p[-1], q[-1])) < PRECISION_FLOOR:
            truncated = True
            break
    return ContinuedFraction(float(exact), tuple(a_list), tuple(p[1:]), tuple(q[1:]), rational, truncated)


@dataclass(frozen=True)
class DiophantineReport:
    omega: float
    tau: float
    nu: float
    N: int
    worst_n: int
    worst_value: float  # min over n of ||n omega|| * n^tau
    passed: bool


def diophantine_check(omega: float, tau: float, nu: float, N: int) -> DiophantineReport:
    """Check ``||n omega|| >= nu / |n|^tau`` for ``0 < |n| <= N``.

    ``||-n omega|| = ||n omega||``, so positive ``n`` suffice.
    """
    if tau <= 1 or nu <= 0 or N < 1:
        raise ValueError("need tau > 1, nu > 0 and N >= 1")
    n = np.arange(1, N + 1)
    vals = torus_norm(np.mod(n * float(omega), 1.0)) * n.astype(float) ** tau
    k = int(np.argmin(vals))
    worst = float(vals[k])
    return DiophantineReport(float(omega), tau, nu, N, int(n[k]), worst, worst >= nu)


@dataclass
class ResonanceReport:
    """Scan of ``-ln ||2 theta - 1/2 + n omega|| / |n|`` over ``1 <= |n| <= N``.

    ``values[n-1]`` is the larger of the ``+n`` and ``-n`` terms.
    ``partial_sup`` is the running maximum over ``|n| <= N`` clipped at 0;
    ``tail_sup`` restricts to ``tail_start <= |n| <= N`` and is the limsup
    proxy (the running maximum is dominated by small ``n``).
    """

    omega: float
    theta: float
    N: int
    values: np.ndarray = field(repr=False)
    tail_start: int
    infinite: bool = False
    witness: int | None = None

    @property
    def partial_sup(self) -> float:
        return math.inf if self.infinite else max(0.0, float(np.max(self.values)))

    @property
    def running_sup(self) -> np.ndarray:
        return np.maximum(np.maximum.accumulate(self.values), 0.0)

    @property
    def tail_sup(self) -> float:
        if self.infinite and abs(self.witness) >= self.tail_start:
            return math.inf
        return max(0.0, float(np.max(self.values[self.tail_start - 1:])))


def resonance_exponent(omega: float, theta: float, N: int, tail_start: int | None = None) -> ResonanceReport:
    """Partial suprema of ``-ln ||2 theta - 1/2 + n omega||_T / |n|``.

    ``tail_start`` defaults to ``ceil(sqrt(N))``.  An exact zero of the torus
    norm marks the scan ``infinite`` with the offending ``n`` as witness.
    """
    if N < 1:
        raise ValueError("N must be at least 1")
    start = max(1, math.ceil(math.sqrt(N))) if tail_start is None else int(tail_start)
    if not 1 <= start <= N:
        raise ValueError("tail_start must lie in [1, N]")
    base = (2.0 * theta - 0.5) % 1.0
    n = np.arange(1, N + 1)
    step = np.mod(n * float(omega), 1.0)
    d_plus = torus_norm(np.mod(base + step, 1.0))
    d_minus = torus_norm(np.mod(base - step, 1.0))
    report = ResonanceReport(float(omega), float(theta), N, np.zeros(N), start)
    zero_plus, zero_minus = np.flatnonzero(d_plus == 0), np.flatnonzero(d_minus == 0)
    if zero_plus.size or zero_minus.size:
        cand = [int(n[zero_plus[0]])] if zero_plus.size else []
        cand += [-int(n[zero_minus[0]])] if zero_minus.size else []
        report.infinite = True
        report.witness = min(cand, key=abs)
    with np.errstate(divide="ignore"):
        vals = np.maximum(-np.log(d_plus), -np.log(d_minus)) / n
    report.values = np.where(np.isfinite(vals), vals, np.finfo(float).max)
    return report


def resonant_phase(omega: float, levels=(3, 8, 30)) -> float:
    """A phase aligned with the convergents ``q_k``, ``k`` in ``levels``.

    ``2 theta - 1/2 = sum_k (q_k omega - p_k)``, so
    ``||2 theta - 1/2 - (q_{k_1} + ... + q_{k_j}) omega||`` is of the order of
    the next, much smaller, term.
    """
    cf = continued_fraction(omega, max(levels) + 2)
    if max(levels) > cf.depth:
        raise ValueError(f"omega resolves only {cf.depth} partial quotients")
    frac = Fraction(cf.omega)
    x = sum(frac * cf.q[k] - cf.p[k] for k in levels)
    return float(((x + Fraction(1, 2)) / 2) % 1)


# -- interpolation ---------------------------------------------------------------------------


def node_values(nodes, n: int, omega: float, variable: str = "cos") -> np.ndarray:
    """``cos`` (or ``sin``) of ``2 pi (theta_l + (n - 1) omega / 2)``."""
    arg = TWO_PI * (np.asarray(nodes, dtype=float) + (n - 1) * omega / 2)
    if variable == "cos":
        return np.cos(arg)
    if variable == "sin":
        return np.sin(arg)
    raise ValueError(f"variable must be 'cos' or 'sin', got {variable!r}")


def _check_distinct(c, tol=1e-14):
    s = np.sort(c)
    gaps = np.diff(s)
    if gaps.size and gaps.min() <= tol:
        raise DegenerateNodesError(f"coincident nodes (gap {gaps.min():.3g})")


@dataclass
class UniformityReport:
    nodes: np.ndarray = field(repr=False)
    n: int
    variable: str
    z_range: tuple
    kappa: float
    kappa_unit: float  # same maximum restricted to z in [0, 1]
    argmax_node: int
    argmax_z: float


def _log_basis_max(c, zs):
    """``max_z max_j sum_{l != j} ln |z - c_l| - ln |c_j - c_l|`` over a grid."""
    diff = np.abs(c[:, None] - c[None, :])
    np.fill_diagonal(diff, 1.0)
    denom = np.log(diff).sum(axis=1)
    logs = np.log(np.abs(zs[:, None] - c[None, :]))
    total = logs.sum(axis=1)
    vals = total[:, None] - logs - denom[None, :]
    k = np.unravel_index(np.argmax(vals), vals.shape)
    return float(vals[k]), int(k[1]), float(zs[k[0]])


def _z_grid(c, lo, hi, size):
    inside = np.sort(c[(c > lo) & (c < hi)])
    mids = 0.5 * (inside[1:] + inside[:-1])
    zs = np.unique(np.concatenate([np.linspace(lo, hi, size), mids]))
    # the basis products are evaluated between nodes, never on them
    return zs[np.min(np.abs(zs[:, None] - c[None, :]), axis=1) > 1e-13]


def kappa_uniformity(nodes, n: int, omega: float, z_grid=None, variable: str = "cos",
                     z_range=(-1.0, 1.0), grid_size: int = 4001) -> UniformityReport:
    """Measured ``kappa = (1/n) ln max_z max_j |prod_{l != j} (z - c_l) / (c_j - c_l)|``.

    ``c_l`` are the node cosines (``variable="sin"`` for sines).  The default
    grid is uniform on ``z_range`` plus the midpoints between nodes.
    """
    c = node_values(nodes, n, omega, variable)
    if len(c) != n + 1:
        raise ValueError(f"need n + 1 = {n + 1} nodes, got {len(c)}")
    if n < 1:
        raise ValueError("n must be positive")
    _check_distinct(c)
    lo, hi = z_range
    zs = _z_grid(c, lo, hi, grid_size) if z_grid is None else np.asarray(z_grid, dtype=float)
    best, j, zbest = _log_basis_max(c, zs)
    unit = zs[(zs >= 0.0) & (zs <= 1.0)]
    if z_grid is None:
        unit = _z_grid(c, 0.0, 1.0, grid_size)
    best_unit = _log_basis_max(c, unit)[0] if unit.size else -math.inf
    return UniformityReport(np.asarray(nodes, dtype=float), n, variable, (lo, hi),
                            best / n, best_unit / n, j, zbest)


def lagrange_interpolate(values, nodes, n: int, omega: float, target, variable: str = "sin"):
    """Interpolate a degree-``n`` polynomial in ``sin 2 pi (theta + (n-1) omega / 2)``.

    ``values`` are samples at the ``n + 1`` phases ``nodes``; ``target`` is a
    phase or an array of phases.
    """
    values = np.asarray(values, dtype=complex)
    s = node_values(nodes, n, omega, variable)
    if len(s) != n + 1 or len(values) != n + 1:
        raise ValueError(f"need n + 1 = {n + 1} nodes and values")
    _check_distinct(s)
    t = np.atleast_1d(node_values(target, n, omega, variable))
    out = np.zeros(t.shape, dtype=complex)
    for j in range(n + 1):
        others = np.delete(s, j)
        basis = np.prod((t[:, None] - others[None, :]) / (s[j] - others[None, :]), axis=1)
        out += values[j] * basis
    return complex(out[0]) if np.ndim(target) == 0 else out


# -- trigonometric product -----------------------------------------------------------------


@dataclass(frozen=True)
class TrigProductReport:
    q: int
    j0: int
    total: float
    band: float
    constant: float

    @property
    def within(self) -> bool:
        return abs(self.total) <= self.band


def trig_product_bound(omega: float, theta: float, n_index: int | None = None, q: int | None = None,
                       constant: float = 20.0) -> TrigProductReport:
    """``sum_{j != j0} ln|cos pi (theta + j omega)| + (q - 1) ln 2`` over ``0 <= j < q``.

    ``q`` is the convergent denominator ``q_{n_index}`` unless given directly;
    ``j0`` is the index of the smallest ``|cos|``.
    """
    if q is None:
        if n_index is None:
            raise ValueError("give n_index or q")
        cf = continued_fraction(omega, n_index + 1)
        if n_index > cf.depth:
            raise ValueError(f"omega has only {cf.depth} resolved partial quotients")
        q = cf.q[n_index]
    if q < 3:
        raise ValueError(f"q = {q} is below the smallest admissible scale 3")
    j = np.arange(q)
    c = np.abs(np.cos(math.pi * np.mod(theta + np.mod(j * omega, 2.0), 2.0)))
    j0 = int(np.argmin(c))
    logs = np.log(np.delete(c, j0))
    total = float(math.fsum(logs) + (q - 1) * math.log(2.0))
    return TrigProductReport(int(q), j0, total, constant * math.log(q), constant)
