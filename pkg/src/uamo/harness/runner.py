"""Command dispatch: one function per command, each returning a ResultTable.

Seeding: the config seed ``s`` roots a ``numpy.random.SeedSequence``; sub-task
``k`` (the k-th random draw, or the k-th sweep point) uses
``SeedSequence(s, spawn_key=(k,))``, so adding draws never shifts earlier ones.
"""

from __future__ import annotations

import itertools
import os
from concurrent.futures import ProcessPoolExecutor

import numpy as np
import scipy

import uamo
from uamo import arithmetic, cocycles, determinants, spectral
from uamo.harness.config import ExperimentConfig
from uamo.harness.table import Column, ResultTable
from uamo.model import TWO_PI, ModelParams

RESIDUAL_TOL = 1e-12
TAIL_TOL = 1e-8
EVENNESS_TOL = 1e-10
GREEN_TOL = 1e-10


def subtask_rng(seed: int, k: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(k,)))


def _metadata(cfg: ExperimentConfig) -> dict:
    return {
        "config": cfg.as_dict(),
        "versions": {"uamo": uamo.__version__, "numpy": np.__version__, "scipy": scipy.__version__},
    }


def _z(cfg: ExperimentConfig, params) -> complex:
    """``exp(2 pi i z_phase)``, or the median eigenvalue of the 500-site truncation."""
    if cfg.z_phase is not None:
        return complex(np.exp(1j * TWO_PI * cfg.z_phase))
    spec = spectral.truncated_spectrum(params, 500)
    return spec[len(spec) // 2].z


def run_spectrum(cfg):
    params = cfg.params
    pairs = spectral.truncated_spectrum(params, cfg.n, method=cfg.method)
    t = ResultTable([Column("index"), Column("phase", "turns"), Column("re"), Column("im"),
                     Column("modulus_error")])
    for k, p in enumerate(pairs):
        t.append(k, p.phase, p.z.real, p.z.imag, abs(abs(p.z) - 1.0))
    return t


def run_lyapunov(cfg):
    params = cfg.params
    z = _z(cfg, params)
    closed = cocycles.lyapunov_closed_form(params)
    t = ResultTable([Column("kind"), Column("per_two_sites", "1/(2 sites)"), Column("stderr"),
                     Column("closed_form", "1/(2 sites)"), Column("z_phase", "turns")])
    for kind in (cocycles.Kind.SZEGO1, cocycles.Kind.GZ, cocycles.Kind.STANDARD):
        est = cocycles.lyapunov_estimate(params, kind, z, cfg.n)
        t.append(kind.value, 2 * est.per_site, 2 * est.stderr / est.sites_per_step, closed,
                 (np.angle(z) / TWO_PI) % 1.0)
    return t


def run_detpoly(cfg):
    params = cfg.params
    t = ResultTable([Column("draw"), Column("z_phase", "turns"), Column("tail_mass"), Column("evenness_residual")])
    for k in range(cfg.samples):
        x = float(subtask_rng(cfg.seed, k).random()) if cfg.z_phase is None else cfg.z_phase
        rep = determinants.sine_polynomial_check(params, cfg.n, np.exp(1j * TWO_PI * x))
        t.append(k, x, rep.tail_mass, rep.evenness_residual)
        if rep.tail_mass > TAIL_TOL or rep.evenness_residual > EVENNESS_TOL:
            t.failures.append(f"draw {k}: tail {rep.tail_mass:.3g}, evenness {rep.evenness_residual:.3g}")
    return t


def random_params(rng) -> tuple:
    """Couplings away from 0 and 1, a random phase and a random point of the circle."""
    l1, l2 = rng.uniform(0.05, 0.95, size=2)
    theta, x = rng.random(2)
    return ModelParams(l1, l2, rng.random(), theta), complex(np.exp(1j * TWO_PI * x))


def run_cocycle_check(cfg):
    t = ResultTable([Column("draw"), Column("lambda1"), Column("lambda2"), Column("omega"), Column("theta"),
                     Column("z_phase", "turns"), Column("szego_gz"), Column("gz_standard")])
    for k in range(cfg.samples):
        params, z = random_params(subtask_rng(cfg.seed, k))
        r1, r2 = cocycles.conjugacy_residuals(params, params.theta, z)
        t.append(k, params.lambda1, params.lambda2, params.omega, params.theta, (np.angle(z) / TWO_PI) % 1.0, r1, r2)
        if max(r1, r2) > RESIDUAL_TOL:
            t.failures.append(f"draw {k}: residuals {r1:.3g}, {r2:.3g}")
    return t


def run_green(cfg):
    params = cfg.params
    a, b = 1, cfg.n
    t = ResultTable([Column("y"), Column("edge"), Column("variant"), Column("direct_abs"), Column("cramer_abs"),
                     Column("rel_err")])
    z = np.exp(1j * TWO_PI * (0.5 if cfg.z_phase is None else cfg.z_phase)) * 1.05
    for edge in ("left", "right"):
        for y in range(a, b + 1):
            g = determinants.green_entry(params, a, b, z, None, y, edge)
            t.append(y, edge, g.variant, abs(g.value), abs(g.cramer), g.rel_err)
            if g.rel_err > GREEN_TOL:
                t.failures.append(f"y={y} {edge}: rel_err {g.rel_err:.3g}")
    return t


def run_localize(cfg):
    params = cfg.params
    pair = spectral.mid_window_eigenpair(params, cfg.n, seed=cfg.seed)
    fit = spectral.decay_rate_fit(pair)
    L = cocycles.LyapunovConstants.from_params(params).L
    t = ResultTable([Column("z_phase", "turns"), Column("center", "site"), Column("residual"), Column("gz_residual"),
                     Column("slope", "1/site"), Column("r2"), Column("expected_slope", "1/site"), Column("decaying")])
    t.append(pair.phase, pair.center, pair.residual, spectral.gz_residual(pair), fit.slope, fit.r2, -L / 2,
             fit.decaying)
    return t


def run_certificate(cfg):
    params = cfg.params
    pair = spectral.mid_window_eigenpair(params, cfg.n, seed=cfg.seed)
    c = spectral.certificate_replay(params, pair, cfg.y, cfg.eps)
    s = c.scheme
    cols = ["y", "q_n", "q_m", "s", "h", "x1", "x2", "p_den_margin", "nu1_margin", "nu2_margin", "rate_left",
            "rate_right", "target_rate", "contraction_factor", "poisson_constant", "log_iterated_bound",
            "log_decay_target", "passed"]
    t = ResultTable(cols)
    t.append(s.y, s.q_n, s.q_m, s.s, s.h, c.x1, c.x2, c.p_den_margin, c.nu1_margin, c.nu2_margin, c.rate_left,
             c.rate_right, c.target_rate, c.contraction_factor, c.poisson_constant, c.log_iterated_bound,
             c.log_decay_target, c.passed)
    t.metadata["translation"] = c.translation
    t.metadata["scheme_checks"] = s.checks()
    if not c.passed:
        t.failures.append(f"certificate fails at y={s.y}")
    return t


def run_evolve(cfg):
    series = spectral.evolve_moments(cfg.params, cfg.n, cfg.t)
    t = ResultTable([Column("t", "steps"), Column("second_moment", "cells^2")])
    for time, m in zip(series.times, series.second_moment):
        t.append(int(time), float(m))
    t.metadata["complete"] = series.complete
    return t


def run_arith(cfg):
    cf = arithmetic.continued_fraction(cfg.omega_exact)
    t = ResultTable([Column("k"), Column("a_k"), Column("p_k"), Column("q_k"), Column("error")])
    for k in range(1, cf.depth + 1):
        t.append(k, cf.partial_quotients[k - 1], cf.p[k], cf.q[k], cf.error(k))
    t.metadata["rational"] = cf.rational
    t.metadata["truncated"] = cf.truncated
    return t


RUNNERS = {
    "spectrum": run_spectrum,
    "lyapunov": run_lyapunov,
    "detpoly": run_detpoly,
    "cocycle-check": run_cocycle_check,
    "green": run_green,
    "localize": run_localize,
    "certificate": run_certificate,
    "evolve": run_evolve,
    "arith": run_arith,
}


def _sweep_point(args):
    cfg, k = args
    table = RUNNERS[cfg.command](cfg)
    return k, table


def run_sweep(cfg):
    axes = sorted(cfg.over)
    points = list(itertools.product(*(cfg.over[a] for a in axes)))
    jobs = []
    for k, values in enumerate(points):
        changes = dict(zip(axes, values))
        changes.setdefault("seed", int(np.random.SeedSequence(cfg.seed, spawn_key=(k,)).generate_state(1)[0]))
        jobs.append((cfg.replace(command=cfg.of, over={}, **changes), k))
    workers = cfg.workers or os.cpu_count() or 1
    if workers == 1 or len(jobs) == 1:
        results = [_sweep_point(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
            results = list(pool.map(_sweep_point, jobs))
    results.sort(key=lambda r: r[0])
    first = results[0][1]
    t = ResultTable([Column("point")] + [Column(a) for a in axes] + first.columns)
    for k, table in results:
        for row in table.rows:
            t.append(k, *points[k], *row)
        t.failures += [f"point {k}: {f}" for f in table.failures]
    return t


RUNNERS["sweep"] = run_sweep


class ExperimentError(RuntimeError):
    pass


def run_experiment(cfg: ExperimentConfig) -> ResultTable:
    try:
        table = RUNNERS[cfg.command](cfg)
    except (ArithmeticError, ValueError, RuntimeError) as exc:
        raise ExperimentError(f"{cfg.command}: {exc}") from exc
    table.metadata.update(_metadata(cfg))
    return table
