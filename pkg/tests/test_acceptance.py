"""Acceptance checks 1-10 at their stated tolerances.

Each test prints one ``criterion k: PASS|FAIL`` line with the measured
numbers and runtime before asserting; the lines bypass output capture.
"""

import math
import time

import numpy as np
import pytest

from uamo import arithmetic, cocycles, determinants, spectral
from uamo.harness.runner import random_params
from uamo.model import GOLDEN, ModelParams

COUPLINGS = [(0.5, 0.9), (0.6, 0.8), (0.3, 0.7)]


@pytest.fixture
def report(capsys):
    def emit(k, ok, detail, started):
        with capsys.disabled():
            status = "PASS" if ok else "FAIL"
            print(f"\ncriterion {k}: {status} ({time.perf_counter() - started:.1f} s) {detail}")
        return ok

    return emit


def _spectral_z(params):
    spec = spectral.truncated_spectrum(params, 500)
    return spec[len(spec) // 2].z


def _circle(x):
    return complex(np.exp(2j * math.pi * x))


def test_criterion_1_closed_form_lyapunov(report):
    t0 = time.perf_counter()
    worst, slowest, lines = 0.0, 0.0, []
    for l1, l2 in COUPLINGS:
        start = time.perf_counter()
        p = ModelParams(l1, l2, GOLDEN, 0.2)
        est = cocycles.lyapunov_estimate(p, cocycles.Kind.STANDARD, _spectral_z(p), 100_000)
        closed = cocycles.lyapunov_closed_form(p)
        err = abs(2 * est.per_site - closed)
        worst = max(worst, err)
        slowest = max(slowest, time.perf_counter() - start)
        lines.append(f"({l1}, {l2}) {2 * est.per_site:.6f} vs {closed:.6f}")
    ok = worst <= 1e-2 and slowest < 30
    assert report(1, ok, f"max error {worst:.2e}, slowest {slowest:.1f} s; " + "; ".join(lines), t0)


def test_criterion_2_cocycle_conjugacy(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(2)
    worst = 0.0
    for _ in range(1000):
        p, z = random_params(rng)
        worst = max(worst, *cocycles.conjugacy_residuals(p, p.theta, z))
    p = ModelParams(0.5, 0.9, GOLDEN, 0.2)
    z = _spectral_z(p)
    kinds = (cocycles.Kind.SZEGO1, cocycles.Kind.GZ, cocycles.Kind.STANDARD)
    est = {k: cocycles.lyapunov_estimate(p, k, z, 100_000) for k in kinds}
    rates = {k: 2 * e.per_site for k, e in est.items()}
    errs = {k: 2 * e.stderr / e.sites_per_step for k, e in est.items()}
    agree = all(
        abs(rates[a] - rates[b]) <= 2 * math.hypot(errs[a], errs[b])
        for i, a in enumerate(kinds) for b in kinds[i + 1:]
    )
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-12 and agree and elapsed < 60
    detail = f"max residual {worst:.2e}; rates " + ", ".join(f"{k.value} {rates[k]:.6f}±{errs[k]:.1e}" for k in kinds)
    assert report(2, ok, detail, t0)


def test_criterion_3_sine_polynomial(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(3)
    p = ModelParams(0.6, 0.8, GOLDEN, 0.0)
    tail = even = 0.0
    for n in (4, 8, 16, 32):
        for x in rng.random(10):
            rep = determinants.sine_polynomial_check(p, n, _circle(x))
            tail, even = max(tail, rep.tail_mass), max(even, rep.evenness_residual)
    elapsed = time.perf_counter() - t0
    ok = tail <= 1e-8 and even <= 1e-10 and elapsed < 120
    assert report(3, ok, f"max tail {tail:.2e}, max evenness {even:.2e}", t0)


def test_criterion_4_determinant_routes(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(4)
    worst = 0.0
    for _ in range(100):
        p, z = random_params(rng)
        size = int(rng.integers(2, 51))
        a = int(rng.integers(-50, 50))
        b = a + size - 1
        ref_la, ref_ph = determinants.box_logdet(p, a, b, z, route="lu")
        ref = ref_ph * math.exp(ref_la)
        for route in ("sze1", "sze2"):
            la, ph = determinants.box_logdet(p, a, b, z, route=route)
            worst = max(worst, abs(ph * math.exp(la) - ref) / abs(ref))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-10 and elapsed < 60
    assert report(4, ok, f"max relative difference {worst:.2e}", t0)


def test_criterion_5_averaged_lower_bound(report):
    t0 = time.perf_counter()
    p = ModelParams(0.6, 0.8, GOLDEN, 0.0)
    reps = [determinants.average_log_det(p, 32, z, 1 << 14) for z in (1.0, _circle(0.25), _circle(0.6))]
    ok = all(r.numeric > min(r.bound_a, r.bound_b) - 0.01 for r in reps)
    ok = ok and time.perf_counter() - t0 < 60
    detail = "; ".join(f"z={r.z:.3f}: {r.numeric:.4f} (supports {r.supported})" for r in reps)
    detail += f"; bound_a {reps[0].bound_a:.4f}, bound_b {reps[0].bound_b:.4f}"
    assert report(5, ok, detail, t0)


def test_criterion_6_green_and_poisson(report):
    t0 = time.perf_counter()
    p = ModelParams(0.6, 0.8, GOLDEN, 0.13)
    green = 0.0
    for a, b in ((1, 20), (2, 31), (-7, 12)):
        for z in (_circle(0.45), 1.05 * _circle(0.1)):
            for edge in ("left", "right"):
                for y in range(a, b + 1):
                    green = max(green, determinants.green_entry(p, a, b, z, None, y, edge).rel_err)
    pair = spectral.eigenpair_extract(p, 200, 0.3)
    scale = np.abs(pair.psi.amplitudes).max()
    poisson = 0.0
    for a, b in ((-30, 30), (-29, 30), (-30, 29), (-11, 40)):
        rebuilt = determinants.poisson_reconstruct(p, a, b, pair.z, None, pair.psi)
        exact = np.array([pair.psi[y] for y in range(a, b + 1)])
        poisson = max(poisson, np.abs(rebuilt.amplitudes - exact).max() / scale)
    ok = green <= 1e-10 and poisson <= 1e-9 and time.perf_counter() - t0 < 60
    assert report(6, ok, f"Green rel err {green:.2e}, Poisson rel err {poisson:.2e}", t0)


def test_criterion_7_decay_rate(report):
    t0 = time.perf_counter()
    p = ModelParams(0.6, 0.8, GOLDEN, 0.13)
    expected = -cocycles.lyapunov_closed_form(p) / 2
    pair = spectral.eigenpair_extract(p, 2000, 0.3)
    fit = spectral.decay_rate_fit(pair)
    rel = abs(fit.slope - expected) / abs(expected)
    ok = rel <= 0.10 and time.perf_counter() - t0 < 300
    assert report(7, ok, f"slope {fit.slope:.4f} vs {expected:.4f} ({100 * rel:.1f}%), r2 {fit.r2:.4f}", t0)


def test_criterion_8_certificate(report):
    t0 = time.perf_counter()
    p = ModelParams(0.5, 0.9, GOLDEN, 0.2)
    pair = spectral.mid_window_eigenpair(p, 4000)
    cert = spectral.certificate_replay(p, pair, 500, 0.05)
    control = ModelParams(0.7, 0.7, GOLDEN, 0.2)
    cpair = spectral.mid_window_eigenpair(control, 4000)
    ccert = spectral.certificate_replay(control, cpair, 500, 0.05)
    target = math.exp(-cert.target_rate)
    ok = (cert.p_den_margin > 0 and cert.nu1_margin > 0 and cert.nu2_margin > 0
          and cert.contraction_factor <= target and cert.passed and not ccert.passed
          and time.perf_counter() - t0 < 600)
    detail = (f"margins P_den {cert.p_den_margin:.3f}, nu1 {cert.nu1_margin:.3f}, nu2 {cert.nu2_margin:.3f}; "
              f"contraction {cert.contraction_factor:.4f} <= {target:.4f}; "
              f"control min rate {ccert.min_rate:.4f}, passed={ccert.passed}")
    assert report(8, ok, detail, t0)


def test_criterion_9_arithmetic(report):
    t0 = time.perf_counter()
    cf = arithmetic.continued_fraction(GOLDEN)
    fib = [1, 1]
    while len(fib) < 30:
        fib.append(fib[-1] + fib[-2])
    golden_ok = list(cf.q[:30]) == fib
    pi_ok = arithmetic.continued_fraction(math.pi - 3).q[1:4] == (7, 106, 113)
    dio_ok = (arithmetic.diophantine_check(GOLDEN, 1.5, 0.3, 10_000).passed
              and not arithmetic.diophantine_check(0.1 + 0.01 + 1e-6, 1.5, 0.3, 10_000).passed)
    rng = np.random.default_rng(9)
    lag = 0.0
    for n in (4, 8, 16):
        coef = rng.standard_normal(n + 1)
        nodes = (np.arange(n + 1) + 0.5) / (2 * (n + 1)) - 0.25 - (n - 1) * GOLDEN / 2
        poly = lambda th: np.polyval(coef, arithmetic.node_values(th, n, GOLDEN, "sin"))  # noqa: E731
        targets = rng.random(50)
        got = arithmetic.lagrange_interpolate(poly(nodes), nodes, n, GOLDEN, targets)
        lag = max(lag, np.abs(got - poly(targets)).max() / np.abs(poly(targets)).max())
    band_ok = all(
        arithmetic.trig_product_bound(GOLDEN, 0.1234, n_index=k).within
        for k in range(1, cf.depth + 1) if 3 <= cf.q[k] <= 10_000
    )
    ok = golden_ok and pi_ok and dio_ok and lag <= 1e-10 and band_ok and time.perf_counter() - t0 < 60
    detail = (f"fibonacci {golden_ok}, pi {pi_ok}, diophantine {dio_ok}, lagrange {lag:.1e}, "
              f"band {band_ok}")
    assert report(9, ok, detail, t0)


def test_criterion_10_dynamics(report):
    t0 = time.perf_counter()
    # the free front moves about 1.22 sites per step
    local = spectral.evolve_moments(ModelParams(0.5, 0.9, GOLDEN, 0.2), 1000, 10_000)
    slope = local.loglog_slope(1_000, 10_000)
    free = spectral.evolve_moments(ModelParams(0.6, 0.0, GOLDEN, 0.2), 26_000, 10_000)
    c, r2 = free.ballistic_fit(100)
    ok = local.complete and free.complete and slope <= 0.01 and r2 >= 0.999 and time.perf_counter() - t0 < 300
    assert report(10, ok, f"localized slope {slope:.4f}; constant coin c={c:.4f}, r2={r2:.6f}", t0)
