"""Acceptance criteria, one test per criterion.

Each test records its measured outcome before asserting, and the run ends with
a PASS/FAIL line per criterion.
"""

import math
import time

import numpy as np
import pytest

from refugelab.config import Built, default_config, remark1_printed_config
from refugelab.core import Grid, ModelParams, derive_coeffs, integrate
from refugelab.discretize import divergence_form_apply, laplacian_neumann
from refugelab.dynamics import StepperConfig, exact_logistic, initial_state, simulate
from refugelab.harvest import R_opt_const, compute_harvest, eta_L, eta_L_constant, phi_R
from refugelab.homogenize import averaged_coeffs, homogenization_sweep
from refugelab.optimize import (OptConfig, cosine_perturbation_gain, grad_eta_L, multistart,
                                projected_ascent, random_refuge, random_smooth_field,
                                verify_constant_optimum)
from refugelab.rearrange import (corollary_check, hardy_littlewood_check, polya_szego_deficit,
                                 schwarz_decreasing, schwarz_increasing)
from refugelab.verify import critical_growth, critical_params, vanishing_rate_table

DEFAULT = Built(default_config())
PRINTED = Built(remark1_printed_config())


def interior_params() -> ModelParams:
    # xi = 0.3, m = 0.9
    return ModelParams(beta_VH=3.0, beta_HV=2e-7, sigma_V=0.05, sigma_P=0.05, alpha=0.0,
                       s_V=0.5, s_P=1.0, h=1.0, gamma=0.5, H0=100.0, rP_r=1.0, rP_f=0.2,
                       bV_r=1.0, bV_f=1.0, dV_r=0.2, dV_f=0.1)


@pytest.mark.criterion(1)
def test_elliptic_exactness(accept):
    p, g = DEFAULT.params, DEFAULT.grid
    R = g.full(0.5)
    phi_R(R, g, p)                              # compile outside the timing
    t = time.perf_counter()
    phi = phi_R(R, g, p)
    elapsed = time.perf_counter() - t
    err = np.abs(phi - 1 / 1.814).max()
    ok = accept(1, "elliptic exactness", err <= 1e-10 and elapsed < 0.01 and
                p.xi == pytest.approx(1.58) and p.m == pytest.approx(0.468),
                f"max error {err:.2e}, {elapsed * 1e3:.2f} ms")
    assert ok


@pytest.mark.criterion(2)
def test_closed_form_linearised_harvest(accept):
    p, g = DEFAULT.params, DEFAULT.grid
    rng = np.random.default_rng(2)
    worst = 0.0
    for _ in range(100):
        R, v = rng.random(), 0.2 * rng.random()
        a = eta_L(g.full(R), g.full(v), g, p)
        b = eta_L_constant(R, v, p, g.length)
        worst = max(worst, abs(a - b) / abs(b))
    pp = PRINTED.params
    digits = math.inf
    for R in (0.0, 0.25, 0.5, 0.75, 1.0):
        printed = 1058823 * (1 - 0.2 * R) * (1 - 0.0448 / (1.58 + 0.468 * R))
        ours = eta_L(g.full(R), PRINTED.Vi0, g, pp)
        rel = abs(ours - printed) / printed
        digits = min(digits, -math.log10(max(rel, 1e-17)))
    ok = accept(2, "closed-form linearised harvest", worst <= 1e-12 and digits >= 6,
                f"worst relative gap {worst:.2e}, printed curve to {digits:.1f} digits")
    assert ok


def logistic_params():
    # r_V = r_P = s_V = s_P = 1 and (gamma - 1) h = -2
    return ModelParams(beta_VH=1.0, beta_HV=1.0, sigma_V=0.1, sigma_P=0.1, alpha=0.1, s_V=1.0,
                       s_P=1.0, h=4.0, gamma=0.5, H0=1.0, rP_r=2.0, rP_f=1.0, bV_r=2.0,
                       bV_f=2.0, dV_r=1.0, dV_f=1.0)


def _logistic_errors(dt):
    p = logistic_params()
    g = Grid(1.0, 8)
    c = derive_coeffs(p, g.full(0.0), g)
    s = initial_state(g, 0.1, 0.15, 0.5)
    errs, t = [], 0.0
    for T in (1.0, 5.0, 10.0):
        s = simulate(s, c, p, StepperConfig(dt=dt, stride=10 ** 9), T - t).final
        t = T
        errs.append(float(np.abs((s.V + s.P) / exact_logistic(0.75, T) - 1).max()))
    return np.array(errs)


@pytest.mark.criterion(3)
def test_logistic_oracle(accept):
    t = time.perf_counter()
    coarse = _logistic_errors(1e-3)
    fine = _logistic_errors(1e-4)
    elapsed = time.perf_counter() - t
    ratio = (coarse / fine).min()
    ok = accept(3, "logistic oracle", coarse.max() <= 1e-3 and ratio >= 5 and elapsed < 30,
                f"errors {coarse.max():.2e} -> {fine.max():.2e}, ratio {ratio:.1f}, "
                f"{elapsed:.1f} s")
    assert ok


@pytest.mark.criterion(4)
def test_integral_oracle(accept):
    # removal m_hat = 1 with predators frozen at r_P / s_P
    p = critical_params(dV_r=1.5, dV_f=1.5)
    g = Grid(1.0, 8)
    c = derive_coeffs(p, g.full(0.0), g)
    m_hat = float(p.h * c.r_P[0] / p.s_P - c.r_V[0])
    t = time.perf_counter()
    rep = compute_harvest(initial_state(g, 0.5, 0.5), c, p, StepperConfig(dt=1e-3))
    elapsed = time.perf_counter() - t
    int_V = float(rep.JV_total.mean())
    rel = abs(int_V / math.log(2) - 1)
    ok = accept(4, "integral oracle", m_hat == pytest.approx(1.0) and p.s_V == 1.0 and
                rel <= 0.01 and elapsed < 30,
                f"int V = {int_V:.6f} vs ln 2, relative gap {rel:.1e}, {elapsed:.1f} s")
    assert ok


@pytest.mark.criterion(5)
def test_gradient_check(accept):
    p, g = DEFAULT.params, DEFAULT.grid
    rng = np.random.default_rng(5)
    worst = 0.0
    h = 1e-5
    for _ in range(20):
        R = 0.1 + 0.8 * random_refuge(g, rng)
        Vi0 = 0.05 * (1.2 + random_smooth_field(g, rng))
        z = random_smooth_field(g, rng)
        fd = (eta_L(R + h * z, Vi0, g, p) - eta_L(R - h * z, Vi0, g, p)) / (2 * h)
        ad = integrate(grad_eta_L(R, Vi0, g, p) * z, g)
        worst = max(worst, abs(ad - fd) / abs(fd))
    ok = accept(5, "adjoint gradient", worst <= 1e-5, f"worst relative error {worst:.2e}")
    assert ok


@pytest.mark.criterion(6)
def test_constant_optimum(accept):
    p = interior_params()
    g = DEFAULT.grid
    E = 4 * p.xi ** 2 / (p.beta_VH * (p.xi + p.m))
    R_star = R_opt_const(E, p)
    runs = multistart(g.full(E), g, p, OptConfig(), starts=10, seed=6)
    dist = max(np.abs(r.R_opt - R_star).max() for r in runs)
    converged = all(r.converged for r in runs)
    rep = verify_constant_optimum(E, g, p, trials=50, seed=6)
    pp = DEFAULT.params
    clamp = R_opt_const(0.0448 / pp.beta_VH, pp)
    Rs = np.linspace(0, 1, 2000)
    scan = Rs[np.argmax([eta_L_constant(R, 0.0448 / pp.beta_VH, pp, g.length) for R in Rs])]
    ok = accept(6, "constant optimum", converged and dist <= 1e-4 and rep.passed and
                clamp == 0.0 and scan == 0.0,
                f"R* = {R_star:.6f}, multistart distance {dist:.1e}, "
                f"worst perturbation gain {rep.checks['perturbations never improve'][1]:.1e}, "
                f"printed case clamps to {clamp} (scan max at {scan})")
    assert ok


@pytest.mark.criterion(7)
def test_decreasing_refuge_beats_constant(accept):
    p, g = DEFAULT.params, DEFAULT.grid
    Vi0 = 0.05 * np.exp(-(g.x / 0.3) ** 2)
    rep = cosine_perturbation_gain(0.5, Vi0, g, p, eps=1e-2)
    mass = 0.5 * g.length
    res = projected_ascent(g.full(0.5), Vi0, g, p, OptConfig(mass=mass))
    base = eta_L(g.full(0.5), Vi0, g, p)
    spread = float(np.ptp(res.R_opt))
    ok = accept(7, "symmetric decreasing refuge beats the constant",
                rep.int_uV < 0 and rep.gain > 0 and res.eta_L > base and spread > 1e-6
                and abs(integrate(res.R_opt, g) - mass) <= 1e-12,
                f"int uV = {rep.int_uV:.3e}, gain {rep.gain:.3e}, optimum gain "
                f"{res.eta_L - base:.3e} with spread {spread:.3f}")
    assert ok


@pytest.mark.criterion(8)
def test_homogenization_sweep(accept):
    b = DEFAULT
    g = Grid(1.0, 256)
    R = (g.x < 0).astype(float)
    p = b.params
    s0 = initial_state(g, 0.01, 0.237, averaged_coeffs(R, p, g).rP_inf / p.s_P)
    t = time.perf_counter()
    rep = homogenization_sweep(R, g, s0, p, b.stepper, [1, 2, 4, 8, 16])
    elapsed = time.perf_counter() - t
    gaps = rep.abs_gap
    ok = accept(8, "harvest homogenizes", bool(np.all(np.diff(gaps) < 0)) and elapsed < 600,
                "gaps " + ", ".join(f"{v:.4g}" for v in gaps) + f"; {elapsed:.1f} s")
    assert ok


@pytest.mark.criterion(9)
def test_harvest_decay_at_zero_eigenvalue(accept):
    rep = critical_growth(critical_params(), Grid(1.0, 8))
    J100 = rep.int_J[np.searchsorted(rep.times, 100.0)]
    ok = accept(9, "zero principal eigenvalue", rep.passed(),
                f"int J: {J100:.4g} at T=1e2 -> {rep.int_J[-1]:.4g} at T=1e4, log slope "
                f"{rep.slope:.3f}, eta by decade " + ", ".join(f"{v:.3g}" for v in rep.eta))
    assert ok


@pytest.mark.criterion(10)
def test_vanishing_removal(accept):
    rows = vanishing_rate_table([0.1, 0.05, 0.025, 0.0125], Grid(1.0, 8))
    vals = [r.int_V for r in rows]
    mono = all(b > a for a, b in zip(vals, vals[1:]))
    above = all(r.int_V > r.lower_bound for r in rows)
    ok = accept(10, "vanishing removal rate", mono and above,
                "; ".join(f"m={r.m_bar}: {r.int_V:.4g} > {r.lower_bound:.4g}" for r in rows))
    assert ok


@pytest.mark.criterion(11)
def test_rearrangement_suite(accept):
    rng = np.random.default_rng(11)
    t = time.perf_counter()
    multiset = True
    hl = ps = -math.inf
    for _ in range(1000):
        n = int(rng.integers(2, 200))
        f, g = rng.random(n), rng.normal(size=n)
        for r in (schwarz_decreasing(f), schwarz_increasing(f)):
            multiset &= bool(np.array_equal(np.sort(r), np.sort(f)))
        lhs, rhs = hardy_littlewood_check(f, g)
        hl = max(hl, (lhs - rhs) / max(1.0, abs(rhs)))
        ps = max(ps, -polya_szego_deficit(f) / max(1.0, float(np.sum(f * f))))
    g6 = Grid(1.0, 6)
    rep = corollary_check(np.array([0.2, 0.6, 0.9, 0.9, 0.6, 0.2]), rng.random(6), g6,
                          DEFAULT.params)
    elapsed = time.perf_counter() - t
    ok = accept(11, "rearrangement suite", multiset and hl <= 1e-12 and ps <= 1e-12
                and rep.passed and rep.trials == 720 and elapsed < 60,
                f"Hardy-Littlewood excess {hl:.1e}, Polya-Szego shortfall {ps:.1e}, "
                f"{rep.trials} permutations, {elapsed:.1f} s")
    assert ok


@pytest.mark.criterion(12)
def test_operator_conservation(accept):
    g = DEFAULT.grid
    rng = np.random.default_rng(12)
    worst = 0.0
    for _ in range(1000):
        f = rng.normal(size=g.n_cells)
        r = 0.5 + rng.random(g.n_cells)
        for out in (laplacian_neumann(f, g, 0.05), divergence_form_apply(r, f, g, 0.05)):
            worst = max(worst, abs(integrate(out, g)) / integrate(np.abs(out), g))
    ok = accept(12, "operator conservation", worst <= 1e-12, f"worst relative integral {worst:.1e}")
    assert ok
