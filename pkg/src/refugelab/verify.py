"""Property checks shared by the verification command and the test-suite."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .core import Grid, ModelParams, derive_coeffs, integrate
from .discretize import divergence_form_apply, laplacian_neumann, solve_helmholtz_neumann
from .dynamics import StepperConfig, initial_state, simulate
from .harvest import eta_L, phi_R
from .homogenize import averaged_coeffs, refuge_freq
from .optimize import (OptConfig, cosine_perturbation_gain, grad_eta_L, project_mass,
                       projected_ascent, random_refuge, random_smooth_field,
                       verify_constant_optimum)
from .rearrange import (corollary_check, hardy_littlewood_check, polya_szego_deficit,
                        schwarz_decreasing)
from .spectral import principal_eigenpair, vector_potential


@dataclass
class CheckResult:
    name: str
    passed: Optional[bool]          # None: skipped
    value: float = math.nan
    detail: str = ""

    @property
    def status(self) -> str:
        return "SKIP" if self.passed is None else ("PASS" if self.passed else "FAIL")

    def line(self) -> str:
        val = "" if math.isnan(self.value) else f" value={self.value:.6g}"
        det = f" ({self.detail})" if self.detail else ""
        return f"{self.status:4s} {self.name}{val}{det}"


# Long-time checks

@dataclass
class GrowthReport:
    times: np.ndarray
    int_J: np.ndarray
    eta: np.ndarray
    slope: float
    host_total: float

    @property
    def decade_drops(self) -> np.ndarray:
        """Decrease of log(eta) over each decade of time (times must be decades)."""
        return -np.diff(np.log(self.eta))

    def passed(self) -> bool:
        grow = self.int_J[-1] > self.int_J[np.searchsorted(self.times, 100.0)] and self.slope > 0
        monotone = bool(np.all(np.diff(self.eta) < 0))
        drops = self.decade_drops
        alive = self.eta[:-1] > 1e-3 * self.host_total
        no_plateau = bool(np.all(drops[alive] >= 0.25 * drops[0]))
        return bool(grow and monotone and no_plateau)


def critical_params(**overrides) -> ModelParams:
    """Constant-predator system whose vector operator has zero potential at both refuge ends."""
    base = dict(beta_VH=1.0, beta_HV=1.0, sigma_V=0.05, sigma_P=0.05, alpha=0.1, s_V=1.0,
                s_P=1.0, h=1.0, gamma=0.0, H0=1.0, rP_r=1.0, rP_f=0.5, bV_r=1.5, bV_f=1.0,
                dV_r=0.5, dV_f=0.5)
    base.update(overrides)
    return ModelParams(**base)


def critical_growth(p: ModelParams, grid: Grid, Vi0=0.1, Vs0=0.5, R=0.0, T=1e4,
                    dt=0.05, per_decade: int = 4) -> GrowthReport:
    """Reduced system run to ``T``; the integral of J and the harvest at log-spaced times.

    ``eta`` is sampled at the decades 1, 10, ..., T.
    """
    c = derive_coeffs(p, np.full(grid.n_cells, R), grid)
    s = initial_state(grid, Vi0, Vs0)
    cfg = StepperConfig(dt=dt, stride=10 ** 9)
    n_dec = round(math.log10(T))
    marks = np.logspace(0, n_dec, per_decade * n_dec + 1)
    J = np.zeros(grid.n_cells)
    ints, etas = [], []
    t = 0.0
    for b in marks:
        tr = simulate(s, c, p, cfg, b - t)
        J += tr.J
        s, t = tr.final, b
        ints.append(integrate(J, grid))
        etas.append(integrate(c.H * np.exp(-p.beta_VH * J), grid))
    ints = np.array(ints)
    sel = marks >= 100.0
    slope = float(np.polyfit(np.log(marks[sel]), ints[sel], 1)[0])
    return GrowthReport(times=marks, int_J=ints, eta=np.array(etas[::per_decade]), slope=slope,
                        host_total=integrate(c.H, grid))


@dataclass
class VanishingRateRow:
    m_bar: float
    int_V: float
    lower_bound: float
    exact: float


def vanishing_rate_table(m_bars, grid: Grid, Vi0=0.1, Vs0=0.4, s_V=1.0, T_max=2000.0,
                         dt=0.05) -> list:
    """Time integral of V for constant coefficients with removal rate ``m_bar``.

    The integral is truncated at ``T_max`` and closed with an exponential
    tail fitted on the last fifth of the run. Each row also carries the
    logarithmic lower bound built from the spatial minimum of V at t = 1,
    and the exact value of the space-homogeneous problem.
    """
    rows = []
    for mb in m_bars:
        p = critical_params(s_V=s_V, dV_r=0.5 + mb, dV_f=0.5 + mb)
        c = derive_coeffs(p, np.zeros(grid.n_cells), grid)
        s0 = initial_state(grid, Vi0, Vs0)
        cfg = StepperConfig(dt=dt, stride=10 ** 9)
        first = simulate(s0, c, p, cfg, 1.0)
        rest = simulate(first.final, c, p, cfg, T_max - 1.0)
        t = rest.step_times
        sel = t >= t[-1] - 0.2 * (T_max - 1.0)
        rate = -np.polyfit(t[sel], np.log(rest.max_V[sel]), 1)[0]
        tail = rest.final.V / rate if rate > 0 else np.zeros(grid.n_cells)
        JV = first.JV + rest.JV + tail
        V1 = float(first.final.V.min())
        a = mb / (s_V * V1)
        bound = math.log((a + 1.0) / (a + 1.0 - math.exp(-mb))) / s_V
        exact = math.log1p(s_V * (Vi0 + Vs0) / mb) / s_V
        rows.append(VanishingRateRow(mb, float(JV.min()), bound, exact))
    return rows


# Suite

def _timed(name, fn) -> list:
    t = time.perf_counter()
    try:
        out = fn()
    except Exception as e:       # a crash in one check must not hide the others
        return [CheckResult(name, False, detail=f"{type(e).__name__}: {e}")]
    dt = time.perf_counter() - t
    out = out if isinstance(out, list) else [out]
    for r in out:
        r.detail = (r.detail + "; " if r.detail else "") + f"{dt:.2f}s"
    return out


def run_suite(built, log: Callable[[str], None] | None = None) -> list:
    """Every invariant, on the configured parameters and grid.

    ``built`` is a :class:`refugelab.config.Built`. Optimiser checks are
    skipped when m <= 0.
    """
    cfg = built.cfg.verify
    p: ModelParams = built.params
    grid: Grid = built.grid
    rng = np.random.default_rng(built.cfg.seed)
    n = grid.n_cells
    trials = cfg.trials
    nontrivial = p.m > 0
    results = []

    def emit(rs):
        for r in rs:
            results.append(r)
            if log:
                log(r.line())

    def conservation():
        worst = 0.0
        for _ in range(trials):
            f = rng.normal(size=n)
            r = 0.5 + rng.random(n)
            for out in (laplacian_neumann(f, grid), divergence_form_apply(r, f, grid)):
                worst = max(worst, abs(out.sum()) / np.abs(out).sum())
        return CheckResult("diffusion operators conserve mass", worst <= 1e-12, worst)

    def helmholtz():
        worst = 0.0
        for _ in range(20):
            pot = 0.1 + rng.random(n)
            rhs = rng.normal(size=n)
            u = solve_helmholtz_neumann(pot, rhs, grid, p.sigma_V)
            res = pot * u - laplacian_neumann(u, grid, p.sigma_V) - rhs
            worst = max(worst, np.abs(res).max() / np.abs(rhs).max())
        return CheckResult("tridiagonal Helmholtz residual", worst <= cfg.rel_tol, worst)

    def positivity():
        out = []
        mins = []
        for _ in range(20):
            pot = 0.1 + rng.random(n)
            mins.append(solve_helmholtz_neumann(pot, rng.random(n) + 1e-3, grid, p.sigma_V).min())
        out.append(CheckResult("maximum principle", min(mins) > 0, min(mins)))
        ep = principal_eigenpair(vector_potential(derive_coeffs(p, built.R, grid), p), grid,
                                 p.sigma_V)
        out.append(CheckResult("principal eigenpair residual",
                               ep.residual <= 1e-9 * np.abs(ep.phi).max(), ep.residual,
                               f"lambda1={ep.lambda1:.6g}"))
        return out

    def phi_checks():
        over, mono = -math.inf, -math.inf
        for _ in range(trials // 10 + 1):
            R1 = random_refuge(grid, rng)
            R2 = np.clip(R1 + 0.3 * rng.random(n), 0, 1)
            f1, f2 = phi_R(R1, grid, p), phi_R(R2, grid, p)
            over = max(over, (f1.max() - 1 / p.xi) * p.xi, -f1.min())
            mono = max(mono, (f2 - f1).max() * p.xi)
        return [CheckResult("phi_R within (0, 1/xi]", over <= 1e-12, over),
                CheckResult("phi_R decreasing in R", mono <= 1e-12, mono)]

    def concavity():
        scale = p.H0 * grid.length
        worst = -math.inf
        for _ in range(trials // 10 + 1):
            R1, R2 = random_refuge(grid, rng), random_refuge(grid, rng)
            V = 0.05 * np.abs(random_smooth_field(grid, rng))
            th = rng.random()
            gap = (th * eta_L(R1, V, grid, p) + (1 - th) * eta_L(R2, V, grid, p)
                   - eta_L(th * R1 + (1 - th) * R2, V, grid, p))
            worst = max(worst, gap / scale)
        return CheckResult("eta_L concave", worst <= 1e-9, worst)

    def gradient():
        worst = 0.0
        for _ in range(20):
            R = 0.1 + 0.8 * random_refuge(grid, rng)
            V = 0.1 * np.abs(random_smooth_field(grid, rng))
            z = random_smooth_field(grid, rng)
            a = integrate(grad_eta_L(R, V, grid, p) * z, grid)
            hh = 1e-5
            fd = (eta_L(R + hh * z, V, grid, p) - eta_L(R - hh * z, V, grid, p)) / (2 * hh)
            worst = max(worst, abs(a - fd) / max(abs(fd), 1e-300))
        return CheckResult("adjoint gradient vs finite differences", worst <= cfg.fd_tol, worst)

    def projection():
        worst = 0.0
        for _ in range(trials // 10 + 1):
            c = rng.random() * grid.length
            R = rng.normal(0.5, 0.7, n)
            P1 = project_mass(R, c, grid)
            P2 = project_mass(P1, c, grid)
            worst = max(worst, abs(integrate(P1, grid) - c), np.abs(P2 - P1).max(),
                        -P1.min(), P1.max() - 1)
        return CheckResult("mass projection feasible and idempotent", worst <= 1e-12, worst)

    def constant_optimum():
        E = float(np.mean(built.Vi0))
        rep = verify_constant_optimum(E, grid, p, trials=min(trials, 50), seed=built.cfg.seed)
        return [CheckResult(f"constant optimum: {k}", ok, v, f"R*={rep.R_star:.6g}")
                for k, (ok, v) in rep.checks.items()]

    def cosine():
        V = 0.05 * np.exp(-(grid.x / (0.3 * grid.L)) ** 2)
        rep = cosine_perturbation_gain(0.5, V, grid, p, eps=1e-2)
        return [CheckResult("cosine first variation pairs negatively", rep.int_uV < 0, rep.int_uV),
                CheckResult("cosine perturbation gains", rep.gain > 0, rep.gain)]

    def mass_optimum():
        V = 0.05 * np.exp(-(grid.x / (0.3 * grid.L)) ** 2)
        mass = 0.5 * grid.length
        res = projected_ascent(np.full(n, 0.5), V, grid, p, OptConfig(mass=mass, max_iter=500))
        base = eta_L(np.full(n, 0.5), V, grid, p)
        spread = float(np.ptp(res.R_opt))
        return CheckResult("mass-constrained optimum beats constant",
                           res.eta_L > base and spread > 1e-6, res.eta_L - base,
                           f"spread={spread:.3g}")

    def rearrangement():
        worst_hl, worst_ps, multiset = -math.inf, -math.inf, True
        for _ in range(trials):
            f, g = rng.random(n), rng.normal(size=n)
            fs = schwarz_decreasing(f)
            multiset &= bool(np.array_equal(np.sort(f), np.sort(fs)))
            lhs, rhs = hardy_littlewood_check(f, g, grid)
            worst_hl = max(worst_hl, (lhs - rhs) / max(abs(rhs), 1.0))
            worst_ps = max(worst_ps, -polya_szego_deficit(f, grid) / max(1.0, np.sum(f ** 2)))
        return [CheckResult("rearrangement preserves values", multiset),
                CheckResult("Hardy-Littlewood", worst_hl <= 1e-12, worst_hl),
                CheckResult("Polya-Szego (zero extension)", worst_ps <= 1e-12, worst_ps)]

    def extremal_pairings():
        # phi_R is symmetric increasing only when m > 0
        R6 = np.array([0.2, 0.6, 0.9, 0.9, 0.6, 0.2])
        rep = corollary_check(R6, rng.random(6), Grid(grid.L, 6), p)
        return CheckResult("rearranged pairings are extremal", rep.passed, rep.trials)

    def homogenized():
        R = (grid.x < 0).astype(float)
        hc = averaged_coeffs(R, p, grid)
        ok = hc.rP_inf_2 >= hc.rP_inf ** 2 - 1e-14 and hc.r_star <= hc.rP_inf + 1e-14
        lams = []
        for k in (1, 2, 4, 8):
            if n % k:
                continue
            c = derive_coeffs(p, refuge_freq(R, k, grid), grid)
            lams.append(principal_eigenpair(vector_potential(c, p), grid, p.sigma_V).lambda1)
        lam_inf = -hc.rV_inf + p.h * hc.rP_inf / p.s_P
        order = all(b >= a - 1e-10 for a, b in zip(lams, lams[1:])) and lams[-1] <= lam_inf + 1e-10
        return [CheckResult("averaged coefficient inequalities", ok),
                CheckResult("eigenvalue increases with frequency", order, lams[-1] - lam_inf)]

    def prop1():
        rep = critical_growth(critical_params(), Grid(1.0, 8))
        return CheckResult("harvest decays at zero eigenvalue", rep.passed(), rep.slope)

    def prop2():
        rows = vanishing_rate_table([0.1, 0.05, 0.025, 0.0125], Grid(1.0, 8))
        vals = [r.int_V for r in rows]
        mono = all(b > a for a, b in zip(vals, vals[1:]))
        above = all(r.int_V > r.lower_bound for r in rows)
        return CheckResult("vector integral grows as removal vanishes", mono and above, vals[-1])

    checks = [("conservation", conservation), ("helmholtz", helmholtz),
              ("positivity", positivity), ("rearrangement", rearrangement)]
    if nontrivial:
        checks += [("phi", phi_checks), ("concavity", concavity), ("gradient", gradient),
                   ("projection", projection), ("constant optimum", constant_optimum),
                   ("cosine", cosine), ("mass optimum", mass_optimum),
                   ("extremal pairings", extremal_pairings)]
    else:
        checks += [("projection", projection)]
        for name in ("phi_R bounds", "eta_L concave", "adjoint gradient", "constant optimum",
                     "cosine perturbation", "mass-constrained optimum", "extremal pairings"):
            emit([CheckResult(name, None, detail="m <= 0")])
    checks.append(("homogenized", homogenized))
    if cfg.slow:
        checks += [("prop1", prop1), ("prop2", prop2)]
    for name, fn in checks:
        emit(_timed(name, fn))
    return results
