"""Adjoint gradient of the linearised harvest and projected ascent over refuges."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from functools import partial
from typing import Optional

import numpy as np

from .core import Grid, ModelParams, check_refuge, integrate, require_nontrivial
from .discretize import solve_helmholtz_neumann
from .harvest import R_opt_const, eta_L, phi_R
from .parallel import pmap
from .rearrange import is_symmetric_decreasing


def grad_eta_L(R, Vi0, grid: Grid, p: ModelParams) -> np.ndarray:
    """L2 gradient density of :func:`~refugelab.harvest.eta_L` with respect to R.

    Differentiating the phi_R equation gives ``A u = -m zeta phi`` with
    ``A = -sigma_V Lap + xi + m R``. Since ``A`` is symmetric,
    ``int u Vi0 = -m int zeta phi psi`` where ``A psi = Vi0``.
    """
    require_nontrivial(p)
    R = check_refuge(R, grid)
    Vi0 = grid.check(Vi0, "Vi0")
    pot = p.xi + p.m * R
    phi = solve_helmholtz_neumann(pot, np.ones(grid.n_cells), grid, p.sigma_V)
    psi = solve_helmholtz_neumann(pot, Vi0, grid, p.sigma_V)
    k = p.host_loss
    return -k * p.H0 + p.beta_VH * p.H0 * (p.m + k * p.xi) * phi * psi


def project_box(R) -> np.ndarray:
    return np.clip(R, 0.0, 1.0)


def project_mass(R, mass: float, grid: Grid, tol: float = 1e-15) -> np.ndarray:
    """Euclidean projection onto {0 <= R <= 1, int R = mass} by water-filling."""
    R = grid.check(R, "R")
    if not 0 <= mass <= grid.length * (1 + 1e-14):
        raise ValueError(f"mass {mass} outside [0, {grid.length}]")
    dx = grid.dx

    def total(tau):
        return dx * np.clip(R + tau, 0.0, 1.0).sum()

    lo, hi = -R.max(), 1.0 - R.min()
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if total(mid) < mass:
            lo = mid
        else:
            hi = mid
        if hi - lo <= tol:
            break
    tau = 0.5 * (lo + hi)
    # the map is affine on the current active set: solve it exactly there
    shifted = R + tau
    free = (shifted > 0) & (shifted < 1)
    if free.any():
        upper = np.count_nonzero(shifted >= 1)
        tau_exact = (mass / dx - upper - R[free].sum()) / np.count_nonzero(free)
        cand = np.clip(R + tau_exact, 0.0, 1.0)
        if abs(dx * cand.sum() - mass) <= abs(total(tau) - mass):
            return cand
    return np.clip(shifted, 0.0, 1.0)


@dataclass(frozen=True)
class OptConfig:
    step: Optional[float] = None        # initial step; default 1 / (host_loss * H0)
    max_iter: int = 2000
    tol: float = 1e-10
    mass: Optional[float] = None
    armijo: float = 1e-4
    backtrack: float = 0.5
    barzilai_borwein: bool = True

    def __post_init__(self):
        if self.step is not None and not self.step > 0:
            raise ValueError("step must be positive")
        if self.max_iter < 1 or not self.tol > 0:
            raise ValueError("need max_iter >= 1 and tol > 0")
        if self.mass is not None and self.mass < 0:
            raise ValueError("mass must be nonnegative")
        if not (0 < self.armijo < 1 and 0 < self.backtrack < 1):
            raise ValueError("line-search constants must lie in (0, 1)")


@dataclass
class OptResult:
    R_opt: np.ndarray
    grid: Grid
    history: np.ndarray
    grad_history: np.ndarray
    grad_norm: float
    iterations: int
    converged: bool
    active: dict = field(default_factory=dict)

    @property
    def eta_L(self) -> float:
        return float(self.history[-1])

    def refuge_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x", "R"])
            for x, r in zip(self.grid.x, self.R_opt):
                w.writerow([format(x, ".17g"), format(r, ".17g")])

    def history_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["iter", "eta_L", "grad_norm"])
            for i, (e, g) in enumerate(zip(self.history, self.grad_history)):
                w.writerow([i, format(e, ".17g"), format(g, ".17g")])


def _active_summary(R) -> dict:
    lower = int(np.count_nonzero(R <= 0.0))
    upper = int(np.count_nonzero(R >= 1.0))
    return {"lower": lower, "upper": upper, "free": R.size - lower - upper}


def projected_ascent(R0, Vi0, grid: Grid, p: ModelParams, cfg: OptConfig = OptConfig()) -> OptResult:
    """Maximise eta_L over refuges by projected gradient ascent.

    Steps start from the Barzilai-Borwein length and are halved until a
    sufficient increase holds, so the history never decreases (up to
    rounding in the evaluation of eta_L). Convergence is
    declared when ``|R - P(R + g / (k H0))|_inf <= tol``.
    """
    require_nontrivial(p)
    Vi0 = grid.check(Vi0, "Vi0")
    if cfg.mass is None:
        proj = project_box
    else:
        proj = partial(project_mass, mass=cfg.mass, grid=grid)
    scale = p.host_loss * p.H0
    default_step = 1.0 / scale
    R = proj(check_refuge(R0, grid) if cfg.mass is None else grid.check(R0, "R0"))

    def gradient(R):
        g = grad_eta_L(R, Vi0, grid, p)
        # the mass projection ignores constant shifts; dropping the mean
        # keeps steps small relative to R and avoids cancellation
        return g - g.mean() if cfg.mass is not None else g

    f = eta_L(R, Vi0, grid, p)
    g = gradient(R)

    def pg_norm(R, g):
        return float(np.abs(R - proj(R + g / scale)).max())

    hist = [f]
    ghist = [pg_norm(R, g)]
    alpha = cfg.step or default_step
    converged = ghist[-1] <= cfg.tol
    it = 0
    while not converged and it < cfg.max_iter:
        it += 1
        for _ in range(60):
            R_new = proj(R + alpha * g)
            d = R_new - R
            f_new = eta_L(R_new, Vi0, grid, p)
            g_new = gradient(R_new)
            # by concavity f_new - f >= <g_new, d>; the bound stays exact once
            # the change in f is below rounding
            gain = max(f_new - f, integrate(g_new * d, grid))
            if gain >= cfg.armijo * integrate(g * d, grid):
                break
            alpha *= cfg.backtrack
        else:
            break       # no ascent direction left
        s, y = d, g_new - g
        R, f, g = R_new, f_new, g_new
        hist.append(f)
        ghist.append(pg_norm(R, g))
        converged = ghist[-1] <= cfg.tol
        if cfg.barzilai_borwein:
            sy = -float(s @ y)
            alpha = float(s @ s) / sy if sy > 0 else default_step
            alpha = min(max(alpha, 1e-6 * default_step), 1e6 * default_step)
        else:
            alpha = cfg.step or default_step
    return OptResult(R_opt=R, grid=grid, history=np.array(hist), grad_history=np.array(ghist),
                     grad_norm=ghist[-1], iterations=it, converged=converged,
                     active=_active_summary(R))


def random_smooth_field(grid: Grid, rng, modes: int = 3) -> np.ndarray:
    """Random combination of the first Neumann cosine modes, scaled to sup-norm 1."""
    x = grid.x
    L = grid.L
    f = np.zeros(grid.n_cells)
    for k in range(modes + 1):
        f += rng.normal() * np.cos(k * np.pi * (x + L) / (2 * L))
    return f / max(np.abs(f).max(), 1e-300)


def random_refuge(grid: Grid, rng, modes: int = 3) -> np.ndarray:
    """Smooth random refuge with values spread over [0, 1]."""
    f = random_smooth_field(grid, rng, modes)
    return 0.5 + 0.5 * f


def _ascent_from(R0, Vi0, grid, p, cfg):
    return projected_ascent(R0, Vi0, grid, p, cfg)


def multistart(Vi0, grid: Grid, p: ModelParams, cfg: OptConfig = OptConfig(), starts: int = 10,
               seed: int = 0, workers: int | None = None) -> list:
    """Projected ascent from ``starts`` smooth random refuges."""
    rng = np.random.default_rng(seed)
    inits = [random_refuge(grid, rng) for _ in range(starts)]
    if cfg.mass is not None:
        inits = [project_mass(R, cfg.mass, grid) for R in inits]
    return pmap(partial(_ascent_from, Vi0=Vi0, grid=grid, p=p, cfg=cfg), inits, workers)


@dataclass
class CosineReport:
    u: np.ndarray
    gain: float
    int_uV: float
    eps: float


def cosine_perturbation_gain(R_bar: float, Vi0, grid: Grid, p: ModelParams,
                             eps: Optional[float] = None) -> CosineReport:
    """First variation of phi along cos(pi x / L) around a constant refuge, and the gain in eta_L."""
    require_nontrivial(p)
    Vi0 = grid.check(Vi0, "Vi0")
    if not 0 < R_bar < 1:
        raise ValueError("R_bar must lie in (0, 1)")
    if not is_symmetric_decreasing(Vi0, 1e-12):
        raise ValueError("Vi0 must be symmetric and decreasing away from the centre")
    room = min(R_bar, 1.0 - R_bar)
    if eps is None:
        eps = room / 2.0
    if abs(eps) > room:
        raise ValueError(f"eps = {eps} leaves [0, 1] (limit {room})")
    x, L = grid.x, grid.L
    cos = np.cos(np.pi * x / L)
    a = p.xi + p.m * R_bar
    u = -p.m * cos / (a * (a + p.sigma_V * (np.pi / L) ** 2))
    R0 = np.full(grid.n_cells, R_bar)
    gain = eta_L(R0 + eps * cos, Vi0, grid, p) - eta_L(R0, Vi0, grid, p)
    return CosineReport(u=u, gain=gain, int_uV=integrate(u * Vi0, grid), eps=eps)


@dataclass
class ConstantOptimumReport:
    R_star: float
    checks: dict                  # name -> (passed, measured value)

    @property
    def passed(self) -> bool:
        return all(ok for ok, _ in self.checks.values())

    def lines(self) -> list:
        return [f"{'PASS' if ok else 'FAIL'} {name}: {val:.6g}" for name, (ok, val) in
                self.checks.items()]


def verify_constant_optimum(E_Vi0: float, grid: Grid, p: ModelParams, trials: int = 50,
                            seed: int = 0) -> ConstantOptimumReport:
    """Check that the closed-form constant refuge is optimal for constant infection."""
    require_nontrivial(p)
    rng = np.random.default_rng(seed)
    R_star = min(R_opt_const(E_Vi0, p), 1.0)
    n = grid.n_cells
    V = np.full(n, float(E_Vi0))
    Rs = np.full(n, R_star)
    scale = p.H0 * grid.length
    g = grad_eta_L(Rs, V, grid, p)
    f0 = eta_L(Rs, V, grid, p)
    checks = {}
    interior = 0 < R_star < 1
    if interior:
        gi = integrate(g, grid)
        checks["gradient integral"] = (abs(gi) <= 1e-8 * scale, gi)
    worst = -math.inf
    for t in range(trials):
        zeta = random_smooth_field(grid, rng)
        if t % 2 == 0:
            zeta -= zeta.mean()
        if R_star == 0.0:
            zeta = np.abs(zeta)
        elif R_star == 1.0:
            zeta = -np.abs(zeta)
        amp = np.abs(zeta).max()
        room = min(R_star, 1.0 - R_star) if interior else 1.0
        eps = 0.5 * room / amp if amp > 0 else 0.0
        cand = np.clip(Rs + eps * zeta, 0.0, 1.0)
        worst = max(worst, eta_L(cand, V, grid, p) - f0)
    checks["perturbations never improve"] = (worst <= 1e-10 * scale, worst)
    if R_star == 0.0:
        # one-sided: moving into the box from R = 0 lowers eta_L
        dd = integrate(g, grid)
        checks["one-sided derivative at 0"] = (dd < 0 or E_Vi0 == 0, dd)
    return ConstantOptimumReport(R_star=R_star, checks=checks)


def constant_refuge_not_optimal(R_value: float, Vi0, grid: Grid, p: ModelParams) -> float:
    """Largest mean-zero directional derivative of eta_L at a constant refuge.

    A nonzero value means a mass-preserving perturbation improves eta_L, so
    the constant refuge is not optimal. The maximising direction is the
    normalised mean-free part of the gradient.
    """
    g = grad_eta_L(np.full(grid.n_cells, R_value), Vi0, grid, p)
    g0 = g - g.mean()
    nrm = math.sqrt(integrate(g0 * g0, grid))
    return nrm
