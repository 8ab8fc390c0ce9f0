"""Time integration of the host / vector / predator system.

Diffusion is treated by Crank-Nicolson (or backward Euler), reactions by
explicit Euler. The predator is advanced in the variable ``q = P / r_P`` so
that ideal-free dispersal becomes a symmetric flux operator with plain
Neumann closure. Negative undershoots are clipped to zero.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, replace
from typing import Callable, Optional, Union

import numpy as np

from .core import Grid, HomogenizedCoeffs, ModelParams, SpatialCoeffs
from .discretize import _thomas, flux_bands, laplacian_bands, tridiag_matvec

log = logging.getLogger(__name__)

BLOWUP = 1e12


class BlowUpError(RuntimeError):
    def __init__(self, t: float, what: str = ""):
        super().__init__(f"solution blew up at t = {t:.6g} {what}".rstrip())
        self.t = t


@dataclass(frozen=True)
class State:
    """Populations at time ``t``. ``P`` is None for the reduced system."""

    I: np.ndarray
    Vi: np.ndarray
    Vs: np.ndarray
    P: Optional[np.ndarray]
    t: float = 0.0

    @property
    def V(self) -> np.ndarray:
        return self.Vi + self.Vs

    def without_predator(self) -> "State":
        return State(self.I, self.Vi, self.Vs, None, self.t)


def initial_state(grid: Grid, Vi0, Vs0, P0=None, I0=None) -> State:
    """Initial data; scalars are broadcast over the grid, I defaults to 0."""
    def as_field(v):
        a = np.broadcast_to(np.asarray(v, dtype=float), (grid.n_cells,)).copy()
        if np.any(a < 0) or not np.all(np.isfinite(a)):
            raise ValueError("initial data must be finite and nonnegative")
        return a
    I = np.zeros(grid.n_cells) if I0 is None else as_field(I0)
    return State(I, as_field(Vi0), as_field(Vs0), None if P0 is None else as_field(P0), 0.0)


@dataclass(frozen=True)
class StepperConfig:
    dt: float = 1e-3
    scheme: str = "crank-nicolson"
    stride: int = 100
    clip_tol: float = 1e-8

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.scheme not in ("crank-nicolson", "backward-euler"):
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if self.stride < 1:
            raise ValueError("stride must be >= 1")

    @property
    def theta(self) -> float:
        return 0.5 if self.scheme == "crank-nicolson" else 1.0


class _Integrator:
    """Caches the implicit matrices of one system for repeated stepping."""

    def __init__(self, kind: str, coeffs, params: ModelParams, cfg: StepperConfig):
        self.kind = kind
        self.p = params
        self.cfg = cfg
        self.theta = cfg.theta
        if kind == "homogenized":
            hc: HomogenizedCoeffs = coeffs
            grid = hc.grid
            n = grid.n_cells
            self.H = np.full(n, hc.H_inf)
            self.b_V = np.full(n, hc.bV_inf)
            self.d_V = np.full(n, hc.dV_inf)
            self.r_P = np.full(n, hc.rP_inf)
            self.growth = hc.predator_growth
            self.saturation = hc.predator_saturation(params.s_P)
            self.pred_bands = laplacian_bands(grid, params.sigma_P * hc.predator_diffusivity_factor)
        else:
            c: SpatialCoeffs = coeffs
            grid = c.grid
            self.H, self.b_V, self.d_V, self.r_P = c.H, c.b_V, c.d_V, c.r_P
            if kind == "full":
                self.pred_bands = flux_bands(c.r_P, grid, params.sigma_P)
        self.grid = grid
        self.vec_bands = laplacian_bands(grid, params.sigma_V)
        self.frozen_predation = params.h * self.r_P / params.s_P
        self._cache = {}

    def _implicit(self, dt: float):
        key = dt
        if key not in self._cache:
            th = self.theta
            lo, di, up = self.vec_bands
            vec = (np.ascontiguousarray(-th * dt * lo), np.ascontiguousarray(1.0 - th * dt * di),
                   np.ascontiguousarray(-th * dt * up))
            pred = None
            if self.kind != "reduced":
                lo, di, up = self.pred_bands
                mass = self.r_P if self.kind == "full" else np.ones(self.grid.n_cells)
                pred = (np.ascontiguousarray(-th * dt * lo), np.ascontiguousarray(mass - th * dt * di),
                        np.ascontiguousarray(-th * dt * up))
            self._cache[key] = (vec, pred)
        return self._cache[key]

    def _solve(self, bands, rhs, t):
        x, ok = _thomas(bands[0], bands[1], bands[2], rhs)
        if not ok:
            raise BlowUpError(t, "(singular implicit matrix)")
        return x

    def step(self, s: State, dt: float) -> State:
        p = self.p
        th = self.theta
        vec, pred = self._implicit(dt)
        I, Vi, Vs = s.I, s.Vi, s.Vs
        V = Vi + Vs
        if self.kind == "reduced":
            hP = self.frozen_predation
        else:
            hP = p.h * s.P

        infection = p.beta_HV * I * Vs
        crowd = p.s_V * V + hP
        f_i = infection - (p.alpha + self.d_V + crowd) * Vi
        f_s = -infection + p.alpha * Vi - (self.d_V + crowd) * Vs + self.b_V * V

        lo, di, up = self.vec_bands
        ex = (1.0 - th) * dt
        rhs_i = Vi + dt * f_i
        rhs_s = Vs + dt * f_s
        if ex:
            rhs_i += ex * tridiag_matvec(lo, di, up, Vi)
            rhs_s += ex * tridiag_matvec(lo, di, up, Vs)
        Vi_new = self._solve(vec, rhs_i, s.t)
        Vs_new = self._solve(vec, rhs_s, s.t)

        I_new = I + dt * p.beta_VH * (self.H - I) * Vi
        np.clip(I_new, 0.0, self.H, out=I_new)

        P_new = None
        if self.kind == "full":
            r = self.r_P
            q = s.P / r
            react = (p.gamma * p.h * V + r - p.s_P * s.P) * s.P
            rhs = r * q + dt * react
            if ex:
                rhs += ex * tridiag_matvec(*self.pred_bands, q)
            P_new = r * self._solve(pred, rhs, s.t)
        elif self.kind == "homogenized":
            P = s.P
            react = (p.gamma * p.h * V + self.growth - self.saturation * P) * P
            rhs = P + dt * react
            if ex:
                rhs += ex * tridiag_matvec(*self.pred_bands, P)
            P_new = self._solve(pred, rhs, s.t)

        t_new = s.t + dt
        out = [Vi_new, Vs_new] + ([P_new] if P_new is not None else [])
        clipped = 0.0
        for a in out:
            lo_v = a.min()
            if lo_v < 0.0:
                scale = max(np.abs(a).max(), 1e-300)
                if lo_v < -self.cfg.clip_tol * scale:
                    log.debug("undershoot %.3g at t=%.6g clipped", lo_v, t_new)
                neg = -a[a < 0].sum()
                clipped = max(clipped, neg / max(np.abs(a).sum(), 1e-300))
                np.maximum(a, 0.0, out=a)
        self.last_clip = clipped
        for a in out:
            if not np.all(np.isfinite(a)) or a.max() > BLOWUP:
                raise BlowUpError(t_new)
        return State(I_new, Vi_new, Vs_new, P_new, t_new)


def _kind_of(state: State, coeffs) -> str:
    if isinstance(coeffs, HomogenizedCoeffs):
        if state.P is None:
            raise ValueError("the homogenized system needs a predator field")
        return "homogenized"
    return "reduced" if state.P is None else "full"


def step_full(s: State, c: SpatialCoeffs, p: ModelParams, cfg: StepperConfig) -> State:
    if s.P is None:
        raise ValueError("step_full needs a predator field")
    return _Integrator("full", c, p, cfg).step(s, cfg.dt)


def step_reduced(s: State, c: SpatialCoeffs, p: ModelParams, cfg: StepperConfig) -> State:
    """One step with predators frozen at r_P / s_P."""
    return _Integrator("reduced", c, p, cfg).step(s.without_predator(), cfg.dt)


def step_homogenized(s: State, hc: HomogenizedCoeffs, p: ModelParams, cfg: StepperConfig) -> State:
    return _Integrator("homogenized", hc, p, cfg).step(s, cfg.dt)


@dataclass
class Trajectory:
    """Decimated snapshots plus per-step diagnostics.

    ``J`` and ``JV`` are the running time integrals of V_i and of V = V_i + V_s
    at the final time, accumulated by the trapezoidal rule at every step.
    """

    grid: Grid
    times: np.ndarray
    states: list
    J_snapshots: list
    final: State
    J: np.ndarray
    JV: np.ndarray
    step_times: np.ndarray
    max_Vi: np.ndarray
    max_V: np.ndarray
    max_clip: float = 0.0
    stopped_early: bool = False

    def to_csv(self, path) -> None:
        """Write snapshots as rows (t, x, I, Vi, Vs, P, J)."""
        x = self.grid.x
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "x", "I", "Vi", "Vs", "P", "J"])
            for t, s, J in zip(self.times, self.states, self.J_snapshots):
                P = s.P if s.P is not None else np.full_like(x, np.nan)
                for j in range(len(x)):
                    w.writerow([_g(t), _g(x[j]), _g(s.I[j]), _g(s.Vi[j]), _g(s.Vs[j]),
                                _g(P[j]), _g(J[j])])


def _g(v) -> str:
    return format(float(v), ".17g")


def simulate(initial: State, coeffs: Union[SpatialCoeffs, HomogenizedCoeffs], params: ModelParams,
             cfg: StepperConfig, t_end: float,
             stop: Optional[Callable[[State], bool]] = None) -> Trajectory:
    """Integrate from ``initial`` to ``t_end`` (or until ``stop(state)`` is true).

    The system is chosen from the arguments: homogenized coefficients select
    the homogenized system, a missing predator field selects the reduced one.
    """
    if t_end < 0:
        raise ValueError("t_end must be nonnegative")
    kind = _kind_of(initial, coeffs)
    integ = _Integrator(kind, coeffs, params, cfg)
    grid = integ.grid
    s = initial
    J = np.zeros(grid.n_cells)
    JV = np.zeros(grid.n_cells)
    times, states, J_snaps = [s.t], [s], [J.copy()]
    step_t = [s.t]
    max_vi = [float(s.Vi.max())]
    max_v = [float(s.V.max())]
    max_clip = 0.0
    dt = cfg.dt
    t_stop = initial.t + t_end
    k = 0
    stopped = False
    t0 = initial.t
    n_full = int(math.floor(t_end / dt * (1 + 1e-12)))
    n_steps = n_full + (1 if t_end - n_full * dt > 1e-12 * max(1.0, t_end) else 0)
    while k < n_steps:
        h = min(dt, t_stop - s.t)
        new = integ.step(s, h)
        # times from the step count, so rounding does not accumulate
        new = replace(new, t=t_stop if k + 1 == n_steps else t0 + (k + 1) * dt)
        J += 0.5 * h * (s.Vi + new.Vi)
        JV += 0.5 * h * (s.V + new.V)
        s = new
        k += 1
        max_clip = max(max_clip, integ.last_clip)
        step_t.append(s.t)
        max_vi.append(float(s.Vi.max()))
        max_v.append(float(s.V.max()))
        if stop is not None and stop(s):
            stopped = True
            break
        if k % cfg.stride == 0:
            times.append(s.t)
            states.append(s)
            J_snaps.append(J.copy())
    if times[-1] != s.t:
        times.append(s.t)
        states.append(s)
        J_snaps.append(J.copy())
    return Trajectory(grid=grid, times=np.array(times), states=states, J_snapshots=J_snaps,
                      final=s, J=J, JV=JV, step_times=np.array(step_t), max_Vi=np.array(max_vi),
                      max_V=np.array(max_v),
                      max_clip=max_clip, stopped_early=stopped)


# Closed-form solutions of the space-homogeneous special cases.

def exact_logistic(u0: float, t: float) -> float:
    """Solution of u' = u - u**2 with u(0) = u0 > 0."""
    if u0 <= 0:
        raise ValueError("u0 must be positive")
    return 1.0 / (1.0 + (1.0 / u0 - 1.0) * math.exp(-t))


def exact_V_gamma0(V0: float, m_hat: float, s_V: float, t: float) -> float:
    """Solution of V' = -m_hat V - s_V V**2 (predators frozen at equilibrium)."""
    _check_mhat(V0, m_hat, s_V)
    if V0 == 0:
        return 0.0
    e = math.exp(-m_hat * t)
    return m_hat * V0 * e / (m_hat + s_V * V0 * (1.0 - e))


def exact_int_V(V0: float, m_hat: float, s_V: float) -> float:
    """Integral over (0, inf) of :func:`exact_V_gamma0`."""
    _check_mhat(V0, m_hat, s_V)
    return math.log1p(s_V * V0 / m_hat) / s_V


def _check_mhat(V0, m_hat, s_V):
    if m_hat <= 0:
        raise ValueError("m_hat must be positive (otherwise the time integral diverges)")
    if V0 < 0 or s_V <= 0:
        raise ValueError("need V0 >= 0 and s_V > 0")
