"""Harvest of healthy hosts, its linearisation and the constant-refuge closed forms."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .core import (Grid, HomogenizedCoeffs, ModelParams, SpatialCoeffs, TrivialRegimeError,
                   check_refuge, integrate)
from .discretize import solve_helmholtz_neumann
from .dynamics import State, StepperConfig, Trajectory, simulate
from .spectral import decay_rate_estimate, principal_eigenpair, vector_potential

EPS_TAIL = 1e-6
T_MAX = 1e4

REPORT_KEYS = ("eta", "eta_truncated", "T_used", "lambda_eff", "converged")


@dataclass
class HarvestReport:
    eta: float
    eta_truncated: float
    T_used: float
    tail_estimate: np.ndarray
    J_total: np.ndarray
    lambda_eff: float
    converged: bool
    lambda1: float = math.nan
    JV_total: Optional[np.ndarray] = None
    trajectory: Optional[Trajectory] = field(default=None, repr=False)

    def values(self) -> dict:
        return {k: getattr(self, k) for k in REPORT_KEYS}

    def to_record(self) -> str:
        """Flat ``key=value`` text, one pair per line."""
        return "".join(f"{k}={_fmt(v)}\n" for k, v in self.values().items())

    def csv_row(self) -> list:
        return [_fmt(v) for v in self.values().values()]


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    return format(float(v), ".17g")


def _host_and_potential(c, p: ModelParams):
    if isinstance(c, HomogenizedCoeffs):
        n = c.grid.n_cells
        H = np.full(n, c.H_inf)
        # predators sit at their homogenized equilibrium rP_inf / s_P
        lam = -c.rV_inf + p.h * c.rP_inf / p.s_P
        return c.grid, H, lam
    lam = principal_eigenpair(vector_potential(c, p), c.grid, p.sigma_V).lambda1
    return c.grid, c.H, lam


def compute_harvest(initial: State, c: Union[SpatialCoeffs, HomogenizedCoeffs], p: ModelParams,
                    cfg: StepperConfig, eps_tail: float = EPS_TAIL, T_max: float = T_MAX,
                    keep_trajectory: bool = False) -> HarvestReport:
    """Simulate until infected vectors fall below ``eps_tail`` of their initial peak.

    The remaining time integral of V_i is closed with the exponential tail
    ``V_i(T) / lambda_eff``, where ``lambda_eff`` is the decay rate fitted on
    the last fifth of the run. A failed fit leaves the truncated integral and
    flags the report as not converged.
    """
    grid, H, lam1 = _host_and_potential(c, p)
    n = grid.n_cells
    peak = float(initial.Vi.max())
    if peak == 0.0:
        zero = np.zeros(n)
        eta = integrate(H, grid)
        return HarvestReport(eta=eta, eta_truncated=eta, T_used=0.0, tail_estimate=zero,
                             J_total=zero, lambda_eff=math.inf, converged=True, lambda1=lam1,
                             JV_total=None)
    threshold = eps_tail * peak
    traj = simulate(initial, c, p, cfg, T_max, stop=lambda s: s.Vi.max() < threshold)
    T = traj.final.t - initial.t

    converged = traj.stopped_early or lam1 > 0
    t_end = traj.step_times[-1]
    window = (t_end - 0.2 * T, t_end)
    lam_eff = math.nan
    lam_eff_V = math.nan
    try:
        lam_eff = decay_rate_estimate(traj, window)
        lam_eff_V = decay_rate_estimate(traj, window, which="V")
    except ValueError:
        converged = False
    if not lam_eff > 0:
        converged = False
    tail = traj.final.Vi / lam_eff if lam_eff > 0 else np.zeros(n)
    J_total = traj.J + tail
    JV_total = traj.JV + (traj.final.V / lam_eff_V if lam_eff_V > 0 else 0.0)

    b = p.beta_VH
    eta = integrate(H * np.exp(-b * J_total), grid)
    eta_tr = integrate(H * np.exp(-b * traj.J), grid)
    return HarvestReport(eta=eta, eta_truncated=eta_tr, T_used=T, tail_estimate=tail,
                         J_total=J_total, lambda_eff=lam_eff, converged=converged, lambda1=lam1,
                         JV_total=JV_total, trajectory=traj if keep_trajectory else None)


# Linearised harvest

def _require_m(p: ModelParams) -> None:
    if p.m <= 0:
        raise TrivialRegimeError(f"m = {p.m:.6g} <= 0: the linearised harvest is undefined")


def phi_R(R, grid: Grid, p: ModelParams) -> np.ndarray:
    """Solution of (-sigma_V Lap + xi + m R) phi = 1 with Neumann conditions."""
    R = check_refuge(R, grid)
    if p.xi <= 0:
        raise ValueError("xi must be positive")
    return solve_helmholtz_neumann(p.xi + p.m * R, np.ones(grid.n_cells), grid, p.sigma_V)


def eta_L(R, Vi0, grid: Grid, p: ModelParams) -> float:
    """Linearised harvest with midpoint quadrature.

    With ``k = host_loss``,
    ``H0 (|Omega| - k int R) + (k beta H0 / m) int V - beta H0 (1 + k xi / m) int phi V``,
    which reduces to the usual form for ``k = 1``. It is evaluated as
    ``H0 (int (1 - k R) - beta int y V)`` with
    ``(-sigma_V Lap + xi + m R) y = 1 - k R``, i.e. ``y = (1 + k xi / m) phi - k / m``.
    This form needs one solve and does not cancel as R -> 1 or m R << xi.
    """
    _require_m(p)
    R = check_refuge(R, grid)
    Vi0 = grid.check(Vi0, "Vi0")
    host = 1.0 - p.host_loss * R
    y = solve_helmholtz_neumann(p.xi + p.m * R, host, grid, p.sigma_V)
    return p.H0 * (integrate(host, grid) - p.beta_VH * integrate(y * Vi0, grid))


def eta_L_constant(R: float, Vi0: float, p: ModelParams, length: float) -> float:
    """Linearised harvest for constant refuge and constant initial infection."""
    _require_m(p)
    den = p.xi + p.m * R
    if den <= 0:
        raise ValueError("xi + m R must be positive")
    return p.H0 * length * (1.0 - p.host_loss * R) * (1.0 - p.beta_VH * Vi0 / den)


@dataclass(frozen=True)
class ClosedFormParams:
    """Coefficients of the constant-predator vector equation V' = -m_hat V - s_V V^2."""

    xi_tilde: float
    m_tilde: float

    @classmethod
    def from_params(cls, p: ModelParams) -> "ClosedFormParams":
        xi_t = p.h * p.rP_f / p.s_P - p.rV_f
        m_t = p.h * (p.rP_r - p.rP_f) / p.s_P - p.rV_r + p.rV_f
        if not (math.isfinite(xi_t) and math.isfinite(m_t)):
            raise ValueError("non-finite closed-form coefficients")
        return cls(xi_t, m_t)

    def m_hat(self, R: float) -> float:
        return self.xi_tilde + self.m_tilde * R


def eta_V_constant(R: float, V0: float, p: ModelParams, length: float) -> float:
    """Harvest estimate obtained by replacing V_i with V in the exponent."""
    cf = ClosedFormParams.from_params(p)
    mh = cf.m_hat(R)
    if mh <= 0:
        raise ValueError(f"m_hat = {mh:.6g} <= 0: the time integral of V diverges")
    return (p.H0 * length * (1.0 - p.host_loss * R)
            * (1.0 + p.s_V * V0 / mh) ** (-p.beta_VH / p.s_V))


def R_opt_V(V0: float, p: ModelParams) -> float:
    """Maximiser over [0, 1] of :func:`eta_V_constant`.

    With ``D = xi~ + m~ R`` the logarithmic derivative vanishes when
    ``k D (D + s_V V0) = beta V0 m~ (1 - k R)``, i.e. ``A R^2 + B R + C = 0`` with ``A = m~^2``,
    ``B = m~ (2 xi~ + s_V V0 + beta V0)`` and
    ``C = xi~^2 + s_V V0 xi~ - beta m~ V0 / k``.
    """
    cf = ClosedFormParams.from_params(p)
    xt, mt = cf.xi_tilde, cf.m_tilde
    if mt == 0:
        raise ValueError("m_tilde must be nonzero")
    b, s, k = p.beta_VH, p.s_V, p.host_loss
    A = mt * mt
    B = mt * (2.0 * xt + s * V0 + b * V0)
    C = xt * xt + s * V0 * xt - b * mt * V0 / k
    disc = B * B - 4.0 * A * C
    if disc < 0:
        raise ValueError(f"complex optimal refuge (discriminant {disc:.6g})")
    root = (-B + math.sqrt(disc)) / (2.0 * A)
    return min(max(root, 0.0), 1.0)


def R_opt_const(E_Vi0: float, p: ModelParams) -> float:
    """Best constant refuge for the linearised harvest (positive part, may exceed 1)."""
    _require_m(p)
    if E_Vi0 < 0:
        raise ValueError("E_Vi0 must be nonnegative")
    xi, m, k = p.xi, p.m, p.host_loss
    val = (math.sqrt(p.beta_VH * (xi + m / k) * E_Vi0) - xi) / m
    return max(val, 0.0)
