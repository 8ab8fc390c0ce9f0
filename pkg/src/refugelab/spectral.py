"""Principal eigenpair of -sigma_V Laplacian + potential, and empirical decay rates."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Grid, ModelParams, SpatialCoeffs
from .discretize import helmholtz_apply, solve_helmholtz_neumann


class ConvergenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class EigenPair:
    lambda1: float
    phi: np.ndarray
    iterations: int
    residual: float


def vector_potential(c: SpatialCoeffs, p: ModelParams) -> np.ndarray:
    """Zeroth-order coefficient -r_V + h r_P / s_P of the vector operator."""
    return -c.r_V + p.h * c.r_P / p.s_P


def principal_eigenpair(potential, grid: Grid, sigma: float, tol: float = 1e-13,
                        max_iter: int = 50_000) -> EigenPair:
    """Smallest eigenvalue of the Neumann operator by shifted inverse iteration.

    The shift ``min(potential) - 1`` makes the shifted operator positive
    definite, so each iteration is a single Thomas solve. The eigenfunction is
    normalised to ``min(phi) = 1``.
    """
    potential = grid.check(potential, "potential")
    shift = potential.min() - 1.0
    shifted = potential - shift
    # rounding floor of the residual of a unit vector
    floor = 1e-14 * (4.0 * sigma / grid.dx ** 2 + np.abs(potential).max())
    x = np.ones(grid.n_cells)
    lam = np.inf
    res = np.inf
    for it in range(1, max_iter + 1):
        y = solve_helmholtz_neumann(shifted, x, grid, sigma)
        y /= np.linalg.norm(y)
        Ay = helmholtz_apply(potential, y, grid, sigma)
        lam = float(y @ Ay)
        res = float(np.linalg.norm(Ay - lam * y, np.inf))
        x = y
        if res <= max(tol * max(1.0, abs(lam)), floor):
            break
    else:
        raise ConvergenceError(f"inverse iteration did not converge in {max_iter} iterations "
                               f"(residual {res:.3g})")
    if x[0] < 0:
        x = -x
    if x.min() <= 0:
        raise ConvergenceError("principal eigenfunction is not positive")
    phi = x / x.min()
    res = float(np.linalg.norm(helmholtz_apply(potential, phi, grid, sigma) - lam * phi, np.inf))
    return EigenPair(lambda1=lam, phi=phi, iterations=it, residual=res)


def lambda1(c: SpatialCoeffs, p: ModelParams) -> float:
    return principal_eigenpair(vector_potential(c, p), c.grid, p.sigma_V).lambda1


def decay_rate_estimate(traj, window, which: str = "Vi") -> float:
    """Least-squares slope of -log(max_x V_i) over ``window = (t_a, t_b)``.

    ``which="V"`` fits the total vector population instead.
    """
    t_a, t_b = window
    t = traj.step_times
    sel = (t >= t_a) & (t <= t_b)
    if sel.sum() < 2:
        raise ValueError("decay window holds fewer than two samples")
    y = (traj.max_Vi if which == "Vi" else traj.max_V)[sel]
    if np.any(y <= 0):
        raise ValueError("infected vectors vanish inside the decay window")
    slope = np.polyfit(t[sel], -np.log(y), 1)[0]
    if slope < -1e-12:
        raise ValueError(f"infected vectors grow inside the window (rate {slope:.3g})")
    return float(max(slope, 0.0))
