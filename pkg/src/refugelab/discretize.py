"""Finite-difference Neumann operators and the tridiagonal solver.

Tridiagonal systems are stored as three bands of length ``n``: ``lower[0]``
and ``upper[n-1]`` are ignored.
"""

from __future__ import annotations

import numpy as np
from numba import njit

from .core import Grid


class SolverError(RuntimeError):
    pass


@njit(cache=True)
def _thomas(lower, diag, upper, rhs):
    n = diag.shape[0]
    cp = np.empty(n)
    dp = np.empty(n)
    x = np.empty(n)
    b = diag[0]
    if b == 0.0:
        return x, False
    cp[0] = upper[0] / b
    dp[0] = rhs[0] / b
    for i in range(1, n):
        b = diag[i] - lower[i] * cp[i - 1]
        if b == 0.0:
            return x, False
        cp[i] = upper[i] / b
        dp[i] = (rhs[i] - lower[i] * dp[i - 1]) / b
    x[n - 1] = dp[n - 1]
    for i in range(n - 2, -1, -1):
        x[i] = dp[i] - cp[i] * x[i + 1]
    return x, True


def thomas(lower, diag, upper, rhs) -> np.ndarray:
    """Solve a tridiagonal system without pivoting."""
    x, ok = _thomas(np.ascontiguousarray(lower, dtype=float),
                    np.ascontiguousarray(diag, dtype=float),
                    np.ascontiguousarray(upper, dtype=float),
                    np.ascontiguousarray(rhs, dtype=float))
    if not ok or not np.all(np.isfinite(x)):
        raise SolverError("tridiagonal elimination broke down (zero pivot)")
    return x


def tridiag_matvec(lower, diag, upper, f) -> np.ndarray:
    out = diag * f
    out[1:] += lower[1:] * f[:-1]
    out[:-1] += upper[:-1] * f[1:]
    return out


def laplacian_bands(grid: Grid, sigma: float = 1.0):
    """Bands of sigma * Laplacian with mirror ghost cells."""
    n = grid.n_cells
    c = sigma / grid.dx ** 2
    lower = np.full(n, c)
    upper = np.full(n, c)
    diag = np.full(n, -2.0 * c)
    diag[0] = diag[-1] = -c
    lower[0] = 0.0
    upper[-1] = 0.0
    return lower, diag, upper


def flux_bands(r, grid: Grid, sigma: float = 1.0):
    """Bands of q -> sigma * d/dx (r dq/dx) with arithmetic-mean faces, zero boundary flux."""
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise ValueError("conductivity r must be strictly positive")
    c = sigma / grid.dx ** 2
    faces = 0.5 * (r[:-1] + r[1:])      # interior faces j+1/2, j = 0..n-2
    n = grid.n_cells
    lower = np.zeros(n)
    upper = np.zeros(n)
    lower[1:] = c * faces
    upper[:-1] = c * faces
    diag = -(lower + upper)
    return lower, diag, upper


def laplacian_neumann(f, grid: Grid, sigma: float = 1.0) -> np.ndarray:
    f = grid.check(f)
    out = np.empty_like(f)
    out[1:-1] = f[:-2] - 2.0 * f[1:-1] + f[2:]
    out[0] = f[1] - f[0]
    out[-1] = f[-2] - f[-1]
    return sigma / grid.dx ** 2 * out


def divergence_form_apply(r, q, grid: Grid, sigma: float = 1.0) -> np.ndarray:
    r = grid.check(r, "r")
    q = grid.check(q, "q")
    if np.any(r <= 0):
        raise ValueError("conductivity r must be strictly positive")
    flux = 0.5 * (r[:-1] + r[1:]) * (q[1:] - q[:-1])
    out = np.zeros_like(q)
    out[:-1] += flux
    out[1:] -= flux
    return sigma / grid.dx ** 2 * out


def solve_helmholtz_neumann(potential, rhs, grid: Grid, sigma: float) -> np.ndarray:
    """Solve (-sigma * Laplacian + potential) u = rhs with Neumann closure."""
    potential = grid.check(potential, "potential")
    rhs = grid.check(rhs, "rhs")
    if potential.min() <= 0:
        raise ValueError(f"potential must be strictly positive (min = {potential.min():.3g})")
    lower, diag, upper = laplacian_bands(grid, sigma)
    return thomas(-lower, potential - diag, -upper, rhs)


def helmholtz_apply(potential, u, grid: Grid, sigma: float) -> np.ndarray:
    return potential * u - laplacian_neumann(u, grid, sigma)
