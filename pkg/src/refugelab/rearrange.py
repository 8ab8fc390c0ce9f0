"""Discrete Schwarz rearrangements and the inequalities built on them (1-D only)."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .core import Grid, ModelParams, check_refuge, integrate


def rearrange_order(n: int) -> np.ndarray:
    """Cell indices sorted by distance to the centre, ties toward negative x."""
    x = np.arange(n) - (n - 1) / 2.0
    # lexsort uses the last key as primary
    return np.lexsort((x, np.abs(x)))


def _prep(f, grid: Grid | None, name: str):
    """Validated values and cell width; without a grid the width is 1."""
    if grid is not None:
        return grid.check(f, name), grid.dx
    f = np.asarray(f, dtype=float)
    if f.ndim != 1 or not np.all(np.isfinite(f)):
        raise ValueError(f"{name} must be a finite 1-D array")
    return f, 1.0


def schwarz_decreasing(f) -> np.ndarray:
    """Largest values nearest the centre; same multiset as ``f``."""
    f = np.asarray(f, dtype=float)
    out = np.empty_like(f)
    out[rearrange_order(f.size)] = np.sort(f)[::-1]
    return out


def reflect(f) -> np.ndarray:
    """Transform x -> L - |x| on the grid: the k-th cell of the order swaps with the (n-1-k)-th."""
    f = np.asarray(f, dtype=float)
    order = rearrange_order(f.size)
    out = np.empty_like(f)
    out[order] = f[order[::-1]]
    return out


def schwarz_increasing(f) -> np.ndarray:
    """Smallest values nearest the centre."""
    return reflect(schwarz_decreasing(f))


def is_symmetric_decreasing(f, tol: float = 0.0) -> bool:
    f = np.asarray(f, dtype=float)
    scale = tol * max(1.0, np.abs(f).max())
    if np.abs(f - f[::-1]).max() > scale:
        return False
    vals = f[rearrange_order(f.size)]
    return bool(np.all(np.diff(vals) <= scale))


def hardy_littlewood_check(f, g, grid: Grid | None = None):
    """Return (int f g, int f_* g_*); the first never exceeds the second."""
    f, dx = _prep(f, grid, "f")
    g, _ = _prep(g, grid, "g")
    if f.shape != g.shape:
        raise ValueError("f and g differ in shape")
    lhs = dx * float(np.dot(f, g))
    rhs = dx * float(np.dot(schwarz_decreasing(f), schwarz_decreasing(g)))
    return lhs, rhs


def _dirichlet_energy(f, dx: float) -> float:
    # zero ghost cells on both sides
    padded = np.concatenate(([0.0], f, [0.0]))
    return float(np.sum(np.diff(padded) ** 2) / dx)


def polya_szego_deficit(f, grid: Grid | None = None) -> float:
    """``E(f) - E(f_*)`` for the forward-difference energy of a nonnegative field.

    The field is extended by zero outside the domain. With a Neumann
    (no-ghost) energy the discrete inequality fails, e.g. for (1, 2, 3, 4)
    a monotone ramp beats its centred arrangement.
    """
    f, dx = _prep(f, grid, "f")
    if f.min() < 0:
        raise ValueError("the discrete inequality is stated for nonnegative fields")
    return _dirichlet_energy(f, dx) - _dirichlet_energy(schwarz_decreasing(f), dx)


@dataclass
class CorollaryReport:
    phi_symmetric_increasing: bool
    R_symmetric_decreasing: bool
    value_increasing: float
    value_decreasing: float
    min_seen: float
    max_seen: float
    trials: int
    passed: bool

    def summary(self) -> str:
        return (f"phi sym-increasing={self.phi_symmetric_increasing} "
                f"R sym-decreasing={self.R_symmetric_decreasing} "
                f"[{self.value_decreasing:.6g}, {self.value_increasing:.6g}] "
                f"seen [{self.min_seen:.6g}, {self.max_seen:.6g}] over {self.trials}")


def corollary_check(R, V_pool, grid: Grid, p: ModelParams, trials: int = 1000,
                    rng=None, exhaustive: bool | None = None) -> CorollaryReport:
    """Pairing of phi_R with rearrangements of ``V_pool``.

    For a symmetric decreasing refuge, ``phi_R`` is symmetric increasing, so
    ``int phi_R V`` is largest for the increasing arrangement of ``V_pool``
    and smallest for the decreasing one. Permutations are exhaustive when
    ``n! <= 5040`` (or ``exhaustive=True``), random otherwise.
    """
    from .harvest import phi_R

    R = check_refuge(R, grid)
    V = grid.check(V_pool, "V_pool")
    rng = np.random.default_rng(rng)
    phi = phi_R(R, grid, p)
    R_ok = is_symmetric_decreasing(R, 1e-12)
    phi_ok = is_symmetric_decreasing(-phi, 1e-10)
    hi = integrate(phi * schwarz_increasing(V), grid)
    lo = integrate(phi * schwarz_decreasing(V), grid)
    n = grid.n_cells
    if exhaustive is None:
        exhaustive = math.factorial(n) <= 5040
    seen_min, seen_max = math.inf, -math.inf
    count = 0
    perms = itertools.permutations(range(n)) if exhaustive else (rng.permutation(n)
                                                                 for _ in range(trials))
    for perm in perms:
        val = integrate(phi * V[list(perm)], grid)
        seen_min = min(seen_min, val)
        seen_max = max(seen_max, val)
        count += 1
    tol = 1e-12 * max(abs(hi), abs(lo), 1e-300)
    passed = R_ok and phi_ok and seen_max <= hi + tol and seen_min >= lo - tol
    return CorollaryReport(phi_ok, R_ok, hi, lo, seen_min, seen_max, count, passed)
