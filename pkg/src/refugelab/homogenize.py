"""High-frequency refuges and their homogenized limit."""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field
from functools import partial

import numpy as np

from .core import Grid, HomogenizedCoeffs, ModelParams, check_refuge, derive_coeffs, mean
from .dynamics import State, StepperConfig
from .harvest import EPS_TAIL, T_MAX, HarvestReport, compute_harvest
from .parallel import pmap

__all__ = ["HomogenizedCoeffs", "refuge_freq", "averaged_coeffs", "conductivity_star_1d",
           "SweepReport", "homogenization_sweep"]


def refuge_freq(R, n: int, grid: Grid) -> np.ndarray:
    """Cell averages of ``R(n x)``, with ``R`` extended 2L-periodically.

    ``R`` is read as piecewise constant on the grid. Each target cell maps onto
    a window of ``n`` source cells whose ends fall on whole or half cells, so
    the averages are exact and the mean of ``R`` is kept for every ``n``.
    Windows over a constant stretch return that value unchanged.
    """
    R = check_refuge(R, grid)
    if n < 1 or int(n) != n:
        raise ValueError("frequency must be a positive integer")
    n = int(n)
    N = grid.n_cells
    if N % n:
        warnings.warn(f"frequency {n} does not divide {N} cells: R_n is aliased", stacklevel=2)
    halves = np.repeat(R, 2)
    # face j of the target grid maps to n (x_j - dx/2 + L) - (n - 1) L, in half-cells
    start = 2 * n * np.arange(N) - (n - 1) * N
    window = halves[(start[:, None] + np.arange(2 * n)) % (2 * N)]
    lo, hi = window.min(axis=1), window.max(axis=1)
    return np.where(lo == hi, lo, window.mean(axis=1))


def conductivity_star_1d(R, p: ModelParams, grid: Grid) -> float:
    """Harmonic mean of r_P over one period of the refuge."""
    R = check_refuge(R, grid)
    r = (p.rP_r - p.rP_f) * R + p.rP_f
    return 1.0 / mean(1.0 / r, grid)


def averaged_coeffs(R, p: ModelParams, grid: Grid) -> HomogenizedCoeffs:
    R = check_refuge(R, grid)
    Rm = mean(R, grid)
    R2 = mean(R * R, grid)
    dr = p.rP_r - p.rP_f
    bV = (p.bV_r - p.bV_f) * Rm + p.bV_f
    dV = (p.dV_r - p.dV_f) * Rm + p.dV_f
    return HomogenizedCoeffs(
        grid=grid,
        H_inf=p.H0 * (1.0 - p.host_loss * Rm),
        bV_inf=bV,
        dV_inf=dV,
        rV_inf=bV - dV,
        rP_inf=dr * Rm + p.rP_f,
        rP_inf_2=dr * dr * R2 + 2.0 * dr * p.rP_f * Rm + p.rP_f ** 2,
        r_star=conductivity_star_1d(R, p, grid),
        R_mean=Rm,
        R2_mean=R2,
    )


@dataclass
class SweepReport:
    freqs: list
    eta_n: np.ndarray
    eta_inf: float
    reports: list = field(repr=False, default_factory=list)
    report_inf: HarvestReport | None = field(repr=False, default=None)

    @property
    def abs_gap(self) -> np.ndarray:
        return np.abs(self.eta_n - self.eta_inf)

    def rows(self):
        for n, e, g in zip(self.freqs, self.eta_n, self.abs_gap):
            yield [str(n), format(float(e), ".17g"), format(float(self.eta_inf), ".17g"),
                   format(float(g), ".17g")]

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["n", "eta_n", "eta_inf", "abs_gap"])
            w.writerows(self.rows())


def _one_frequency(n, R, grid, p, initial, cfg, eps_tail, T_max):
    c = derive_coeffs(p, refuge_freq(R, n, grid), grid)
    return compute_harvest(initial, c, p, cfg, eps_tail=eps_tail, T_max=T_max)


def homogenization_sweep(R, grid: Grid, initial: State, p: ModelParams, cfg: StepperConfig,
                         freqs, eps_tail: float = EPS_TAIL, T_max: float = T_MAX,
                         workers: int | None = None) -> SweepReport:
    """Harvest of R_n for each frequency against the homogenized harvest.

    The same initial data are used for every frequency.
    """
    if initial.P is None:
        raise ValueError("the sweep runs the full system and needs a predator field")
    freqs = [int(n) for n in freqs]
    job = partial(_one_frequency, R=R, grid=grid, p=p, initial=initial, cfg=cfg,
                  eps_tail=eps_tail, T_max=T_max)
    reports = pmap(job, freqs, workers)
    hc = averaged_coeffs(R, p, grid)
    rep_inf = compute_harvest(initial, hc, p, cfg, eps_tail=eps_tail, T_max=T_max)
    return SweepReport(freqs=freqs, eta_n=np.array([r.eta for r in reports]), eta_inf=rep_inf.eta,
                       reports=reports, report_inf=rep_inf)
