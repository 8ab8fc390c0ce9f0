"""Parameters, the cell-centred grid and refuge-to-coefficient mapping.

Fields are plain 1-D numpy arrays sampled at the cell centres of a
:class:`Grid`; every coefficient is affine in the refuge ``R``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass, fields, replace

import numpy as np


class TrivialRegimeError(ValueError):
    """Raised by refuge optimisation when m <= 0 (R = 0 is then optimal)."""


class TrivialRegimeWarning(UserWarning):
    pass


@dataclass(frozen=True)
class ModelParams:
    """Scalar rates of the host / vector / predator system.

    The ``*_r`` and ``*_f`` pairs are the values of a coefficient inside a
    refuge (R = 1) and in the open field (R = 0). ``host_loss`` is the
    fraction of hosts displaced by a full refuge, so that
    ``H = H0 * (1 - host_loss * R)``; the default 1 removes all of them.
    """

    beta_VH: float
    beta_HV: float
    sigma_V: float
    sigma_P: float
    alpha: float
    s_V: float
    s_P: float
    h: float
    gamma: float
    H0: float
    rP_r: float
    rP_f: float
    bV_r: float
    bV_f: float
    dV_r: float
    dV_f: float
    host_loss: float = 1.0
    allow_trivial: bool = False

    def __post_init__(self):
        for f in fields(self):
            if f.name == "allow_trivial":
                continue
            v = getattr(self, f.name)
            if not math.isfinite(v):
                raise ValueError(f"{f.name} must be finite, got {v!r}")
        for name in ("gamma", "alpha"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        strict = ("beta_VH", "beta_HV", "sigma_V", "sigma_P", "s_V", "s_P",
                  "h", "H0", "rP_r", "rP_f", "bV_r", "bV_f", "dV_r", "dV_f")
        for name in strict:
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be > 0, got {getattr(self, name)!r}")
        if not 0 < self.host_loss <= 1:
            raise ValueError("host_loss must lie in (0, 1]")
        if self.m <= 0 and not self.allow_trivial:
            raise TrivialRegimeError(
                f"m = {self.m:.6g} <= 0; pass allow_trivial=True to keep this parameter set")

    @property
    def m(self) -> float:
        """Increase of the infected-vector removal rate per unit refuge."""
        return self.h / self.s_P * (self.rP_r - self.rP_f) + self.dV_r - self.dV_f

    @property
    def xi(self) -> float:
        """Infected-vector removal rate in the open field."""
        return self.alpha + self.dV_f + self.h / self.s_P * self.rP_f

    @property
    def rV_r(self) -> float:
        return self.bV_r - self.dV_r

    @property
    def rV_f(self) -> float:
        return self.bV_f - self.dV_f

    def replace(self, **changes) -> "ModelParams":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class Grid:
    """Uniform cell-centred grid on [-L, L]."""

    L: float = 1.0
    n_cells: int = 200

    def __post_init__(self):
        if self.n_cells < 4:
            raise ValueError("n_cells must be >= 4")
        if not (self.L > 0 and math.isfinite(self.L)):
            raise ValueError("L must be positive and finite")

    @property
    def dx(self) -> float:
        return 2.0 * self.L / self.n_cells

    @property
    def x(self) -> np.ndarray:
        # symmetric construction keeps x[j] == -x[n-1-j] exactly
        j = np.arange(self.n_cells)
        return self.dx * (j - (self.n_cells - 1) / 2.0)

    @property
    def length(self) -> float:
        return 2.0 * self.L

    def full(self, value: float) -> np.ndarray:
        return np.full(self.n_cells, float(value))

    def check(self, f, name: str = "field") -> np.ndarray:
        f = np.asarray(f, dtype=float)
        if f.shape != (self.n_cells,):
            raise ValueError(f"{name} has shape {f.shape}, expected ({self.n_cells},)")
        if not np.all(np.isfinite(f)):
            raise ValueError(f"{name} contains non-finite values")
        return f


def integrate(f, grid: Grid) -> float:
    """Midpoint rule for the integral of ``f`` over the domain."""
    return grid.dx * float(np.sum(grid.check(f)))


def mean(f, grid: Grid) -> float:
    return integrate(f, grid) / grid.length


def check_refuge(R, grid: Grid) -> np.ndarray:
    R = grid.check(R, "refuge")
    if R.min() < 0 or R.max() > 1:
        raise ValueError(f"refuge values must lie in [0, 1], got [{R.min()}, {R.max()}]")
    return R


@dataclass(frozen=True)
class SpatialCoeffs:
    grid: Grid
    R: np.ndarray
    H: np.ndarray
    b_V: np.ndarray
    d_V: np.ndarray
    r_V: np.ndarray
    r_P: np.ndarray
    m: float
    xi: float

    @property
    def trivial(self) -> bool:
        return self.m <= 0


def derive_coeffs(params: ModelParams, R, grid: Grid) -> SpatialCoeffs:
    """Evaluate every refuge-dependent coefficient field for refuge ``R``."""
    R = check_refuge(R, grid)
    p = params
    H = p.H0 * (1.0 - p.host_loss * R)
    b_V = (p.bV_r - p.bV_f) * R + p.bV_f
    d_V = (p.dV_r - p.dV_f) * R + p.dV_f
    r_P = (p.rP_r - p.rP_f) * R + p.rP_f
    r_V = b_V - d_V
    if p.m <= 0:
        warnings.warn(f"m = {p.m:.6g} <= 0: trivial regime, refuge optimisation disabled",
                      TrivialRegimeWarning, stacklevel=2)
    return SpatialCoeffs(grid=grid, R=R, H=H, b_V=b_V, d_V=d_V, r_V=r_V, r_P=r_P,
                         m=p.m, xi=p.xi)


def require_nontrivial(params: ModelParams) -> None:
    if params.m <= 0:
        raise TrivialRegimeError(f"m = {params.m:.6g} <= 0: R = 0 is optimal, nothing to optimise")


@dataclass(frozen=True)
class HomogenizedCoeffs:
    """Space-constant coefficients of the high-frequency refuge limit."""

    grid: Grid
    H_inf: float
    bV_inf: float
    dV_inf: float
    rV_inf: float
    rP_inf: float
    rP_inf_2: float
    r_star: float
    R_mean: float
    R2_mean: float

    @property
    def predator_diffusivity_factor(self) -> float:
        return self.r_star / self.rP_inf

    @property
    def predator_growth(self) -> float:
        return self.rP_inf_2 / self.rP_inf

    def predator_saturation(self, s_P: float) -> float:
        return s_P * self.rP_inf_2 / self.rP_inf ** 2
