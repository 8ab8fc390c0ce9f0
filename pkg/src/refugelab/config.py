"""Run configuration: JSON schema, presets and construction of model objects."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Annotated, List, Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, PositiveFloat, ValidationError, model_validator

from .core import Grid, ModelParams
from .dynamics import StepperConfig


class ConfigError(ValueError):
    pass


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class ParamsSpec(_Strict):
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

    def build(self) -> ModelParams:
        # m <= 0 is accepted here; commands that need m > 0 refuse it later
        return ModelParams(**self.model_dump(), allow_trivial=True)


class GridSpec(_Strict):
    L: PositiveFloat = 1.0
    n_cells: int = Field(200, ge=4)


class StepperSpec(_Strict):
    dt: PositiveFloat = 1e-2
    scheme: Literal["crank-nicolson", "backward-euler"] = "crank-nicolson"
    stride: int = Field(100, ge=1)
    t_end: float = Field(10.0, ge=0)
    eps_tail: PositiveFloat = 1e-6
    T_max: PositiveFloat = 1e4

    def build(self) -> StepperConfig:
        return StepperConfig(dt=self.dt, scheme=self.scheme, stride=self.stride)


# Field and refuge descriptions

class ConstantField(_Strict):
    kind: Literal["constant"] = "constant"
    value: float


class GaussianField(_Strict):
    kind: Literal["gaussian"] = "gaussian"
    amplitude: float
    center: float = 0.0
    width: PositiveFloat = 0.3
    offset: float = 0.0


class SamplesField(_Strict):
    kind: Literal["samples"] = "samples"
    path: str


class PiecewiseField(_Strict):
    """Value ``values[i]`` on ``[breaks[i-1], breaks[i])`` with the outer breaks at -L and L."""

    kind: Literal["piecewise"] = "piecewise"
    breaks: List[float]
    values: List[float]

    @model_validator(mode="after")
    def _lengths(self):
        if len(self.values) != len(self.breaks) + 1:
            raise ValueError("piecewise needs len(values) == len(breaks) + 1")
        if any(b >= a for a, b in zip(self.breaks[1:], self.breaks[:-1])):
            raise ValueError("breaks must be increasing")
        return self


class FrequencyRefuge(_Strict):
    kind: Literal["frequency"] = "frequency"
    n: int = Field(ge=1)
    base: "RefugeSpec"


FieldSpec = Annotated[Union[ConstantField, GaussianField, SamplesField, PiecewiseField],
                      Field(discriminator="kind")]
RefugeSpec = Annotated[Union[ConstantField, PiecewiseField, SamplesField, FrequencyRefuge],
                       Field(discriminator="kind")]
FrequencyRefuge.model_rebuild()


def read_samples(path, n: int, base: Path | None = None) -> np.ndarray:
    """Last column of a CSV file (header allowed), or a plain column of numbers."""
    p = Path(path)
    if base is not None and not p.is_absolute():
        p = base / p
    rows = []
    for line in p.read_text().splitlines():
        line = line.strip()
        if not line:
            continue
        last = line.split(",")[-1].strip()
        try:
            rows.append(float(last))
        except ValueError:
            if rows:
                raise ConfigError(f"{p}: non-numeric value {last!r}")
    a = np.array(rows)
    if a.shape != (n,):
        raise ConfigError(f"{p}: expected {n} samples, found {a.size}")
    return a


def build_field(spec, grid: Grid, base: Path | None = None) -> np.ndarray:
    x = grid.x
    if isinstance(spec, ConstantField):
        return grid.full(spec.value)
    if isinstance(spec, GaussianField):
        return spec.offset + spec.amplitude * np.exp(-((x - spec.center) / spec.width) ** 2)
    if isinstance(spec, SamplesField):
        return read_samples(spec.path, grid.n_cells, base)
    if isinstance(spec, PiecewiseField):
        idx = np.searchsorted(np.asarray(spec.breaks), x, side="right")
        return np.asarray(spec.values, dtype=float)[idx]
    if isinstance(spec, FrequencyRefuge):
        from .homogenize import refuge_freq
        return refuge_freq(build_field(spec.base, grid, base), spec.n, grid)
    raise ConfigError(f"unsupported field spec {spec!r}")


class InitialSpec(_Strict):
    Vi0: FieldSpec
    Vs0: FieldSpec
    P0: Optional[FieldSpec] = None      # default: predator equilibrium r_P / s_P
    I0: Optional[FieldSpec] = None


class HarvestSpec(_Strict):
    R_values: List[float] = Field(default_factory=lambda: [i / 10 for i in range(10)])
    reduced: bool = False


class OptimizeSpec(_Strict):
    mass: Optional[float] = None
    starts: int = Field(1, ge=1)
    max_iter: int = Field(2000, ge=1)
    tol: PositiveFloat = 1e-10
    R0: Optional[RefugeSpec] = None


class SweepSpec(_Strict):
    freqs: List[int] = Field(default_factory=lambda: [1, 2, 4, 8, 16])


class VerifySpec(_Strict):
    trials: int = Field(200, ge=1)
    rel_tol: PositiveFloat = 1e-9
    fd_tol: PositiveFloat = 1e-5
    slow: bool = True


class RunConfig(_Strict):
    params: ParamsSpec
    grid: GridSpec = GridSpec()
    stepper: StepperSpec = StepperSpec()
    refuge: RefugeSpec = ConstantField(value=0.0)
    initial: InitialSpec
    harvest: HarvestSpec = HarvestSpec()
    optimize: OptimizeSpec = OptimizeSpec()
    sweep: SweepSpec = SweepSpec()
    verify: VerifySpec = VerifySpec()
    seed: int = Field(0, ge=0, lt=2 ** 64)
    workers: Optional[int] = Field(None, ge=1)

    def to_json(self) -> str:
        return self.model_dump_json(indent=2)


def parse_config(text: str, source: str = "<config>") -> RunConfig:
    """Parse JSON text, turning every failure into a :class:`ConfigError` with a location."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"{source}:{e.lineno}:{e.colno}: {e.msg}") from None
    try:
        return RunConfig.model_validate(data)
    except ValidationError as e:
        msgs = []
        for err in e.errors():
            loc = ".".join(str(p) for p in err["loc"])
            msgs.append(f"{source}: field '{loc}': {err['msg']}")
        raise ConfigError("\n".join(msgs)) from None


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as e:
        raise ConfigError(f"cannot read {path}: {e.strerror}") from None
    return parse_config(text, str(path))


class Built:
    """Module-level objects resolved from a :class:`RunConfig`."""

    def __init__(self, cfg: RunConfig, base: Path | None = None):
        self.cfg = cfg
        try:
            self.params = cfg.params.build()
            self.grid = Grid(cfg.grid.L, cfg.grid.n_cells)
            self.stepper = cfg.stepper.build()
            self.R = build_field(cfg.refuge, self.grid, base)
            if self.R.min() < 0 or self.R.max() > 1:
                raise ValueError("refuge values must lie in [0, 1]")
            self.Vi0 = build_field(cfg.initial.Vi0, self.grid, base)
            self.Vs0 = build_field(cfg.initial.Vs0, self.grid, base)
            self.P0 = (None if cfg.initial.P0 is None
                       else build_field(cfg.initial.P0, self.grid, base))
            self.I0 = (None if cfg.initial.I0 is None
                       else build_field(cfg.initial.I0, self.grid, base))
            for name in ("Vi0", "Vs0", "P0", "I0"):
                f = getattr(self, name)
                if f is not None and f.min() < 0:
                    raise ValueError(f"initial {name} must be nonnegative")
        except ConfigError:
            raise
        except (ValueError, OSError) as e:
            raise ConfigError(str(e)) from None

    def initial_state(self, R=None, reduced: bool = False):
        from .core import derive_coeffs
        from .dynamics import initial_state
        R = self.R if R is None else R
        c = derive_coeffs(self.params, R, self.grid)
        P0 = None
        if not reduced:
            P0 = c.r_P / self.params.s_P if self.P0 is None else self.P0
        return initial_state(self.grid, self.Vi0, self.Vs0, P0, self.I0), c


# Presets

DEFAULT_PARAMS = dict(
    beta_VH=4.48, beta_HV=2e-7, sigma_V=0.05, sigma_P=0.05, alpha=0.08, s_V=0.5, s_P=1.0,
    h=1.0, gamma=0.5, H0=529411.5, rP_r=1.368, rP_f=1.0, bV_r=1.0, bV_f=1.0, dV_r=0.6,
    dV_f=0.5,
)


def default_config() -> RunConfig:
    """Biologically consistent parameters: xi = 1.58, m = 0.468, beta_VH Vi0 = 0.0448."""
    return RunConfig(
        params=ParamsSpec(**DEFAULT_PARAMS),
        grid=GridSpec(L=1.0, n_cells=200),
        initial=InitialSpec(Vi0=ConstantField(value=0.01), Vs0=ConstantField(value=0.237)),
    )


def remark1_printed_config() -> RunConfig:
    """Default parameters with a refuge that displaces only a fifth of the hosts."""
    cfg = default_config()
    params = cfg.params.model_copy(update={"host_loss": 0.2})
    return cfg.model_copy(update={"params": params})


PRESETS = {"default": default_config, "remark1_printed": remark1_printed_config}
