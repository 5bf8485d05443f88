"""
Configuration models for ee-models.

This module defines Pydantic models for every typed input the toolkit accepts:
- Model specifications for the three engines (hhh4, twinstim, twinSIR)
- Neighbourhood-weight and interaction-kernel settings
- Simulation settings
- Logging configuration
- The run manifest written next to every CLI output

The models provide:
- Type validation
- Default values (e.g. normalize=True, nCircle2Poly=16)
- Rejection of unknown keys, so a misspelt key fails loudly
- Cross-field checks (at least one component, step knots increasing, t0 < T)
"""
import math
from typing import Annotated, Dict, List, Literal, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, model_validator


class SpecModel(BaseModel):
    """Base for all spec models: unknown keys are rejected."""

    model_config = ConfigDict(extra="forbid")


class SeasonSpec(SpecModel):
    """Harmonic seasonality: S sine/cosine pairs with the given period."""

    S: Annotated[int, Field(ge=1, description="Number of harmonic waves")] = 1
    period: Annotated[float, Field(gt=0, description="Period length in time units")] = 52.0


class WeightsSpec(SpecModel):
    """Neighbourhood weights w_ji as a function of neighbourhood order o_ji.

    ``normalize`` defaults to True for the parametric kinds and False for
    ``firstOrder``.
    """

    kind: Literal["firstOrder", "powerLaw", "orderWeights"]
    maxlag: Annotated[int, Field(ge=1, description="Highest order with nonzero weight")] = 5
    normalize: Optional[bool] = None
    d: Annotated[float, Field(gt=0, description="Start value of the power-law decay")] = 1.0

    @model_validator(mode="after")
    def _fill_normalize(self) -> "WeightsSpec":
        if self.normalize is None:
            self.normalize = self.kind != "firstOrder"
        return self

    @property
    def n_params(self) -> int:
        if self.kind == "powerLaw":
            return 1
        if self.kind == "orderWeights":
            return self.maxlag - 1
        return 0


class ComponentSpec(SpecModel):
    """One hhh4 component (endemic, ar or ne)."""

    intercept: bool = True
    formulaTerms: List[str] = Field(default_factory=list)  # covariate names or log(name)
    offset: Optional[str] = None  # "pop" or a covariate grid name; None means 1
    season: Optional[SeasonSpec] = None
    weights: Optional[WeightsSpec] = None  # ne only


class HHH4Spec(SpecModel):
    """Specification of the multivariate count time-series model.

    ``subset`` holds 1-based inclusive time indices of the fitted period;
    the default is 2..T.
    """

    model: Literal["hhh4"] = "hhh4"
    family: Literal["Poisson", "NegBin1", "NegBinM"]
    endemic: Optional[ComponentSpec] = None
    ar: Optional[ComponentSpec] = None
    ne: Optional[ComponentSpec] = None
    subset: Optional[Tuple[int, int]] = None

    @model_validator(mode="after")
    def _check_components(self) -> "HHH4Spec":
        if self.endemic is None and self.ar is None and self.ne is None:
            raise ValueError("at least one of endemic, ar, ne must be given")
        for name in ("endemic", "ar"):
            comp = getattr(self, name)
            if comp is not None and comp.weights is not None:
                raise ValueError(f"weights are only valid for the ne component, not {name}")
        if self.ne is not None and self.ne.weights is None:
            self.ne.weights = WeightsSpec(kind="firstOrder")
        if self.subset is not None and (self.subset[0] < 2 or self.subset[1] < self.subset[0]):
            raise ValueError(f"invalid subset {self.subset}: need 2 <= from <= to")
        return self

    def components(self) -> Dict[str, ComponentSpec]:
        """Active components in coefficient order (ar, ne, end)."""
        active = {"ar": self.ar, "ne": self.ne, "end": self.endemic}
        return {k: v for k, v in active.items() if v is not None}


class KernelSpec(SpecModel):
    """Spatial (siaf) or temporal (tiaf) interaction function.

    Values given here are start values on the natural scale; the optimizer
    works on their logarithms. Step kernels have one free height per knot:
    the first interval's height is fixed to 1.
    """

    kind: Literal["constant", "gaussian", "powerlaw", "step", "exponential"]
    sigma: Optional[float] = Field(default=None, gt=0)
    d: Optional[float] = Field(default=None, gt=0)
    alpha: Optional[float] = Field(default=None, gt=0)
    knots: Optional[List[float]] = None
    maxRange: float = math.inf
    heights: Optional[List[float]] = None

    @model_validator(mode="after")
    def _check_step(self) -> "KernelSpec":
        if self.kind == "step":
            if not self.knots:
                raise ValueError("step kernel requires knots")
            if any(k <= 0 for k in self.knots):
                raise ValueError("step knots must be positive")
            if any(b <= a for a, b in zip(self.knots, self.knots[1:])):
                raise ValueError("step knots must be strictly increasing")
            if self.maxRange <= self.knots[-1]:
                raise ValueError("maxRange must exceed the last knot")
            if self.heights is not None:
                if len(self.heights) != len(self.knots):
                    raise ValueError(
                        f"step kernel with {len(self.knots)} knots needs "
                        f"{len(self.knots)} free heights, got {len(self.heights)}"
                    )
                if any(h <= 0 for h in self.heights):
                    raise ValueError("step heights must be positive")
        elif self.knots is not None or self.heights is not None:
            raise ValueError(f"knots/heights are only valid for step kernels, not {self.kind}")
        return self


class TrendSpec(SpecModel):
    """Linear time trend (start/scale - center) on the endemic log-rate."""

    scale: Annotated[float, Field(gt=0)] = 365.0
    center: float = 0.0


class EndemicSpec(SpecModel):
    """Endemic predictor of twinstim: stgrid covariates plus offset."""

    intercept: bool = True
    formulaTerms: List[str] = Field(default_factory=list)
    offset: Optional[str] = None  # stgrid column, entered on the log scale
    trend: Optional[TrendSpec] = None
    season: Optional[SeasonSpec] = None


class EpidemicSpec(SpecModel):
    """Epidemic predictor of twinstim: event marks and grid covariates."""

    intercept: bool = True
    formulaTerms: List[str] = Field(default_factory=list)


class TwinstimSpec(SpecModel):
    """Specification of the continuous-space endemic-epidemic point process."""

    model: Literal["twinstim"] = "twinstim"
    endemic: EndemicSpec = Field(default_factory=EndemicSpec)
    epidemic: Optional[EpidemicSpec] = None
    siaf: KernelSpec = Field(default_factory=lambda: KernelSpec(kind="constant"))
    tiaf: KernelSpec = Field(default_factory=lambda: KernelSpec(kind="constant"))
    nCircle2Poly: Annotated[int, Field(ge=8)] = 16
    cubatureTol: Annotated[float, Field(gt=0)] = 1e-5  # during optimization
    finalTol: Annotated[float, Field(gt=0)] = 1e-7  # final logLik and covariance
    start: Dict[str, float] = Field(default_factory=dict)

    @model_validator(mode="after")
    def _check_kernels(self) -> "TwinstimSpec":
        if self.siaf.kind == "exponential":
            raise ValueError("exponential is a temporal kernel; siaf must be "
                             "constant, gaussian, powerlaw or step")
        if self.tiaf.kind in ("gaussian", "powerlaw"):
            raise ValueError(f"{self.tiaf.kind} is a spatial kernel; tiaf must be "
                             "constant, exponential or step")
        return self


class DistanceBasisSpec(SpecModel):
    """Indicator basis B(u) = 1(u in interval) on pairwise distances."""

    lower: Annotated[float, Field(ge=0)] = 0.0
    upper: float = math.inf
    lowerClosed: bool = True
    upperClosed: bool = False


class PairIndicatorSpec(SpecModel):
    """Pair covariate w_ij = 1 when both individuals share ``value`` in ``column``."""

    column: str
    value: Union[str, int, float]


class TwinSIRSpec(SpecModel):
    """Specification of the additive-intensity SIR model."""

    model: Literal["twinsir"] = "twinsir"
    epidemic: List[str] = Field(default_factory=list)
    endemic: List[str] = Field(default_factory=list)
    intercept: bool = True
    basis: Dict[str, DistanceBasisSpec] = Field(default_factory=dict)
    pairs: Dict[str, PairIndicatorSpec] = Field(default_factory=dict)
    t0: Annotated[float, Field(ge=0)] = 0.0
    start: Dict[str, float] = Field(default_factory=dict)

    @model_validator(mode="after")
    def _check_terms(self) -> "TwinSIRSpec":
        if not self.epidemic and not self.endemic and not self.intercept:
            raise ValueError("twinSIR model needs at least one term")
        return self


class SimConfig(SpecModel):
    """Simulation settings shared by the three engines."""

    nsim: Annotated[int, Field(ge=1)] = 1
    seed: int  # Required: all randomness flows from here
    timeWindow: Optional[Tuple[float, float]] = None
    yStart: Optional[List[int]] = None  # hhh4 counts at the time before the window
    subset: Optional[Tuple[int, int]] = None  # hhh4 time indices (1-based, inclusive)
    markGenerator: Literal["empirical"] = "empirical"
    threads: Annotated[int, Field(ge=1)] = 1
    debug: bool = False  # assert the thinning bound on every proposal

    @model_validator(mode="after")
    def _check_window(self) -> "SimConfig":
        if self.timeWindow is not None and not self.timeWindow[0] < self.timeWindow[1]:
            raise ValueError(f"timeWindow {self.timeWindow} must satisfy t0 < T")
        return self


class LoggingConfig(BaseModel):
    """Model for logging configuration.

    Defines logging parameters with sensible defaults.
    Supports both file and console logging with
    customizable format and log levels.
    """

    level: str = "INFO"  # Optional: Log level (default: INFO)
    format: str = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"  # Optional: Log format
    file: Optional[str] = None  # Optional: Log file path (default: None for console only)


class RunManifest(BaseModel):
    """Provenance record written next to the outputs of every CLI run."""

    command: str
    inputs: Dict[str, str] = Field(default_factory=dict)
    spec: Optional[str] = None
    seed: Optional[int] = None
    outDir: str
    version: str
    threads: int = 1
    startedAt: str
    wallClockSeconds: float = 0.0
    converged: Optional[bool] = None
    iterations: Optional[int] = None


ModelSpec = Union[HHH4Spec, TwinstimSpec, TwinSIRSpec]
