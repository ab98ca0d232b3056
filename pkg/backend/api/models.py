"""
Pydantic models for the simulator API requests and responses.

Atom, drive, grid and evolution parameters reuse the run-configuration
sections, so the HTTP surface accepts exactly what a TOML run file accepts
(including the ``<key>_mhz`` forms).
"""

from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from config import AtomConfig, DriveConfig, EvolveSection, GridConfig

Mode = Literal["analytic", "numeric"]


class _Request(BaseModel):
    model_config = ConfigDict(extra="forbid")

    atom: AtomConfig = Field(default_factory=AtomConfig, description="Atomic parameters")
    drive: DriveConfig = Field(default_factory=DriveConfig, description="Drive parameters")


class SpectrumRequest(_Request):
    """Request model for a probe spectrum."""
    grid: GridConfig = Field(default_factory=GridConfig, description="delta_p axis is used")
    mode: Mode = Field(default="analytic", description="Weak-probe closed form or full steady state")

    model_config = ConfigDict(
        extra="forbid",
        json_schema_extra={
            "example": {
                "drive": {"omega_c_rabi_mhz": 44.0},
                "grid": {"delta_p_min_mhz": -50.0, "delta_p_max_mhz": 50.0, "delta_p_points": 201},
                "mode": "analytic",
            }
        },
    )


class MapRequest(_Request):
    """Request model for a T(Ω_c, δω_p) map."""
    grid: GridConfig = Field(default_factory=GridConfig, description="delta_p and omega_c axes are used")
    mode: Mode = "analytic"


class ExtinctionRequest(_Request):
    """Request model for the resonant extinction curve."""
    grid: GridConfig = Field(default_factory=GridConfig, description="omega_c axis is used")
    mode: Mode = "analytic"


class EvolveRequest(_Request):
    """Request model for time evolution from a basis state."""
    evolve: EvolveSection = Field(default_factory=EvolveSection)


class PointError(BaseModel):
    """A grid point that could not be evaluated."""
    index: int = Field(description="Flat index into the grid")
    error: str = Field(description="'<ErrorClass>: <message>'")


class SpectrumResponse(BaseModel):
    """Probe spectrum. Failed points hold null."""
    mode: str
    delta_p: list[float] = Field(description="Probe detunings (rad/s)")
    re_t: list[Optional[float]]
    im_t: list[Optional[float]]
    T: list[Optional[float]] = Field(description="Power transmission |t|²")
    dip_positions: Optional[list[float]] = Field(
        default=None, description="Refined positions of the two deepest dips (rad/s)",
    )
    errors: list[PointError] = Field(default_factory=list)
    version: str


class MapResponse(BaseModel):
    """Power transmission map with rows along omega_c."""
    mode: str
    delta_p: list[float]
    omega_c: list[float]
    T: list[list[Optional[float]]]
    errors: list[PointError] = Field(default_factory=list)
    version: str


class ExtinctionResponse(BaseModel):
    """Resonant transmission against control amplitude."""
    mode: str
    omega_c: list[float]
    T: list[Optional[float]]
    T_ideal: list[Optional[float]]
    contrast: float = Field(description="(T_max − T_min) / T_max of the model curve")
    contrast_ideal: float
    errors: list[PointError] = Field(default_factory=list)
    version: str


class EvolveResponse(BaseModel):
    """Sampled trajectory."""
    times: list[float] = Field(description="Sample times (s)")
    populations: list[list[float]] = Field(description="Rows of (ρ11, ρ22, ρ33)")
    abs_rho21: list[float]
    step: float
    stability_bound: Optional[float] = Field(description="Largest stable step (s); null when unbounded")


class FitRequest(BaseModel):
    """
    Request model for a line-shape fit.

    Give ``re_t`` and ``im_t`` for a complex trace or ``abs_t`` for a
    magnitude-only trace.
    """
    model_config = ConfigDict(extra="forbid")

    model: Literal["two_level", "eit"] = "two_level"
    detunings: list[float] = Field(description="Probe detunings (rad/s), strictly increasing")
    re_t: Optional[list[float]] = None
    im_t: Optional[list[float]] = None
    abs_t: Optional[list[float]] = None
    weights: Optional[list[float]] = None
    known: Optional[dict[str, float]] = Field(
        default=None, description="gamma_rel_21 and gamma_deph_21 for the EIT fit",
    )
    delta_c: float = 0.0

    @model_validator(mode="after")
    def _check_samples(self) -> "FitRequest":
        has_complex = self.re_t is not None and self.im_t is not None
        if not has_complex and self.abs_t is None:
            raise ValueError("give re_t and im_t, or abs_t")
        if self.model == "eit" and self.known is None:
            raise ValueError("the eit model needs known gamma_rel_21 and gamma_deph_21")
        return self


class FitResponse(BaseModel):
    """Fit report."""
    model: str
    estimates: dict[str, Optional[float]]
    uncertainties: dict[str, Optional[float]]
    fixed: dict[str, float]
    residual_norm: float
    gradient_norm: Optional[float]
    iterations: int
    converged: bool
    residual_kind: str
    uncertainty_method: str
    warnings: list[str] = Field(default_factory=list)


class AtomInfoResponse(BaseModel):
    """Derived quantities of an atom."""
    rates: dict[str, float] = Field(description="All relaxation and damping rates (1/s)")
    defaulted: list[str] = Field(description="Fields filled in by default")
    mutual_inductance_from_gamma_rel_21: Optional[float] = Field(description="M (H)")
    gamma_rel_21_from_mutual_inductance: Optional[float] = Field(description="Γ21 (1/s)")
    radiative_bound_21: float
    radiative_bound_32: float
    violations: list[str]
    caveats: list[str]


class ErrorResponse(BaseModel):
    """Error response model."""
    error_class: str = Field(description="Stable error class name")
    message: str = Field(description="Error message")


class HealthResponse(BaseModel):
    """Health check response."""
    status: str
    version: str
    workers: int
