import logging
import os
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from pathlib import Path
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, ValidationError

from .errors import ScenarioError

REPORT_SCHEMA = "dext.report/1"
LOG_LEVEL = os.environ.get("DEXT_LOG_LEVEL", "INFO")
LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"

logger = logging.getLogger(__name__)


class Tolerances(BaseModel):
    """Numerical knobs shared by every analysis."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    quad_rtol: float = Field(1e-10, description="Relative tolerance of quadrature")
    nu_window_low: float = Field(
        1e-12, description="Smallest distance of the nu sample grid"
    )
    points_per_decade: int = Field(25, description="Density of the log grids")
    borderline_band: float = Field(
        0.05, description="Distance to a critical exponent flagged as estimated"
    )
    harmonic_anchor: float = Field(
        1.0, description="Upper integration limit of nu and lower limit of mu"
    )
    mu_x_max: float = Field(1e6, description="Right end of the mu sample grid")
    exponent_decades: float = Field(
        3.0, description="Decades used to estimate a local exponent"
    )
    exponent_iqr_max: float = Field(
        0.25, description="Slope spread above which an exponent is indeterminate"
    )
    deficiency_eps: tuple[float, float, float] = Field(
        (1e-4, 1e-6, 1e-8), description="Inner limits of the partial L2 masses"
    )
    convergent_ratio: float = Field(
        0.8, description="Increment ratio at or below which a mass converges"
    )
    divergent_ratio: float = Field(
        0.95, description="Increment ratio at or above which a mass diverges"
    )
    ode_rtol: float = Field(1e-10, description="Relative tolerance of the shots")
    ode_atol: float = Field(1e-13, description="Absolute tolerance of the shots")
    graded_cells: int = Field(20, description="Graded cells per degenerate end")
    flux_mode: Literal["point", "harmonic"] = Field(
        "point", description="Face conductance: c(face)/d or 1/int(1/c)"
    )
    invariance_threshold: float = Field(
        1e-8, description="Relative mass allowed across a decoupled origin"
    )
    positivity_tol: float = Field(1e-12, description="Allowed undershoot below 0")
    markov_tol: float = Field(1e-10, description="Allowed overshoot above sup(0)")
    far_flux_tol: float = Field(
        1e-6, description="Relative far-boundary outflow tolerated by verdicts"
    )
    lipschitz_quotient_max: float = Field(
        1e3, description="Largest tabulated difference quotient accepted as Lipschitz"
    )
    plateau_rel_tol: float = Field(
        1e-8, description="Tabulated values below tol*median count as zero"
    )
    rank_probes: int = Field(32, description="Random probes of the Krein check")


DEFAULT_TOLERANCES = Tolerances()


def load_tolerances(path: str | Path | None) -> Tolerances:
    """
    Reads a TOML table of Tolerances overrides.

    Unknown keys are rejected.
    """
    if path is None:
        return DEFAULT_TOLERANCES

    try:
        with open(path, "rb") as f:
            overrides = tomllib.load(f)
    except FileNotFoundError as e:
        raise ScenarioError(f"tolerance file not found: {path}") from e
    except tomllib.TOMLDecodeError as e:
        raise ScenarioError(f"{path}: {e}") from e

    try:
        tolerances = Tolerances.model_validate(
            {**DEFAULT_TOLERANCES.model_dump(), **overrides}
        )
    except ValidationError as e:
        raise ScenarioError(f"{path}: {describe_validation_error(e)}") from e

    logger.info(f"Loaded {len(overrides)} tolerance override(s) from {path}")
    return tolerances


def describe_validation_error(error: ValidationError) -> str:
    parts = []
    for item in error.errors():
        loc = ".".join(str(p) for p in item["loc"])
        parts.append(f"{loc}: {item['msg']}")
    return "; ".join(parts)
