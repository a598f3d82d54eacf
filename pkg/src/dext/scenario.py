"""
Scenario files: one TOML file describes one run.

    name = "case II line"
    analyses = ["classify", "deficiency", "evolve"]

    [coefficient.model]
    kind = "power_law"
    exponent_left = 1.25
    exponent_right = 1.25

    [coefficient.domain]
    kind = "line"

    [evolution]
    horizon = 1.0
    n_steps = 400
    datum = { kind = "indicator", a = 0.5, b = 1.5 }

A tabulated model may name a CSV file (`table = "c.csv"`, columns x,c) instead
of inline arrays; the path is relative to the scenario file.
"""

import csv
import itertools
import logging
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from pathlib import Path
from typing import Annotated, Literal, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .classify import default_origin
from .coeff import Coefficient, HalfLine, Interval
from .errors import ScenarioError
from .grid_op import (
    BoundaryCondition,
    FarField,
    FriedrichsAuto,
    HalfLineGeometry,
    IntervalGeometry,
    LineGeometry,
)
from .settings import describe_validation_error

logger = logging.getLogger(__name__)

Analysis = Literal[
    "classify", "deficiency", "cutoffs", "blowup", "evolve", "krein", "decompose"
]
ANALYSIS_ORDER: tuple[str, ...] = (
    "classify",
    "deficiency",
    "cutoffs",
    "blowup",
    "evolve",
    "krein",
    "decompose",
)


class _Spec(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")


class MeshSpec(_Spec):
    n_cells: int = Field(1000, ge=8)
    grading_ratio: float = Field(0.5, gt=0.0, lt=1.0)
    graded_cells: int | None = Field(None, ge=0, description="Overrides tolerances")
    length: float = Field(10.0, gt=0.0, description="Truncation length")
    far_field: FarField = "dirichlet"
    auto_truncate: bool = Field(
        False, description="Extend the length to 6 sqrt(horizon * c(length))"
    )


class GaussianDatum(_Spec):
    kind: Literal["gaussian"] = "gaussian"
    center: float
    width: float = Field(..., gt=0.0)


class IndicatorDatum(_Spec):
    kind: Literal["indicator"] = "indicator"
    a: float
    b: float

    @model_validator(mode="after")
    def _ordered(self) -> "IndicatorDatum":
        if not self.a < self.b:
            raise ValueError(f"indicator needs a < b, got ({self.a}, {self.b})")
        return self


class ConstantDatum(_Spec):
    kind: Literal["constant"] = "constant"
    value: float = 1.0


Datum = Annotated[
    Union[GaussianDatum, IndicatorDatum, ConstantDatum], Field(discriminator="kind")
]


class EvolutionSpec(_Spec):
    horizon: float = Field(1.0, gt=0.0)
    n_steps: int = Field(100, ge=1)
    scheme: Literal["backward_euler", "crank_nicolson"] = "backward_euler"
    datum: Datum
    markov_trials: int = Field(
        5, ge=0, description="Random data for the submarkov probe"
    )
    dump_snapshots: bool = False


class KreinSpec(_Spec):
    gammas: list[float] = Field(default_factory=lambda: [1.0], min_length=1)
    pairs: list[tuple[float, float]] = Field(
        ..., min_length=1, description="(alpha, beta) against the Friedrichs extension"
    )
    positivity_trials: int = 50


class DeficiencySpec(_Spec):
    gammas: list[float] = Field(default_factory=lambda: [1.0], min_length=1)


class CutoffSpec(_Spec):
    n: list[int] = Field(default_factory=lambda: [100, 10_000, 1_000_000], min_length=1)


class BlowupSpec(_Spec):
    gamma_boundary: list[float | Literal["dirichlet"]] = Field(
        default_factory=lambda: [0.0, 1.0, "dirichlet"], min_length=1
    )
    X: float = Field(10.0, gt=0.0)
    min_growth: float = 1e3
    expect_refusal: bool = Field(
        False, description="The growth hypothesis is expected to fail"
    )


class DecomposeSpec(_Spec):
    n_cells: int = Field(200, ge=8)
    horizon: float = Field(1.0, gt=0.0)
    n_steps: int = Field(50, ge=1)


class Expectations(_Spec):
    """Optional categorical expectations checked as assertions."""

    case: Literal["I", "II", "III"] | None = None
    deficiency_index: int | None = None
    unique_submarkovian: bool | None = None
    invariant: bool | None = Field(
        None,
        description="Half-lines invariant: cross-origin share within the "
        "invariance_threshold tolerance",
    )
    max_leak: float | None = Field(
        None, description="Largest allowed cross-origin share"
    )
    min_leak: float | None = Field(
        None, description="Smallest required cross-origin share"
    )
    max_mass_drift: float | None = None
    min_mass_drift: float | None = None


class Scenario(_Spec):
    name: str
    seed: int = 0
    analyses: list[Analysis] = Field(..., min_length=1)
    coefficient: Coefficient
    mesh: MeshSpec = Field(default_factory=MeshSpec)
    boundary: list[BoundaryCondition] = Field(
        default_factory=lambda: [FriedrichsAuto()], min_length=1
    )
    evolution: EvolutionSpec | None = None
    krein: KreinSpec | None = None
    deficiency: DeficiencySpec = Field(default_factory=DeficiencySpec)
    cutoffs: CutoffSpec = Field(default_factory=CutoffSpec)
    blowup: BlowupSpec | None = None
    decompose: DecomposeSpec = Field(default_factory=DecomposeSpec)
    expect: Expectations = Field(default_factory=Expectations)

    @model_validator(mode="after")
    def _required_parameters(self) -> "Scenario":
        if "evolve" in self.analyses and self.evolution is None:
            raise ValueError("analysis 'evolve' needs an [evolution] table")
        if "krein" in self.analyses and self.krein is None:
            raise ValueError("analysis 'krein' needs a [krein] table")
        if "blowup" in self.analyses and self.blowup is None:
            raise ValueError("analysis 'blowup' needs a [blowup] table")
        return self

    @property
    def ordered_analyses(self) -> list[str]:
        return [a for a in ANALYSIS_ORDER if a in self.analyses]

    def geometry(self):
        domain = self.coefficient.domain
        if isinstance(domain, HalfLine):
            return HalfLineGeometry(
                origin=domain.origin, side=domain.side, length=self.mesh.length
            )
        if isinstance(domain, Interval):
            return IntervalGeometry(a=domain.a, b=domain.b)
        return LineGeometry(
            origin=default_origin(self.coefficient), length=self.mesh.length
        )


def _read_toml(path: Path) -> dict:
    try:
        with open(path, "rb") as f:
            return tomllib.load(f)
    except FileNotFoundError as e:
        raise ScenarioError(f"scenario file not found: {path}") from e
    except tomllib.TOMLDecodeError as e:
        raise ScenarioError(f"{path}: {e}") from e


def _inline_tables(raw: dict, base: Path) -> dict:
    """Replaces `table = "file.csv"` in tabulated models by x/c arrays."""

    def visit(node):
        if isinstance(node, dict):
            if node.get("kind") == "tabulated" and "table" in node:
                node = dict(node)
                node.update(_read_table(base / node.pop("table")))
            return {k: visit(v) for k, v in node.items()}
        if isinstance(node, list):
            return [visit(v) for v in node]
        return node

    return visit(raw)


def _read_table(path: Path) -> dict:
    try:
        with open(path, newline="", encoding="utf-8") as f:
            rows = list(csv.DictReader(f))
        return {"x": [float(r["x"]) for r in rows], "c": [float(r["c"]) for r in rows]}
    except FileNotFoundError as e:
        raise ScenarioError(f"coefficient table not found: {path}") from e
    except (KeyError, ValueError) as e:
        raise ScenarioError(f"{path}: expected numeric columns x,c ({e})") from e


def parse_scenario(raw: dict, source: str = "<scenario>") -> Scenario:
    try:
        return Scenario.model_validate(raw)
    except ValidationError as e:
        raise ScenarioError(f"{source}: {describe_validation_error(e)}") from e


def load_scenario(path: str | Path) -> Scenario:
    path = Path(path)
    raw = _inline_tables(_read_toml(path), path.parent)
    scenario = parse_scenario(raw, str(path))
    logger.info(f"Loaded scenario '{scenario.name}' from {path}")
    return scenario


class SweepPoint(BaseModel):
    model_config = ConfigDict(frozen=True)

    exponent_left: float | None = None
    exponent_right: float | None = None
    robin_alpha: float | None = None
    robin_beta: float | None = None
    scenario: Scenario

    @property
    def robin_ratio(self) -> float | None:
        if self.robin_alpha is None or not self.robin_beta:
            return None
        return self.robin_alpha / self.robin_beta


class SweepSpec(_Spec):
    base: str = Field(..., description="Base scenario, relative to the sweep file")
    exponents: list[float] = Field(
        default_factory=list, description="Symmetric exponents d- = d+"
    )
    exponents_left: list[float] = Field(default_factory=list)
    exponents_right: list[float] = Field(default_factory=list)
    robin_ratios: list[float] = Field(
        default_factory=list, description="alpha / beta with beta = 1"
    )
    robin_pairs: list[tuple[float, float]] = Field(
        default_factory=list, description="(alpha, beta) pairs, beta = 0 allowed"
    )


def load_sweep(path: str | Path) -> tuple[SweepSpec, list[SweepPoint]]:
    path = Path(path)
    raw = _read_toml(path)
    if "sweep" not in raw:
        raise ScenarioError(f"{path}: missing [sweep] table")
    try:
        spec = SweepSpec.model_validate(raw["sweep"])
    except ValidationError as e:
        raise ScenarioError(f"{path}: {describe_validation_error(e)}") from e
    base_path = path.parent / spec.base
    base_raw = _inline_tables(_read_toml(base_path), base_path.parent)
    points = expand_grid(spec, base_raw, str(base_path))
    logger.info(f"Sweep {path}: {len(points)} grid point(s) over {base_path}")
    return spec, points


def expand_grid(spec: SweepSpec, base_raw: dict, source: str) -> list[SweepPoint]:
    pairs: list[tuple[float | None, float | None]] = [(d, d) for d in spec.exponents]
    pairs += list(itertools.product(spec.exponents_left, spec.exponents_right))
    if spec.exponents_left and not spec.exponents_right:
        raise ScenarioError("exponents_left needs exponents_right")
    if spec.exponents_right and not spec.exponents_left:
        raise ScenarioError("exponents_right needs exponents_left")
    if not pairs:
        pairs = [(None, None)]
    robins: list[tuple[float, float] | None] = [(r, 1.0) for r in spec.robin_ratios]
    robins += list(spec.robin_pairs)
    robins = robins or [None]
    if pairs == [(None, None)] and robins == [None]:
        raise ScenarioError("sweep grid is empty")

    points = []
    for (left, right), robin in itertools.product(pairs, robins):
        raw = {k: v for k, v in base_raw.items()}
        model = dict(raw.get("coefficient", {}).get("model", {}))
        if left is not None:
            if model.get("kind") != "power_law":
                raise ScenarioError("exponent sweeps need a power_law base coefficient")
            model["exponent_left"] = left
            model["exponent_right"] = right
        raw["coefficient"] = {**raw.get("coefficient", {}), "model": model}
        alpha, beta = robin if robin is not None else (None, None)
        if robin is not None:
            raw["boundary"] = [{"kind": "robin", "alpha": alpha, "beta": beta}]
        label = f"{source} [d-={left}, d+={right}, robin={robin}]"
        points.append(
            SweepPoint(
                exponent_left=left,
                exponent_right=right,
                robin_alpha=alpha,
                robin_beta=beta,
                scenario=parse_scenario(raw, label),
            )
        )
    return points
