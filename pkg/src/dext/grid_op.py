"""
Cell-centred finite-volume realizations of the extensions of -(c u')'.

Unknowns live at cell centres, so the two cells touching the origin of a line
mesh carry u(0-) and u(0+) independently. The stiffness matrix A is symmetric
tridiagonal and built from face conductances; the operator is H = W^-1 A with W
the diagonal of cell widths, so H is symmetric for the mass-weighted product.
"""

import csv
import logging
import math
from pathlib import Path
from typing import Annotated, Literal, Union

import numpy as np
from numpy.linalg import LinAlgError
from pydantic import BaseModel, ConfigDict, Field, model_validator

from .classify import classify
from .coeff import Coefficient, Side
from .errors import AssemblyError, EigenSolverError, GradingUnderflowError, MeshError
from .numerics.banded import lowest_symmetric_eigenpairs, tridiagonal_matrix
from .settings import DEFAULT_TOLERANCES, Tolerances

logger = logging.getLogger(__name__)

FarField = Literal["dirichlet", "neumann"]


# Geometries


class HalfLineGeometry(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: Literal["half_line"] = "half_line"
    origin: float = 0.0
    side: Side = "right"
    length: float = Field(10.0, gt=0, description="Truncation length")


class LineGeometry(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: Literal["line"] = "line"
    origin: float = 0.0
    length: float = Field(10.0, gt=0, description="Truncation length on each side")


class IntervalGeometry(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: Literal["interval"] = "interval"
    a: float
    b: float
    grade_lower: bool = True
    grade_upper: bool = True

    @model_validator(mode="after")
    def _ordered(self) -> "IntervalGeometry":
        if not self.a < self.b:
            raise ValueError(f"interval needs a < b, got ({self.a}, {self.b})")
        return self


Geometry = Annotated[
    Union[HalfLineGeometry, LineGeometry, IntervalGeometry],
    Field(discriminator="kind"),
]


class Mesh(BaseModel):
    """Faces of a cell-centred mesh; `nodes` are the cell faces."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    geometry: Geometry
    nodes: np.ndarray = Field(..., exclude=True)
    grading_ratio: float
    graded_cells: int
    truncation_length: float | None = Field(
        None, description="Far-field length actually meshed (infinite geometries)"
    )
    cell_ratio: float = Field(..., description="Largest over smallest cell width")
    interface: int | None = Field(
        None, description="Index of the first cell right of the line origin"
    )

    @model_validator(mode="after")
    def _increasing(self) -> "Mesh":
        if self.nodes.ndim != 1 or self.nodes.size < 2:
            raise ValueError("a mesh needs at least two nodes")
        if np.any(np.diff(self.nodes) <= 0.0):
            raise ValueError("mesh nodes must be strictly increasing")
        return self

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.nodes)

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.nodes[:-1] + self.nodes[1:])

    @property
    def n_cells(self) -> int:
        return self.nodes.size - 1

    @property
    def split_index(self) -> int:
        """Cells [0, split_index) lie left of the origin."""
        if self.interface is not None:
            return self.interface
        geometry = self.geometry
        if isinstance(geometry, IntervalGeometry):
            origin = geometry.a
        else:
            origin = geometry.origin
        return int(np.searchsorted(self.centers, origin))

    def summary(self) -> dict:
        return {
            "geometry": self.geometry.model_dump(),
            "n_cells": self.n_cells,
            "grading_ratio": self.grading_ratio,
            "graded_cells": self.graded_cells,
            "truncation_length": self.truncation_length,
            "smallest_cell": float(self.widths.min()),
            "cell_ratio": self.cell_ratio,
        }


def graded_widths(length: float, n: int, ratio: float, graded: int) -> np.ndarray:
    """Widths from the degenerate end outward: h r^(m-k) for k < m, then h."""
    m = min(n, graded)
    graded_part = ratio ** np.arange(m, 0, -1, dtype=float)
    factors = np.concatenate([graded_part, np.ones(n - m)])
    widths = length * factors / factors.sum()
    if widths[0] < 1e-300:
        raise GradingUnderflowError(float(widths[0]))
    return widths


def build_mesh(
    geometry,
    n_cells: int,
    grading_ratio: float = 0.5,
    graded_cells: int = DEFAULT_TOLERANCES.graded_cells,
    horizon: float | None = None,
    c_max: float | None = None,
) -> Mesh:
    """
    Geometric grading toward each degeneracy, uniform far field.

    With `horizon` and `c_max` an infinite geometry is meshed to
    max(length, 6 sqrt(horizon * c_max)).
    """
    if n_cells < 8:
        raise MeshError(f"n_cells must be >= 8, got {n_cells}")
    if not 0.0 < grading_ratio < 1.0:
        raise MeshError(f"grading ratio must lie in (0, 1), got {grading_ratio}")
    if graded_cells < 0:
        raise MeshError(f"graded_cells must be >= 0, got {graded_cells}")

    truncation = None
    interface = None
    if isinstance(geometry, (HalfLineGeometry, LineGeometry)):
        truncation = geometry.length
        if horizon is not None and c_max is not None:
            truncation = max(truncation, 6.0 * math.sqrt(horizon * c_max))

    if isinstance(geometry, HalfLineGeometry):
        w = graded_widths(truncation, n_cells, grading_ratio, graded_cells)
        offsets = np.concatenate([[0.0], np.cumsum(w)])
        if geometry.side == "right":
            nodes = geometry.origin + offsets
        else:
            nodes = geometry.origin - offsets[::-1]
    elif isinstance(geometry, LineGeometry):
        if n_cells % 2:
            raise MeshError(f"a line mesh needs an even number of cells, got {n_cells}")
        half = n_cells // 2
        w = graded_widths(truncation, half, grading_ratio, graded_cells)
        offsets = np.cumsum(w)
        nodes = np.concatenate(
            [
                geometry.origin - offsets[::-1],
                [geometry.origin],
                geometry.origin + offsets,
            ]
        )
        interface = half
    elif isinstance(geometry, IntervalGeometry):
        n_lo = n_cells // 2
        n_hi = n_cells - n_lo
        half = 0.5 * (geometry.b - geometry.a)
        w_lo = graded_widths(
            half, n_lo, grading_ratio, graded_cells if geometry.grade_lower else 0
        )
        w_hi = graded_widths(
            half, n_hi, grading_ratio, graded_cells if geometry.grade_upper else 0
        )
        w = np.concatenate([w_lo, w_hi[::-1]])
        nodes = geometry.a + np.concatenate([[0.0], np.cumsum(w)])
        nodes[-1] = geometry.b
    else:
        raise MeshError(f"unknown geometry {geometry!r}")

    widths = np.diff(nodes)
    if np.any(widths <= 0.0):
        raise GradingUnderflowError(float(widths.min()))
    mesh = Mesh(
        geometry=geometry,
        nodes=nodes,
        grading_ratio=grading_ratio,
        graded_cells=graded_cells,
        truncation_length=truncation,
        cell_ratio=float(widths.max() / widths.min()),
        interface=interface,
    )
    logger.debug(
        f"mesh {geometry.kind}: {n_cells} cells, smallest {widths.min():.3e}, "
        f"ratio {mesh.cell_ratio:.3e}"
    )
    return mesh


# Boundary conditions


class _PairCondition(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    alpha: float
    beta: float

    @model_validator(mode="after")
    def _not_both_zero(self):
        if self.alpha == 0.0 and self.beta == 0.0:
            raise ValueError("(alpha, beta) = (0, 0) does not define a condition")
        return self

    @property
    def ratio(self) -> float | None:
        """alpha / beta, or None for beta = 0."""
        return None if self.beta == 0.0 else self.alpha / self.beta

    @property
    def submarkovian(self) -> bool:
        return self.alpha * self.beta >= 0.0


class Dirichlet(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")
    kind: Literal["dirichlet"] = "dirichlet"


class NeumannFlux(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")
    kind: Literal["neumann_flux"] = "neumann_flux"


class Robin(_PairCondition):
    """beta (c u')(0+) = alpha u(0+)."""

    kind: Literal["robin"] = "robin"


class LineJump(_PairCondition):
    """beta ((c u')(0+) - (c u')(0-)) = alpha (u(0+) - u(0-)), flux continuous."""

    kind: Literal["line_jump"] = "line_jump"


class FriedrichsAuto(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")
    kind: Literal["friedrichs_auto"] = "friedrichs_auto"


BoundaryCondition = Annotated[
    Union[Dirichlet, NeumannFlux, Robin, LineJump, FriedrichsAuto],
    Field(discriminator="kind"),
]


def describe_bc(bc) -> str:
    if isinstance(bc, (Robin, LineJump)):
        return f"{bc.kind}(alpha={bc.alpha:g}, beta={bc.beta:g})"
    return bc.kind


def resolve_bc(bc, geometry, case: str | None = None):
    """Lowers FriedrichsAuto and Robin(alpha, 0) to explicit kinds."""
    if isinstance(bc, LineJump) and not isinstance(geometry, LineGeometry):
        raise AssemblyError("LineJump is only defined on a line geometry")
    if isinstance(bc, Robin) and bc.beta == 0.0:
        return Dirichlet()
    if not isinstance(bc, FriedrichsAuto):
        return bc
    if not isinstance(geometry, LineGeometry):
        return Dirichlet()
    if case is None:
        raise AssemblyError("FriedrichsAuto on a line needs the classification case")
    return LineJump(alpha=1.0, beta=0.0) if case == "III" else NeumannFlux()


# Operators


class DiscreteOperator(BaseModel):
    """
    H = W^-1 A with A = sum_faces T (e_i - e_j)(e_i - e_j)^T + diag(boundary_terms).

    `face_conductance[i]` couples cells i and i+1; on a line mesh the entry at
    interface - 1 is the interface coupling G.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    mesh: Mesh
    bc: BoundaryCondition
    resolved_bc: BoundaryCondition
    far_field: FarField = "dirichlet"
    face_conductance: np.ndarray = Field(..., exclude=True)
    boundary_terms: np.ndarray = Field(..., exclude=True)
    far_conductance: list[tuple[int, float]] = Field(
        default_factory=list, description="(cell, conductance) to a far Dirichlet end"
    )
    interface_coupling: float | None = None

    @property
    def mass_weights(self) -> np.ndarray:
        return self.mesh.widths

    @property
    def diag(self) -> np.ndarray:
        d = self.boundary_terms.copy()
        d[:-1] += self.face_conductance
        d[1:] += self.face_conductance
        return d

    @property
    def off(self) -> np.ndarray:
        return -self.face_conductance

    @property
    def stiffness(self):
        return tridiagonal_matrix(self.diag, self.off)

    @property
    def matrix(self):
        """Sparse H = W^-1 A."""
        return self.stiffness.multiply(1.0 / self.mass_weights[:, None]).tocsr()

    @property
    def submarkovian(self) -> bool:
        bc = self.resolved_bc
        if isinstance(bc, (Robin, LineJump)):
            return bc.submarkovian
        return True

    def apply(self, u: np.ndarray) -> np.ndarray:
        return (self.stiffness @ u) / self.mass_weights

    def summary(self) -> dict:
        return {
            "mesh": self.mesh.summary(),
            "bc": describe_bc(self.bc),
            "resolved_bc": describe_bc(self.resolved_bc),
            "far_field": self.far_field,
            "interface_coupling": self.interface_coupling,
        }


def face_conductance(
    c: Coefficient, left: float, face: float, right: float, mode: str
) -> float:
    """
    c(face) / (right - left), or 1 / int_left^right 1/c where c(face) = 0 or the
    mode is harmonic.
    """
    if mode == "point":
        c_face = float(c.eval(face))
        if c_face < 0.0:
            raise AssemblyError(
                f"coefficient negative at flux point x={face}: {c_face}"
            )
        if c_face > 0.0:
            return c_face / (right - left)
    resistance = c.inverse_integral(left, right)
    return 0.0 if math.isinf(resistance) else 1.0 / resistance


def half_cell_conductance(c: Coefficient, face: float, center: float) -> float:
    lo, hi = sorted((face, center))
    resistance = c.inverse_integral(lo, hi)
    return 0.0 if math.isinf(resistance) else 1.0 / resistance


def assemble(
    c: Coefficient,
    mesh: Mesh,
    bc=None,
    tol: Tolerances = DEFAULT_TOLERANCES,
    far_field: FarField = "dirichlet",
    case: str | None = None,
) -> DiscreteOperator:
    """
    Builds the operator realizing `bc` at the degenerate end(s) of the mesh.

    Half-line: `bc` acts at the origin, `far_field` at the truncation end.
    Line: `bc` acts at the origin, both truncation ends use `far_field`.
    Interval: `bc` acts at both endpoints.
    """
    bc = FriedrichsAuto() if bc is None else bc
    geometry = mesh.geometry
    on_line = isinstance(geometry, LineGeometry)
    if isinstance(bc, FriedrichsAuto) and on_line and case is None:
        case = classify(c, tol).case
    resolved = resolve_bc(bc, geometry, case)

    lo, hi = c.bounds
    nodes, centers = mesh.nodes, mesh.centers
    slack = 1e-12 * max(1.0, float(np.max(np.abs(nodes))))
    if nodes[0] < lo - slack or nodes[-1] > hi + slack:
        raise AssemblyError(
            f"mesh [{nodes[0]}, {nodes[-1]}] leaves the coefficient domain [{lo}, {hi}]"
        )
    values = np.asarray(c.eval(np.clip(nodes, lo, hi)))
    if np.any(values < 0.0):
        bad = nodes[values < 0.0][0]
        raise AssemblyError(f"coefficient negative at flux point x={bad}")

    n = mesh.n_cells
    faces = np.empty(n - 1)
    for i in range(n - 1):
        faces[i] = face_conductance(
            c, centers[i], nodes[i + 1], centers[i + 1], tol.flux_mode
        )
    boundary = np.zeros(n)
    far: list[tuple[int, float]] = []
    coupling = None

    def close(cell: int, face: float, condition) -> None:
        if isinstance(condition, Dirichlet):
            boundary[cell] += half_cell_conductance(c, face, centers[cell])
        elif isinstance(condition, Robin):
            boundary[cell] += condition.ratio

    def close_far(cell: int, face: float) -> None:
        if far_field == "dirichlet":
            t = half_cell_conductance(c, face, centers[cell])
            boundary[cell] += t
            far.append((cell, t))

    if isinstance(geometry, HalfLineGeometry):
        near, end = (0, n - 1) if geometry.side == "right" else (n - 1, 0)
        close(near, geometry.origin, resolved)
        close_far(end, nodes[-1] if geometry.side == "right" else nodes[0])
    elif isinstance(geometry, LineGeometry):
        k = mesh.interface
        t0 = faces[k - 1]
        if isinstance(resolved, LineJump):
            coupling = t0 if resolved.ratio is None else resolved.ratio / 4.0
        else:
            coupling = 0.0
            close(k - 1, geometry.origin, resolved)
            close(k, geometry.origin, resolved)
        faces[k - 1] = coupling
        close_far(0, nodes[0])
        close_far(n - 1, nodes[-1])
    else:
        close(0, geometry.a, resolved)
        close(n - 1, geometry.b, resolved)

    op = DiscreteOperator(
        mesh=mesh,
        bc=bc,
        resolved_bc=resolved,
        far_field=far_field,
        face_conductance=faces,
        boundary_terms=boundary,
        far_conductance=far,
        interface_coupling=coupling,
    )
    logger.debug(
        f"assembled {geometry.kind} operator, {n} cells, bc {describe_bc(resolved)}"
    )
    return op


def zero_operator(mesh: Mesh) -> DiscreteOperator:
    """H = 0 on a plateau block."""
    n = mesh.n_cells
    return DiscreteOperator(
        mesh=mesh,
        bc=NeumannFlux(),
        resolved_bc=NeumannFlux(),
        far_field="neumann",
        face_conductance=np.zeros(n - 1),
        boundary_terms=np.zeros(n),
    )


def form_value(op: DiscreteOperator, u: np.ndarray) -> float:
    """Face sum of T (du)^2 plus the boundary and interface terms."""
    u = np.asarray(u, dtype=float)
    if u.shape != (op.mesh.n_cells,):
        raise AssemblyError(
            f"vector of shape {u.shape} does not match {op.mesh.n_cells} cells"
        )
    jumps = np.diff(u)
    faces = np.sum(op.face_conductance * jumps**2)
    return float(faces + np.sum(op.boundary_terms * u**2))


def inner(op: DiscreteOperator, u: np.ndarray, v: np.ndarray) -> float:
    """Mass-weighted inner product."""
    return float(np.sum(op.mass_weights * u * v))


def lowest_eigenpairs(
    op: DiscreteOperator, k: int = 1
) -> list[tuple[float, np.ndarray]]:
    """k smallest eigenpairs of W^-1 A, eigenvectors normalised in the weighted norm."""
    if k < 1:
        raise EigenSolverError(f"k must be >= 1, got {k}")
    w = op.mass_weights
    root = np.sqrt(w)
    diag = op.diag / w
    off = op.off / (root[:-1] * root[1:])
    try:
        values, vectors = lowest_symmetric_eigenpairs(diag, off, k)
    except (LinAlgError, ValueError) as e:
        raise EigenSolverError(f"tridiagonal eigensolver failed: {e}") from e
    pairs = []
    for j in range(values.size):
        v = vectors[:, j] / root
        v /= math.sqrt(np.sum(w * v * v))
        if v[np.argmax(np.abs(v))] < 0:
            v = -v
        pairs.append((float(values[j]), v))
    return pairs


class DirichletFormCheck(BaseModel):
    model_config = ConfigDict(frozen=True)

    abs_violation: float = Field(..., description="max of h(|u|) - h(u), relative")
    clip_violation: float = Field(
        ..., description="max of h(0 v u ^ 1) - h(u), relative"
    )
    holds: bool


def _probes(n: int, trials: int, seed: int) -> list[np.ndarray]:
    rng = np.random.default_rng(seed)
    vectors = [rng.normal(scale=2.0, size=n) for _ in range(trials)]
    vectors.append(np.full(n, 2.0))
    vectors.append(np.where(np.arange(n) % 2 == 0, 1.0, -1.0))
    return vectors


def beurling_deny(
    op: DiscreteOperator,
    trials: int = 50,
    seed: int = 0,
    tol: float = 1e-12,
) -> DirichletFormCheck:
    """Normal contraction tests h(|u|) <= h(u) and h(0 v u ^ 1) <= h(u)."""
    abs_v = clip_v = -math.inf
    for u in _probes(op.mesh.n_cells, trials, seed):
        h = form_value(op, u)
        scale = max(abs(h), 1.0)
        abs_v = max(abs_v, (form_value(op, np.abs(u)) - h) / scale)
        clip_v = max(clip_v, (form_value(op, np.clip(u, 0.0, 1.0)) - h) / scale)
    return DirichletFormCheck(
        abs_violation=abs_v,
        clip_violation=clip_v,
        holds=abs_v <= tol and clip_v <= tol,
    )


def l1_dissipativity(op: DiscreteOperator, trials: int = 50, seed: int = 0) -> float:
    """min over probes of <H u, sgn u> in the weighted product."""
    worst = math.inf
    for u in _probes(op.mesh.n_cells, trials, seed):
        worst = min(worst, float(np.sign(u) @ (op.stiffness @ u)))
    return worst


def to_market(op: DiscreteOperator, path: str | Path) -> None:
    """Writes the nonzeros of H = W^-1 A as 1-based (row, col, value) rows."""
    coo = op.matrix.tocoo()
    order = np.lexsort((coo.col, coo.row))
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(["row", "col", "value"])
        for idx in order:
            row, col = int(coo.row[idx]) + 1, int(coo.col[idx]) + 1
            writer.writerow([row, col, repr(float(coo.data[idx]))])
    logger.info(f"wrote {coo.nnz} matrix entries to {path}")
