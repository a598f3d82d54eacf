"""
Splitting the domain of a Lipschitz coefficient along its zero set.

The complement of the zero set is a union of open intervals; each one is
classified on its own and carries its Friedrichs extension. Plateaus of the zero
set carry H = 0.
"""

import logging
import math
from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from .classify import ClassificationReport, classify_endpoints
from .coeff import Coefficient, Tabulated
from .errors import AssemblyError, DextError
from .evolve import Scheme, SemigroupTrace, evolve
from .grid_op import (
    DiscreteOperator,
    FriedrichsAuto,
    HalfLineGeometry,
    IntervalGeometry,
    LineGeometry,
    Mesh,
    NeumannFlux,
    assemble,
    build_mesh,
    zero_operator,
)
from .settings import DEFAULT_TOLERANCES, Tolerances

logger = logging.getLogger(__name__)

EndpointVerdict = Literal["degenerate", "regular", "infinite"]


class Component(BaseModel):
    model_config = ConfigDict(frozen=True, ser_json_inf_nan="constants")

    lower: float
    upper: float
    lower_verdict: EndpointVerdict
    upper_verdict: EndpointVerdict
    report: ClassificationReport | None = Field(
        None, description="None for a component without finite endpoints"
    )


class Decomposition(BaseModel):
    model_config = ConfigDict(frozen=True, ser_json_inf_nan="constants")

    domain: tuple[float, float]
    components: list[Component]
    plateau_blocks: list[tuple[float, float]]
    zero_points: list[float]
    lipschitz: bool
    unique_submarkovian: bool
    flags: list[str] = Field(default_factory=list)

    @model_validator(mode="after")
    def _partition(self) -> "Decomposition":
        pieces = sorted(
            [(comp.lower, comp.upper) for comp in self.components]
            + list(self.plateau_blocks)
            + [(p, p) for p in self.zero_points]
        )
        lo, hi = self.domain
        cursor = lo
        for a, b in pieces:
            if not math.isclose(a, cursor, rel_tol=0.0, abs_tol=1e-12):
                raise ValueError(f"decomposition leaves a gap at {cursor}")
            cursor = b
        if cursor != hi:
            raise ValueError(f"decomposition stops at {cursor}, domain ends at {hi}")
        return self


def _lipschitz_flag(
    c: Coefficient, point: float, side, tol: Tolerances
) -> str | None:
    message = (
        f"coefficient is not Lipschitz at x0={point}; uniqueness hypotheses fail"
    )
    delta, exact = c.local_exponent(
        point, side, d_max=tol.harmonic_anchor, iqr_max=tol.exponent_iqr_max
    )
    model = c.model
    if isinstance(model, Tabulated):
        quotient = model.difference_quotient(point, tol.harmonic_anchor * 1e-2)
        if quotient > tol.lipschitz_quotient_max:
            return message
    if delta < 1.0 - (0.0 if exact else tol.borderline_band):
        return message
    return None


def decompose(c: Coefficient, tol: Tolerances = DEFAULT_TOLERANCES) -> Decomposition:
    lo, hi = c.bounds
    zs = c.zero_set(tol.plateau_rel_tol)
    features = zs.features()

    flags: list[str] = []
    for a, b in features:
        for point, side in ((a, "left"), (b, "right")):
            if (side == "left" and point <= lo) or (side == "right" and point >= hi):
                continue
            flag = _lipschitz_flag(c, point, side, tol)
            if flag and flag not in flags:
                flags.append(flag)
                logger.warning(flag)

    cuts = [lo]
    for a, b in features:
        cuts.extend([a, b])
    cuts.append(hi)
    components = []
    for left, right in zip(cuts[0::2], cuts[1::2]):
        if right <= left:
            continue
        lower_v = _verdict(left, features)
        upper_v = _verdict(right, features)
        report = None
        if math.isfinite(left) or math.isfinite(right):
            report = classify_endpoints(c, left, right, tol)
        components.append(
            Component(
                lower=left,
                upper=right,
                lower_verdict=lower_v,
                upper_verdict=upper_v,
                report=report,
            )
        )

    lipschitz = not flags
    cases = [comp.report.case for comp in components if comp.report is not None]
    unique = lipschitz and all(case in ("I", "II") for case in cases)
    decomposition = Decomposition(
        domain=(lo, hi),
        components=components,
        plateau_blocks=[pl for pl in zs.plateaus if pl[1] > pl[0]],
        zero_points=list(zs.points)
        + [pl[0] for pl in zs.plateaus if pl[1] == pl[0]],
        lipschitz=lipschitz,
        unique_submarkovian=unique,
        flags=flags,
    )
    logger.info(
        f"decomposed into {len(components)} component(s), "
        f"{len(decomposition.plateau_blocks)} plateau(s); unique submarkovian: {unique}"
    )
    return decomposition


def _verdict(x: float, features) -> EndpointVerdict:
    if math.isinf(x):
        return "infinite"
    if any(a <= x <= b for a, b in features):
        return "degenerate"
    return "regular"


def assemble_direct_sum(
    dec: Decomposition,
    c: Coefficient,
    n_cells: int = 200,
    grading_ratio: float = 0.5,
    length: float = 10.0,
    tol: Tolerances = DEFAULT_TOLERANCES,
    far_field: str = "dirichlet",
) -> list[DiscreteOperator]:
    """One operator per component and per plateau block, left to right."""
    blocks: list[tuple[float, DiscreteOperator]] = []
    for comp in dec.components:
        lower, upper = comp.lower, comp.upper
        if math.isfinite(lower) and math.isfinite(upper):
            geometry = IntervalGeometry(
                a=lower,
                b=upper,
                grade_lower=comp.lower_verdict == "degenerate",
                grade_upper=comp.upper_verdict == "degenerate",
            )
        elif math.isfinite(lower):
            geometry = HalfLineGeometry(origin=lower, side="right", length=length)
        elif math.isfinite(upper):
            geometry = HalfLineGeometry(origin=upper, side="left", length=length)
        else:
            geometry = LineGeometry(length=length)
        mesh = build_mesh(geometry, n_cells, grading_ratio, tol.graded_cells)
        case = comp.report.case if comp.report is not None else "III"
        op = assemble(c, mesh, FriedrichsAuto(), tol, far_field=far_field, case=case)
        blocks.append((lower, op))
    for a, b in dec.plateau_blocks:
        flat = IntervalGeometry(a=a, b=b, grade_lower=False, grade_upper=False)
        mesh = build_mesh(flat, max(8, n_cells // 4), grading_ratio, 0)
        blocks.append((a, zero_operator(mesh)))
    return [op for _, op in sorted(blocks, key=lambda item: item[0])]


def block_diagonal(blocks: list[DiscreteOperator]) -> DiscreteOperator:
    """The direct sum as one operator on the concatenated cells."""
    if not blocks:
        raise AssemblyError("no blocks to join")
    nodes = [blocks[0].mesh.nodes]
    faces, boundary, far = [], [], []
    offset = 0
    for k, op in enumerate(blocks):
        if k:
            prev_end = nodes[-1][-1]
            start = op.mesh.nodes[0]
            if not np.isclose(start, prev_end, rtol=0.0, atol=1e-12):
                raise AssemblyError(f"blocks are not adjacent: {prev_end} != {start}")
            nodes.append(op.mesh.nodes[1:])
            faces.append(np.zeros(1))
        faces.append(op.face_conductance)
        boundary.append(op.boundary_terms)
        far.extend((cell + offset, t) for cell, t in op.far_conductance)
        offset += op.mesh.n_cells
    all_nodes = np.concatenate(nodes)
    widths = np.diff(all_nodes)
    mesh = Mesh(
        geometry=IntervalGeometry(
            a=float(all_nodes[0]),
            b=float(all_nodes[-1]),
            grade_lower=False,
            grade_upper=False,
        ),
        nodes=all_nodes,
        grading_ratio=blocks[0].mesh.grading_ratio,
        graded_cells=blocks[0].mesh.graded_cells,
        cell_ratio=float(widths.max() / widths.min()),
    )
    return DiscreteOperator(
        mesh=mesh,
        bc=NeumannFlux(),
        resolved_bc=NeumannFlux(),
        far_field="neumann",
        face_conductance=np.concatenate(faces),
        boundary_terms=np.concatenate(boundary),
        far_conductance=far,
    )


def restrict(blocks: list[DiscreteOperator], u: np.ndarray) -> list[np.ndarray]:
    sizes = np.cumsum([op.mesh.n_cells for op in blocks])[:-1]
    return np.split(np.asarray(u, dtype=float), sizes)


def evolve_direct_sum(
    blocks: list[DiscreteOperator],
    u0: np.ndarray,
    horizon: float,
    n_steps: int,
    scheme: Scheme = "backward_euler",
) -> list[SemigroupTrace]:
    """Evolves the restriction of a global datum on every block independently."""
    total = sum(op.mesh.n_cells for op in blocks)
    if np.asarray(u0).size != total:
        raise DextError(f"datum has {np.asarray(u0).size} entries for {total} cells")
    return [
        evolve(op, part, horizon, n_steps, scheme)
        for op, part in zip(blocks, restrict(blocks, u0))
    ]
