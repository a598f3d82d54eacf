"""
Rank-one structure of (gamma + H_ab)^-1 - (gamma + H_F)^-1.

The difference is probed in the weighted coordinates v = W^(1/2) u, where both
resolvents are symmetric, with a randomized range finder: Gaussian probes, one
pass to capture the range, one SVD of the projected block.
"""

import logging

import numpy as np
from numpy.linalg import LinAlgError
from pydantic import BaseModel, ConfigDict, Field

from .classify import classify
from .coeff import Coefficient
from .errors import DextError, ResolventPoleError, UnrealizedExtensionError
from .grid_op import (
    DiscreteOperator,
    FriedrichsAuto,
    HalfLineGeometry,
    LineGeometry,
    LineJump,
    Mesh,
    Robin,
    assemble,
    describe_bc,
)
from .numerics.banded import cholesky_factor, cholesky_solve
from .settings import DEFAULT_TOLERANCES, Tolerances
from .shoot import deficiency_vector

logger = logging.getLogger(__name__)


class Resolvent:
    """u = (gamma + H)^-1 f, i.e. (gamma W + A) u = W f."""

    def __init__(self, op: DiscreteOperator, gamma: float):
        if gamma <= 0:
            raise DextError(f"gamma must be positive, got {gamma}")
        self.op = op
        self.gamma = gamma
        try:
            self._factor = cholesky_factor(gamma * op.mass_weights + op.diag, op.off)
        except LinAlgError as e:
            raise ResolventPoleError(-gamma) from e

    def apply(self, f: np.ndarray) -> np.ndarray:
        f = np.asarray(f, dtype=float)
        w = self.op.mass_weights
        rhs = w * f if f.ndim == 1 else w[:, None] * f
        return cholesky_solve(self._factor, rhs)

    __call__ = apply


def resolvent(op: DiscreteOperator, gamma: float) -> Resolvent:
    return Resolvent(op, gamma)


class KreinDiagnostics(BaseModel):
    model_config = ConfigDict(frozen=True)

    gamma: float
    alpha: float
    beta: float
    extension: str
    baseline: str
    kappa: float = Field(
        ..., description="Top singular value signed by its Rayleigh quotient"
    )
    rank_ratio: float = Field(..., ge=0.0, le=1.0)
    range_alignment: float = Field(..., ge=0.0, le=1.0)
    singular_values: list[float]
    probes: int


def _probe_difference(
    ext: Resolvent, base: Resolvent, probes: int, seed: int
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Top singular values and left vectors of K = W^1/2 (R_ext - R_base) W^-1/2."""
    root = np.sqrt(ext.op.mass_weights)

    def apply_k(block: np.ndarray) -> np.ndarray:
        scaled = block / root[:, None]
        return root[:, None] * (ext(scaled) - base(scaled))

    n = root.size
    k = min(probes, n)
    rng = np.random.default_rng(seed)
    q, _ = np.linalg.qr(rng.standard_normal((n, k)))
    y = apply_k(q)
    q_y, _ = np.linalg.qr(y)
    # K is symmetric, so Q_y^T K = (K Q_y)^T
    projected = apply_k(q_y).T
    u_b, s, _ = np.linalg.svd(projected, full_matrices=False)
    return s, q_y @ u_b, apply_k


def krein_check(
    c: Coefficient,
    alpha: float,
    beta: float,
    gamma: float,
    mesh: Mesh,
    tol: Tolerances = DEFAULT_TOLERANCES,
    seed: int = 0,
) -> KreinDiagnostics:
    """Compares H_ab with the Friedrichs extension on the same mesh."""
    geometry = mesh.geometry
    if isinstance(geometry, HalfLineGeometry):
        bc = Robin(alpha=alpha, beta=beta)
    elif isinstance(geometry, LineGeometry):
        bc = LineJump(alpha=alpha, beta=beta)
    else:
        raise UnrealizedExtensionError(
            "an interval with two degenerate ends has deficiency indices above 1"
        )

    case = classify(c, tol).case
    if case == "I":
        raise UnrealizedExtensionError(
            "case I has a unique extension; nothing to compare"
        )
    if case == "II" and alpha != 0.0:
        raise UnrealizedExtensionError(
            f"case II extension with alpha={alpha:g} has no form or boundary "
            "condition to discretize"
        )

    ext_op = assemble(c, mesh, bc, tol, case=case)
    base_op = assemble(c, mesh, FriedrichsAuto(), tol, case=case)
    ext = Resolvent(ext_op, gamma)
    base = Resolvent(base_op, gamma)

    s, left, apply_k = _probe_difference(ext, base, tol.rank_probes, seed)
    top = float(s[0]) if s.size else 0.0
    if top <= 1e-14 * max(1.0, 1.0 / gamma):
        kappa, ratio, alignment = 0.0, 0.0, 0.0
    else:
        u = left[:, 0]
        rayleigh = float(u @ apply_k(u[:, None])[:, 0])
        kappa = top if rayleigh >= 0 else -top
        ratio = float(s[1] / top) if s.size > 1 else 0.0
        eta = deficiency_vector(c, gamma, mesh, tol)
        eta_w = np.sqrt(mesh.widths) * eta
        alignment = float(min(1.0, abs(u @ eta_w) / np.linalg.norm(eta_w)))

    diagnostics = KreinDiagnostics(
        gamma=gamma,
        alpha=alpha,
        beta=beta,
        extension=describe_bc(ext_op.resolved_bc),
        baseline=describe_bc(base_op.resolved_bc),
        kappa=kappa,
        rank_ratio=min(1.0, max(0.0, ratio)),
        range_alignment=alignment,
        singular_values=[float(v) for v in s[:4]],
        probes=min(tol.rank_probes, mesh.n_cells),
    )
    logger.info(
        f"krein gamma={gamma:g} {diagnostics.extension} vs {diagnostics.baseline}: "
        f"kappa={kappa:.4e}, rank ratio={ratio:.2e}, alignment={alignment:.6f}"
    )
    return diagnostics


class PositivityTransfer(BaseModel):
    model_config = ConfigDict(frozen=True)

    trials: int
    negative_extension: int = Field(..., description="Outputs with a negative entry")
    negative_baseline: int


def positivity_transfer(
    ext_op: DiscreteOperator,
    base_op: DiscreteOperator,
    gamma: float,
    trials: int = 50,
    seed: int = 0,
    tol: Tolerances = DEFAULT_TOLERANCES,
) -> PositivityTransfer:
    """Applies both resolvents to random non-negative vectors."""
    rng = np.random.default_rng(seed)
    data = rng.random((ext_op.mesh.n_cells, trials))
    counts = []
    for op in (ext_op, base_op):
        out = Resolvent(op, gamma)(data)
        floor = -tol.positivity_tol * np.abs(out).max(axis=0)
        counts.append(int(np.sum(np.any(out < floor, axis=0))))
    return PositivityTransfer(
        trials=trials, negative_extension=counts[0], negative_baseline=counts[1]
    )
