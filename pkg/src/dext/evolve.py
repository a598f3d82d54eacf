"""Time stepping of u' = -H u and the semigroup-level measurements."""

import csv
import logging
from pathlib import Path
from typing import Literal

import numpy as np
from numpy.linalg import LinAlgError
from pydantic import BaseModel, ConfigDict, Field
from scipy.integrate import cumulative_trapezoid

from .errors import DextError, ResolventPoleError, TruncationTooSmallError
from .grid_op import DiscreteOperator, describe_bc
from .numerics.banded import cholesky_factor, cholesky_solve
from .settings import DEFAULT_TOLERANCES, Tolerances

logger = logging.getLogger(__name__)

Scheme = Literal["backward_euler", "crank_nicolson"]


class Propagator:
    """
    One-step map for a fixed dt, factorised once.

    backward_euler: (W + dt A) u1 = W u0
    crank_nicolson: (W + dt/2 A) u1 = (W - dt/2 A) u0
    """

    def __init__(self, op: DiscreteOperator, scheme: Scheme = "backward_euler"):
        if scheme not in ("backward_euler", "crank_nicolson"):
            raise DextError(f"unknown scheme {scheme!r}")
        self.op = op
        self.scheme = scheme
        self.dt = None
        self._factor = None
        self._theta = 1.0 if scheme == "backward_euler" else 0.5

    def setup(self, dt: float) -> "Propagator":
        if dt <= 0:
            raise DextError(f"dt must be positive, got {dt}")
        op = self.op
        scale = self._theta * dt
        try:
            self._factor = cholesky_factor(
                op.mass_weights + scale * op.diag, scale * op.off
            )
        except LinAlgError as e:
            raise ResolventPoleError(-1.0 / scale) from e
        self.dt = dt
        return self

    def step(self, u: np.ndarray) -> np.ndarray:
        if self._factor is None:
            raise DextError("Propagator.setup(dt) must be called before step")
        op = self.op
        rhs = op.mass_weights * u
        if self.scheme == "crank_nicolson":
            rhs = rhs - 0.5 * self.dt * (op.stiffness @ u)
        return cholesky_solve(self._factor, rhs)


def step(
    op: DiscreteOperator, u: np.ndarray, dt: float, scheme: Scheme = "backward_euler"
) -> np.ndarray:
    return Propagator(op, scheme).setup(dt).step(np.asarray(u, dtype=float))


class SemigroupTrace(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    scheme: Scheme
    positivity_reliable: bool = Field(
        ..., description="False for crank_nicolson, which may undershoot"
    )
    bc: str
    truncation_length: float | None
    times: list[float]
    min_value: list[float]
    sup_norm: list[float]
    l1_mass: list[float] = Field(..., description="sum w |u|")
    total_mass: list[float] = Field(..., description="sum w u")
    l2_norm: list[float]
    mass_left: list[float] = Field(..., description="sum w |u| left of the origin")
    mass_right: list[float]
    far_outflow: list[float] = Field(
        ..., description="Cumulative mass through far Dirichlet ends"
    )
    snapshots: np.ndarray = Field(..., exclude=True)

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f)
            writer.writerow(["t", "min", "sup", "l1", "l2", "mass_left", "mass_right"])
            for row in zip(
                self.times,
                self.min_value,
                self.sup_norm,
                self.l1_mass,
                self.l2_norm,
                self.mass_left,
                self.mass_right,
            ):
                writer.writerow([repr(float(v)) for v in row])

    def write_dump(self, path: str | Path) -> None:
        """uint64 n_nodes, uint64 n_times, times, snapshots row-major; little-endian."""
        n_times, n_nodes = self.snapshots.shape
        with open(path, "wb") as f:
            f.write(np.array([n_nodes, n_times], dtype="<u8").tobytes())
            f.write(np.asarray(self.times, dtype="<f8").tobytes())
            f.write(np.ascontiguousarray(self.snapshots, dtype="<f8").tobytes())


def read_dump(path: str | Path) -> tuple[np.ndarray, np.ndarray]:
    raw = Path(path).read_bytes()
    n_nodes, n_times = np.frombuffer(raw[:16], dtype="<u8")
    data = np.frombuffer(raw[16:], dtype="<f8")
    times = data[:n_times]
    snapshots = data[n_times:].reshape(int(n_times), int(n_nodes))
    return times, snapshots


def evolve(
    op: DiscreteOperator,
    u0: np.ndarray,
    horizon: float,
    n_steps: int,
    scheme: Scheme = "backward_euler",
) -> SemigroupTrace:
    if n_steps < 1:
        raise DextError(f"n_steps must be >= 1, got {n_steps}")
    if horizon <= 0:
        raise DextError(f"horizon must be positive, got {horizon}")
    u = np.asarray(u0, dtype=float).copy()
    if u.shape != (op.mesh.n_cells,):
        raise DextError(f"initial datum of shape {u.shape} for {op.mesh.n_cells} cells")

    dt = horizon / n_steps
    propagator = Propagator(op, scheme).setup(dt)
    snapshots = np.empty((n_steps + 1, u.size))
    snapshots[0] = u
    for k in range(1, n_steps + 1):
        u = propagator.step(u)
        snapshots[k] = u

    times = np.linspace(0.0, horizon, n_steps + 1)
    w = op.mass_weights
    split = op.mesh.split_index
    weighted = np.abs(snapshots) * w
    rate = np.zeros(times.size)
    for cell, conductance in op.far_conductance:
        rate += conductance * snapshots[:, cell]
    outflow = cumulative_trapezoid(rate, times, initial=0.0)

    trace = SemigroupTrace(
        scheme=scheme,
        positivity_reliable=scheme == "backward_euler",
        bc=describe_bc(op.resolved_bc),
        truncation_length=op.mesh.truncation_length,
        times=times.tolist(),
        min_value=snapshots.min(axis=1).tolist(),
        sup_norm=np.abs(snapshots).max(axis=1).tolist(),
        l1_mass=weighted.sum(axis=1).tolist(),
        total_mass=(snapshots * w).sum(axis=1).tolist(),
        l2_norm=np.sqrt((snapshots**2 * w).sum(axis=1)).tolist(),
        mass_left=weighted[:, :split].sum(axis=1).tolist(),
        mass_right=weighted[:, split:].sum(axis=1).tolist(),
        far_outflow=outflow.tolist(),
        snapshots=snapshots,
    )
    logger.debug(
        f"evolved {n_steps} {scheme} steps to t={horizon}: "
        f"l1 {trace.l1_mass[0]:.4e} -> {trace.l1_mass[-1]:.4e}"
    )
    return trace


class Conservativeness(BaseModel):
    model_config = ConfigDict(frozen=True)

    bc: str
    max_mass_drift: float
    far_outflow: float = Field(..., description="Relative mass lost at far ends")
    conservative: bool


def conservativeness(
    trace: SemigroupTrace, bc=None, tol: Tolerances = DEFAULT_TOLERANCES
) -> Conservativeness:
    """max_t |l1(t) - l1(0)| / l1(0), refused when the far ends leak."""
    m0 = trace.l1_mass[0]
    if m0 == 0.0:
        drift = 0.0
        outflow = 0.0
    else:
        drift = max(abs(m - m0) for m in trace.l1_mass) / m0
        outflow = trace.far_outflow[-1] / m0
    if outflow > tol.far_flux_tol:
        raise TruncationTooSmallError(outflow, tol.far_flux_tol)
    label = describe_bc(bc) if bc is not None else trace.bc
    return Conservativeness(
        bc=label,
        max_mass_drift=drift,
        far_outflow=outflow,
        conservative=drift <= tol.far_flux_tol,
    )


class SubmarkovViolation(BaseModel):
    model_config = ConfigDict(frozen=True)

    positivity_failures: int
    sup_expansion: float
    trials: int


def submarkov_violation(
    op: DiscreteOperator,
    trials: int = 20,
    seed: int = 0,
    horizon: float = 1.0,
    n_steps: int = 50,
    tol: Tolerances = DEFAULT_TOLERANCES,
) -> SubmarkovViolation:
    """Evolves random non-negative data and the constant 1 with backward Euler."""
    rng = np.random.default_rng(seed)
    n = op.mesh.n_cells
    data = [rng.random(n) for _ in range(trials)] + [np.ones(n)]
    failures = 0
    expansion = 0.0
    for u0 in data:
        trace = evolve(op, u0, horizon, n_steps)
        sup0 = trace.sup_norm[0]
        failures += sum(m < -tol.positivity_tol * sup0 for m in trace.min_value)
        expansion = max(expansion, max(trace.sup_norm) / sup0)
    if not op.submarkovian:
        logger.info(
            f"submarkov probe on {describe_bc(op.resolved_bc)}: "
            f"{failures} negative snapshots, sup expansion {expansion:.6f}"
        )
    return SubmarkovViolation(
        positivity_failures=failures, sup_expansion=expansion, trials=len(data)
    )


def gaussian_datum(op: DiscreteOperator, center: float, width: float) -> np.ndarray:
    x = op.mesh.centers
    return np.exp(-(((x - center) / width) ** 2))


def leak_fraction(trace: SemigroupTrace, into: Literal["left", "right"]) -> float:
    """Largest share of l1 mass found on the `into` side over the trace."""
    masses = trace.mass_left if into == "left" else trace.mass_right
    return max(
        (m / total if total > 0 else 0.0) for m, total in zip(masses, trace.l1_mass)
    )
