"""
Shooting for (c psi')' = gamma psi written as the first-order system

    psi' = F / c,    F' = gamma psi,    m' = psi^2

in the flux variable F = c psi', which stays finite where c vanishes. Near a
degeneracy the system is integrated in t = ln|x - origin|.
"""

import csv
import logging
import math
from pathlib import Path

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy.integrate import solve_ivp

from .classify import default_origin
from .coeff import Coefficient, HalfLine, Interval, Side
from .errors import CoefficientError, HypothesisViolatedError, IndeterminateError
from .grid_op import HalfLineGeometry, LineGeometry, Mesh
from .settings import DEFAULT_TOLERANCES, Tolerances

logger = logging.getLogger(__name__)

OVERFLOW = 1e100


class ShootingSolution(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    grid: np.ndarray = Field(..., exclude=True, description="Increasing positions")
    psi: np.ndarray = Field(..., exclude=True)
    flux: np.ndarray = Field(..., exclude=True, description="c psi'")
    l2_partial: np.ndarray = Field(
        ..., exclude=True, description="int psi^2 from the left"
    )
    gamma: float
    origin: float
    lp_tail_exponent: float | None = Field(
        None, description="a with |psi| ~ dist^-a near the origin"
    )
    monotone_square: bool
    truncated: bool = False
    overflowed: bool = Field(False, description="Stopped because |psi| blew up")
    message: str = ""

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f)
            writer.writerow(["x", "psi", "flux", "l2_partial"])
            for row in zip(self.grid, self.psi, self.flux, self.l2_partial):
                writer.writerow([repr(float(v)) for v in row])


def _overflow(t, y):
    return OVERFLOW - abs(y[0])


_overflow.terminal = True


def integrate_deficiency(
    c: Coefficient,
    gamma: float,
    x_start: float,
    seed: tuple[float, float],
    x_end: float,
    sample_points: np.ndarray | None = None,
    origin: float | None = None,
    tol: Tolerances = DEFAULT_TOLERANCES,
) -> ShootingSolution:
    """
    Integrates from x_start to x_end; a failed or overflowing run returns the
    partial solution with `truncated` set.
    """
    if gamma < 0:
        raise CoefficientError(f"gamma must be >= 0, got {gamma}")
    if seed[0] == 0.0 and seed[1] == 0.0:
        raise CoefficientError("seed (psi, flux) must not be (0, 0)")
    if x_start == x_end:
        raise CoefficientError("x_start and x_end coincide")
    origin = _origin_or_zero(c) if origin is None else origin

    lo, hi = sorted((x_start, x_end))
    zs = c.model.zeros(lo, hi, tol=1e-12)
    if any(lo < p < hi for p in zs.points) or any(
        b > lo and a < hi for a, b in zs.plateaus
    ):
        raise CoefficientError(f"coefficient vanishes inside ({lo}, {hi})")

    if sample_points is None:
        sample_points = _default_samples(x_start, x_end, origin)
    samples = np.asarray(sample_points, dtype=float)
    samples = samples[(samples >= lo) & (samples <= hi)]
    forward = x_end > x_start
    samples = np.sort(samples) if forward else np.sort(samples)[::-1]

    d_start, d_end = abs(x_start - origin), abs(x_end - origin)
    same_side = (x_start - origin) * (x_end - origin) > 0
    use_log = same_side and max(d_start, d_end) > 10.0 * min(d_start, d_end)

    if use_log:
        sigma = 1.0 if x_start > origin else -1.0

        def rhs(t, y):
            s = math.exp(t)
            x = origin + sigma * s
            jac = sigma * s
            return [jac * y[1] / float(c.eval(x)), jac * gamma * y[0], jac * y[0] ** 2]

        span = (math.log(d_start), math.log(d_end))
        t_eval = np.clip(np.log(np.abs(samples - origin)), min(span), max(span))
        to_x = lambda t: origin + sigma * np.exp(t)  # noqa: E731
    else:

        def rhs(x, y):
            return [y[1] / float(c.eval(x)), gamma * y[0], y[0] ** 2]

        span = (x_start, x_end)
        t_eval = samples
        to_x = lambda t: np.asarray(t)  # noqa: E731

    result = solve_ivp(
        rhs,
        span,
        [seed[0], seed[1], 0.0],
        method="DOP853",
        t_eval=t_eval,
        rtol=tol.ode_rtol,
        atol=tol.ode_atol,
        events=_overflow,
    )
    truncated = result.status != 0
    message = result.message if truncated else ""
    if result.status == 1:
        message = f"|psi| exceeded {OVERFLOW:g}"
    if truncated:
        reached = float(to_x(result.t[-1])) if result.t.size else x_start
        logger.warning(
            f"shot from {x_start} toward {x_end} stopped at {reached}: {message}"
        )

    x = to_x(result.t)
    psi, flux, signed_mass = result.y
    order = np.argsort(x)
    x, psi, flux, signed_mass = x[order], psi[order], flux[order], signed_mass[order]
    # m integrates psi^2 dx in the direction of the shot
    l2_partial = signed_mass - signed_mass[0] if x.size else signed_mass
    square = psi**2
    monotone = bool(
        np.all(np.diff(square[1:]) >= -1e-12 * max(1.0, float(square.max(initial=0.0))))
    )

    return ShootingSolution(
        grid=x,
        psi=psi,
        flux=flux,
        l2_partial=np.abs(l2_partial),
        gamma=gamma,
        origin=origin,
        lp_tail_exponent=_tail_exponent(x, psi, origin),
        monotone_square=monotone,
        truncated=truncated,
        overflowed=result.status == 1,
        message=message,
    )


def _origin_or_zero(c: Coefficient) -> float:
    try:
        return default_origin(c)
    except CoefficientError:
        return c.bounds[0]


def _default_samples(x_start: float, x_end: float, origin: float, n: int = 400):
    d_start, d_end = abs(x_start - origin), abs(x_end - origin)
    if (x_start - origin) * (x_end - origin) > 0 and max(d_start, d_end) > 10.0 * min(
        d_start, d_end
    ):
        sigma = 1.0 if x_start > origin else -1.0
        return origin + sigma * np.geomspace(d_start, d_end, n)
    return np.linspace(x_start, x_end, n)


def _tail_exponent(x: np.ndarray, psi: np.ndarray, origin: float) -> float | None:
    """-slope of log|psi| against log distance over the decade closest to origin."""
    d = np.abs(x - origin)
    keep = (d > 0.0) & (np.abs(psi) > 0.0)
    if np.count_nonzero(keep) < 3:
        return None
    d, a = d[keep], np.abs(psi[keep])
    window = d <= 10.0 * d.min()
    if np.count_nonzero(window) < 3:
        return None
    slope = np.polyfit(np.log(d[window]), np.log(a[window]), 1)[0]
    return float(-slope)


class DeficiencyVerdict(BaseModel):
    model_config = ConfigDict(frozen=True)

    side: Side
    gamma: float
    index: int
    masses: list[float] = Field(..., description="Partial masses at the eps ladder")
    increment_ratio: float | None
    truncated: bool


def deficiency_index(
    c: Coefficient,
    side: Side,
    gamma: float = 1.0,
    tol: Tolerances = DEFAULT_TOLERANCES,
) -> DeficiencyVerdict:
    """
    0 or 1 from the L2 mass near the origin of the solution with psi(1) = 0,
    F(1) = -1, read at the eps ladder.
    """
    if gamma <= 0:
        raise CoefficientError(f"gamma must be > 0, got {gamma}")
    origin = default_origin(c, tol)
    sigma = 1.0 if side == "right" else -1.0
    anchor = tol.harmonic_anchor
    eps = sorted(tol.deficiency_eps, reverse=True)
    x_start = origin + sigma * anchor
    sol = integrate_deficiency(
        c,
        gamma,
        x_start,
        (0.0, -sigma),
        origin + sigma * eps[-1],
        sample_points=origin + sigma * np.array([anchor] + eps),
        origin=origin,
        tol=tol,
    )
    dist = np.abs(sol.grid - origin)
    mass_at = {}
    total = float(sol.l2_partial.max(initial=0.0))
    for e in eps:
        hit = np.flatnonzero(np.isclose(dist, e, rtol=1e-9))
        if hit.size:
            # mass between eps and the anchor
            idx = hit[0]
            at_anchor = int(np.argmax(dist))
            mass_at[e] = abs(float(sol.l2_partial[at_anchor] - sol.l2_partial[idx]))

    masses = [mass_at.get(e, math.inf) for e in eps]
    if len(mass_at) < len(eps):
        if not sol.overflowed:
            raise IndeterminateError(
                f"deficiency shot ({side}) stopped early: {sol.message}",
                {"masses": masses, "eps": eps},
            )
        logger.info(
            f"deficiency shot ({side}) overflowed before eps={eps[-1]:g}: divergent"
        )
        return DeficiencyVerdict(
            side=side,
            gamma=gamma,
            index=0,
            masses=masses,
            increment_ratio=None,
            truncated=True,
        )

    m1, m2, m3 = masses
    first, second = m2 - m1, m3 - m2
    ratio = second / first if first > 0.0 else (0.0 if second <= 0.0 else math.inf)
    if ratio <= tol.convergent_ratio:
        index = 1
    elif ratio >= tol.divergent_ratio:
        index = 0
    else:
        raise IndeterminateError(
            f"deficiency index indeterminate: increment ratio {ratio:.3f}",
            {"masses": masses, "eps": eps, "ratio": ratio, "total": total},
        )
    logger.debug(f"deficiency ({side}): masses {masses}, ratio {ratio:.4f} -> {index}")
    return DeficiencyVerdict(
        side=side,
        gamma=gamma,
        index=index,
        masses=masses,
        increment_ratio=ratio,
        truncated=sol.truncated,
    )


class OperatorDeficiency(BaseModel):
    model_config = ConfigDict(frozen=True)

    index: int = Field(..., description="k in the deficiency indices (k, k)")
    sides: list[DeficiencyVerdict]

    def side_index(self, side: Side) -> int | None:
        for verdict in self.sides:
            if verdict.side == side:
                return verdict.index
        return None


def operator_deficiency(
    c: Coefficient,
    gamma: float = 1.0,
    tol: Tolerances = DEFAULT_TOLERANCES,
) -> OperatorDeficiency:
    """
    Deficiency index of the operator around its degeneracy from one shot per
    side. On the line the index is 1 only when both sides are, the rule
    classify applies to nu in L2.
    """
    domain = c.domain
    if isinstance(domain, Interval):
        raise CoefficientError(
            "interval indices come from the endpoint classification, not shooting"
        )
    sides: list[Side] = (
        [domain.side] if isinstance(domain, HalfLine) else ["left", "right"]
    )
    verdicts = [deficiency_index(c, side, gamma, tol) for side in sides]
    return OperatorDeficiency(index=min(v.index for v in verdicts), sides=verdicts)


def deficiency_solution(
    c: Coefficient,
    side: Side,
    gamma: float,
    length: float,
    sample_distances: np.ndarray | None = None,
    tol: Tolerances = DEFAULT_TOLERANCES,
) -> ShootingSolution:
    """
    eta_gamma on (0, length) with eta(length) = 0, normalised to unit L2 norm,
    shot from the truncation end toward the origin.
    """
    origin = default_origin(c, tol)
    sigma = 1.0 if side == "right" else -1.0
    if sample_distances is None:
        sample_distances = np.geomspace(tol.nu_window_low, length, 400)
    d = np.asarray(sample_distances, dtype=float)
    d_min = min(float(d[d > 0].min()), tol.nu_window_low)
    d = np.unique(np.concatenate([d[d > 0], [d_min, length]]))
    sol = integrate_deficiency(
        c,
        gamma,
        origin + sigma * length,
        (0.0, -sigma),
        origin + sigma * d_min,
        sample_points=origin + sigma * d,
        origin=origin,
        tol=tol,
    )
    norm = math.sqrt(float(sol.l2_partial.max(initial=0.0)))
    if norm == 0.0 or not math.isfinite(norm):
        raise IndeterminateError(
            "deficiency solution could not be normalised", {"norm": norm}
        )
    return sol.model_copy(
        update={
            "psi": sol.psi / norm,
            "flux": sol.flux / norm,
            "l2_partial": sol.l2_partial / norm**2,
        }
    )


def deficiency_vector(
    c: Coefficient, gamma: float, mesh: Mesh, tol: Tolerances = DEFAULT_TOLERANCES
) -> np.ndarray:
    """
    eta_gamma sampled at the cell centres. On a line the two halves are scaled
    by the flux at the origin, the direction of a jump at the interface.
    """
    centers = mesh.centers
    geometry = mesh.geometry
    origin = default_origin(c, tol)
    if isinstance(geometry, LineGeometry):
        out = np.empty_like(centers)
        k = mesh.interface
        length = mesh.truncation_length
        for side, sl in (("left", slice(0, k)), ("right", slice(k, None))):
            d = np.abs(centers[sl] - origin)
            sol = deficiency_solution(c, side, gamma, length, d, tol)
            values = _by_distance(sol, d)
            edge = int(np.argmin(np.abs(sol.grid - origin)))
            out[sl] = values / sol.flux[edge]
        return out
    if not isinstance(geometry, HalfLineGeometry):
        raise CoefficientError("deficiency vectors need a line or half-line mesh")
    d = np.abs(centers - origin)
    sol = deficiency_solution(c, geometry.side, gamma, mesh.truncation_length, d, tol)
    return _by_distance(sol, d)


def _by_distance(sol: ShootingSolution, d: np.ndarray) -> np.ndarray:
    dist = np.abs(sol.grid - sol.origin)
    order = np.argsort(dist)
    return np.interp(d, dist[order], sol.psi[order])


class EtaProperties(BaseModel):
    model_config = ConfigDict(frozen=True)

    positive: bool
    non_increasing: bool
    tail_exponent: float | None
    critical_lp_exponent: float

    def lp_member(self, p: float) -> bool:
        if math.isinf(p):
            return math.isinf(self.critical_lp_exponent) and (
                self.tail_exponent is None or self.tail_exponent <= 1e-2
            )
        return p < self.critical_lp_exponent


def eta_properties(sol: ShootingSolution, profile=None) -> EtaProperties:
    """
    Sign and monotonicity of eta on the sample grid. Lp membership compares
    p with the critical exponent of nu when a HarmonicProfile is given, with
    the fitted tail exponent otherwise.
    """
    psi = sol.psi
    scale = float(np.max(np.abs(psi), initial=0.0)) or 1.0
    by_distance = np.argsort(np.abs(sol.grid - sol.origin))
    ordered = psi[by_distance]
    if profile is not None:
        critical = profile.critical_lp_exponent
    elif sol.lp_tail_exponent is not None and sol.lp_tail_exponent > 1e-2:
        critical = 1.0 / sol.lp_tail_exponent
    else:
        critical = math.inf
    return EtaProperties(
        positive=bool(np.all(psi >= -1e-12 * scale)),
        non_increasing=bool(np.all(np.diff(ordered) <= 1e-10 * scale)),
        tail_exponent=sol.lp_tail_exponent,
        critical_lp_exponent=critical,
    )


class BlowupResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    monotone_square: bool
    growth_factor: float
    x0: float
    x_first: float
    X: float
    wronskian_drift: float = Field(
        ..., description="Relative variation of psi1 F2 - F1 psi2 over the grid"
    )


def wronskian(a: ShootingSolution, b: ShootingSolution) -> np.ndarray:
    """c (psi_a psi_b' - psi_a' psi_b) = psi_a F_b - F_a psi_b on a shared grid."""
    return a.psi * b.flux - a.flux * b.psi


def blowup_check(
    c: Coefficient,
    gamma_boundary: float | str,
    X: float,
    tol: Tolerances = DEFAULT_TOLERANCES,
    n_samples: int = 400,
) -> BlowupResult:
    """
    Solves (c psi')' = psi on (x0, X) from psi'(x0) = gamma_boundary psi(x0), or
    psi(x0) = 0 for gamma_boundary = "dirichlet", and returns psi(X)^2 / psi(x1)^2
    with x1 the first sample where psi does not vanish.

    Only the right far field x -> +inf is examined; the growth hypothesis is
    the exponent of c at +inf being at most 2.
    """
    if math.isfinite(c.bounds[1]):
        raise CoefficientError(
            f"blow-up check needs a right far field, domain ends at {c.bounds[1]}"
        )
    delta_inf, _ = c.exponent_at_infinity("right", x_max=tol.mu_x_max)
    if delta_inf > 2.0:
        raise HypothesisViolatedError(delta_inf)
    if isinstance(gamma_boundary, str):
        if gamma_boundary != "dirichlet":
            raise CoefficientError(f"unknown boundary flag {gamma_boundary!r}")
    elif gamma_boundary < 0:
        raise CoefficientError(f"gamma_boundary must be >= 0, got {gamma_boundary}")

    lo, _ = c.bounds
    x0 = max(0.0, lo)
    if float(c.eval(x0)) <= 0.0:
        x0 += 1e-6
    if X <= x0:
        raise CoefficientError(f"X must exceed x0={x0}, got {X}")
    c0 = float(c.eval(x0))
    if gamma_boundary == "dirichlet":
        seed = (0.0, 1.0)
        other = (1.0, 0.0)
    else:
        seed = (1.0, c0 * gamma_boundary)
        other = (0.0, 1.0)

    origin = 0.0 if x0 > 0.0 else x0 - 1.0
    if x0 > 0.0 and X > 10.0 * x0:
        samples = np.geomspace(x0, X, n_samples)
    else:
        samples = np.linspace(x0, X, n_samples)
    sol = integrate_deficiency(c, 1.0, x0, seed, X, samples, origin=origin, tol=tol)
    partner = integrate_deficiency(
        c, 1.0, x0, other, X, samples, origin=origin, tol=tol
    )

    nonzero = np.flatnonzero(np.abs(sol.psi) > 0.0)
    first = int(nonzero[0])
    growth = float(sol.psi[-1] ** 2 / sol.psi[first] ** 2)
    w = wronskian(sol, partner)
    n = min(w.size, sol.grid.size, partner.grid.size)
    w = w[:n]
    drift = float(np.max(np.abs(w - w[0])) / max(abs(w[0]), 1e-300))
    square = sol.psi[first:] ** 2
    monotone = bool(np.all(np.diff(square) >= -1e-12 * square.max()))
    logger.debug(f"blow-up check: growth {growth:.4e} at X={X}, monotone={monotone}")
    return BlowupResult(
        monotone_square=monotone,
        growth_factor=growth,
        x0=x0,
        x_first=float(sol.grid[first]),
        X=float(sol.grid[-1]),
        wronskian_drift=drift,
    )
