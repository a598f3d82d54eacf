"""
Harmonic integrals nu, mu and the trichotomy of extensions.

nu(x) = int_x^1 ds / c(s) and mu(x) = int_1^x s ds / c(s) are measured from the
degeneracy (reflected on the left side). Integrability of nu at the degeneracy
and of mu at infinity is decided from the local exponent of c, never from a
diverging quadrature; quadrature only supplies the reported values.
"""

import logging
import math
from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy.optimize import brentq

from .coeff import Coefficient, HalfLine, Interval, Line, Side
from .errors import (
    CoefficientError,
    CutoffConstructionError,
    PositiveCapacityError,
    VanishingCoefficientError,
)
from .numerics.quadrature import log_quad
from .settings import DEFAULT_TOLERANCES, Tolerances

logger = logging.getLogger(__name__)

Case = Literal["I", "II", "III"]
LP_EXPONENTS = (3.0, 4.0, 6.0, math.inf)


class HarmonicProfile(BaseModel):
    """nu near one side of a degeneracy and mu toward infinity on that side."""

    model_config = ConfigDict(frozen=True, ser_json_inf_nan="constants")

    side: Side
    origin: float = Field(..., description="Location of the degeneracy")
    anchor: float = Field(..., description="Upper integration limit of nu")
    nu_grid: list[float] = Field(..., description="Distances from the origin")
    nu_values: list[float]
    nu_l2_quadrature: float = Field(..., description="int_eps^anchor nu^2")
    nu_l2_tail: float = Field(..., description="Exponent-based estimate of int_0^eps")
    nu_l2_norm_sq: float = Field(..., description="Sum of both parts or +inf")
    nu_sup: float
    nu_in_l2: bool
    nu_in_linf: bool
    mu_grid: list[float] = Field(default_factory=list)
    mu_values: list[float] = Field(default_factory=list)
    mu_sup: float | None = None
    mu_in_linf: bool | None = None
    exponent_estimate: float = Field(..., description="Local exponent of c")
    exponent_exact: bool
    exponent_at_infinity: float | None = None
    estimated: bool = Field(False, description="Verdict near a critical exponent")
    critical_lp_exponent: float = Field(
        ..., description="nu is in Lp(0,1) exactly for p below this value"
    )
    boundary_label: str

    @model_validator(mode="after")
    def _linf_implies_l2(self) -> "HarmonicProfile":
        if self.nu_in_linf and not self.nu_in_l2:
            raise ValueError("nu in L-infinity but not in L2")
        return self

    def nu_in_lp(self, p: float) -> bool:
        if math.isinf(p):
            return self.nu_in_linf
        return p < self.critical_lp_exponent


class ExtensionFamily(BaseModel):
    model_config = ConfigDict(frozen=True)

    name: str
    boundary_condition: str
    parameters: str
    submarkovian: str = Field(..., description="Rule selecting submarkovian members")
    realized: bool = Field(..., description="Has a discrete realization here")
    friedrichs: bool = False


class ClassificationReport(BaseModel):
    model_config = ConfigDict(frozen=True, ser_json_inf_nan="constants")

    geometry: Literal["line", "half_line", "interval"]
    case: Case
    essentially_self_adjoint: bool
    deficiency_indices: tuple[int, int]
    unique_submarkovian: bool
    extension_menu: list[ExtensionFamily]
    growth_inaccessible_at_infinity: bool
    lp_resolvent_bounded: dict[str, bool]
    estimated: bool
    profiles: list[HarmonicProfile]

    @model_validator(mode="after")
    def _consistent(self) -> "ClassificationReport":
        if (self.case == "I") != self.essentially_self_adjoint:
            raise ValueError("case I must coincide with essential self-adjointness")
        if self.essentially_self_adjoint != (self.deficiency_indices == (0, 0)):
            raise ValueError("essential self-adjointness needs indices (0,0)")
        if self.unique_submarkovian != (self.case in ("I", "II")):
            raise ValueError("unique submarkovian extension exactly in cases I/II")
        return self

    def profile(self, side: Side) -> HarmonicProfile:
        for p in self.profiles:
            if p.side == side:
                return p
        raise KeyError(side)


class SmoothCutoff(BaseModel):
    """Twice differentiable cutoff phi_n and the L1 norm of (c phi_n')'."""

    model_config = ConfigDict(frozen=True)

    side: Side
    n: float
    nu_n: float
    positions: list[float]
    phi: list[float]
    flux_divergence_l1: float = Field(..., description="||(c phi_n')'||_1")
    xi_flux_divergence_l1: float = Field(..., description="||(c xi_n')'||_1 = 2/nu_n")
    leading_l1: float = Field(..., description="2 / nu_n")
    scaled_l1: float = Field(..., description="nu_n * ||(c phi_n')'||_1")


def _point(origin: float, side: Side, distance):
    return origin + distance if side == "right" else origin - distance


def default_origin(c: Coefficient, tol: Tolerances = DEFAULT_TOLERANCES) -> float:
    """The degeneracy the classification is built around."""
    domain = c.domain
    if isinstance(domain, HalfLine):
        return domain.origin
    if isinstance(domain, Interval):
        raise CoefficientError("an interval has two endpoints; pass origin explicitly")
    points = c.zero_set(tol.plateau_rel_tol).points
    return points[0] if len(points) == 1 else 0.0


def _segment(c: Coefficient, origin: float, side: Side, d1: float, d2: float, rtol):
    """int of 1/c between the distances d1 < d2 on one side of origin."""
    if side == "right":
        return c.inverse_integral(origin + d1, origin + d2, rtol)
    return c.inverse_integral(origin - d2, origin - d1, rtol)


def _check_positive(c: Coefficient, origin: float, side: Side, d1: float, d2: float):
    lo, hi = sorted((_point(origin, side, d1), _point(origin, side, d2)))
    zs = c.model.zeros(lo, hi, tol=1e-12)
    inside = [p for p in zs.points if lo < p < hi and p != origin]
    if inside or any(b > lo and a < hi for a, b in zs.plateaus):
        raise VanishingCoefficientError(lo, hi)


def nu(
    c: Coefficient,
    side: Side,
    x: float,
    origin: float | None = None,
    anchor: float | None = None,
    tol: Tolerances = DEFAULT_TOLERANCES,
) -> float:
    """int_x^anchor ds / c(origin +- s); closed form for exact models."""
    origin = default_origin(c, tol) if origin is None else origin
    anchor = tol.harmonic_anchor if anchor is None else anchor
    if x >= anchor:
        return 0.0
    _check_positive(c, origin, side, x, anchor)
    return _segment(c, origin, side, x, anchor, tol.quad_rtol)


def mu(
    c: Coefficient,
    side: Side,
    x: float,
    origin: float | None = None,
    anchor: float | None = None,
    tol: Tolerances = DEFAULT_TOLERANCES,
) -> float:
    """int_anchor^x s ds / c(origin +- s)."""
    origin = default_origin(c, tol) if origin is None else origin
    anchor = tol.harmonic_anchor if anchor is None else anchor
    if x <= anchor:
        return 0.0
    _check_positive(c, origin, side, anchor, x)
    return _mu_segment(c, origin, side, anchor, x, tol.quad_rtol)


def _mu_segment(c, origin, side, s1, s2, rtol) -> float:
    if origin == 0.0:
        if side == "right":
            return c.moment_integral(s1, s2, rtol)
        return c.moment_integral(-s2, -s1, rtol)
    return log_quad(
        lambda s: s / float(c.eval(_point(origin, side, s))), s1, s2, rtol=rtol
    )


def _near_critical(value: float, criticals: tuple[float, ...], band: float) -> bool:
    return any(abs(value - k) < band for k in criticals)


def membership(
    c: Coefficient,
    side: Side,
    origin: float | None = None,
    anchor: float | None = None,
    tol: Tolerances = DEFAULT_TOLERANCES,
    toward_infinity: bool | None = None,
) -> HarmonicProfile:
    """Decides nu in L2/L-infinity near origin and mu in L-infinity at infinity."""
    origin = default_origin(c, tol) if origin is None else origin
    anchor = tol.harmonic_anchor if anchor is None else anchor
    lo, hi = c.bounds
    if toward_infinity is None:
        toward_infinity = math.isinf(hi if side == "right" else lo)

    delta, exact = c.local_exponent(
        origin,
        side,
        d_max=anchor,
        decades=tol.exponent_decades,
        iqr_max=tol.exponent_iqr_max,
    )
    nu_in_linf = delta < 1.0
    nu_in_l2 = delta < 1.5
    estimated = not exact and _near_critical(delta, (1.0, 1.5), tol.borderline_band)

    eps = min(tol.nu_window_low, anchor * 1e-3)
    n_grid = int(round(math.log10(anchor / eps) * tol.points_per_decade)) + 1
    grid = np.geomspace(eps, anchor, n_grid)
    _check_positive(c, origin, side, eps, anchor)
    segments = np.array(
        [
            _segment(c, origin, side, grid[k], grid[k + 1], tol.quad_rtol)
            for k in range(n_grid - 1)
        ]
    )
    nu_values = np.append(np.cumsum(segments[::-1])[::-1], 0.0)

    def nu_at(s: float) -> float:
        return _segment(c, origin, side, s, anchor, tol.quad_rtol)

    nu_l2_quad = log_quad(lambda s: nu_at(s) ** 2, eps, anchor, rtol=tol.quad_rtol)
    nu_eps = float(nu_values[0])
    if nu_in_linf:
        nu_sup = _segment(c, origin, side, 0.0, anchor, tol.quad_rtol)
        tail = eps * nu_sup**2
    elif abs(delta - 1.0) < 1e-12:
        kappa = eps / float(c.eval(_point(origin, side, eps)))
        nu_sup = math.inf
        tail = eps * (nu_eps**2 + 2.0 * nu_eps * kappa + 2.0 * kappa**2)
    elif nu_in_l2:
        nu_sup = math.inf
        tail = eps * nu_eps**2 / (3.0 - 2.0 * delta)
    else:
        nu_sup = math.inf
        tail = math.inf
    nu_l2 = nu_l2_quad + tail if nu_in_l2 else math.inf

    mu_grid: list[float] = []
    mu_values: list[float] = []
    mu_sup = None
    mu_in_linf = None
    delta_inf = None
    if toward_infinity:
        delta_inf, exact_inf = c.exponent_at_infinity(
            side, x_max=tol.mu_x_max, iqr_max=tol.exponent_iqr_max
        )
        n_mu = int(round(math.log10(tol.mu_x_max / anchor) * tol.points_per_decade))
        m_grid = np.geomspace(anchor, tol.mu_x_max, n_mu + 1)
        pieces = [
            _mu_segment(c, origin, side, m_grid[k], m_grid[k + 1], tol.quad_rtol)
            for k in range(m_grid.size - 1)
        ]
        mu_arr = np.concatenate([[0.0], np.cumsum(pieces)])
        mu_in_linf = delta_inf > 2.0
        if mu_in_linf:
            x_end = float(m_grid[-1])
            c_end = float(c.eval(_point(origin, side, x_end)))
            mu_sup = float(mu_arr[-1]) + x_end * (x_end / c_end) / (delta_inf - 2.0)
        else:
            mu_sup = math.inf
        estimated = estimated or (
            not exact_inf and _near_critical(delta_inf, (2.0,), tol.borderline_band)
        )
        mu_grid = m_grid.tolist()
        mu_values = mu_arr.tolist()

    if estimated:
        logger.warning(
            f"exponent {delta:.4f} at x={origin} ({side}) is close to a critical "
            "value; verdict is estimated"
        )

    label = "inaccessible" if not nu_in_linf else "accessible (positive capacity)"
    if mu_in_linf is not None:
        label += "; infinity " + ("accessible" if mu_in_linf else "inaccessible")

    return HarmonicProfile(
        side=side,
        origin=origin,
        anchor=anchor,
        nu_grid=grid.tolist(),
        nu_values=nu_values.tolist(),
        nu_l2_quadrature=nu_l2_quad,
        nu_l2_tail=tail,
        nu_l2_norm_sq=nu_l2,
        nu_sup=nu_sup,
        nu_in_l2=nu_in_l2,
        nu_in_linf=nu_in_linf,
        mu_grid=mu_grid,
        mu_values=mu_values,
        mu_sup=mu_sup,
        mu_in_linf=mu_in_linf,
        exponent_estimate=delta,
        exponent_exact=exact,
        exponent_at_infinity=delta_inf,
        estimated=estimated,
        critical_lp_exponent=1.0 / (delta - 1.0) if delta > 1.0 else math.inf,
        boundary_label=label,
    )


def _menu(geometry: str, case: Case) -> list[ExtensionFamily]:
    if case == "I":
        return [
            ExtensionFamily(
                name="closure",
                boundary_condition="none",
                parameters="none",
                submarkovian="always",
                realized=True,
                friedrichs=True,
            )
        ]
    if geometry == "line":
        friedrichs = (
            ExtensionFamily(
                name="jump-Neumann",
                boundary_condition="(c u')(0+) = (c u')(0-) = 0, sides decoupled",
                parameters="none",
                submarkovian="always",
                realized=True,
                friedrichs=True,
            )
            if case == "II"
            else ExtensionFamily(
                name="flux continuity",
                boundary_condition="u(0+) = u(0-), (c u')(0+) = (c u')(0-)",
                parameters="none",
                submarkovian="always",
                realized=True,
                friedrichs=True,
            )
        )
        family = ExtensionFamily(
            name="line jump",
            boundary_condition="beta [c u'] = alpha [u] at 0",
            parameters="(alpha, beta)",
            submarkovian="alpha == 0" if case == "II" else "alpha*beta >= 0",
            realized=case == "III",
        )
        return [friedrichs, family]

    friedrichs = ExtensionFamily(
        name="Neumann" if case == "II" else "Dirichlet",
        boundary_condition="(c u')(0+) = 0" if case == "II" else "u(0+) = 0",
        parameters="none",
        submarkovian="always",
        realized=True,
        friedrichs=True,
    )
    family = ExtensionFamily(
        name="Robin",
        boundary_condition="beta (c u')(0+) = alpha u(0+)",
        parameters="(alpha, beta)",
        submarkovian="alpha == 0" if case == "II" else "alpha*beta >= 0",
        realized=case == "III",
    )
    return [friedrichs, family]


def _check_zero_set(c: Coefficient, allowed: list[float], tol: Tolerances) -> None:
    zs = c.zero_set(tol.plateau_rel_tol)
    stray = [p for p in zs.points if not any(abs(p - a) <= 1e-12 for a in allowed)]
    if stray or zs.plateaus:
        raise CoefficientError(
            f"coefficient vanishes at {stray or zs.plateaus} away from {allowed}; "
            "decompose the domain first"
        )


def classify(
    c: Coefficient, tol: Tolerances = DEFAULT_TOLERANCES
) -> ClassificationReport:
    """Trichotomy of the operator around its declared degeneracy."""
    domain = c.domain
    if isinstance(domain, Interval):
        return classify_endpoints(c, domain.a, domain.b, tol)

    origin = default_origin(c, tol)
    _check_zero_set(c, [origin], tol)

    if isinstance(domain, HalfLine):
        profile = membership(c, domain.side, origin=origin, tol=tol)
        return _assemble_report("half_line", [profile])

    profiles = [
        membership(c, "left", origin=origin, tol=tol),
        membership(c, "right", origin=origin, tol=tol),
    ]
    return _assemble_report("line", profiles)


def classify_endpoints(
    c: Coefficient,
    lower: float,
    upper: float,
    tol: Tolerances = DEFAULT_TOLERANCES,
) -> ClassificationReport:
    """Endpoint-wise classification of (lower, upper); either end may be infinite."""
    if not (math.isfinite(lower) or math.isfinite(upper)):
        raise CoefficientError("classify_endpoints needs at least one finite endpoint")
    zs = c.model.zeros(lower, upper, tol=tol.plateau_rel_tol)
    stray = [p for p in zs.points if lower < p < upper]
    if stray or any(b > lower and a < upper for a, b in zs.plateaus):
        raise CoefficientError(
            f"coefficient vanishes inside ({lower}, {upper}); "
            "decompose the domain first"
        )
    anchor = tol.harmonic_anchor
    if math.isfinite(upper - lower):
        anchor = min(anchor, 0.5 * (upper - lower))
    profiles = []
    if math.isfinite(lower):
        profiles.append(
            membership(
                c,
                "right",
                origin=lower,
                anchor=anchor,
                tol=tol,
                toward_infinity=math.isinf(upper),
            )
        )
    if math.isfinite(upper):
        profiles.append(
            membership(
                c,
                "left",
                origin=upper,
                anchor=anchor,
                tol=tol,
                toward_infinity=math.isinf(lower),
            )
        )
    return _assemble_report("interval", profiles)


def _assemble_report(
    geometry: str, profiles: list[HarmonicProfile]
) -> ClassificationReport:
    in_l2 = [p.nu_in_l2 for p in profiles]
    in_linf = [p.nu_in_linf for p in profiles]

    if geometry == "line":
        # nu = nu+ v nu-: both sides must be integrable
        if not all(in_l2):
            case: Case = "I"
        elif all(in_linf):
            case = "III"
        else:
            case = "II"
        k = 0 if case == "I" else 1
    else:
        if any(in_linf):
            case = "III"
        elif any(in_l2):
            case = "II"
        else:
            case = "I"
        k = sum(in_l2)

    mu_flags = [p.mu_in_linf for p in profiles if p.mu_in_linf is not None]
    growth = bool(mu_flags) and not any(mu_flags)

    lp = {}
    for p_exp in LP_EXPONENTS:
        key = "inf" if math.isinf(p_exp) else f"{p_exp:g}"
        lp[key] = all(p.nu_in_lp(p_exp) for p in profiles)

    report = ClassificationReport(
        geometry=geometry,
        case=case,
        essentially_self_adjoint=case == "I",
        deficiency_indices=(k, k),
        unique_submarkovian=case in ("I", "II"),
        extension_menu=_menu(geometry, case),
        growth_inaccessible_at_infinity=growth,
        lp_resolvent_bounded=lp,
        estimated=any(p.estimated for p in profiles),
        profiles=profiles,
    )
    logger.info(
        f"classified {geometry}: case {case}, deficiency {report.deficiency_indices}, "
        f"exponents {[round(p.exponent_estimate, 4) for p in profiles]}"
    )
    return report


def _degenerate_side(c: Coefficient, side: Side, tol: Tolerances) -> float:
    origin = default_origin(c, tol)
    delta, _ = c.local_exponent(
        origin, side, d_max=tol.harmonic_anchor, iqr_max=tol.exponent_iqr_max
    )
    if delta < 1.0:
        raise PositiveCapacityError(side)
    return origin


def cutoff_energy(
    c: Coefficient, side: Side, n: float, tol: Tolerances = DEFAULT_TOLERANCES
) -> float:
    """
    Energy int c |chi_n'|^2 of the cutoff chi_n = nu / nu(1/n) on (1/n, 1).

    Equals 1 / nu(1/n) exactly; the value returned is the quadrature.
    """
    if n < 2:
        raise CoefficientError(f"cutoff index n must be >= 2, got {n}")
    origin = _degenerate_side(c, side, tol)
    anchor = tol.harmonic_anchor
    a = anchor / n
    nu_n = nu(c, side, a, origin=origin, tol=tol)

    def energy_density(s: float) -> float:
        cs = float(c.eval(_point(origin, side, s)))
        chi_slope = 1.0 / (cs * nu_n)
        return cs * chi_slope**2

    energy = log_quad(energy_density, a, anchor, rtol=1e-12)
    logger.debug(f"cutoff energy n={n:g}: {energy:.6e} (nu_n={nu_n:.6e})")
    return energy


def smooth_cutoff_l1(
    c: Coefficient,
    side: Side,
    n: float,
    tol: Tolerances = DEFAULT_TOLERANCES,
    samples: int = 200,
) -> SmoothCutoff:
    """
    Builds phi_n = 0 on [0, 1/n], 1 beyond 1, C^1 in between, and returns
    ||(c phi_n')'||_1.

    xi = (1 - chi_n)^2 has (c xi')' = 2 / (c nu_n^2); the linear correction of xi'
    makes phi_n' vanish at 1 and the rescale by zeta(1) makes phi_n(1) = 1.
    """
    if n < 2:
        raise CoefficientError(f"cutoff index n must be >= 2, got {n}")
    origin = _degenerate_side(c, side, tol)
    anchor = tol.harmonic_anchor
    a = anchor / n
    width = anchor - a
    nu_n = nu(c, side, a, origin=origin, tol=tol)
    sign = 1.0 if side == "right" else -1.0

    def c_at(s: float) -> float:
        return float(c.eval(_point(origin, side, s)))

    def dc_at(s: float) -> float:
        return sign * c.eval_derivative(_point(origin, side, s))

    xi_slope_end = 2.0 / (c_at(anchor) * nu_n)
    zeta_end = 1.0 - xi_slope_end * width / 2.0
    if zeta_end <= 0.0:
        raise CutoffConstructionError(
            f"n={n:g} too small: zeta_n(1) = {zeta_end:.3e} is not positive"
        )

    def flux_divergence(s: float) -> float:
        leading = 2.0 / (c_at(s) * nu_n**2)
        correction = xi_slope_end * (dc_at(s) * (s - a) + c_at(s)) / width
        return (leading - correction) / zeta_end

    probe = np.geomspace(a, anchor, 2001)
    f = np.array([flux_divergence(s) for s in probe])
    cuts = [a]
    for k in np.flatnonzero(np.sign(f[:-1]) * np.sign(f[1:]) < 0):
        cuts.append(brentq(flux_divergence, probe[k], probe[k + 1], xtol=1e-15))
    cuts.append(anchor)
    l1 = sum(
        abs(log_quad(flux_divergence, lo, hi, rtol=1e-9))
        for lo, hi in zip(cuts[:-1], cuts[1:])
        if hi > lo
    )
    xi_l1 = log_quad(lambda s: 2.0 / (c_at(s) * nu_n**2), a, anchor, rtol=1e-12)

    distances = np.concatenate(
        [[0.0, 0.5 * a], np.geomspace(a, anchor, samples), [1.5 * anchor, 2.0 * anchor]]
    )
    phi = []
    for s in distances:
        if s <= a:
            phi.append(0.0)
        elif s >= anchor:
            phi.append(1.0)
        else:
            i_s = nu_n - nu(c, side, s, origin=origin, tol=tol)
            xi = (i_s / nu_n) ** 2
            zeta = xi - xi_slope_end * (s - a) ** 2 / (2.0 * width)
            phi.append(zeta / zeta_end)

    logger.debug(f"smooth cutoff n={n:g}: ||(c phi')'||_1 = {l1:.6e}")
    return SmoothCutoff(
        side=side,
        n=float(n),
        nu_n=nu_n,
        positions=[float(_point(origin, side, s)) for s in distances],
        phi=phi,
        flux_divergence_l1=l1,
        xi_flux_divergence_l1=xi_l1,
        leading_l1=2.0 / nu_n,
        scaled_l1=nu_n * l1,
    )
