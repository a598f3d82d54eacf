"""
Coefficient models c(x) >= 0 of the operator -(c u')' and their degeneracy data.

A Coefficient couples a model (PowerLaw, Constant, Polynomial, Tabulated,
Piecewise) with a Domain (Line, HalfLine, Interval). Models are immutable and
evaluate vectorised on numpy arrays. Exact models also report local exponents
at their zeros and closed forms of the integrals of 1/c and |s|/c.
"""

import logging
import math
from typing import Annotated, Literal, Union

import numpy as np
from numpy.polynomial import polynomial as poly
from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    PrivateAttr,
    field_validator,
    model_validator,
)
from scipy.interpolate import PchipInterpolator

from .errors import (
    CoefficientDomainError,
    CoefficientError,
    IndeterminateError,
    JointDerivativeError,
    VanishingCoefficientError,
)
from .numerics.quadrature import QuadratureFailure, quad

logger = logging.getLogger(__name__)

Side = Literal["left", "right"]


# Domains


class Line(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: Literal["line"] = "line"

    @property
    def bounds(self) -> tuple[float, float]:
        return (-math.inf, math.inf)


class HalfLine(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: Literal["half_line"] = "half_line"
    side: Side = Field("right", description="Which side of the origin is kept")
    origin: float = Field(0.0, description="Finite endpoint of the half-line")

    @property
    def bounds(self) -> tuple[float, float]:
        if self.side == "right":
            return (self.origin, math.inf)
        return (-math.inf, self.origin)


class Interval(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: Literal["interval"] = "interval"
    a: float
    b: float

    @model_validator(mode="after")
    def _ordered(self) -> "Interval":
        if not (math.isfinite(self.a) and math.isfinite(self.b) and self.a < self.b):
            raise ValueError(f"interval needs finite a < b, got ({self.a}, {self.b})")
        return self

    @property
    def bounds(self) -> tuple[float, float]:
        return (self.a, self.b)


Domain = Annotated[Union[Line, HalfLine, Interval], Field(discriminator="kind")]


class ZeroSet(BaseModel):
    """Isolated zeros and plateaus (closed intervals where c == 0)."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    points: list[float] = Field(default_factory=list, description="Isolated zeros")
    plateaus: list[tuple[float, float]] = Field(
        default_factory=list, description="Closed intervals where c vanishes"
    )

    @model_validator(mode="after")
    def _disjoint_and_sorted(self) -> "ZeroSet":
        if self.points != sorted(self.points):
            raise ValueError("zero points must be sorted")
        if self.plateaus != sorted(self.plateaus):
            raise ValueError("plateaus must be sorted")
        for lo, hi in self.plateaus:
            if lo > hi:
                raise ValueError(f"plateau [{lo}, {hi}] is reversed")
            if any(lo <= p <= hi for p in self.points):
                raise ValueError(f"zero point inside plateau [{lo}, {hi}]")
        return self

    @property
    def is_empty(self) -> bool:
        return not self.points and not self.plateaus

    def features(self) -> list[tuple[float, float]]:
        """Points as degenerate intervals merged with plateaus, left to right."""
        items = [(p, p) for p in self.points] + list(self.plateaus)
        return sorted(items)


def merge_zero_sets(parts: list[ZeroSet]) -> ZeroSet:
    points = sorted({p for z in parts for p in z.points})
    plateaus: list[list[float]] = []
    for lo, hi in sorted(pl for z in parts for pl in z.plateaus):
        if plateaus and lo <= plateaus[-1][1]:
            plateaus[-1][1] = max(plateaus[-1][1], hi)
        else:
            plateaus.append([lo, hi])
    points = [p for p in points if not any(lo <= p <= hi for lo, hi in plateaus)]
    return ZeroSet(points=points, plateaus=[(lo, hi) for lo, hi in plateaus])


class _Model(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    def values(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def derivative(self, x: float, side: Side | None = None) -> float:
        raise NotImplementedError

    def zeros(self, lower: float, upper: float, tol: float) -> ZeroSet:
        raise NotImplementedError

    def exponent(self, point: float, side: Side) -> float | None:
        """Exact local exponent of c at point from the given side, if known."""
        return None

    def exponent_at_infinity(self, side: Side) -> float | None:
        return None

    def inverse_integral(self, a: float, b: float) -> float | None:
        """Closed form of int_a^b 1/c, or None."""
        return None

    def moment_integral(self, a: float, b: float) -> float | None:
        """Closed form of int_a^b |s|/c(s) ds on one side of 0, or None."""
        return None


def _power_integral(amplitude: float, exponent: float, t1: float, t2: float) -> float:
    """int_{t1}^{t2} t^(-exponent) / amplitude dt for 0 <= t1 <= t2."""
    if t1 >= t2:
        return 0.0
    if exponent == 1.0:
        if t1 == 0.0:
            return math.inf
        return math.log(t2 / t1) / amplitude
    if exponent > 1.0 and t1 == 0.0:
        return math.inf
    if math.isinf(t2):
        if exponent > 1.0:
            return t1 ** (1.0 - exponent) / (amplitude * (exponent - 1.0))
        return math.inf
    return (t2 ** (1.0 - exponent) - t1 ** (1.0 - exponent)) / (
        amplitude * (1.0 - exponent)
    )


def _slope_at_zero(amplitude: float, exponent: float) -> float:
    if exponent == 0.0 or exponent > 1.0:
        return 0.0
    if exponent == 1.0:
        return amplitude
    return math.inf


class PowerLaw(_Model):
    """c(x) = A+ (x-x0)^d+ right of x0 and A- |x-x0|^d- left of it."""

    kind: Literal["power_law"] = "power_law"
    amplitude_left: float = Field(1.0, gt=0, description="A- for x < center")
    exponent_left: float = Field(..., ge=0, description="d- for x < center")
    amplitude_right: float = Field(1.0, gt=0, description="A+ for x > center")
    exponent_right: float = Field(..., ge=0, description="d+ for x > center")
    center: float = Field(0.0, description="Location of the degeneracy")

    @property
    def center_value(self) -> float:
        return min(
            self.amplitude_left * 0.0**self.exponent_left,
            self.amplitude_right * 0.0**self.exponent_right,
        )

    def values(self, x: np.ndarray) -> np.ndarray:
        t = np.asarray(x, dtype=float) - self.center
        d = np.abs(t)
        right = self.amplitude_right * d**self.exponent_right
        left = self.amplitude_left * d**self.exponent_left
        return np.where(t > 0, right, np.where(t < 0, left, self.center_value))

    def derivative(self, x: float, side: Side | None = None) -> float:
        t = x - self.center
        if t > 0:
            return self._right_slope(t)
        if t < 0:
            return self._left_slope(-t)
        right = _slope_at_zero(self.amplitude_right, self.exponent_right)
        left = -_slope_at_zero(self.amplitude_left, self.exponent_left)
        if side == "right":
            return right
        if side == "left":
            return left
        if left != right:
            raise JointDerivativeError(x, left, right)
        return right

    def _right_slope(self, t: float) -> float:
        if self.exponent_right == 0.0:
            return 0.0
        return (
            self.amplitude_right
            * self.exponent_right
            * t ** (self.exponent_right - 1.0)
        )

    def _left_slope(self, t: float) -> float:
        if self.exponent_left == 0.0:
            return 0.0
        slope = self.amplitude_left * self.exponent_left
        return -slope * t ** (self.exponent_left - 1.0)

    def zeros(self, lower: float, upper: float, tol: float) -> ZeroSet:
        if self.center_value == 0.0 and lower <= self.center <= upper:
            return ZeroSet(points=[self.center])
        return ZeroSet()

    def exponent(self, point: float, side: Side) -> float | None:
        if point != self.center:
            return 0.0
        return self.exponent_right if side == "right" else self.exponent_left

    def exponent_at_infinity(self, side: Side) -> float | None:
        return self.exponent_right if side == "right" else self.exponent_left

    def inverse_integral(self, a: float, b: float) -> float | None:
        x0 = self.center
        total = 0.0
        if b > x0:
            total += _power_integral(
                self.amplitude_right, self.exponent_right, max(a, x0) - x0, b - x0
            )
        if a < x0:
            total += _power_integral(
                self.amplitude_left, self.exponent_left, x0 - min(b, x0), x0 - a
            )
        return total

    def moment_integral(self, a: float, b: float) -> float | None:
        if self.center != 0.0:
            return None
        if a >= 0.0:
            return _power_integral(
                self.amplitude_right, self.exponent_right - 1.0, a, b
            )
        if b <= 0.0:
            return _power_integral(
                self.amplitude_left, self.exponent_left - 1.0, -b, -a
            )
        return None


class Constant(_Model):
    kind: Literal["constant"] = "constant"
    value: float = Field(..., ge=0, description="Constant value of c")

    def values(self, x: np.ndarray) -> np.ndarray:
        return np.full_like(np.asarray(x, dtype=float), self.value)

    def derivative(self, x: float, side: Side | None = None) -> float:
        return 0.0

    def zeros(self, lower: float, upper: float, tol: float) -> ZeroSet:
        if self.value == 0.0:
            return ZeroSet(plateaus=[(lower, upper)])
        return ZeroSet()

    def exponent(self, point: float, side: Side) -> float | None:
        return 0.0 if self.value > 0.0 else None

    def exponent_at_infinity(self, side: Side) -> float | None:
        return 0.0 if self.value > 0.0 else None

    def inverse_integral(self, a: float, b: float) -> float | None:
        if self.value == 0.0:
            return math.inf if b > a else 0.0
        return (b - a) / self.value

    def moment_integral(self, a: float, b: float) -> float | None:
        if self.value == 0.0:
            return math.inf if b > a else 0.0
        return abs(b * b - a * a) / (2.0 * self.value)


class Polynomial(_Model):
    """c(x) = sum_k coefficients[k] x^k."""

    kind: Literal["polynomial"] = "polynomial"
    coefficients: list[float] = Field(..., min_length=1, description="Ascending order")

    _roots: list[tuple[float, int]] = PrivateAttr(default_factory=list)

    def model_post_init(self, context) -> None:
        self._roots = self._real_roots()

    def _real_roots(self) -> list[tuple[float, int]]:
        coef = np.trim_zeros(np.asarray(self.coefficients, dtype=float), "b")
        if coef.size == 0:
            return []
        leading = int(np.argmax(coef != 0.0))
        roots: list[tuple[float, int]] = [(0.0, leading)] if leading else []
        rest = coef[leading:]
        if rest.size > 1:
            candidates = sorted(
                r.real
                for r in poly.polyroots(rest)
                if abs(r.imag) <= 1e-6 * max(1.0, abs(r))
            )
            clusters: list[list[float]] = []
            for r in candidates:
                if clusters and abs(r - clusters[-1][-1]) <= 1e-5 * max(1.0, abs(r)):
                    clusters[-1].append(r)
                else:
                    clusters.append([r])
            for cluster in clusters:
                r = float(np.mean(cluster))
                snapped = round(r, 8)
                if abs(poly.polyval(snapped, coef)) <= abs(poly.polyval(r, coef)):
                    r = snapped
                roots.append((r, len(cluster)))
        return sorted(roots)

    @property
    def roots(self) -> list[tuple[float, int]]:
        """Real roots with multiplicity."""
        return list(self._roots)

    def values(self, x: np.ndarray) -> np.ndarray:
        return poly.polyval(np.asarray(x, dtype=float), self.coefficients)

    def derivative(self, x: float, side: Side | None = None) -> float:
        return float(poly.polyval(x, poly.polyder(self.coefficients)))

    def zeros(self, lower: float, upper: float, tol: float) -> ZeroSet:
        if not np.any(np.asarray(self.coefficients) != 0.0):
            return ZeroSet(plateaus=[(lower, upper)])
        return ZeroSet(points=[r for r, _ in self._roots if lower <= r <= upper])

    def exponent(self, point: float, side: Side) -> float | None:
        for r, multiplicity in self._roots:
            if abs(point - r) <= 1e-9 * max(1.0, abs(r)):
                return float(multiplicity)
        return 0.0

    def exponent_at_infinity(self, side: Side) -> float | None:
        coef = np.trim_zeros(np.asarray(self.coefficients, dtype=float), "b")
        return float(max(coef.size - 1, 0))


class Tabulated(_Model):
    """Monotone-cubic (PCHIP) interpolation of sampled values."""

    kind: Literal["tabulated"] = "tabulated"
    x: list[float] = Field(..., min_length=2, description="Strictly increasing nodes")
    c: list[float] = Field(..., min_length=2, description="Values c_i >= 0")

    _interp: PchipInterpolator | None = PrivateAttr(default=None)

    @model_validator(mode="after")
    def _check_table(self) -> "Tabulated":
        if len(self.x) != len(self.c):
            raise ValueError("x and c must have the same length")
        if np.any(np.diff(self.x) <= 0.0):
            raise ValueError("tabulated nodes must be strictly increasing")
        if np.any(np.asarray(self.c) < 0.0):
            raise ValueError("tabulated values must be non-negative")
        return self

    def model_post_init(self, context) -> None:
        self._interp = PchipInterpolator(self.x, self.c, extrapolate=False)

    def values(self, x: np.ndarray) -> np.ndarray:
        return np.clip(self._interp(np.asarray(x, dtype=float)), 0.0, None)

    def derivative(self, x: float, side: Side | None = None) -> float:
        return float(self._interp.derivative()(x))

    def zeros(self, lower: float, upper: float, tol: float) -> ZeroSet:
        x = np.asarray(self.x)
        c = np.asarray(self.c)
        scale = float(np.median(c)) or float(c.max())
        if scale == 0.0:
            return ZeroSet(plateaus=[(max(lower, x[0]), min(upper, x[-1]))])
        inside = (x >= lower) & (x <= upper)
        mask = (c <= tol * scale) & inside
        points, plateaus = [], []
        i = 0
        while i < x.size:
            if not mask[i]:
                i += 1
                continue
            j = i
            while j + 1 < x.size and mask[j + 1]:
                j += 1
            if j == i:
                points.append(float(x[i]))
            else:
                plateaus.append((float(x[i]), float(x[j])))
            i = j + 1
        return ZeroSet(points=points, plateaus=plateaus)

    def exponent(self, point: float, side: Side) -> float | None:
        if float(self.values(np.asarray(point))) > 0.0:
            return 0.0
        return None

    def difference_quotient(self, point: float, window: float) -> float:
        """Largest |c_i+1 - c_i| / (x_i+1 - x_i) over nodes within window of point."""
        x = np.asarray(self.x)
        c = np.asarray(self.c)
        near = np.abs(x - point) <= window
        idx = np.flatnonzero(near)
        if idx.size < 2:
            idx = np.argsort(np.abs(x - point))[:3]
            idx.sort()
        xs, cs = x[idx], c[idx]
        return float(np.max(np.abs(np.diff(cs) / np.diff(xs))))


class Piece(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    lower: float
    upper: float
    model: "CoefficientModel"

    @model_validator(mode="after")
    def _ordered(self) -> "Piece":
        if not self.lower < self.upper:
            raise ValueError(
                f"piece needs lower < upper, got [{self.lower}, {self.upper}]"
            )
        return self


class Piecewise(_Model):
    """Sub-models glued continuously at their joints (derivative jumps allowed)."""

    kind: Literal["piecewise"] = "piecewise"
    pieces: list[Piece] = Field(..., min_length=1)

    @field_validator("pieces")
    @classmethod
    def _contiguous_and_continuous(cls, pieces: list[Piece]) -> list[Piece]:
        for left, right in zip(pieces[:-1], pieces[1:]):
            if left.upper != right.lower:
                raise ValueError(
                    f"pieces must be contiguous: {left.upper} != {right.lower}"
                )
            joint = np.asarray(left.upper)
            vl = float(left.model.values(joint))
            vr = float(right.model.values(joint))
            if abs(vl - vr) > 1e-12 * max(abs(vl), abs(vr)):
                raise ValueError(
                    f"joint at x={left.upper} is discontinuous: {vl} != {vr}"
                )
        return pieces

    @property
    def joints(self) -> list[float]:
        return [p.upper for p in self.pieces[:-1]]

    def derivative_jumps(self) -> list[tuple[float, float, float]]:
        """(joint, c'(x-), c'(x+)) for every joint where the one-sided slopes differ."""
        jumps = []
        for left, right in zip(self.pieces[:-1], self.pieces[1:]):
            x = left.upper
            dl = left.model.derivative(x, side="left")
            dr = right.model.derivative(x, side="right")
            if not math.isclose(dl, dr, rel_tol=1e-9, abs_tol=1e-12):
                jumps.append((x, dl, dr))
        return jumps

    def _piece_for(self, x: float, side: Side) -> Piece:
        for piece in self.pieces:
            if side == "right" and piece.lower <= x < piece.upper:
                return piece
            if side == "left" and piece.lower < x <= piece.upper:
                return piece
        # x at the outer edge of the piece list
        return self.pieces[0] if x <= self.pieces[0].lower else self.pieces[-1]

    def values(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        out = np.full(x.shape, np.nan)
        for piece in reversed(self.pieces):
            mask = (x >= piece.lower) & (x <= piece.upper)
            if np.any(mask):
                out = np.where(mask, piece.model.values(x), out)
        return out

    def derivative(self, x: float, side: Side | None = None) -> float:
        if side is not None:
            return self._piece_for(x, side).model.derivative(x, side=side)
        if x in self.joints:
            dl = self._piece_for(x, "left").model.derivative(x, side="left")
            dr = self._piece_for(x, "right").model.derivative(x, side="right")
            if not math.isclose(dl, dr, rel_tol=1e-9, abs_tol=1e-12):
                raise JointDerivativeError(x, dl, dr)
            return dr
        return self._piece_for(x, "right").model.derivative(x)

    def zeros(self, lower: float, upper: float, tol: float) -> ZeroSet:
        parts = []
        for piece in self.pieces:
            lo, hi = max(lower, piece.lower), min(upper, piece.upper)
            if lo <= hi:
                parts.append(piece.model.zeros(lo, hi, tol))
        return merge_zero_sets(parts)

    def exponent(self, point: float, side: Side) -> float | None:
        return self._piece_for(point, side).model.exponent(point, side)

    def exponent_at_infinity(self, side: Side) -> float | None:
        piece = self.pieces[-1] if side == "right" else self.pieces[0]
        edge = piece.upper if side == "right" else piece.lower
        if math.isfinite(edge):
            return None
        return piece.model.exponent_at_infinity(side)

    def inverse_integral(self, a: float, b: float) -> float | None:
        total = 0.0
        for piece in self.pieces:
            lo, hi = max(a, piece.lower), min(b, piece.upper)
            if lo < hi:
                total += integrate_inverse(piece.model, lo, hi)
        return total


CoefficientModel = Annotated[
    Union[PowerLaw, Constant, Polynomial, Tabulated, Piecewise],
    Field(discriminator="kind"),
]
Piece.model_rebuild()
Piecewise.model_rebuild()


def integrate_inverse(model: _Model, a: float, b: float, rtol: float = 1e-10) -> float:
    """int_a^b 1/c: closed form when the model has one, quadrature otherwise."""
    if b <= a:
        return 0.0
    closed = model.inverse_integral(a, b)
    if closed is not None:
        return closed

    zs = model.zeros(a, b, tol=1e-12)
    if any(hi > lo or a < lo < b for lo, hi in zs.plateaus):
        return math.inf
    inner = []
    for p in zs.points:
        for side in ("left", "right"):
            if (side == "left" and p <= a) or (side == "right" and p >= b):
                continue
            exponent = model.exponent(p, side)
            if exponent is not None and exponent >= 1.0:
                return math.inf
        inner.append(p)

    def integrand(s: float) -> float:
        return 1.0 / float(model.values(np.asarray(s)))

    try:
        return quad(integrand, a, b, points=inner, rtol=rtol)
    except (QuadratureFailure, ZeroDivisionError) as e:
        if inner:
            raise VanishingCoefficientError(a, b) from e
        raise IndeterminateError(
            f"quadrature of 1/c did not converge on [{a}, {b}]", {"detail": str(e)}
        ) from e


def estimate_slope(
    values_at, d_max: float, decades: float = 3.0, iqr_max: float = 0.25
) -> float:
    """Median log-log slope of d -> values_at(d) over the decades below d_max."""
    d = np.logspace(math.log10(d_max) - decades, math.log10(d_max), 31)
    v = np.asarray(values_at(d), dtype=float)
    if np.any(~np.isfinite(v)) or np.any(v <= 0.0):
        raise IndeterminateError(
            "inconclusive exponent: coefficient not positive on the sample window",
            {"d_min": float(d[0]), "d_max": float(d[-1])},
        )
    slopes = np.diff(np.log(v)) / np.diff(np.log(d))
    q1, median, q3 = np.percentile(slopes, [25.0, 50.0, 75.0])
    if q3 - q1 > iqr_max:
        raise IndeterminateError(
            "inconclusive exponent: log-log slope does not settle",
            {"median": float(median), "iqr": float(q3 - q1)},
        )
    return float(median)


class Coefficient(BaseModel):
    """A coefficient model on its domain."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    model: CoefficientModel
    domain: Domain = Field(default_factory=Line)

    @model_validator(mode="after")
    def _table_covers_domain(self) -> "Coefficient":
        if isinstance(self.model, Tabulated):
            lo, hi = self.domain.bounds
            if lo < self.model.x[0] or hi > self.model.x[-1]:
                raise ValueError(
                    f"tabulated coefficient covers "
                    f"[{self.model.x[0]}, {self.model.x[-1]}] "
                    f"but the domain is [{lo}, {hi}]"
                )
        return self

    @property
    def bounds(self) -> tuple[float, float]:
        return self.domain.bounds

    def _check_inside(self, x: np.ndarray) -> None:
        lo, hi = self.bounds
        slack = 1e-12 * max([1.0] + [abs(b) for b in (lo, hi) if math.isfinite(b)])
        bad = (x < lo - slack) | (x > hi + slack) | ~np.isfinite(x)
        if np.any(bad):
            raise CoefficientDomainError(float(x[bad][0]), str(self.bounds))

    def eval(self, x):
        """c(x) for a scalar or an array."""
        arr = np.asarray(x, dtype=float)
        self._check_inside(np.atleast_1d(arr))
        out = self.model.values(arr)
        return float(out) if arr.ndim == 0 else out

    def eval_derivative(self, x: float, side: Side | None = None) -> float:
        self._check_inside(np.atleast_1d(np.asarray(x, dtype=float)))
        return self.model.derivative(float(x), side=side)

    def zero_set(self, tol: float = 1e-8) -> ZeroSet:
        """Zeros and plateaus; tabulated values below tol * median count as zero."""
        if tol <= 0:
            raise CoefficientError(f"zero_set tolerance must be positive, got {tol}")
        lo, hi = self.bounds
        return self.model.zeros(lo, hi, tol)

    def local_exponent(
        self,
        point: float,
        side: Side,
        d_max: float = 1.0,
        decades: float = 3.0,
        iqr_max: float = 0.25,
    ) -> tuple[float, bool]:
        """(exponent, exact) of c at point from one side."""
        exact = self.model.exponent(point, side)
        if exact is not None:
            return exact, True
        if isinstance(self.model, Tabulated):
            lo, hi = self.bounds
            room = (hi - point) if side == "right" else (point - lo)
            d_max = min(d_max, 0.5 * room)
        sign = 1.0 if side == "right" else -1.0
        estimate = estimate_slope(
            lambda d: self.model.values(point + sign * d), d_max, decades, iqr_max
        )
        logger.debug(f"estimated exponent {estimate:.4f} at x={point} ({side})")
        return estimate, False

    def exponent_at_infinity(
        self, side: Side, x_max: float = 1e6, iqr_max: float = 0.25
    ) -> tuple[float, bool]:
        exact = self.model.exponent_at_infinity(side)
        if exact is not None:
            return exact, True
        sign = 1.0 if side == "right" else -1.0
        return (
            estimate_slope(lambda d: self.model.values(sign * d), x_max, 3.0, iqr_max),
            False,
        )

    def inverse_integral(self, a: float, b: float, rtol: float = 1e-10) -> float:
        """int_a^b ds / c(s); +inf when a zero of exponent >= 1 is reached."""
        return integrate_inverse(self.model, a, b, rtol)

    def moment_integral(self, a: float, b: float, rtol: float = 1e-10) -> float:
        """int_a^b |s| / c(s) ds for an interval on one side of 0."""
        if b <= a:
            return 0.0
        closed = self.model.moment_integral(a, b)
        if closed is not None:
            return closed
        try:
            return quad(
                lambda s: abs(s) / float(self.model.values(np.asarray(s))),
                a,
                b,
                rtol=rtol,
            )
        except (QuadratureFailure, ZeroDivisionError) as e:
            raise VanishingCoefficientError(a, b) from e
