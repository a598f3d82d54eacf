import logging
import math
import warnings
from typing import Callable, Iterable

import numpy as np
from scipy import integrate

from ..errors import DextError

logger = logging.getLogger(__name__)


class QuadratureFailure(DextError):
    """scipy reported an IntegrationWarning for the given interval."""

    def __init__(self, lower: float, upper: float, detail: str):
        super().__init__(f"quadrature did not converge on [{lower}, {upper}]: {detail}")
        self.lower = lower
        self.upper = upper


def quad(
    func: Callable[[float], float],
    a: float,
    b: float,
    points: Iterable[float] | None = None,
    rtol: float = 1e-10,
    limit: int = 200,
) -> float:
    """
    scipy.integrate.quad split at the interior ``points``.

    Accepts infinite limits. Raises QuadratureFailure when scipy warns.
    """
    cuts = [a] + sorted(p for p in (points or []) if a < p < b) + [b]
    total = 0.0
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        total += _quad_piece(func, lo, hi, rtol, limit)
    return total


def log_quad(
    func: Callable[[float], float],
    a: float,
    b: float,
    rtol: float = 1e-10,
    limit: int = 200,
) -> float:
    """Integrates over 0 < a < b in t = ln x, one decade per call to quad."""
    if not 0.0 < a <= b:
        raise ValueError(f"log_quad needs 0 < a <= b, got a={a}, b={b}")
    if a == b:
        return 0.0

    def integrand(t: float) -> float:
        x = math.exp(t)
        return func(x) * x

    edges = decade_edges(a, b)
    return sum(
        _quad_piece(integrand, math.log(lo), math.log(hi), rtol, limit)
        for lo, hi in zip(edges[:-1], edges[1:])
    )


def decade_edges(a: float, b: float) -> list[float]:
    """[a, 10^k, 10^(k+1), ..., b] for the powers of ten strictly inside (a, b)."""
    lo = math.floor(math.log10(a)) + 1
    hi = math.ceil(math.log10(b)) - 1
    inner = [10.0**k for k in range(lo, hi + 1) if a < 10.0**k < b]
    return [a] + inner + [b]


def _quad_piece(func, lo, hi, rtol, limit) -> float:
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", integrate.IntegrationWarning)
        value, error = integrate.quad(
            func, lo, hi, epsabs=0.0, epsrel=rtol, limit=limit
        )
    for w in caught:
        if issubclass(w.category, integrate.IntegrationWarning):
            # an exactly zero integral cannot meet a relative target
            if abs(value) <= 1e-300 and error <= 1e-300:
                continue
            if np.isfinite(value) and error <= 10 * rtol * abs(value):
                logger.debug(f"quad warning ignored on [{lo}, {hi}]: {w.message}")
                continue
            raise QuadratureFailure(lo, hi, str(w.message))
    return float(value)
