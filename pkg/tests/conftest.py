from pathlib import Path

import pytest

from dext.coeff import Coefficient, HalfLine, Interval, Line, PowerLaw

SCENARIOS = Path(__file__).resolve().parent.parent / "scenarios"


@pytest.fixture
def scenarios_dir() -> Path:
    return SCENARIOS


@pytest.fixture
def power_line():
    """|x|^d on the line, optionally with a different exponent on the right."""

    def make(d: float, d_right: float | None = None) -> Coefficient:
        return Coefficient(
            model=PowerLaw(
                exponent_left=d, exponent_right=d if d_right is None else d_right
            ),
            domain=Line(),
        )

    return make


@pytest.fixture
def power_half():
    """x^d on (0, inf) or |x|^d on (-inf, 0)."""

    def make(d: float, side: str = "right") -> Coefficient:
        return Coefficient(
            model=PowerLaw(exponent_left=d, exponent_right=d),
            domain=HalfLine(side=side),
        )

    return make


@pytest.fixture
def power_interval():
    def make(d: float, a: float = 0.0, b: float = 1.0) -> Coefficient:
        return Coefficient(
            model=PowerLaw(exponent_left=d, exponent_right=d, center=a),
            domain=Interval(a=a, b=b),
        )

    return make
