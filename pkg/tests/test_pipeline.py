import pytest

from dext import classify as classify_module
from dext.numerics.quadrature import quad
from dext.pipeline import run_scenario, sweep_point
from dext.scenario import load_scenario, parse_scenario
from dext.settings import DEFAULT_TOLERANCES, Tolerances


def line_scenario(d_left: float, d_right: float, **extra):
    raw = {
        "name": f"line {d_left}/{d_right}",
        "analyses": ["classify"],
        "coefficient": {
            "model": {
                "kind": "power_law",
                "exponent_left": d_left,
                "exponent_right": d_right,
            },
            "domain": {"kind": "line"},
        },
        "mesh": {"n_cells": 200, "length": 10.0},
        **extra,
    }
    return parse_scenario(raw)


def divergent_log_quad(*args, **kwargs):
    return quad(lambda x: 1.0 / x, 0.0, 1.0)


def test_sweep_row_takes_the_index_from_both_sides():
    row = sweep_point(line_scenario(2.0, 0.5))
    assert "error" not in row
    assert row["case"] == "I"
    assert row["deficiency_left"] == 0
    assert row["deficiency_right"] == 1
    assert row["deficiency_index"] == 0


def test_deficiency_expectation_uses_both_sides():
    scenario = line_scenario(
        2.0,
        0.5,
        analyses=["classify", "deficiency"],
        deficiency={"gammas": [1.0]},
        expect={"case": "I", "deficiency_index": 0},
    )
    report = run_scenario(scenario)
    deficiency = [a for a in report.analyses if a.name == "deficiency"][0]
    names = [a.name for a in deficiency.assertions if a.passed]
    assert "deficiency index (gamma=1)" in names


def test_invariance_threshold_decides_the_verdict():
    scenario = line_scenario(
        0.5,
        0.5,
        analyses=["classify", "evolve"],
        evolution={
            "horizon": 1.0,
            "n_steps": 50,
            "datum": {"kind": "indicator", "a": 0.5, "b": 1.5},
        },
        expect={"invariant": False},
    )

    def verdict(tol: Tolerances) -> bool:
        report = run_scenario(scenario, tol)
        evolve = [a for a in report.analyses if a.name == "evolve"][0]
        return [
            a.passed
            for a in evolve.assertions
            if a.name.startswith("half-line invariance")
        ][0]

    assert verdict(DEFAULT_TOLERANCES)
    assert not verdict(Tolerances(invariance_threshold=1.0))


def test_sweep_row_reports_invariance():
    scenario = line_scenario(0.5, 0.5)
    assert sweep_point(scenario)["invariant"] is False
    loose = Tolerances(invariance_threshold=1.0)
    assert sweep_point(scenario, loose)["invariant"] is True


def test_quadrature_failure_lands_in_the_report(scenarios_dir, monkeypatch):
    monkeypatch.setattr(classify_module, "log_quad", divergent_log_quad)
    scenario = load_scenario(scenarios_dir / "classify_case2.toml")
    report = run_scenario(scenario)
    assert not report.passed
    assert "quadrature did not converge" in report.analyses[0].errors[0]


def test_quadrature_failure_lands_in_the_sweep_row(monkeypatch):
    monkeypatch.setattr(classify_module, "log_quad", divergent_log_quad)
    row = sweep_point(line_scenario(1.0, 1.0))
    assert row["error"].startswith("quadrature did not converge")
    assert "case" not in row


@pytest.mark.parametrize("d", [0.5, 1.25])
def test_symmetric_sweep_row_agrees_with_classification(d):
    row = sweep_point(line_scenario(d, d))
    assert row["deficiency_left"] == row["deficiency_right"] == 1
    assert row["deficiency_index"] == 1
