import csv
import json

import pytest

from dext.cli import EXIT_ASSERTION, EXIT_CONFIG, EXIT_OK, main
from dext.errors import ScenarioError
from dext.grid_op import Robin
from dext.report import read_report
from dext.scenario import (
    SweepSpec,
    expand_grid,
    load_scenario,
    load_sweep,
    parse_scenario,
)
from dext.settings import load_tolerances

BASE = {
    "name": "base",
    "analyses": ["classify"],
    "coefficient": {
        "model": {"kind": "power_law", "exponent_left": 1.0, "exponent_right": 1.0},
        "domain": {"kind": "line"},
    },
}


def scenario_files(directory):
    return sorted(
        p
        for p in directory.glob("*.toml")
        if not p.name.startswith(("sweep_", "strict_"))
    )


def test_every_shipped_scenario_parses(scenarios_dir):
    files = scenario_files(scenarios_dir)
    assert len(files) >= 10
    names = [load_scenario(path).name for path in files]
    assert len(set(names)) == len(names)


def test_analyses_run_in_dependency_order():
    scenario = parse_scenario(
        {
            **BASE,
            "analyses": ["decompose", "deficiency", "classify"],
        }
    )
    assert scenario.ordered_analyses == ["classify", "deficiency", "decompose"]
    assert scenario.boundary[0].kind == "friedrichs_auto"
    assert scenario.geometry().kind == "line"


def test_misspelled_key_names_the_key():
    raw = {**BASE, "coefficient": {"model": {"kind": "power_law", "exponnent": 1.0}}}
    with pytest.raises(ScenarioError) as info:
        parse_scenario(raw, "typo.toml")
    assert "exponnent" in info.value.message
    assert info.value.message.startswith("typo.toml")


def test_evolve_needs_an_evolution_table():
    with pytest.raises(ScenarioError) as info:
        parse_scenario({**BASE, "analyses": ["evolve"]})
    assert "[evolution]" in info.value.message


def test_missing_scenario_file(tmp_path):
    with pytest.raises(ScenarioError):
        load_scenario(tmp_path / "nope.toml")


def test_tabulated_coefficient_from_csv(scenarios_dir):
    scenario = load_scenario(scenarios_dir / "tabulated_sqrt.toml")
    model = scenario.coefficient.model
    assert model.kind == "tabulated"
    assert len(model.x) == len(model.c) > 100


def test_trichotomy_sweep_expands(scenarios_dir):
    spec, points = load_sweep(scenarios_dir / "sweep_trichotomy.toml")
    assert [p.exponent_left for p in points] == spec.exponents
    assert all(p.exponent_left == p.exponent_right for p in points)
    assert points[3].scenario.coefficient.model.exponent_right == 1.25


def test_robin_sweep_sets_the_boundary(scenarios_dir):
    spec, points = load_sweep(scenarios_dir / "sweep_robin.toml")
    assert len(points) == len(spec.robin_ratios)
    for point in points:
        bc = point.scenario.boundary[0]
        assert isinstance(bc, Robin)
        assert bc.alpha == point.robin_ratio
        assert bc.beta == 1.0


def test_robin_pairs_allow_a_vanishing_beta():
    spec = SweepSpec(
        base="base.toml", robin_ratios=[-1.0], robin_pairs=[(1.0, 0.0), (0.0, 2.0)]
    )
    points = expand_grid(spec, BASE, "base.toml")
    assert [(p.robin_alpha, p.robin_beta) for p in points] == [
        (-1.0, 1.0),
        (1.0, 0.0),
        (0.0, 2.0),
    ]
    assert [p.robin_ratio for p in points] == [-1.0, None, 0.0]
    dirichlet_like = points[1].scenario.boundary[0]
    assert isinstance(dirichlet_like, Robin)
    assert dirichlet_like.ratio is None


def test_robin_pair_of_zeros_is_refused():
    spec = SweepSpec(base="base.toml", robin_pairs=[(0.0, 0.0)])
    with pytest.raises(ScenarioError):
        expand_grid(spec, BASE, "base.toml")


def test_empty_sweep_is_refused():
    with pytest.raises(ScenarioError) as info:
        expand_grid(SweepSpec(base="base.toml"), BASE, "base.toml")
    assert "empty" in info.value.message


def test_exponent_sweep_needs_a_power_law():
    raw = {**BASE, "coefficient": {"model": {"kind": "constant", "value": 1.0}}}
    with pytest.raises(ScenarioError):
        expand_grid(SweepSpec(base="base.toml", exponents=[1.0]), raw, "base.toml")


def test_tolerance_overrides(scenarios_dir, tmp_path):
    tol = load_tolerances(scenarios_dir / "strict_tolerances.toml")
    assert tol.flux_mode == "harmonic"
    assert tol.quad_rtol == 1e-12
    assert tol.graded_cells == 20

    bad = tmp_path / "bad.toml"
    bad.write_text("quad_rtoll = 1e-3\n")
    with pytest.raises(ScenarioError) as info:
        load_tolerances(bad)
    assert "quad_rtoll" in info.value.message


def test_classify_prints_the_verdict(scenarios_dir, capsys):
    code = main(["classify", "--scenario", str(scenarios_dir / "classify_case2.toml")])
    assert code == EXIT_OK
    summary = json.loads(capsys.readouterr().out)
    assert summary["case"] == "II"
    assert summary["deficiency_indices"] == [1, 1]
    assert summary["unique_submarkovian"] is True


def test_run_writes_a_report(scenarios_dir, tmp_path):
    path = scenarios_dir / "classify_case2.toml"
    assert main(["run", "--scenario", str(path), "--out", str(tmp_path)]) == EXIT_OK
    report = read_report(tmp_path / "classify_case_II" / "report.json")
    assert report.passed
    assert report.classification["case"] == "II"
    assert report.analyses[0].assertions[0].name == "case"


def test_reports_differ_only_in_timestamp(scenarios_dir, tmp_path):
    path = str(scenarios_dir / "classify_case2.toml")
    docs = []
    for run in ("a", "b"):
        out = tmp_path / run
        assert main(["run", "--scenario", path, "--out", str(out), "--seed", "3"]) == 0
        with open(out / "classify_case_II" / "report.json", encoding="utf-8") as f:
            doc = json.load(f)
        assert doc["schema"] == "dext.report/1"
        assert doc["seed"] == 3
        doc.pop("@timestamp")
        docs.append(doc)
    assert docs[0] == docs[1]


def test_case_one_krein_run_fails(scenarios_dir, tmp_path):
    path = scenarios_dir / "krein_case1_refused.toml"
    code = main(["run", "--scenario", str(path), "--out", str(tmp_path)])
    assert code == EXIT_ASSERTION
    report = read_report(tmp_path / "krein_case_I_refused" / "report.json")
    assert not report.passed
    krein = [a for a in report.analyses if a.name == "krein"][0]
    assert "unique extension" in krein.errors[0]


def test_configuration_errors_exit_with_two(scenarios_dir, tmp_path):
    assert main(["classify", "--scenario", str(tmp_path / "nope.toml")]) == EXIT_CONFIG
    path = str(scenarios_dir / "classify_case2.toml")
    code = main(["run", "--scenario", path, "--scenario", path, "--out", str(tmp_path)])
    assert code == EXIT_CONFIG
    code = main(
        [
            "classify",
            "--scenario",
            path,
            "--tol-overrides",
            str(tmp_path / "missing.toml"),
        ]
    )
    assert code == EXIT_CONFIG


def test_dump_matrix(scenarios_dir, tmp_path):
    path = str(scenarios_dir / "classify_case2.toml")
    assert main(["dump-matrix", "--scenario", path, "--out", str(tmp_path)]) == 0
    with open(tmp_path / "matrix_0.csv", newline="") as f:
        rows = list(csv.reader(f))
    assert rows[0] == ["row", "col", "value"]
    entries = {(int(r), int(c)): float(v) for r, c, v in rows[1:]}
    assert max(abs(r - c) for r, c in entries) == 1
    # cells 500 and 501 touch the origin from either side
    assert entries.get((500, 501), 0.0) == 0.0
    assert entries[(501, 502)] < 0.0


def test_sweep_writes_a_table(scenarios_dir, tmp_path):
    sweep = tmp_path / "sweep.toml"
    base = (scenarios_dir / "trichotomy_base.toml").as_posix()
    sweep.write_text(f'[sweep]\nbase = "{base}"\nexponents = [0.5, 2.0]\n')
    out = tmp_path / "out"
    assert main(["sweep", "--scenario", str(sweep), "--out", str(out)]) == EXIT_OK
    with open(out / "sweep.csv", newline="") as f:
        rows = list(csv.DictReader(f))
    assert [row["case"] for row in rows] == ["III", "I"]
    assert [row["deficiency_index"] for row in rows] == ["1", "0"]
    assert rows[1]["submarkovian"] == "True"
    assert float(rows[1]["invariance_leak"]) < 1e-8
    assert rows[0]["error"] == ""
