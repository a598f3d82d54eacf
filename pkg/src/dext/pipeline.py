"""
Runs the analyses a scenario asks for, in dependency order, and collects
their records and assertions into a RunReport.

Each analysis runs inside its own try/except: a DextError is logged and
recorded on that analysis, the remaining analyses still run.
"""

import logging
import math
from pathlib import Path

import numpy as np

from . import __version__
from .classify import (
    ClassificationReport,
    classify,
    cutoff_energy,
    default_origin,
    nu,
    smooth_cutoff_l1,
)
from .coeff import Coefficient, HalfLine, Interval
from .decompose import (
    assemble_direct_sum,
    block_diagonal,
    decompose,
    evolve_direct_sum,
)
from .errors import (
    CutoffConstructionError,
    DextError,
    HypothesisViolatedError,
    UnrealizedExtensionError,
)
from .evolve import (
    conservativeness,
    evolve,
    gaussian_datum,
    leak_fraction,
    submarkov_violation,
)
from .grid_op import (
    DiscreteOperator,
    FriedrichsAuto,
    HalfLineGeometry,
    LineGeometry,
    LineJump,
    Mesh,
    Robin,
    assemble,
    beurling_deny,
    build_mesh,
    describe_bc,
    lowest_eigenpairs,
    to_market,
)
from .krein import krein_check, positivity_transfer
from .report import AnalysisResult, RunReport
from .scenario import (
    ConstantDatum,
    GaussianDatum,
    IndicatorDatum,
    Scenario,
)
from .settings import DEFAULT_TOLERANCES, Tolerances
from .shoot import (
    blowup_check,
    deficiency_index,
    deficiency_solution,
    eta_properties,
    operator_deficiency,
)

logger = logging.getLogger(__name__)


def initial_datum(spec, op: DiscreteOperator) -> np.ndarray:
    x = op.mesh.centers
    if isinstance(spec, GaussianDatum):
        return gaussian_datum(op, spec.center, spec.width)
    if isinstance(spec, IndicatorDatum):
        return np.where((x >= spec.a) & (x <= spec.b), 1.0, 0.0)
    if isinstance(spec, ConstantDatum):
        return np.full(x.size, spec.value)
    raise DextError(f"unknown initial datum {spec!r}")


def scenario_mesh(
    scenario: Scenario, tol: Tolerances = DEFAULT_TOLERANCES
) -> Mesh:
    """The mesh described by the [mesh] table, truncated for the horizon if asked."""
    spec = scenario.mesh
    c = scenario.coefficient
    geometry = scenario.geometry()
    horizon = c_max = None
    if spec.auto_truncate and scenario.evolution is not None:
        if isinstance(geometry, HalfLineGeometry):
            sign = 1.0 if geometry.side == "right" else -1.0
            ends = [geometry.origin + sign * spec.length]
        elif isinstance(geometry, LineGeometry):
            ends = [geometry.origin - spec.length, geometry.origin + spec.length]
        else:
            ends = []
        if ends:
            lo, hi = c.bounds
            horizon = scenario.evolution.horizon
            c_max = max(float(c.eval(min(max(x, lo), hi))) for x in ends)
    graded = tol.graded_cells if spec.graded_cells is None else spec.graded_cells
    return build_mesh(
        geometry, spec.n_cells, spec.grading_ratio, graded, horizon, c_max
    )


def _sides(c: Coefficient) -> list[str]:
    domain = c.domain
    if isinstance(domain, HalfLine):
        return [domain.side]
    if isinstance(domain, Interval):
        return []
    return ["left", "right"]


class ScenarioRun:
    """State of one run; one instance per scenario, never shared across threads."""

    def __init__(
        self,
        scenario: Scenario,
        tol: Tolerances = DEFAULT_TOLERANCES,
        out_dir: str | Path | None = None,
        seed: int | None = None,
    ):
        self.scenario = scenario
        self.tol = tol
        self.out_dir = Path(out_dir) if out_dir is not None else None
        self.seed = scenario.seed if seed is None else seed
        self.c = scenario.coefficient
        self.classification: ClassificationReport | None = None
        self._mesh: Mesh | None = None
        self.report = RunReport(
            version=__version__,
            seed=self.seed,
            scenario=scenario.model_dump(mode="json"),
            tolerances=tol.model_dump(mode="json"),
        )

    @property
    def mesh(self) -> Mesh:
        if self._mesh is None:
            self._mesh = scenario_mesh(self.scenario, self.tol)
            self.report.mesh = self._mesh.summary()
        return self._mesh

    @property
    def case(self) -> str | None:
        return self.classification.case if self.classification else None

    def _artifact(self, result: AnalysisResult, name: str) -> Path | None:
        if self.out_dir is None:
            return None
        result.artifacts.append(name)
        return self.out_dir / name

    def execute(self, analyses: list[str] | None = None) -> RunReport:
        names = analyses or self.scenario.ordered_analyses
        logger.info(f"Running scenario '{self.scenario.name}': {', '.join(names)}")
        for name in names:
            result = AnalysisResult(name=name)
            try:
                getattr(self, f"_run_{name}")(result)
            except DextError as e:
                logger.error(f"Analysis '{name}' failed: {e.message}")
                result.errors.append(e.message)
            self.report.analyses.append(result)
            status = "ok" if result.passed else "FAILED"
            logger.info(f"Analysis '{name}' finished: {status}")
        return self.report

    # analyses

    def _run_classify(self, result: AnalysisResult) -> None:
        report = classify(self.c, self.tol)
        self.classification = report
        self.report.classification = report.model_dump(mode="json")
        result.records.append({"case": report.case, "estimated": report.estimated})
        if report.estimated:
            logger.warning("classification is estimated (exponent near a threshold)")
        expect = self.scenario.expect
        if expect.case is not None:
            result.check(
                "case", report.case == expect.case, f"{report.case} vs {expect.case}"
            )
        if expect.unique_submarkovian is not None:
            result.check(
                "unique submarkovian extension",
                report.unique_submarkovian == expect.unique_submarkovian,
            )

    def _run_deficiency(self, result: AnalysisResult) -> None:
        sides = _sides(self.c)
        if not sides:
            result.records.append(
                {"note": "interval indices come from the endpoint classification"}
            )
            return
        expect = self.scenario.expect.deficiency_index
        indices: dict[float, list[int]] = {}
        for side in sides:
            profile = (
                self.classification.profile(side) if self.classification else None
            )
            for gamma in self.scenario.deficiency.gammas:
                try:
                    verdict = deficiency_index(self.c, side, gamma, self.tol)
                except DextError as e:
                    result.errors.append(f"{side}, gamma={gamma:g}: {e.message}")
                    continue
                result.records.append(verdict.model_dump(mode="json"))
                indices.setdefault(gamma, []).append(verdict.index)
                if profile is not None and not profile.estimated:
                    result.check(
                        f"index agrees with nu in L2 ({side}, gamma={gamma:g})",
                        verdict.index == int(profile.nu_in_l2),
                    )
                if verdict.index == 1:
                    self._eta(result, side, gamma, profile)
        if expect is None:
            return
        # the line is limit circle only when both sides are
        for gamma, found in indices.items():
            if len(found) == len(sides):
                result.check(
                    f"deficiency index (gamma={gamma:g})",
                    min(found) == expect,
                    f"{min(found)} vs {expect}",
                )

    def _eta(self, result: AnalysisResult, side: str, gamma: float, profile) -> None:
        sol = deficiency_solution(
            self.c, side, gamma, self.scenario.mesh.length, tol=self.tol
        )
        props = eta_properties(sol, profile)
        result.records.append(
            {"side": side, "gamma": gamma, "eta": props.model_dump(mode="json")}
        )
        result.check(f"eta positive ({side}, gamma={gamma:g})", props.positive)
        result.check(
            f"eta non-increasing ({side}, gamma={gamma:g})", props.non_increasing
        )
        path = self._artifact(result, f"eta_{side}_gamma{gamma:g}.csv")
        if path is not None:
            sol.to_csv(path)

    def _run_cutoffs(self, result: AnalysisResult) -> None:
        sides = _sides(self.c)
        if self.classification is not None:
            sides = [
                s for s in sides if not self.classification.profile(s).nu_in_linf
            ]
        if not sides:
            result.records.append({"note": "no side with vanishing capacity"})
            return
        origin = default_origin(self.c, self.tol)
        for side in sides:
            previous = math.inf
            for n in sorted(self.scenario.cutoffs.n):
                energy = cutoff_energy(self.c, side, n, self.tol)
                x_n = self.tol.harmonic_anchor / n
                nu_n = nu(self.c, side, x_n, origin, tol=self.tol)
                record = {"side": side, "n": n, "energy": energy, "nu_n": nu_n}
                result.check(
                    f"energy * nu(1/n) = 1 ({side}, n={n})",
                    abs(energy * nu_n - 1.0) < 1e-8,
                    f"{energy * nu_n:.12f}",
                )
                try:
                    smooth = smooth_cutoff_l1(self.c, side, n, self.tol)
                except CutoffConstructionError as e:
                    record["smooth"] = e.message
                    result.records.append(record)
                    continue
                record["flux_divergence_l1"] = smooth.flux_divergence_l1
                record["scaled_l1"] = smooth.scaled_l1
                result.check(
                    f"xi identity ({side}, n={n})",
                    abs(smooth.xi_flux_divergence_l1 * nu_n - 2.0) < 1e-6,
                )
                result.check(
                    f"cutoff L1 decreasing ({side}, n={n})",
                    smooth.flux_divergence_l1 < previous,
                )
                previous = smooth.flux_divergence_l1
                result.records.append(record)

    def _run_blowup(self, result: AnalysisResult) -> None:
        spec = self.scenario.blowup
        for g in spec.gamma_boundary:
            try:
                res = blowup_check(self.c, g, spec.X, self.tol)
            except HypothesisViolatedError as e:
                if spec.expect_refusal:
                    result.records.append({"gamma_boundary": g, "refused": e.message})
                    result.check(f"refused ({g})", True, e.message)
                    continue
                raise
            result.records.append(
                {"gamma_boundary": g, **res.model_dump(mode="json")}
            )
            if spec.expect_refusal:
                result.check(f"refused ({g})", False, "growth hypothesis held")
                continue
            result.check(f"psi^2 monotone ({g})", res.monotone_square)
            result.check(
                f"growth factor ({g})",
                res.growth_factor > spec.min_growth,
                f"{res.growth_factor:.4e}",
            )

    def _run_evolve(self, result: AnalysisResult) -> None:
        spec = self.scenario.evolution
        mesh = self.mesh
        expect = self.scenario.expect
        for k, bc in enumerate(self.scenario.boundary):
            op = assemble(
                self.c, mesh, bc, self.tol, self.scenario.mesh.far_field, self.case
            )
            label = describe_bc(op.resolved_bc)
            u0 = initial_datum(spec.datum, op)
            trace = evolve(op, u0, spec.horizon, spec.n_steps, spec.scheme)
            lam1 = lowest_eigenpairs(op, 1)[0][0]
            form = beurling_deny(op, seed=self.seed)
            record = {
                "bc": label,
                "operator": op.summary(),
                "lambda_1": lam1,
                "min_value": min(trace.min_value),
                "sup_expansion": max(trace.sup_norm) / trace.sup_norm[0],
                "final_l1": trace.l1_mass[-1],
                "far_outflow": trace.far_outflow[-1],
                "beurling_deny": form.model_dump(mode="json"),
            }

            sup0 = trace.sup_norm[0]
            if op.submarkovian and trace.positivity_reliable:
                result.check(
                    f"positivity [{label}]",
                    record["min_value"] >= -self.tol.positivity_tol * sup0,
                )
            if lam1 >= -1e-12:
                l2 = np.asarray(trace.l2_norm)
                result.check(
                    f"L2 contraction [{label}]",
                    bool(np.all(np.diff(l2) <= 1e-12 * l2[0])),
                )
            if spec.markov_trials and trace.positivity_reliable:
                probe = submarkov_violation(
                    op,
                    spec.markov_trials,
                    self.seed,
                    spec.horizon,
                    spec.n_steps,
                    self.tol,
                )
                record["submarkov_probe"] = probe.model_dump(mode="json")
                markov = (
                    probe.positivity_failures == 0
                    and probe.sup_expansion <= 1.0 + self.tol.markov_tol
                )
                result.check(
                    f"submarkov verdict matches boundary condition [{label}]",
                    markov == op.submarkovian,
                    f"sup expansion {probe.sup_expansion:.12f}",
                )
            try:
                cons = conservativeness(trace, bc, self.tol)
            except DextError as e:
                result.errors.append(f"[{label}] {e.message}")
            else:
                record["conservativeness"] = cons.model_dump(mode="json")
                if expect.max_mass_drift is not None:
                    result.check(
                        f"mass drift below {expect.max_mass_drift:g} [{label}]",
                        cons.max_mass_drift < expect.max_mass_drift,
                        f"{cons.max_mass_drift:.3e}",
                    )
                if expect.min_mass_drift is not None:
                    result.check(
                        f"mass loss above {expect.min_mass_drift:g} [{label}]",
                        cons.max_mass_drift >= expect.min_mass_drift,
                        f"{cons.max_mass_drift:.3e}",
                    )
            if isinstance(mesh.geometry, LineGeometry):
                into = "left" if trace.mass_right[0] >= trace.mass_left[0] else "right"
                leak = leak_fraction(trace, into)
                record["leak"] = leak
                record["invariant"] = leak <= self.tol.invariance_threshold
                if expect.invariant is not None:
                    result.check(
                        f"half-line invariance is {expect.invariant} [{label}]",
                        record["invariant"] == expect.invariant,
                        f"{leak:.3e} vs {self.tol.invariance_threshold:g}",
                    )
                if expect.max_leak is not None:
                    result.check(
                        f"leak at most {expect.max_leak:g} [{label}]",
                        leak <= expect.max_leak,
                        f"{leak:.3e}",
                    )
                if expect.min_leak is not None:
                    result.check(
                        f"leak at least {expect.min_leak:g} [{label}]",
                        leak >= expect.min_leak,
                        f"{leak:.3e}",
                    )

            path = self._artifact(result, f"trace_{k}.csv")
            if path is not None:
                trace.write_csv(path)
            if spec.dump_snapshots:
                path = self._artifact(result, f"trace_{k}.bin")
                if path is not None:
                    trace.write_dump(path)
            result.records.append(record)

    def _run_krein(self, result: AnalysisResult) -> None:
        spec = self.scenario.krein
        mesh = self.mesh
        for alpha, beta in spec.pairs:
            try:
                for gamma in spec.gammas:
                    diag = krein_check(
                        self.c, alpha, beta, gamma, mesh, self.tol, self.seed
                    )
                    result.records.append(diag.model_dump(mode="json"))
                    tag = f"alpha={alpha:g}, beta={beta:g}, gamma={gamma:g}"
                    result.check(
                        f"rank one ({tag})",
                        diag.rank_ratio < 1e-6,
                        f"{diag.rank_ratio:.3e}",
                    )
                    result.check(f"kappa >= 0 ({tag})", diag.kappa >= -1e-10)
                    if diag.kappa != 0.0:
                        result.check(
                            f"range spanned by eta ({tag})",
                            diag.range_alignment > 0.999,
                            f"{diag.range_alignment:.6f}",
                        )
            except UnrealizedExtensionError as e:
                if e.message not in result.errors:
                    result.errors.append(e.message)
                continue
            self._positivity(result, alpha, beta)

    def _positivity(self, result: AnalysisResult, alpha: float, beta: float) -> None:
        mesh = self.mesh
        bc = (
            LineJump(alpha=alpha, beta=beta)
            if isinstance(mesh.geometry, LineGeometry)
            else Robin(alpha=alpha, beta=beta)
        )
        far = self.scenario.mesh.far_field
        ext = assemble(self.c, mesh, bc, self.tol, far, self.case)
        base = assemble(self.c, mesh, FriedrichsAuto(), self.tol, far, self.case)
        spec = self.scenario.krein
        transfer = positivity_transfer(
            ext, base, spec.gammas[0], spec.positivity_trials, self.seed, self.tol
        )
        result.records.append(
            {"alpha": alpha, "beta": beta, "positivity": transfer.model_dump()}
        )
        result.check("Friedrichs resolvent positive", transfer.negative_baseline == 0)
        if ext.submarkovian:
            result.check(
                f"resolvent positive (alpha={alpha:g}, beta={beta:g})",
                transfer.negative_extension == 0,
            )

    def _run_decompose(self, result: AnalysisResult) -> None:
        spec = self.scenario.decompose
        dec = decompose(self.c, self.tol)
        result.records.append(dec.model_dump(mode="json"))
        expect = self.scenario.expect.unique_submarkovian
        if expect is not None:
            result.check(
                "decomposition uniqueness verdict", dec.unique_submarkovian == expect
            )
        if not dec.components:
            return
        blocks = assemble_direct_sum(
            dec,
            self.c,
            spec.n_cells,
            self.scenario.mesh.grading_ratio,
            self.scenario.mesh.length,
            self.tol,
            self.scenario.mesh.far_field,
        )
        whole = block_diagonal(blocks)
        first = blocks[0].mesh.n_cells
        u0 = np.zeros(whole.mesh.n_cells)
        u0[:first] = 1.0
        trace = evolve(whole, u0, spec.horizon, spec.n_steps)
        final = trace.snapshots[-1]
        w = whole.mass_weights
        total = float(np.sum(w * np.abs(final)))
        outside = float(np.sum((w * np.abs(final))[first:]))
        transfer = outside / total if total > 0 else 0.0
        parts = evolve_direct_sum(blocks, u0, spec.horizon, spec.n_steps)
        joined = np.concatenate([p.snapshots[-1] for p in parts])
        gap = float(np.max(np.abs(joined - final)))
        scale = float(np.max(np.abs(final))) or 1.0
        result.records.append(
            {"blocks": len(blocks), "transfer": transfer, "direct_sum_gap": gap}
        )
        result.check(
            "inter-component transfer", transfer < 1e-10, f"{transfer:.3e}"
        )
        result.check(
            "direct sum matches global evolution", gap <= 1e-12 * scale, f"{gap:.3e}"
        )


def run_scenario(
    scenario: Scenario,
    tol: Tolerances = DEFAULT_TOLERANCES,
    out_dir: str | Path | None = None,
    seed: int | None = None,
    analyses: list[str] | None = None,
) -> RunReport:
    return ScenarioRun(scenario, tol, out_dir, seed).execute(analyses)


def dump_matrices(
    scenario: Scenario, out_dir: str | Path, tol: Tolerances = DEFAULT_TOLERANCES
) -> list[Path]:
    """One (row, col, value) CSV per boundary condition of the scenario."""
    mesh = scenario_mesh(scenario, tol)
    case = None
    if isinstance(mesh.geometry, LineGeometry):
        case = classify(scenario.coefficient, tol).case
    paths = []
    for k, bc in enumerate(scenario.boundary):
        op = assemble(
            scenario.coefficient, mesh, bc, tol, scenario.mesh.far_field, case
        )
        path = Path(out_dir) / f"matrix_{k}.csv"
        to_market(op, path)
        paths.append(path)
    return paths


def sweep_point(
    scenario: Scenario, tol: Tolerances = DEFAULT_TOLERANCES
) -> dict:
    """One row of the sweep table; errors are caught and stored in the row."""
    row: dict = {}
    c = scenario.coefficient
    try:
        report = classify(c, tol)
        row["case"] = report.case
        if _sides(c):
            deficiency = operator_deficiency(c, 1.0, tol)
            row["deficiency_index"] = deficiency.index
            for verdict in deficiency.sides:
                row[f"deficiency_{verdict.side}"] = verdict.index
        else:
            row["deficiency_index"] = report.deficiency_indices[0]
        mesh = scenario_mesh(scenario, tol)
        bc = scenario.boundary[0]
        op = assemble(c, mesh, bc, tol, scenario.mesh.far_field, report.case)
        lam1 = lowest_eigenpairs(op, 1)[0][0]
        row["lambda_1"] = lam1
        row["lambda_1_sign"] = (
            -1 if lam1 < -1e-8 else (1 if lam1 > 1e-8 else 0)
        )
        evolution = scenario.evolution
        horizon = evolution.horizon if evolution else 1.0
        n_steps = evolution.n_steps if evolution else 50
        constant = evolve(op, np.ones(mesh.n_cells), horizon, n_steps)
        row["sup_expansion"] = max(constant.sup_norm)
        row["submarkovian"] = (
            min(constant.min_value) >= -tol.positivity_tol
            and row["sup_expansion"] <= 1.0 + tol.markov_tol
        )
        if isinstance(mesh.geometry, LineGeometry):
            datum = (
                evolution.datum
                if evolution is not None
                else IndicatorDatum(
                    a=mesh.geometry.origin + 0.5, b=mesh.geometry.origin + 1.5
                )
            )
            trace = evolve(op, initial_datum(datum, op), horizon, n_steps)
            into = "left" if trace.mass_right[0] >= trace.mass_left[0] else "right"
            row["invariance_leak"] = leak_fraction(trace, into)
            row["invariant"] = row["invariance_leak"] <= tol.invariance_threshold
    except DextError as e:
        logger.error(f"Sweep point '{scenario.name}' failed: {e.message}")
        row["error"] = e.message
    return row
