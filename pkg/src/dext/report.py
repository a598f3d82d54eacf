import csv
import json
import logging
from datetime import datetime, timezone
from pathlib import Path
from typing import Any

from pydantic import BaseModel, ConfigDict, Field

from .settings import REPORT_SCHEMA

logger = logging.getLogger(__name__)


class Assertion(BaseModel):
    model_config = ConfigDict(frozen=True)

    name: str
    passed: bool
    detail: str = ""


class AnalysisResult(BaseModel):
    model_config = ConfigDict(ser_json_inf_nan="constants")

    name: str
    records: list[dict[str, Any]] = Field(default_factory=list)
    assertions: list[Assertion] = Field(default_factory=list)
    errors: list[str] = Field(default_factory=list)
    artifacts: list[str] = Field(
        default_factory=list, description="Files written, relative to the output dir"
    )

    @property
    def passed(self) -> bool:
        return not self.errors and all(a.passed for a in self.assertions)

    def check(self, name: str, passed: bool, detail: str = "") -> bool:
        self.assertions.append(Assertion(name=name, passed=bool(passed), detail=detail))
        if not passed:
            logger.warning(f"[{self.name}] assertion failed: {name} ({detail})")
        return bool(passed)


class RunReport(BaseModel):
    model_config = ConfigDict(populate_by_name=True, ser_json_inf_nan="constants")

    schema_version: str = Field(REPORT_SCHEMA, alias="schema")
    timestamp: str = Field(
        default_factory=lambda: datetime.now(timezone.utc).isoformat(),
        alias="@timestamp",
    )
    version: str
    seed: int
    scenario: dict[str, Any] = Field(..., description="Echo of the validated scenario")
    tolerances: dict[str, Any]
    mesh: dict[str, Any] | None = None
    classification: dict[str, Any] | None = None
    analyses: list[AnalysisResult] = Field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(a.passed for a in self.analyses)

    def failures(self) -> list[str]:
        out = []
        for analysis in self.analyses:
            out.extend(f"{analysis.name}: {e}" for e in analysis.errors)
            out.extend(
                f"{analysis.name}: {a.name}"
                for a in analysis.assertions
                if not a.passed
            )
        return out

    def to_document(self) -> dict:
        doc = self.model_dump(mode="json", by_alias=True)
        doc["passed"] = self.passed
        return doc


def write_report(report: RunReport, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(report.to_document(), f, indent=2, ensure_ascii=False, sort_keys=True)
        f.write("\n")
    logger.info(f"Report written to {path}")


def read_report(path: str | Path) -> RunReport:
    with open(path, encoding="utf-8") as f:
        doc = json.load(f)
    doc.pop("passed", None)
    return RunReport.model_validate(doc)


SWEEP_COLUMNS = [
    "exponent_left",
    "exponent_right",
    "robin_alpha",
    "robin_beta",
    "robin_ratio",
    "case",
    "deficiency_index",
    "deficiency_left",
    "deficiency_right",
    "submarkovian",
    "sup_expansion",
    "invariance_leak",
    "invariant",
    "lambda_1",
    "lambda_1_sign",
    "error",
]


def write_sweep_table(rows: list[dict], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.DictWriter(f, fieldnames=SWEEP_COLUMNS, extrasaction="ignore")
        writer.writeheader()
        for row in rows:
            writer.writerow(
                {k: "" if row.get(k) is None else row[k] for k in SWEEP_COLUMNS}
            )
    logger.info(f"Sweep table with {len(rows)} row(s) written to {path}")
