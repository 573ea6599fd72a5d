"""Run configuration, dimension reports and parameter sweeps."""

from __future__ import annotations

import configparser
import csv
import io
import json
import math
import time
from dataclasses import dataclass, field

from . import bounds as bnd
from . import boxdim
from .errors import InvalidInputError, InvdimError
from .systems import make_system

DOMINANCE_TOLERANCE = 0.05
SWEEP_COLUMNS = ["parameter", "empirical_box", "empirical_lemma21", "thm11", "thm12", "thm25", "rmk24", "verdict"]
HAUSDORFF_NOTE = (
    "Hausdorff dimension never exceeds upper box dimension, so every applicable bound "
    "also bounds the Hausdorff dimension of K"
)


@dataclass
class RunConfig:
    system: str
    params: dict = field(default_factory=dict)
    budget: int = 100_000
    seed: int = 0
    delta_max: float | None = None
    ratio: float = 0.5
    scales: int = 8
    m_max: int = bnd.DEFAULT_M_MAX
    deterministic: bool = False

    def validate(self) -> None:
        make_system(self.system, **self.params)
        if int(self.budget) != self.budget or self.budget < 1:
            raise InvalidInputError(f"budget must be a positive integer, got {self.budget}")
        if not 0.0 < self.ratio < 1.0:
            raise InvalidInputError(f"ratio must lie in (0, 1), got {self.ratio}")
        if self.scales < boxdim.MIN_SCALES:
            raise InvalidInputError(f"need at least {boxdim.MIN_SCALES} scales, got {self.scales}")
        if self.delta_max is not None and not self.delta_max > 0:
            raise InvalidInputError(f"delta_max must be positive, got {self.delta_max}")
        bnd.m_schedule(self.m_max)

    def to_dict(self) -> dict:
        return {
            "system": self.system,
            "params": dict(self.params),
            "budget": self.budget,
            "seed": self.seed,
            "schedule": {
                "delta_max": self.delta_max if self.delta_max is not None else "auto",
                "ratio": self.ratio,
                "scales": self.scales,
            },
            "m_max": self.m_max,
        }


def parse_value(text: str):
    """Numeric literal if it parses as one, else the raw string."""
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            pass
    return text


def parse_params(pairs) -> dict:
    out = {}
    for pair in pairs or ():
        key, sep, value = pair.partition("=")
        if not sep or not key.strip():
            raise InvalidInputError(f"parameter must look like key=value, got {pair!r}")
        out[key.strip()] = parse_value(value.strip())
    return out


def load_config_file(path) -> dict:
    """Flat settings from an INI file.

    ``[run]`` holds run keys (system, budget, seed, m_max), ``[schedule]``
    holds delta_max, ratio and scales, ``[params]`` holds system parameters.
    """
    parser = configparser.ConfigParser()
    if not parser.read(path):
        raise InvalidInputError(f"cannot read config file {path}")
    out = {}
    for section in ("run", "schedule"):
        if parser.has_section(section):
            out.update({k: parse_value(v) for k, v in parser.items(section)})
    if parser.has_section("params"):
        out["params"] = {k: parse_value(v) for k, v in parser.items("params")}
    unknown = set(parser.sections()) - {"run", "schedule", "params"}
    if unknown:
        raise InvalidInputError(f"unknown config sections: {', '.join(sorted(unknown))}")
    return out


@dataclass
class DimensionReport:
    system: dict
    config: dict
    sample: dict
    schedule: list
    empirical_box: boxdim.FitResult | None
    empirical_lemma21: boxdim.FitResult | None
    bounds: list
    rates: dict
    verdicts: dict
    failures: list
    notes: list
    timestamp: str | None = None

    @property
    def reference_dimension(self):
        return self.system.get("reference_dimension")

    @property
    def ok(self) -> bool:
        return not self.failures and self.empirical_box is not None and all(self.verdicts.values())

    def bound(self, theorem: str) -> bnd.BoundResult | None:
        return next((b for b in self.bounds if b.theorem == theorem), None)

    def to_dict(self) -> dict:
        out = {
            "system": self.system,
            "config": self.config,
            "sample": self.sample,
            "schedule": self.schedule,
            "empirical": {
                "box": self.empirical_box.to_dict() if self.empirical_box else None,
                "lemma21": self.empirical_lemma21.to_dict() if self.empirical_lemma21 else None,
            },
            "bounds": [b.to_dict() for b in self.bounds],
            "growth_rates": {k: v.to_dict() for k, v in self.rates.items()},
            "reference_dimension": self.reference_dimension,
            "verdicts": {k: {"dominates_empirical": v} for k, v in self.verdicts.items()},
            "failures": self.failures,
            "notes": self.notes,
            "ok": self.ok,
        }
        if self.timestamp is not None:
            out["timestamp"] = self.timestamp
        return out

    def to_json(self) -> str:
        return json.dumps(_jsonable(self.to_dict()), indent=2, sort_keys=True) + "\n"

    def summary(self) -> str:
        lines = [f"system: {self.system['name']} {self.system['params']}"]
        if self.empirical_box is not None:
            lines.append(f"empirical box dimension: {self.empirical_box.dimension:.4f}")
        if self.empirical_lemma21 is not None:
            lines.append(f"neighbourhood-volume estimate: {self.empirical_lemma21.dimension:.4f}")
        if self.reference_dimension is not None:
            lines.append(f"reference dimension: {self.reference_dimension:.4f}")
        for b in self.bounds:
            if b.applicable:
                verdict = self.verdicts.get(b.theorem)
                tag = "" if verdict is None else ("  dominates" if verdict else "  VIOLATED")
                lines.append(f"{b.theorem}: {b.value:.6f}{tag}")
            else:
                lines.append(f"{b.theorem}: inapplicable ({b.reason})")
        for f in self.failures:
            lines.append(f"failure [{f['module']}]: {f['message']}")
        lines.append("verdict: " + ("all applicable bounds dominate" if self.ok else "FAILED"))
        return "\n".join(lines)


def _jsonable(obj):
    # JSON has no infinities; keep them readable instead of emitting invalid tokens
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return obj


def _failure(module: str, exc: Exception) -> dict:
    tag = exc.module if isinstance(exc, InvdimError) else module
    return {"module": tag, "stage": module, "message": str(exc)}


def build_report(config: RunConfig) -> DimensionReport:
    """Sample K, estimate its dimension two ways, and evaluate every applicable bound.

    Estimator and bound failures are recorded rather than raised, so a
    partial report is always produced once the system is valid.
    """
    config.validate()
    system = make_system(config.system, **config.params)
    failures, notes = [], [HAUSDORFF_NOTE]
    box = lem = None
    bounds, rates, schedule, sample = [], {}, [], {}
    try:
        cloud = system.sample(config.budget, config.seed)
    except InvdimError as exc:
        failures.append(_failure("systems", exc))
        cloud = None
    if cloud is not None:
        sample = {k: v for k, v in cloud.meta.items()}
        sample["size"] = len(cloud)
        if config.delta_max is None:
            sched = boxdim.default_schedule(system, cloud, config.ratio, config.scales)
        else:
            sched = boxdim.ScaleSchedule.geometric(config.delta_max, config.ratio, config.scales)
        schedule = list(sched.deltas)
        try:
            sched.check_domain(boxdim.domain_diameter(system, cloud))
            box = boxdim.estimate_box_dimension(cloud, sched)
            lem = boxdim.lemma21_estimate(cloud, sched)
        except InvdimError as exc:
            failures.append(_failure("boxdim", exc))
        try:
            result = bnd.compute_bounds(system, cloud, config.m_max)
            bounds, rates = result["bounds"], result["rates"]
        except InvdimError as exc:
            failures.append(_failure("bounds", exc))
    verdicts = {}
    for b in bounds:
        if b.applicable and box is not None:
            verdicts[b.theorem] = bool(b.value >= box.dimension - DOMINANCE_TOLERANCE)
    return DimensionReport(
        system=system.describe(),
        config=config.to_dict(),
        sample=sample,
        schedule=schedule,
        empirical_box=box,
        empirical_lemma21=lem,
        bounds=bounds,
        rates=rates,
        verdicts=verdicts,
        failures=failures,
        notes=notes,
        timestamp=None if config.deterministic else time.strftime("%Y-%m-%dT%H:%M:%S%z"),
    )


def report_row(parameter, report: DimensionReport) -> dict:
    row = dict.fromkeys(SWEEP_COLUMNS, "")
    row["parameter"] = parameter
    if report.empirical_box is not None:
        row["empirical_box"] = report.empirical_box.dimension
    if report.empirical_lemma21 is not None:
        row["empirical_lemma21"] = report.empirical_lemma21.dimension
    for b in report.bounds:
        if b.applicable:
            row[b.theorem.lower()] = b.value
    row["verdict"] = "true" if report.ok else "false"
    return row


def sweep(config: RunConfig, parameter: str, values) -> list:
    """One report row per parameter value; a failing value yields an error row."""
    values = list(values)
    if not values:
        raise InvalidInputError("sweep needs at least one parameter value")
    rows = []
    for value in values:
        cfg = RunConfig(**{**config.__dict__, "params": {**config.params, parameter: value}})
        try:
            rows.append(report_row(value, build_report(cfg)))
        except InvdimError as exc:
            row = dict.fromkeys(SWEEP_COLUMNS, "")
            row.update(parameter=value, verdict=f"error: {exc.tagged()}")
            rows.append(row)
    return rows


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=SWEEP_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})
    return buf.getvalue()
