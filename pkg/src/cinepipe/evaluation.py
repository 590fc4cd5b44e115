"""Aggregation arithmetic for human and LLM judge studies.

Four record families come out of an evaluation run:

* rating records: per-evaluator scores on a 0 to 10 scale, keyed by
  method and metric,
* binary records: per-item pass/fail checks keyed by field,
* ranking records: per-evaluator orderings of competing methods,
* retrieval audits: one per audited sample, carrying per-field majority
  correctness and the vote dispersion across judges.

Percentages report through half-up rounding at one decimal so published
numbers reproduce bit-for-bit; Python's default banker's rounding would
flip some .x5 cases down.
"""

from __future__ import annotations

import json
import statistics
from collections import Counter, defaultdict
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal

__all__ = [
    "EvalError",
    "RatingSummary",
    "AccuracySummary",
    "AuditFieldSummary",
    "AuditSummary",
    "round1",
    "read_jsonl",
    "aggregate_ratings",
    "binary_accuracy",
    "win_rate",
    "summarize_llm_audit",
    "format_table",
]


class EvalError(ValueError):
    """Raised for malformed or empty evaluation inputs."""


def round1(value: float) -> float:
    """Round to one decimal, halves away from zero."""
    return float(Decimal(str(value)).quantize(Decimal("0.1"), rounding=ROUND_HALF_UP))


def read_jsonl(text: str) -> list[dict]:
    """Parse line-delimited JSON, skipping blank lines."""
    records = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise EvalError(f"line {lineno}: invalid JSON: {exc}") from exc
        if not isinstance(record, dict):
            raise EvalError(f"line {lineno}: expected an object")
        records.append(record)
    return records


@dataclass(frozen=True)
class RatingSummary:
    """Mean and spread of one (method, metric) rating cell."""

    method_id: str
    metric_id: str
    mean: float
    std_sample: float
    std_population: float
    count: int

    def to_dict(self) -> dict:
        return {
            "method_id": self.method_id,
            "metric_id": self.metric_id,
            "mean": self.mean,
            "std_sample": self.std_sample,
            "std_population": self.std_population,
            "count": self.count,
        }


def aggregate_ratings(
    records: list[dict],
) -> dict[tuple[str, str], RatingSummary]:
    """Mean and both dispersion flavors per (method, metric) cell.

    Records carry ``{"evaluator_id", "item_id", "method_id", "metric_id",
    "score"}`` with scores on the 0 to 10 scale. Published tables mix
    "variance" and "std" language, so both dispersions are exposed and
    callers label whichever they print.
    """
    if not records:
        raise EvalError("no rating records")
    cells: dict[tuple[str, str], list[float]] = defaultdict(list)
    for record in records:
        try:
            key = (str(record["method_id"]), str(record["metric_id"]))
            score = float(record["score"])
        except (KeyError, TypeError, ValueError) as exc:
            raise EvalError(f"malformed rating record {record!r}") from exc
        if not 0.0 <= score <= 10.0:
            raise EvalError(f"score {score} outside the 0-10 scale")
        cells[key].append(score)
    out: dict[tuple[str, str], RatingSummary] = {}
    for key in sorted(cells):
        values = cells[key]
        out[key] = RatingSummary(
            method_id=key[0],
            metric_id=key[1],
            mean=statistics.fmean(values),
            std_sample=statistics.stdev(values) if len(values) > 1 else 0.0,
            std_population=statistics.pstdev(values),
            count=len(values),
        )
    return out


@dataclass(frozen=True)
class AccuracySummary:
    """Pass rate of one binary check."""

    field: str
    percent: float
    correct: int
    total: int

    def to_dict(self) -> dict:
        return {
            "field": self.field,
            "percent": self.percent,
            "correct": self.correct,
            "total": self.total,
        }


def binary_accuracy(records: list[dict]) -> dict[str, AccuracySummary]:
    """Percentage of true checks per field.

    Records carry ``{"item", "field", "correct"}``; each field is
    tallied over the records that name it.
    """
    if not records:
        raise EvalError("no binary records")
    correct: Counter[str] = Counter()
    total: Counter[str] = Counter()
    for record in records:
        try:
            name = str(record["field"])
            flag = record["correct"]
        except KeyError as exc:
            raise EvalError(f"malformed binary record {record!r}") from exc
        total[name] += 1
        if bool(flag):
            correct[name] += 1
    return {
        name: AccuracySummary(
            field=name,
            percent=100.0 * correct[name] / total[name],
            correct=correct[name],
            total=total[name],
        )
        for name in sorted(total)
    }


def win_rate(records: list[dict]) -> dict[str, float]:
    """Share of rankings won by each method, in percent.

    Records carry ``{"evaluator_id", "item_id", "ranking": [best, ...,
    worst]}``. Every ranking must be a permutation of the same method
    set; the returned percentages sum to exactly 100 before rounding.
    """
    if not records:
        raise EvalError("no ranking records")
    methods: set[str] | None = None
    wins: Counter[str] = Counter()
    for record in records:
        ranking = record.get("ranking")
        if not isinstance(ranking, list) or not ranking:
            raise EvalError(f"record {record!r} has no ranking")
        names = [str(n) for n in ranking]
        if len(set(names)) != len(names):
            raise EvalError(f"ranking {names} repeats a method")
        if methods is None:
            methods = set(names)
        elif set(names) != methods:
            raise EvalError(
                f"ranking {names} is not a permutation of {sorted(methods)}"
            )
        wins[names[0]] += 1
    assert methods is not None
    return {name: 100.0 * wins[name] / len(records) for name in sorted(methods)}


@dataclass(frozen=True)
class AuditFieldSummary:
    """Aggregated majority-vote accuracy for one control field."""

    field: str
    percent: float
    judge_variance: float
    samples: int

    def to_dict(self) -> dict:
        return {
            "field": self.field,
            "percent": self.percent,
            "judge_variance": self.judge_variance,
            "samples": self.samples,
        }


@dataclass(frozen=True)
class AuditSummary:
    """Per-field audit results plus their unweighted row average."""

    fields: tuple[AuditFieldSummary, ...]
    average_percent: float
    judge_counts: tuple[int, ...]

    def to_dict(self) -> dict:
        return {
            "fields": [f.to_dict() for f in self.fields],
            "average_percent": self.average_percent,
            "judge_counts": list(self.judge_counts),
        }


def _audit_parts(audit) -> tuple[dict, int]:
    if isinstance(audit, dict):
        return audit["per_field"], int(audit["judge_count"])
    return audit.per_field, int(audit.judge_count)


def summarize_llm_audit(audits: list) -> AuditSummary:
    """Aggregate per-sample retrieval audits into a table row.

    Each audit carries ``per_field``: a map from control field to
    ``{"accuracy": fraction, "variance": judge-vote dispersion}`` for one
    sample, plus ``judge_count`` (dict or attribute access both work).
    Field accuracy aggregates as the mean over samples, reported in
    percent; ``judge_variance`` is the mean of per-sample vote variances.
    The row average is the unweighted mean of the field percentages.
    """
    if not audits:
        raise EvalError("no audits")
    per_field_values: dict[str, list[float]] = defaultdict(list)
    per_field_variances: dict[str, list[float]] = defaultdict(list)
    judge_counts: set[int] = set()
    field_set: set[str] | None = None
    for audit in audits:
        try:
            per_field, judge_count = _audit_parts(audit)
        except (KeyError, AttributeError, TypeError) as exc:
            raise EvalError(f"malformed audit {audit!r}") from exc
        names = set(per_field)
        if field_set is None:
            field_set = names
        elif names != field_set:
            raise EvalError(
                f"audit fields {sorted(names)} differ from {sorted(field_set)}"
            )
        judge_counts.add(judge_count)
        for name, cell in per_field.items():
            accuracy = float(cell["accuracy"])
            variance = float(cell["variance"])
            if not 0.0 <= accuracy <= 1.0:
                raise EvalError(f"accuracy {accuracy} outside [0, 1]")
            if variance < 0.0:
                raise EvalError(f"negative variance {variance}")
            per_field_values[name].append(accuracy)
            per_field_variances[name].append(variance)
    assert field_set is not None
    # report fields in the order the first audit declared them
    summaries = tuple(
        AuditFieldSummary(
            field=name,
            percent=100.0 * statistics.fmean(per_field_values[name]),
            judge_variance=statistics.fmean(per_field_variances[name]),
            samples=len(per_field_values[name]),
        )
        for name in per_field_values
    )
    average = statistics.fmean(s.percent for s in summaries)
    return AuditSummary(
        fields=summaries,
        average_percent=average,
        judge_counts=tuple(sorted(judge_counts)),
    )


def format_table(headers: list[str], rows: list[list[str]]) -> str:
    """Render an aligned plain-text table."""
    widths = [len(h) for h in headers]
    for row in rows:
        for i, cell in enumerate(row):
            widths[i] = max(widths[i], len(cell))
    def line(cells):
        return "  ".join(c.ljust(w) for c, w in zip(cells, widths)).rstrip()
    rule = "  ".join("-" * w for w in widths)
    return "\n".join([line(headers), rule, *(line(r) for r in rows)])
