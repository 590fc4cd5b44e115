"""Balanced control-signal planning.

Random sampling of control variables (even by an LLM) collapses onto a few
frequent choices, so plans are built by stratified enumeration instead: each
dimension is assigned round-robin over its categories and then shuffled with
a seeded RNG, which guarantees every marginal is balanced to within one
sample for any plan size. Movements for second and third shots are drawn
greedily toward the least-used label that is still distinct within the
sample.
"""
from __future__ import annotations

import hashlib
import json
import random
from dataclasses import dataclass, field, asdict

from .taxonomy import Taxonomy, TaxonomyError


@dataclass(frozen=True)
class ControlSignals:
    """One sample's conditioning tuple."""

    sample_id: str
    genre: str
    shot_count: int
    movements: tuple[str, ...]
    subject_count: str
    dynamicity: str

    def validate(self, taxonomy: Taxonomy) -> None:
        if self.genre not in taxonomy.genres:
            raise TaxonomyError(f"unknown genre: {self.genre!r}")
        if self.shot_count not in taxonomy.shot_counts:
            raise TaxonomyError(f"shot_count {self.shot_count} not allowed")
        if self.subject_count not in taxonomy.subject_counts:
            raise TaxonomyError(f"unknown subject_count: {self.subject_count!r}")
        if self.dynamicity not in taxonomy.dynamicity:
            raise TaxonomyError(f"unknown dynamicity: {self.dynamicity!r}")
        if len(self.movements) != self.shot_count:
            raise TaxonomyError(
                f"{len(self.movements)} movements for shot_count {self.shot_count}"
            )
        if len(set(self.movements)) != len(self.movements):
            raise TaxonomyError(f"repeated movement in sample {self.sample_id}")
        for m in self.movements:
            if m not in taxonomy.movement_families:
                raise TaxonomyError(f"unknown movement: {m!r}")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["movements"] = list(self.movements)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> ControlSignals:
        return cls(
            sample_id=d["sample_id"],
            genre=d["genre"],
            shot_count=int(d["shot_count"]),
            movements=tuple(d["movements"]),
            subject_count=d["subject_count"],
            dynamicity=d["dynamicity"],
        )


@dataclass
class BalancePlan:
    """A deterministic, marginal-balanced batch of control signals."""

    entries: list[ControlSignals]
    seed: int
    # full category space per dimension; lets the report count zeros
    categories: dict[str, list] = field(default_factory=dict)
    report: dict[str, dict] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.entries)

    def to_jsonl(self) -> str:
        """One self-contained record per line."""
        lines = [
            json.dumps({"seed": self.seed, **e.to_dict()}, ensure_ascii=False)
            for e in self.entries
        ]
        return "\n".join(lines) + ("\n" if lines else "")

    @classmethod
    def from_jsonl(cls, text: str, taxonomy: Taxonomy | None = None) -> BalancePlan:
        entries = []
        seed = 0
        for line in text.splitlines():
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            seed = int(rec.pop("seed", 0))
            entries.append(ControlSignals.from_dict(rec))
        categories = _dimension_categories(taxonomy) if taxonomy else {}
        plan = cls(entries=entries, seed=seed, categories=categories)
        plan.report = balance_report(plan)
        return plan


def _dimension_categories(taxonomy: Taxonomy) -> dict[str, list]:
    return {
        "genre": list(taxonomy.genres),
        "shot_count": list(taxonomy.shot_counts),
        "movement": list(taxonomy.movements),
        "subject_count": list(taxonomy.subject_counts),
        "dynamicity": list(taxonomy.dynamicity),
    }


def _dimension_rng(seed: int, dimension: str) -> random.Random:
    # independent, platform-stable stream per dimension
    digest = hashlib.sha256(f"{seed}:{dimension}".encode()).digest()
    return random.Random(int.from_bytes(digest[:8], "big"))


def _stratified(n: int, categories: tuple, seed: int, dimension: str) -> list:
    """Round-robin assignment over categories, then a seeded shuffle.

    Counts differ by at most one for any n; the shuffle only permutes which
    sample gets which category.
    """
    assigned = [categories[i % len(categories)] for i in range(n)]
    _dimension_rng(seed, dimension).shuffle(assigned)
    return assigned


def generate_plan(n: int, taxonomy: Taxonomy, seed: int) -> BalancePlan:
    """Generate n control-signal tuples, balanced per dimension.

    Deterministic under (n, taxonomy, seed). The movement dimension is
    balanced on the first-shot marginal; movements for later shots are the
    least-used labels overall that keep the sample's movements distinct.
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    if max(taxonomy.shot_counts) > len(taxonomy.movements):
        raise TaxonomyError(
            "shot_count exceeds movement vocabulary; distinct per-shot "
            "movements are unsatisfiable"
        )

    genres = _stratified(n, taxonomy.genres, seed, "genre")
    shot_counts = _stratified(n, taxonomy.shot_counts, seed, "shot_count")
    first_moves = _stratified(n, taxonomy.movements, seed, "movement")
    subjects = _stratified(n, taxonomy.subject_counts, seed, "subject_count")
    dynamicities = _stratified(n, taxonomy.dynamicity, seed, "dynamicity")

    usage = {m: 0 for m in taxonomy.movements}
    for m in first_moves:
        usage[m] += 1

    entries: list[ControlSignals] = []
    for i in range(n):
        movements = [first_moves[i]]
        for _ in range(1, shot_counts[i]):
            eligible = [m for m in taxonomy.movements if m not in movements]
            pick = min(eligible, key=lambda m: (usage[m], taxonomy.movements.index(m)))
            usage[pick] += 1
            movements.append(pick)
        entries.append(
            ControlSignals(
                sample_id=f"s{seed:08x}-{i:05d}",
                genre=genres[i],
                shot_count=shot_counts[i],
                movements=tuple(movements),
                subject_count=subjects[i],
                dynamicity=dynamicities[i],
            )
        )

    plan = BalancePlan(
        entries=entries, seed=seed, categories=_dimension_categories(taxonomy)
    )
    plan.report = balance_report(plan)
    return plan


def balance_report(plan: BalancePlan) -> dict[str, dict]:
    """Per-dimension category counts and max deviation (max - min count).

    Deviation is taken over the plan's full category space, so categories
    with zero samples count. The movement dimension reports the first-shot
    marginal, which is the balanced one; counts over all shot slots are
    included separately for reference.
    """
    dims: dict[str, dict] = {}

    def tally(name: str, values: list) -> None:
        counts = {c: 0 for c in plan.categories.get(name, [])}
        for v in values:
            counts[v] = counts.get(v, 0) + 1
        dims[name] = {"counts": counts, "max_deviation": _deviation(counts.values())}

    tally("genre", [e.genre for e in plan.entries])
    tally("shot_count", [e.shot_count for e in plan.entries])
    tally("movement", [e.movements[0] for e in plan.entries if e.movements])
    tally("subject_count", [e.subject_count for e in plan.entries])
    tally("dynamicity", [e.dynamicity for e in plan.entries])

    all_slots: dict[str, int] = {}
    for e in plan.entries:
        for m in e.movements:
            all_slots[m] = all_slots.get(m, 0) + 1
    dims["movement_all_slots"] = {
        "counts": all_slots,
        "max_deviation": _deviation(all_slots.values()),
    }
    return dims


def _deviation(counts) -> int:
    counts = list(counts)
    if not counts:
        return 0
    return max(counts) - min(counts)
