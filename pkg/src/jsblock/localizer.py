"""Score scripts and methods by the requests they initiate.

score = log10(n_tracking / n_functional) over the requests whose stack
contains the unit. Units above the upper threshold are tracking, below the
lower one functional, anything in between mixed.
"""

from __future__ import annotations

import csv
import enum
import io
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .labeler import LabeledTrace, RequestLabel
from .trace import Attribution, CodeUnitId, UnitKind, units_of

DEFAULT_LOWER = -2.0
DEFAULT_UPPER = 2.0


class UndefinedScore(ValueError):
    pass


class UnitClass(str, enum.Enum):
    TRACKING = "tracking"
    FUNCTIONAL = "functional"
    MIXED = "mixed"


@dataclass(frozen=True)
class Thresholds:
    """Score band outside of which a unit is pure tracking or pure functional.

    ``Thresholds(0, 0)`` is the degenerate no-threshold mode: any unit seen
    in both tracking and functional requests is Mixed.
    """

    lower: float = DEFAULT_LOWER
    upper: float = DEFAULT_UPPER

    def __post_init__(self) -> None:
        if not (self.lower < self.upper or self.degenerate):
            raise ValueError(f"thresholds need lower < upper, got ({self.lower}, {self.upper})")

    @property
    def degenerate(self) -> bool:
        return self.lower == 0 and self.upper == 0

    def as_tuple(self) -> tuple[float, float]:
        return (self.lower, self.upper)


@dataclass(frozen=True)
class ParticipationCounts:
    unit: CodeUnitId
    tracking_count: int = 0
    functional_count: int = 0

    def __add__(self, other: "ParticipationCounts") -> "ParticipationCounts":
        if other.unit != self.unit:
            raise ValueError("cannot add counts of different units")
        return ParticipationCounts(self.unit, self.tracking_count + other.tracking_count,
                                   self.functional_count + other.functional_count)


@dataclass(frozen=True)
class UnitRecord:
    counts: ParticipationCounts
    score: float
    unit_class: UnitClass


@dataclass(frozen=True)
class Classification:
    units: Mapping[CodeUnitId, UnitRecord]
    attribution: Attribution = Attribution.FULL_STACK
    thresholds: Thresholds = field(default_factory=Thresholds)

    def class_of(self, unit: CodeUnitId) -> UnitClass | None:
        record = self.units.get(unit)
        return record.unit_class if record else None

    def select(self, kind: UnitKind, *classes: UnitClass) -> list[CodeUnitId]:
        return sorted(
            (u for u, rec in self.units.items()
             if u.kind is kind and (not classes or rec.unit_class in classes)),
            key=CodeUnitId.sort_key,
        )


def accumulate(traces: Iterable[LabeledTrace], attribution: Attribution | str = Attribution.FULL_STACK
               ) -> dict[CodeUnitId, ParticipationCounts]:
    """Count, per unit, the tracking and functional requests it took part in.

    A unit is counted at most once per request even when it recurs in the stack.
    """
    attribution = Attribution(attribution)
    tracking: Counter[CodeUnitId] = Counter()
    functional: Counter[CodeUnitId] = Counter()
    for labeled in traces:
        for request in labeled.trace.requests:
            bucket = tracking if labeled.labels[request.request_id] is RequestLabel.TRACKING else functional
            bucket.update(units_of(request, attribution))
    return {
        unit: ParticipationCounts(unit, tracking[unit], functional[unit])
        for unit in sorted(tracking.keys() | functional.keys(), key=CodeUnitId.sort_key)
    }


def merge_counts(*maps: Mapping[CodeUnitId, ParticipationCounts]) -> dict[CodeUnitId, ParticipationCounts]:
    merged: dict[CodeUnitId, ParticipationCounts] = {}
    for m in maps:
        for unit, c in m.items():
            merged[unit] = merged[unit] + c if unit in merged else c
    return dict(sorted(merged.items(), key=lambda kv: kv[0].sort_key()))


def tracking_score(n_tracking: int, n_functional: int) -> float:
    """log10(n_tracking / n_functional), with +/-inf when one side is zero."""
    if n_tracking < 0 or n_functional < 0:
        raise ValueError("counts must be non-negative")
    if n_tracking == 0 and n_functional == 0:
        raise UndefinedScore("tracking score undefined for a unit with no participation")
    if n_functional == 0:
        return math.inf
    if n_tracking == 0:
        return -math.inf
    return math.log10(n_tracking / n_functional)


def classify(score: float, thresholds: Thresholds = Thresholds()) -> UnitClass:
    if math.isnan(score):
        raise UndefinedScore("score is NaN")
    if score > thresholds.upper:
        return UnitClass.TRACKING
    if score < thresholds.lower:
        return UnitClass.FUNCTIONAL
    return UnitClass.MIXED


def classify_counts(counts: ParticipationCounts, thresholds: Thresholds = Thresholds()) -> UnitClass:
    if thresholds.degenerate:
        if counts.tracking_count and counts.functional_count:
            return UnitClass.MIXED
        if counts.tracking_count:
            return UnitClass.TRACKING
        if counts.functional_count:
            return UnitClass.FUNCTIONAL
        raise UndefinedScore(f"no participation recorded for {counts.unit}")
    return classify(tracking_score(counts.tracking_count, counts.functional_count), thresholds)


def build_classification(counts: Mapping[CodeUnitId, ParticipationCounts],
                         thresholds: Thresholds = Thresholds(),
                         attribution: Attribution | str = Attribution.FULL_STACK) -> Classification:
    units = {}
    for unit in sorted(counts, key=CodeUnitId.sort_key):
        c = counts[unit]
        units[unit] = UnitRecord(c, tracking_score(c.tracking_count, c.functional_count),
                                 classify_counts(c, thresholds))
    return Classification(units, Attribution(attribution), thresholds)


def localize(traces: Iterable[LabeledTrace], attribution: Attribution | str = Attribution.FULL_STACK,
             thresholds: Thresholds = Thresholds()) -> Classification:
    return build_classification(accumulate(traces, attribution), thresholds, attribution)


@dataclass(frozen=True)
class SensitivityRow:
    thresholds: Thresholds
    tallies: Mapping[tuple[UnitKind, UnitClass], int]
    mixed_script_pct: Mapping[str, float]

    def tally(self, kind: UnitKind, cls: UnitClass) -> int:
        return self.tallies.get((kind, cls), 0)


def sensitivity(counts: Mapping[CodeUnitId, ParticipationCounts],
                threshold_list: Sequence[Thresholds | tuple[float, float]],
                scripts_by_site: Mapping[str, Iterable[str]] | None = None) -> list[SensitivityRow]:
    """Class tallies per threshold pair, plus each site's share of mixed scripts."""
    rows = []
    for t in threshold_list:
        t = t if isinstance(t, Thresholds) else Thresholds(*t)
        classes = {u: classify_counts(c, t) for u, c in counts.items()}
        tallies: Counter[tuple[UnitKind, UnitClass]] = Counter(
            (u.kind, cls) for u, cls in classes.items())
        per_site = {}
        for site, scripts in (scripts_by_site or {}).items():
            scripts = set(scripts)
            if not scripts:
                per_site[site] = 0.0
                continue
            mixed = sum(1 for s in scripts if classes.get(CodeUnitId.script(s)) is UnitClass.MIXED)
            per_site[site] = 100.0 * mixed / len(scripts)
        rows.append(SensitivityRow(t, dict(tallies), per_site))
    return rows


# -- export ------------------------------------------------------------------

CSV_COLUMNS = ["unit_kind", "script_url", "method_name", "n_tracking", "n_functional", "score", "class"]


def format_score(score: float) -> str:
    if math.isinf(score):
        return "inf" if score > 0 else "-inf"
    return f"{score:.6f}"


def classification_csv(cls: Classification) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for unit, rec in cls.units.items():
        writer.writerow([unit.kind.value, unit.script_url, unit.method_name or "",
                         rec.counts.tracking_count, rec.counts.functional_count,
                         format_score(rec.score), rec.unit_class.value])
    return out.getvalue()


def classification_to_obj(cls: Classification) -> dict:
    return {
        "attribution": cls.attribution.value,
        "thresholds": list(cls.thresholds.as_tuple()),
        "units": [
            {"unit_kind": u.kind.value, "script_url": u.script_url, "method_name": u.method_name,
             "n_tracking": r.counts.tracking_count, "n_functional": r.counts.functional_count,
             "score": format_score(r.score), "class": r.unit_class.value}
            for u, r in cls.units.items()
        ],
    }


def classification_from_obj(obj: dict) -> Classification:
    units = {}
    for item in obj["units"]:
        unit = CodeUnitId(UnitKind(item["unit_kind"]), item["script_url"], item["method_name"])
        counts = ParticipationCounts(unit, item["n_tracking"], item["n_functional"])
        units[unit] = UnitRecord(counts, tracking_score(counts.tracking_count, counts.functional_count),
                                 UnitClass(item["class"]))
    return Classification(units, Attribution(obj["attribution"]), Thresholds(*obj["thresholds"]))
