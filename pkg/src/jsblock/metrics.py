"""Breakage metrics: missing requests, missing functional tags, decile histograms."""

from __future__ import annotations

import csv
import enum
import io
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .blocking import BlockingConfig, SimulatedTrace
from .labeler import LabeledTrace, RequestLabel
from .localizer import Classification, UnitClass
from .psl import DomainError, registrable_domain
from .trace import CodeUnitId, PageTrace, TagKind, UnitKind

DECILE_LABELS = ("0-10", "11-20", "21-30", "31-40", "41-50",
                 "51-60", "61-70", "71-80", "81-90", "91-100")
TAG_KINDS = tuple(TagKind)


class RangeError(ValueError):
    pass


class DuplicateAnnotation(ValueError):
    pass


def pct(part: int, whole: int) -> float:
    """Percentage, 0 when the denominator is 0."""
    return 100.0 * part / whole if whole else 0.0


@dataclass(frozen=True)
class RequestDiff:
    missing_tracking: int = 0
    missing_functional: int = 0
    control_tracking: int = 0
    control_functional: int = 0

    def __post_init__(self) -> None:
        if self.missing_tracking > self.control_tracking or self.missing_functional > self.control_functional:
            raise ValueError("missing requests exceed control counts")

    @property
    def pct_reduction_tracking(self) -> float:
        return pct(self.missing_tracking, self.control_tracking)

    @property
    def pct_reduction_functional(self) -> float:
        return pct(self.missing_functional, self.control_functional)


@dataclass(frozen=True)
class TagDiff:
    missing: Mapping[TagKind, int] = field(default_factory=lambda: {k: 0 for k in TAG_KINDS})

    def __getitem__(self, kind: TagKind | str) -> int:
        return self.missing.get(TagKind(kind), 0)

    @property
    def total(self) -> int:
        return sum(self.missing.values())


def diff_requests(control: LabeledTrace, sim: SimulatedTrace) -> RequestDiff:
    missing = Counter(control.labels[rid] for rid in sim.removed)
    return RequestDiff(
        missing_tracking=missing[RequestLabel.TRACKING],
        missing_functional=missing[RequestLabel.FUNCTIONAL],
        control_tracking=control.count(RequestLabel.TRACKING),
        control_functional=control.count(RequestLabel.FUNCTIONAL),
    )


def diff_tags(control: PageTrace, labels: Mapping[str, RequestLabel], sim: SimulatedTrace) -> TagDiff:
    """Tags whose src was fetched by a removed request that was Functional in control."""
    functional_lost = {
        r.url for r in control.requests
        if r.request_id in sim.removed and labels[r.request_id] is RequestLabel.FUNCTIONAL
    }
    missing = {k: 0 for k in TAG_KINDS}
    for tag in control.tags:
        if tag.src_url in functional_lost:
            missing[tag.tag_kind] += 1
    return TagDiff(missing)


@dataclass(frozen=True)
class DecileHistogram:
    bins: tuple[int, ...] = (0,) * 10

    def __post_init__(self) -> None:
        if len(self.bins) != 10:
            raise ValueError("a decile histogram has exactly 10 bins")

    def as_dict(self) -> dict[str, int]:
        return dict(zip(DECILE_LABELS, self.bins))

    def __add__(self, other: "DecileHistogram") -> "DecileHistogram":
        return DecileHistogram(tuple(a + b for a, b in zip(self.bins, other.bins)))


def decile_index(value: float) -> int:
    """Bins are (0,10], (10,20], ..., (90,100]; 0 lands in the first bin."""
    if math.isnan(value) or not 0 <= value <= 100:
        raise RangeError(f"percentage outside [0, 100]: {value!r}")
    return max(math.ceil(value / 10) - 1, 0)


def bin_deciles(values: Iterable[float]) -> DecileHistogram:
    bins = [0] * 10
    for v in values:
        bins[decile_index(v)] += 1
    return DecileHistogram(tuple(bins))


@dataclass(frozen=True)
class SiteDiff:
    site: str
    config: BlockingConfig
    requests: RequestDiff
    tags: TagDiff


@dataclass(frozen=True)
class CorpusSummary:
    config: BlockingConfig
    sites: int
    control_tracking: int
    control_functional: int
    missing_tracking: int
    missing_functional: int
    mean_pct_reduction_tracking: float
    mean_pct_reduction_functional: float
    tracking_histogram: DecileHistogram
    functional_histogram: DecileHistogram
    missing_tags: Mapping[TagKind, int]


def corpus_report(diffs: Sequence[SiteDiff], config: BlockingConfig | str) -> CorpusSummary:
    """Totals plus the unweighted per-site mean of reduction percentages."""
    config = BlockingConfig(config)
    rows = [d for d in diffs if d.config is config]
    t_pcts = [d.requests.pct_reduction_tracking for d in rows]
    f_pcts = [d.requests.pct_reduction_functional for d in rows]
    tags = {k: sum(d.tags[k] for d in rows) for k in TAG_KINDS}
    return CorpusSummary(
        config=config,
        sites=len(rows),
        control_tracking=sum(d.requests.control_tracking for d in rows),
        control_functional=sum(d.requests.control_functional for d in rows),
        missing_tracking=sum(d.requests.missing_tracking for d in rows),
        missing_functional=sum(d.requests.missing_functional for d in rows),
        mean_pct_reduction_tracking=sum(t_pcts) / len(rows) if rows else 0.0,
        mean_pct_reduction_functional=sum(f_pcts) / len(rows) if rows else 0.0,
        tracking_histogram=bin_deciles(t_pcts),
        functional_histogram=bin_deciles(f_pcts),
        missing_tags=tags,
    )


# -- manual inspection annotations -------------------------------------------

class Category(str, enum.Enum):
    NAVIGATION = "navigation"
    SSO = "sso"
    APPEARANCE = "appearance"
    ADDITIONAL = "additional"


class Severity(str, enum.Enum):
    NONE = "none"
    MINOR = "minor"
    MAJOR = "major"


@dataclass(frozen=True)
class BreakageAnnotation:
    site: str
    config: BlockingConfig
    category: Category
    severity: Severity
    note: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "config", BlockingConfig(self.config))
        object.__setattr__(self, "category", Category(self.category))
        object.__setattr__(self, "severity", Severity(self.severity))


ANNOTATION_COLUMNS = ["site", "config", "category", "severity", "note"]


def aggregate_annotations(records: Iterable[BreakageAnnotation]
                          ) -> dict[tuple[BlockingConfig, Category, Severity], int]:
    seen: set[tuple[str, BlockingConfig, Category]] = set()
    table: Counter[tuple[BlockingConfig, Category, Severity]] = Counter()
    for rec in records:
        key = (rec.site, rec.config, rec.category)
        if key in seen:
            raise DuplicateAnnotation(f"duplicate annotation for {rec.site} {rec.config.value} {rec.category.value}")
        seen.add(key)
        table[(rec.config, rec.category, rec.severity)] += 1
    return dict(sorted(table.items(), key=lambda kv: tuple(x.value for x in kv[0])))


def read_annotations(text: str) -> list[BreakageAnnotation]:
    reader = csv.DictReader(io.StringIO(text))
    missing = set(ANNOTATION_COLUMNS[:4]) - set(reader.fieldnames or ())
    if missing:
        raise ValueError(f"annotation CSV lacks columns: {sorted(missing)}")
    return [BreakageAnnotation(row["site"], row["config"], row["category"], row["severity"],
                               row.get("note") or "") for row in reader]


def write_annotations(records: Iterable[BreakageAnnotation]) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(ANNOTATION_COLUMNS)
    for r in records:
        writer.writerow([r.site, r.config.value, r.category.value, r.severity.value, r.note])
    return out.getvalue()


# -- top units ----------------------------------------------------------------

@dataclass(frozen=True)
class TopUnitRow:
    domain: str
    script_url: str
    method_name: str
    pct_sites: float
    unit_class: UnitClass | None


def top_units_report(cls: Classification, per_site_presence: Mapping[str, Iterable[CodeUnitId]],
                     kind: UnitKind = UnitKind.METHOD, limit: int | None = None) -> list[TopUnitRow]:
    """Rank units by the share of sites they appear on.

    Ties are broken by (domain, script, method).
    """
    n_sites = len(per_site_presence)
    seen: Counter[CodeUnitId] = Counter()
    for units in per_site_presence.values():
        seen.update({u for u in units if u.kind is kind})
    rows = []
    for unit, count in seen.items():
        try:
            domain = registrable_domain(unit.script_url)
        except DomainError:
            domain = ""
        rows.append(TopUnitRow(domain, unit.script_url, unit.method_name or "",
                               pct(count, n_sites), cls.class_of(unit)))
    rows.sort(key=lambda r: (-r.pct_sites, r.domain, r.script_url, r.method_name))
    return rows[:limit] if limit is not None else rows
