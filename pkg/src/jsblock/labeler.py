"""Binary tracking/functional request labels from filter-list verdicts."""

from __future__ import annotations

import csv
import enum
import io
from dataclasses import dataclass
from typing import Mapping

from .filters import FilterSet, MatchContext, Verdict, match_url
from .trace import PageTrace, trace_from_obj, trace_to_obj


class RequestLabel(str, enum.Enum):
    TRACKING = "tracking"
    FUNCTIONAL = "functional"


@dataclass(frozen=True)
class LabeledTrace:
    trace: PageTrace
    labels: Mapping[str, RequestLabel]
    deciding_rule: Mapping[str, str | None]

    def __post_init__(self) -> None:
        ids = {r.request_id for r in self.trace.requests}
        if set(self.labels) != ids:
            raise ValueError("labels must cover exactly the trace's requests")

    def label(self, request_id: str) -> RequestLabel:
        return self.labels[request_id]

    def count(self, label: RequestLabel) -> int:
        return sum(1 for v in self.labels.values() if v is label)


def label_trace(trace: PageTrace, filters: FilterSet) -> LabeledTrace:
    """Block verdicts become Tracking; Allow and NoMatch become Functional."""
    labels: dict[str, RequestLabel] = {}
    rules: dict[str, str | None] = {}
    for request in trace.requests:
        ctx = MatchContext(request.url, trace.page_url, request.resource_kind)
        decision = match_url(filters, ctx)
        labels[request.request_id] = (
            RequestLabel.TRACKING if decision.verdict is Verdict.BLOCK else RequestLabel.FUNCTIONAL
        )
        rules[request.request_id] = decision.rule.raw if decision.rule is not None else None
    return LabeledTrace(trace, labels, rules)


def labeled_to_obj(labeled: LabeledTrace) -> dict:
    return {
        "trace": trace_to_obj(labeled.trace),
        "labels": {k: v.value for k, v in labeled.labels.items()},
        "deciding_rule": dict(labeled.deciding_rule),
    }


def labeled_from_obj(obj: dict) -> LabeledTrace:
    trace = trace_from_obj(obj["trace"])
    labels = {k: RequestLabel(v) for k, v in obj["labels"].items()}
    rules = {r.request_id: obj.get("deciding_rule", {}).get(r.request_id) for r in trace.requests}
    return LabeledTrace(trace, labels, rules)


def labels_csv(labeled: LabeledTrace) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["request_id", "url", "label", "deciding_rule"])
    for r in labeled.trace.requests:
        writer.writerow([r.request_id, r.url, labeled.labels[r.request_id].value,
                         labeled.deciding_rule.get(r.request_id) or ""])
    return out.getvalue()
