"""Breakage metrics: missing requests and tags, per-site deciles, threshold sweep.

    python demos/04_breakage_report.py
"""

from jsblock.blocking import ALL_CONFIGS, build_plan, simulate
from jsblock.filters import parse_list
from jsblock.fixtures import fixture_path, load_fixture_corpus
from jsblock.labeler import label_trace
from jsblock.localizer import Thresholds, accumulate, localize, sensitivity
from jsblock.metrics import SiteDiff, corpus_report, diff_requests, diff_tags, top_units_report
from jsblock.trace import UnitKind, units_of

filters = parse_list(fixture_path("filters.txt").read_text(), "filters.txt")
labeled = {site: label_trace(t, filters) for site, t in load_fixture_corpus()}
cls = localize(labeled.values())

diffs = []
for site, lt in labeled.items():
    for config in ALL_CONFIGS:
        sim = simulate(lt, build_plan(cls, config))
        diffs.append(SiteDiff(site, config, diff_requests(lt, sim), diff_tags(lt.trace, lt.labels, sim)))

print(f"{'config':>6} {'%trk':>8} {'%fun':>8}  missing tags")
for config in ALL_CONFIGS:
    s = corpus_report(diffs, config)
    tags = {k.value: n for k, n in s.missing_tags.items() if n}
    print(f"{config.value:>6} {s.mean_pct_reduction_tracking:8.1f} {s.mean_pct_reduction_functional:8.1f}  {tags}")

tms = corpus_report(diffs, "TMS")
print("\nTMS functional reduction deciles:", tms.functional_histogram.as_dict())

presence = {site: set().union(*(units_of(r) for r in lt.trace.requests)) for site, lt in labeled.items()}
print("\nmost widespread methods")
for row in top_units_report(cls, presence, limit=3):
    print(f"  {row.domain:<22} {row.method_name:<8} {row.pct_sites:5.1f}%  {row.unit_class.value}")

counts = accumulate(labeled.values())
for row in sensitivity(counts, [Thresholds(), Thresholds(-1, 1), Thresholds(0, 0)]):
    mixed = row.tally(UnitKind.SCRIPT, "mixed"), row.tally(UnitKind.METHOD, "mixed")
    print(f"thresholds {row.thresholds.as_tuple()}: mixed scripts {mixed[0]}, mixed methods {mixed[1]}")
