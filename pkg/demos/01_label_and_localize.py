"""Label requests with a filter list, then score and classify scripts and methods.

Uses the bundled intuit-style page, where utag.js takes part in 132 tracking
and 160 functional requests.

    python demos/01_label_and_localize.py
"""

from jsblock.filters import parse_list
from jsblock.fixtures import fixture_path, load_fixture_corpus
from jsblock.labeler import RequestLabel, label_trace
from jsblock.localizer import Thresholds, format_score, localize

filters = parse_list(fixture_path("filters.txt").read_text(), "filters.txt")
print(f"filter list: {filters.stats.accepted} rules accepted, {filters.stats.skipped} skipped")

labeled = [label_trace(trace, filters) for _, trace in load_fixture_corpus("intuit")]
page = labeled[0]
print(f"{page.trace.page_url}: {page.count(RequestLabel.TRACKING)} tracking, "
      f"{page.count(RequestLabel.FUNCTIONAL)} functional requests")

cls = localize(labeled)
print(f"\n{'unit':<40} {'n_t':>4} {'n_f':>4} {'score':>10}  class")
for unit, rec in cls.units.items():
    name = unit.script_url.rsplit("/", 1)[-1] + (f"#{unit.method_name}" if unit.method_name else "")
    print(f"{name:<40} {rec.counts.tracking_count:>4} {rec.counts.functional_count:>4} "
          f"{format_score(rec.score):>10}  {rec.unit_class.value}")

# With thresholds (0, 0) any unit seen on both sides is mixed.
degenerate = localize(labeled, thresholds=Thresholds(0, 0))
print("\nthresholds (0, 0):", sorted({r.unit_class.value for r in degenerate.units.values()}))
