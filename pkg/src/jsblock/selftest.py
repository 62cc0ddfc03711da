"""Acceptance checks runnable without pytest (``jsblock selftest``).

Each check raises ``AssertionError`` on failure and returns a short detail
string on success.
"""

from __future__ import annotations

import filecmp
import random
import tempfile
import time
from pathlib import Path
from typing import Callable

from ._reference import random_rule, random_url, reference_decision, reference_simulate
from .blocking import (ALL_CONFIGS, BlockingConfig, BlockingPlan, MethodScope, build_plan,
                       check_containments, simulate)
from .filters import FilterSet, MatchContext, ParseStats, RuleSyntaxError, UnsupportedRule, Verdict, \
    match_url, parse_list, parse_rule
from .fixtures import (FETCH_SNIPPET, ANALYTICS_SNIPPET, UTAG, fixture_path, load_fixture_corpus,
                       random_labeled_trace)
from .labeler import label_trace
from .localizer import Thresholds, UnitClass, accumulate, build_classification, localize
from .metrics import bin_deciles, diff_requests, diff_tags
from .rewriter import rename_method
from .trace import CodeUnitId, ResourceKind, UnitKind

WORKED_EXAMPLE = {
    CodeUnitId.script(UTAG): (-0.0836, UnitClass.MIXED),
    CodeUnitId.method(UTAG, "loader"): (2.1173, UnitClass.TRACKING),
    CodeUnitId.method(UTAG, "fireCORS"): (-2.2014, UnitClass.FUNCTIONAL),
}


def fixture_filters() -> FilterSet:
    return parse_list(fixture_path("filters.txt").read_text(encoding="utf-8"), "filters.txt")


def worked_example_classification(thresholds: Thresholds = Thresholds()):
    filters = fixture_filters()
    labeled = [label_trace(t, filters) for _, t in load_fixture_corpus("intuit")]
    return build_classification(accumulate(labeled), thresholds)


def check_worked_example(seed: int, scale: float) -> str:
    start = time.perf_counter()
    cls = worked_example_classification()
    elapsed = time.perf_counter() - start
    for unit, (score, klass) in WORKED_EXAMPLE.items():
        rec = cls.units[unit]
        assert abs(rec.score - score) <= 1e-4, f"{unit}: score {rec.score} != {score}"
        assert rec.unit_class is klass, f"{unit}: {rec.unit_class} != {klass}"
    assert elapsed < 1.0, f"took {elapsed:.2f}s"
    return f"scores within 1e-4, {elapsed * 1000:.0f} ms"


def check_listings(seed: int, scale: float) -> str:
    result = rename_method(FETCH_SNIPPET, "u", "donotExecuteMe")
    expected = FETCH_SNIPPET.replace("u = function(e) {", "donotExecuteMe = function(e) {", 1)
    assert result.count == 1, f"count {result.count}"
    assert result.source.encode() == expected.encode(), "fetch snippet bytes differ"
    for name in ("wd", "ta"):
        r = rename_method(ANALYTICS_SNIPPET, name)
        assert r.count == 1, f"{name}: count {r.count}"
        assert len(r.source) - len(ANALYTICS_SNIPPET) == len("doNotExecuteMe") - len(name)
    return "fetch snippet byte-exact, wd and ta renamed once each"


def check_config_table(seed: int, scale: float) -> str:
    cls = worked_example_classification()
    scripts = {u.script_url for u in cls.units if u.kind is UnitKind.SCRIPT}
    by_class = {c: {u.script_url for u in cls.select(UnitKind.SCRIPT, c)} for c in UnitClass}
    t_methods = {(u.script_url, u.method_name) for u in cls.select(UnitKind.METHOD, UnitClass.TRACKING)}
    expected = {
        BlockingConfig.CTRL: (set(), set()),
        BlockingConfig.ALL: (scripts, set()),
        BlockingConfig.TS: (by_class[UnitClass.TRACKING], set()),
        BlockingConfig.MS: (by_class[UnitClass.MIXED], set()),
        BlockingConfig.TMS: (by_class[UnitClass.TRACKING] | by_class[UnitClass.MIXED], set()),
        BlockingConfig.TM: (set(), t_methods),
    }
    for config, (s, m) in expected.items():
        plan = build_plan(cls, config)
        assert set(plan.blocked_scripts) == s, f"{config.value} scripts {sorted(plan.blocked_scripts)}"
        assert set(plan.blocked_methods) == m, f"{config.value} methods {sorted(plan.blocked_methods)}"
    assert expected[BlockingConfig.MS][0] == {UTAG} and expected[BlockingConfig.TM][1] == {(UTAG, "loader")}
    return "six rows match"


def check_containment(seed: int, scale: float) -> str:
    rng = random.Random(seed)
    n = max(1, int(1000 * scale))
    violations = 0
    for _ in range(n):
        lt = random_labeled_trace(rng)
        lower = rng.choice([-2.0, -1.0, -0.5, 0.0])
        thresholds = Thresholds(lower, rng.choice([0.5, 1.0, 2.0])) if lower else Thresholds(0, 0)
        cls = localize([lt], rng.choice(["full_stack", "top_frame"]), thresholds)
        removed = {c: simulate(lt, build_plan(cls, c)).removed_ids for c in ALL_CONFIGS}
        found = check_containments(removed)
        R = removed
        independent = (R[BlockingConfig.CTRL] == frozenset()
                       and R[BlockingConfig.TS] <= R[BlockingConfig.TMS] <= R[BlockingConfig.ALL]
                       and R[BlockingConfig.MS] <= R[BlockingConfig.TMS]
                       and R[BlockingConfig.TM] <= R[BlockingConfig.TMS])
        violations += bool(found) or not independent
    assert violations == 0, f"{violations} violating traces"
    return f"{n} traces, 0 violations"


def check_sim_oracle(seed: int, scale: float) -> str:
    rng = random.Random(seed + 1)
    n = max(1, int(500 * scale))
    for i in range(n):
        lt = random_labeled_trace(rng, max_requests=20)
        frames = {(f.script_url, f.method_name) for r in lt.trace.requests for f in r.stack}
        scripts = sorted({s for s, _ in frames} | {r.delivered_script for r in lt.trace.requests
                                                  if r.delivered_script})
        blocked = frozenset(s for s in scripts if rng.random() < 0.3)
        methods = frozenset(m for m in sorted(frames) if rng.random() < 0.3)
        plan = BlockingPlan(BlockingConfig.ALL, blocked) if not methods or rng.random() < 0.3 else \
            BlockingPlan(BlockingConfig.TM, frozenset(), methods)
        scope = rng.choice(list(MethodScope))
        sim = simulate(lt, plan, scope)
        want = reference_simulate(lt.trace.requests, plan.blocked_scripts, plan.blocked_methods,
                                  scope is MethodScope.TOP_FRAME)
        got = {rid: cause.value for rid, cause in sim.removed.items()}
        assert got == want, f"trace {i}: {got} != {want}"
    return f"{n} traces agree"


def check_filter_oracle(seed: int, scale: float) -> str:
    rng = random.Random(seed + 2)
    target = max(1, int(10_000 * scale))
    kinds = list(ResourceKind)
    agreed = 0
    while agreed < target:
        text = random_rule(rng)
        try:
            rule = parse_rule(text)
        except (RuleSyntaxError, UnsupportedRule):
            continue
        url, page_host = random_url(rng), rng.choice(["a.com", "ad.a.com", "b.net", "x.org"])
        kind, third = rng.choice(kinds), rng.random() < 0.5
        fs = FilterSet((rule,), (), ("r",), ParseStats()) if not rule.is_exception else \
            FilterSet((), (rule,), ("r",), ParseStats())
        got = match_url(fs, MatchContext(url, f"https://{page_host}/", kind, third)).verdict.value
        want = reference_decision([text], url, page_host, kind.value, third)
        assert got == want, f"{text!r} on {url!r}: {got} != {want}"
        agreed += 1
    page = "https://www.livescore.com/"
    hand = [
        (["||doubleclick.net^"], "https://ad.doubleclick.net/pixel", Verdict.BLOCK),
        ([], "https://ad.doubleclick.net/pixel", Verdict.NO_MATCH),
        (["||livescore.com^", "@@||livescore.com^"], "https://livescore.com/api/announcements/", Verdict.ALLOW),
    ]
    for rules, url, verdict in hand:
        fs = parse_list("\n".join(rules))
        got = match_url(fs, MatchContext(url, page, ResourceKind.XHR)).verdict
        assert got is verdict, f"{rules} on {url}: {got}"
    return f"{agreed} pairs agree, 3 hand cases pass"


def check_metrics(seed: int, scale: float) -> str:
    rng = random.Random(seed + 3)
    for _ in range(max(1, int(200 * scale))):
        lt = random_labeled_trace(rng)
        sim = simulate(lt, BlockingPlan(BlockingConfig.CTRL))
        rd, td = diff_requests(lt, sim), diff_tags(lt.trace, lt.labels, sim)
        assert (rd.missing_tracking, rd.missing_functional, td.total) == (0, 0, 0)
        values = [rng.uniform(0, 100) for _ in range(rng.randint(0, 50))]
        assert sum(bin_deciles(values).bins) == len(values)
    edges = bin_deciles([0, 5, 10, 10.1, 95]).as_dict()
    assert (edges["0-10"], edges["11-20"], edges["91-100"]) == (3, 1, 1), edges
    assert sum(edges.values()) == 5
    return "zero self-diff, bins sum, edge cases land"


def check_degenerate(seed: int, scale: float) -> str:
    cls = worked_example_classification(Thresholds(0, 0))
    for unit, rec in cls.units.items():
        both = rec.counts.tracking_count > 0 and rec.counts.functional_count > 0
        assert (rec.unit_class is UnitClass.MIXED) == both, f"{unit}: {rec.unit_class}"
    for unit in WORKED_EXAMPLE:
        assert cls.units[unit].unit_class is UnitClass.MIXED
    return "every unit with both counts positive is Mixed"


def run_pipeline(out: Path, seed: int) -> None:
    from .cli import main
    base = ["--traces", str(fixture_path("corpus")), "--filters", str(fixture_path("filters.txt")),
            "--out", str(out), "--seed", str(seed)]
    for stage in ("label", "localize", "plan", "simulate", "report"):
        code = main([stage, *base])
        assert code == 0, f"{stage} exited {code}"


def check_determinism(seed: int, scale: float) -> str:
    with tempfile.TemporaryDirectory() as a, tempfile.TemporaryDirectory() as b:
        run_pipeline(Path(a), seed)
        run_pipeline(Path(b), seed)
        files = sorted(p.relative_to(a) for p in Path(a).rglob("*") if p.is_file()
                       and p.name != "manifest.json")
        assert files, "pipeline wrote nothing"
        _, mismatch, errors = filecmp.cmpfiles(a, b, [str(f) for f in files], shallow=False)
        assert not mismatch and not errors, f"differing files: {mismatch + errors}"
    return f"{len(files)} artifacts byte-identical"


CHECKS: list[tuple[int, str, Callable[[int, float], str]]] = [
    (1, "localization worked example", check_worked_example),
    (2, "method rename snippets", check_listings),
    (3, "blocking configuration table", check_config_table),
    (4, "containment properties", check_containment),
    (5, "simulation oracle", check_sim_oracle),
    (6, "filter matcher oracle", check_filter_oracle),
    (7, "breakage metrics", check_metrics),
    (8, "threshold sensitivity", check_degenerate),
    (9, "end-to-end determinism", check_determinism),
]


def run_selftest(seed: int = 0, random_cases: int | None = None, echo: Callable[[str], None] = print) -> int:
    """Run every check, print one line each, return 0 when all pass else 1."""
    scale = 1.0 if random_cases is None else random_cases / 1000
    start = time.perf_counter()
    failed = 0
    for number, title, fn in CHECKS:
        try:
            detail = fn(seed, scale)
            echo(f"criterion {number} PASS {title}: {detail}")
        except AssertionError as exc:
            failed += 1
            echo(f"criterion {number} FAIL {title}: {exc}")
    total = time.perf_counter() - start
    if total >= 60:
        failed += 1
        echo(f"criterion 9 FAIL total selftest runtime {total:.1f}s >= 60s")
    echo(f"selftest: {'all checks passed' if not failed else f'{failed} failure(s)'} in {total:.1f}s")
    return 0 if not failed else 1
