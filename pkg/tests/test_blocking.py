import json
import random

import pytest
from hypothesis import given, strategies as st

from jsblock._reference import reference_simulate
from jsblock.blocking import (ALL_CONFIGS, BlockingConfig, BlockingPlan, MethodScope, RemovalCause,
                              blocked_request_sets, build_plan, check_containments, simulate,
                              simulation_to_obj)
from jsblock.fixtures import APP, UTAG, livescore_trace, load_fixture_corpus, random_labeled_trace
from jsblock.labeler import LabeledTrace, RequestLabel, label_trace
from jsblock.localizer import Thresholds, localize
from jsblock.trace import NetworkRequest, PageTrace, ResourceKind, ResourceTag, StackFrame, TagKind

C = BlockingConfig


@pytest.fixture(scope="module")
def worked(fixture_filters):
    labeled = [label_trace(t, fixture_filters) for _, t in load_fixture_corpus("intuit")]
    return labeled, localize(labeled)


def unlabeled(trace):
    return LabeledTrace(trace, {r.request_id: RequestLabel.FUNCTIONAL for r in trace.requests},
                        {r.request_id: None for r in trace.requests})


def test_plan_invariants():
    with pytest.raises(ValueError):
        BlockingPlan(C.CTRL, {"https://a.com/s.js"})
    with pytest.raises(ValueError):
        BlockingPlan(C.TM, {"https://a.com/s.js"})
    with pytest.raises(ValueError):
        BlockingPlan(C.TS, (), {("https://a.com/s.js", "f")})


def test_worked_example_plans(worked):
    _, cls = worked
    assert build_plan(cls, C.CTRL) == BlockingPlan(C.CTRL)
    assert build_plan(cls, C.TMS) == BlockingPlan(C.TMS, {UTAG})
    assert build_plan(cls, C.MS) == BlockingPlan(C.MS, {UTAG})
    assert build_plan(cls, C.TS) == BlockingPlan(C.TS)
    assert build_plan(cls, C.ALL) == BlockingPlan(C.ALL, {UTAG})
    assert build_plan(cls, C.TM) == BlockingPlan(C.TM, (), {(UTAG, "loader")})


def test_plan_json_round_trip(worked):
    _, cls = worked
    for config in ALL_CONFIGS:
        plan = build_plan(cls, config)
        assert BlockingPlan.from_obj(json.loads(json.dumps(plan.to_obj()))) == plan


def test_worked_example_tm_within_tms(worked):
    labeled, cls = worked
    sets = blocked_request_sets(labeled[0], [build_plan(cls, c) for c in ALL_CONFIGS])
    assert sets[C.CTRL] == frozenset()
    assert sets[C.TM] <= sets[C.TMS]
    assert len(sets[C.TM]) == 132


def test_empty_plan_is_identity():
    trace = livescore_trace()
    sim = simulate(unlabeled(trace), BlockingPlan(C.CTRL))
    assert sim.surviving_requests == trace.requests and sim.surviving_tags == trace.tags
    assert not sim.removed


def test_script_fetch_and_in_stack():
    a = "https://a.com/A.js"
    f = StackFrame(a, "f", 1, 1)
    trace = PageTrace("https://a.com/", (
        NetworkRequest("r0", a, ResourceKind.SCRIPT, (), a),
        NetworkRequest("r1", "https://t.com/1", ResourceKind.XHR, (f,)),
        NetworkRequest("r2", "https://t.com/2", ResourceKind.IMAGE, (f,)),
        NetworkRequest("r3", "https://a.com/api", ResourceKind.XHR),
    ))
    sim = simulate(trace, BlockingPlan(C.ALL, {a}))
    assert sim.removed == {"r0": RemovalCause.SCRIPT_FETCH_BLOCKED, "r1": RemovalCause.DIRECT_BLOCK,
                           "r2": RemovalCause.DIRECT_BLOCK}


def test_cascade_to_fixpoint():
    a, b, c = (f"https://a.com/{n}.js" for n in "ABC")
    trace = PageTrace("https://a.com/", (
        NetworkRequest("fa", a, ResourceKind.SCRIPT, (), a),
        NetworkRequest("fb", b, ResourceKind.SCRIPT, (StackFrame(a, "load", 1, 1),), b),
        NetworkRequest("fc", c, ResourceKind.SCRIPT, (StackFrame(b, "load", 1, 1),), c),
        NetworkRequest("x", "https://t.com/x", ResourceKind.XHR, (StackFrame(c, "go", 1, 1),)),
    ))
    sim = simulate(trace, BlockingPlan(C.ALL, {a}))
    assert sim.removed == {"fa": RemovalCause.SCRIPT_FETCH_BLOCKED, "fb": RemovalCause.DIRECT_BLOCK,
                           "fc": RemovalCause.CASCADE, "x": RemovalCause.CASCADE}
    assert sim.iterations <= 3


def test_livescore_method_block():
    trace = livescore_trace()
    sim = simulate(unlabeled(trace), BlockingPlan(C.TM, (), {(APP, "u")}))
    assert sim.removed_ids == {"dclk"}
    assert sim.removed["dclk"] is RemovalCause.DIRECT_BLOCK


def test_method_scope_top_frame():
    a = "https://a.com/A.js"
    trace = PageTrace("https://a.com/", (
        NetworkRequest("deep", "https://t.com/1", ResourceKind.XHR, (StackFrame(a, "g", 1, 1), StackFrame(a, "f", 1, 1))),
        NetworkRequest("top", "https://t.com/2", ResourceKind.XHR, (StackFrame(a, "f", 1, 1),)),
    ))
    plan = BlockingPlan(C.TM, (), {(a, "f")})
    assert simulate(trace, plan).removed_ids == {"deep", "top"}
    assert simulate(trace, plan, MethodScope.TOP_FRAME).removed_ids == {"top"}


def test_tag_survival_by_exact_url():
    img = "https://cdn.a.com/i.png"
    a = "https://a.com/A.js"
    trace = PageTrace("https://a.com/", (
        NetworkRequest("i", img, ResourceKind.IMAGE, (StackFrame(a, "f", 1, 1),)),
    ), (ResourceTag(TagKind.IMG, img), ResourceTag(TagKind.IMG, img + "?v=2"), ResourceTag(TagKind.IFRAME, "https://x.com/")))
    sim = simulate(trace, BlockingPlan(C.ALL, {a}))
    assert [t.src_url for t in sim.surviving_tags] == [img + "?v=2", "https://x.com/"]


def test_simulation_json(worked):
    labeled, cls = worked
    obj = simulation_to_obj(simulate(labeled[0], build_plan(cls, C.TM)))
    assert obj["removed"][0] == {"request_id": "r0001", "cause": "direct-block"}


def random_plan(rng, lt):
    frames = sorted({(f.script_url, f.method_name) for r in lt.trace.requests for f in r.stack})
    scripts = sorted({s for s, _ in frames} | {r.delivered_script for r in lt.trace.requests if r.delivered_script})
    if rng.random() < 0.5:
        return BlockingPlan(C.ALL, {s for s in scripts if rng.random() < 0.3})
    return BlockingPlan(C.TM, (), {m for m in frames if rng.random() < 0.3})


def test_oracle_500_traces():
    rng = random.Random(99)
    for _ in range(500):
        lt = random_labeled_trace(rng, max_requests=20)
        plan = random_plan(rng, lt)
        for scope in MethodScope:
            sim = simulate(lt, plan, scope)
            want = reference_simulate(lt.trace.requests, plan.blocked_scripts, plan.blocked_methods,
                                      scope is MethodScope.TOP_FRAME)
            assert {k: v.value for k, v in sim.removed.items()} == want
            assert len(sim.surviving_requests) + len(sim.removed) == len(lt.trace.requests)
            n_scripts = len({r.delivered_script for r in lt.trace.requests if r.delivered_script})
            assert sim.iterations <= n_scripts + 1


def test_containment_1000_traces():
    rng = random.Random(4242)
    for _ in range(1000):
        lt = random_labeled_trace(rng)
        lower = rng.choice([-3.0, -2.0, -1.0, -0.3])
        cls = localize([lt], rng.choice(["full_stack", "top_frame"]), Thresholds(lower, -lower))
        removed = blocked_request_sets(lt, [build_plan(cls, c) for c in ALL_CONFIGS])
        assert check_containments(removed) == []
        assert removed[C.CTRL] == frozenset()
        assert removed[C.TS] <= removed[C.TMS] <= removed[C.ALL]
        assert removed[C.MS] <= removed[C.TMS]
        assert removed[C.TM] <= removed[C.TMS]


def test_containment_checker_reports_violation():
    found = check_containments({C.CTRL: frozenset(), C.TS: frozenset({"x"}), C.TMS: frozenset(),
                                C.ALL: frozenset({"x"}), C.MS: frozenset(), C.TM: frozenset()})
    assert found and "TS" in found[0]


@given(st.randoms(use_true_random=False))
def test_monotone_in_plan(rng):
    lt = random_labeled_trace(rng)
    small = random_plan(rng, lt)
    extra = random_plan(rng, lt)
    if extra.config is small.config:
        big = BlockingPlan(small.config, small.blocked_scripts | extra.blocked_scripts,
                           small.blocked_methods | extra.blocked_methods)
        assert small <= big
        assert simulate(lt, small).removed_ids <= simulate(lt, big).removed_ids
