"""Resolve the six blocking configurations and simulate them on each page.

    python demos/02_blocking_simulation.py
"""

from jsblock.blocking import ALL_CONFIGS, BlockingConfig, BlockingPlan, build_plan, simulate
from jsblock.filters import parse_list
from jsblock.fixtures import APP, fixture_path, livescore_trace, load_fixture_corpus
from jsblock.labeler import label_trace
from jsblock.localizer import localize

filters = parse_list(fixture_path("filters.txt").read_text(), "filters.txt")
labeled = {site: label_trace(t, filters) for site, t in load_fixture_corpus()}
cls = localize(labeled.values())

plans = {c: build_plan(cls, c) for c in ALL_CONFIGS}
for config, plan in plans.items():
    print(f"{config.value:>4}: {len(plan.blocked_scripts)} scripts, {len(plan.blocked_methods)} methods")

print("\nremoved requests per site")
print(f"{'site':<10}" + "".join(f"{c.value:>6}" for c in ALL_CONFIGS))
for site, lt in labeled.items():
    counts = [len(simulate(lt, plans[c]).removed) for c in ALL_CONFIGS]
    print(f"{site:<10}" + "".join(f"{n:>6}" for n in counts))

# Blocking one method of the mixed _app bundle takes out only its own request.
ls = label_trace(livescore_trace(), filters)
sim = simulate(ls, BlockingPlan(BlockingConfig.TM, (), {(APP, "u")}))
print("\nlivescore, block _app#u:", {rid: cause.value for rid, cause in sim.removed.items()})

# Blocking gtm.js removes its fetch and everything it initiated.
gtm = next(r.url for r in ls.trace.requests if r.request_id == "gtm")
sim = simulate(ls, BlockingPlan(BlockingConfig.ALL, {gtm}))
print("livescore, block gtm.js:", {rid: cause.value for rid, cause in sim.removed.items()})
