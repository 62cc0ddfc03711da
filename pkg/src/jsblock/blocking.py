"""Blocking configurations and their simulated effect on a page-load trace."""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass
from typing import Iterable, Mapping

from .labeler import LabeledTrace
from .localizer import Classification, UnitClass
from .trace import CodeUnitId, NetworkRequest, PageTrace, ResourceTag, UnitKind

log = logging.getLogger(__name__)


class BlockingConfig(str, enum.Enum):
    CTRL = "CTRL"
    ALL = "ALL"
    TS = "TS"
    MS = "MS"
    TMS = "TMS"
    TM = "TM"


ALL_CONFIGS = tuple(BlockingConfig)


class RemovalCause(str, enum.Enum):
    DIRECT_BLOCK = "direct-block"
    SCRIPT_FETCH_BLOCKED = "script-fetch-blocked"
    CASCADE = "cascade"


class MethodScope(str, enum.Enum):
    """Where a blocked method must sit in a stack to kill the request."""

    ANYWHERE = "anywhere"
    TOP_FRAME = "top_frame"


@dataclass(frozen=True)
class BlockingPlan:
    config: BlockingConfig
    blocked_scripts: frozenset[str] = frozenset()
    blocked_methods: frozenset[tuple[str, str]] = frozenset()

    def __post_init__(self) -> None:
        object.__setattr__(self, "config", BlockingConfig(self.config))
        object.__setattr__(self, "blocked_scripts", frozenset(self.blocked_scripts))
        object.__setattr__(self, "blocked_methods", frozenset(tuple(m) for m in self.blocked_methods))
        if self.config is BlockingConfig.CTRL and (self.blocked_scripts or self.blocked_methods):
            raise ValueError("CTRL plan must block nothing")
        if self.config is BlockingConfig.TM and self.blocked_scripts:
            raise ValueError("TM plan blocks methods only")
        if self.config not in (BlockingConfig.CTRL, BlockingConfig.TM) and self.blocked_methods:
            raise ValueError(f"{self.config.value} plan blocks scripts only")

    def __le__(self, other: "BlockingPlan") -> bool:
        return (self.blocked_scripts <= other.blocked_scripts
                and self.blocked_methods <= other.blocked_methods)

    def to_obj(self) -> dict:
        return {
            "config": self.config.value,
            "blocked_scripts": sorted(self.blocked_scripts),
            "blocked_methods": [list(m) for m in sorted(self.blocked_methods)],
        }

    @classmethod
    def from_obj(cls, obj: dict) -> "BlockingPlan":
        return cls(BlockingConfig(obj["config"]), frozenset(obj.get("blocked_scripts", ())),
                   frozenset(tuple(m) for m in obj.get("blocked_methods", ())))


def build_plan(cls: Classification, config: BlockingConfig | str) -> BlockingPlan:
    """Resolve a configuration to concrete scripts and methods.

    TM only takes tracking methods whose script is itself Tracking or Mixed,
    so method blocking never reaches outside what TMS would block.
    """
    config = BlockingConfig(config)
    scripts = UnitKind.SCRIPT
    if config is BlockingConfig.CTRL:
        return BlockingPlan(config)
    if config is BlockingConfig.ALL:
        chosen = cls.select(scripts)
    elif config is BlockingConfig.TS:
        chosen = cls.select(scripts, UnitClass.TRACKING)
    elif config is BlockingConfig.MS:
        chosen = cls.select(scripts, UnitClass.MIXED)
    elif config is BlockingConfig.TMS:
        chosen = cls.select(scripts, UnitClass.TRACKING, UnitClass.MIXED)
    else:
        methods = set()
        for unit in cls.select(UnitKind.METHOD, UnitClass.TRACKING):
            owner = cls.class_of(CodeUnitId.script(unit.script_url))
            if owner in (UnitClass.TRACKING, UnitClass.MIXED):
                methods.add((unit.script_url, unit.method_name))
            else:
                log.warning("tracking method %s sits in a %s script; not blocked under TM",
                            unit, owner.value if owner else "unclassified")
        return BlockingPlan(config, blocked_methods=frozenset(methods))
    return BlockingPlan(config, blocked_scripts=frozenset(u.script_url for u in chosen))


@dataclass(frozen=True)
class SimulatedTrace:
    surviving_requests: tuple[NetworkRequest, ...]
    surviving_tags: tuple[ResourceTag, ...]
    removed: Mapping[str, RemovalCause]
    iterations: int = 0

    @property
    def removed_ids(self) -> frozenset[str]:
        return frozenset(self.removed)


def _hits_plan(request: NetworkRequest, scripts: frozenset[str] | set[str],
               methods: frozenset[tuple[str, str]], scope: MethodScope) -> bool:
    if any(f.script_url in scripts for f in request.stack):
        return True
    frames = request.stack if scope is MethodScope.ANYWHERE else request.stack[:1]
    return any((f.script_url, f.method_name) in methods for f in frames)


def simulate(trace: LabeledTrace | PageTrace, plan: BlockingPlan,
             method_scope: MethodScope | str = MethodScope.ANYWHERE) -> SimulatedTrace:
    """Remove every request the plan would prevent.

    A request dies if a blocked script or blocked method is on its stack, or
    if it delivers a blocked script. Scripts whose delivering request died are
    then treated as blocked too, until nothing changes.
    """
    page = trace.trace if isinstance(trace, LabeledTrace) else trace
    scope = MethodScope(method_scope)
    removed: dict[str, RemovalCause] = {}

    for r in page.requests:
        if _hits_plan(r, plan.blocked_scripts, plan.blocked_methods, scope):
            removed[r.request_id] = RemovalCause.DIRECT_BLOCK
        elif r.delivered_script in plan.blocked_scripts:
            removed[r.request_id] = RemovalCause.SCRIPT_FETCH_BLOCKED

    blocked = set(plan.blocked_scripts)
    iterations = 0
    while True:
        lost = {r.delivered_script for r in page.requests
                if r.request_id in removed and r.delivered_script is not None}
        newly = lost - blocked
        if not newly:
            break
        iterations += 1
        blocked |= newly
        for r in page.requests:
            if r.request_id in removed:
                continue
            if any(f.script_url in newly for f in r.stack) or r.delivered_script in newly:
                removed[r.request_id] = RemovalCause.CASCADE

    removed_urls = {r.url for r in page.requests if r.request_id in removed}
    ordered = {r.request_id: removed[r.request_id] for r in page.requests if r.request_id in removed}
    return SimulatedTrace(
        tuple(r for r in page.requests if r.request_id not in removed),
        tuple(t for t in page.tags if t.src_url not in removed_urls),
        ordered,
        iterations,
    )


def blocked_request_sets(trace: LabeledTrace | PageTrace, plans: Iterable[BlockingPlan],
                         method_scope: MethodScope | str = MethodScope.ANYWHERE
                         ) -> dict[BlockingConfig, frozenset[str]]:
    return {p.config: simulate(trace, p, method_scope).removed_ids for p in plans}


def check_containments(removed: Mapping[BlockingConfig, frozenset[str]]) -> list[str]:
    """Return descriptions of violated configuration containments (empty when all hold)."""
    C = BlockingConfig
    pairs = [(C.TS, C.TMS), (C.TMS, C.ALL), (C.MS, C.TMS), (C.TM, C.TMS)]
    problems = []
    if removed.get(C.CTRL):
        problems.append("CTRL removed requests")
    for small, big in pairs:
        if small in removed and big in removed and not removed[small] <= removed[big]:
            problems.append(f"{small.value} not within {big.value}")
    return problems


def simulation_to_obj(sim: SimulatedTrace) -> dict:
    return {
        "removed": [{"request_id": rid, "cause": cause.value} for rid, cause in sim.removed.items()],
        "surviving_request_ids": [r.request_id for r in sim.surviving_requests],
        "cascade_iterations": sim.iterations,
    }
