"""Command-line pipeline: label -> localize -> plan -> simulate -> report.

Every stage reads and writes plain files under ``--out`` so it can be rerun
on its own. The ``label`` stage writes ``manifest.json``; later stages stamp
the manifest id into each artifact and refuse to combine artifacts whose ids
disagree.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import os
import sys
import tempfile
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Sequence

from . import __version__
from .blocking import (ALL_CONFIGS, BlockingConfig, BlockingPlan, MethodScope, build_plan,
                       check_containments, simulate, simulation_to_obj)
from .filters import FilterSet, parse_list
from .labeler import LabeledTrace, label_trace, labeled_from_obj, labeled_to_obj
from .localizer import (Classification, Thresholds, UnitClass, accumulate, build_classification,
                        classification_csv, classification_from_obj, classification_to_obj,
                        sensitivity)
from .metrics import (DECILE_LABELS, TAG_KINDS, RequestDiff, SiteDiff, TagDiff, aggregate_annotations,
                      bin_deciles, corpus_report, diff_requests, diff_tags, read_annotations,
                      top_units_report)
from .rewriter import DEFAULT_REPLACEMENT, RenameCollision, TokenizeError, rename_method
from .trace import (Attribution, CodeUnitId, ParseError, SchemaError, TagKind, UnitKind,
                    dumps_canonical, iter_corpus, units_of)

log = logging.getLogger("jsblock")

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NOOP = 3
EXIT_DATA = 4

BIN_NOTE = "bins=(lo,hi] right-closed; 0% counted in 0-10"


class DataError(Exception):
    """Bad or inconsistent input data; maps to exit code 4."""


@dataclass
class RunConfig:
    filter_list_paths: list[Path] = field(default_factory=list)
    trace_dir: Path | None = None
    attribution: Attribution = Attribution.FULL_STACK
    thresholds: Thresholds = field(default_factory=Thresholds)
    configs: tuple[BlockingConfig, ...] = ALL_CONFIGS
    output_dir: Path = Path("out")
    seed: int = 0
    jobs: int = 1
    normalize_query: bool = False
    method_scope: MethodScope = MethodScope.ANYWHERE

    def echo(self) -> dict:
        return {
            "attribution": self.attribution.value,
            "thresholds": list(self.thresholds.as_tuple()),
            "configs": [c.value for c in self.configs],
            "seed": self.seed,
            "normalize_query": self.normalize_query,
            "method_scope": self.method_scope.value,
        }


# -- file helpers --------------------------------------------------------------

def write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def write_json(path: Path, obj: dict) -> None:
    write_atomic(path, dumps_canonical(obj) + "\n")


def read_json(path: Path) -> dict:
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise DataError(f"missing artifact {path}; run the earlier pipeline stage first") from None


def csv_text(header_lines: Sequence[str], columns: Sequence[str], rows: Iterable[Sequence]) -> str:
    out = io.StringIO()
    for line in header_lines:
        out.write(f"# {line}\n")
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(columns)
    writer.writerows(rows)
    return out.getvalue()


def read_csv_with_header(path: Path) -> tuple[dict[str, str], list[dict[str, str]]]:
    if not path.exists():
        raise DataError(f"missing artifact {path}; run the earlier pipeline stage first")
    meta: dict[str, str] = {}
    body = []
    for line in path.read_text(encoding="utf-8").splitlines(keepends=True):
        if line.startswith("# ") and "=" in line and not body:
            k, _, v = line[2:].strip().partition("=")
            meta[k] = v
        else:
            body.append(line)
    return meta, list(csv.DictReader(io.StringIO("".join(body))))


def fmt(x: float) -> str:
    return f"{x:.4f}"


def _pmap(fn: Callable, items: list, jobs: int) -> list:
    if jobs <= 1 or len(items) <= 1:
        return [fn(i) for i in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items, chunksize=max(1, len(items) // (jobs * 4))))


# -- manifest ------------------------------------------------------------------

def sha256_file(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def corpus_hash(path: Path) -> str:
    h = hashlib.sha256()
    files = sorted(path.glob("*.json")) if path.is_dir() else [path]
    for f in files:
        h.update(f.name.encode() + b"\0" + hashlib.sha256(f.read_bytes()).digest())
    return h.hexdigest()


def build_manifest(cfg: RunConfig) -> dict:
    body = {
        "tool": "jsblock",
        "version": __version__,
        "filter_lists": [{"name": p.name, "sha256": sha256_file(p)} for p in cfg.filter_list_paths],
        "trace_corpus_sha256": corpus_hash(cfg.trace_dir),
        "config": cfg.echo(),
    }
    manifest_id = hashlib.sha256(dumps_canonical(body).encode()).hexdigest()[:16]
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    created = time.gmtime(int(epoch)) if epoch else time.gmtime()
    return {**body, "manifest_id": manifest_id,
            "created_at": time.strftime("%Y-%m-%dT%H:%M:%SZ", created)}


def current_manifest_id(out: Path) -> str:
    return read_json(out / "manifest.json")["manifest_id"]


def require_same(out: Path, artifact: str, found: str | None) -> None:
    expected = current_manifest_id(out)
    if found != expected:
        raise DataError(f"{artifact} belongs to manifest {found}, current manifest is {expected}; "
                        "rerun the stages after label")


# -- stages --------------------------------------------------------------------

def load_filters(paths: Sequence[Path]) -> FilterSet:
    sets = []
    for p in paths:
        try:
            sets.append(parse_list(p.read_text(encoding="utf-8"), p.name))
        except OSError as exc:
            raise DataError(f"cannot read filter list {p}: {exc}") from None
    merged = FilterSet.merge(sets)
    log.info("filters: %d accepted, %d skipped, %d rejected", merged.stats.accepted,
             merged.stats.skipped, len(merged.stats.rejected))
    return merged


def _label_one(item):
    site, trace, filters = item
    return site, label_trace(trace, filters)


def cmd_label(cfg: RunConfig) -> int:
    if cfg.trace_dir is None or not cfg.trace_dir.exists():
        raise DataError("no traces found")
    try:
        corpus = list(iter_corpus(cfg.trace_dir, cfg.normalize_query))
    except (ParseError, SchemaError) as exc:
        raise DataError(f"invalid trace: {exc}") from None
    if not corpus:
        raise DataError("no traces found")
    filters = load_filters(cfg.filter_list_paths)
    out = cfg.output_dir
    manifest = build_manifest(cfg)
    write_json(out / "manifest.json", manifest)
    mid = manifest["manifest_id"]

    labeled = _pmap(_label_one, [(s, t, filters) for s, t in corpus], cfg.jobs)
    rows = []
    for site, lt in labeled:
        write_json(out / "labeled" / f"{site}.json", {"manifest_id": mid, "site": site, **labeled_to_obj(lt)})
        for r in lt.trace.requests:
            rows.append([site, r.request_id, r.url, lt.labels[r.request_id].value,
                         lt.deciding_rule.get(r.request_id) or ""])
    write_atomic(out / "labels.csv", csv_text([f"manifest={mid}"],
                                              ["site", "request_id", "url", "label", "deciding_rule"], rows))
    log.info("labeled %d traces (%d requests)", len(labeled), len(rows))
    return EXIT_OK


def load_labeled(out: Path) -> list[tuple[str, LabeledTrace]]:
    mid = current_manifest_id(out)
    files = sorted((out / "labeled").glob("*.json"))
    if not files:
        raise DataError("no labeled traces found; run 'label' first")
    result = []
    for f in files:
        obj = read_json(f)
        if obj.get("manifest_id") != mid:
            raise DataError(f"{f} belongs to another manifest")
        result.append((obj["site"], labeled_from_obj(obj)))
    return result


def cmd_localize(cfg: RunConfig) -> int:
    out = cfg.output_dir
    mid = current_manifest_id(out)
    labeled = load_labeled(out)
    counts = accumulate((lt for _, lt in labeled), cfg.attribution)
    cls = build_classification(counts, cfg.thresholds, cfg.attribution)
    write_json(out / "classification.json", {"manifest_id": mid, **classification_to_obj(cls)})
    write_atomic(out / "classification.csv", f"# manifest={mid}\n" + classification_csv(cls))
    log.info("classified %d units", len(cls.units))
    return EXIT_OK


def load_classification(out: Path) -> Classification:
    obj = read_json(out / "classification.json")
    require_same(out, "classification.json", obj.get("manifest_id"))
    return classification_from_obj(obj)


def cmd_plan(cfg: RunConfig) -> int:
    out = cfg.output_dir
    mid = current_manifest_id(out)
    cls = load_classification(out)
    for config in _with_ctrl(cfg.configs):
        plan = build_plan(cls, config)
        write_json(out / "plans" / f"{config.value}.json", {"manifest_id": mid, **plan.to_obj()})
    return EXIT_OK


def _with_ctrl(configs: Iterable[BlockingConfig]) -> list[BlockingConfig]:
    chosen = set(configs) | {BlockingConfig.CTRL}
    return [c for c in ALL_CONFIGS if c in chosen]


def load_plan(out: Path, config: BlockingConfig) -> BlockingPlan:
    obj = read_json(out / "plans" / f"{config.value}.json")
    require_same(out, f"plans/{config.value}.json", obj.get("manifest_id"))
    return BlockingPlan.from_obj(obj)


def _simulate_site(item):
    site, lt, plans, scope = item
    results = {}
    for plan in plans:
        sim = simulate(lt, plan, scope)
        results[plan.config] = (sim, diff_requests(lt, sim), diff_tags(lt.trace, lt.labels, sim))
    return site, results


DIFF_COLUMNS = ["site", "page_url", "config", "control_tracking", "control_functional",
                "missing_tracking", "missing_functional", "pct_reduction_tracking",
                "pct_reduction_functional"] + [f"missing_tag_{k.value}" for k in TAG_KINDS]


def cmd_simulate(cfg: RunConfig) -> int:
    out = cfg.output_dir
    mid = current_manifest_id(out)
    configs = _with_ctrl(cfg.configs)
    if not all((out / "plans" / f"{c.value}.json").exists() for c in configs):
        cmd_plan(cfg)
    plans = [load_plan(out, c) for c in configs]
    labeled = load_labeled(out)
    results = _pmap(_simulate_site, [(s, lt, plans, cfg.method_scope) for s, lt in labeled], cfg.jobs)

    page_urls = {s: lt.trace.page_url for s, lt in labeled}
    diff_rows, check_rows = [], []
    for site, per_config in results:
        for config, (sim, rdiff, tdiff) in per_config.items():
            write_json(out / "simulations" / config.value / f"{site}.json",
                       {"manifest_id": mid, "site": site, "config": config.value, **simulation_to_obj(sim)})
            diff_rows.append([site, page_urls[site], config.value, rdiff.control_tracking,
                              rdiff.control_functional, rdiff.missing_tracking, rdiff.missing_functional,
                              fmt(rdiff.pct_reduction_tracking), fmt(rdiff.pct_reduction_functional)]
                             + [tdiff[k] for k in TAG_KINDS])
        violations = check_containments({c: v[0].removed_ids for c, v in per_config.items()})
        check_rows.append([site, "ok" if not violations else "violated", "; ".join(violations)])
        if violations:
            log.error("%s: containment violated: %s", site, violations)
    write_atomic(out / "site_diffs.csv", csv_text([f"manifest={mid}"], DIFF_COLUMNS, diff_rows))
    write_atomic(out / "containment.csv",
                 csv_text([f"manifest={mid}"], ["site", "status", "violations"], check_rows))
    return EXIT_OK


def _site_diffs(out: Path) -> list[SiteDiff]:
    meta, rows = read_csv_with_header(out / "site_diffs.csv")
    require_same(out, "site_diffs.csv", meta.get("manifest"))
    diffs = []
    for row in rows:
        rd = RequestDiff(int(row["missing_tracking"]), int(row["missing_functional"]),
                         int(row["control_tracking"]), int(row["control_functional"]))
        td = TagDiff({k: int(row[f"missing_tag_{k.value}"]) for k in TAG_KINDS})
        diffs.append(SiteDiff(row["site"], BlockingConfig(row["config"]), rd, td))
    return diffs


def cmd_report(cfg: RunConfig, annotations: Path | None = None) -> int:
    out = cfg.output_dir
    mid = current_manifest_id(out)
    head = [f"manifest={mid}"]
    cls = load_classification(out)
    diffs = _site_diffs(out)
    configs = [c for c in ALL_CONFIGS if any(d.config is c for d in diffs)]
    reports = out / "reports"

    summary_rows = []
    for config in configs:
        s = corpus_report(diffs, config)
        summary_rows.append([config.value, s.sites, s.control_tracking, s.control_functional,
                             s.missing_tracking, s.missing_functional,
                             fmt(s.mean_pct_reduction_tracking), fmt(s.mean_pct_reduction_functional)]
                            + [s.missing_tags[k] for k in TAG_KINDS])
        write_atomic(reports / f"histogram_{config.value}.csv", csv_text(
            head + [BIN_NOTE], ["bin_label", "tracking_count", "functional_count"],
            [[label, t, f] for label, t, f in zip(DECILE_LABELS, s.tracking_histogram.bins,
                                                   s.functional_histogram.bins)]))
    write_atomic(reports / "summary.csv", csv_text(
        head, ["config", "sites", "control_tracking", "control_functional", "missing_tracking",
               "missing_functional", "mean_pct_reduction_tracking", "mean_pct_reduction_functional"]
        + [f"missing_tag_{k.value}" for k in TAG_KINDS], summary_rows))

    labeled = load_labeled(out)
    presence = {site: set().union(*(units_of(r, cls.attribution) for r in lt.trace.requests))
                for site, lt in labeled}
    top = top_units_report(cls, presence)
    write_atomic(reports / "top_units.csv", csv_text(
        head, ["rank", "domain", "script_url", "method_name", "pct_sites", "class"],
        [[i, r.domain, r.script_url, r.method_name, fmt(r.pct_sites),
          r.unit_class.value if r.unit_class else ""] for i, r in enumerate(top, start=1)]))

    counts = {u: rec.counts for u, rec in cls.units.items()}
    pairs = list(dict.fromkeys([cls.thresholds, Thresholds(), Thresholds(0, 0)]))
    scripts_by_site = {s: {u.script_url for u in units if u.kind is UnitKind.SCRIPT}
                       for s, units in presence.items()}
    rows, hist_cols = [], []
    for row in sensitivity(counts, pairs, scripts_by_site):
        t = row.thresholds
        for kind in UnitKind:
            rows.append([f"{t.lower:g}", f"{t.upper:g}", kind.value]
                        + [row.tally(kind, c) for c in (UnitClass.TRACKING, UnitClass.FUNCTIONAL,
                                                        UnitClass.MIXED)])
        hist_cols.append((f"{t.lower:g}..{t.upper:g}", bin_deciles(row.mixed_script_pct.values()).bins))
    write_atomic(reports / "sensitivity.csv", csv_text(
        head, ["lower", "upper", "unit_kind", "n_tracking", "n_functional", "n_mixed"], rows))
    write_atomic(reports / "mixed_script_histogram.csv", csv_text(
        head + [BIN_NOTE], ["bin_label"] + [name for name, _ in hist_cols],
        [[label] + [bins[i] for _, bins in hist_cols] for i, label in enumerate(DECILE_LABELS)]))

    if annotations is not None:
        table = aggregate_annotations(read_annotations(annotations.read_text(encoding="utf-8")))
        write_atomic(reports / "annotation_counts.csv", csv_text(
            head, ["config", "category", "severity", "count"],
            [[c.value, cat.value, sev.value, n] for (c, cat, sev), n in table.items()]))
    return EXIT_OK


def cmd_rewrite(script: Path, method: str, replacement: str, in_place: bool,
                out_file: Path | None, as_json: bool) -> int:
    try:
        source = script.read_text(encoding="utf-8")
        result = rename_method(source, method, replacement)
    except (TokenizeError, RenameCollision, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    if result.count:
        if in_place:
            write_atomic(script, result.source)
        elif out_file is not None:
            write_atomic(out_file, result.source)
        else:
            sys.stdout.write(result.source)
    if as_json:
        summary = {"script": str(script), "method": method, "replacement": replacement,
                   "sites_renamed": result.count,
                   "sites": [{"pattern": s.pattern.value, "offset": s.name_token_offset} for s in result.sites],
                   "unsupported": [{"reason": u.reason, "offset": u.offset} for u in result.unsupported]}
        print(json.dumps(summary, sort_keys=True), file=sys.stderr if not (in_place or out_file) else sys.stdout)
    return EXIT_OK if result.count else EXIT_NOOP


# -- argument parsing ----------------------------------------------------------

def _configs(text: str) -> tuple[BlockingConfig, ...]:
    try:
        return tuple(BlockingConfig(c.strip().upper()) for c in text.split(",") if c.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _attribution(text: str) -> Attribution:
    try:
        return Attribution(text.replace("-", "_"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"unknown attribution {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--traces", type=Path, help="trace directory or NDJSON file")
    common.add_argument("--filters", type=Path, nargs="+", default=[], help="filter list files")
    common.add_argument("--out", type=Path, default=Path("out"), help="artifact directory")
    common.add_argument("--attribution", type=_attribution, default=Attribution.FULL_STACK,
                        help="full-stack (default) or top-frame")
    common.add_argument("--thresholds", type=float, nargs=2, metavar=("L", "U"), default=(-2.0, 2.0))
    common.add_argument("--configs", type=_configs, default=ALL_CONFIGS,
                        help="comma-separated subset of CTRL,ALL,TS,MS,TMS,TM")
    common.add_argument("--jobs", type=int, default=1)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--normalize-query", action="store_true",
                        help="drop query strings from URLs so script variants merge")
    common.add_argument("--method-scope", choices=[m.value for m in MethodScope],
                        default=MethodScope.ANYWHERE.value)

    parser = argparse.ArgumentParser(prog="jsblock", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"jsblock {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("label", parents=[common], help="label requests with filter lists")
    sub.add_parser("localize", parents=[common], help="score and classify scripts and methods")
    sub.add_parser("plan", parents=[common], help="resolve blocking configurations")
    sub.add_parser("simulate", parents=[common], help="simulate blocking and diff against control")
    rep = sub.add_parser("report", parents=[common], help="corpus summaries and histograms")
    rep.add_argument("--annotations", type=Path, help="manual breakage annotation CSV")
    rw = sub.add_parser("rewrite", help="rename a method definition in a script")
    rw.add_argument("--script", type=Path, required=True)
    rw.add_argument("--method", required=True)
    rw.add_argument("--replacement", default=DEFAULT_REPLACEMENT)
    dest = rw.add_mutually_exclusive_group()
    dest.add_argument("--in-place", action="store_true")
    dest.add_argument("--out", type=Path, dest="rewrite_out")
    rw.add_argument("--json", action="store_true", help="print a JSON summary")
    st = sub.add_parser("selftest", parents=[common], help="run the acceptance checks on bundled fixtures")
    st.add_argument("--random-cases", type=int, default=None,
                    help="override the number of random cases per property check")
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    try:
        thresholds = Thresholds(*args.thresholds)
    except ValueError as exc:
        raise DataError(str(exc)) from None
    return RunConfig(
        filter_list_paths=list(args.filters),
        trace_dir=args.traces,
        attribution=args.attribution,
        thresholds=thresholds,
        configs=args.configs,
        output_dir=args.out,
        seed=args.seed,
        jobs=max(1, args.jobs),
        normalize_query=args.normalize_query,
        method_scope=MethodScope(args.method_scope),
    )


def main(argv: Sequence[str] | None = None) -> int:
    logging.basicConfig(level=os.environ.get("JSBLOCK_LOG", "WARNING").upper(),
                        format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        if args.command == "rewrite":
            return cmd_rewrite(args.script, args.method, args.replacement, args.in_place,
                               args.rewrite_out, args.json)
        cfg = config_from_args(args)
        if args.command == "selftest":
            from .selftest import run_selftest
            return run_selftest(seed=cfg.seed, random_cases=args.random_cases)
        handlers = {"label": cmd_label, "localize": cmd_localize, "plan": cmd_plan,
                    "simulate": cmd_simulate}
        if args.command == "report":
            return cmd_report(cfg, args.annotations)
        return handlers[args.command](cfg)
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
