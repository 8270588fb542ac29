"""Batch entry point: single runs, sweeps and figure reports.

Config documents are YAML (JSON is accepted as a subset). A run document::

    n: 16
    k: 7
    g: 2
    placements: equidistant        # or clustered, random, {random: 3}, [0, 2, ...]
    ids: ascending                 # or an explicit list
    adversary: {kind: random, seed: 4, p_none: 0.2}
    seed: 1
    order: ascending               # or random
    emit: {trace: true, metrics: metrics.csv}

A sweep document has a top-level ``sweep`` mapping, see :func:`expand_sweep`.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import os
import random
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Optional

import yaml

from .adversary import AdversarySpec
from .engine import ALL_TERMINATED, OrderPolicy, run
from .protocols import Unsolvable, dispatch, variant_range
from .ring_core import init_configuration
from .verify import check_bounds, check_partial_gathering, clustered_placement

SCHEMA_VERSION = 1
OUT_ENV = "DYNGATHER_OUT"
PHASES = ("selection", "gathering", "splitting", "sweep",
          "semi_selection", "semi_gathering", "achievement")

EXIT_OK, EXIT_CHECK, EXIT_UNSOLVABLE, EXIT_MALFORMED = 0, 1, 2, 3

METRIC_FIELDS = (["schema_version", "config_hash", "n", "k", "g", "variant", "adversary",
                  "placement", "seed", "order", "outcome", "rounds", "round_cap",
                  "total_moves", "move_cap"]
                 + [f"max_pass_{p}" for p in PHASES]
                 + ["gathered", "bounds_pass", "pass"])

SUMMARY_FIELDS = ["schema_version", "n", "g", "k", "variant", "adversary", "status", "runs",
                  "passed", "failed", "max_rounds", "round_cap", "max_total_moves",
                  "move_cap"] + [f"max_pass_{p}" for p in PHASES]


class MalformedConfig(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    n: int
    k: int
    g: int
    placements: object = "equidistant"
    ids: object = "ascending"
    adversary: dict = field(default_factory=lambda: {"kind": "none"})
    seed: int = 0
    round_limit: Optional[int] = None
    order: str = "ascending"
    trace: bool = False
    metrics: str = "metrics.csv"

    def canonical(self) -> str:
        d = asdict(self)
        d.pop("trace")
        d.pop("metrics")
        return json.dumps(d, sort_keys=True, separators=(",", ":"))

    @property
    def hash(self) -> str:
        return hashlib.sha256(self.canonical().encode()).hexdigest()[:12]

    @property
    def placement_label(self) -> str:
        p = self.placements
        if isinstance(p, list):
            return "explicit"
        if isinstance(p, dict):
            return f"random({p['random']})"
        if p == "random":
            return f"random({self.seed})"
        return p


def _int(value, name):
    if isinstance(value, bool) or not isinstance(value, int):
        raise MalformedConfig(f"{name} must be an integer, got {value!r}")
    return value


def parse_adversary(doc) -> dict:
    if doc is None:
        return {"kind": "none"}
    if isinstance(doc, str):
        doc = {"kind": doc}
    if not isinstance(doc, dict) or "kind" not in doc:
        raise MalformedConfig(f"adversary must be a mapping with a kind, got {doc!r}")
    allowed = {"kind", "link", "seed", "p_none", "script", "policy"}
    extra = set(doc) - allowed
    if extra:
        raise MalformedConfig(f"unknown adversary keys {sorted(extra)}")
    return dict(doc)


def parse_run(doc: dict) -> RunConfig:
    if not isinstance(doc, dict):
        raise MalformedConfig("config must be a mapping")
    known = {"n", "k", "g", "placements", "ids", "adversary", "seed", "round_limit",
             "order", "emit"}
    extra = set(doc) - known
    if extra:
        raise MalformedConfig(f"unknown keys {sorted(extra)}")
    for key in ("n", "k", "g"):
        if key not in doc:
            raise MalformedConfig(f"missing required key {key!r}")
    emit = doc.get("emit") or {}
    if not isinstance(emit, dict):
        raise MalformedConfig("emit must be a mapping")
    placements = doc.get("placements", "equidistant")
    if isinstance(placements, dict):
        if set(placements) != {"random"}:
            raise MalformedConfig(f"bad placements mapping {placements!r}")
        _int(placements["random"], "placements.random")
    elif isinstance(placements, str):
        if placements not in ("equidistant", "clustered", "random"):
            raise MalformedConfig(f"unknown placement preset {placements!r}")
    elif isinstance(placements, list):
        placements = [_int(p, "placement") for p in placements]
    else:
        raise MalformedConfig(f"bad placements {placements!r}")
    ids = doc.get("ids", "ascending")
    if isinstance(ids, list):
        ids = [_int(i, "id") for i in ids]
    elif ids != "ascending":
        raise MalformedConfig(f"ids must be 'ascending' or a list, got {ids!r}")
    order = doc.get("order", "ascending")
    if order not in ("ascending", "random"):
        raise MalformedConfig(f"unknown order policy {order!r}")
    limit = doc.get("round_limit")
    return RunConfig(
        n=_int(doc["n"], "n"), k=_int(doc["k"], "k"), g=_int(doc["g"], "g"),
        placements=placements, ids=ids, adversary=parse_adversary(doc.get("adversary")),
        seed=_int(doc.get("seed", 0), "seed"),
        round_limit=None if limit is None else _int(limit, "round_limit"),
        order=order, trace=bool(emit.get("trace", False)),
        metrics=str(emit.get("metrics", "metrics.csv")),
    )


def load_document(path) -> dict:
    try:
        with open(path) as fh:
            doc = yaml.safe_load(fh)
    except (OSError, yaml.YAMLError) as exc:
        raise MalformedConfig(f"cannot read {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise MalformedConfig(f"{path}: top level must be a mapping")
    return doc


def resolve_placements(cfg: RunConfig) -> list:
    p = cfg.placements
    if isinstance(p, list):
        return p
    if p == "equidistant":
        return [i * (cfg.n // cfg.k) for i in range(cfg.k)]
    if p == "clustered":
        return clustered_placement(cfg.n, cfg.k)
    seed = p["random"] if isinstance(p, dict) else cfg.seed
    return sorted(random.Random(f"placement:{seed}").sample(range(cfg.n), cfg.k))


def build_adversary(cfg: RunConfig) -> AdversarySpec:
    d = dict(cfg.adversary)
    if d["kind"] == "random":
        d.setdefault("seed", cfg.seed)
        d.setdefault("p_none", 0.2)
    try:
        return AdversarySpec(**d)
    except (TypeError, ValueError) as exc:
        raise MalformedConfig(str(exc)) from exc


def prepare(cfg: RunConfig):
    """Validate a config. Raises Unsolvable or MalformedConfig."""
    if cfg.k <= 2 * cfg.g and cfg.k >= 1 and cfg.g >= 1:
        raise Unsolvable(f"dispatch guard: k={cfg.k} <= 2g={2 * cfg.g}, no algorithm exists")
    try:
        variant = dispatch(cfg.n, cfg.k, cfg.g)
        placements = resolve_placements(cfg)
        ids = list(range(cfg.k)) if cfg.ids == "ascending" else list(cfg.ids)
        if len(placements) != cfg.k or len(ids) != cfg.k:
            raise MalformedConfig(
                f"k={cfg.k} but {len(placements)} placements and {len(ids)} ids")
        initial = init_configuration(cfg.n, placements, ids)
        adversary = build_adversary(cfg)
        adversary.validate(cfg.n)
    except Unsolvable:
        raise
    except ValueError as exc:    # ConfigError and range checks
        if isinstance(exc, MalformedConfig):
            raise
        raise MalformedConfig(str(exc)) from exc
    if cfg.round_limit is not None and cfg.round_limit < 1:
        raise MalformedConfig("round_limit must be at least 1")
    order = OrderPolicy(cfg.order, cfg.seed)
    return variant, initial, adversary, order


def execute(cfg: RunConfig, want_trace: bool = False):
    """Run one config. Returns (metrics row, trace text or None)."""
    variant, initial, adversary, order = prepare(cfg)
    result = run(initial, variant, adversary, cfg.round_limit, order)
    report = check_bounds(result, variant)
    gathered = check_partial_gathering(result.final, cfg.g)
    ok = result.outcome == ALL_TERMINATED and gathered and report.pass_
    row = {
        "schema_version": SCHEMA_VERSION, "config_hash": cfg.hash,
        "n": cfg.n, "k": cfg.k, "g": cfg.g, "variant": variant.tag,
        "adversary": adversary.label, "placement": cfg.placement_label, "seed": cfg.seed,
        "order": cfg.order, "outcome": result.outcome, "rounds": result.rounds_elapsed,
        "round_cap": report.round_cap, "total_moves": result.total_moves,
        "move_cap": report.move_cap,
    }
    for p in PHASES:
        counts = result.link_passes.get(p)
        row[f"max_pass_{p}"] = max(counts) if counts else 0
    row.update(gathered=int(gathered), bounds_pass=int(report.pass_), **{"pass": int(ok)})
    trace = render_trace(result.trace, cfg) if want_trace else None
    return row, trace


def render_trace(records: list, cfg: RunConfig) -> str:
    lines = []
    for rec in records:
        out = {"schema_version": SCHEMA_VERSION, "config_hash": cfg.hash}
        out.update(rec)
        lines.append(json.dumps(out, sort_keys=True, separators=(",", ":")))
    return "\n".join(lines) + "\n"


def write_csv(path: Path, fields, rows) -> None:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow(row)
    path.write_text(buf.getvalue())


def out_dir(flag: Optional[str]) -> Path:
    path = Path(os.environ.get(OUT_ENV) or flag or "out")
    path.mkdir(parents=True, exist_ok=True)
    return path


def run_once(cfg: RunConfig, out: Path, trace: Optional[bool] = None) -> int:
    want_trace = cfg.trace if trace is None else trace
    try:
        row, text = execute(cfg, want_trace)
    except Unsolvable as exc:
        print(f"unsolvable: {exc}", file=sys.stderr)
        return EXIT_UNSOLVABLE
    except MalformedConfig as exc:
        print(f"malformed config: {exc}", file=sys.stderr)
        return EXIT_MALFORMED
    write_csv(out / cfg.metrics, METRIC_FIELDS, [row])
    if text is not None:
        (out / f"trace-{cfg.hash}.ndjson").write_text(text)
    status = "ok" if row["pass"] else "FAILED"
    print(f"{status} {row['variant']} n={cfg.n} k={cfg.k} g={cfg.g} {row['adversary']}: "
          f"{row['rounds']} rounds (cap {row['round_cap']}), {row['total_moves']} moves")
    return EXIT_OK if row["pass"] else EXIT_CHECK


# sweeps ---------------------------------------------------------------------

def k_classes(n: int, g: int) -> dict:
    """Representative k per variant edge, restricted to 2g < k <= n."""
    out = {}
    lo, hi = variant_range("B1", g)
    if lo <= hi:
        out["B1-low"], out["B1-high"] = lo, hi
    lo, hi = variant_range("B2", g)
    out["B2-low"], out["B2-high"] = lo, hi
    lo, _ = variant_range("B3", g)
    out["B3-edge"] = lo
    out["n"] = n
    return {name: k for name, k in out.items() if 2 * g < k <= n}


def expand_sweep(doc: dict):
    """Expand a sweep document into (cell key, [RunConfig]) pairs and skipped cells.

    Keys under ``sweep``: n, g (lists), k (list of ints or variant tags B1/B2/B3,
    default all edge values), adversaries, placements, seeds, order, round_limit.
    """
    sw = doc.get("sweep")
    if not isinstance(sw, dict):
        raise MalformedConfig("sweep document needs a 'sweep' mapping")
    ns = [_int(x, "n") for x in sw.get("n", [])]
    gs = [_int(x, "g") for x in sw.get("g", [])]
    if not ns or not gs:
        raise MalformedConfig("sweep needs nonempty n and g lists")
    ks = sw.get("k", ["B1", "B2", "B3"])
    advs = [parse_adversary(a) for a in sw.get("adversaries", ["none"])]
    places = sw.get("placements", ["equidistant"])
    seeds = sw.get("seeds", [0])
    if isinstance(seeds, dict):
        seeds = list(range(_int(seeds.get("start", 0), "seeds.start"),
                           _int(seeds["stop"], "seeds.stop")))
    seeds = [_int(s, "seed") for s in seeds]
    base = {"order": sw.get("order", "ascending"), "round_limit": sw.get("round_limit")}
    cells, skipped = [], []
    for n in ns:
        for g in gs:
            chosen = []
            for k in ks:
                if isinstance(k, int) and not isinstance(k, bool):
                    chosen.append(k)
                    continue
                if k not in ("B1", "B2", "B3"):
                    raise MalformedConfig(f"unknown k class {k!r}")
                edges = sorted({v for name, v in k_classes(n, g).items()
                                if name.startswith(k) or (name == "n" and dispatch(n, v, g).tag == k)})
                if not edges:
                    skipped.append({"n": n, "g": g, "k": "", "variant": k,
                                    "status": "skipped-empty-range"})
                chosen.extend(edges)
            for k in sorted(set(chosen)):
                if not 2 * g < k <= n:
                    skipped.append({"n": n, "g": g, "k": k, "variant": "",
                                    "status": "skipped-unsolvable" if k <= 2 * g
                                    else "skipped-k-exceeds-n"})
                    continue
                tag = dispatch(n, k, g).tag
                for adv in advs:
                    runs = []
                    for place in places:
                        for seed in seeds:
                            cfg = parse_run({"n": n, "k": k, "g": g, "placements": place,
                                             "adversary": _adv_for_n(adv, n), "seed": seed,
                                             **{key: v for key, v in base.items() if v is not None}})
                            runs.append(cfg)
                    label = build_adversary(runs[0]).label if adv["kind"] != "random" else "random"
                    cells.append(((n, g, k, tag, label), runs))
    return cells, skipped


def _adv_for_n(adv: dict, n: int) -> dict:
    # a fixed link given as -1 means the last link of the ring
    if adv.get("kind") == "fixed" and adv.get("link", 0) < 0:
        return {**adv, "link": n + adv["link"]}
    return adv


def _execute_safe(args):
    cfg, want_trace = args
    try:
        return execute(cfg, want_trace)
    except (Unsolvable, MalformedConfig) as exc:
        return {"error": str(exc), "config_hash": cfg.hash}, None


def run_sweep(doc: dict, out: Path, trace: bool = False, jobs: int = 1,
              figures: bool = False) -> int:
    cells, skipped = expand_sweep(doc)
    flat = [(cfg, trace) for _, runs in cells for cfg in runs]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            results = list(ex.map(_execute_safe, flat, chunksize=4))
    else:
        results = [_execute_safe(a) for a in flat]
    # single collector writes every file, in expansion order
    rows, summary, failed = [], [], False
    it = iter(results)
    if trace:
        (out / "traces").mkdir(exist_ok=True)
    for (n, g, k, tag, label), runs in cells:
        cell_rows = []
        for cfg in runs:
            row, text = next(it)
            if "error" in row:
                failed = True
                continue
            cell_rows.append(row)
            if text is not None:
                (out / "traces" / f"{cfg.hash}.ndjson").write_text(text)
        rows.extend(cell_rows)
        passed = sum(r["pass"] for r in cell_rows)
        status = "pass" if passed == len(runs) else "fail"
        failed |= status == "fail"
        srow = {"schema_version": SCHEMA_VERSION, "n": n, "g": g, "k": k, "variant": tag,
                "adversary": label, "status": status, "runs": len(runs), "passed": passed,
                "failed": len(runs) - passed,
                "max_rounds": max((r["rounds"] for r in cell_rows), default=0),
                "round_cap": max((r["round_cap"] for r in cell_rows), default=0),
                "max_total_moves": max((r["total_moves"] for r in cell_rows), default=0),
                "move_cap": max((r["move_cap"] for r in cell_rows), default=0)}
        for p in PHASES:
            key = f"max_pass_{p}"
            srow[key] = max((r[key] for r in cell_rows), default=0)
        summary.append(srow)
    for s in skipped:
        summary.append({"schema_version": SCHEMA_VERSION, "runs": 0, "passed": 0, "failed": 0, **s})
    write_csv(out / "metrics.csv", METRIC_FIELDS, rows)
    write_csv(out / "summary.csv", SUMMARY_FIELDS, summary)
    if figures:
        from .report import render_figures
        render_figures(rows, out)
    n_fail = sum(s["status"] == "fail" for s in summary)
    print(f"{len(cells)} cells, {len(rows)} runs, {n_fail} failing cells, "
          f"{len(skipped)} skipped")
    return EXIT_CHECK if failed else EXIT_OK


# entry point ----------------------------------------------------------------

def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="dyngather",
                                     description="g-partial gathering on dynamic rings")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute one run config")
    p_sweep = sub.add_parser("sweep", help="execute a grid of runs")
    p_report = sub.add_parser("report", help="render figures from a metrics CSV")
    for p in (p_run, p_sweep):
        p.add_argument("config", help="YAML or JSON config document")
        p.add_argument("-o", "--out", help=f"output directory (env {OUT_ENV} wins)")
        p.add_argument("--trace", action=argparse.BooleanOptionalAction, default=None,
                       help="write NDJSON traces")
        p.add_argument("--seed", type=int, help="override the config seed")
    p_sweep.add_argument("-j", "--jobs", type=int, default=1, help="parallel worker processes")
    p_sweep.add_argument("--figures", action="store_true", help="render PNG figures next to the CSV")
    p_report.add_argument("metrics", help="metrics.csv written by a sweep")
    p_report.add_argument("-o", "--out", help="figure directory (defaults to the CSV's)")

    args = parser.parse_args(argv)
    if args.command == "report":
        from .report import load_metrics, render_figures
        target = Path(args.out) if args.out else Path(args.metrics).parent
        target.mkdir(parents=True, exist_ok=True)
        for path in render_figures(load_metrics(args.metrics), target):
            print(path)
        return EXIT_OK
    try:
        doc = load_document(args.config)
        if args.command == "run":
            cfg = parse_run(doc)
            if args.seed is not None:
                cfg = replace(cfg, seed=args.seed)
            return run_once(cfg, out_dir(args.out), args.trace)
        if args.seed is not None:
            doc = {"sweep": {**doc.get("sweep", {}), "seeds": [args.seed]}}
        return run_sweep(doc, out_dir(args.out), bool(args.trace), args.jobs, args.figures)
    except MalformedConfig as exc:
        print(f"malformed config: {exc}", file=sys.stderr)
        return EXIT_MALFORMED


if __name__ == "__main__":
    sys.exit(main())
