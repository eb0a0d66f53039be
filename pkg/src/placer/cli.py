"""Command-line front end.

Subcommands: plan, oracle, replicate, gen, export-graph,
import-partition, export-ip, cost.  Exit codes: 0 clean, 2 when the
emitted placement violates a capacity, 1 on errors.  Reports are
deterministic byte-for-byte except for the trailing timing section.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from fractions import Fraction
from pathlib import Path

from .common import INFINITE, DocumentError, PlacerError
from .evaluate import CostReport, Placement, dp_cost, gdp_cost
from .gdp import ViewDag, parse_gdp
from .generate import GenSpec, generate
from .ip import build_dp_ip, build_gdp_ip, build_replication_ip, write_lp
from .oracle import OracleLimit, optimal_gdp, optimal_placement
from .partition import (
    PartitionConfig,
    balance_ratio,
    capacity_fractions,
    export_graph,
    import_partition,
)
from .pipeline import plan_view_dag, plan_workload
from .reduction import build_dp_graph, build_gdp_graph, encode_big_m
from .replication import ReplicationConfig, heuristic1, heuristic2, max_part_size
from .workload import (
    Workload,
    parse_workload,
    serialize_workload,
    validate_capacity_lower_bounds,
)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_VIOLATIONS = 2


def _read_input(path: str) -> tuple[str, str]:
    text = Path(path).read_text()
    digest = hashlib.sha256(text.encode()).hexdigest()
    return text, digest


def _load_instance(text: str) -> Workload | ViewDag:
    from .workload import load_json_document

    probe = load_json_document(text)
    if "views" in probe:
        return parse_gdp(text)
    return parse_workload(text)


def _server_ids(obj: Workload | ViewDag) -> list[str]:
    return [s.id for s in obj.servers]


def placement_to_document(p: Placement, server_ids: list[str]) -> str:
    doc = {
        "store": {
            oid: [server_ids[k] for k in copies]
            for oid, copies in sorted(p.store.items())
        },
        "compute": {oid: server_ids[k] for oid, k in sorted(p.compute.items())},
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def placement_from_document(text: str, server_ids: list[str]) -> Placement:
    doc = json.loads(text)
    index = {sid: k for k, sid in enumerate(server_ids)}

    def to_index(sid: str) -> int:
        if sid not in index:
            raise DocumentError(f"placement references unknown server {sid!r}")
        return index[sid]

    store = {
        oid: tuple(sorted(to_index(sid) for sid in copies))
        for oid, copies in doc.get("store", {}).items()
    }
    compute = {oid: to_index(sid) for oid, sid in doc.get("compute", {}).items()}
    return Placement(store, compute)


def _fmt_cost(value) -> str:
    return "inf" if value == INFINITE else str(value)


def render_report(
    title: str,
    digest: str,
    config_lines: list[str],
    report: CostReport,
    server_ids: list[str],
    extra: list[str],
    timings,
    fmt: str,
) -> str:
    if fmt == "json":
        doc = {
            "title": title,
            "input_sha256": digest,
            "config": config_lines,
            "total_cost": None if report.total_cost == INFINITE else report.total_cost,
            "per_query": {
                qid: {"site": server_ids[site], "cost": _fmt_cost(cost)}
                for qid, (site, cost) in sorted(report.per_query.items())
            },
            "per_server": [
                {"id": server_ids[k], "storage": st, "load": ld}
                for k, (st, ld) in enumerate(report.per_server)
            ],
            "violations": list(report.violations),
            "notes": extra,
            "timings": {name: round(sec, 6) for name, sec in timings},
        }
        return json.dumps(doc, indent=2) + "\n"
    if fmt == "csv":
        lines = ["query,site,cost"]
        for qid, (site, cost) in sorted(report.per_query.items()):
            lines.append(f"{qid},{server_ids[site]},{_fmt_cost(cost)}")
        return "\n".join(lines) + "\n"
    lines = [f"== {title} ==", f"input sha256: {digest}"]
    lines.extend(config_lines)
    lines.append(f"total cost: {_fmt_cost(report.total_cost)}")
    for qid, (site, cost) in sorted(report.per_query.items()):
        lines.append(f"  {qid}: site {server_ids[site]} cost {_fmt_cost(cost)}")
    for k, (st, ld) in enumerate(report.per_server):
        lines.append(f"  {server_ids[k]}: storage {st} load {ld}")
    if report.violations:
        lines.append("violations:")
        lines.extend(f"  {v}" for v in report.violations)
    else:
        lines.append("violations: none")
    lines.extend(extra)
    lines.append("timing:")
    lines.extend(f"  {name}: {sec:.3f}s" for name, sec in timings)
    return "\n".join(lines) + "\n"


def _partition_config(args) -> PartitionConfig:
    kwargs = {}
    if args.slacks:
        kwargs["slack_factors"] = tuple(
            sorted(Fraction(s) for s in args.slacks.split(","))
        )
    if args.seeds:
        kwargs["seeds"] = tuple(int(s) for s in args.seeds.split(","))
    return PartitionConfig(**kwargs)


def cmd_plan(args) -> int:
    text, digest = _read_input(args.input)
    instance = _load_instance(text)
    cfg = _partition_config(args)
    ratio = Fraction(args.min_max_ratio) if args.min_max_ratio else None
    t0 = time.perf_counter()
    if isinstance(instance, ViewDag):
        if ratio is not None:
            raise DocumentError("--min-max-ratio applies to plain workloads only")
        outcome = plan_view_dag(
            instance, cfg, with_load=args.load, pin_views=args.pin_views
        )
        recompute = lambda p: gdp_cost(p, instance)
    else:
        for note in validate_capacity_lower_bounds(instance):
            print(f"note: {note}", file=sys.stderr)
        outcome = plan_workload(instance, cfg, with_load=args.load, min_max_ratio=ratio)
        recompute = lambda p: dp_cost(p, instance)
    elapsed = time.perf_counter() - t0

    server_ids = _server_ids(instance)
    out_path = Path(args.out) if args.out else Path(args.input).with_suffix(
        ".placement.json"
    )
    out_path.write_text(placement_to_document(outcome.placement, server_ids))

    # Self-consistency gate: the report must match a fresh evaluation of
    # the file we just wrote.
    reread = placement_from_document(out_path.read_text(), server_ids)
    if recompute(reread).total_cost != outcome.report.total_cost:
        print("error: emitted placement does not reproduce the reported cost",
              file=sys.stderr)
        return EXIT_ERROR

    config_lines = [
        f"config: seeds={list(cfg.seeds)} slacks={[str(s) for s in cfg.slack_factors]}",
        f"slack used: {outcome.partition.slack}",
        f"placement: {out_path}",
    ]
    ratios = []
    for d in range(len(outcome.partition.per_part_loads[0]) if outcome.partition.per_part_loads else 0):
        r = balance_ratio(outcome.partition, d)
        ratios.append("undefined" if r is None else str(r))
    extra = [f"balance ratio: {ratios}"] if ratios else []
    extra.extend(f"warning: {wtext}" for wtext in outcome.warnings)
    timings = list(outcome.timings) + [("total", elapsed)]
    sys.stdout.write(
        render_report(
            "plan", digest, config_lines, outcome.report, server_ids, extra,
            timings, args.format,
        )
    )
    return EXIT_VIOLATIONS if outcome.report.violations else EXIT_OK


def cmd_oracle(args) -> int:
    text, digest = _read_input(args.input)
    instance = _load_instance(text)
    limit = OracleLimit(args.budget)
    if isinstance(instance, ViewDag):
        result = optimal_gdp(instance, limit)
    else:
        result = optimal_placement(instance, limit)
    print(f"input sha256: {digest}")
    if not result.feasible:
        print("result: INFEASIBLE" if result.complete else "result: UNKNOWN (budget)")
        return EXIT_OK if result.complete else EXIT_ERROR
    print(f"optimal cost: {result.cost}" if result.complete
          else f"best found (budget exceeded): {result.cost}")
    if args.out:
        Path(args.out).write_text(
            placement_to_document(result.solution, _server_ids(instance))
        )
        print(f"placement: {args.out}")
    return EXIT_OK


def cmd_cost(args) -> int:
    text, digest = _read_input(args.input)
    instance = _load_instance(text)
    server_ids = _server_ids(instance)
    placement = placement_from_document(Path(args.placement).read_text(), server_ids)
    if isinstance(instance, ViewDag):
        report = gdp_cost(placement, instance)
    else:
        report = dp_cost(placement, instance)
    sys.stdout.write(
        render_report(
            "cost", digest, [f"placement: {args.placement}"], report, server_ids,
            [], [], args.format,
        )
    )
    return EXIT_VIOLATIONS if report.violations else EXIT_OK


def cmd_replicate(args) -> int:
    text, digest = _read_input(args.input)
    w = parse_workload(text)
    cfg = ReplicationConfig(args.replication, args.seed)
    placement = heuristic1(w, cfg) if args.heuristic == 1 else heuristic2(w, cfg)
    report = dp_cost(placement, w)
    server_ids = _server_ids(w)
    out_path = Path(args.out) if args.out else Path(args.input).with_suffix(
        ".placement.json"
    )
    out_path.write_text(placement_to_document(placement, server_ids))
    biggest, desired = max_part_size(placement, w, args.replication)
    extra = [
        f"max part size: {biggest} (desired {desired} for r={args.replication})",
        f"rng seed: {args.seed}",
        f"placement: {out_path}",
    ]
    sys.stdout.write(
        render_report(
            f"replicate h{args.heuristic} r={args.replication}", digest,
            [], report, server_ids, extra, [], args.format,
        )
    )
    return EXIT_VIOLATIONS if report.violations else EXIT_OK


def cmd_gen(args) -> int:
    spec = GenSpec(
        shape=args.shape,
        n_tables=args.tables,
        n_queries=args.queries,
        n_servers=args.servers,
        seed=args.seed,
        server_capacity=args.capacity,
    )
    w = generate(spec)
    doc = serialize_workload(w)
    if args.out:
        Path(args.out).write_text(doc)
        print(f"workload: {args.out}")
    else:
        sys.stdout.write(doc)
    return EXIT_OK


def cmd_export_graph(args) -> int:
    text, digest = _read_input(args.input)
    instance = _load_instance(text)
    if isinstance(instance, ViewDag):
        graph = build_gdp_graph(instance, with_load=args.load)
    else:
        graph = build_dp_graph(instance, with_load=args.load)
    if graph.has_infinite_edges():
        graph = encode_big_m(graph)
        print("note: infinite edges encoded as big-M for export", file=sys.stderr)
    out_path = Path(args.out) if args.out else Path(args.input).with_suffix(".graph")
    out_path.write_text(export_graph(graph))
    print(f"graph: {out_path}")
    fractions = capacity_fractions(graph)
    # External partitioners balance by target fractions, not hard
    # capacities; s_k / sum(s) approximates the intent.
    print("target fractions per part:", " ".join(
        "/".join(str(x) for x in vec) for vec in fractions
    ))
    print(f"input sha256: {digest}")
    return EXIT_OK


def cmd_import_partition(args) -> int:
    text, digest = _read_input(args.input)
    instance = _load_instance(text)
    server_ids = _server_ids(instance)
    part_text = Path(args.partition).read_text()
    if isinstance(instance, ViewDag):
        graph = build_gdp_graph(instance, with_load=args.load)
        graph = encode_big_m(graph)
        assignment = import_partition(part_text, graph)
        from .evaluate import decode_gdp

        placement = decode_gdp(assignment, instance)
        report = gdp_cost(placement, instance)
    else:
        graph = build_dp_graph(instance, with_load=args.load)
        assignment = import_partition(part_text, graph)
        from .evaluate import decode_dp

        placement = decode_dp(assignment, instance)
        report = dp_cost(placement, instance)
    out_path = Path(args.out) if args.out else Path(args.partition).with_suffix(
        ".placement.json"
    )
    out_path.write_text(placement_to_document(placement, server_ids))
    extra = [f"placement: {out_path}"]
    sys.stdout.write(
        render_report(
            "import-partition", digest, [], report, server_ids, extra, [],
            args.format,
        )
    )
    return EXIT_VIOLATIONS if report.violations else EXIT_OK


def cmd_export_ip(args) -> int:
    text, digest = _read_input(args.input)
    instance = _load_instance(text)
    if args.model == "gdp":
        if not isinstance(instance, ViewDag):
            raise DocumentError("gdp model needs a GDP document")
        model = build_gdp_ip(instance)
    elif args.model == "replication":
        if isinstance(instance, ViewDag):
            raise DocumentError("replication model needs a plain workload")
        model = build_replication_ip(instance, args.replication)
    else:
        if isinstance(instance, ViewDag):
            raise DocumentError("dp model needs a plain workload")
        model = build_dp_ip(instance)
    out_path = Path(args.out) if args.out else Path(args.input).with_suffix(".lp")
    out_path.write_text(write_lp(model))
    print(f"lp: {out_path}")
    print(f"input sha256: {digest}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="placer",
        description="Communication-aware placement planning via graph partitioning",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, with_format=True):
        p.add_argument("input", help="workload or GDP document")
        if with_format:
            p.add_argument("--format", choices=("text", "json", "csv"), default="text")

    p = sub.add_parser("plan", help="end-to-end placement plan")
    add_common(p)
    p.add_argument("--load", action="store_true", help="enable 2-D load balancing")
    p.add_argument("--min-max-ratio", help="target min/max load ratio (e.g. 0.75)")
    p.add_argument("--pin-views", action="store_true",
                   help="force materialized views to compute and store together")
    p.add_argument("--slacks", help="comma-separated capacity slack factors")
    p.add_argument("--seeds", help="comma-separated partitioner seeds")
    p.add_argument("--out", help="placement output path")
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("oracle", help="exact optimum for small instances")
    add_common(p, with_format=False)
    p.add_argument("--budget", type=int, default=OracleLimit().max_assignments)
    p.add_argument("--out", help="placement output path")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("cost", help="re-evaluate a placement file")
    add_common(p)
    p.add_argument("placement", help="placement document")
    p.set_defaults(func=cmd_cost)

    p = sub.add_parser("replicate", help="replicated placement heuristics")
    add_common(p)
    p.add_argument("--replication", type=int, required=True)
    p.add_argument("--heuristic", type=int, choices=(1, 2), default=2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="placement output path")
    p.set_defaults(func=cmd_replicate)

    p = sub.add_parser("gen", help="generate a workload document")
    p.add_argument("--shape", choices=("random", "tpcds"), default="random")
    p.add_argument("--tables", type=int, default=24)
    p.add_argument("--queries", type=int, default=99)
    p.add_argument("--servers", type=int, default=4)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--capacity", type=int, help="fixed per-server capacity")
    p.add_argument("--out", help="workload output path")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("export-graph", help="write the partitioner graph file")
    add_common(p, with_format=False)
    p.add_argument("--load", action="store_true")
    p.add_argument("--out", help="graph output path")
    p.set_defaults(func=cmd_export_graph)

    p = sub.add_parser("import-partition", help="decode an external partition file")
    add_common(p)
    p.add_argument("partition", help="one part index per line")
    p.add_argument("--load", action="store_true")
    p.add_argument("--out", help="placement output path")
    p.set_defaults(func=cmd_import_partition)

    p = sub.add_parser("export-ip", help="write an LP-format integer program")
    add_common(p, with_format=False)
    p.add_argument("--model", choices=("dp", "gdp", "replication"), default="dp")
    p.add_argument("--replication", type=int, default=1)
    p.add_argument("--out", help="LP output path")
    p.set_defaults(func=cmd_export_ip)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except PlacerError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
