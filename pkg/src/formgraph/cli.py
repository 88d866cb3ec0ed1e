"""Command-line interface.

Commands: analyze (graph export for one page), generate (run the pipeline
and emit a test plan), report (coverage against ground truth), run-tests
(replay a plan), simulate (serve a form spec over the executor protocol).
Flag values win over the config file, which wins over defaults; secrets
only ever come from environment variables.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from .analysis import FormGraphBuilder
from .backends import LlmBackendConfig, make_backend
from .dom import classify_nodes, parse_document, tree_to_json
from .errors import FormgraphError, NoPassingAssignment, TruthUnavailable
from .ferg import ferg_to_dot, ferg_to_json
from .node2vec import KERNEL_BACKEND
from .pipeline import (
    FormTestPipeline,
    PipelineConfig,
    coverage_report,
    emit_tests,
    load_run_db,
    observed_listing,
    render_coverage_table,
    run_static_baseline,
    run_tests,
    write_run_db,
)
from .simserver import RemoteExecutor, serve_forever
from .simulator import load_form_spec
from .submission import SimulatorExecutor


def _read_input(path: str) -> bytes:
    if path == "-":
        return sys.stdin.buffer.read()
    return Path(path).read_bytes()


def _is_remote(target: str) -> bool:
    return target.startswith("http://") or target.startswith("https://")


def _make_executor(target: str):
    """A simulator executor for spec paths, a protocol client for URLs."""
    if _is_remote(target):
        return RemoteExecutor(target), None
    spec = load_form_spec(target)
    return SimulatorExecutor(spec), spec


def _pipeline_config(args) -> PipelineConfig:
    return PipelineConfig(
        max_feedback_iterations=args.max_iterations,
        seed=args.seed,
        sibling_window=args.window,
        lambda_factor=args.lambda_factor,
    )


def cmd_analyze(args) -> int:
    html = _read_input(args.html)
    tree = parse_document(html)
    builder = FormGraphBuilder(node2vec_params=PipelineConfig(seed=args.seed).node2vec)
    if args.selector:
        builder.form_selector = args.selector
    analysis = builder.analyze_tree(tree)
    graph_json = ferg_to_json(analysis.graph)
    out = Path(args.out)
    out.write_text(graph_json + "\n", encoding="utf-8")
    print(f"wrote {out}")
    if args.dot:
        dot_path = out.with_suffix(".dot")
        dot_path.write_text(ferg_to_dot(analysis.graph) + "\n", encoding="utf-8")
        print(f"wrote {dot_path}")
    if args.dump_nodes:
        Path(args.dump_nodes).write_text(
            tree_to_json(tree, classify_nodes(tree)) + "\n", encoding="utf-8"
        )
        print(f"wrote {args.dump_nodes}")
    return 0


def _generate_one(target: str, args) -> int:
    executor, spec = _make_executor(target)
    config = _pipeline_config(args)
    now = _dt.datetime.fromisoformat(args.now) if args.now else _dt.datetime.now()

    if args.backend == "static":
        records = run_static_baseline(executor, config)
        passing = any(r.outcome == "success" for r in records)
        builder = config.make_builder()
        analysis = builder.analyze_html(executor.page().html)
    else:
        if args.backend == "remote" and not args.endpoint:
            raise FormgraphError("remote backend requires --endpoint")
        script = None
        if args.backend == "scripted-mock":
            if not args.script:
                raise FormgraphError("scripted-mock requires --script")
            script = json.loads(Path(args.script).read_text("utf-8"))
        backend_cfg = LlmBackendConfig(
            backend=args.backend,
            endpoint=args.endpoint or "",
            model=args.model or "",
            script=script,
        )
        backend = make_backend(backend_cfg, spec)
        pipeline = FormTestPipeline(executor, backend, config, truth_spec=spec)
        result = pipeline.run(now=now)
        records = result.records
        passing = result.passing is not None
        analysis = result.analysis

    page_target = target if _is_remote(target) else spec.base_url()
    _, plan = emit_tests(records, analysis, page_target, seed=args.seed)
    if spec is not None:
        plan["spec_path"] = str(Path(target).resolve())
    Path(args.plan).write_text(
        json.dumps(plan, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    write_run_db(args.run_db, records)
    print(f"[{target}] plan: {args.plan} ({len(plan['tests'])} tests), run db: {args.run_db}")

    if spec is not None:
        report = coverage_report(records, spec)
        print(render_coverage_table(report))
    else:
        print("no ground truth for live target; observed states:")
        for row in observed_listing(records):
            print(f"  {row['outcome']}: {row['feedback']}")
    if not passing:
        print(f"[{target}] no passing assignment found", file=sys.stderr)
        return 3
    return 0


def cmd_generate(args) -> int:
    targets = args.target
    if len(targets) == 1:
        return _generate_one(targets[0], args)
    # one pipeline per target; parallelism only across targets
    codes = []
    if args.jobs > 1:
        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            futures = []
            for index, target in enumerate(targets):
                sub = argparse.Namespace(**vars(args))
                sub.plan = _indexed_path(args.plan, index)
                sub.run_db = _indexed_path(args.run_db, index)
                futures.append(pool.submit(_generate_one, target, sub))
            codes = [f.result() for f in futures]
    else:
        for index, target in enumerate(targets):
            sub = argparse.Namespace(**vars(args))
            sub.plan = _indexed_path(args.plan, index)
            sub.run_db = _indexed_path(args.run_db, index)
            codes.append(_generate_one(target, sub))
    return max(codes)


def _indexed_path(path: str, index: int) -> str:
    if index == 0:
        return path
    p = Path(path)
    return str(p.with_name(f"{p.stem}.{index}{p.suffix}"))


def cmd_report(args) -> int:
    records = load_run_db(args.run_db)
    if args.truth:
        spec = load_form_spec(args.truth)
        report = coverage_report(records, spec)
        print(render_coverage_table(report))
        return 0
    try:
        coverage_report(records, None)
    except TruthUnavailable:
        print("no ground truth spec; observed states:")
        for row in observed_listing(records):
            print(f"  {row['outcome']}: {row['feedback']}")
    return 0


def cmd_run_tests(args) -> int:
    plan = json.loads(Path(args.plan).read_text("utf-8"))
    if not plan.get("tests"):
        print("plan contains no tests", file=sys.stderr)
        return 2
    executor, _ = _make_executor(args.target or plan.get("spec_path") or plan["target"])
    results = run_tests(plan, executor)
    failed = 0
    for row in results:
        status = "PASS" if row["passed"] else "FAIL"
        detail = f" ({row['detail']})" if row["detail"] else ""
        print(f"{status} {row['id']}{detail}")
        failed += 0 if row["passed"] else 1
    print(f"{len(results) - failed}/{len(results)} passed")
    return 1 if failed else 0


def cmd_simulate(args) -> int:
    spec = load_form_spec(args.spec)
    serve_forever(spec, args.host, args.port)
    return 0


def _apply_config_file(parser: argparse.ArgumentParser, args: argparse.Namespace):
    """Config-file values fill in any option the command line left at its
    default; flags always win."""
    if not getattr(args, "config", None):
        return args
    file_values = json.loads(Path(args.config).read_text("utf-8"))
    for key, value in file_values.items():
        attr = key.replace("-", "_")
        if hasattr(args, attr) and getattr(args, attr) == parser.get_default(attr):
            setattr(args, attr, value)
    return args


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="formgraph",
        description="Graph-based web form analysis and test generation "
        f"(walk kernel: {KERNEL_BACKEND})",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON config file; flags override it")
        p.add_argument("--seed", type=int, default=42)
        p.add_argument("--window", type=int, default=3, help="adjacency window")
        p.add_argument("--lambda-factor", type=float, default=0.5, dest="lambda_factor")

    p_analyze = sub.add_parser("analyze", help="export the relation graph for a page")
    p_analyze.add_argument("html", help="HTML file path, or - for stdin")
    p_analyze.add_argument("--out", default="graph.json")
    p_analyze.add_argument("--dot", action="store_true", help="also write DOT")
    p_analyze.add_argument("--dump-nodes", help="write the classified node dump")
    p_analyze.add_argument("--selector", help="form selector (#id or index)")
    common(p_analyze)
    p_analyze.set_defaults(func=cmd_analyze)

    p_generate = sub.add_parser("generate", help="infer constraints and emit a test plan")
    p_generate.add_argument(
        "--target", action="append", required=True,
        help="simulator spec path or remote executor URL (repeatable)",
    )
    p_generate.add_argument(
        "--backend",
        choices=["oracle-mock", "scripted-mock", "remote", "static"],
        default="oracle-mock",
    )
    p_generate.add_argument("--script", help="scripted-mock response file")
    p_generate.add_argument("--endpoint", help="remote completion endpoint")
    p_generate.add_argument("--model", help="remote model name")
    p_generate.add_argument("--plan", default="plan.json")
    p_generate.add_argument("--run-db", default="run_db.jsonl", dest="run_db")
    p_generate.add_argument("--max-iterations", type=int, default=5, dest="max_iterations")
    p_generate.add_argument("--now", help="ISO timestamp for the time context")
    p_generate.add_argument("--jobs", type=int, default=1)
    common(p_generate)
    p_generate.set_defaults(func=cmd_generate)

    p_report = sub.add_parser("report", help="coverage table for a run database")
    p_report.add_argument("--run-db", required=True, dest="run_db")
    p_report.add_argument("--truth", help="simulator spec for ground truth")
    common(p_report)
    p_report.set_defaults(func=cmd_report)

    p_run = sub.add_parser("run-tests", help="replay a test plan")
    p_run.add_argument("--plan", required=True)
    p_run.add_argument("--target", help="override the plan's target")
    common(p_run)
    p_run.set_defaults(func=cmd_run_tests)

    p_sim = sub.add_parser("simulate", help="serve a spec over the executor protocol")
    p_sim.add_argument("--spec", required=True)
    p_sim.add_argument("--host", default="127.0.0.1")
    p_sim.add_argument("--port", type=int, default=8765)
    common(p_sim)
    p_sim.set_defaults(func=cmd_simulate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args = _apply_config_file(parser, args)
        return args.func(args)
    except FormgraphError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
