"""Command-line surface: dataset construction, benchmark runs, and metrics."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import bench, datasets, flow, report
from .backends import OpenAICompatibleBackend, OracleBackend, StubBackend
from .errors import CopError
from .pipeline import PipelineConfig
from .prompts import PromptSet


def _parse_depths(spec: str) -> list[int]:
    if "-" in spec:
        low, high = spec.split("-", 1)
        return list(range(int(low), int(high) + 1))
    return [int(spec)]


def _build_backend(args, records: list[dict]):
    kind = args.backend
    if kind == "oracle":
        return OracleBackend(records)
    if kind == "stub":
        return StubBackend([args.stub_reply])
    if kind == "openai_compatible":
        return OpenAICompatibleBackend(
            model=args.model,
            base_url=args.base_url,
            concurrency=args.concurrency,
        )
    raise CopError(f"unknown backend kind {kind!r}")


def _load_prompts(args) -> PromptSet:
    if getattr(args, "prompts", None):
        return PromptSet.load(args.prompts)
    return PromptSet.default()


def cmd_build_digsm(args) -> int:
    gsm8k = datasets.load_gsm8k(args.gsm8k)
    pool = None
    if args.pool:
        pool = [line.strip() for line in Path(args.pool).read_text(encoding="utf-8").splitlines() if line.strip()]
    records = datasets.build_digsm(gsm8k, pool, seed=args.seed)
    datasets.save_jsonl(records, args.out)
    print(f"wrote {len(records)} DI-GSM records to {args.out} (from {len(gsm8k)} problems)")
    return 0


def cmd_gen_logic(args) -> int:
    depths = _parse_depths(args.depth)
    records = datasets.generate_logic_dataset(
        n=args.n, depths=depths, n_distractors=args.distractors, seed=args.seed
    )
    datasets.save_jsonl(records, args.out)
    print(f"wrote {len(records)} synthetic logic records to {args.out}")
    return 0


def cmd_run(args) -> int:
    records = datasets.load_jsonl(args.dataset)
    dataset = [datasets.context_from_record(r) for r in records]
    backend = _build_backend(args, records)
    prompts = _load_prompts(args)
    config = PipelineConfig(
        max_depth=args.max_depth,
        match_threshold=args.match_threshold,
        family=args.family,
    )
    result = bench.run_benchmark(
        dataset,
        method=args.method,
        backend=backend,
        prompts=prompts,
        config=config,
        dataset_id=Path(args.dataset).stem,
        seed=args.seed,
        concurrency=args.concurrency,
        trace_dir=args.trace_dir,
    )
    written = report.write_benchmark_report(result, args.out, figures=not args.no_figures)
    print(
        f"method={result.method} n={result.n_examples} accuracy={result.accuracy:.4f} "
        f"avg_calls={result.avg_calls:.2f} avg_total_tokens={result.avg_total_tokens:.1f}"
    )
    for path in written:
        print(f"wrote {path}")
    return 0


def cmd_gold_run(args) -> int:
    args.method = "gold"
    return cmd_run(args)


def cmd_metrics(args) -> int:
    trace_dir = Path(args.traces)
    traces = []
    for path in sorted(trace_dir.glob("*.trace.json")):
        traces.append(json.loads(path.read_text(encoding="utf-8")))
    if not traces:
        raise CopError(f"no *.trace.json files under {trace_dir}")
    dataset = datasets.load_dataset(args.dataset)
    metrics = bench.perception_metrics(traces, dataset)
    written = report.write_perception_report(metrics, args.out, figures=not args.no_figures)
    removal = metrics.get("removal_rate")
    mean_tau = metrics.get("mean_tau")
    print(
        f"removal_rate={removal if removal is not None else 'n/a'} "
        f"mean_tau={mean_tau if mean_tau is not None else 'n/a'} "
        f"dropped_relevant={metrics['dropped_relevant']}"
    )
    for path in written:
        print(f"wrote {path}")
    return 0


def cmd_flow(args) -> int:
    records = flow.load_records(args.records)
    metrics = flow.compute_flow_metrics(records, layer_set=args.layer_set)
    payload: dict = {"metrics": metrics.to_dict()}

    groups: dict[str, list] = {}
    for record in records:
        if record.group:
            groups.setdefault(record.group, []).append(record)
    group_stats: dict[str, dict] = {}
    if groups and all(len(v) >= 2 for v in groups.values()):
        for name in flow.METRIC_NAMES:
            values = {
                group: [
                    vals[name]
                    for vals in (flow.record_metric_values(r, args.layer_set) for r in members)
                    if name in vals
                ]
                for group, members in groups.items()
            }
            values = {g: v for g, v in values.items() if len(v) >= 2}
            if values:
                group_stats[name] = {
                    g: s.to_dict() for g, s in flow.summarize_groups(values).items()
                }
        payload["groups"] = group_stats
    written = report.write_flow_report(payload, args.out, figures=not args.no_figures)
    print(json.dumps(metrics.to_dict()))
    for path in written:
        print(f"wrote {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cop", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build-digsm", help="construct the disordered/irrelevant math dataset")
    p.add_argument("--gsm8k", required=True, help="GSM8K-format JSONL (question/answer records)")
    p.add_argument("--pool", default=None, help="distractor sentences, one per line (default: derive)")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_build_digsm)

    p = sub.add_parser("gen-logic", help="generate synthetic logic instances with gold proofs")
    p.add_argument("--depth", default="0-5", help="rule-chain depth, e.g. 5 or 0-5")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--distractors", type=int, default=10)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_logic)

    def add_run_flags(p):
        p.add_argument("--dataset", required=True)
        p.add_argument("--backend", choices=("openai_compatible", "oracle", "stub"), default="oracle")
        p.add_argument("--model", default="gpt-3.5-turbo")
        p.add_argument("--base-url", default=None)
        p.add_argument("--max-depth", type=int, default=6)
        p.add_argument("--match-threshold", type=float, default=0.6)
        p.add_argument("--family", default=None, choices=("digsm", "folio", "proofwriter"))
        p.add_argument("--concurrency", type=int, default=1)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--trace-dir", default=None)
        p.add_argument("--prompts", default=None, help="prompt-set directory override")
        p.add_argument("--stub-reply", default="The correct option is: C")
        p.add_argument("--no-figures", action="store_true")
        p.add_argument("--out", required=True)

    p = sub.add_parser("run", help="run a benchmark method over a dataset")
    p.add_argument("--method", choices=("standard", "cot", "cop"), required=True)
    add_run_flags(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("gold-run", help="CoT over gold-proof reconstructions (confirmatory mode)")
    add_run_flags(p)
    p.set_defaults(func=cmd_gold_run)

    p = sub.add_parser("metrics", help="perception metrics over saved traces")
    p.add_argument("--traces", required=True, help="directory of *.trace.json files")
    p.add_argument("--dataset", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--no-figures", action="store_true")
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("flow", help="information-flow metrics over saliency records")
    p.add_argument("--records", required=True)
    p.add_argument("--layer-set", default="shallow")
    p.add_argument("--out", required=True)
    p.add_argument("--no-figures", action="store_true")
    p.set_defaults(func=cmd_flow)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CopError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
