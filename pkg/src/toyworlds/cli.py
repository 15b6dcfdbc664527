"""Command-line entry point.

Subcommands are thin wrappers: `serve` runs the HTTP/WebSocket service;
the batch subcommands call the pipeline and harness directly.

Exit codes: 0 ok, 1 configuration error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_help()
        return 1
    try:
        return args.func(args)
    except (FileNotFoundError, ValueError, KeyError) as e:
        print(f"configuration error: {e}", file=sys.stderr)
        return 1
    except KeyboardInterrupt:
        return 2
    except Exception as e:  # noqa: BLE001 - the CLI boundary reports, not raises
        print(f"runtime error: {type(e).__name__}: {e}", file=sys.stderr)
        return 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="toyworlds",
        description="Instructable toy worlds: serve, collect, train, eval, "
                    "replay, report.")
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("serve", help="run the session service")
    p.add_argument("--port", type=int, default=8750)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--worlds", nargs="*", default=None,
                   help="restrict sessions to these worlds")
    p.add_argument("--data-dir", default="data")
    p.add_argument("--checkpoint", default=None,
                   help="agent checkpoint for instructor-driven sessions")
    p.add_argument("--static-dir", default=None,
                   help="built browser client to serve at /")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("collect", help="synthesize demonstrations and shards")
    p.add_argument("--manifest", default=None,
                   help="restrict to worlds listed in an existing manifest")
    p.add_argument("--seeds", type=int, default=10, help="scenario seeds per task")
    p.add_argument("--worlds", nargs="*", default=None)
    p.add_argument("--stride", type=int, default=1, help="chunk tiling stride")
    p.add_argument("--out", default="data")
    p.set_defaults(func=cmd_collect)

    p = sub.add_parser("train", help="train one agent condition")
    p.add_argument("--config", required=True, help="JSON training spec")
    p.add_argument("--out", required=True, help="checkpoint path")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="run the ablation suite")
    p.add_argument("--conditions", required=True,
                   help="JSON file listing evaluation conditions")
    p.add_argument("--seeds", type=int, nargs="*", default=[20],
                   help="episode seeds")
    p.add_argument("--worlds", nargs="*", default=None)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", required=True, help="report directory")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("replay", help="re-execute a recorded trajectory")
    p.add_argument("--trajectory", required=True)
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("report", help="regenerate summary and charts")
    p.add_argument("--in", dest="in_path", required=True,
                   help="report.json from a previous eval")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_report)
    return parser


def cmd_serve(args) -> int:
    import uvicorn

    from .service.app import create_app

    if args.worlds:
        from .worldcore.registry import world_ids
        unknown = set(args.worlds) - set(world_ids())
        if unknown:
            raise ValueError(f"unknown worlds: {sorted(unknown)}")
    app = create_app(args.data_dir, checkpoint_path=args.checkpoint,
                     static_dir=args.static_dir)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def cmd_collect(args) -> int:
    from . import pipeline

    world_list = args.worlds
    if args.manifest:
        from .datapipe import load_manifest
        world_list = sorted({e.world_id for e in load_manifest(args.manifest).entries})
    result = pipeline.collect_dataset(
        args.out, world_list=world_list, seeds=tuple(range(args.seeds)),
        example_stride=args.stride)
    print(f"manifest: {result.manifest_path}")
    print(f"segments: {result.segment_counts}")
    print(f"examples: {result.example_counts}")
    print(f"filter report: {json.dumps(result.filter_report.as_dict())}")
    return 0


def cmd_train(args) -> int:
    from . import pipeline
    from .agent.config import AgentConfig

    doc = json.loads(Path(args.config).read_text())
    agent_cfg = AgentConfig(**doc.get("agent", {}))
    spec = pipeline.TrainSpec(
        name=doc.get("name", "agent"),
        worlds=doc.get("worlds", []),
        no_language=doc.get("no_language", False),
        seed=doc.get("seed", 0),
        steps=doc.get("steps", 2000),
        batch_size=doc.get("batch_size", 32),
        agent=agent_cfg,
        fast_eval_tasks=doc.get("fast_eval_tasks", 0),
        fast_eval_every=doc.get("fast_eval_every", 1000),
    )
    manifest = doc.get("manifest")
    if manifest is None:
        raise ValueError("training spec needs a 'manifest' path")
    out = Path(args.out)
    metrics = out.with_suffix(".metrics.jsonl")
    path = pipeline.train_from_manifest(manifest, spec, out, metrics_path=metrics)
    print(f"checkpoint: {path}")
    print(f"metrics: {metrics}")
    return 0


def cmd_eval(args) -> int:
    from .evalharness.ablation import (AblationConfig, Condition, render_summary,
                                       run_ablation_suite)
    from .evalharness.charts import write_report_charts
    from .worlds.taskfiles import registry_list

    doc = json.loads(Path(args.conditions).read_text())
    conditions = [Condition(
        family=c["family"], name=c["name"], checkpoint=c["checkpoint"],
        cfg_scale=c.get("cfg_scale", 1.0), no_language=c.get("no_language", False),
        eval_worlds=tuple(c.get("eval_worlds", ())),
        train_seed=c.get("train_seed", 0)) for c in doc["conditions"]]
    tasks = registry_list()
    if args.worlds:
        tasks = [t for t in tasks if t.world_id in args.worlds]
    report = run_ablation_suite(AblationConfig(
        conditions=conditions, tasks=tasks, episode_seeds=tuple(args.seeds),
        workers=args.workers))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(report.to_json())
    (out / "summary.txt").write_text(render_summary(report))
    write_report_charts(report, out / "charts")
    print(f"report: {out / 'report.json'}")
    for family, by_world in report.per_environment.items():
        rates = {w: v["rate"] for w, v in by_world.items()}
        print(f"  {family}: {rates}")
    if report.skipped:
        print(f"  skipped: {report.skipped}")
    return 0


def cmd_replay(args) -> int:
    from .netproto.trajio import ReplayDivergence, replay_file

    try:
        hashes = replay_file(args.trajectory)
    except ReplayDivergence as e:
        print(f"replay divergence at tick {e.first_divergent_tick}", file=sys.stderr)
        return 2
    print(f"replayed {len(hashes)} ticks bit-exact")
    print(f"first hash: {hashes[0]:016x}" if hashes else "empty trajectory")
    print(f"last hash:  {hashes[-1]:016x}" if hashes else "")
    return 0


def cmd_report(args) -> int:
    from .evalharness.ablation import EvalReport, render_summary
    from .evalharness.charts import write_report_charts

    report = EvalReport.from_json(Path(args.in_path).read_text())
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(report.to_json())
    (out / "summary.txt").write_text(render_summary(report))
    charts = write_report_charts(report, out / "charts")
    print(f"report: {out / 'report.json'}")
    print(f"charts: {[str(c) for c in charts]}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
