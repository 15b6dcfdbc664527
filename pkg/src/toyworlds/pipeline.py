"""End-to-end orchestration: collect demonstrations, train agents.

These are the functions behind the CLI subcommands and the service's job
endpoints; they only compose the per-module machinery.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from pathlib import Path

from . import datapipe, worlds
from .agent.config import AgentConfig
from .agent.checkpoint import save_checkpoint
from .agent.train import train
from .datapipe.annotations import AnnotationSegment
from .datapipe.dataset import DatasetManifest, ManifestEntry, MixtureSampler
from .datapipe.filters import FilterReport, FilterRules
from .netproto.trajio import trajectory_id, write_trajectory
from .worldcore.registry import world_ids
from .worldcore.types import TaskSpec


@dataclass
class CollectResult:
    manifest_path: Path
    trajectory_paths: list[Path]
    segment_counts: dict[str, int]
    example_counts: dict[str, int]
    filter_report: FilterReport


def collect_dataset(
    out_dir: str | Path,
    *,
    world_list: list[str] | None = None,
    seeds: tuple[int, ...] = (0, 1, 2, 3, 4),
    rules: FilterRules = FilterRules(),
    memory_window: int = 16,
    example_stride: int | None = None,
    weights: dict[str, float] | None = None,
    tasks: list[TaskSpec] | None = None,
) -> CollectResult:
    """Run scripted experts over the registry, filter, shard, manifest."""
    out = Path(out_dir)
    (out / "trajectories").mkdir(parents=True, exist_ok=True)
    (out / "segments").mkdir(exist_ok=True)
    (out / "examples").mkdir(exist_ok=True)

    if not seeds:
        raise ValueError("collection needs at least one seed")
    if world_list is None:
        world_list = world_ids()
    if tasks is None:
        tasks = worlds.registry_list()
    tasks = [t for t in tasks if t.world_id in world_list]
    if not tasks:
        raise ValueError("no tasks selected for collection")

    report = FilterReport()
    trajectory_paths: list[Path] = []
    segment_counts: dict[str, int] = {}
    example_counts: dict[str, int] = {}
    entries: list[ManifestEntry] = []
    instructions: list[str] = []

    for world_id in world_list:
        world_tasks = [t for t in tasks if t.world_id == world_id]
        annotated: list[AnnotationSegment] = []
        examples: list[datapipe.TrainingExample] = []
        for task in world_tasks:
            for seed in seeds:
                traj = datapipe.scripted_expert(task, seed)
                tid = trajectory_id(traj)
                tpath = out / "trajectories" / (
                    f"{task.task_id.replace(':', '_')}-{seed}-{tid}.mwtj")
                write_trajectory(traj, tpath)
                trajectory_paths.append(tpath)
                kept, rep = datapipe.filter_trajectory(traj, rules)
                report.merge(rep)
                success_tick = datapipe.goal_success_tick(traj, task)
                for seg in kept:
                    ann = AnnotationSegment(
                        trajectory_id=tid, trajectory_path=str(tpath),
                        t0=seg.t0, t1=seg.t1, instruction=seg.text,
                        source=seg.source)
                    annotated.append(ann)
                    examples.extend(datapipe.make_examples(
                        traj, ann, memory_window=memory_window,
                        collection_id=world_id,
                        segment_id=f"{tid}:{seg.t0}:{seg.t1}",
                        success_tick=success_tick, stride=example_stride))
                    instructions.append(seg.text)
        seg_path = out / "segments" / f"{world_id}.mwsg"
        datapipe.write_segment_shard(annotated, seg_path)
        ex_path = out / "examples" / f"{world_id}.mwex"
        datapipe.write_example_shard(examples, ex_path)
        segment_counts[world_id] = len(annotated)
        example_counts[world_id] = len(examples)
        entries.append(ManifestEntry(
            world_id=world_id, collection_id=world_id,
            path=str(ex_path), weight=(weights or {}).get(world_id, 1.0)))

    manifest = DatasetManifest(entries=entries)
    manifest_path = out / "manifest.json"
    datapipe.save_manifest(manifest, manifest_path)
    (out / "filter_report.json").write_text(
        json.dumps(report.as_dict(), indent=2, sort_keys=True) + "\n")

    unique = sorted(set(instructions))
    if len(unique) >= 2:
        hierarchy = datapipe.cluster_instructions(unique)
        datapipe.write_cluster_report(hierarchy, out / "instruction_clusters.json")
        datapipe.write_cluster_wheel(hierarchy, out / "instruction_clusters.svg")

    return CollectResult(
        manifest_path=manifest_path, trajectory_paths=trajectory_paths,
        segment_counts=segment_counts, example_counts=example_counts,
        filter_report=report)


# -- training -----------------------------------------------------------------


def load_collections(manifest: DatasetManifest) -> dict[str, list[list]]:
    """collection id -> list of segments, each a list of TrainingExamples."""
    collections: dict[str, list[list]] = {}
    for entry in manifest.entries:
        examples = datapipe.read_example_shard(entry.path)
        by_segment: dict[str, list] = {}
        for ex in examples:
            by_segment.setdefault(ex.segment_id, []).append(ex)
        collections[entry.collection_id] = [by_segment[k] for k in sorted(by_segment)]
    return collections


class ExampleSampler:
    """Collection by weight, segment uniform within it, then one example
    uniform within the segment."""

    def __init__(self, manifest: DatasetManifest, collections: dict[str, list[list]],
                 seed: int):
        self.mixture = MixtureSampler(manifest, collections, seed)

    def batch(self, n: int) -> list:
        rng = self.mixture.rng
        out = []
        for _ in range(n):
            _, segment = self.mixture.sample()
            out.append(segment[rng.randrange(len(segment))])
        return out


@dataclass
class TrainSpec:
    name: str
    worlds: list[str] = field(default_factory=list)  # empty = all collections
    no_language: bool = False
    seed: int = 0
    steps: int = 2000
    batch_size: int = 32
    agent: AgentConfig = field(default_factory=AgentConfig)
    fast_eval_tasks: int = 0   # >0 enables the quick online signal
    fast_eval_every: int = 1000


def train_from_manifest(
    manifest_path: str | Path,
    spec: TrainSpec,
    out_path: str | Path,
    *,
    metrics_path: str | Path | None = None,
) -> Path:
    """Train one condition from collected shards and write its checkpoint."""
    manifest = datapipe.load_manifest(manifest_path)
    if spec.worlds:
        manifest = DatasetManifest(
            entries=[e for e in manifest.entries if e.world_id in spec.worlds],
            preprocessing_version=manifest.preprocessing_version)
        manifest.validate()
    collections = load_collections(manifest)
    cfg = AgentConfig(**{**json.loads(spec.agent.to_json()), "seed": spec.seed})
    sampler = ExampleSampler(manifest, collections, seed=cfg.seed)

    metrics_file = open(metrics_path, "w") if metrics_path else None
    started = time.time()

    def on_metrics(m):
        if metrics_file:
            metrics_file.write(json.dumps(
                {"step": m.step, "loss": round(m.loss, 6),
                 "grad_norm": round(m.grad_norm, 6), "rejected": m.rejected},
                sort_keys=True) + "\n")

    fast_eval = None
    if spec.fast_eval_tasks > 0:
        # quick online signal: a few scored episodes on a fixed task subset
        from .evalharness.episodes import policy_agent_ref, run_episode

        probe_tasks = [t for t in worlds.registry_list()
                       if not spec.worlds or t.world_id in spec.worlds]
        probe_tasks = probe_tasks[:: max(1, len(probe_tasks) // spec.fast_eval_tasks)]
        probe_tasks = probe_tasks[: spec.fast_eval_tasks]

        def fast_eval(net) -> float:
            ref = policy_agent_ref(net, cfg_scale=cfg.cfg_scale,
                                   no_language=spec.no_language)
            wins = sum(run_episode(ref, t, 19).status == "success"
                       for t in probe_tasks)
            rate = wins / len(probe_tasks)
            if metrics_file:
                metrics_file.write(json.dumps(
                    {"fast_eval_rate": rate, "tasks": len(probe_tasks)}) + "\n")
            return rate

    result = train(cfg, lambda rng, n: sampler.batch(n), steps=spec.steps,
                   batch_size=spec.batch_size, no_language=spec.no_language,
                   fast_eval=fast_eval, fast_eval_every=spec.fast_eval_every,
                   on_metrics=on_metrics)
    if metrics_file:
        metrics_file.close()

    out_path = Path(out_path)
    save_checkpoint(result.net, out_path, extra={
        "name": spec.name,
        "worlds": spec.worlds or [e.world_id for e in manifest.entries],
        "no_language": spec.no_language,
        "train_seed": spec.seed,
        "steps": spec.steps,
        "batch_size": spec.batch_size,
        "manifest": str(manifest_path),
        "wall_seconds": round(time.time() - started, 1),
        "final_loss": round(result.metrics[-1].loss, 4) if result.metrics else None,
        "rejected_steps": result.rejected_steps,
    })
    return out_path
