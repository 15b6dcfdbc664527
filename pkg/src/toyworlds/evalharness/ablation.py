"""The ablation suite: evaluate agent variants over the task registry and
aggregate every statistic into one reproducible report.

Condition families:
  multiworld       trained on every world (one checkpoint per training seed)
  specialist       trained on a single world, evaluated there
  no_language      instruction withheld at training and evaluation
  zero_shot        trained on all worlds but one, evaluated on the held-out
  multiworld_cfg0  the multiworld checkpoints run without guidance
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from ..agent.checkpoint import load_checkpoint
from ..worldcore.types import STATUS_SUCCESS, TaskSpec
from .episodes import policy_agent_ref, run_episode
from .stats import normalize_vs_specialist, permutation_test, rate_bounds, success_rate

REPORT_VERSION = 1


@dataclass(frozen=True)
class Condition:
    family: str
    name: str                      # unique, e.g. "multiworld-s1"
    checkpoint: str
    cfg_scale: float = 1.0
    no_language: bool = False
    eval_worlds: tuple[str, ...] = ()
    train_seed: int = 0


@dataclass
class AblationConfig:
    conditions: list[Condition]
    tasks: list[TaskSpec]
    episode_seeds: tuple[int, ...] = (20,)
    workers: int = 1
    record_dir: str | None = None


@dataclass
class EvalReport:
    version: int
    conditions: list[dict]
    skipped: list[dict]
    per_task: list[dict]
    per_environment: dict
    per_skill: dict
    relative: dict
    p_values: dict
    episode_seeds: list[int]

    def to_json(self) -> str:
        return json.dumps({
            "version": self.version,
            "conditions": self.conditions,
            "skipped": self.skipped,
            "per_task": self.per_task,
            "per_environment": self.per_environment,
            "per_skill": self.per_skill,
            "relative": self.relative,
            "p_values": self.p_values,
            "episode_seeds": self.episode_seeds,
        }, indent=2, sort_keys=True) + "\n"

    @staticmethod
    def from_json(text: str) -> "EvalReport":
        doc = json.loads(text)
        return EvalReport(
            version=doc["version"], conditions=doc["conditions"],
            skipped=doc["skipped"], per_task=doc["per_task"],
            per_environment=doc["per_environment"], per_skill=doc["per_skill"],
            relative=doc["relative"], p_values=doc["p_values"],
            episode_seeds=doc["episode_seeds"])


def render_summary(report: EvalReport) -> str:
    """Human-readable digest of a report."""
    lines = ["evaluation summary", "==================", ""]
    lines.append(f"episode seeds: {report.episode_seeds}")
    lines.append(f"conditions: {[c['name'] for c in report.conditions]}")
    if report.skipped:
        lines.append(f"skipped: {report.skipped}")
    lines.append("")
    lines.append("success rate by environment (95% CI half-width, n):")
    for family, by_world in sorted(report.per_environment.items()):
        parts = [f"{w} {v['rate']:.3f} (+/-{v['ci95']:.3f}, n={v['n']})"
                 for w, v in sorted(by_world.items())]
        lines.append(f"  {family:16} " + "; ".join(parts))
    lines.append("")
    lines.append("success rate by skill category:")
    skills = sorted({s for by in report.per_skill.values() for s in by})
    for family, by_skill in sorted(report.per_skill.items()):
        parts = [f"{s} {by_skill[s]['rate']:.2f}" for s in skills if s in by_skill]
        lines.append(f"  {family:16} " + "; ".join(parts))
    if report.relative:
        lines.append("")
        lines.append("relative to the environment specialist (100% = specialist):")
        for family, doc in sorted(report.relative.items()):
            agg = doc.get("aggregate")
            agg_text = f"{agg:.1f}%" if agg is not None else "n/a"
            lines.append(f"  {family:16} aggregate {agg_text}  "
                         f"{doc.get('per_world', {})}")
    if report.p_values:
        lines.append("")
        lines.append("permutation p-values (per-task mean difference):")
        for pair, by_world in sorted(report.p_values.items()):
            lines.append(f"  {pair}: {by_world}")
    return "\n".join(lines) + "\n"


def run_ablation_suite(config: AblationConfig) -> EvalReport:
    per_task_rows: list[dict] = []
    condition_meta: list[dict] = []
    skipped: list[dict] = []

    for cond in config.conditions:
        if not Path(cond.checkpoint).exists():
            skipped.append({"name": cond.name, "reason": "missing checkpoint",
                            "checkpoint": cond.checkpoint})
            continue
        net, extra = load_checkpoint(cond.checkpoint)
        condition_meta.append({
            "family": cond.family, "name": cond.name,
            "checkpoint": cond.checkpoint, "cfg_scale": cond.cfg_scale,
            "no_language": cond.no_language, "train_seed": cond.train_seed,
            "trained_on": extra.get("worlds"),
        })
        ref = policy_agent_ref(net, cfg_scale=cond.cfg_scale,
                               no_language=cond.no_language)
        tasks = [t for t in config.tasks
                 if not cond.eval_worlds or t.world_id in cond.eval_worlds]
        jobs = [(task, seed) for task in tasks for seed in config.episode_seeds]

        def one(job):
            task, seed = job
            outcome = run_episode(ref, task, seed, record_dir=config.record_dir)
            return {
                "condition": cond.name, "family": cond.family,
                "task_id": task.task_id, "world_id": task.world_id,
                "skill": task.skill_category, "episode_seed": seed,
                "train_seed": cond.train_seed, "status": outcome.status,
                "ticks_used": outcome.ticks_used,
            }

        if config.workers > 1:
            with ThreadPoolExecutor(max_workers=config.workers) as pool:
                rows = list(pool.map(one, jobs))
        else:
            rows = [one(j) for j in jobs]
        per_task_rows.extend(rows)

    per_task_rows.sort(key=lambda r: (r["family"], r["condition"], r["task_id"],
                                      r["episode_seed"]))
    report = EvalReport(
        version=REPORT_VERSION,
        conditions=condition_meta,
        skipped=skipped,
        per_task=per_task_rows,
        per_environment=_rates_by(per_task_rows, "world_id"),
        per_skill=_rates_by(per_task_rows, "skill"),
        relative={},
        p_values={},
        episode_seeds=list(config.episode_seeds),
    )
    _add_relative_and_pvalues(report)
    return report


def _rates_by(rows: list[dict], key: str) -> dict:
    by: dict[str, dict[str, list[bool]]] = {}
    for row in rows:
        fam = by.setdefault(row["family"], {})
        fam.setdefault(row[key], []).append(row["status"] == STATUS_SUCCESS)
    out: dict = {}
    for family, groups in sorted(by.items()):
        out[family] = {}
        for group, flags in sorted(groups.items()):
            rate, half = success_rate(flags)
            lo, hi = rate_bounds(rate, half)
            out[family][group] = {"rate": round(rate, 6), "ci95": round(half, 6),
                                  "lo": round(lo, 6), "hi": round(hi, 6),
                                  "n": len(flags)}
    return out


def task_scores(rows: list[dict], family: str, world: str) -> dict[str, float]:
    """Per-task mean success for one family in one world (pooled over
    episode seeds and training seeds)."""
    acc: dict[str, list[float]] = {}
    for row in rows:
        if row["family"] == family and row["world_id"] == world:
            acc.setdefault(row["task_id"], []).append(
                1.0 if row["status"] == STATUS_SUCCESS else 0.0)
    return {task: sum(v) / len(v) for task, v in acc.items()}


def _add_relative_and_pvalues(report: EvalReport) -> None:
    envs = report.per_environment
    if "specialist" not in envs:
        return
    specialist_rates = {w: v["rate"] for w, v in envs["specialist"].items()}
    for family, by_world in envs.items():
        if family == "specialist":
            continue
        agent_rates = {w: v["rate"] for w, v in by_world.items()
                       if w in specialist_rates}
        relative, aggregate, excluded = normalize_vs_specialist(
            agent_rates, specialist_rates)
        report.relative[family] = {
            "per_world": {w: round(v, 3) for w, v in relative.items()},
            "aggregate": round(aggregate, 3) if aggregate is not None else None,
            "excluded": excluded,
        }
    report.relative["specialist"] = {
        "per_world": {w: 100.0 for w in specialist_rates},
        "aggregate": 100.0,
        "excluded": [],
    }
    for family in sorted(envs):
        if family == "specialist":
            continue
        pvals = {}
        for world in sorted(specialist_rates):
            scores_a = task_scores(report.per_task, family, world)
            scores_b = task_scores(report.per_task, "specialist", world)
            shared = sorted(set(scores_a) & set(scores_b))
            if not shared:
                continue
            pvals[world] = round(permutation_test(
                [scores_a[t] for t in shared], [scores_b[t] for t in shared],
                seed=0), 6)
        report.p_values[f"{family}_vs_specialist"] = pvals
