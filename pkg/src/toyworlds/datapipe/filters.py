"""Trajectory filtering heuristics.

Rules, applied per instruction segment:
  (a) idle spans of >= `idle_gap_ticks` consecutive ticks with a trivial
      action and an unchanged frame are cut out (the segment splits);
  (b) segments whose instruction has fewer than `min_instruction_tokens`
      tokens are dropped;
  (c) segments longer than `max_segment_ticks` are truncated.
A tick with a non-trivial action is never removed. Non-replayable
trajectories are rejected wholesale. Filtering is idempotent.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..netproto.engine import InstructionSegment, Trajectory
from ..netproto.trajio import ReplayDivergence, replay


@dataclass(frozen=True)
class FilterRules:
    idle_gap_ticks: int = 30
    min_instruction_tokens: int = 2
    max_segment_ticks: int = 100


@dataclass
class FilterReport:
    segments_in: int = 0
    segments_kept: int = 0
    dropped_short_instruction: int = 0
    idle_spans_removed: int = 0
    truncated: int = 0
    rejected_trajectories: int = 0
    reject_reasons: list[str] = field(default_factory=list)

    def merge(self, other: "FilterReport") -> None:
        self.segments_in += other.segments_in
        self.segments_kept += other.segments_kept
        self.dropped_short_instruction += other.dropped_short_instruction
        self.idle_spans_removed += other.idle_spans_removed
        self.truncated += other.truncated
        self.rejected_trajectories += other.rejected_trajectories
        self.reject_reasons.extend(other.reject_reasons)

    def as_dict(self) -> dict:
        return {
            "segments_in": self.segments_in,
            "segments_kept": self.segments_kept,
            "dropped_short_instruction": self.dropped_short_instruction,
            "idle_spans_removed": self.idle_spans_removed,
            "truncated": self.truncated,
            "rejected_trajectories": self.rejected_trajectories,
            "reject_reasons": self.reject_reasons,
        }


def idle_ticks(traj: Trajectory) -> list[bool]:
    """idle[t] = the action at tick t did nothing and the frame held still."""
    hashes = [obs.frame.hash() for obs in traj.observations]
    flags = []
    for t, action in enumerate(traj.actions):
        trivial = action.is_noop()
        unchanged = t > 0 and hashes[t] == hashes[t - 1]
        flags.append(trivial and unchanged)
    return flags


def filter_trajectory(
    traj: Trajectory, rules: FilterRules = FilterRules()
) -> tuple[list[InstructionSegment], FilterReport]:
    report = FilterReport()
    try:
        replay(traj)
    except ReplayDivergence as e:
        report.rejected_trajectories = 1
        report.reject_reasons.append(f"replay divergence at tick {e.first_divergent_tick}")
        return [], report
    segments = list(traj.instruction_segments)
    report.segments_in = len(segments)
    idle = idle_ticks(traj)
    kept = _filter_segments(segments, idle, rules, report)
    report.segments_kept = len(kept)
    return kept, report


def _filter_segments(segments: list[InstructionSegment], idle: list[bool],
                     rules: FilterRules, report: FilterReport) -> list[InstructionSegment]:
    kept: list[InstructionSegment] = []
    for seg in segments:
        if len(seg.text.split()) < rules.min_instruction_tokens:
            report.dropped_short_instruction += 1
            continue
        for t0, t1 in _cut_idle_spans(seg.t0, seg.t1, idle, rules.idle_gap_ticks, report):
            if t1 - t0 > rules.max_segment_ticks:
                t1 = t0 + rules.max_segment_ticks
                report.truncated += 1
            if t1 > t0:
                kept.append(InstructionSegment(t0=t0, t1=t1, text=seg.text,
                                               source=seg.source))
    return kept


def _cut_idle_spans(t0: int, t1: int, idle: list[bool], gap: int,
                    report: FilterReport) -> list[tuple[int, int]]:
    spans: list[tuple[int, int]] = []
    run_start = None
    removed: list[tuple[int, int]] = []
    for t in range(t0, min(t1, len(idle))):
        if idle[t]:
            if run_start is None:
                run_start = t
        else:
            if run_start is not None and t - run_start >= gap:
                removed.append((run_start, t))
            run_start = None
    if run_start is not None and min(t1, len(idle)) - run_start >= gap:
        removed.append((run_start, min(t1, len(idle))))
    report.idle_spans_removed += len(removed)

    cursor = t0
    for a, b in removed:
        if a > cursor:
            spans.append((cursor, a))
        cursor = b
    if cursor < t1:
        spans.append((cursor, t1))
    return spans
