from __future__ import annotations

import dataclasses

import numpy as np
import pytest

from toyworlds import datapipe
from toyworlds.datapipe import (
    AnnotationError,
    AnnotationSegment,
    DatasetManifest,
    FilterRules,
    ManifestEntry,
    ManifestError,
    MixtureSampler,
    cluster_instructions,
    embed_text,
    filter_trajectory,
    goal_success_tick,
    heldout_split,
    make_examples,
    parse_annotation_upload,
    scripted_expert,
    split_key,
)
from toyworlds.netproto import InstructionSegment, trajectory_id
from toyworlds.worldcore import ActionEvent


def find_task(task_id, registry):
    return next(t for t in registry if t.task_id == task_id)


class TestScriptedExpert:
    def test_collect_wood_emits_text_event(self, registry):
        task = find_task("harvest:grove_a:collect-wood", registry)
        traj = scripted_expert(task, 0)
        assert any(text.startswith("Wood +") for _, text in traj.text_events)

    def test_turn_left_uses_negative_mouse_x(self, registry):
        task = find_task("playroom:room_a:turnleft", registry)
        traj = scripted_expert(task, 0)
        assert len(traj.actions) <= 10
        assert any(a.mouse_dx < 0 for a in traj.actions)

    def test_segment_source_is_scripted(self, registry):
        task = find_task("buildlab:hall_a:take-red-block", registry)
        traj = scripted_expert(task, 1)
        assert traj.instruction_segments[0].source == "scripted"
        assert traj.instruction_segments[0].text == task.instruction


class TestFilter:
    def _expert_traj(self, registry):
        return scripted_expert(find_task("harvest:grove_a:collect-wood", registry), 0)

    def test_fully_active_trajectory_unchanged(self, registry):
        traj = self._expert_traj(registry)
        kept, report = filter_trajectory(traj)
        assert len(kept) == 1
        assert (kept[0].t0, kept[0].t1) == (traj.instruction_segments[0].t0,
                                            traj.instruction_segments[0].t1)
        assert report.rejected_trajectories == 0

    def test_idle_gap_cut_but_flanks_kept(self, registry):
        traj = self._expert_traj(registry)
        active = len(traj.actions)
        # splice a 50-tick idle window into the middle of the recording
        idle_at = active // 2
        last_frame = traj.observations[idle_at - 1]
        idle_obs = [dataclasses.replace(last_frame, tick=0) for _ in range(50)]
        idle_actions = [ActionEvent.noop(0) for _ in range(50)]
        traj.observations[idle_at:idle_at] = idle_obs
        traj.actions[idle_at:idle_at] = idle_actions
        traj.instruction_segments[0].t1 = len(traj.actions)
        idle = datapipe.idle_ticks(traj)
        assert sum(idle) >= 50
        kept = datapipe.filters._filter_segments(
            traj.instruction_segments, idle, FilterRules(),
            datapipe.FilterReport())
        assert len(kept) == 2
        spans = [(s.t0, s.t1) for s in kept]
        assert spans[0][1] <= idle_at
        assert spans[1][0] >= idle_at + 50

    def test_short_instruction_dropped_and_counted(self, registry):
        traj = self._expert_traj(registry)
        traj.instruction_segments.append(
            InstructionSegment(t0=0, t1=5, text="go", source="posthoc"))
        kept, report = filter_trajectory(traj)
        assert report.dropped_short_instruction == 1
        assert all(len(seg.text.split()) >= 2 for seg in kept)

    def test_overlong_segment_truncated(self, registry):
        traj = self._expert_traj(registry)
        traj.instruction_segments[0] = InstructionSegment(
            t0=0, t1=500, text="collect wood", source="scripted")
        kept, report = filter_trajectory(traj)
        assert report.truncated >= 1
        assert all(seg.t1 - seg.t0 <= 100 for seg in kept)

    def test_filter_is_idempotent(self, registry):
        traj = self._expert_traj(registry)
        kept, _ = filter_trajectory(traj)
        idle = datapipe.idle_ticks(traj)
        again = datapipe.filters._filter_segments(kept, idle, FilterRules(),
                                                  datapipe.FilterReport())
        assert [(s.t0, s.t1, s.text) for s in again] == \
               [(s.t0, s.t1, s.text) for s in kept]

    def test_tampered_trajectory_rejected_whole(self, registry):
        traj = self._expert_traj(registry)
        victim = next(i for i, a in enumerate(traj.actions) if not a.is_noop())
        traj.actions[victim] = ActionEvent.noop(traj.actions[victim].tick)
        kept, report = filter_trajectory(traj)
        assert kept == []
        assert report.rejected_trajectories == 1
        assert report.reject_reasons


class TestMixture:
    def _manifest(self):
        return DatasetManifest(entries=[
            ManifestEntry("w1", "c1", "", 2.0),
            ManifestEntry("w2", "c2", "", 1.0),
            ManifestEntry("w3", "c3", "", 1.0),
        ])

    def test_weights_normalize(self):
        assert self._manifest().normalized_weights() == [0.5, 0.25, 0.25]

    def test_empirical_frequencies_match_weights(self):
        manifest = self._manifest()
        collections = {"c1": ["a"], "c2": ["b"], "c3": ["c"]}
        sampler = MixtureSampler(manifest, collections, seed=7)
        counts = {"c1": 0, "c2": 0, "c3": 0}
        n = 100_000
        for _ in range(n):
            cid, _ = sampler.sample()
            counts[cid] += 1
        assert abs(counts["c1"] / n - 0.5) <= 0.01
        assert abs(counts["c2"] / n - 0.25) <= 0.01
        assert abs(counts["c3"] / n - 0.25) <= 0.01

    def test_single_collection_gets_all_draws(self):
        manifest = DatasetManifest(entries=[ManifestEntry("w", "only", "", 3.0)])
        sampler = MixtureSampler(manifest, {"only": [1, 2, 3]}, seed=1)
        assert all(sampler.sample()[0] == "only" for _ in range(100))

    def test_empty_collection_with_weight_is_error(self):
        manifest = self._manifest()
        with pytest.raises(ManifestError):
            MixtureSampler(manifest, {"c1": [], "c2": ["b"], "c3": ["c"]}, seed=0)

    def test_sampling_is_reproducible(self):
        manifest = self._manifest()
        collections = {"c1": list(range(5)), "c2": list(range(5)),
                       "c3": list(range(5))}
        a = MixtureSampler(manifest, collections, seed=9)
        b = MixtureSampler(manifest, collections, seed=9)
        assert [a.sample() for _ in range(200)] == [b.sample() for _ in range(200)]

    def test_heldout_split_deterministic(self):
        items = [f"seg{i}" for i in range(400)]
        keys = [split_key("traj", i) for i in range(400)]
        train1, held1 = heldout_split(items, keys, 0.1)
        train2, held2 = heldout_split(items, keys, 0.1)
        assert (train1, held1) == (train2, held2)
        assert 0.02 < len(held1) / len(items) < 0.25


class TestMakeExamples:
    def _segment(self, traj, t0, t1, instruction="collect wood"):
        return AnnotationSegment(trajectory_id(traj), "", t0, t1, instruction,
                                 "scripted")

    def test_twenty_ticks_tile_into_three_chunks(self, registry):
        task = find_task("harvest:grove_a:craft-plank", registry)
        traj = scripted_expert(task, 1)
        assert len(traj.actions) >= 20
        seg = self._segment(traj, 0, 20)
        examples = make_examples(traj, seg, memory_window=4)
        assert len(examples) == 3
        assert [sum(e.pad_mask) for e in examples] == [8, 8, 4]
        # every non-padded tick is covered exactly once
        covered = [e.t0 + i for e in examples
                   for i in range(8) if e.pad_mask[i]]
        assert covered == list(range(0, 20))

    def test_padding_is_noop_and_masked(self, registry):
        task = find_task("harvest:grove_a:collect-wood", registry)
        traj = scripted_expert(task, 0)
        seg = self._segment(traj, 0, len(traj.actions))
        examples = make_examples(traj, seg, memory_window=4)
        tail = examples[-1]
        for i in range(8):
            if not tail.pad_mask[i]:
                assert tail.target[i].is_noop()

    def test_goal_labels_flip_at_success_tick(self, registry):
        task = find_task("harvest:grove_a:collect-wood", registry)
        traj = scripted_expert(task, 2)
        tick = goal_success_tick(traj, task)
        assert tick == len(traj.actions)  # the expert stops on success
        seg = self._segment(traj, 0, len(traj.actions))
        examples = make_examples(traj, seg, memory_window=4, success_tick=tick)
        flat = [(e.t0 + i, label) for e in examples
                for i, label in enumerate(e.goal_labels) if e.pad_mask[i]]
        for t, label in flat:
            assert label == (t + 1 >= tick)
        labels_only = [label for _, label in flat]
        assert labels_only == sorted(labels_only)  # monotone within the episode

    def test_sub_tick_segment_skipped(self, registry):
        task = find_task("harvest:grove_a:collect-wood", registry)
        traj = scripted_expert(task, 0)
        with pytest.raises(AnnotationError):
            AnnotationSegment(trajectory_id(traj), "", 5, 5, "collect wood",
                              "scripted").validate()
        seg = AnnotationSegment(trajectory_id(traj), "", 5, 5, "collect wood",
                                "scripted")
        assert make_examples(traj, seg) == []

    def test_offset_shifts_targets(self, registry):
        task = find_task("harvest:grove_a:craft-plank", registry)
        traj = scripted_expert(task, 1)
        seg = self._segment(traj, 0, 16)
        shifted = make_examples(traj, seg, memory_window=2, offset=2)
        assert shifted[0].target[0] == traj.actions[2]


class TestAnnotations:
    def test_upload_roundtrip(self, registry):
        task = find_task("playroom:room_a:goto-table", registry)
        traj = scripted_expert(task, 0)
        tid = trajectory_id(traj)
        lines = "\n".join([
            f'{{"trajectory_id": "{tid}", "t0": 0, "t1": 4, '
            f'"instruction": "walk to the table", "annotator_id": "a1"}}',
        ])
        segments = parse_annotation_upload(lines)
        assert segments[0].source == "posthoc"

    def test_overlapping_same_annotator_rejected(self):
        lines = "\n".join([
            '{"trajectory_id": "t", "t0": 0, "t1": 10, "instruction": "go north", "annotator_id": "a"}',
            '{"trajectory_id": "t", "t0": 5, "t1": 15, "instruction": "go south", "annotator_id": "a"}',
        ])
        with pytest.raises(AnnotationError):
            parse_annotation_upload(lines)

    def test_over_budget_segment_rejected(self):
        line = ('{"trajectory_id": "t", "t0": 0, "t1": 150, '
                '"instruction": "do the thing", "annotator_id": "a"}')
        with pytest.raises(AnnotationError):
            parse_annotation_upload(line)

    def test_segment_shard_roundtrip(self, tmp_path, registry):
        task = find_task("playroom:room_a:goto-table", registry)
        traj = scripted_expert(task, 0)
        segs = [AnnotationSegment(trajectory_id(traj), "p", 0, 4, "go to the table",
                                  "scripted")]
        path = tmp_path / "segments.mwsg"
        datapipe.write_segment_shard(segs, path)
        assert datapipe.read_segment_shard(path) == segs


class TestClustering:
    def test_goto_instructions_merge_first(self):
        items = ["go to the tree", "go to the house", "chop the carrot"]
        vectors = np.stack([embed_text(t) for t in items])
        dist = 1 - vectors @ vectors.T
        assert dist[0, 1] < dist[0, 2] and dist[0, 1] < dist[1, 2]
        hierarchy = cluster_instructions(items)
        first = hierarchy.merges[0]
        assert {first[0], first[1]} == {0, 1}

    def test_identical_strings_merge_at_height_zero(self):
        hierarchy = cluster_instructions(["jump up", "jump up", "look down"])
        assert hierarchy.merges[0][2] == pytest.approx(0.0, abs=1e-12)

    def test_single_root_contains_everything(self):
        items = [f"task number {i}" for i in range(9)]
        hierarchy = cluster_instructions(items)
        assert len(hierarchy.merges) == len(items) - 1
        assert hierarchy.merges[-1][3] == len(items)
        groups = hierarchy.cut(1)
        assert sorted(groups[0]) == list(range(len(items)))

    def test_wheel_artifact_written(self, tmp_path):
        hierarchy = cluster_instructions(
            ["go to the tree", "go to the rock", "collect wood", "collect stone",
             "turn left", "turn right"])
        svg = tmp_path / "wheel.svg"
        datapipe.write_cluster_wheel(hierarchy, svg, k=3)
        datapipe.write_cluster_report(hierarchy, tmp_path / "report.json", k=3)
        assert svg.read_text().startswith("<svg")


class TestCollectPipeline:
    def test_collect_outputs(self, collected):
        assert collected.segment_counts["playroom"] > 0
        assert collected.example_counts["playroom"] > 0
        assert collected.manifest_path.exists()
        assert collected.filter_report.rejected_trajectories == 0

    def test_shards_reload(self, collected):
        manifest = datapipe.load_manifest(collected.manifest_path)
        examples = datapipe.read_example_shard(manifest.entries[0].path)
        assert examples
        assert all(len(ex.target) == 8 for ex in examples)

    def test_rerun_same_seed_identical_shard_hashes(self, registry, tmp_path):
        import hashlib

        from toyworlds import pipeline

        tasks = [t for t in registry
                 if t.save_state_ref == "harvest/grove_a"][:6]

        def collect(where):
            result = pipeline.collect_dataset(
                where, world_list=["harvest"], seeds=(0,), memory_window=2,
                example_stride=4, tasks=tasks)
            manifest = datapipe.load_manifest(result.manifest_path)
            return {e.collection_id:
                    hashlib.sha256(open(e.path, "rb").read()).hexdigest()
                    for e in manifest.entries}

        assert collect(tmp_path / "a") == collect(tmp_path / "b")

    def test_training_metrics_steps_monotone(self, collected, tmp_path):
        import json as json_mod

        from toyworlds import pipeline
        from toyworlds.agent import AgentConfig

        cfg = AgentConfig(embed_dim=32, cell_dim=4, conv_channels=8,
                          memory_window=3, attn_heads=2, head_hidden=32,
                          vocab_size=128, learning_rate=0.03)
        spec = pipeline.TrainSpec(name="probe", steps=12, batch_size=8,
                                  agent=cfg, fast_eval_tasks=2,
                                  fast_eval_every=6)
        metrics = tmp_path / "metrics.jsonl"
        pipeline.train_from_manifest(collected.manifest_path, spec,
                                     tmp_path / "probe.mwck",
                                     metrics_path=metrics)
        steps = [json_mod.loads(line)["step"]
                 for line in metrics.read_text().splitlines()
                 if "step" in json_mod.loads(line)]
        assert steps == sorted(steps) and len(set(steps)) == len(steps)
        rates = [json_mod.loads(line)["fast_eval_rate"]
                 for line in metrics.read_text().splitlines()
                 if "fast_eval_rate" in json_mod.loads(line)]
        assert len(rates) == 2
