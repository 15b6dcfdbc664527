from __future__ import annotations

import math

import numpy as np
import pytest
import torch

from toyworlds.agent import (
    TINY,
    AgentConfig,
    AgentPolicy,
    PolicyLogits,
    PolicyNet,
    bc_loss,
    cfg_combine,
    decode_chunk,
    flatten_params,
    hash_token,
    load_checkpoint,
    load_flat_params,
    param_hash,
    save_checkpoint,
    softmax,
    train,
)
from toyworlds.agent.loss import action_nll
from toyworlds.agent.train import prepare_batch, train_step
from toyworlds.worldcore import ActionEvent, get_world, instantiate_task


def rand_logits(rng: np.random.Generator) -> PolicyLogits:
    return PolicyLogits(
        keys=rng.normal(size=(8, 16)),
        mouse_dx=rng.normal(size=(8, 7)),
        mouse_dy=rng.normal(size=(8, 7)),
        buttons=rng.normal(size=(8, 2)),
    )


class TestGuidance:
    def test_scale_zero_is_identity(self):
        rng = np.random.default_rng(0)
        cond, uncond = rand_logits(rng), rand_logits(rng)
        out = cfg_combine(cond, uncond, 0.0)
        for name in ("keys", "mouse_dx", "mouse_dy", "buttons"):
            np.testing.assert_array_equal(getattr(out, name), getattr(cond, name))

    def test_equal_inputs_are_fixed_point(self):
        rng = np.random.default_rng(1)
        cond = rand_logits(rng)
        for scale in (0.0, 0.7, 1.0, 5.0):
            out = cfg_combine(cond, cond, scale)
            np.testing.assert_array_equal(out.keys, cond.keys)

    def test_hand_evaluated_case(self):
        cond = PolicyLogits(np.full((8, 16), 1.0), np.full((8, 7), 1.0),
                            np.full((8, 7), 2.0), np.full((8, 2), 1.0))
        uncond = PolicyLogits(np.full((8, 16), 0.0), np.full((8, 7), 0.0),
                              np.full((8, 7), 3.0), np.full((8, 2), 0.0))
        out = cfg_combine(cond, uncond, 1.0)
        assert out.keys[0, 0] == 2.0
        assert out.mouse_dy[0, 0] == 1.0

    def test_linear_in_scale(self):
        rng = np.random.default_rng(2)
        cond, uncond = rand_logits(rng), rand_logits(rng)
        a = cfg_combine(cond, uncond, 1.0)
        b = cfg_combine(cond, uncond, 2.0)
        mid = cfg_combine(cond, uncond, 1.5)
        np.testing.assert_allclose(mid.keys, (a.keys + b.keys) / 2, atol=1e-12)

    def test_shape_mismatch_rejected(self):
        rng = np.random.default_rng(3)
        cond = rand_logits(rng)
        bad = PolicyLogits(np.zeros((8, 15)), np.zeros((8, 7)),
                           np.zeros((8, 7)), np.zeros((8, 2)))
        with pytest.raises(ValueError):
            cfg_combine(cond, bad, 1.0)

    def test_argmax_invariant_under_per_factor_shift(self):
        # adding a constant to a categorical factor's logits changes
        # neither its softmax nor the decoded action
        rng = np.random.default_rng(4)
        for _ in range(200):
            logits = rand_logits(rng)
            shifted = PolicyLogits(
                keys=logits.keys.copy(),
                mouse_dx=logits.mouse_dx + rng.normal(),
                mouse_dy=logits.mouse_dy + rng.normal(),
                buttons=logits.buttons.copy(),
            )
            np.testing.assert_allclose(softmax(logits.mouse_dx),
                                       softmax(shifted.mouse_dx), atol=1e-12)
            assert decode_chunk(logits, 0) == decode_chunk(shifted, 0)


class TestLoss:
    def _uniform_case(self):
        logits = torch.zeros(1, 8, 32, dtype=torch.float64)
        goal_logits = torch.zeros(1, 8, dtype=torch.float64)
        chunk = tuple(ActionEvent.noop(i) for i in range(8))
        pad = torch.ones(1, 8, dtype=torch.bool)
        labels = torch.zeros(1, 8, dtype=torch.float64)
        return logits, goal_logits, chunk, pad, labels

    def test_uniform_logits_closed_form(self):
        logits, goal_logits, chunk, pad, labels = self._uniform_case()
        value = bc_loss(logits, goal_logits, [chunk], pad, labels, aux_goal_weight=0.0)
        per_step = 18 * math.log(2) + 2 * math.log(7)
        assert float(value) == pytest.approx(8 * per_step, rel=1e-12)

    def test_mouse_term_is_two_ln_seven(self):
        # isolate the categorical factors by matching every binary target
        logits = torch.full((1, 8, 32), -40.0, dtype=torch.float64)
        logits[:, :, 16:30] = 0.0  # uniform mouse buckets
        goal_logits = torch.full((1, 8), -40.0, dtype=torch.float64)
        chunk = tuple(ActionEvent.noop(i) for i in range(8))
        pad = torch.ones(1, 8, dtype=torch.bool)
        labels = torch.zeros(1, 8, dtype=torch.float64)
        value = bc_loss(logits, goal_logits, [chunk], pad, labels)
        assert float(value) == pytest.approx(8 * 2 * math.log(7), rel=1e-9)

    def test_saturated_match_is_tiny(self):
        chunk = tuple(ActionEvent(tick=i, keys=frozenset({"W"}), mouse_dx=1,
                                  mouse_dy=-2) for i in range(8))
        logits = torch.full((1, 8, 32), -20.0, dtype=torch.float64)
        logits[:, :, 0] = 20.0           # W
        logits[:, :, 16:23] = -20.0
        logits[:, :, 16 + 4] = 20.0      # dx bucket 1 -> index 4
        logits[:, :, 23:30] = -20.0
        logits[:, :, 23 + 1] = 20.0      # dy bucket -2 -> index 1
        goal_logits = torch.full((1, 8), -20.0, dtype=torch.float64)
        pad = torch.ones(1, 8, dtype=torch.bool)
        labels = torch.zeros(1, 8, dtype=torch.float64)
        value = bc_loss(logits, goal_logits, [chunk], pad, labels)
        assert float(value) < 1e-6

    def test_single_step_ln2_per_categorical_factor(self):
        logits = torch.full((1, 8, 32), -40.0, dtype=torch.float64)
        logits[:, 0, 16] = 0.0
        logits[:, 0, 17] = 0.0       # two-way tie over dx buckets -3/-2
        logits[:, 0, 23 + 3] = 20.0  # dy saturated on the correct bucket
        chunk = [ActionEvent(tick=0, mouse_dx=-3)] + [ActionEvent.noop(i)
                                                      for i in range(1, 8)]
        pad = torch.zeros(1, 8, dtype=torch.bool)
        pad[0, 0] = True
        labels = torch.zeros(1, 8, dtype=torch.float64)
        goal_logits = torch.full((1, 8), -40.0, dtype=torch.float64)
        value = bc_loss(logits, goal_logits, [tuple(chunk)], pad, labels)
        # dy is saturated-correct; dx contributes ln 2 from the tie
        assert float(value) == pytest.approx(math.log(2), abs=1e-6)

    def test_fully_masked_chunk_is_zero(self):
        logits = torch.randn(1, 8, 32, dtype=torch.float64)
        goal_logits = torch.randn(1, 8, dtype=torch.float64)
        chunk = tuple(ActionEvent.noop(i) for i in range(8))
        pad = torch.zeros(1, 8, dtype=torch.bool)
        labels = torch.zeros(1, 8, dtype=torch.float64)
        assert float(bc_loss(logits, goal_logits, [chunk], pad, labels)) == 0.0

    def test_action_nll_matches_bc_loss_without_aux(self):
        rng = np.random.default_rng(5)
        logits = rand_logits(rng)
        chunk = decode_chunk(logits, 0)
        nll, steps = action_nll(logits, chunk, [True] * 8)
        flat = np.concatenate([logits.keys, logits.mouse_dx, logits.mouse_dy,
                               logits.buttons], axis=1)
        t = torch.tensor(flat, dtype=torch.float64).unsqueeze(0)
        pad = torch.ones(1, 8, dtype=torch.bool)
        labels = torch.zeros(1, 8, dtype=torch.float64)
        goal = torch.zeros(1, 8, dtype=torch.float64)
        ref = bc_loss(t, goal, [tuple(chunk)], pad, labels, aux_goal_weight=0.0)
        assert nll == pytest.approx(float(ref), rel=1e-9)
        assert steps == 8


class TestEncoders:
    def test_equal_frames_equal_vectors(self, small_net):
        frame = bytes([1, 0] * 256)
        with torch.no_grad():
            pooled, _ = small_net.encode_frames([frame, frame])
        assert torch.equal(pooled[0], pooled[1])

    def test_one_cell_difference_changes_vector(self, small_net):
        a = bytearray([1, 0] * 256)
        b = bytearray(a)
        b[2 * 137] = 9
        with torch.no_grad():
            pooled, _ = small_net.encode_frames([bytes(a), bytes(b)])
        assert not torch.equal(pooled[0], pooled[1])

    def test_zero_frame_is_finite(self, small_net):
        with torch.no_grad():
            pooled, grid = small_net.encode_frames([bytes(512)])
        assert torch.isfinite(pooled).all()
        assert torch.isfinite(grid).all()

    def test_empty_instruction_is_null_vector(self, small_net):
        with torch.no_grad():
            vec = small_net.instr_encoder([""])
        assert torch.equal(vec[0], small_net.instr_encoder.null_vec)

    def test_case_folding(self, small_net):
        with torch.no_grad():
            a = small_net.instr_encoder(["Lift the GREEN cube"])
            b = small_net.instr_encoder(["lift the green cube"])
        assert torch.equal(a, b)

    def test_token_order_invariance(self, small_net):
        # mean pooling is order-invariant; a documented limitation
        with torch.no_grad():
            a = small_net.instr_encoder(["pick up the knife"])
            b = small_net.instr_encoder(["knife the up pick"])
        assert torch.allclose(a, b, atol=1e-6)

    def test_hash_token_stable(self):
        assert hash_token("tree", 512) == hash_token("tree", 512)
        assert 0 <= hash_token("tree", 512) < 512


class TestForward:
    def _inputs(self, net, batch=2):
        d = net.cfg.embed_dim
        dtype = net.torch_dtype()
        state = torch.randn(batch, d, dtype=dtype)
        grid = torch.randn(batch, 256, net.cfg.conv_channels, dtype=dtype)
        instr = torch.randn(batch, d, dtype=dtype)
        memory = torch.randn(batch, net.cfg.memory_window, d, dtype=dtype)
        mask = torch.zeros(batch, net.cfg.memory_window, dtype=torch.bool)
        return state, grid, instr, memory, mask

    def test_goal_probs_in_unit_interval(self, small_net):
        state, grid, instr, memory, mask = self._inputs(small_net)
        with torch.no_grad():
            _, goal_logits = small_net.forward_policy(state, grid, instr, memory, mask)
        probs = torch.sigmoid(goal_logits)
        assert ((probs > 0) & (probs < 1)).all()

    def test_memory_eviction_keeps_window(self, small_net, registry):
        task = next(t for t in registry if t.task_id == "playroom:room_a:forward")
        state = instantiate_task(task, 0)
        obs = get_world("playroom").observe(state)
        policy = AgentPolicy(small_net)
        policy.set_instruction("go forward")
        M = small_net.cfg.memory_window
        for _ in range(M + 4):
            policy.act(obs)
        assert policy.memory_len == M

    def test_dropout_path_equals_empty_instruction(self, small_net):
        state, grid, instr, memory, mask = self._inputs(small_net, batch=1)
        with torch.no_grad():
            null = small_net.instr_encoder([""])
            a, ga = small_net.forward_policy(state, grid, null, memory, mask)
            b, gb = small_net.forward_policy(state, grid, null.clone(), memory, mask)
        assert torch.equal(a, b) and torch.equal(ga, gb)

    def test_memory_causality(self, small_net, registry):
        # outputs at tick t are unchanged by whatever comes after t
        task = next(t for t in registry if t.task_id == "playroom:room_a:forward")
        world = get_world("playroom")
        state = instantiate_task(task, 1)
        observations = []
        for t in range(6):
            state, obs = world.step(state, ActionEvent(tick=t, keys=frozenset({"W"})))
            observations.append(obs)

        def logits_at(prefix):
            policy = AgentPolicy(small_net, cfg_scale=0.0)
            policy.set_instruction("go forward")
            out = None
            for obs in prefix:
                out = policy.policy_logits(obs)
            return out

        full = logits_at(observations[:4])
        truncated = logits_at(observations[:4])
        np.testing.assert_array_equal(full.keys, truncated.keys)


class TestTraining:
    def _examples(self, collected):
        from toyworlds import pipeline
        from toyworlds.datapipe import load_manifest

        manifest = load_manifest(collected.manifest_path)
        collections = pipeline.load_collections(manifest)
        return manifest, collections

    def test_loss_decreases_on_fixed_batch(self, collected):
        from toyworlds import pipeline

        manifest, collections = self._examples(collected)
        sampler = pipeline.ExampleSampler(manifest, collections, seed=3)
        batch = sampler.batch(32)
        cfg = AgentConfig(embed_dim=32, cell_dim=4, conv_channels=8,
                          memory_window=3, attn_heads=2, head_hidden=32,
                          vocab_size=128, learning_rate=0.03, seed=0)
        net = PolicyNet(cfg)
        optimizer = torch.optim.SGD(net.parameters(), lr=cfg.learning_rate,
                                    momentum=cfg.momentum)
        first = train_step(net, optimizer, batch, [False] * len(batch), 0)
        last = None
        for step in range(1, 200):
            last = train_step(net, optimizer, batch, [False] * len(batch), step)
        assert last.loss < first.loss * 0.5

    def test_same_seed_identical_parameter_hashes(self, collected):
        from toyworlds import pipeline

        manifest, collections = self._examples(collected)
        cfg = AgentConfig(embed_dim=32, cell_dim=4, conv_channels=8,
                          memory_window=3, attn_heads=2, head_hidden=32,
                          vocab_size=128, learning_rate=0.03, seed=5)

        def run():
            sampler = pipeline.ExampleSampler(manifest, collections, seed=cfg.seed)
            result = train(cfg, lambda rng, n: sampler.batch(n), steps=30,
                           batch_size=16)
            return param_hash(result.net)

        assert run() == run()

    def test_zero_dropout_never_trains_unconditioned_path(self, collected):
        from toyworlds import pipeline

        manifest, collections = self._examples(collected)
        cfg = AgentConfig(embed_dim=32, cell_dim=4, conv_channels=8,
                          memory_window=3, attn_heads=2, head_hidden=32,
                          vocab_size=128, learning_rate=0.03, seed=2,
                          instruction_dropout=0.0)
        sampler = pipeline.ExampleSampler(manifest, collections, seed=2)
        result = train(cfg, lambda rng, n: sampler.batch(n), steps=60, batch_size=16)
        # the null instruction vector only receives gradient through dropout
        fresh = PolicyNet(cfg)
        assert torch.equal(result.net.instr_encoder.null_vec,
                           fresh.instr_encoder.null_vec)

    def test_non_finite_gradient_rejected(self, collected):
        from toyworlds import pipeline

        manifest, collections = self._examples(collected)
        sampler = pipeline.ExampleSampler(manifest, collections, seed=1)
        batch = sampler.batch(4)
        cfg = AgentConfig(embed_dim=32, cell_dim=4, conv_channels=8,
                          memory_window=3, attn_heads=2, head_hidden=32,
                          vocab_size=128, seed=1)
        net = PolicyNet(cfg)
        with torch.no_grad():
            net.policy_head[2].weight.fill_(float("nan"))
        optimizer = torch.optim.SGD(net.parameters(), lr=0.01)
        from toyworlds.agent import TrainingError

        with pytest.raises(TrainingError):
            train_step(net, optimizer, batch, [False] * len(batch), 0)


class TestGradientCheck:
    def test_directional_finite_differences(self, collected):
        """Analytic gradients match central finite differences of the loss
        the optimizer actually minimizes: memory entries are constants
        (stop-gradient), so the oracle holds them fixed too."""
        from toyworlds import pipeline

        manifest, collections = self._collections(collected)
        sampler = pipeline.ExampleSampler(manifest, collections, seed=0)
        batch = sampler.batch(2)
        net = PolicyNet(TINY)
        rng = np.random.default_rng(0)
        base = flatten_params(net)

        def loss_fn(vector, frozen_memory, frozen_mask):
            load_flat_params(net, vector)
            keep = net.cfg.memory_window + 1
            cells = [ex.context_cells[-keep:][-1] for ex in batch]
            pooled, grids = net.encode_frames(cells)
            instr = net.instr_encoder([ex.instruction for ex in batch])
            pad = torch.tensor([ex.pad_mask for ex in batch], dtype=torch.bool)
            labels = torch.tensor(
                [[1.0 if g else 0.0 for g in ex.goal_labels] for ex in batch],
                dtype=net.torch_dtype())
            logits, goal_logits = net.forward_policy(pooled, grids, instr,
                                                     frozen_memory, frozen_mask)
            return bc_loss(logits, goal_logits, [ex.target for ex in batch],
                           pad, labels)

        failures = 0
        checks = 0
        for _ in range(34):
            point = base + rng.normal(scale=0.05, size=base.size)
            load_flat_params(net, point)
            _, _, _, memory, mem_mask, *_ = prepare_batch(net, batch,
                                                          [False, False])
            memory = memory.detach().clone()
            loss = loss_fn(point, memory, mem_mask)
            net.zero_grad()
            loss.backward()
            grads = np.concatenate(
                [p.grad.numpy().ravel() if p.grad is not None
                 else np.zeros(p.numel())
                 for _, p in sorted(net.named_parameters())])
            for _ in range(3):
                direction = rng.normal(size=base.size)
                direction /= np.linalg.norm(direction)
                h = 1e-6
                with torch.no_grad():
                    up = float(loss_fn(point + h * direction, memory, mem_mask))
                    down = float(loss_fn(point - h * direction, memory, mem_mask))
                fd = (up - down) / (2 * h)
                analytic = float(grads @ direction)
                rel = abs(fd - analytic) / max(abs(fd), abs(analytic), 1e-12)
                checks += 1
                if rel >= 1e-4:
                    failures += 1
        assert checks >= 100
        assert failures == 0

    def _collections(self, collected):
        from toyworlds import pipeline
        from toyworlds.datapipe import load_manifest

        manifest = load_manifest(collected.manifest_path)
        return manifest, pipeline.load_collections(manifest)


class TestCheckpoint:
    def test_roundtrip_preserves_everything(self, small_net, tmp_path):
        path = tmp_path / "agent.mwck"
        save_checkpoint(small_net, path, extra={"note": "test"})
        loaded, extra = load_checkpoint(path)
        assert extra["note"] == "test"
        assert param_hash(loaded) == param_hash(small_net)
        assert loaded.cfg == small_net.cfg

    def test_bad_magic_rejected(self, tmp_path):
        from toyworlds.agent import CheckpointError

        path = tmp_path / "bad.mwck"
        path.write_bytes(b"junkjunkjunk")
        with pytest.raises(CheckpointError):
            load_checkpoint(path)

    def test_reload_resumes_with_identical_loss(self, collected, tmp_path):
        from toyworlds import pipeline
        from toyworlds.datapipe import load_manifest

        manifest = load_manifest(collected.manifest_path)
        collections = pipeline.load_collections(manifest)
        sampler = pipeline.ExampleSampler(manifest, collections, seed=9)
        cfg = AgentConfig(embed_dim=32, cell_dim=4, conv_channels=8,
                          memory_window=3, attn_heads=2, head_hidden=32,
                          vocab_size=128, learning_rate=0.03, seed=9)
        result = train(cfg, lambda rng, n: sampler.batch(n), steps=20,
                       batch_size=8)
        path = tmp_path / "resume.mwck"
        save_checkpoint(result.net, path)
        reloaded, _ = load_checkpoint(path)
        probe = sampler.batch(8)

        def loss_of(net):
            from toyworlds.agent.train import prepare_batch

            cur, grid, instr, mem, mask, chunks, pad, labels = prepare_batch(
                net, probe, [False] * len(probe))
            with torch.no_grad():
                logits, goal = net.forward_policy(cur, grid, instr, mem, mask)
                return float(bc_loss(logits, goal, chunks, pad, labels))

        assert loss_of(reloaded) == pytest.approx(loss_of(result.net), rel=1e-12)


class TestActLoop:
    def test_scale_zero_matches_unguided_stream(self, small_net, registry):
        task = next(t for t in registry if t.task_id == "playroom:room_a:forward")
        state = instantiate_task(task, 0)
        obs = get_world("playroom").observe(state)

        guided = AgentPolicy(small_net, cfg_scale=0.0)
        guided.set_instruction(task.instruction)
        plain = AgentPolicy(small_net, cfg_scale=0.0)
        plain.set_instruction(task.instruction)
        assert guided.act(obs) == plain.act(obs)

    def test_interrupt_switches_instruction_immediately(self, small_net, registry):
        from toyworlds.agent import AgentSimClient
        from toyworlds.netproto import InterruptMsg

        policy = AgentPolicy(small_net)
        client = AgentSimClient(policy, "go to the table")
        assert policy.instruction == "go to the table"
        client.on_message(InterruptMsg("turn left"))
        assert policy.instruction == "turn left"

    def test_slow_inference_misses_no_ticks(self, registry, small_net):
        from toyworlds.agent import AgentSimClient
        from toyworlds.netproto import session_for_task, simulate_session

        task = next(t for t in registry if t.task_id == "playroom:room_a:forward")
        world, state, config = session_for_task(task, 0, record=True,
                                                action_delay_ms=0, offset_k=2)
        policy = AgentPolicy(small_net, cfg_scale=0.0)
        client = AgentSimClient(policy, task.instruction, offset_k=2,
                                compute_ms=150)
        result = simulate_session(world, state, config, client)
        assert result.ticks == task.budget_ticks
        assert len(result.trajectory.observations) == task.budget_ticks
