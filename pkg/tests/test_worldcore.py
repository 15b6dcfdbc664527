from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from toyworlds.worldcore import (
    ActionEvent,
    Frame,
    KEY_ORDER,
    ProtocolError,
    Rng,
    SaveDecodeError,
    get_world,
    instantiate_task,
    load,
    save,
)


def find_task(task_id, registry):
    return next(t for t in registry if t.task_id == task_id)


class TestRng:
    def test_deterministic_stream(self):
        a, b = Rng(123), Rng(123)
        assert [a.next_u64() for _ in range(20)] == [b.next_u64() for _ in range(20)]

    def test_state_roundtrip(self):
        r = Rng(9)
        r.next_u64()
        clone = Rng(0)
        clone.state = r.state
        assert clone.next_u64() == r.next_u64()

    def test_randint_bounds(self):
        r = Rng(5)
        values = {r.randint(-3, 3) for _ in range(500)}
        assert values == set(range(-3, 4))


class TestActionEvent:
    def test_mask_roundtrip(self):
        action = ActionEvent(tick=3, keys=frozenset({"W", "ESC", "4"}),
                             mouse_dx=-3, mouse_dy=2, right_button=True)
        back = ActionEvent.from_mask(3, action.key_mask(), -3, 2, False, True)
        assert back == action

    def test_rejects_unknown_key(self):
        with pytest.raises(ValueError):
            ActionEvent(tick=0, keys=frozenset({"X"})).validate()

    def test_rejects_out_of_range_bucket(self):
        with pytest.raises(ValueError):
            ActionEvent(tick=0, mouse_dx=4).validate()

    def test_rejects_negative_tick(self):
        with pytest.raises(ValueError):
            ActionEvent(tick=-1).validate()


class TestStep:
    def test_noop_step_deterministic(self, registry):
        task = find_task("playroom:room_a:goto-table", registry)
        state = instantiate_task(task, 42)
        world = get_world("playroom")
        s1, o1 = world.step(state.copy(), ActionEvent.noop(0))
        s2, o2 = world.step(state.copy(), ActionEvent.noop(0))
        assert s1 == s2
        assert o1.frame.cells == o2.frame.cells
        assert s1.tick == 1

    def test_forward_moves_at_most_one_cell_per_tick(self, registry):
        task = find_task("harvest:grove_a:goto-tree", registry)
        state = instantiate_task(task, 3)
        world = get_world("harvest")
        start = dict(state.entities["avatar"])
        for tick in range(5):
            state, _ = world.step(state, ActionEvent(tick=tick, keys=frozenset({"W"})))
        av = state.entities["avatar"]
        moved = abs(av["x"] - start["x"]) + abs(av["y"] - start["y"])
        assert 0 < moved <= 5

    def test_tick_mismatch_rejected(self, registry):
        task = find_task("playroom:room_a:goto-table", registry)
        state = instantiate_task(task, 1)
        with pytest.raises(ProtocolError):
            get_world("playroom").step(state, ActionEvent.noop(5))

    def test_replay_hash_sequence_identical(self, registry):
        task = find_task("buildlab:hall_a:goto-blue-block", registry)
        world = get_world("buildlab")
        rng = Rng(77)
        actions = []
        for tick in range(40):
            keys = frozenset(k for k in KEY_ORDER if rng.random() < 0.2)
            actions.append(ActionEvent(tick=tick, keys=keys,
                                       mouse_dx=rng.randint(-3, 3),
                                       mouse_dy=rng.randint(-3, 3)))
        hashes = []
        for _ in range(2):
            state = instantiate_task(task, 5)
            run = []
            for action in actions:
                state, obs = world.step(state, action)
                run.append(obs.frame.hash())
            hashes.append(run)
        assert hashes[0] == hashes[1]


class TestSaveLoad:
    def test_roundtrip_bitwise(self, registry):
        task = find_task("harvest:grove_b:goto-bush", registry)
        state = instantiate_task(task, 8)
        blob = save(state)
        assert load(blob) == state
        assert save(load(blob)) == blob

    def test_truncated_buffer(self, registry):
        task = find_task("harvest:grove_b:goto-bush", registry)
        blob = save(instantiate_task(task, 8))
        with pytest.raises(SaveDecodeError):
            load(blob[: len(blob) // 2])

    def test_bad_magic_reports_offset(self):
        with pytest.raises(SaveDecodeError) as err:
            load(b"XXXX" + b"\x00" * 16)
        assert err.value.offset == 0

    def test_rng_state_changes_bytes(self, registry):
        task = find_task("playroom:room_a:goto-table", registry)
        a = instantiate_task(task, 2)
        b = a.copy()
        b.rng_state = a.rng_state + 1
        assert save(a) != save(b)

    @settings(max_examples=30, deadline=None)
    @given(seed=st.integers(min_value=0, max_value=2**32),
           ticks=st.integers(min_value=0, max_value=30))
    def test_roundtrip_on_random_rollouts(self, seed, ticks):
        world = get_world("harvest")
        state = world.build_scenario("grove_a", seed)
        rng = Rng(seed ^ 0xABCD)
        for t in range(ticks):
            keys = frozenset(k for k in KEY_ORDER if rng.random() < 0.2)
            state, _ = world.step(state, ActionEvent(tick=t, keys=keys,
                                                     mouse_dx=rng.randint(-3, 3),
                                                     mouse_dy=rng.randint(-3, 3)))
        assert load(save(state)) == state


class TestInstantiate:
    def test_contains_target_and_distractors(self, registry):
        task = find_task("playroom:room_a:lift-green-cube", registry)
        state = instantiate_task(task, 7)
        objects = state.entities["objects"]
        assert "cube_green" in objects
        assert all(d in objects for d in task.distractor_ids)
        green = objects["cube_green"]
        distractor = objects[task.distractor_ids[0]]
        assert green["color"] != distractor["color"]

    def test_same_seed_identical(self, registry):
        task = find_task("harvest:grove_a:collect-wood", registry)
        assert save(instantiate_task(task, 7)) == save(instantiate_task(task, 7))

    def test_different_seeds_move_objects(self, registry):
        task = find_task("harvest:grove_a:collect-wood", registry)
        a = instantiate_task(task, 1).entities["objects"]
        b = instantiate_task(task, 2).entities["objects"]
        positions_a = {k: (v["x"], v["y"]) for k, v in a.items()}
        positions_b = {k: (v["x"], v["y"]) for k, v in b.items()}
        assert positions_a != positions_b


class TestFrame:
    def test_fuzzed_frames_stay_valid(self):
        # random action streams across all three worlds
        from toyworlds.worldcore import world_ids

        total = 0
        for world_id in world_ids():
            world = get_world(world_id)
            state = world.build_scenario(world.scenario_names()[0], 99)
            rng = Rng(world_id.encode()[0])
            for t in range(2000):
                keys = frozenset(k for k in KEY_ORDER if rng.random() < 0.25)
                action = ActionEvent(tick=t, keys=keys,
                                     mouse_dx=rng.randint(-3, 3),
                                     mouse_dy=rng.randint(-3, 3),
                                     left_button=rng.random() < 0.2,
                                     right_button=rng.random() < 0.2)
                state, obs = world.step(state, action)
                obs.frame.validate()
                total += 1
        assert total == 6000

    def test_frame_hash_is_fnv1a_over_cells(self):
        from toyworlds.worldcore import fnv1a64

        cells = bytes([1, 2] * 256)
        frame = Frame(cells=cells)
        assert frame.hash() == fnv1a64(cells)

    def test_step_cost_under_tick_period(self, registry):
        # 10 Hz real-time contract: a step must cost well under 100 ms
        import time

        task = find_task("harvest:grove_a:collect-wood", registry)
        world = get_world("harvest")
        state = instantiate_task(task, 0)
        start = time.perf_counter()
        n = 300
        for t in range(n):
            state, _ = world.step(state, ActionEvent(tick=t, keys=frozenset({"W"})))
        per_step = (time.perf_counter() - start) / n
        assert per_step < 0.1, f"step cost {per_step * 1000:.1f} ms"
