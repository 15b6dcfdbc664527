from __future__ import annotations

import pytest

from toyworlds import worlds
from toyworlds.agent import AgentConfig, PolicyNet


@pytest.fixture(scope="session")
def registry():
    return worlds.registry_list()


@pytest.fixture(scope="session")
def small_net():
    """Untrained, small network for shape/contract tests."""
    cfg = AgentConfig(embed_dim=32, cell_dim=4, conv_channels=8, memory_window=3,
                      attn_heads=2, head_hidden=24, vocab_size=64, seed=11)
    return PolicyNet(cfg)


@pytest.fixture(scope="session")
def collected(tmp_path_factory):
    """A small demonstration dataset shared by datapipe/agent tests."""
    from toyworlds import pipeline

    out = tmp_path_factory.mktemp("collected")
    tasks = [t for t in worlds.registry_list("playroom")
             if t.save_state_ref.endswith("room_a")]
    result = pipeline.collect_dataset(out, world_list=["playroom"], seeds=(0, 1),
                                      memory_window=3, example_stride=2,
                                      tasks=tasks)
    return result
