"""Trajectories to training data: experts, filtering, mixing, examples."""

from .annotations import (
    AnnotationError,
    AnnotationSegment,
    check_no_overlap,
    parse_annotation_upload,
    read_segment_shard,
    segment_from_dict,
    write_segment_shard,
)
from .cluster import (
    Hierarchy,
    cluster_instructions,
    embed_text,
    hierarchy_report,
    write_cluster_report,
    write_cluster_wheel,
)
from .dataset import (
    DatasetManifest,
    ManifestEntry,
    ManifestError,
    MixtureSampler,
    heldout_split,
    load_manifest,
    save_manifest,
    split_key,
)
from .examples import (
    TrainingExample,
    frame_sequence,
    goal_success_tick,
    make_examples,
    read_example_shard,
    write_example_shard,
)
from .expert import ExpertClient, ExpertError, ExpertPolicy
from .filters import FilterReport, FilterRules, filter_trajectory, idle_ticks
from .runner import scripted_expert

__all__ = [
    "AnnotationError", "AnnotationSegment", "DatasetManifest", "ExpertClient",
    "ExpertError", "ExpertPolicy", "FilterReport", "FilterRules", "Hierarchy",
    "ManifestEntry", "ManifestError", "MixtureSampler", "TrainingExample",
    "check_no_overlap", "cluster_instructions", "embed_text", "filter_trajectory",
    "frame_sequence", "goal_success_tick", "heldout_split", "hierarchy_report",
    "idle_ticks", "load_manifest", "make_examples", "parse_annotation_upload",
    "read_example_shard", "read_segment_shard", "save_manifest", "scripted_expert",
    "segment_from_dict", "split_key", "write_cluster_report", "write_cluster_wheel",
    "write_example_shard", "write_segment_shard",
]
