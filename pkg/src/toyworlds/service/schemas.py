"""Pydantic request/response models for the HTTP surface."""

from __future__ import annotations

from pydantic import BaseModel, Field


class HealthResponse(BaseModel):
    status: str = "ok"
    version: str
    worlds: list[str]


class TaskModel(BaseModel):
    task_id: str
    world_id: str
    save_state_ref: str
    instruction: str
    evaluator_spec: dict
    distractor_ids: list[str]
    budget_ticks: int
    skill_category: str


class SessionCreateRequest(BaseModel):
    world_id: str = ""
    task_id: str = ""
    seed: int = 0
    tick_hz: int = 10
    budget_ticks: int = 100
    record: bool = True
    obs_delay_ms: int = 0
    action_delay_ms: int = 0
    jitter_ms: int = 0
    offset_k: int = 2
    mode: str = Field(default="play", description="play | agent | setter_solver")
    instruction: str = ""
    cfg_scale: float | None = None


class SessionCreateResponse(BaseModel):
    session_id: str
    ws_path: str
    world_id: str
    task_id: str
    budget_ticks: int


class SessionInfo(BaseModel):
    session_id: str
    world_id: str
    task_id: str
    mode: str
    tick: int
    running: bool
    clients: list[str]


class AnnotationSegmentIn(BaseModel):
    trajectory_id: str
    trajectory_path: str = ""
    t0: int
    t1: int
    instruction: str
    source: str = "posthoc"
    annotator_id: str = ""


class AnnotationUploadResponse(BaseModel):
    accepted: int
    path: str


class JudgmentIn(BaseModel):
    episode_id: str
    judge_id: str
    rating: str
    note: str = ""


class JudgmentUploadResponse(BaseModel):
    accepted: bool
    episode_id: str
    ratings_so_far: int


class TrajectoryInfo(BaseModel):
    trajectory_id: str
    path: str
    world_id: str
    task_id: str = ""
    ticks: int
    role: str = ""


class JudgeQueueItem(BaseModel):
    episode_id: str
    trajectory_id: str
    rubric: str
    instruction: str
    ratings: int


class ReplayCheckResponse(BaseModel):
    trajectory_id: str
    ok: bool
    ticks: int
    first_divergent_tick: int | None = None
