"""HTTP/WebSocket service around the core package.

REST endpoints (pydantic models) cover the registry, session lifecycle,
trajectory access, annotation and judgment ingestion; the websocket
endpoint speaks the binary session protocol, one encoded message per
binary frame. Static files under `static_dir` (the built browser client)
are served at the root when present.
"""

from __future__ import annotations

import json
from pathlib import Path

from fastapi import FastAPI, HTTPException, WebSocket, WebSocketDisconnect
from fastapi.responses import PlainTextResponse, Response
from fastapi.staticfiles import StaticFiles

from .. import __version__
from ..datapipe.annotations import AnnotationError, parse_annotation_upload
from ..evalharness.judgments import JudgmentRecord
from ..netproto.trajio import ReplayDivergence, read_trajectory, replay
from ..netproto.wire import (
    ActionMsg,
    DecodeError,
    Hello,
    InstructionMsg,
    InterruptMsg,
    ObservationMsg,
    TextEventMsg,
    decode,
    encode,
)
from ..worldcore.registry import world_ids
from ..worlds.taskfiles import registry_list
from .schemas import (
    AnnotationSegmentIn,
    AnnotationUploadResponse,
    HealthResponse,
    JudgeQueueItem,
    JudgmentIn,
    JudgmentUploadResponse,
    ReplayCheckResponse,
    SessionCreateRequest,
    SessionCreateResponse,
    SessionInfo,
    TaskModel,
    TrajectoryInfo,
)
from .sessions import SessionManager


def create_app(data_dir: str | Path = "data", *,
               checkpoint_path: str | Path | None = None,
               static_dir: str | Path | None = None) -> FastAPI:
    from contextlib import asynccontextmanager

    data_dir = Path(data_dir)
    data_dir.mkdir(parents=True, exist_ok=True)
    manager = SessionManager(data_dir,
                             Path(checkpoint_path) if checkpoint_path else None)

    @asynccontextmanager
    async def lifespan(_: FastAPI):
        yield
        await manager.shutdown()  # drain live sessions; each flushes itself

    app = FastAPI(title="toyworlds service", version=__version__,
                  lifespan=lifespan)
    app.state.manager = manager
    app.state.data_dir = data_dir

    @app.get("/health", response_model=HealthResponse)
    def health() -> HealthResponse:
        return HealthResponse(version=__version__, worlds=world_ids())

    @app.get("/worlds", response_model=list[str])
    def worlds() -> list[str]:
        return world_ids()

    @app.get("/tasks", response_model=list[TaskModel])
    def tasks(world_id: str | None = None) -> list[TaskModel]:
        if world_id is not None and world_id not in world_ids():
            raise HTTPException(404, f"unknown world {world_id!r}")
        return [
            TaskModel(
                task_id=t.task_id, world_id=t.world_id,
                save_state_ref=t.save_state_ref, instruction=t.instruction,
                evaluator_spec=t.evaluator_spec,
                distractor_ids=list(t.distractor_ids),
                budget_ticks=t.budget_ticks, skill_category=t.skill_category)
            for t in registry_list(world_id)
        ]

    # -- sessions -------------------------------------------------------------

    @app.post("/sessions", response_model=SessionCreateResponse)
    def create_session(req: SessionCreateRequest) -> SessionCreateResponse:
        try:
            session = manager.create(
                world_id=req.world_id, task_id=req.task_id, seed=req.seed,
                tick_hz=req.tick_hz, budget_ticks=req.budget_ticks,
                record=req.record, obs_delay_ms=req.obs_delay_ms,
                action_delay_ms=req.action_delay_ms, jitter_ms=req.jitter_ms,
                offset_k=req.offset_k, mode=req.mode,
                instruction=req.instruction, cfg_scale=req.cfg_scale)
        except Exception as e:
            raise HTTPException(400, str(e)) from e
        return SessionCreateResponse(
            session_id=session.session_id,
            ws_path=f"/ws/session/{session.session_id}",
            world_id=session.world_id, task_id=session.task_id,
            budget_ticks=session.rt.config.budget_ticks)

    @app.get("/sessions", response_model=list[SessionInfo])
    def list_sessions() -> list[SessionInfo]:
        return [
            SessionInfo(
                session_id=s.session_id, world_id=s.world_id, task_id=s.task_id,
                mode=s.mode, tick=s.rt.engine.tick_index,
                running=not s.rt.done.is_set(), clients=list(s.clients))
            for s in manager.sessions.values()
        ]

    @app.websocket("/ws/session/{session_id}")
    async def session_socket(ws: WebSocket, session_id: str, role: str = "player"):
        session = manager.sessions.get(session_id)
        if session is None:
            await ws.close(code=4404)
            return
        await ws.accept()
        client_name = f"{role}-{len(session.clients)}"
        session.clients.append(client_name)

        raw = await ws.receive_bytes()
        try:
            hello = decode(raw)
        except DecodeError as e:
            await ws.close(code=4400, reason=str(e))
            return
        if not isinstance(hello, Hello):
            await ws.close(code=4400, reason="expected Hello")
            return
        await ws.send_bytes(encode(Hello(role="observer", client_name="server")))

        async def sender(data: bytes) -> None:
            await ws.send_bytes(data)

        session.rt.attach(client_name, sender)
        driver = role in ("player", "solver", "agent")
        if session.rt._task is None and driver:
            session.rt.start()
        elif session.rt._task is None and session.mode == "agent":
            session.rt.start()
        try:
            while not session.rt.done.is_set():
                data = await ws.receive_bytes()
                try:
                    msg = decode(data)
                except DecodeError:
                    continue
                if isinstance(msg, (ActionMsg, InstructionMsg, InterruptMsg)):
                    session.rt.submit_message(msg)
        except WebSocketDisconnect:
            pass
        finally:
            # no awaits here: the transport may be tearing this task down;
            # the session loop finalizes and flushes on its own
            session.rt.detach(client_name)
            if driver and not session.rt.done.is_set():
                session.rt.request_stop("disconnect")

    # -- trajectories ----------------------------------------------------------

    def _trajectory_files() -> list[Path]:
        return sorted((data_dir / "trajectories").glob("*.mwtj"))

    @app.get("/trajectories", response_model=list[TrajectoryInfo])
    def trajectories() -> list[TrajectoryInfo]:
        out = []
        for path in _trajectory_files():
            try:
                traj = read_trajectory(path)
            except Exception:
                continue
            from ..netproto.trajio import trajectory_id
            out.append(TrajectoryInfo(
                trajectory_id=trajectory_id(traj), path=str(path),
                world_id=traj.header.get("world_id", ""),
                task_id=traj.header.get("task_id", ""),
                ticks=len(traj.actions), role=traj.header.get("role", "")))
        return out

    def _find_trajectory(trajectory_id_str: str) -> tuple[Path, object]:
        from ..netproto.trajio import trajectory_id
        for path in _trajectory_files():
            try:
                traj = read_trajectory(path)
            except Exception:
                continue
            if trajectory_id(traj) == trajectory_id_str or path.stem == trajectory_id_str:
                return path, traj
        raise HTTPException(404, f"no trajectory {trajectory_id_str!r}")

    @app.get("/trajectories/{trajectory_id}/messages")
    def trajectory_messages(trajectory_id: str) -> Response:
        """All observation/text-event messages, concatenated wire frames;
        the browser replays them through its normal decoder."""
        _, traj = _find_trajectory(trajectory_id)
        blob = b"".join(encode(ObservationMsg(o)) for o in traj.observations)
        blob += b"".join(encode(TextEventMsg(t, s)) for t, s in traj.text_events)
        return Response(content=blob, media_type="application/octet-stream")

    @app.get("/trajectories/{trajectory_id}/replay-check",
             response_model=ReplayCheckResponse)
    def trajectory_replay_check(trajectory_id: str) -> ReplayCheckResponse:
        _, traj = _find_trajectory(trajectory_id)
        try:
            hashes = replay(traj)
            return ReplayCheckResponse(trajectory_id=trajectory_id, ok=True,
                                       ticks=len(hashes))
        except ReplayDivergence as e:
            return ReplayCheckResponse(trajectory_id=trajectory_id, ok=False,
                                       ticks=len(traj.actions),
                                       first_divergent_tick=e.first_divergent_tick)

    @app.get("/trajectories/{trajectory_id}/download")
    def trajectory_download(trajectory_id: str) -> Response:
        path, _ = _find_trajectory(trajectory_id)
        return Response(content=path.read_bytes(),
                        media_type="application/octet-stream")

    # -- annotations and judgments ----------------------------------------------

    @app.post("/annotations", response_model=AnnotationUploadResponse)
    def upload_annotations(segments: list[AnnotationSegmentIn]) -> AnnotationUploadResponse:
        lines = "\n".join(json.dumps(s.model_dump(), sort_keys=True) for s in segments)
        try:
            parsed = parse_annotation_upload(lines)
        except AnnotationError as e:
            raise HTTPException(422, str(e)) from e
        path = data_dir / "annotations.jsonl"
        with open(path, "a") as f:
            for seg in parsed:
                f.write(json.dumps(seg.as_dict(), sort_keys=True) + "\n")
        return AnnotationUploadResponse(accepted=len(parsed), path=str(path))

    @app.post("/judgments", response_model=JudgmentUploadResponse)
    def upload_judgment(j: JudgmentIn) -> JudgmentUploadResponse:
        record = JudgmentRecord(episode_id=j.episode_id, judge_id=j.judge_id,
                                rating=j.rating, note=j.note)
        try:
            record.validate()
        except Exception as e:
            raise HTTPException(422, str(e)) from e
        path = data_dir / "judgments.jsonl"
        count = 0
        if path.exists():
            for line in path.read_text().splitlines():
                if not line.strip():
                    continue
                doc = json.loads(line)
                if doc["episode_id"] == j.episode_id:
                    if doc["judge_id"] == j.judge_id:
                        raise HTTPException(
                            409, f"judge {j.judge_id!r} already rated {j.episode_id!r}")
                    count += 1
        with open(path, "a") as f:
            f.write(json.dumps({"episode_id": j.episode_id, "judge_id": j.judge_id,
                                "rating": j.rating, "note": j.note},
                               sort_keys=True) + "\n")
        return JudgmentUploadResponse(accepted=True, episode_id=j.episode_id,
                                      ratings_so_far=count + 1)

    @app.get("/judge/queue", response_model=list[JudgeQueueItem])
    def judge_queue() -> list[JudgeQueueItem]:
        ratings: dict[str, int] = {}
        jpath = data_dir / "judgments.jsonl"
        if jpath.exists():
            for line in jpath.read_text().splitlines():
                if line.strip():
                    doc = json.loads(line)
                    ratings[doc["episode_id"]] = ratings.get(doc["episode_id"], 0) + 1
        items = []
        from ..netproto.trajio import trajectory_id
        for path in _trajectory_files():
            try:
                traj = read_trajectory(path)
            except Exception:
                continue
            tid = trajectory_id(traj)
            instruction = (traj.instruction_segments[0].text
                           if traj.instruction_segments else "")
            items.append(JudgeQueueItem(
                episode_id=path.stem, trajectory_id=tid,
                rubric="Mark failure if the agent performs irrelevant actions "
                       "first, even if it completes the task afterward.",
                instruction=instruction, ratings=ratings.get(path.stem, 0)))
        return items

    @app.get("/protocol/golden/hello")
    def golden_hello() -> PlainTextResponse:
        """Reference bytes the browser codec validates itself against."""
        return PlainTextResponse(encode(Hello(role="player", client_name="golden")).hex())

    if static_dir is not None and Path(static_dir).exists():
        app.mount("/", StaticFiles(directory=str(static_dir), html=True),
                  name="static")
    return app
