"""HTTP service wrapping the core package.

Batch endpoints (generate/train/evaluate/gates/gradcheck) run the same
operations as the CLI and write the same artifacts server-side. Streaming
sessions hold a loaded checkpoint and score chunks one at a time, online:
POST /sessions, then POST /sessions/{id}/chunks per arriving chunk.

Error mapping: ConfigError -> 400, DataError (datasets, checkpoints)
-> 422, unknown session or missing file -> 404.
"""

from __future__ import annotations

import itertools
import threading
from dataclasses import asdict

import numpy as np
from fastapi import FastAPI, HTTPException

from .. import __version__, ops
from ..cells import parameter_report
from ..checkpoint import load_checkpoint
from ..config import RunConfig, apply_overrides
from ..errors import CheckpointError, ConfigError, DataError, ShapeError
from ..network import Model
from . import schemas


class StreamSession:
    """One online scoring stream over a loaded model."""

    def __init__(self, session_id: str, model: Model):
        self.session_id = session_id
        self.model = model
        cfg = model.config
        self.buffer = np.zeros((cfg.past_steps + 1, cfg.feature_dim))
        self.chunks_seen = 0
        self.lock = threading.Lock()

    def push(self, features: list[float]) -> np.ndarray:
        cfg = self.model.config
        x = np.asarray(features, dtype=np.float64)
        if x.shape != (cfg.feature_dim,):
            raise ShapeError(
                f"chunk has {x.shape[0] if x.ndim == 1 else 'bad'} features, "
                f"expected {cfg.feature_dim}"
            )
        with self.lock:
            self.buffer = np.vstack([self.buffer[1:], x[None]])
            probs, _, _, _ = self.model.forward_batch(self.buffer[None])
            self.chunks_seen += 1
            return probs[0, -1]

    def info(self) -> schemas.SessionInfo:
        cfg = self.model.config
        return schemas.SessionInfo(
            session_id=self.session_id, variant=cfg.variant,
            feature_dim=cfg.feature_dim, num_actions=cfg.num_actions,
            chunks_seen=self.chunks_seen,
        )


def create_app() -> FastAPI:
    app = FastAPI(title="gatelab", version=__version__)
    sessions: dict[str, StreamSession] = {}
    session_counter = itertools.count(1)
    sessions_lock = threading.Lock()

    def _config_from(overrides: dict[str, str]) -> RunConfig:
        try:
            return apply_overrides(RunConfig(), overrides, where="request config")
        except ConfigError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc

    def _run(fn, *args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except ConfigError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        except CheckpointError as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from exc
        except DataError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc

    @app.get("/health", response_model=schemas.HealthResponse)
    def health():
        return schemas.HealthResponse(status="ok", version=__version__)

    @app.post("/params", response_model=schemas.ParamsResponse)
    def params(req: schemas.ParamsRequest):
        report = parameter_report(req.input_dim, req.hidden_dim, req.embed_dim,
                                  req.num_actions, bias=req.bias)
        return schemas.ParamsResponse(**report)

    @app.post("/gradcheck", response_model=schemas.GradcheckResponse)
    def gradcheck(req: schemas.GradcheckRequest):
        report = _run(ops.run_gradcheck, req.variants, seed=req.seed)
        return schemas.GradcheckResponse(
            entries=[schemas.GradcheckEntryModel(**asdict(e)) for e in report.entries],
            all_passed=report.all_passed,
        )

    @app.post("/datasets/generate", response_model=schemas.GenerateResponse)
    def generate(req: schemas.GenerateRequest):
        cfg = _config_from(req.config)
        result = _run(ops.run_gen, cfg, req.out_dir, chunks=req.chunks)
        return schemas.GenerateResponse(manifest=str(result.manifest), counts=result.counts)

    @app.post("/train", response_model=schemas.TrainResponse)
    def train(req: schemas.TrainRequest):
        cfg = _config_from(req.config)
        result = _run(
            ops.run_train, cfg, req.manifest, req.out_dir,
            max_steps=req.max_steps, eval_mcap=req.eval_mcap,
            resume_from=req.resume_from,
        )
        return schemas.TrainResponse(
            checkpoint=str(result.checkpoint), log=str(result.log),
            steps=result.steps, final_loss=result.final_loss,
            final_mcap=result.final_mcap,
            epochs=[schemas.EpochStatsModel(**asdict(e)) for e in result.epochs],
        )

    @app.post("/evaluate", response_model=schemas.EvalResponse)
    def evaluate(req: schemas.EvalRequest):
        result = _run(ops.run_eval, req.checkpoint, req.manifest,
                      split=req.split, out_dir=req.out_dir)
        return schemas.EvalResponse(
            frames_scored=result.num_frames,
            mean_ap=result.report.mean_ap, mean_cap=result.report.mean_cap,
            per_class_ap=result.report.per_class_ap,
            per_class_cap=result.report.per_class_cap,
            skipped_classes=result.report.skipped_classes,
            portion_mcap=result.portion.mcap,
            metrics_csv=None if result.metrics_csv is None else str(result.metrics_csv),
            portion_csv=None if result.portion_csv is None else str(result.portion_csv),
            scores_tsv=None if result.scores_tsv is None else str(result.scores_tsv),
        )

    @app.post("/gates/inspect", response_model=schemas.GatesResponse)
    def gates(req: schemas.GatesRequest):
        result = _run(ops.run_inspect_gates, req.checkpoint, req.manifest,
                      req.split, req.out_dir)
        return schemas.GatesResponse(csv=str(result.csv), rows=result.rows,
                                     gate_gap=result.gate_gap)

    @app.post("/sessions", response_model=schemas.SessionInfo)
    def create_session(req: schemas.SessionCreateRequest):
        model = _run(load_checkpoint, req.checkpoint)
        with sessions_lock:
            sid = f"s{next(session_counter):06d}"
            sessions[sid] = StreamSession(sid, model)
        return sessions[sid].info()

    def _session(sid: str) -> StreamSession:
        session = sessions.get(sid)
        if session is None:
            raise HTTPException(status_code=404, detail=f"unknown session {sid!r}")
        return session

    @app.get("/sessions/{sid}", response_model=schemas.SessionInfo)
    def session_info(sid: str):
        return _session(sid).info()

    @app.post("/sessions/{sid}/chunks", response_model=schemas.ChunkResponse)
    def push_chunk(sid: str, req: schemas.ChunkRequest):
        session = _session(sid)
        try:
            probs = session.push(req.features)
        except ShapeError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        top = int(np.argmax(probs))
        return schemas.ChunkResponse(
            chunk_position=session.chunks_seen - 1,
            probabilities=[float(p) for p in probs],
            top_class=top, top_probability=float(probs[top]),
        )

    @app.delete("/sessions/{sid}", response_model=schemas.DeleteResponse)
    def delete_session(sid: str):
        _session(sid)
        with sessions_lock:
            sessions.pop(sid, None)
        return schemas.DeleteResponse(deleted=True)

    return app


app = create_app()
