"""Request/response models for the HTTP service."""

from __future__ import annotations

from pydantic import BaseModel, Field


class HealthResponse(BaseModel):
    status: str
    version: str


class ParamsRequest(BaseModel):
    input_dim: int = 3072
    hidden_dim: int = 512
    embed_dim: int = 512
    num_actions: int = 20
    bias: bool = False


class ParamsResponse(BaseModel):
    input_dim: int
    hidden_dim: int
    embed_dim: int
    num_classes: int
    bias: bool
    gru_closed_form: int
    gru_tally: int
    idu_closed_form: int
    idu_tally: int
    head_params: int
    ratio_unit: float
    ratio_unit_with_classifier: float
    ratio_with_head: float
    reference_ratio: float
    note: str


class GradcheckRequest(BaseModel):
    variants: list[str] | None = None
    seed: int = 7


class GradcheckEntryModel(BaseModel):
    variant: str
    matrix: str
    max_rel_err: float
    passed: bool


class GradcheckResponse(BaseModel):
    entries: list[GradcheckEntryModel]
    all_passed: bool


class GenerateRequest(BaseModel):
    out_dir: str
    chunks: int | None = None
    config: dict[str, str] = Field(default_factory=dict,
                                   description="RunConfig key overrides")


class GenerateResponse(BaseModel):
    manifest: str
    counts: dict[str, int]


class TrainRequest(BaseModel):
    manifest: str
    out_dir: str
    max_steps: int | None = None
    eval_mcap: bool = False
    resume_from: str | None = None
    config: dict[str, str] = Field(default_factory=dict)


class EpochStatsModel(BaseModel):
    epoch: int
    mean_total: float
    mean_action: float
    mean_embedding: float
    mean_contrastive: float
    mcap: float | None = None


class TrainResponse(BaseModel):
    checkpoint: str
    log: str
    steps: int
    final_loss: float
    final_mcap: float | None = None
    epochs: list[EpochStatsModel]


class EvalRequest(BaseModel):
    checkpoint: str
    manifest: str
    split: str = "eval"
    out_dir: str | None = None


class EvalResponse(BaseModel):
    frames_scored: int
    mean_ap: float
    mean_cap: float
    per_class_ap: dict[int, float]
    per_class_cap: dict[int, float]
    skipped_classes: list[int]
    portion_mcap: list[float | None]
    metrics_csv: str | None = None
    portion_csv: str | None = None
    scores_tsv: str | None = None


class GatesRequest(BaseModel):
    checkpoint: str
    manifest: str
    split: str = "eval"
    out_dir: str


class GatesResponse(BaseModel):
    csv: str
    rows: int
    gate_gap: float | None = None


class SessionCreateRequest(BaseModel):
    checkpoint: str


class SessionInfo(BaseModel):
    session_id: str
    variant: str
    feature_dim: int
    num_actions: int
    chunks_seen: int


class ChunkRequest(BaseModel):
    features: list[float]


class ChunkResponse(BaseModel):
    chunk_position: int
    probabilities: list[float]
    top_class: int
    top_probability: float


class DeleteResponse(BaseModel):
    deleted: bool
