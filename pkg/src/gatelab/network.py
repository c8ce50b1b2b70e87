"""Windowed recurrent classifier: unrolled cell over T+1 chunks, a shared
softmax head applied at every step, exact backprop through time, a plain
SGD training loop, and streaming per-chunk prediction.

Index convention: array position i in 0..T corresponds to step t = i - T,
so position T is the current chunk (t = 0). The recurrence starts from a
zero hidden state for every window. For the current-input variants the
window's last chunk supplies x_0 at every step.

Training is deterministic by contract: parameter init draws from
rng_for(seed, "init"), the batch order of epoch e from
rng_for(seed, "epoch", e) regenerated on demand, so resuming from a saved
step reproduces the exact batch sequence of an uninterrupted run.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace
from typing import Iterable, Iterator, Sequence

import numpy as np

from . import metrics
from .cells import CURRENT_INPUT_VARIANTS, GATED_VARIANTS, VARIANTS, CellState, make_cell
from .datagen import Window
from .errors import ConfigError, NumericalError, ShapeError
from .losses import LossBreakdown, LossConfig, combined_loss
from .numerics import Params, glorot_uniform, linear, rng_for, softmax


@dataclass
class IdnConfig:
    """Model and training configuration.

    frames_per_chunk is carried as metadata only (the model consumes
    per-chunk features). appearance_dim/motion_dim declare a two-stream
    layout when nonzero, in which case they must sum to feature_dim.
    """

    variant: str = "idu"
    past_steps: int = 15  # T: window holds T past chunks plus the current one
    frames_per_chunk: int = 6
    num_actions: int = 5  # K action classes; class 0 is background
    feature_dim: int = 32
    appearance_dim: int = 0
    motion_dim: int = 0
    hidden_dim: int = 16
    embed_dim: int = 16
    bias: bool = True
    lr: float = 0.01
    batch_size: int = 128
    epochs: int = 6
    seed: int = 7
    alpha: float = 0.3
    margin: float = 1.0

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ConfigError(f"unknown variant {self.variant!r}; expected one of {VARIANTS}")
        if self.past_steps < 0:
            raise ConfigError(f"past_steps must be >= 0, got {self.past_steps}")
        for name in ("num_actions", "feature_dim", "hidden_dim", "embed_dim",
                     "frames_per_chunk", "batch_size"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.appearance_dim < 0 or self.motion_dim < 0:
            raise ConfigError("appearance_dim/motion_dim must be >= 0")
        if (self.appearance_dim or self.motion_dim) and (
            self.appearance_dim + self.motion_dim != self.feature_dim
        ):
            raise ConfigError(
                f"two-stream dims {self.appearance_dim}+{self.motion_dim} "
                f"!= feature_dim {self.feature_dim}"
            )
        if self.lr < 0:
            raise ConfigError(f"lr must be >= 0, got {self.lr}")
        if self.epochs < 0:
            raise ConfigError(f"epochs must be >= 0, got {self.epochs}")

    @property
    def num_classes(self) -> int:
        return self.num_actions + 1

    def loss_config(self) -> LossConfig:
        return LossConfig(alpha=self.alpha, margin=self.margin, num_classes=self.num_classes)

    def to_kv(self) -> dict[str, str]:
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            out[f.name] = ("true" if v else "false") if isinstance(v, bool) else repr(v) if isinstance(v, float) else str(v)
        return out

    @classmethod
    def from_kv(cls, kv: dict[str, str]) -> "IdnConfig":
        kwargs = {}
        for f in fields(cls):
            if f.name not in kv:
                raise ConfigError(f"missing config key {f.name}")
            raw = kv[f.name]
            if f.type == "bool":
                if raw not in ("true", "false"):
                    raise ConfigError(f"{f.name}: expected true/false, got {raw!r}")
                kwargs[f.name] = raw == "true"
            elif f.type == "int":
                kwargs[f.name] = int(raw)
            elif f.type == "float":
                kwargs[f.name] = float(raw)
            else:
                kwargs[f.name] = raw
        return cls(**kwargs)


class Model:
    """A cell variant plus the shared classification head, with state for
    the training-step counter used by checkpoint resume."""

    def __init__(self, config: IdnConfig, params: Params | None = None, step: int = 0):
        self.config = config
        self.cell = make_cell(
            config.variant, config.feature_dim, config.hidden_dim,
            embed_dim=config.embed_dim, num_classes=config.num_classes,
            bias=config.bias,
        )
        self.step = step
        if params is None:
            params = self._init_params()
        self.validate_params(params)
        self.params = params

    def _init_params(self) -> Params:
        rng = rng_for(self.config.seed, "init")
        params = self.cell.init_params(rng)
        params["W_hp"] = glorot_uniform(rng, self.config.num_classes, self.config.hidden_dim)
        if self.config.bias:
            params["b_p"] = np.zeros(self.config.num_classes)
        return params

    def param_shapes(self) -> dict[str, tuple]:
        shapes = dict(self.cell.param_shapes())
        shapes["W_hp"] = (self.config.num_classes, self.config.hidden_dim)
        if self.config.bias:
            shapes["b_p"] = (self.config.num_classes,)
        return shapes

    def validate_params(self, params: Params) -> None:
        expected = self.param_shapes()
        for name, shape in expected.items():
            if name not in params:
                raise ShapeError(f"missing parameter {name}")
            if tuple(params[name].shape) != tuple(shape):
                raise ShapeError(
                    f"parameter {name} has shape {tuple(params[name].shape)}, "
                    f"expected {tuple(shape)}"
                )
        for name in params:
            if name not in expected:
                raise ShapeError(f"unexpected parameter {name}")

    def zero_grads(self) -> Params:
        return {name: np.zeros(shape) for name, shape in self.param_shapes().items()}

    # -- forward ---------------------------------------------------------

    def forward_batch(self, feats: np.ndarray, params: Params | None = None):
        """Unroll over a batch of windows.

        feats: (B, S, D) with S = T+1. Returns (probs (B, S, C), traces
        list of length S, current-chunk context, hidden stack (B, S, H)).
        """
        params = self.params if params is None else params
        cell = self.cell
        if feats.ndim != 3 or feats.shape[2] != self.config.feature_dim:
            raise ShapeError(
                f"forward_batch: feats shape {feats.shape} does not match "
                f"feature_dim {self.config.feature_dim}"
            )
        B, S, _ = feats.shape
        state = cell.zero_state(B)
        current = cell.prepare_current(params, feats[:, -1, :]) if cell.uses_current else None
        traces = []
        hs = []
        for i in range(S):
            state, tr = cell.forward(params, state, feats[:, i, :], current)
            traces.append(tr)
            hs.append(state.h)
        hidden = np.stack(hs, axis=1)
        logits = linear(params["W_hp"], hidden.reshape(B * S, -1), params.get("b_p"))
        probs = softmax(logits).reshape(B, S, -1)
        return probs, traces, current, hidden

    def forward_window(self, window: Window, params: Params | None = None):
        """Single window: returns (p_0, per-step probs (S, C), traces)."""
        self._check_window(window)
        probs, traces, _, _ = self.forward_batch(window.features[None], params)
        return probs[0, -1], probs[0], traces

    def _check_window(self, window: Window) -> None:
        S = self.config.past_steps + 1
        if window.features.shape != (S, self.config.feature_dim):
            raise ShapeError(
                f"window features shape {window.features.shape} does not match "
                f"config (T+1={S}, feature_dim={self.config.feature_dim})"
            )

    # -- loss and exact gradients ----------------------------------------

    def evaluate_loss(self, feats: np.ndarray, labels: np.ndarray,
                      params: Params | None = None) -> float:
        """Batch-mean combined loss; forward only (the fd oracle's view)."""
        params = self.params if params is None else params
        probs, traces, current, _ = self.forward_batch(feats, params)
        pe, xe = self._embedding_arrays(traces, current)
        breakdown, _ = combined_loss(probs, labels, self.config.loss_config(), pe, xe)
        return breakdown.total

    def _embedding_arrays(self, traces, current):
        if self.config.variant != "idu":
            return None, None
        # row T uses the canonical x_0 embedding shared by every step
        xe = np.stack([t.embed_t.xe for t in traces[:-1]] + [current.xe], axis=1)
        pe = np.stack([t.embed_t.pe for t in traces[:-1]] + [current.pe], axis=1)
        return pe, xe

    def loss_and_grads(self, feats: np.ndarray, labels: np.ndarray,
                       params: Params | None = None) -> tuple[LossBreakdown, Params]:
        """Backprop through time over a batch; grads are batch means."""
        params = self.params if params is None else params
        labels = np.asarray(labels, dtype=np.int64)
        probs, traces, current, hidden = self.forward_batch(feats, params)
        pe, xe = self._embedding_arrays(traces, current)
        breakdown, lg = combined_loss(probs, labels, self.config.loss_config(), pe, xe)

        grads = self.zero_grads()
        B, S, _ = feats.shape
        cell = self.cell
        is_idu = self.config.variant == "idu"
        d_state = cell.zero_state_grads(cell.zero_state(B))
        d_xe0_total = None
        for i in reversed(range(S)):
            d_logit = lg.d_logits[:, i, :]
            grads["W_hp"] += d_logit.T @ hidden[:, i, :]
            if self.config.bias:
                grads["b_p"] += d_logit.sum(axis=0)
            dh = d_state.h + d_logit @ params["W_hp"]
            d_state = CellState(h=dh, c=d_state.c)
            if is_idu:
                last = i == S - 1
                sg = cell.backward(
                    params, traces[i], d_state, grads,
                    d_xe_t_extra=None if last else lg.d_xe[:, i, :],
                    d_pe_t_logits=None if last else lg.d_pe_logits[:, i, :],
                )
                d_xe0_total = sg.d_xe0 if d_xe0_total is None else d_xe0_total + sg.d_xe0
            else:
                sg = cell.backward(params, traces[i], d_state, grads)
            d_state = sg.d_state
        if is_idu:
            # shared x_0 path: recurrence uses from every step, contrastive
            # partners, and the once-per-window classifier term
            d_xe0_total = d_xe0_total + lg.d_xe0
            cell.embed_backward(params, current, d_xe0_total, lg.d_pe_logits[:, -1, :], grads)
        return breakdown, grads


def stack_windows(windows_list: Sequence[Window]) -> tuple[np.ndarray, np.ndarray]:
    feats = np.stack([w.features for w in windows_list])
    labels = np.stack([w.labels for w in windows_list])
    return feats, labels


# ---------------------------------------------------------------------------
# training
# ---------------------------------------------------------------------------

LOG_HEADER = "epoch,step,loss_total,loss_a,loss_e,loss_c,lr,seed"


@dataclass
class EpochStats:
    epoch: int
    mean_total: float
    mean_action: float
    mean_embedding: float
    mean_contrastive: float
    mcap: float | None = None


@dataclass
class TrainResult:
    epochs: list[EpochStats] = field(default_factory=list)
    log_rows: list[str] = field(default_factory=list)


def _balanced_batch(step: int, spe: int, batch: int,
                    action_order: np.ndarray, bg_order: np.ndarray) -> np.ndarray:
    """Indices for one batch: ceil(b/2) action + floor(b/2) background
    windows, consuming each per-epoch shuffled pool cyclically."""
    pos = step % spe
    n_act = (batch + 1) // 2
    n_bg = batch // 2
    act = np.take(action_order, np.arange(pos * n_act, (pos + 1) * n_act), mode="wrap")
    bg = np.take(bg_order, np.arange(pos * n_bg, (pos + 1) * n_bg), mode="wrap")
    return np.concatenate([act, bg])


def train(model: Model, train_windows: Sequence[Window], *,
          epochs: int | None = None, max_steps: int | None = None,
          eval_windows: Sequence[Window] | None = None,
          log_path=None) -> TrainResult:
    """Plain SGD: theta <- theta - lr * grad(batch-mean loss).

    Batches balance the current-chunk class: half action, half background
    (odd sizes give the extra slot to actions). If either pool is empty
    the sampler falls back to unbalanced draws over all windows. The
    global step counter doubles as the batch id in error messages and is
    persisted in checkpoints, so training can resume mid-epoch.

    Returns per-epoch statistics (with eval-split mcAP when eval_windows
    is given) and writes one CSV row per step to log_path if set.
    """
    if not train_windows:
        raise ConfigError("train: dataset is empty")
    cfg = model.config
    epochs = cfg.epochs if epochs is None else epochs
    n = len(train_windows)
    spe = math.ceil(n / cfg.batch_size)
    target = model.step + max_steps if max_steps is not None else epochs * spe

    labels_c0 = np.array([w.current_label for w in train_windows])
    action_pool = np.flatnonzero(labels_c0 != 0)
    bg_pool = np.flatnonzero(labels_c0 == 0)
    balanced = action_pool.size > 0 and bg_pool.size > 0

    feats_all, labels_all = stack_windows(train_windows)
    result = TrainResult()
    log_fh = open(log_path, "w", encoding="utf-8", newline="\n") if log_path else None
    try:
        if log_fh:
            log_fh.write(LOG_HEADER + "\n")
        cached_epoch = -1
        orders = None
        epoch_acc: list[LossBreakdown] = []
        while model.step < target:
            step = model.step
            epoch = step // spe
            if epoch != cached_epoch:
                gen = rng_for(cfg.seed, "epoch", epoch)
                if balanced:
                    orders = (gen.permutation(action_pool), gen.permutation(bg_pool))
                else:
                    orders = (gen.permutation(n),)
                cached_epoch = epoch
            if balanced:
                idx = _balanced_batch(step, spe, cfg.batch_size, orders[0], orders[1])
            else:
                pos = step % spe
                idx = np.take(orders[0], np.arange(pos * cfg.batch_size,
                                                   (pos + 1) * cfg.batch_size), mode="wrap")
            breakdown, grads = model.loss_and_grads(feats_all[idx], labels_all[idx])
            if not np.isfinite(breakdown.total):
                raise NumericalError(
                    f"non-finite training loss at batch id {step} (epoch {epoch})"
                )
            for name, g in grads.items():
                model.params[name] -= cfg.lr * g
            model.step = step + 1
            epoch_acc.append(breakdown)
            row = (
                f"{epoch},{step},{breakdown.total!r},{breakdown.action!r},"
                f"{breakdown.embedding!r},{breakdown.contrastive!r},{cfg.lr!r},{cfg.seed}"
            )
            result.log_rows.append(row)
            if log_fh:
                log_fh.write(row + "\n")
            end_of_epoch = model.step % spe == 0 or model.step == target
            if end_of_epoch and epoch_acc:
                mcap = None
                if eval_windows is not None and model.step % spe == 0:
                    mcap = evaluate_mcap(model, eval_windows)
                result.epochs.append(EpochStats(
                    epoch=epoch,
                    mean_total=float(np.mean([b.total for b in epoch_acc])),
                    mean_action=float(np.mean([b.action for b in epoch_acc])),
                    mean_embedding=float(np.mean([b.embedding for b in epoch_acc])),
                    mean_contrastive=float(np.mean([b.contrastive for b in epoch_acc])),
                    mcap=mcap,
                ))
                epoch_acc = []
    finally:
        if log_fh:
            log_fh.close()
    return result


# ---------------------------------------------------------------------------
# scoring and streaming prediction
# ---------------------------------------------------------------------------


def score_windows(model: Model, windows_list: Sequence[Window],
                  batch: int = 256) -> np.ndarray:
    """Current-step probabilities p_0 for many windows, batched: (N, C)."""
    out = []
    for lo in range(0, len(windows_list), batch):
        feats, _ = stack_windows(windows_list[lo:lo + batch])
        probs, _, _, _ = model.forward_batch(feats)
        out.append(probs[:, -1, :])
    return np.concatenate(out) if out else np.zeros((0, model.config.num_classes))


def predict_stream(model: Model, chunks: Iterable[np.ndarray]) -> Iterator[np.ndarray]:
    """One probability vector per arriving chunk, never touching the future.

    Each arrival re-runs the window ending at that chunk from a zero
    hidden state (the current-input variants need x_0 = the newest chunk,
    so the unroll cannot be shared across arrivals). Warm-up windows are
    left-padded with zero feature vectors labeled background.
    """
    cfg = model.config
    S = cfg.past_steps + 1
    buf = np.zeros((S, cfg.feature_dim))
    for x in chunks:
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (cfg.feature_dim,):
            raise ShapeError(
                f"predict_stream: chunk has shape {x.shape}, expected ({cfg.feature_dim},)"
            )
        buf = np.vstack([buf[1:], x[None]])
        probs, _, _, _ = model.forward_batch(buf[None])
        yield probs[0, -1]


def evaluate_mcap(model: Model, eval_windows: Sequence[Window]) -> float | None:
    """Streaming mcAP over a window list (one window per chunk position)."""
    probs = score_windows(model, eval_windows)
    labels = np.array([w.current_label for w in eval_windows])
    report = metrics.evaluate_scores(probs, labels, model.config.num_actions)
    return report.mean_cap


# ---------------------------------------------------------------------------
# gate inspection
# ---------------------------------------------------------------------------


@dataclass
class GateRow:
    window_id: str
    t: int  # step offset, -T..0
    mean_z: float
    mean_r: float
    relevance: int


def gate_rows(model: Model, windows_list: Sequence[Window],
              batch: int = 256) -> list[GateRow]:
    """Per-step hidden-mean gate activations with the window's relevance
    flags; gru/gru-ci/idu only."""
    if model.config.variant not in GATED_VARIANTS:
        raise ConfigError(
            f"variant {model.config.variant!r} exposes no reset/update gates"
        )
    S = model.config.past_steps + 1
    rows: list[GateRow] = []
    for lo in range(0, len(windows_list), batch):
        chunk = windows_list[lo:lo + batch]
        feats, _ = stack_windows(chunk)
        _, traces, _, _ = model.forward_batch(feats)
        mean_z = np.stack([tr.z.mean(axis=1) for tr in traces], axis=1)  # (B, S)
        mean_r = np.stack([tr.r.mean(axis=1) for tr in traces], axis=1)
        for b, w in enumerate(chunk):
            rel = w.relevance()
            for i in range(S):
                rows.append(GateRow(
                    window_id=w.window_id, t=i - (S - 1),
                    mean_z=float(mean_z[b, i]), mean_r=float(mean_r[b, i]),
                    relevance=int(rel[i]),
                ))
    return rows


def update_gate_gap(model: Model, windows_list: Sequence[Window]) -> float:
    """Mean update-gate value on relevant minus irrelevant chunks, over
    windows whose current chunk is an action. The gap is the headline
    statistic of the gate-behavior experiment."""
    action_windows = [w for w in windows_list if w.current_label != 0]
    rel_vals: list[float] = []
    irr_vals: list[float] = []
    for row in gate_rows(model, action_windows):
        (rel_vals if row.relevance == 1 else irr_vals).append(row.mean_z)
    if not rel_vals or not irr_vals:
        raise ConfigError("update_gate_gap: need both relevant and irrelevant chunks")
    return float(np.mean(rel_vals) - np.mean(irr_vals))
