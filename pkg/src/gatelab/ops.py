"""Operator-level runs shared by the CLI and the HTTP service: dataset
generation, training, evaluation, gate inspection, and gradient checking.
Each run reads/writes plain-text artifacts, so an independent script in
any ecosystem can verify the outputs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import checkpoint as ckpt
from . import datagen, metrics, network
from .config import RunConfig
from .errors import ConfigError, DataError
from .network import IdnConfig, Model
from .numerics import fd_gradient, relative_errors, rng_for

GRADCHECK_TOLERANCE = 1e-5


@dataclass
class GenResult:
    manifest: Path
    counts: dict[str, int]


def run_gen(cfg: RunConfig, out_dir: str | Path, chunks: int | None = None) -> GenResult:
    """Write train/eval record files plus a manifest into out_dir.

    chunks, when given, is an exact chunk budget for the train split.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    counts: dict[str, int] = {}
    splits: dict[str, tuple[str, int]] = {}
    for split in ("train", "eval"):
        spec = cfg.to_synthetic_spec(split)
        budget = chunks if split == "train" else None
        ds = datagen.generate_synthetic(spec, split=split, chunk_budget=budget)
        fname = f"{split}.tsv"
        n = datagen.write_records(ds, out / fname)
        counts[split] = n
        splits[split] = (fname, n)
    manifest = datagen.write_manifest(out, cfg.feature_dim, cfg.num_actions, splits)
    return GenResult(manifest=manifest, counts=counts)


@dataclass
class TrainRunResult:
    checkpoint: Path
    log: Path
    steps: int
    final_loss: float
    epochs: list[network.EpochStats]
    final_mcap: float | None = None


def run_train(cfg: RunConfig, manifest_path: str | Path, out_dir: str | Path,
              *, max_steps: int | None = None,
              eval_mcap: bool = False,
              resume_from: str | Path | None = None) -> TrainRunResult:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest = datagen.load_manifest(manifest_path)
    train_ds = datagen.load_features(manifest, "train")
    idn_cfg = cfg.to_idn_config()
    _check_compat(idn_cfg, train_ds, str(manifest.path))
    if resume_from is not None:
        model = ckpt.load_checkpoint(resume_from)
        if model.config != idn_cfg:
            raise ConfigError(
                "resume checkpoint config does not match the requested config"
            )
    else:
        model = Model(idn_cfg)
    train_windows = datagen.windows(train_ds, idn_cfg.past_steps)
    eval_windows = None
    if eval_mcap and "eval" in manifest.splits:
        eval_ds = datagen.load_features(manifest, "eval")
        eval_windows = datagen.windows(eval_ds, idn_cfg.past_steps)
    log_path = out / "train_log.csv"
    result = network.train(
        model, train_windows, max_steps=max_steps,
        eval_windows=eval_windows, log_path=log_path,
    )
    ckpt_path = out / "model.ckpt"
    ckpt.save_checkpoint(model, ckpt_path)
    final_loss = result.epochs[-1].mean_total if result.epochs else float("nan")
    final_mcap = result.epochs[-1].mcap if result.epochs else None
    return TrainRunResult(
        checkpoint=ckpt_path, log=log_path, steps=model.step,
        final_loss=final_loss, epochs=result.epochs, final_mcap=final_mcap,
    )


def _check_compat(cfg: IdnConfig, ds: datagen.Dataset, where: str) -> None:
    if ds.feature_dim != cfg.feature_dim:
        raise DataError(
            f"{where}: dataset feature_dim {ds.feature_dim} does not match "
            f"model feature_dim {cfg.feature_dim}"
        )
    if ds.num_actions != cfg.num_actions:
        raise DataError(
            f"{where}: dataset num_actions {ds.num_actions} does not match "
            f"model num_actions {cfg.num_actions}"
        )


@dataclass
class EvalRunResult:
    report: metrics.MetricsReport
    portion: metrics.PortionReport
    num_frames: int
    metrics_csv: Path | None = None
    portion_csv: Path | None = None
    scores_tsv: Path | None = None


def run_eval(checkpoint_path: str | Path, manifest_path: str | Path,
             split: str = "eval", out_dir: str | Path | None = None) -> EvalRunResult:
    """Stream every video of the split, score each chunk online, and
    compute frame-level AP/cAP/mAP/mcAP plus the portion curve."""
    model = ckpt.load_checkpoint(checkpoint_path)
    ds = datagen.load_features(manifest_path, split)
    _check_compat(model.config, ds, str(manifest_path))
    if ds.num_chunks() == 0:
        raise DataError(f"{manifest_path}: split {split!r} has no chunks")
    ws = datagen.windows(ds, model.config.past_steps)
    probs = network.score_windows(model, ws)
    labels = np.array([w.current_label for w in ws])
    report = metrics.evaluate_scores(probs, labels, model.config.num_actions)

    video_probs, video_labels = [], []
    pos = 0
    for video in ds.videos:
        m = len(video)
        video_probs.append(probs[pos:pos + m])
        video_labels.append(np.array([c.label for c in video], dtype=np.int64))
        pos += m
    portion = metrics.portion_curve(video_probs, video_labels, model.config.num_actions)

    result = EvalRunResult(report=report, portion=portion, num_frames=len(ws))
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        result.metrics_csv = out / "metrics.csv"
        metrics.write_metrics_csv(result.metrics_csv, report)
        result.portion_csv = out / "portion.csv"
        metrics.write_portion_csv(result.portion_csv, portion)
        result.scores_tsv = out / "scores.tsv"
        frame_ids = [w.window_id for w in ws]
        metrics.write_score_rows(result.scores_tsv, frame_ids, probs, labels,
                                 model.config.num_actions)
    return result


@dataclass
class GatesRunResult:
    csv: Path
    rows: int
    gate_gap: float | None


def run_inspect_gates(checkpoint_path: str | Path, manifest_path: str | Path,
                      split: str, out_dir: str | Path) -> GatesRunResult:
    model = ckpt.load_checkpoint(checkpoint_path)
    ds = datagen.load_features(manifest_path, split)
    _check_compat(model.config, ds, str(manifest_path))
    ws = datagen.windows(ds, model.config.past_steps)
    rows = network.gate_rows(model, ws)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / "gates.csv"
    with open(csv_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("window_id,t,mean_z,mean_r,relevance\n")
        for r in rows:
            fh.write(f"{r.window_id},{r.t},{r.mean_z!r},{r.mean_r!r},{r.relevance}\n")
    try:
        gap = network.update_gate_gap(model, ws)
    except ConfigError:
        gap = None
    return GatesRunResult(csv=csv_path, rows=len(rows), gate_gap=gap)


# ---------------------------------------------------------------------------
# gradient checking
# ---------------------------------------------------------------------------


@dataclass
class GradcheckEntry:
    variant: str
    matrix: str
    max_rel_err: float
    passed: bool


@dataclass
class GradcheckReport:
    entries: list[GradcheckEntry] = field(default_factory=list)

    @property
    def all_passed(self) -> bool:
        return all(e.passed for e in self.entries)


def _toy_config(variant: str, seed: int) -> IdnConfig:
    return IdnConfig(
        variant=variant, past_steps=3, num_actions=2, feature_dim=3,
        hidden_dim=4, embed_dim=4, bias=True, seed=seed,
    )


def gradcheck_variant(variant: str, seed: int,
                      corrupt_params=None) -> list[GradcheckEntry]:
    """Analytic vs central finite-difference gradients of the full window
    loss on a hidden-4, 2-action, T=3 instance. corrupt_params is a test
    hook: a callable applied to the analytic gradients before comparison
    (a negative control must fail, naming the matrix)."""
    cfg = _toy_config(variant, seed)
    model = Model(cfg)
    rng = rng_for(seed, "gradcheck", variant)
    S = cfg.past_steps + 1
    feats = rng.normal(0.0, 1.0, size=(1, S, cfg.feature_dim))
    labels = rng.integers(0, cfg.num_classes, size=(1, S))
    _, analytic = model.loss_and_grads(feats, labels)
    if corrupt_params is not None:
        corrupt_params(analytic)
    numeric = fd_gradient(lambda p: model.evaluate_loss(feats, labels, p), model.params)
    errs = relative_errors(analytic, numeric)
    return [
        GradcheckEntry(variant, name, errs[name], errs[name] < GRADCHECK_TOLERANCE)
        for name in sorted(errs)
    ]


def run_gradcheck(variants=None, seed: int = 7) -> GradcheckReport:
    report = GradcheckReport()
    from .cells import VARIANTS

    for variant in variants or VARIANTS:
        if variant not in VARIANTS:
            raise ConfigError(f"unknown variant {variant!r}")
        report.entries.extend(gradcheck_variant(variant, seed))
    return report
