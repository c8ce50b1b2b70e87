"""Frame-level ranking metrics: average precision, calibrated average
precision, their means over action classes, and the portion-of-action
protocol.

All metrics are rank statistics over (probability, is_positive) rows.
Rows are sorted by descending score with ties broken by original row
index (stable), so results are deterministic and invariant to input
permutation only up to tie order; the tie rule is part of the contract.

Calibrated precision reweights true positives by w = #negatives /
#positives (overridable), which makes a random ranking score ~0.5
regardless of class balance:

    cPrec(i) = w TP(i) / (w TP(i) + FP(i))
    cAP = sum_i cPrec(i) [i positive] / N_P

Portion-of-action protocol (documented choice): detection runs over all
frames first; for decile d and class k the rows keep every frame with a
different ground-truth label as negatives, keep class-k frames whose
within-instance offset falls in decile d as positives, drop other
class-k frames, and recompute w from the filtered rows.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DataError

Rows = list[tuple[float, bool]]


def _ranked_positives(rows: Rows) -> tuple[np.ndarray, int]:
    """Stable descending sort; returns the positive mask in rank order."""
    if not rows:
        raise DataError("metric has no rows")
    scores = np.array([r[0] for r in rows], dtype=np.float64)
    pos = np.array([bool(r[1]) for r in rows])
    if np.any((scores < 0.0) | (scores > 1.0)):
        raise DataError("probabilities must lie in [0, 1]")
    order = np.argsort(-scores, kind="stable")
    n_pos = int(pos.sum())
    if n_pos == 0:
        raise DataError("metric is undefined for a class with no positive rows")
    return pos[order], n_pos


def average_precision(rows: Rows) -> float:
    """AP = sum over positive ranks i of Prec(i), divided by N_P."""
    ranked, n_pos = _ranked_positives(rows)
    tp = np.cumsum(ranked)
    i = np.arange(1, len(ranked) + 1)
    prec = tp / i
    return float(prec[ranked].sum() / n_pos)


def calibrated_average_precision(rows: Rows, w: float | None = None) -> float:
    """cAP with calibration ratio w; defaults to #neg/#pos of the rows."""
    ranked, n_pos = _ranked_positives(rows)
    if w is None:
        w = (len(ranked) - n_pos) / n_pos
    if w < 0:
        raise DataError(f"calibration ratio w must be >= 0, got {w}")
    tp = np.cumsum(ranked)
    fp = np.arange(1, len(ranked) + 1) - tp
    denom = w * tp + fp
    cprec = np.divide(w * tp, denom, out=np.zeros_like(denom, dtype=np.float64),
                      where=denom > 0)
    return float(cprec[ranked].sum() / n_pos)


def mean_over_classes(per_class: dict[int, float]) -> float:
    """Arithmetic mean over action classes (callers exclude background)."""
    if not per_class:
        raise DataError("mean over an empty class set is undefined")
    return float(np.mean(list(per_class.values())))


@dataclass
class MetricsReport:
    per_class_ap: dict[int, float]
    per_class_cap: dict[int, float]
    mean_ap: float
    mean_cap: float
    skipped_classes: list[int] = field(default_factory=list)


def class_rows(probs: np.ndarray, labels: np.ndarray, class_id: int) -> Rows:
    """(probability of class_id, ground truth == class_id) per frame."""
    return [(float(p[class_id]), int(l) == class_id) for p, l in zip(probs, labels)]


def evaluate_scores(probs: np.ndarray, labels: np.ndarray, num_actions: int) -> MetricsReport:
    """AP and cAP per action class 1..K plus their means; background
    (class 0) is excluded from the means. Classes without positives are
    skipped and reported."""
    if probs.ndim != 2 or probs.shape[1] != num_actions + 1:
        raise DataError(
            f"evaluate_scores: probs shape {probs.shape} does not match "
            f"{num_actions}+1 classes"
        )
    if len(labels) != len(probs):
        raise DataError("evaluate_scores: probs and labels length mismatch")
    ap: dict[int, float] = {}
    cap: dict[int, float] = {}
    skipped = []
    for k in range(1, num_actions + 1):
        rows = class_rows(probs, labels, k)
        if not any(r[1] for r in rows):
            skipped.append(k)
            continue
        ap[k] = average_precision(rows)
        cap[k] = calibrated_average_precision(rows)
    if not ap:
        raise DataError("evaluate_scores: no action class has positive frames")
    return MetricsReport(ap, cap, mean_over_classes(ap), mean_over_classes(cap), skipped)


# ---------------------------------------------------------------------------
# portion-of-action protocol
# ---------------------------------------------------------------------------


@dataclass
class ActionInstance:
    video_index: int
    label: int
    start: int  # inclusive frame offset within the video
    end: int  # inclusive


def find_instances(video_labels: list[np.ndarray]) -> list[ActionInstance]:
    """Maximal runs of identical nonzero labels, per video."""
    out = []
    for vi, labels in enumerate(video_labels):
        start = 0
        for j in range(1, len(labels) + 1):
            if j == len(labels) or labels[j] != labels[start]:
                if labels[start] != 0:
                    out.append(ActionInstance(vi, int(labels[start]), start, j - 1))
                start = j
    return out


def decile_of(offset: int, length: int) -> int:
    """Decile of a frame at 0-based offset within an instance of `length`
    frames; deciles partition the instance (a 10-frame instance puts
    frame j in decile j)."""
    if not 0 <= offset < length:
        raise DataError(f"offset {offset} outside instance of length {length}")
    return min(offset * 10 // length, 9)


@dataclass
class PortionReport:
    mcap: list[float | None]  # one entry per decile 0..9, None if undefined
    skipped: list[tuple[int, int]] = field(default_factory=list)  # (decile, class)


def portion_curve(video_probs: list[np.ndarray], video_labels: list[np.ndarray],
                  num_actions: int) -> PortionReport:
    """mcAP restricted to each decile of ground-truth action instances.

    video_probs[i] is (M_i, K+1) online per-frame probabilities for video
    i; video_labels[i] the matching labels. Classes with no positive in a
    decile are skipped (reported); a decile where every class is skipped
    yields None.
    """
    if len(video_probs) != len(video_labels):
        raise DataError("portion_curve: probs/labels video count mismatch")
    instances = find_instances(video_labels)
    # decile id per (video, frame): -1 for background frames
    deciles = [np.full(len(l), -1, dtype=np.int64) for l in video_labels]
    for inst in instances:
        length = inst.end - inst.start + 1
        for off in range(length):
            deciles[inst.video_index][inst.start + off] = decile_of(off, length)

    mcap: list[float | None] = []
    skipped: list[tuple[int, int]] = []
    for d in range(10):
        per_class: dict[int, float] = {}
        for k in range(1, num_actions + 1):
            rows: Rows = []
            n_pos = 0
            for vi in range(len(video_probs)):
                probs, labels, decs = video_probs[vi], video_labels[vi], deciles[vi]
                for j in range(len(labels)):
                    if labels[j] == k:
                        if decs[j] == d:
                            rows.append((float(probs[j][k]), True))
                            n_pos += 1
                        # class-k frames outside the decile are dropped
                    else:
                        rows.append((float(probs[j][k]), False))
            if n_pos == 0:
                skipped.append((d, k))
                continue
            per_class[k] = calibrated_average_precision(rows)
        mcap.append(mean_over_classes(per_class) if per_class else None)
    return PortionReport(mcap=mcap, skipped=skipped)


# ---------------------------------------------------------------------------
# score-table and report files
# ---------------------------------------------------------------------------


def write_score_rows(path: str | Path, frame_ids: list[str], probs: np.ndarray,
                     labels: np.ndarray, num_actions: int) -> None:
    """Tab-separated rows: frame_id, class_id, probability, gt_label."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for i, fid in enumerate(frame_ids):
            for k in range(1, num_actions + 1):
                fh.write(f"{fid}\t{k}\t{float(probs[i][k])!r}\t{int(labels[i])}\n")


def read_score_rows(path: str | Path) -> dict[int, Rows]:
    """Parse the score-table format back into per-class rows."""
    per_class: dict[int, Rows] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 4:
                raise DataError(f"{path}:{lineno}: expected 4 fields, got {len(parts)}")
            try:
                k = int(parts[1])
                p = float(parts[2])
                gt = int(parts[3])
            except ValueError as exc:
                raise DataError(f"{path}:{lineno}: unparsable field ({exc})") from exc
            per_class.setdefault(k, []).append((p, gt == k))
    return per_class


def write_metrics_csv(path: str | Path, report: MetricsReport) -> None:
    """Per-class rows plus a summary row: kind,class,ap,cap."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("kind,class,ap,cap\n")
        for k in sorted(report.per_class_ap):
            fh.write(f"class,{k},{report.per_class_ap[k]!r},{report.per_class_cap[k]!r}\n")
        for k in report.skipped_classes:
            fh.write(f"skipped,{k},,\n")
        fh.write(f"summary,all,{report.mean_ap!r},{report.mean_cap!r}\n")


def write_portion_csv(path: str | Path, report: PortionReport) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("decile,mcap\n")
        for d, value in enumerate(report.mcap):
            fh.write(f"{d},{'' if value is None else repr(value)}\n")
        for d, k in report.skipped:
            fh.write(f"# skipped decile {d} class {k}: no positive frames\n")
