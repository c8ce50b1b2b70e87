"""Loss terms for window training and their local gradients.

Three terms combine into the per-window objective

    L = L_a + alpha * (L_e + L_c)

where L_a sums the classification cross-entropy of the shared head over
every step t = -T..0, L_e supervises the embedding classifier, and L_c is
a contrastive hinge on (xe_t, xe_0) pairs.

Temporal accumulation convention (documented choice, tested): L_e and L_c
average their per-step terms over the past steps t = -T..-1 so magnitudes
do not grow with window length, and the current chunk contributes exactly
once per window: L_e adds one cross-entropy term for pe_0, and L_c's
(x_0, x_0) self pair is identically zero. With T = 0 only the pe_0 term
remains.

Gradients returned by combined_loss are pre-scaled: alpha and the 1/T and
1/B (batch mean) factors are folded in, so callers feed them straight into
backpropagation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ShapeError

LOG_FLOOR = 1e-12  # probability floor inside log() only; gradients ignore it


@dataclass
class LossConfig:
    """Balance weight alpha, contrastive margin m, and class count K+1."""

    alpha: float = 0.3
    margin: float = 1.0
    num_classes: int = 2

    def __post_init__(self):
        if self.alpha < 0:
            raise ConfigError(f"alpha must be >= 0, got {self.alpha}")
        if self.margin <= 0:
            raise ConfigError(f"margin must be > 0, got {self.margin}")
        if self.num_classes < 2:
            raise ConfigError(f"num_classes must be >= 2, got {self.num_classes}")


def one_hot(label: int, num_classes: int) -> np.ndarray:
    if not 0 <= label < num_classes:
        raise ShapeError(f"label {label} out of range for {num_classes} classes")
    y = np.zeros(num_classes)
    y[label] = 1.0
    return y


def cross_entropy(p: np.ndarray, y: np.ndarray) -> tuple[float, np.ndarray]:
    """-sum_k y_k log(p_k) for a probability vector p and one-hot y.

    Returns the loss and its gradient with respect to the *logits* that
    produced p through a softmax, which is simply p - y. The log is
    floored at 1e-12; the gradient formula is exact whenever the floor is
    inactive.
    """
    if p.shape != y.shape:
        raise ShapeError(f"cross_entropy: p has shape {p.shape}, y has shape {y.shape}")
    if not (np.all((y == 0.0) | (y == 1.0)) and np.isclose(y.sum(), 1.0)):
        raise ShapeError("cross_entropy: y must be one-hot")
    loss = -float(np.sum(y * np.log(np.maximum(p, LOG_FLOOR))))
    return loss, p - y


def contrastive_loss(
    xe_a: np.ndarray, xe_b: np.ndarray, label_a: int, label_b: int, margin: float
) -> tuple[float, np.ndarray, np.ndarray]:
    """Squared-distance pull for same-label pairs, hinged push otherwise.

        same label:  D2(a, b)
        different:   max(0, margin - D2(a, b))

    with D2 the squared Euclidean distance. Returns (loss, d_a, d_b). On
    the hinge's flat region (D2 >= margin) both gradients are exactly
    zero, including at the kink itself.
    """
    if xe_a.shape != xe_b.shape:
        raise ShapeError(
            f"contrastive_loss: embeddings differ in shape {xe_a.shape} vs {xe_b.shape}"
        )
    diff = xe_a - xe_b
    d2 = float(np.dot(diff, diff))
    if label_a == label_b:
        return d2, 2.0 * diff, -2.0 * diff
    if d2 < margin:
        return margin - d2, -2.0 * diff, 2.0 * diff
    return 0.0, np.zeros_like(diff), np.zeros_like(diff)


@dataclass
class LossBreakdown:
    total: float
    action: float
    embedding: float
    contrastive: float


@dataclass
class WindowLossGrads:
    """Local gradients of the combined loss, pre-scaled by alpha, 1/T, 1/B.

    d_logits:    (B, T+1, C) grad at the head logits of every step (L_a).
    d_pe_logits: (B, T+1, C) grad at the embedding-classifier logits; row
                 T is the once-per-window pe_0 term. None without pe.
    d_xe:        (B, T+1, E) grad arriving directly at xe_t from the
                 contrastive term (past rows only). None without xe.
    d_xe0:       (B, E) grad arriving at the shared xe_0 from all of its
                 contrastive pairings. None without xe.
    """

    d_logits: np.ndarray
    d_pe_logits: np.ndarray | None = None
    d_xe: np.ndarray | None = None
    d_xe0: np.ndarray | None = None


def combined_loss(
    probs: np.ndarray,
    labels: np.ndarray,
    cfg: LossConfig,
    pe: np.ndarray | None = None,
    xe: np.ndarray | None = None,
) -> tuple[LossBreakdown, WindowLossGrads]:
    """Combined objective over one window or a batch of windows.

    probs:  (T+1, C) or (B, T+1, C) per-step head distributions, row
            index T holding the current step t=0.
    labels: (T+1,) or (B, T+1) integer class ids.
    pe, xe: embedding-classifier distributions and embeddings in matching
            layout; pass both for the embedding-supervised variant, omit
            both otherwise.

    Batch losses are means over windows; within a window L_a sums over
    steps. Setting alpha = 0 makes total equal action exactly.
    """
    single = probs.ndim == 2
    if single:
        probs = probs[None]
        labels = np.asarray(labels)[None]
        pe = None if pe is None else pe[None]
        xe = None if xe is None else xe[None]
    if (pe is None) != (xe is None):
        raise ShapeError("combined_loss: pe and xe must be given together")

    B, steps, C = probs.shape
    if labels.shape != (B, steps):
        raise ShapeError(
            f"combined_loss: labels shape {labels.shape} does not match probs {probs.shape}"
        )
    if np.any((labels < 0) | (labels >= C)):
        raise ShapeError(f"combined_loss: labels out of range for {C} classes")
    T = steps - 1
    bi = np.arange(B)[:, None]
    ti = np.arange(steps)[None, :]

    # L_a: cross-entropy of the head at every step, summed over the window.
    picked = np.maximum(probs[bi, ti, labels], LOG_FLOOR)
    action = float(np.mean(np.sum(-np.log(picked), axis=1)))
    d_logits = probs.copy()
    d_logits[bi, ti, labels] -= 1.0
    d_logits /= B

    embedding = 0.0
    contr = 0.0
    d_pe_logits = d_xe = d_xe0 = None
    if pe is not None:
        if pe.shape != (B, steps, C):
            raise ShapeError(f"combined_loss: pe shape {pe.shape} != {(B, steps, C)}")
        picked_e = np.maximum(pe[bi, ti, labels], LOG_FLOOR)
        ce_e = -np.log(picked_e)  # (B, steps)
        d_pe_logits = pe.copy()
        d_pe_logits[bi, ti, labels] -= 1.0
        per_window_e = ce_e[:, T].copy()
        scale = np.zeros(steps)
        scale[T] = 1.0
        if T > 0:
            per_window_e += ce_e[:, :T].mean(axis=1)
            scale[:T] = 1.0 / T
        embedding = float(per_window_e.mean())
        d_pe_logits *= (cfg.alpha / B) * scale[None, :, None]

        E = xe.shape[-1]
        if xe.shape != (B, steps, E):
            raise ShapeError(f"combined_loss: xe shape {xe.shape} != 3-D batch layout")
        d_xe = np.zeros_like(xe)
        d_xe0 = np.zeros((B, E))
        if T > 0:
            diff = xe[:, :T, :] - xe[:, T:T + 1, :]  # (B, T, E)
            d2 = np.sum(diff * diff, axis=2)  # (B, T)
            same = labels[:, :T] == labels[:, T:T + 1]
            hinge_active = (~same) & (d2 < cfg.margin)
            per_pair = np.where(same, d2, np.where(hinge_active, cfg.margin - d2, 0.0))
            contr = float(per_pair.mean(axis=1).mean())
            sign = np.where(same, 1.0, np.where(hinge_active, -1.0, 0.0))
            g = (cfg.alpha / (B * T)) * (2.0 * sign)[:, :, None] * diff
            d_xe[:, :T, :] = g
            d_xe0 = -np.sum(g, axis=1)
        # the (x_0, x_0) self pair at t=0 is identically zero with zero grad

    total = action + cfg.alpha * (embedding + contr)
    if single:
        d_logits = d_logits[0]
        d_pe_logits = None if d_pe_logits is None else d_pe_logits[0]
        d_xe = None if d_xe is None else d_xe[0]
        d_xe0 = None if d_xe0 is None else d_xe0[0]
    return (
        LossBreakdown(total=total, action=action, embedding=embedding, contrastive=contr),
        WindowLossGrads(d_logits=d_logits, d_pe_logits=d_pe_logits, d_xe=d_xe, d_xe0=d_xe0),
    )
