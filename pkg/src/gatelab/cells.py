"""Recurrent cell variants with exact forward and reverse-mode passes.

Five cells share one calling convention:

    simple   h_t = tanh(W_xh x_t + W_hh h_{t-1})
    lstm     standard input/forget/output-gated cell with cell state
    gru      r_t = sig(W_hr h_{t-1} + W_xr x_t)
             z_t = sig(W_xz x_t + W_hz h_{t-1})
             cand = tanh(W_xc x_t + W_cc (r_t * h_{t-1}))
             h_t = (1 - z_t) * h_{t-1} + z_t * cand
    gru-ci   as gru, but both gates also see the window's current chunk:
             r_t = sig(W_hr h_{t-1} + W_x0r x_0)
             z_t = sig(W_xtz x_t + W_x0z x_0)       (raw features)
    idu      gru-ci on learned embeddings: xe = relu(W_xe x) is shared
             between the x_t and x_0 paths, a classifier pe = softmax(W_ep xe)
             supervises the embedding, and the gates read xe_t / xe_0:
             r_t = sig(W_hr h_{t-1} + W_x0r xe_0)   (no x_t term)
             z_t = sig(W_xtz xe_t + W_x0z xe_0)     (no h term)
             cand = tanh(W_xtc xe_t + W_cc (r_t * h_{t-1}))

All arrays are float64. Every op accepts a single vector (D,) or a batch
(B, D); parameter gradients are summed over the batch rows, so callers
scale upstream gradients by 1/B for batch means. Backward passes are
checked coordinate-wise against numerics.fd_gradient in the test suite.

Biases are optional (on by default) and initialized to zero; disable them
for closed-form parameter counting. Forward passes accept a
`gate_overrides` mapping (e.g. {"z": 0.0}) that clamps a gate to a fixed
value; this exists for invariant tests, since finite weights never
produce gates of exactly 0 or 1. Backward on an overridden trace is
undefined.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .errors import ShapeError
from .numerics import Params, glorot_uniform, linear, relu, sigmoid, softmax, tanh

VARIANTS = ("simple", "lstm", "gru", "gru-ci", "idu")

# Variants whose forward pass consumes the window's current chunk x_0.
CURRENT_INPUT_VARIANTS = ("gru-ci", "idu")

# Variants exposing r/z gate traces for inspection.
GATED_VARIANTS = ("gru", "gru-ci", "idu")


@dataclass
class CellState:
    """Recurrent state: hidden vector h, plus cell vector c for lstm."""

    h: np.ndarray
    c: np.ndarray | None = None


@dataclass
class EmbedTrace:
    """Cached activations of one embedding pass xe = relu(W_xe x + b_e)."""

    x: np.ndarray
    mask: np.ndarray  # pre-activation > 0, the relu subgradient
    xe: np.ndarray
    pe: np.ndarray  # softmax(W_ep xe + b_ep)


@dataclass
class StepTrace:
    """Cached activations of one forward step, as needed for backward.

    Gate fields are None for variants that lack them. Embedding traces are
    populated for idu only; `embed_0` references the per-window trace
    shared by every step.
    """

    variant: str
    x: np.ndarray
    h_prev: np.ndarray
    h: np.ndarray
    r: np.ndarray | None = None
    z: np.ndarray | None = None
    h_prev_reset: np.ndarray | None = None
    h_cand: np.ndarray | None = None
    # lstm extras
    c_prev: np.ndarray | None = None
    c: np.ndarray | None = None
    gate_i: np.ndarray | None = None
    gate_f: np.ndarray | None = None
    gate_o: np.ndarray | None = None
    cand_g: np.ndarray | None = None
    # gru-ci extra: the raw current chunk used by the gates
    x0: np.ndarray | None = None
    # idu extras
    embed_t: EmbedTrace | None = None
    embed_0: EmbedTrace | None = None


@dataclass
class StepGrads:
    """Gradients returned by one backward step."""

    d_state: CellState
    d_x: np.ndarray | None = None
    d_x0: np.ndarray | None = None
    d_xe0: np.ndarray | None = None  # idu: contribution to the shared xe_0


def _gw(da: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Gradient wrt W of y = x @ W.T, summed over batch rows."""
    if da.ndim == 1:
        return np.outer(da, x)
    return da.T @ x


def _gb(da: np.ndarray) -> np.ndarray:
    return da if da.ndim == 1 else da.sum(axis=0)


def _apply_override(gate: np.ndarray, overrides, name: str) -> np.ndarray:
    if overrides and name in overrides:
        forced = np.asarray(overrides[name], dtype=np.float64)
        return np.broadcast_to(forced, gate.shape).copy()
    return gate


class Cell:
    """Shared plumbing: parameter bookkeeping, init, and validation."""

    variant = ""
    uses_current = False

    def __init__(self, input_dim: int, hidden_dim: int, bias: bool = True):
        if input_dim <= 0 or hidden_dim <= 0:
            raise ShapeError(
                f"{self.variant}: dims must be positive, got input={input_dim} hidden={hidden_dim}"
            )
        self.input_dim = input_dim
        self.hidden_dim = hidden_dim
        self.bias = bias

    # -- parameters ------------------------------------------------------

    def weight_shapes(self) -> dict[str, tuple[int, int]]:
        raise NotImplementedError

    def bias_shapes(self) -> dict[str, tuple[int]]:
        raise NotImplementedError

    def param_shapes(self) -> dict[str, tuple]:
        shapes: dict[str, tuple] = dict(self.weight_shapes())
        if self.bias:
            shapes.update(self.bias_shapes())
        return shapes

    def init_params(self, rng: np.random.Generator) -> Params:
        """Glorot-uniform weights, zero biases; draw order is the sorted
        weight-name order so streams are stable across code edits."""
        params: Params = {}
        for name in sorted(self.weight_shapes()):
            rows, cols = self.weight_shapes()[name]
            params[name] = glorot_uniform(rng, rows, cols)
        if self.bias:
            for name, shape in self.bias_shapes().items():
                params[name] = np.zeros(shape)
        return params

    def param_count(self) -> int:
        return sum(int(np.prod(s)) for s in self.param_shapes().values())

    def validate_params(self, params: Mapping[str, np.ndarray]) -> None:
        expected = self.param_shapes()
        for name, shape in expected.items():
            if name not in params:
                raise ShapeError(f"{self.variant}: missing parameter {name}")
            if tuple(params[name].shape) != tuple(shape):
                raise ShapeError(
                    f"{self.variant}: parameter {name} has shape {params[name].shape}, "
                    f"expected {tuple(shape)}"
                )
        for name in params:
            if name not in expected:
                raise ShapeError(f"{self.variant}: unexpected parameter {name}")

    def _b(self, params: Mapping[str, np.ndarray], name: str):
        return params[name] if self.bias else None

    # -- state -----------------------------------------------------------

    def zero_state(self, batch: int | None = None) -> CellState:
        shape = (self.hidden_dim,) if batch is None else (batch, self.hidden_dim)
        return CellState(h=np.zeros(shape))

    def zero_state_grads(self, like: CellState) -> CellState:
        return CellState(h=np.zeros_like(like.h))

    # -- per-window current-chunk context (overridden where used) --------

    def prepare_current(self, params: Mapping[str, np.ndarray], x0: np.ndarray | None):
        return None

    def zero_grads(self) -> Params:
        return {name: np.zeros(shape) for name, shape in self.param_shapes().items()}


class SimpleCell(Cell):
    """Elman cell: h_t = tanh(W_xh x_t + W_hh h_{t-1})."""

    variant = "simple"

    def weight_shapes(self):
        H, D = self.hidden_dim, self.input_dim
        return {"W_xh": (H, D), "W_hh": (H, H)}

    def bias_shapes(self):
        return {"b_h": (self.hidden_dim,)}

    def forward(self, params, state, x_t, current=None, gate_overrides=None):
        h_prev = state.h
        h = tanh(linear(params["W_xh"], x_t, self._b(params, "b_h")) + linear(params["W_hh"], h_prev))
        return CellState(h=h), StepTrace(variant=self.variant, x=x_t, h_prev=h_prev, h=h)

    def backward(self, params, trace, d_state, grads):
        da = d_state.h * (1.0 - trace.h ** 2)
        grads["W_xh"] += _gw(da, trace.x)
        grads["W_hh"] += _gw(da, trace.h_prev)
        if self.bias:
            grads["b_h"] += _gb(da)
        dh_prev = da @ params["W_hh"]
        dx = da @ params["W_xh"]
        return StepGrads(d_state=CellState(h=dh_prev), d_x=dx)


class LstmCell(Cell):
    """Standard LSTM with input/forget/output gates and a cell state."""

    variant = "lstm"

    def weight_shapes(self):
        H, D = self.hidden_dim, self.input_dim
        shapes = {}
        for g in ("i", "f", "o", "g"):
            shapes[f"W_x{g}"] = (H, D)
            shapes[f"W_h{g}"] = (H, H)
        return shapes

    def bias_shapes(self):
        H = self.hidden_dim
        return {f"b_{g}": (H,) for g in ("i", "f", "o", "g")}

    def zero_state(self, batch=None):
        shape = (self.hidden_dim,) if batch is None else (batch, self.hidden_dim)
        return CellState(h=np.zeros(shape), c=np.zeros(shape))

    def zero_state_grads(self, like):
        return CellState(h=np.zeros_like(like.h), c=np.zeros_like(like.c))

    def forward(self, params, state, x_t, current=None, gate_overrides=None):
        h_prev, c_prev = state.h, state.c
        pre = {
            g: linear(params[f"W_x{g}"], x_t, self._b(params, f"b_{g}"))
            + linear(params[f"W_h{g}"], h_prev)
            for g in ("i", "f", "o", "g")
        }
        i = _apply_override(sigmoid(pre["i"]), gate_overrides, "i")
        f = _apply_override(sigmoid(pre["f"]), gate_overrides, "f")
        o = _apply_override(sigmoid(pre["o"]), gate_overrides, "o")
        g = tanh(pre["g"])
        c = f * c_prev + i * g
        h = o * tanh(c)
        trace = StepTrace(
            variant=self.variant, x=x_t, h_prev=h_prev, h=h,
            c_prev=c_prev, c=c, gate_i=i, gate_f=f, gate_o=o, cand_g=g,
        )
        return CellState(h=h, c=c), trace

    def backward(self, params, trace, d_state, grads):
        dh, dc_up = d_state.h, d_state.c
        tc = tanh(trace.c)
        do = dh * tc
        dc = dc_up + dh * trace.gate_o * (1.0 - tc ** 2)
        di = dc * trace.cand_g
        df = dc * trace.c_prev
        dg = dc * trace.gate_i
        dc_prev = dc * trace.gate_f
        das = {
            "i": di * trace.gate_i * (1.0 - trace.gate_i),
            "f": df * trace.gate_f * (1.0 - trace.gate_f),
            "o": do * trace.gate_o * (1.0 - trace.gate_o),
            "g": dg * (1.0 - trace.cand_g ** 2),
        }
        dh_prev = np.zeros_like(dh)
        dx = np.zeros_like(trace.x)
        for g, da in das.items():
            grads[f"W_x{g}"] += _gw(da, trace.x)
            grads[f"W_h{g}"] += _gw(da, trace.h_prev)
            if self.bias:
                grads[f"b_{g}"] += _gb(da)
            dh_prev += da @ params[f"W_h{g}"]
            dx += da @ params[f"W_x{g}"]
        return StepGrads(d_state=CellState(h=dh_prev, c=dc_prev), d_x=dx)


class GruCell(Cell):
    """Reset/update-gated cell; both gates read h_{t-1} and x_t."""

    variant = "gru"

    def weight_shapes(self):
        H, D = self.hidden_dim, self.input_dim
        return {
            "W_hr": (H, H), "W_xr": (H, D),
            "W_xz": (H, D), "W_hz": (H, H),
            "W_xc": (H, D), "W_cc": (H, H),
        }

    def bias_shapes(self):
        H = self.hidden_dim
        return {"b_r": (H,), "b_z": (H,), "b_c": (H,)}

    def forward(self, params, state, x_t, current=None, gate_overrides=None):
        h_prev = state.h
        r = sigmoid(linear(params["W_hr"], h_prev) + linear(params["W_xr"], x_t, self._b(params, "b_r")))
        r = _apply_override(r, gate_overrides, "r")
        h_prev_reset = r * h_prev
        z = sigmoid(linear(params["W_xz"], x_t, self._b(params, "b_z")) + linear(params["W_hz"], h_prev))
        z = _apply_override(z, gate_overrides, "z")
        cand = tanh(linear(params["W_xc"], x_t, self._b(params, "b_c")) + linear(params["W_cc"], h_prev_reset))
        h = (1.0 - z) * h_prev + z * cand
        trace = StepTrace(
            variant=self.variant, x=x_t, h_prev=h_prev, h=h,
            r=r, z=z, h_prev_reset=h_prev_reset, h_cand=cand,
        )
        return CellState(h=h), trace

    def backward(self, params, trace, d_state, grads):
        dh = d_state.h
        dz = dh * (trace.h_cand - trace.h_prev)
        dcand = dh * trace.z
        dh_prev = dh * (1.0 - trace.z)

        da_c = dcand * (1.0 - trace.h_cand ** 2)
        grads["W_xc"] += _gw(da_c, trace.x)
        grads["W_cc"] += _gw(da_c, trace.h_prev_reset)
        if self.bias:
            grads["b_c"] += _gb(da_c)
        dx = da_c @ params["W_xc"]
        dh_prev_reset = da_c @ params["W_cc"]

        dr = dh_prev_reset * trace.h_prev
        dh_prev += dh_prev_reset * trace.r
        da_r = dr * trace.r * (1.0 - trace.r)
        grads["W_hr"] += _gw(da_r, trace.h_prev)
        grads["W_xr"] += _gw(da_r, trace.x)
        if self.bias:
            grads["b_r"] += _gb(da_r)
        dh_prev += da_r @ params["W_hr"]
        dx += da_r @ params["W_xr"]

        da_z = dz * trace.z * (1.0 - trace.z)
        grads["W_xz"] += _gw(da_z, trace.x)
        grads["W_hz"] += _gw(da_z, trace.h_prev)
        if self.bias:
            grads["b_z"] += _gb(da_z)
        dh_prev += da_z @ params["W_hz"]
        dx += da_z @ params["W_xz"]

        return StepGrads(d_state=CellState(h=dh_prev), d_x=dx)


class GruCiCell(Cell):
    """GRU whose gates also condition on the window's current chunk x_0,
    operating on raw (non-embedded) features."""

    variant = "gru-ci"
    uses_current = True

    def weight_shapes(self):
        H, D = self.hidden_dim, self.input_dim
        return {
            "W_hr": (H, H), "W_x0r": (H, D),
            "W_xtz": (H, D), "W_x0z": (H, D),
            "W_xc": (H, D), "W_cc": (H, H),
        }

    def bias_shapes(self):
        H = self.hidden_dim
        return {"b_r": (H,), "b_z": (H,), "b_c": (H,)}

    def prepare_current(self, params, x0):
        if x0 is None:
            raise ShapeError("gru-ci: forward requires the window's current chunk x_0")
        return x0

    def forward(self, params, state, x_t, current=None, gate_overrides=None):
        if current is None:
            raise ShapeError("gru-ci: forward requires prepare_current(params, x_0)")
        x0 = current
        h_prev = state.h
        r = sigmoid(linear(params["W_hr"], h_prev) + linear(params["W_x0r"], x0, self._b(params, "b_r")))
        r = _apply_override(r, gate_overrides, "r")
        h_prev_reset = r * h_prev
        z = sigmoid(linear(params["W_xtz"], x_t, self._b(params, "b_z")) + linear(params["W_x0z"], x0))
        z = _apply_override(z, gate_overrides, "z")
        cand = tanh(linear(params["W_xc"], x_t, self._b(params, "b_c")) + linear(params["W_cc"], h_prev_reset))
        h = (1.0 - z) * h_prev + z * cand
        trace = StepTrace(
            variant=self.variant, x=x_t, h_prev=h_prev, h=h,
            r=r, z=z, h_prev_reset=h_prev_reset, h_cand=cand, x0=x0,
        )
        return CellState(h=h), trace

    def backward(self, params, trace, d_state, grads):
        dh = d_state.h
        dz = dh * (trace.h_cand - trace.h_prev)
        dcand = dh * trace.z
        dh_prev = dh * (1.0 - trace.z)

        da_c = dcand * (1.0 - trace.h_cand ** 2)
        grads["W_xc"] += _gw(da_c, trace.x)
        grads["W_cc"] += _gw(da_c, trace.h_prev_reset)
        if self.bias:
            grads["b_c"] += _gb(da_c)
        dx = da_c @ params["W_xc"]
        dh_prev_reset = da_c @ params["W_cc"]

        dr = dh_prev_reset * trace.h_prev
        dh_prev += dh_prev_reset * trace.r
        da_r = dr * trace.r * (1.0 - trace.r)
        grads["W_hr"] += _gw(da_r, trace.h_prev)
        grads["W_x0r"] += _gw(da_r, trace.x0)
        if self.bias:
            grads["b_r"] += _gb(da_r)
        dh_prev += da_r @ params["W_hr"]
        dx0 = da_r @ params["W_x0r"]

        da_z = dz * trace.z * (1.0 - trace.z)
        grads["W_xtz"] += _gw(da_z, trace.x)
        grads["W_x0z"] += _gw(da_z, trace.x0)
        if self.bias:
            grads["b_z"] += _gb(da_z)
        dx += da_z @ params["W_xtz"]
        dx0 += da_z @ params["W_x0z"]

        return StepGrads(d_state=CellState(h=dh_prev), d_x=dx, d_x0=dx0)


class IduCell(Cell):
    """Current-chunk-conditioned gated cell on supervised relu embeddings.

    One projection W_xe and one classifier W_ep are shared between the
    x_t and x_0 paths. The reset gate sees (h_{t-1}, xe_0) only, so it is
    invariant to x_t; the update gate sees (xe_t, xe_0) only, so it is
    invariant to h_{t-1}. Both invariances are bitwise and tested.
    """

    variant = "idu"
    uses_current = True

    def __init__(self, input_dim, hidden_dim, embed_dim, num_classes, bias=True):
        super().__init__(input_dim, hidden_dim, bias)
        if embed_dim <= 0 or num_classes <= 1:
            raise ShapeError(
                f"idu: embed_dim must be positive and num_classes > 1, "
                f"got embed={embed_dim} classes={num_classes}"
            )
        self.embed_dim = embed_dim
        self.num_classes = num_classes  # K + 1 including background

    def weight_shapes(self):
        H, D, E, C = self.hidden_dim, self.input_dim, self.embed_dim, self.num_classes
        return {
            "W_xe": (E, D), "W_ep": (C, E),
            "W_hr": (H, H), "W_x0r": (H, E),
            "W_xtz": (H, E), "W_x0z": (H, E),
            "W_xtc": (H, E), "W_cc": (H, H),
        }

    def bias_shapes(self):
        H, E, C = self.hidden_dim, self.embed_dim, self.num_classes
        return {"b_e": (E,), "b_ep": (C,), "b_r": (H,), "b_z": (H,), "b_c": (H,)}

    def embed(self, params, x: np.ndarray) -> EmbedTrace:
        """xe = relu(W_xe x), pe = softmax(W_ep xe); shared for x_t and x_0."""
        pre = linear(params["W_xe"], x, self._b(params, "b_e"))
        xe = relu(pre)
        pe = softmax(linear(params["W_ep"], xe, self._b(params, "b_ep")))
        return EmbedTrace(x=x, mask=pre > 0.0, xe=xe, pe=pe)

    def embed_backward(self, params, trace: EmbedTrace, d_xe, d_pe_logits, grads):
        """Push gradients through the classifier and projection.

        d_xe is the gradient arriving at the embedding (recurrence plus
        contrastive terms); d_pe_logits is the gradient at the classifier
        logits (softmax+cross-entropy gives pe - y). Returns the gradient
        wrt the raw input features.
        """
        total_d_xe = np.zeros_like(trace.xe) + d_xe
        if d_pe_logits is not None:
            grads["W_ep"] += _gw(d_pe_logits, trace.xe)
            if self.bias:
                grads["b_ep"] += _gb(d_pe_logits)
            total_d_xe += d_pe_logits @ params["W_ep"]
        da = total_d_xe * trace.mask
        grads["W_xe"] += _gw(da, trace.x)
        if self.bias:
            grads["b_e"] += _gb(da)
        return da @ params["W_xe"]

    def prepare_current(self, params, x0):
        if x0 is None:
            raise ShapeError("idu: forward requires the window's current chunk x_0")
        return self.embed(params, x0)

    def forward(self, params, state, x_t, current=None, gate_overrides=None):
        if current is None:
            raise ShapeError("idu: forward requires prepare_current(params, x_0)")
        embed_0: EmbedTrace = current
        embed_t = self.embed(params, x_t)
        xe_t, xe_0 = embed_t.xe, embed_0.xe
        h_prev = state.h
        r = sigmoid(linear(params["W_hr"], h_prev) + linear(params["W_x0r"], xe_0, self._b(params, "b_r")))
        r = _apply_override(r, gate_overrides, "r")
        h_prev_reset = r * h_prev
        z = sigmoid(linear(params["W_xtz"], xe_t, self._b(params, "b_z")) + linear(params["W_x0z"], xe_0))
        z = _apply_override(z, gate_overrides, "z")
        cand = tanh(linear(params["W_xtc"], xe_t, self._b(params, "b_c")) + linear(params["W_cc"], h_prev_reset))
        h = (1.0 - z) * h_prev + z * cand
        trace = StepTrace(
            variant=self.variant, x=x_t, h_prev=h_prev, h=h,
            r=r, z=z, h_prev_reset=h_prev_reset, h_cand=cand,
            embed_t=embed_t, embed_0=embed_0,
        )
        return CellState(h=h), trace

    def backward(self, params, trace, d_state, grads, d_xe_t_extra=None, d_pe_t_logits=None):
        """One reverse step. Gradients into the shared xe_0 are returned in
        StepGrads.d_xe0 and must be accumulated by the caller across steps
        before a single embed_backward call on the x_0 path; the x_t path
        (its embedding is private to this step) is completed here, with
        optional loss-side terms d_xe_t_extra / d_pe_t_logits folded in.
        """
        dh = d_state.h
        dz = dh * (trace.h_cand - trace.h_prev)
        dcand = dh * trace.z
        dh_prev = dh * (1.0 - trace.z)

        da_c = dcand * (1.0 - trace.h_cand ** 2)
        grads["W_xtc"] += _gw(da_c, trace.embed_t.xe)
        grads["W_cc"] += _gw(da_c, trace.h_prev_reset)
        if self.bias:
            grads["b_c"] += _gb(da_c)
        d_xe_t = da_c @ params["W_xtc"]
        dh_prev_reset = da_c @ params["W_cc"]

        dr = dh_prev_reset * trace.h_prev
        dh_prev += dh_prev_reset * trace.r
        da_r = dr * trace.r * (1.0 - trace.r)
        grads["W_hr"] += _gw(da_r, trace.h_prev)
        grads["W_x0r"] += _gw(da_r, trace.embed_0.xe)
        if self.bias:
            grads["b_r"] += _gb(da_r)
        dh_prev += da_r @ params["W_hr"]
        d_xe0 = da_r @ params["W_x0r"]

        da_z = dz * trace.z * (1.0 - trace.z)
        grads["W_xtz"] += _gw(da_z, trace.embed_t.xe)
        grads["W_x0z"] += _gw(da_z, trace.embed_0.xe)
        if self.bias:
            grads["b_z"] += _gb(da_z)
        d_xe_t += da_z @ params["W_xtz"]
        d_xe0 += da_z @ params["W_x0z"]

        if d_xe_t_extra is not None:
            d_xe_t = d_xe_t + d_xe_t_extra
        dx = self.embed_backward(params, trace.embed_t, d_xe_t, d_pe_t_logits, grads)

        return StepGrads(d_state=CellState(h=dh_prev), d_x=dx, d_xe0=d_xe0)


def make_cell(variant: str, input_dim: int, hidden_dim: int,
              embed_dim: int | None = None, num_classes: int | None = None,
              bias: bool = True) -> Cell:
    if variant == "simple":
        return SimpleCell(input_dim, hidden_dim, bias)
    if variant == "lstm":
        return LstmCell(input_dim, hidden_dim, bias)
    if variant == "gru":
        return GruCell(input_dim, hidden_dim, bias)
    if variant == "gru-ci":
        return GruCiCell(input_dim, hidden_dim, bias)
    if variant == "idu":
        if embed_dim is None or num_classes is None:
            raise ShapeError("idu: embed_dim and num_classes are required")
        return IduCell(input_dim, hidden_dim, embed_dim, num_classes, bias)
    raise ShapeError(f"unknown cell variant {variant!r}; expected one of {VARIANTS}")


def parameter_report(input_dim: int, hidden_dim: int, embed_dim: int,
                     num_actions: int, bias: bool = False) -> dict:
    """Exact parameter counts for the gru and idu units, each computed two
    independent ways (closed-form arithmetic vs a tally over instantiated
    shapes), plus the unit ratio under three counting conventions.

    The commonly quoted reference ratio of 0.753 for this pair of units at
    input_dim=3072, classes=20+1 is printed for comparison; none of the
    conventions below reproduces it (they give ~0.57), so it is reported,
    not asserted. Conventions: "unit" counts recurrence matrices (for idu
    including the embedding projection W_xe); "unit_with_classifier" adds
    idu's embedding classifier W_ep; "with_head" adds the (K+1) x H
    classification head to both sides.
    """
    D, H, E, C = input_dim, hidden_dim, embed_dim, num_actions + 1
    gru = GruCell(D, H, bias=bias)
    idu = IduCell(D, H, E, C, bias=bias)
    gru_tally = gru.param_count()
    idu_tally = idu.param_count()

    gru_closed = 3 * H * H + 3 * H * D
    idu_closed = E * D + C * E + 4 * H * E + 2 * H * H
    if bias:
        gru_closed += 3 * H
        idu_closed += E + C + 3 * H
    head = C * H + (C if bias else 0)

    idu_unit_no_ep = idu_tally - C * E - (C if bias else 0)
    return {
        "input_dim": D, "hidden_dim": H, "embed_dim": E,
        "num_classes": C, "bias": bias,
        "gru_closed_form": gru_closed,
        "gru_tally": gru_tally,
        "idu_closed_form": idu_closed,
        "idu_tally": idu_tally,
        "head_params": head,
        "ratio_unit": idu_unit_no_ep / gru_tally,
        "ratio_unit_with_classifier": idu_tally / gru_tally,
        "ratio_with_head": (idu_tally + head) / (gru_tally + head),
        "reference_ratio": 0.753,
        "note": (
            "the commonly quoted reference ratio 0.753 is not reproduced by "
            "any counting convention above; see README on conventions"
        ),
    }
