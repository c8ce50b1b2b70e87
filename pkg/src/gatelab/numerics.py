"""Dense float64 primitives: matrix-vector products, activations, seeded
randomness, and the central finite-difference oracle used to verify every
analytic backward pass in this package.

Conventions
-----------
All values are numpy float64. A "vector" is a 1-D array of length D; most
operations also accept a batch of vectors as a 2-D array of shape (B, D)
and apply row-wise. Weight matrices are (rows, cols) = (out_dim, in_dim).
Finiteness is enforced at module boundaries (dataset load, initialization,
per-batch loss checks), not inside every arithmetic call.
"""

from __future__ import annotations

import zlib
from typing import Callable, Mapping

import numpy as np

from .errors import NumericalError, ShapeError

Params = dict[str, np.ndarray]


def linear(W: np.ndarray, x: np.ndarray, b: np.ndarray | None = None) -> np.ndarray:
    """y_i = sum_j W[i,j] x[j] (+ b[i]); x may be (D,) or a batch (B, D)."""
    if W.ndim != 2:
        raise ShapeError(f"linear: W must be 2-D, got shape {W.shape}")
    if x.shape[-1] != W.shape[1]:
        raise ShapeError(
            f"linear: W is {W.shape[0]}x{W.shape[1]} but x has length {x.shape[-1]}"
        )
    y = x @ W.T
    if b is not None:
        if b.shape != (W.shape[0],):
            raise ShapeError(
                f"linear: b has shape {b.shape}, expected ({W.shape[0]},)"
            )
        y = y + b
    return y


def sigmoid(x: np.ndarray) -> np.ndarray:
    """Logistic sigmoid, overflow-safe for large |x|."""
    out = np.empty_like(x, dtype=np.float64)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def tanh(x: np.ndarray) -> np.ndarray:
    return np.tanh(x)


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


def softmax(x: np.ndarray) -> np.ndarray:
    """Row-wise softmax with max-subtraction stabilization."""
    shifted = x - np.max(x, axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / np.sum(e, axis=-1, keepdims=True)


def rng_for(seed: int, *labels) -> np.random.Generator:
    """Seeded counter-based generator (Philox) for a labeled substream.

    The same (seed, labels) always yields the same draw sequence on every
    platform: the entropy pool is [seed, crc32(str(label))...] fed to
    numpy's SeedSequence, and Philox is a fixed counter-based algorithm.
    Substreams with different labels are independent, which lets training
    derive per-epoch shuffles as pure functions of (seed, epoch).
    """
    entropy = [int(seed) & 0xFFFFFFFFFFFFFFFF]
    entropy += [zlib.crc32(str(label).encode("utf-8")) for label in labels]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))


def glorot_uniform(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    """Uniform init in +-sqrt(6/(fan_in+fan_out)); keeps gates unsaturated."""
    limit = np.sqrt(6.0 / (rows + cols))
    return rng.uniform(-limit, limit, size=(rows, cols))


def check_finite(name: str, arr: np.ndarray) -> np.ndarray:
    """Raise NumericalError naming `name` if arr has NaN/Inf entries."""
    if not np.all(np.isfinite(arr)):
        bad = np.argwhere(~np.isfinite(np.atleast_1d(arr)))
        raise NumericalError(f"{name} contains non-finite entries at {bad[:5].tolist()}")
    return arr


def fd_gradient(
    f: Callable[[Params], float],
    params: Mapping[str, np.ndarray],
    eps: float = 1e-5,
) -> Params:
    """Central-difference gradient estimate of a scalar function of params.

    Entry-by-entry (f(theta+eps) - f(theta-eps)) / (2 eps). f must be a
    deterministic function of the parameter values. This is the oracle
    against which the analytic backward passes are checked, so it never
    shares code with them.
    """
    if eps <= 0:
        raise ValueError(f"fd_gradient: eps must be positive, got {eps}")
    work = {k: np.array(v, dtype=np.float64, copy=True) for k, v in params.items()}
    grads = {k: np.zeros_like(v) for k, v in work.items()}
    for name, arr in work.items():
        flat = arr.reshape(-1)
        gflat = grads[name].reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + eps
            f_plus = float(f(work))
            flat[i] = orig - eps
            f_minus = float(f(work))
            flat[i] = orig
            if not (np.isfinite(f_plus) and np.isfinite(f_minus)):
                coord = np.unravel_index(i, arr.shape)
                raise NumericalError(
                    f"fd_gradient: non-finite f at {name}{list(coord)} "
                    f"(f+={f_plus}, f-={f_minus})"
                )
            gflat[i] = (f_plus - f_minus) / (2.0 * eps)
    return grads


def relative_errors(analytic: Params, numeric: Params, floor: float = 1e-4) -> dict[str, float]:
    """Max per-coordinate |a-f| / max(|a|,|f|,floor) for each parameter.

    The floor keeps finite-difference noise (~1e-10 absolute at eps=1e-5)
    from inflating ratios on near-zero coordinates; absolute defects of
    1e-9 or larger still register.
    """
    out = {}
    for name in analytic:
        a = analytic[name]
        n = numeric[name]
        denom = np.maximum(np.maximum(np.abs(a), np.abs(n)), floor)
        out[name] = float(np.max(np.abs(a - n) / denom)) if a.size else 0.0
    return out
