"""Versioned binary checkpoints with bitwise round-trip.

Layout (all integers little-endian):

    magic    8 bytes  b"GATELAB\\0"
    version  u32      currently 1
    cfg_len  u32      byte length of the config block
    config   UTF-8    "key=value" lines: every IdnConfig field plus "step"
    n_arrays u32
    per array:
        name_len u16, name UTF-8, ndim u8, dims u32 each,
        data float64 little-endian, C order

Loading rebuilds the model from the embedded config and verifies that the
stored names and shapes match it exactly, naming any offending matrix.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .errors import CheckpointError
from .network import IdnConfig, Model

MAGIC = b"GATELAB\x00"
VERSION = 1


def save_checkpoint(model: Model, path: str | Path) -> None:
    kv = model.config.to_kv()
    kv["step"] = str(model.step)
    config_block = "".join(f"{k}={v}\n" for k, v in kv.items()).encode("utf-8")
    names = sorted(model.params)
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", VERSION))
        fh.write(struct.pack("<I", len(config_block)))
        fh.write(config_block)
        fh.write(struct.pack("<I", len(names)))
        for name in names:
            arr = np.ascontiguousarray(model.params[name], dtype="<f8")
            encoded = name.encode("utf-8")
            fh.write(struct.pack("<H", len(encoded)))
            fh.write(encoded)
            fh.write(struct.pack("<B", arr.ndim))
            for dim in arr.shape:
                fh.write(struct.pack("<I", dim))
            fh.write(arr.tobytes())


def _read_exact(fh, n: int, what: str) -> bytes:
    data = fh.read(n)
    if len(data) != n:
        raise CheckpointError(f"corrupt checkpoint: truncated while reading {what}")
    return data


def load_checkpoint(path: str | Path) -> Model:
    path = Path(path)
    if not path.exists():
        raise CheckpointError(f"checkpoint not found: {path}")
    with open(path, "rb") as fh:
        if _read_exact(fh, len(MAGIC), "magic") != MAGIC:
            raise CheckpointError(f"{path}: not a checkpoint file (bad magic)")
        (version,) = struct.unpack("<I", _read_exact(fh, 4, "version"))
        if version != VERSION:
            raise CheckpointError(
                f"{path}: unsupported checkpoint version {version} (expected {VERSION})"
            )
        (cfg_len,) = struct.unpack("<I", _read_exact(fh, 4, "config length"))
        kv: dict[str, str] = {}
        for line in _read_exact(fh, cfg_len, "config").decode("utf-8").splitlines():
            if not line:
                continue
            if "=" not in line:
                raise CheckpointError(f"{path}: malformed config line {line!r}")
            key, value = line.split("=", 1)
            kv[key] = value
        try:
            step = int(kv.pop("step"))
        except (KeyError, ValueError) as exc:
            raise CheckpointError(f"{path}: bad or missing step counter") from exc
        try:
            config = IdnConfig.from_kv(kv)
        except Exception as exc:
            raise CheckpointError(f"{path}: bad embedded config: {exc}") from exc

        (n_arrays,) = struct.unpack("<I", _read_exact(fh, 4, "array count"))
        params: dict[str, np.ndarray] = {}
        for _ in range(n_arrays):
            (name_len,) = struct.unpack("<H", _read_exact(fh, 2, "name length"))
            name = _read_exact(fh, name_len, "name").decode("utf-8")
            (ndim,) = struct.unpack("<B", _read_exact(fh, 1, f"ndim of {name}"))
            shape = tuple(
                struct.unpack("<I", _read_exact(fh, 4, f"dim of {name}"))[0]
                for _ in range(ndim)
            )
            count = int(np.prod(shape)) if shape else 1
            data = _read_exact(fh, count * 8, f"data of {name}")
            params[name] = np.frombuffer(data, dtype="<f8").reshape(shape).copy()
        if fh.read(1):
            raise CheckpointError(f"{path}: trailing bytes after last array")

    # Model.__init__ validates names and shapes against the config
    try:
        return Model(config, params=params, step=step)
    except Exception as exc:
        raise CheckpointError(f"{path}: {exc}") from exc
