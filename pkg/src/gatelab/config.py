"""Flat key=value run configuration shared by the CLI and the service.

One file drives the model, the trainer, and the synthetic generator.
Lines are "key=value"; blank lines and lines starting with # are ignored.
Every key is validated by a typed parser; unknown or duplicate keys are
rejected. Booleans are the literals true/false. Defaults reproduce the
desk-scale benchmark (T=15, K=5, feature_dim=32, hidden=embed=16, ~4k
training windows) with the standard hyperparameters lr=0.01,
batch_size=128, margin=1.0, alpha=0.3.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from pathlib import Path

from .datagen import SyntheticSpec
from .errors import ConfigError
from .network import IdnConfig


@dataclass
class RunConfig:
    # model / training
    variant: str = "idu"
    past_steps: int = 15
    frames_per_chunk: int = 6
    num_actions: int = 5
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
    # synthetic benchmark
    train_videos: int = 250
    eval_videos: int = 80
    sequence_length: int = 16
    prototype_scale: float = 1.0
    noise_sigma: float = 0.6
    relevant_min: int = 1
    relevant_max: int = 16
    background_window_rate: float = 0.25
    prefix_background_rate: float = 0.5
    background_modes: int = 64
    # optional paths (CLI flags take precedence)
    data: str = ""
    out: str = ""
    checkpoint: str = ""

    def to_idn_config(self) -> IdnConfig:
        return IdnConfig(
            variant=self.variant, past_steps=self.past_steps,
            frames_per_chunk=self.frames_per_chunk, num_actions=self.num_actions,
            feature_dim=self.feature_dim, appearance_dim=self.appearance_dim,
            motion_dim=self.motion_dim, hidden_dim=self.hidden_dim,
            embed_dim=self.embed_dim, bias=self.bias, lr=self.lr,
            batch_size=self.batch_size, epochs=self.epochs, seed=self.seed,
            alpha=self.alpha, margin=self.margin,
        )

    def to_synthetic_spec(self, split: str) -> SyntheticSpec:
        if split == "train":
            num_videos = self.train_videos
        elif split == "eval":
            num_videos = self.eval_videos
        else:
            raise ConfigError(f"unknown synthetic split {split!r}")
        return SyntheticSpec(
            num_actions=self.num_actions, feature_dim=self.feature_dim,
            prototype_scale=self.prototype_scale, noise_sigma=self.noise_sigma,
            sequence_length=self.sequence_length, relevant_min=self.relevant_min,
            relevant_max=self.relevant_max,
            background_window_rate=self.background_window_rate,
            prefix_background_rate=self.prefix_background_rate,
            background_modes=self.background_modes,
            num_videos=num_videos, seed=self.seed,
        )


_FIELD_TYPES = {f.name: f.type for f in fields(RunConfig)}


def _coerce(key: str, raw: str, where: str) -> object:
    ftype = _FIELD_TYPES[key]
    try:
        if ftype == "bool":
            if raw not in ("true", "false"):
                raise ValueError("expected true or false")
            return raw == "true"
        if ftype == "int":
            return int(raw)
        if ftype == "float":
            return float(raw)
        return raw
    except ValueError as exc:
        raise ConfigError(f"{where}: bad value for {key!r}: {raw!r} ({exc})") from exc


def parse_config_text(text: str, where: str = "<config>") -> RunConfig:
    values: dict[str, object] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{where}:{lineno}: expected key=value, got {line!r}")
        key, raw = (part.strip() for part in line.split("=", 1))
        if key not in _FIELD_TYPES:
            raise ConfigError(f"{where}:{lineno}: unknown config key {key!r}")
        if key in values:
            raise ConfigError(f"{where}:{lineno}: duplicate config key {key!r}")
        values[key] = _coerce(key, raw, f"{where}:{lineno}")
    return RunConfig(**values)


def load_config(path: str | Path | None) -> RunConfig:
    """Parse a config file; None yields all defaults."""
    if path is None:
        return RunConfig()
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    return parse_config_text(path.read_text(encoding="utf-8"), where=str(path))


def apply_overrides(cfg: RunConfig, overrides: dict[str, str],
                    where: str = "<override>") -> RunConfig:
    """Re-validate string overrides (CLI --set, service requests) onto cfg."""
    values = {f.name: getattr(cfg, f.name) for f in fields(RunConfig)}
    for key, raw in overrides.items():
        if key not in _FIELD_TYPES:
            raise ConfigError(f"{where}: unknown config key {key!r}")
        values[key] = _coerce(key, str(raw), where)
    return RunConfig(**values)


def write_config(cfg: RunConfig, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for f in fields(RunConfig):
            v = getattr(cfg, f.name)
            if isinstance(v, bool):
                v = "true" if v else "false"
            elif isinstance(v, float):
                v = repr(v)
            fh.write(f"{f.name}={v}\n")
