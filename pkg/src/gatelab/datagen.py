"""Synthetic streaming-feature benchmark and feature-file ingestion.

A dataset is a list of videos; a video is an ordered list of chunks, each
carrying a feature vector and a class label (0 = background, 1..K =
actions). The synthetic generator emits window-sized videos whose trailing
L chunks share the final chunk's label while earlier chunks are drawn
from background and *other* actions, so the relevance structure of every
generated video is known exactly. Features are class prototypes plus
Gaussian noise.

Relevance is defined per window: chunk t is relevant iff its label equals
the label of the window's current chunk c_0. Because sliding windows
overlap, the flag lives on Window (computed on demand), not on chunks.

File formats (byte-exact; golden samples in docs/sample/):

  feature records  one chunk per line, tab-separated:
                   video_id, chunk_index, label, then feature_dim floats
                   (Python repr, round-trip exact)
  manifest         UTF-8 "key=value" lines: format, feature_dim,
                   num_actions, then per split "<name>=<relative path>"
                   and "<name>_chunks=<declared record count>"
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, DataError
from .numerics import rng_for

MANIFEST_FORMAT = "gatelab-features-v1"
RESERVED_MANIFEST_KEYS = ("format", "feature_dim", "num_actions")


@dataclass
class FeatureChunk:
    """One chunk: a feature vector with its class label."""

    video_id: str
    chunk_index: int
    label: int
    features: np.ndarray


Video = list[FeatureChunk]


@dataclass
class Dataset:
    feature_dim: int
    num_actions: int  # K, background excluded
    videos: list[Video] = field(default_factory=list)

    def num_chunks(self) -> int:
        return sum(len(v) for v in self.videos)


@dataclass
class Window:
    """T+1 consecutive chunks; array row T holds the current chunk c_0.

    Warm-up positions that precede a video's first chunk are zero-feature
    background chunks with padded=True.
    """

    video_id: str
    end_index: int
    features: np.ndarray  # (T+1, feature_dim)
    labels: np.ndarray  # (T+1,) int
    padded: np.ndarray  # (T+1,) bool

    @property
    def current_label(self) -> int:
        return int(self.labels[-1])

    def relevance(self) -> np.ndarray:
        """1 where a chunk's label matches the current chunk's label."""
        return (self.labels == self.labels[-1]).astype(np.int64)

    @property
    def window_id(self) -> str:
        return f"{self.video_id}:{self.end_index}"


@dataclass
class SyntheticSpec:
    """Knobs of the synthetic benchmark; defaults are the desk-scale setup.

    Each action class has one fixed prototype. Background is deliberately
    diverse: with background_modes > 1 every background chunk draws one of
    that many fixed pseudo-prototypes (same scale as the action ones), so
    "background" is not a compact class and cannot be recognized by a
    single linear map on raw features. Set background_modes=1 for a
    compact background class.
    """

    num_actions: int = 5
    feature_dim: int = 32
    prototype_scale: float = 1.0
    noise_sigma: float = 0.6
    sequence_length: int = 16
    relevant_min: int = 1
    relevant_max: int = 16
    background_window_rate: float = 0.25
    prefix_background_rate: float = 0.5
    background_modes: int = 64
    num_videos: int = 250
    seed: int = 7

    def __post_init__(self):
        if self.num_actions < 1:
            raise ConfigError(f"num_actions must be >= 1, got {self.num_actions}")
        if self.feature_dim < 1:
            raise ConfigError(f"feature_dim must be >= 1, got {self.feature_dim}")
        if self.noise_sigma < 0:
            raise ConfigError(f"noise_sigma must be >= 0, got {self.noise_sigma}")
        if self.sequence_length < 1:
            raise ConfigError(f"sequence_length must be >= 1, got {self.sequence_length}")
        if not 1 <= self.relevant_min <= self.relevant_max <= self.sequence_length:
            raise ConfigError(
                f"need 1 <= relevant_min <= relevant_max <= sequence_length, got "
                f"{self.relevant_min}..{self.relevant_max} with length {self.sequence_length}"
            )
        for name in ("background_window_rate", "prefix_background_rate"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ConfigError(f"{name} must be in [0, 1], got {v}")
        if self.background_modes < 1:
            raise ConfigError(f"background_modes must be >= 1, got {self.background_modes}")
        if self.num_videos < 1:
            raise ConfigError(f"num_videos must be >= 1, got {self.num_videos}")


def prototypes_for(spec: SyntheticSpec) -> np.ndarray:
    """Fixed per-class feature prototypes, shared by every split of a seed."""
    rng = rng_for(spec.seed, "prototypes")
    return rng.normal(0.0, spec.prototype_scale, size=(spec.num_actions + 1, spec.feature_dim))


def background_modes_for(spec: SyntheticSpec) -> np.ndarray:
    """Fixed library of background pseudo-prototypes; row 0 is the plain
    background prototype when background_modes == 1."""
    if spec.background_modes == 1:
        return prototypes_for(spec)[:1]
    rng = rng_for(spec.seed, "background-modes")
    return rng.normal(0.0, spec.prototype_scale,
                      size=(spec.background_modes, spec.feature_dim))


def generate_synthetic(spec: SyntheticSpec, split: str = "train",
                       chunk_budget: int | None = None) -> Dataset:
    """Deterministic synthetic split: same spec and split => identical bytes.

    Each video ends in a run of L chunks (L uniform in relevant_min..
    relevant_max) sharing the video's current label; earlier chunks never
    carry that label. With chunk_budget set, videos are emitted until the
    budget is met exactly (the final video may be short).
    """
    protos = prototypes_for(spec)
    bg_modes = background_modes_for(spec)
    rng = rng_for(spec.seed, "split", split)
    K, seq = spec.num_actions, spec.sequence_length
    videos: list[Video] = []
    produced = 0
    v = 0
    while True:
        if chunk_budget is None:
            if v >= spec.num_videos:
                break
            length = seq
        else:
            remaining = chunk_budget - produced
            if remaining <= 0:
                break
            length = min(seq, remaining)
        if rng.uniform() < spec.background_window_rate:
            current = 0
        else:
            current = int(rng.integers(1, K + 1))
        L = int(rng.integers(spec.relevant_min, spec.relevant_max + 1))
        L = min(L, length)
        labels = np.zeros(length, dtype=np.int64)
        labels[length - L:] = current
        for i in range(length - L):
            labels[i] = _prefix_label(rng, current, K, spec.prefix_background_rate)
        means = protos[labels]
        bg = labels == 0
        if bg.any():
            modes = rng.integers(0, len(bg_modes), size=int(bg.sum()))
            means = means.copy()
            means[bg] = bg_modes[modes]
        noise = rng.normal(0.0, spec.noise_sigma, size=(length, spec.feature_dim))
        feats = means + noise
        vid = f"{split}-{v:05d}"
        videos.append(
            [FeatureChunk(vid, i, int(labels[i]), feats[i]) for i in range(length)]
        )
        produced += length
        v += 1
    return Dataset(feature_dim=spec.feature_dim, num_actions=K, videos=videos)


def _prefix_label(rng, current: int, K: int, bg_rate: float) -> int:
    """A label != current for chunks preceding the relevant run."""
    others = [k for k in range(1, K + 1) if k != current]
    if current != 0 and (not others or rng.uniform() < bg_rate):
        return 0
    return int(others[rng.integers(0, len(others))])


def windows(dataset: Dataset, T: int) -> list[Window]:
    """Sliding window of T+1 chunks ending at every chunk of every video.

    Position j of a video yields the window over chunks j-T..j; positions
    with fewer than T+1 available chunks are left-padded with zero-feature
    background chunks. A video of M chunks yields exactly M windows.
    """
    if T < 0:
        raise ConfigError(f"T must be >= 0, got {T}")
    out: list[Window] = []
    S = T + 1
    for video in dataset.videos:
        M = len(video)
        feats = np.stack([c.features for c in video])
        labels = np.array([c.label for c in video], dtype=np.int64)
        for j in range(M):
            wf = np.zeros((S, dataset.feature_dim))
            wl = np.zeros(S, dtype=np.int64)
            pad = np.ones(S, dtype=bool)
            lo = max(0, j - T)
            n = j - lo + 1
            wf[S - n:] = feats[lo:j + 1]
            wl[S - n:] = labels[lo:j + 1]
            pad[S - n:] = False
            out.append(Window(video[j].video_id, video[j].chunk_index, wf, wl, pad))
    return out


# ---------------------------------------------------------------------------
# feature record and manifest IO
# ---------------------------------------------------------------------------


def write_records(dataset: Dataset, path: str | Path) -> int:
    """One tab-separated line per chunk; returns the record count."""
    n = 0
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for video in dataset.videos:
            for c in video:
                fields = [c.video_id, str(c.chunk_index), str(c.label)]
                fields += [repr(float(x)) for x in c.features]
                fh.write("\t".join(fields) + "\n")
                n += 1
    return n


def read_records(path: str | Path, feature_dim: int, num_actions: int) -> list[Video]:
    """Parse a record file; errors name the file and 1-based line number."""
    by_video: dict[str, Video] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 3 + feature_dim:
                raise DataError(
                    f"{path}:{lineno}: expected {3 + feature_dim} fields "
                    f"(3 + feature_dim={feature_dim}), got {len(parts)}"
                )
            vid = parts[0]
            try:
                idx = int(parts[1])
                label = int(parts[2])
                feats = np.array([float(x) for x in parts[3:]])
            except ValueError as exc:
                raise DataError(f"{path}:{lineno}: unparsable field ({exc})") from exc
            if not 0 <= label <= num_actions:
                raise DataError(
                    f"{path}:{lineno}: unknown label id {label} "
                    f"(valid range 0..{num_actions})"
                )
            if not np.all(np.isfinite(feats)):
                raise DataError(f"{path}:{lineno}: non-finite feature value")
            by_video.setdefault(vid, []).append(FeatureChunk(vid, idx, label, feats))
    videos = []
    for vid, chunks in by_video.items():  # insertion order = first appearance
        chunks.sort(key=lambda c: c.chunk_index)
        videos.append(chunks)
    return videos


@dataclass
class DatasetManifest:
    path: Path
    feature_dim: int
    num_actions: int
    splits: dict[str, Path]
    declared_counts: dict[str, int]


def write_manifest(out_dir: str | Path, feature_dim: int, num_actions: int,
                   splits: dict[str, tuple[str, int]]) -> Path:
    """splits maps name -> (relative file name, record count)."""
    out_dir = Path(out_dir)
    path = out_dir / "manifest.txt"
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"format={MANIFEST_FORMAT}\n")
        fh.write(f"feature_dim={feature_dim}\n")
        fh.write(f"num_actions={num_actions}\n")
        for name, (fname, count) in splits.items():
            fh.write(f"{name}={fname}\n")
            fh.write(f"{name}_chunks={count}\n")
    return path


def load_manifest(path: str | Path) -> DatasetManifest:
    path = Path(path)
    if not path.exists():
        raise DataError(f"manifest not found: {path}")
    kv: dict[str, str] = {}
    order: list[str] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise DataError(f"{path}:{lineno}: expected key=value, got {line!r}")
            key, value = line.split("=", 1)
            if key in kv:
                raise DataError(f"{path}:{lineno}: duplicate key {key!r}")
            kv[key] = value
            order.append(key)
    if kv.get("format") != MANIFEST_FORMAT:
        raise DataError(f"{path}: unsupported format {kv.get('format')!r}")
    try:
        feature_dim = int(kv["feature_dim"])
        num_actions = int(kv["num_actions"])
    except (KeyError, ValueError) as exc:
        raise DataError(f"{path}: bad or missing feature_dim/num_actions ({exc})") from exc
    splits: dict[str, Path] = {}
    counts: dict[str, int] = {}
    for key in order:
        if key in RESERVED_MANIFEST_KEYS:
            continue
        if key.endswith("_chunks"):
            try:
                counts[key[: -len("_chunks")]] = int(kv[key])
            except ValueError as exc:
                raise DataError(f"{path}: bad count for {key} ({exc})") from exc
        else:
            splits[key] = path.parent / kv[key]
    for name in counts:
        if name not in splits:
            raise DataError(f"{path}: count declared for unknown split {name!r}")
    if not splits:
        raise DataError(f"{path}: manifest lists no split files")
    return DatasetManifest(path, feature_dim, num_actions, splits, counts)


def load_features(manifest: DatasetManifest | str | Path, split: str) -> Dataset:
    """Load one split; validates dims and any declared record count."""
    if not isinstance(manifest, DatasetManifest):
        manifest = load_manifest(manifest)
    if split not in manifest.splits:
        raise DataError(
            f"{manifest.path}: no split {split!r} (have {sorted(manifest.splits)})"
        )
    fpath = manifest.splits[split]
    if not fpath.exists():
        raise DataError(f"{manifest.path}: split file not found: {fpath}")
    videos = read_records(fpath, manifest.feature_dim, manifest.num_actions)
    n = sum(len(v) for v in videos)
    declared = manifest.declared_counts.get(split)
    if declared is not None and declared != n:
        raise DataError(
            f"{fpath}: manifest declares {declared} records for split "
            f"{split!r} but file holds {n}"
        )
    return Dataset(manifest.feature_dim, manifest.num_actions, videos)
