"""Keypoint-sequence data model, on-disk format, and synthetic tasks.

On-disk format (UTF-8, LF line endings):

* ``manifest.json`` — one JSON object::

      {"schema": [{"name": str, "count": int, "coords": int}, ...],
       "dim": int,
       "classes": [str, ...],
       "splits": {"train": [id, ...], "val": [id, ...], "test": [id, ...]}}

  ``dim`` must equal the sum of count*coords over the schema entries.

* ``data.jsonl`` — one sequence object per line::

      {"id": str, "label": str, "frames": [[float, ...] x T]}

  Every frame has exactly ``dim`` finite values. Floats are written with
  the shortest decimal representation that round-trips, so values restore
  bit-exactly.

The default landmark layout is left hand 21x3 + right hand 21x3 + body
pose 33x3 = 225 features per frame; an undetected landmark group is
encoded as zeros.

Normalization is per-dimension z-scoring with statistics from the
training split only.
"""

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    EmptyInputError,
    IntegrityError,
    ParseError,
    SchemaError,
)
from .linalg import RngStream

SPLIT_NAMES = ("train", "val", "test")


@dataclass(frozen=True)
class KeypointSequence:
    """One labeled sample: T frames of D features each."""

    id: str
    label: str
    frames: np.ndarray

    @property
    def t_len(self):
        return self.frames.shape[0]

    @property
    def dim(self):
        return self.frames.shape[1]


@dataclass(frozen=True)
class LandmarkGroup:
    name: str
    count: int
    coords: int


@dataclass(frozen=True)
class DatasetManifest:
    """Feature layout, class list, and split membership of one dataset."""

    schema: tuple
    dim: int
    classes: tuple
    splits: dict

    def __post_init__(self):
        expected = sum(g.count * g.coords for g in self.schema)
        if expected != self.dim:
            raise SchemaError(
                f"manifest dim {self.dim} does not match schema total {expected}"
            )
        seen = {}
        for name in SPLIT_NAMES:
            for sid in self.splits.get(name, ()):
                if sid in seen:
                    raise IntegrityError(
                        f"sample {sid!r} appears in splits {seen[sid]!r} and {name!r}"
                    )
                seen[sid] = name


def default_landmark_layout():
    """Left hand, right hand and body pose triples: 225 features."""
    return (
        LandmarkGroup("left_hand", 21, 3),
        LandmarkGroup("right_hand", 21, 3),
        LandmarkGroup("pose", 33, 3),
    )


@dataclass
class Dataset:
    """A manifest plus its sequences, in file order."""

    manifest: DatasetManifest
    sequences: list

    def __post_init__(self):
        self.by_id = {}
        for seq in self.sequences:
            if seq.id in self.by_id:
                raise IntegrityError(f"duplicate sample id {seq.id!r}")
            self.by_id[seq.id] = seq
        for name in SPLIT_NAMES:
            for sid in self.manifest.splits.get(name, ()):
                if sid not in self.by_id:
                    raise IntegrityError(f"split {name!r} references unknown sample {sid!r}")

    def split(self, name):
        """Sequences of one split, in the manifest's id order."""
        return [self.by_id[sid] for sid in self.manifest.splits.get(name, ())]


def _validate_frames(frames, dim, sample_id):
    try:
        frames = np.asarray(frames, dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise SchemaError(f"sample {sample_id!r}: frames are not a numeric grid: {exc}") from exc
    if frames.size == 0:
        raise EmptyInputError(f"sample {sample_id!r} has no frames")
    if frames.ndim != 2:
        raise SchemaError(f"sample {sample_id!r}: frames must be a list of equal-length rows")
    if frames.shape[1] != dim:
        raise SchemaError(
            f"sample {sample_id!r}: frames have {frames.shape[1]} values, expected {dim}"
        )
    if not np.isfinite(frames).all():
        raise SchemaError(f"sample {sample_id!r}: frames contain non-finite values")
    return frames


def _manifest_from_dict(doc):
    try:
        schema = tuple(
            LandmarkGroup(str(g["name"]), int(g["count"]), int(g["coords"]))
            for g in doc["schema"]
        )
        return DatasetManifest(
            schema=schema,
            dim=int(doc["dim"]),
            classes=tuple(str(c) for c in doc["classes"]),
            splits={k: list(doc["splits"].get(k, [])) for k in SPLIT_NAMES},
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"malformed manifest: {exc}") from exc


def _manifest_to_dict(manifest):
    return {
        "schema": [
            {"name": g.name, "count": g.count, "coords": g.coords} for g in manifest.schema
        ],
        "dim": manifest.dim,
        "classes": list(manifest.classes),
        "splits": {k: list(manifest.splits.get(k, [])) for k in SPLIT_NAMES},
    }


def load_dataset(manifest_path, data_path):
    """Load and validate a manifest + JSONL pair into a ``Dataset``."""
    with open(manifest_path, encoding="utf-8") as fh:
        try:
            manifest = _manifest_from_dict(json.load(fh))
        except json.JSONDecodeError as exc:
            raise ParseError(exc.lineno, f"manifest: {exc.msg}") from exc

    sequences = []
    with open(data_path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                doc = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(lineno, exc.msg) from exc
            try:
                sid = str(doc["id"])
                label = str(doc["label"])
                raw = doc["frames"]
            except (KeyError, TypeError) as exc:
                raise ParseError(lineno, f"missing field: {exc}") from exc
            frames = _validate_frames(raw, manifest.dim, sid)
            sequences.append(KeypointSequence(id=sid, label=label, frames=frames))
    return Dataset(manifest=manifest, sequences=sequences)


def save_dataset(dataset, manifest_path, data_path):
    """Write a dataset back to its manifest + JSONL pair."""
    manifest_path = Path(manifest_path)
    data_path = Path(data_path)
    with open(manifest_path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(_manifest_to_dict(dataset.manifest), fh)
        fh.write("\n")
    with open(data_path, "w", encoding="utf-8", newline="\n") as fh:
        for seq in dataset.sequences:
            doc = {"id": seq.id, "label": seq.label, "frames": seq.frames.tolist()}
            fh.write(json.dumps(doc))
            fh.write("\n")


def resample_frames(frames, t_len):
    """Linear interpolation of a (T, D) array onto ``t_len`` uniform points.

    Endpoints map to the first and last original frames; a single-frame
    input is repeated. Sequences are variable-length by default — this is
    only for the opt-in fixed-T mode.
    """
    if t_len < 1:
        raise ValueError(f"resample length must be positive, got {t_len}")
    frames = np.asarray(frames, dtype=np.float64)
    t_src = frames.shape[0]
    if t_src == 1:
        return np.repeat(frames, t_len, axis=0)
    pos = np.linspace(0.0, t_src - 1.0, t_len)
    lo = np.floor(pos).astype(np.intp)
    hi = np.minimum(lo + 1, t_src - 1)
    w = (pos - lo)[:, None]
    return frames[lo] * (1.0 - w) + frames[hi] * w


def resample_sequence(seq, t_len):
    """Sequence counterpart of :func:`resample_frames`."""
    return KeypointSequence(id=seq.id, label=seq.label, frames=resample_frames(seq.frames, t_len))


@dataclass(frozen=True)
class NormStats:
    """Per-dimension mean and standard deviation from the training split."""

    mean: np.ndarray
    std: np.ndarray


def fit_norm(train_sequences, floor=1e-8):
    """Z-score statistics over all frames of the training split.

    Standard deviations are floored so constant dimensions normalize to 0.
    """
    if not train_sequences:
        raise EmptyInputError("cannot fit normalization on an empty training split")
    stacked = np.concatenate([s.frames for s in train_sequences], axis=0)
    std = stacked.std(axis=0)
    return NormStats(mean=stacked.mean(axis=0), std=np.maximum(std, floor))


def apply_norm(seq, stats):
    """Return a new sequence with z-scored frames."""
    frames = (seq.frames - stats.mean) / stats.std
    return KeypointSequence(id=seq.id, label=seq.label, frames=frames)


def synth_generate(
    n_classes,
    per_class,
    t_len,
    dim,
    noise_sd,
    seed,
    train_frac=0.7,
    val_frac=0.15,
):
    """Deterministic synthetic classification task.

    Each class has a fixed integer frequency and phase per dimension; each
    sample shifts the whole pattern by a random fraction of the period and
    jitters the per-dimension phases, so single frames carry almost no
    class signal while the trajectory does::

        frames[t, d] = sin(2 pi f_d (t / T + tau) + phi_d + jitter_d) + noise

    Splits are assigned per class by sample index: the first
    ``int(per_class * train_frac)`` go to train, the next
    ``int(per_class * val_frac)`` to val, the rest to test.
    """
    if min(n_classes, per_class, t_len, dim) < 1:
        raise ValueError("n_classes, per_class, t_len and dim must all be positive")
    if noise_sd < 0:
        raise ValueError("noise_sd must be nonnegative")
    if not (0.0 <= train_frac <= 1.0 and 0.0 <= val_frac <= 1.0 and train_frac + val_frac <= 1.0):
        raise ValueError("train_frac and val_frac must be fractions summing to at most 1")

    rng = RngStream(seed)
    width = max(3, len(str(n_classes - 1)))
    freqs = []
    phases = []
    for _ in range(n_classes):
        freqs.append(np.floor(rng.uniform(dim, 1.0, 5.0)))  # integer cycles 1..4
        phases.append(rng.uniform(dim, 0.0, 2.0 * math.pi))

    n_train = int(per_class * train_frac)
    n_val = int(per_class * val_frac)
    if n_train < 1:
        n_train = 1
    t_grid = np.arange(t_len)[:, None] / t_len

    sequences = []
    splits = {name: [] for name in SPLIT_NAMES}
    classes = []
    for c in range(n_classes):
        label = f"class_{c:0{width}d}"
        classes.append(label)
        for s in range(per_class):
            tau = rng.uniform(1)[0]
            jitter = rng.uniform(dim, -1.2, 1.2)
            angle = 2.0 * math.pi * freqs[c] * (t_grid + tau) + phases[c] + jitter
            frames = np.sin(angle)
            if noise_sd > 0:
                frames = frames + rng.normal(t_len * dim, noise_sd).reshape(t_len, dim)
            sid = f"{label}_s{s:03d}"
            sequences.append(KeypointSequence(id=sid, label=label, frames=frames))
            if s < n_train:
                splits["train"].append(sid)
            elif s < n_train + n_val:
                splits["val"].append(sid)
            else:
                splits["test"].append(sid)

    manifest = DatasetManifest(
        schema=(LandmarkGroup("feature", dim, 1),),
        dim=dim,
        classes=tuple(classes),
        splits=splits,
    )
    return Dataset(manifest=manifest, sequences=sequences)
