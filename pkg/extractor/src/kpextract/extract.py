"""Video decoding and corpus extraction.

Output follows the keypoint-dataset file contract consumed by the training
toolkit:

* ``manifest.json`` — ``{"schema": [...], "dim": 225, "classes": [...],
  "splits": {"train": [...], "val": [...], "test": [...]}}`` on one line.
* ``data.jsonl`` — one ``{"id", "label", "frames"}`` object per line, every
  frame exactly 225 finite floats in schema order (left hand 21x3, right
  hand 21x3, pose 33x3), undetected groups encoded as zeros.

Each JSONL line is written with a single ``write`` call, so a sequence is
never half-present in the file.
"""

import csv
import json
import logging
from dataclasses import dataclass
from pathlib import Path

import cv2
import numpy as np

from .backends import GROUPS

LAYOUT = (("left_hand", 21, 3), ("right_hand", 21, 3), ("pose", 33, 3))
FRAME_DIM = sum(count * coords for _, count, coords in LAYOUT)
SPLIT_NAMES = ("train", "val", "test")
INDEX_FIELDS = ("video_path", "id", "label", "split")

log = logging.getLogger("kpextract")


@dataclass(frozen=True)
class ExtractionJob:
    """One video to extract: path, sample id, label, frame stride."""

    video_path: str
    id: str
    label: str
    stride: int = 1

    def __post_init__(self):
        if self.stride < 1:
            raise ValueError(f"stride must be at least 1, got {self.stride}")


def decode_frames(path, stride=1):
    """BGR frames of a video, keeping every ``stride``-th frame.

    Raises ``OSError`` for unreadable files and ``ValueError`` when the
    container opens but yields no frames.
    """
    if stride < 1:
        raise ValueError(f"stride must be at least 1, got {stride}")
    cap = cv2.VideoCapture(str(path))
    if not cap.isOpened():
        raise OSError(f"cannot open video {str(path)!r}")
    frames = []
    index = 0
    try:
        while True:
            ok, frame = cap.read()
            if not ok:
                break
            if index % stride == 0:
                frames.append(frame)
            index += 1
    finally:
        cap.release()
    if not frames:
        raise ValueError(f"video {str(path)!r} contains no decodable frames")
    return frames


def _frame_features(detections, video_path):
    parts = []
    for name, count in GROUPS:
        arr = detections.get(name)
        if arr is None:
            parts.append(np.zeros(3 * count))
            continue
        arr = np.asarray(arr, dtype=np.float64)
        if arr.shape != (count, 3):
            raise ValueError(f"backend returned shape {arr.shape} for {name!r}, expected ({count}, 3)")
        if not np.isfinite(arr).all():
            # Never let a backend glitch poison the output file; a
            # non-finite group is treated as undetected.
            log.warning("non-finite %s landmarks in %s; zeroing the group", name, video_path)
            arr = np.zeros((count, 3))
        parts.append(arr.reshape(-1))
    return np.concatenate(parts)


def extract_sequence(job, backend):
    """Run the backend over one video; returns ``(id, label, frames)``.

    ``frames`` is T x 225 float64, finite, schema-ordered, zeros for
    undetected groups.
    """
    frames = [
        _frame_features(backend.detect(frame), job.video_path)
        for frame in decode_frames(job.video_path, job.stride)
    ]
    return job.id, job.label, np.asarray(frames)


def read_index(path):
    """Parse the corpus index CSV (header ``video_path,id,label,split``)."""
    jobs = []
    seen = set()
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or tuple(reader.fieldnames) != INDEX_FIELDS:
            raise ValueError(
                f"index header must be {','.join(INDEX_FIELDS)!r}, got {reader.fieldnames}"
            )
        for lineno, row in enumerate(reader, start=2):
            values = [(row.get(k) or "").strip() for k in INDEX_FIELDS]
            if not all(values):
                raise ValueError(f"{path}:{lineno}: empty field in {row}")
            video_path, sample_id, label, split = values
            if split not in SPLIT_NAMES:
                raise ValueError(f"{path}:{lineno}: unknown split {split!r}")
            if sample_id in seen:
                raise ValueError(f"{path}:{lineno}: duplicate sample id {sample_id!r}")
            seen.add(sample_id)
            jobs.append((ExtractionJob(video_path=video_path, id=sample_id, label=label), split))
    if not jobs:
        raise ValueError(f"index {str(path)!r} lists no videos")
    return jobs


def extract_corpus(index_path, out_dir, backend, stride=1):
    """Extract every indexed video into ``out_dir``'s manifest + JSONL pair.

    Per-video failures are logged and skipped; the returned summary dict
    reports ``extracted`` and ``skipped`` counts plus the output paths.
    Rerunning with identical inputs rewrites identical files.
    """
    jobs = read_index(index_path)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest_path = out_dir / "manifest.json"
    data_path = out_dir / "data.jsonl"

    records = []
    splits = {name: [] for name in SPLIT_NAMES}
    skipped = 0
    for job, split in jobs:
        job = ExtractionJob(video_path=job.video_path, id=job.id, label=job.label, stride=stride)
        try:
            sample_id, label, frames = extract_sequence(job, backend)
        except (OSError, ValueError) as exc:
            log.warning("skipping %s: %s", job.id, exc)
            skipped += 1
            continue
        records.append((sample_id, label, frames))
        splits[split].append(sample_id)

    manifest = {
        "schema": [
            {"name": name, "count": count, "coords": coords} for name, count, coords in LAYOUT
        ],
        "dim": FRAME_DIM,
        "classes": sorted({label for _, label, _ in records}),
        "splits": splits,
    }
    with open(manifest_path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(manifest, fh)
        fh.write("\n")
    with open(data_path, "w", encoding="utf-8", newline="\n") as fh:
        for sample_id, label, frames in records:
            line = json.dumps({"id": sample_id, "label": label, "frames": frames.tolist()})
            fh.write(line + "\n")

    if skipped:
        log.warning("skipped %d of %d videos", skipped, len(jobs))
    return {
        "extracted": len(records),
        "skipped": skipped,
        "manifest": str(manifest_path),
        "data": str(data_path),
    }
