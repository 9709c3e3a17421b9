"""Unit tests for the keypoint extractor: backends, decoding, corpus output."""

import json
import logging

import numpy as np
import pytest

from cliputil import (
    CYAN,
    GREEN,
    MAGENTA,
    SIZE,
    black_clip,
    empty_clip,
    moving_square_clip,
    multi_marker_clip,
    static_square_clip,
    truncated_clip,
)
from kpextract import (
    FRAME_DIM,
    ExtractionJob,
    MarkerBackend,
    decode_frames,
    extract_corpus,
    extract_sequence,
    get_backend,
    read_index,
)
from kpextract.backends import BackendUnavailableError, _blob_centroid

# Measured max per-dim variance of a static-square MJPG clip is ~1.2e-32
# (the flat patch compresses deterministically), while a square moving 5 px
# per frame measures ~3.3e-2.  1e-6 splits the two regimes by >25 orders
# of magnitude.
STATIC_VARIANCE_CEILING = 1e-6


def _solid_frame(color):
    frame = np.zeros((SIZE, SIZE, 3), dtype=np.uint8)
    frame[20:30, 40:50] = color
    return frame


class TestMarkerBackend:
    def test_blob_centroid_is_normalized_mean(self):
        mask = np.zeros((11, 21), dtype=bool)
        mask[2, 4] = True
        mask[8, 16] = True
        cx, cy = _blob_centroid(mask, min_pixels=1)
        assert cx == pytest.approx(10 / 20)
        assert cy == pytest.approx(5 / 10)

    def test_blob_centroid_respects_min_pixels(self):
        mask = np.zeros((10, 10), dtype=bool)
        mask[3, 3] = True
        assert _blob_centroid(mask, min_pixels=2) is None
        assert _blob_centroid(mask, min_pixels=1) is not None

    def test_green_square_lands_in_left_hand(self):
        out = MarkerBackend().detect(_solid_frame(GREEN))
        assert out["left_hand"] is not None
        assert out["right_hand"] is None and out["pose"] is None
        arr = np.asarray(out["left_hand"])
        assert arr.shape == (21, 3)
        # The ring template's offsets sum to zero, so the landmark mean is
        # the patch centroid: x = 44.5/63, y = 24.5/63.
        center = arr.mean(axis=0)
        assert center[0] == pytest.approx(44.5 / 63, abs=1e-9)
        assert center[1] == pytest.approx(24.5 / 63, abs=1e-9)
        assert np.all(arr[:, 2] == 0.0)

    def test_magenta_and_cyan_route_to_other_groups(self):
        backend = MarkerBackend()
        out_m = backend.detect(_solid_frame(MAGENTA))
        assert out_m["right_hand"] is not None and np.asarray(out_m["right_hand"]).shape == (21, 3)
        assert out_m["left_hand"] is None and out_m["pose"] is None
        out_c = backend.detect(_solid_frame(CYAN))
        assert out_c["pose"] is not None and np.asarray(out_c["pose"]).shape == (33, 3)
        assert out_c["left_hand"] is None and out_c["right_hand"] is None

    def test_black_frame_detects_nothing(self):
        out = MarkerBackend().detect(np.zeros((SIZE, SIZE, 3), dtype=np.uint8))
        assert out == {"left_hand": None, "right_hand": None, "pose": None}

    def test_small_blob_below_min_pixels_ignored(self):
        frame = np.zeros((SIZE, SIZE, 3), dtype=np.uint8)
        frame[5:8, 5:8] = GREEN  # 9 px < default min_pixels=20
        assert MarkerBackend().detect(frame)["left_hand"] is None
        assert MarkerBackend(min_pixels=5).detect(frame)["left_hand"] is not None

    def test_detect_validates_frame_shape(self):
        with pytest.raises(ValueError, match="H x W x 3"):
            MarkerBackend().detect(np.zeros((4, 4), dtype=np.uint8))

    def test_get_backend_factory(self):
        assert isinstance(get_backend("marker"), MarkerBackend)
        with pytest.raises(ValueError, match="unknown backend"):
            get_backend("sonar")

    def test_mediapipe_backend_reports_missing_dependency(self):
        # mediapipe is not installed in this environment; the factory must
        # say how to get it rather than die with an ImportError.
        with pytest.raises(BackendUnavailableError, match="mediapipe"):
            get_backend("mediapipe")


class TestDecodeAndSequence:
    def test_decode_counts_and_stride(self, tmp_path):
        path = moving_square_clip(tmp_path / "move.avi", n_frames=8)
        assert len(decode_frames(path)) == 8
        assert len(decode_frames(path, stride=2)) == 4
        assert len(decode_frames(path, stride=3)) == 3  # frames 0, 3, 6
        with pytest.raises(ValueError, match="stride"):
            decode_frames(path, stride=0)

    def test_decode_missing_file_raises_oserror(self, tmp_path):
        with pytest.raises(OSError, match="cannot open"):
            decode_frames(tmp_path / "nope.avi")

    def test_decode_garbage_file_raises_oserror(self, tmp_path):
        path = truncated_clip(tmp_path / "trunc.avi")
        with pytest.raises(OSError, match="cannot open"):
            decode_frames(path)

    def test_decode_zero_frame_container_raises_valueerror(self, tmp_path):
        path = empty_clip(tmp_path / "empty.avi")
        with pytest.raises(ValueError, match="no decodable frames"):
            decode_frames(path)

    def test_job_rejects_bad_stride(self):
        with pytest.raises(ValueError, match="stride"):
            ExtractionJob("v.avi", "a", "x", stride=0)

    def test_sequence_shape_and_finiteness(self, tmp_path):
        path = moving_square_clip(tmp_path / "move.avi", n_frames=8)
        sample_id, label, frames = extract_sequence(
            ExtractionJob(path, "s0", "wave"), MarkerBackend()
        )
        assert (sample_id, label) == ("s0", "wave")
        assert frames.shape == (8, FRAME_DIM)
        assert np.isfinite(frames).all()

    def test_undetected_groups_are_zero(self, tmp_path):
        path = moving_square_clip(tmp_path / "move.avi")
        _, _, frames = extract_sequence(ExtractionJob(path, "s0", "wave"), MarkerBackend())
        assert frames[:, :63].any()          # left hand followed the square
        assert not frames[:, 63:].any()      # no magenta/cyan anywhere

    def test_moving_vs_static_variance(self, tmp_path):
        moving = moving_square_clip(tmp_path / "move.avi")
        static = static_square_clip(tmp_path / "stat.avi")
        backend = MarkerBackend()
        _, _, fm = extract_sequence(ExtractionJob(moving, "m", "wave"), backend)
        _, _, fs = extract_sequence(ExtractionJob(static, "s", "hold"), backend)
        assert fs[:, :63].any()  # static square is still detected
        assert fs.var(axis=0).max() < STATIC_VARIANCE_CEILING
        assert fm.var(axis=0).max() > 1e-3

    def test_all_three_groups_from_multi_marker_clip(self, tmp_path):
        path = multi_marker_clip(tmp_path / "multi.avi")
        _, _, frames = extract_sequence(ExtractionJob(path, "x", "all"), MarkerBackend())
        lh, rh, pose = frames[0, :63], frames[0, 63:126], frames[0, 126:]
        assert lh.any() and rh.any() and pose.any()
        # Corners: green top-left, magenta top-right, cyan bottom-center.
        assert lh[0] < 0.5 < rh[0]
        assert pose[1] > 0.5

    def test_stride_passes_through_sequence(self, tmp_path):
        path = moving_square_clip(tmp_path / "move.avi", n_frames=8)
        _, _, frames = extract_sequence(
            ExtractionJob(path, "s", "wave", stride=2), MarkerBackend()
        )
        assert frames.shape[0] == 4

    def test_nonfinite_backend_output_zeroed_with_warning(self, tmp_path, caplog):
        class BrokenBackend:
            def detect(self, frame):
                bad = np.full((21, 3), np.nan)
                return {"left_hand": bad, "right_hand": None, "pose": None}

            def close(self):
                pass

        path = static_square_clip(tmp_path / "stat.avi", n_frames=2)
        with caplog.at_level(logging.WARNING, logger="kpextract"):
            _, _, frames = extract_sequence(ExtractionJob(path, "s", "hold"), BrokenBackend())
        assert not frames.any()
        assert np.isfinite(frames).all()
        assert any("non-finite" in rec.message for rec in caplog.records)

    def test_wrong_backend_shape_raises(self, tmp_path):
        class WrongShape:
            def detect(self, frame):
                return {"left_hand": np.zeros((5, 3)), "right_hand": None, "pose": None}

            def close(self):
                pass

        path = static_square_clip(tmp_path / "s.avi", n_frames=1)
        with pytest.raises(ValueError, match="expected \\(21, 3\\)"):
            extract_sequence(ExtractionJob(path, "s", "hold"), WrongShape())


def _write_index(path, rows):
    lines = ["video_path,id,label,split"] + [",".join(r) for r in rows]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


class TestIndex:
    def test_read_index_roundtrip(self, tmp_path):
        index = _write_index(
            tmp_path / "index.csv",
            [("a.avi", "s0", "wave", "train"), ("b.avi", "s1", "hold", "val")],
        )
        jobs = read_index(index)
        assert [(j.video_path, j.id, j.label, split) for j, split in jobs] == [
            ("a.avi", "s0", "wave", "train"),
            ("b.avi", "s1", "hold", "val"),
        ]

    def test_read_index_rejects_bad_header(self, tmp_path):
        index = tmp_path / "index.csv"
        index.write_text("path,id,label,split\na.avi,s0,x,train\n", encoding="utf-8")
        with pytest.raises(ValueError, match="header"):
            read_index(index)

    def test_read_index_rejects_unknown_split(self, tmp_path):
        index = _write_index(tmp_path / "index.csv", [("a.avi", "s0", "x", "holdout")])
        with pytest.raises(ValueError, match="holdout"):
            read_index(index)

    def test_read_index_rejects_duplicate_id(self, tmp_path):
        index = _write_index(
            tmp_path / "index.csv",
            [("a.avi", "s0", "x", "train"), ("b.avi", "s0", "y", "val")],
        )
        with pytest.raises(ValueError, match="duplicate"):
            read_index(index)

    def test_read_index_rejects_empty_field_and_empty_file(self, tmp_path):
        index = _write_index(tmp_path / "index.csv", [("a.avi", "s0", "", "train")])
        with pytest.raises(ValueError, match="empty field"):
            read_index(index)
        empty = tmp_path / "empty.csv"
        empty.write_text("video_path,id,label,split\n", encoding="utf-8")
        with pytest.raises(ValueError, match="no videos"):
            read_index(empty)


class TestCorpus:
    def _corpus(self, tmp_path):
        move = moving_square_clip(tmp_path / "move.avi")
        stat = static_square_clip(tmp_path / "stat.avi")
        index = _write_index(
            tmp_path / "index.csv",
            [(move, "s0", "wave", "train"), (stat, "s1", "hold", "val")],
        )
        return index

    def test_extract_corpus_writes_dataset_pair(self, tmp_path):
        index = self._corpus(tmp_path)
        out = tmp_path / "out"
        summary = extract_corpus(index, out, MarkerBackend())
        assert summary["extracted"] == 2 and summary["skipped"] == 0

        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["dim"] == FRAME_DIM
        assert manifest["classes"] == ["hold", "wave"]
        assert manifest["splits"] == {"train": ["s0"], "val": ["s1"], "test": []}
        assert [g["count"] for g in manifest["schema"]] == [21, 21, 33]

        lines = (out / "data.jsonl").read_text().splitlines()
        assert [json.loads(l)["id"] for l in lines] == ["s0", "s1"]
        for line in lines:
            rec = json.loads(line)
            assert all(len(frame) == FRAME_DIM for frame in rec["frames"])

    def test_failed_videos_are_skipped_and_logged(self, tmp_path, caplog):
        move = moving_square_clip(tmp_path / "move.avi")
        index = _write_index(
            tmp_path / "index.csv",
            [
                (move, "s0", "wave", "train"),
                (str(tmp_path / "ghost.avi"), "s1", "wave", "train"),
            ],
        )
        with caplog.at_level(logging.WARNING, logger="kpextract"):
            summary = extract_corpus(index, tmp_path / "out", MarkerBackend())
        assert summary["extracted"] == 1 and summary["skipped"] == 1
        assert any("skipping s1" in rec.getMessage() for rec in caplog.records)
        manifest = json.loads((tmp_path / "out" / "manifest.json").read_text())
        assert manifest["splits"]["train"] == ["s0"]

    def test_rerun_is_byte_identical(self, tmp_path):
        index = self._corpus(tmp_path)
        out = tmp_path / "out"
        extract_corpus(index, out, MarkerBackend())
        first = ((out / "manifest.json").read_bytes(), (out / "data.jsonl").read_bytes())
        extract_corpus(index, out, MarkerBackend())
        second = ((out / "manifest.json").read_bytes(), (out / "data.jsonl").read_bytes())
        assert first == second

    def test_stride_thins_written_frames(self, tmp_path):
        index = self._corpus(tmp_path)
        out = tmp_path / "out"
        extract_corpus(index, out, MarkerBackend(), stride=2)
        lines = (out / "data.jsonl").read_text().splitlines()
        assert all(len(json.loads(l)["frames"]) == 4 for l in lines)


class TestCli:
    def test_successful_run_prints_summary(self, tmp_path, capsys):
        from kpextract.cli import main

        move = moving_square_clip(tmp_path / "move.avi")
        index = _write_index(tmp_path / "index.csv", [(move, "s0", "wave", "train")])
        out = tmp_path / "out"
        code = main(["--index", str(index), "--out", str(out)])
        assert code == 0
        summary = json.loads(capsys.readouterr().out)
        assert summary["extracted"] == 1 and summary["skipped"] == 0
        assert (out / "manifest.json").exists() and (out / "data.jsonl").exists()

    def test_nothing_extracted_exits_1(self, tmp_path):
        from kpextract.cli import main

        index = _write_index(
            tmp_path / "index.csv", [(str(tmp_path / "ghost.avi"), "s0", "x", "train")]
        )
        assert main(["--index", str(index), "--out", str(tmp_path / "out")]) == 1

    def test_bad_index_exits_2(self, tmp_path, capsys):
        from kpextract.cli import main

        index = tmp_path / "index.csv"
        index.write_text("wrong,header\n", encoding="utf-8")
        assert main(["--index", str(index), "--out", str(tmp_path / "out")]) == 2
        assert "header" in capsys.readouterr().err

    def test_unavailable_backend_exits_2(self, tmp_path, capsys):
        from kpextract.cli import main

        index = _write_index(tmp_path / "index.csv", [("a.avi", "s0", "x", "train")])
        code = main(["--index", str(index), "--out", str(tmp_path / "out"), "--backend", "mediapipe"])
        assert code == 2
        assert "mediapipe" in capsys.readouterr().err
