"""Landmark detection backends.

A backend turns one BGR frame into per-group landmark arrays::

    detect(frame) -> {"left_hand": (21, 3) array or None,
                      "right_hand": (21, 3) array or None,
                      "pose": (33, 3) array or None}

Coordinates are in the framework's normalized image space (x, y in [0, 1]
across the frame, z as provided); ``None`` means the group was not detected
in that frame. Two backends ship:

* ``mediapipe`` — real hand + pose estimation, imported lazily so the
  package works without the dependency installed.
* ``marker`` — deterministic color-blob detector for tests and offline
  pipeline work: a saturated green blob stands in for the left hand,
  magenta for the right hand, cyan for the body.
"""

import numpy as np

GROUPS = (("left_hand", 21), ("right_hand", 21), ("pose", 33))


class BackendUnavailableError(RuntimeError):
    """The requested backend's dependency is not installed."""


def _blob_centroid(mask, min_pixels):
    ys, xs = np.nonzero(mask)
    if len(xs) < min_pixels:
        return None
    h, w = mask.shape
    return float(xs.mean() / max(w - 1, 1)), float(ys.mean() / max(h - 1, 1))


def _template(count, radius=0.02):
    """Fixed ring of ``count`` offsets around a centroid, z = 0."""
    angles = 2.0 * np.pi * np.arange(count) / count
    return radius * np.column_stack([np.cos(angles), np.sin(angles), np.zeros(count)])


class MarkerBackend:
    """Detect saturated color markers; deterministic and dependency-free.

    Channel thresholds (>= 160 on the marker channels, <= 90 elsewhere)
    leave ample headroom for lossy codecs. A group's landmarks are a fixed
    ring template centered on the blob centroid.
    """

    # BGR masks: marker channels that must be high / low.
    _COLORS = {
        "left_hand": ((1,), (0, 2)),  # green
        "right_hand": ((0, 2), (1,)),  # magenta
        "pose": ((0, 1), (2,)),  # cyan
    }

    def __init__(self, min_pixels=20):
        if min_pixels < 1:
            raise ValueError(f"min_pixels must be at least 1, got {min_pixels}")
        self.min_pixels = min_pixels

    def detect(self, frame):
        frame = np.asarray(frame)
        if frame.ndim != 3 or frame.shape[2] != 3:
            raise ValueError(f"expected an H x W x 3 BGR frame, got shape {frame.shape}")
        out = {}
        for (name, count), (high, low) in zip(GROUPS, self._COLORS.values()):
            mask = np.ones(frame.shape[:2], dtype=bool)
            for ch in high:
                mask &= frame[:, :, ch] >= 160
            for ch in low:
                mask &= frame[:, :, ch] <= 90
            center = _blob_centroid(mask, self.min_pixels)
            if center is None:
                out[name] = None
            else:
                cx, cy = center
                out[name] = np.array([cx, cy, 0.0]) + _template(count)
        return out

    def close(self):
        pass


class MediaPipeBackend:
    """Hand + pose landmarks via mediapipe's solutions API.

    Hands are assigned to left/right using the framework's handedness
    classification. Frames are converted BGR -> RGB before inference.
    """

    def __init__(self, min_detection_confidence=0.5):
        try:
            import mediapipe as mp
        except ImportError as exc:
            raise BackendUnavailableError(
                "mediapipe is not installed; install the [mediapipe] extra to use this backend"
            ) from exc
        self._mp = mp
        self._hands = mp.solutions.hands.Hands(
            static_image_mode=False,
            max_num_hands=2,
            min_detection_confidence=min_detection_confidence,
        )
        self._pose = mp.solutions.pose.Pose(
            static_image_mode=False,
            min_detection_confidence=min_detection_confidence,
        )

    @staticmethod
    def _landmark_array(landmark_list):
        return np.array([[p.x, p.y, p.z] for p in landmark_list.landmark])

    def detect(self, frame):
        rgb = np.ascontiguousarray(frame[:, :, ::-1])
        hands = self._hands.process(rgb)
        pose = self._pose.process(rgb)
        out = {"left_hand": None, "right_hand": None, "pose": None}
        if hands.multi_hand_landmarks:
            for landmarks, handedness in zip(
                hands.multi_hand_landmarks, hands.multi_handedness
            ):
                side = handedness.classification[0].label.lower()
                key = "left_hand" if side == "left" else "right_hand"
                out[key] = self._landmark_array(landmarks)
        if pose.pose_landmarks:
            out["pose"] = self._landmark_array(pose.pose_landmarks)
        return out

    def close(self):
        self._hands.close()
        self._pose.close()


BACKENDS = {"marker": MarkerBackend, "mediapipe": MediaPipeBackend}


def get_backend(name, **kwargs):
    """Instantiate a backend by name ('marker' or 'mediapipe')."""
    if name not in BACKENDS:
        raise ValueError(f"unknown backend {name!r}, expected one of {sorted(BACKENDS)}")
    return BACKENDS[name](**kwargs)
