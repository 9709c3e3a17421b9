"""Bidirectional reservoir (BRC): one recurrent matrix, two input matrices.

A sequence is processed twice, in original order and time-reversed, with
the recurrent matrix shared between directions and a separate input matrix
per direction. The two pooled states are concatenated, forward half first,
giving a 2*n_r representation.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError
from .linalg import RngStream, random_matrix, rescale_to_spectral_radius
from .reservoir import ReservoirWeights, apply_washout, pool, run


@dataclass(frozen=True)
class BidirReservoir:
    """Shared recurrent matrix ``w_r`` plus per-direction input matrices."""

    w_r: np.ndarray
    w_in_f: np.ndarray
    w_in_b: np.ndarray
    config: object

    @property
    def n_r(self):
        return self.w_r.shape[0]

    @property
    def n_in(self):
        return self.w_in_f.shape[1]


def init_bidir(config, n_in):
    """Draw BRC weights from ``RngStream(config.seed)``.

    Sub-stream order is fixed: forward input matrix, backward input matrix,
    then the recurrent matrix (rescaled to ``config.rho``).
    """
    if n_in < 1:
        raise DimensionError(f"n_in must be at least 1, got {n_in}")
    rng = RngStream(config.seed)
    s = config.input_scaling
    w_in_f = random_matrix(config.n_r, n_in, -s, s, rng)
    w_in_b = random_matrix(config.n_r, n_in, -s, s, rng)
    w_raw = random_matrix(config.n_r, config.n_r, -0.5, 0.5, rng)
    w_r = rescale_to_spectral_radius(w_raw, config.rho)
    return BidirReservoir(w_r=w_r, w_in_f=w_in_f, w_in_b=w_in_b, config=config)


def reverse_sequence(seq):
    """Time-reverse a T x D frame sequence; features within frames untouched."""
    seq = np.asarray(seq, dtype=np.float64)
    return np.ascontiguousarray(seq[::-1])


def bidir_encode(b, seq, policy="mean"):
    """Pooled forward state concatenated with pooled backward state.

    The backward half is, by construction, a forward-style run of
    (w_r, w_in_b) over the reversed sequence; indices [0, n_r) hold the
    forward half.
    """
    seq = np.asarray(seq, dtype=np.float64)
    if seq.ndim != 2 or seq.shape[1] != b.n_in:
        raise DimensionError(
            f"frames must have {b.n_in} features, got shape {seq.shape}"
        )
    cfg = b.config
    fwd = run(ReservoirWeights(w_in=b.w_in_f, w_r=b.w_r), seq, cfg.alpha)
    bwd = run(ReservoirWeights(w_in=b.w_in_b, w_r=b.w_r), reverse_sequence(seq), cfg.alpha)
    parts = [pool(apply_washout(t, cfg.washout), policy) for t in (fwd, bwd)]
    return np.concatenate(parts)
