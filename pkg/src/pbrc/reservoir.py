"""Single unidirectional echo state network.

The reservoir is a fixed random recurrent network; only the linear readout
is ever trained. State follows the leaky update

    x(t+1) = (1 - alpha) * x(t) + alpha * tanh(W_in u(t) + W_r x(t))

with ``W_in`` drawn uniform(-input_scaling, +input_scaling) and ``W_r``
drawn uniform(-0.5, 0.5) then rescaled to the configured spectral radius,
which keeps the echo state property (state forgets its initial condition).
"""

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, EmptyInputError
from .linalg import RngStream, random_matrix, rescale_to_spectral_radius

POOLING_POLICIES = ("mean", "last")


@dataclass(frozen=True)
class ReservoirConfig:
    """Hyperparameters of one reservoir.

    ``n_r`` nodes, leak rate ``alpha`` in (0, 1], target spectral radius
    ``rho`` in (0, 1], input scaling > 0, 64-bit seed, and a washout count
    of leading states dropped before pooling. Defaults are the tuned
    values used throughout: alpha 0.6, rho 0.3.
    """

    n_r: int
    alpha: float = 0.6
    rho: float = 0.3
    input_scaling: float = 1.0
    seed: int = 0
    washout: int = 0
    activation: str = "tanh"

    def __post_init__(self):
        if self.n_r < 1:
            raise ValueError(f"n_r must be at least 1, got {self.n_r}")
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError(f"alpha must be in (0, 1], got {self.alpha}")
        if not 0.0 < self.rho <= 1.0:
            raise ValueError(f"rho must be in (0, 1], got {self.rho}")
        if self.input_scaling <= 0.0:
            raise ValueError(f"input_scaling must be positive, got {self.input_scaling}")
        if not 0 <= self.seed <= 2**64 - 1:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if self.washout < 0:
            raise ValueError(f"washout must be nonnegative, got {self.washout}")
        if self.activation != "tanh":
            raise ValueError(f"unsupported activation {self.activation!r}")


@dataclass(frozen=True)
class ReservoirWeights:
    """Frozen random matrices of one reservoir: ``w_in`` (n_r x n_in) and
    ``w_r`` (n_r x n_r, spectral radius equal to the configured rho)."""

    w_in: np.ndarray
    w_r: np.ndarray

    @property
    def n_r(self):
        return self.w_r.shape[0]

    @property
    def n_in(self):
        return self.w_in.shape[1]


@dataclass(frozen=True)
class StateTrajectory:
    """Collected states, one row per consumed frame (row t = x(t+1))."""

    states: np.ndarray
    t_len: int


def init_reservoir(config, n_in):
    """Draw reservoir weights from ``RngStream(config.seed)``.

    Draw order is fixed for reproducibility: all of ``w_in`` first
    (row-major), then the raw recurrent matrix, which is rescaled to
    spectral radius ``config.rho``.
    """
    if n_in < 1:
        raise DimensionError(f"n_in must be at least 1, got {n_in}")
    rng = RngStream(config.seed)
    s = config.input_scaling
    w_in = random_matrix(config.n_r, n_in, -s, s, rng)
    w_raw = random_matrix(config.n_r, config.n_r, -0.5, 0.5, rng)
    w_r = rescale_to_spectral_radius(w_raw, config.rho)
    return ReservoirWeights(w_in=w_in, w_r=w_r)


def step(x, u, w, alpha):
    """One leaky state update: (1-alpha)*x + alpha*tanh(W_in u + W_r x)."""
    x = np.asarray(x, dtype=np.float64)
    u = np.asarray(u, dtype=np.float64)
    if x.shape != (w.n_r,):
        raise DimensionError(f"state must have shape ({w.n_r},), got {x.shape}")
    if u.shape != (w.n_in,):
        raise DimensionError(f"input frame must have shape ({w.n_in},), got {u.shape}")
    return (1.0 - alpha) * x + alpha * np.tanh(w.w_in @ u + w.w_r @ x)


def run(w, seq, alpha, x0=None):
    """Drive the reservoir over a T x n_in frame sequence.

    Row t of the result is the state after consuming frame t; the initial
    state defaults to zeros.
    """
    seq = np.asarray(seq, dtype=np.float64)
    if seq.ndim != 2 or seq.shape[0] == 0:
        raise EmptyInputError(f"sequence must be a nonempty T x {w.n_in} array, got shape {seq.shape}")
    if seq.shape[1] != w.n_in:
        raise DimensionError(f"frames have {seq.shape[1]} features, weights expect {w.n_in}")
    if x0 is None:
        x = np.zeros(w.n_r)
    else:
        x = np.asarray(x0, dtype=np.float64)
        if x.shape != (w.n_r,):
            raise DimensionError(f"x0 must have shape ({w.n_r},), got {x.shape}")
    t_len = seq.shape[0]
    states = np.empty((t_len, w.n_r))
    for t in range(t_len):
        x = step(x, seq[t], w, alpha)
        states[t] = x
    return StateTrajectory(states=states, t_len=t_len)


def pool(traj, policy):
    """Reduce a trajectory to one vector: columnwise time mean or the last row."""
    if policy not in POOLING_POLICIES:
        raise ValueError(f"unknown pooling policy {policy!r}, expected one of {POOLING_POLICIES}")
    if traj.t_len < 1:
        raise EmptyInputError("cannot pool an empty trajectory")
    if policy == "mean":
        return traj.states.mean(axis=0)
    return traj.states[-1].copy()


def apply_washout(traj, washout):
    """Drop up to ``washout`` leading states, always keeping at least one."""
    if washout <= 0:
        return traj
    drop = min(washout, traj.t_len - 1)
    return StateTrajectory(states=traj.states[drop:], t_len=traj.t_len - drop)


def esn_encode(w, config, seq, policy="mean"):
    """Encode one sequence with a unidirectional reservoir: run, washout, pool."""
    traj = apply_washout(run(w, seq, config.alpha), config.washout)
    return pool(traj, policy)
