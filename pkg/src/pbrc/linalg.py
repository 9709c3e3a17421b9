"""Dense linear algebra and deterministic random generation.

All arithmetic is 64-bit float. Matrices are plain 2-D C-ordered
``numpy.ndarray`` values; every public operation validates shapes and
finiteness and is a pure function of its inputs.

Random number generation
------------------------
``RngStream`` is a counter-based SplitMix64 stream, chosen so that any
implementation in any language can reproduce the exact same weights from a
seed. Draw ``i`` (0-based, counted by ``position``) is produced as::

    state  = (seed + (i + 1) * 0x9E3779B97F4A7C15)          mod 2**64
    z      = state
    z      = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9           mod 2**64
    z      = (z ^ (z >> 27)) * 0x94D049BB133111EB           mod 2**64
    word   = z ^ (z >> 31)
    u01    = (word >> 11) * 2.0**-53                        # in [0, 1)
    draw   = low + (high - low) * u01

Normal variates consume words in pairs via Box-Muller: for output indices
(2j, 2j+1) the stream yields words (w1, w2) and::

    u1 = ((w1 >> 11) + 1) * 2.0**-53                        # in (0, 1]
    u2 = (w2 >> 11) * 2.0**-53
    r  = sqrt(-2 ln u1)
    out[2j] = r cos(2 pi u2),  out[2j+1] = r sin(2 pi u2)

A request for an odd count still consumes a full pair.
"""

import collections
import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import (
    ConvergenceError,
    DegenerateMatrixError,
    DimensionError,
    SingularMatrixError,
)

_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_U64_MAX = 2**64 - 1


def _mix64(z):
    """SplitMix64 output finalizer, vectorized over uint64 arrays."""
    z = (z ^ (z >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    return z ^ (z >> np.uint64(31))


@dataclass
class RngStream:
    """Deterministic, position-addressable random stream.

    Identical ``seed`` gives an identical draw sequence on every platform;
    ``position`` counts 64-bit words consumed.
    """

    seed: int
    position: int = 0

    def __post_init__(self):
        if not 0 <= self.seed <= _U64_MAX:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        if self.position < 0:
            raise ValueError("position must be nonnegative")

    def _next_words(self, n):
        idx = np.arange(self.position + 1, self.position + n + 1, dtype=np.uint64)
        self.position += n
        return _mix64(np.uint64(self.seed) + idx * _GAMMA)

    def uniform(self, n, low=0.0, high=1.0):
        """``n`` i.i.d. draws from uniform[low, high)."""
        if n < 0:
            raise ValueError("n must be nonnegative")
        if low > high:
            raise ValueError(f"uniform interval is inverted: [{low}, {high})")
        u = (self._next_words(n) >> np.uint64(11)) * 2.0**-53
        return low + (high - low) * u

    def normal(self, n, sd=1.0):
        """``n`` i.i.d. N(0, sd^2) draws via Box-Muller pairs."""
        if n < 0:
            raise ValueError("n must be nonnegative")
        pairs = (n + 1) // 2
        w = self._next_words(2 * pairs)
        u1 = ((w[0::2] >> np.uint64(11)) + np.uint64(1)) * 2.0**-53
        u2 = (w[1::2] >> np.uint64(11)) * 2.0**-53
        r = np.sqrt(-2.0 * np.log(u1))
        theta = (2.0 * math.pi) * u2
        out = np.empty(2 * pairs)
        out[0::2] = r * np.cos(theta)
        out[1::2] = r * np.sin(theta)
        return sd * out[:n]


def _require_matrix(a, name):
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got ndim={a.ndim}")
    if a.shape[0] < 1 or a.shape[1] < 1:
        raise DimensionError(f"{name} must have positive dimensions, got {a.shape}")
    if not np.isfinite(a).all():
        raise ValueError(f"{name} contains non-finite entries")
    return a


def random_matrix(rows, cols, low, high, rng):
    """Matrix with i.i.d. uniform[low, high) entries drawn row-major from ``rng``.

    A degenerate interval (low == high) yields the constant matrix.
    """
    if rows < 1 or cols < 1:
        raise DimensionError(f"matrix dimensions must be positive, got {rows}x{cols}")
    return rng.uniform(rows * cols, low, high).reshape(rows, cols)


def _start_vectors(n):
    """Deterministic fallback sequence of power-iteration start vectors."""
    v = np.ones(n)
    yield v / np.linalg.norm(v)
    v = np.arange(1.0, n + 1.0)
    yield v / np.linalg.norm(v)
    for i in range(n):
        e = np.zeros(n)
        e[i] = 1.0
        yield e


_RITZ_WINDOW = 24
_STOP_SPAN = 16


def _window_radius(basis, growth):
    """Largest Ritz-value modulus over the recent power-iterate window.

    ``basis`` holds p+1 consecutive normalized iterates with
    ``A basis[i] = growth[i] * basis[i+1]``, so the action of A on the
    window span is known without extra products. The window is
    orthonormalized (trailing directions below 1e-12 relative content are
    dropped) and A is compressed onto it; eigenvalues of that small matrix
    track the dominant eigenvalues even when several moduli nearly tie or
    form complex pairs, where raw norm ratios oscillate forever.
    """
    v = np.column_stack(basis[:-1])
    av = np.column_stack(basis[1:]) * np.asarray(growth)
    q, r = np.linalg.qr(v)
    diag = np.abs(np.diag(r))
    keep = len(diag)
    while keep > 1 and diag[keep - 1] <= 1e-12 * diag[0]:
        keep -= 1
    b = q[:, :keep].T @ av[:, :keep]
    try:
        m = scipy.linalg.solve_triangular(
            r[:keep, :keep], b.T, trans="T", lower=False, check_finite=False
        ).T
        est = float(np.max(np.abs(np.linalg.eigvals(m))))
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError, ValueError):
        return None
    return est if math.isfinite(est) else None


def estimate_spectral_radius(w, tol=1e-9, max_iters=10000):
    """Spectral radius max|lambda_i| of a square matrix by power iteration.

    Iterates ``v <- Av/||Av||`` from the normalized all-ones vector, one
    product per step, and reads the estimate off a sliding window of the
    last iterates (see ``_window_radius``): the window compresses A onto
    its recent Krylov span, which resolves complex conjugate pairs and
    clusters of nearly equal moduli that defeat plain norm ratios.
    Convergence is declared once the last ``_STOP_SPAN`` estimates all
    agree to within relative ``tol`` — a spread test, because per-step
    changes understate the remaining error when convergence is slow.

    Raises ``ConvergenceError`` carrying the best estimate if ``max_iters``
    matrix-vector products are exhausted.
    """
    w = _require_matrix(w, "W")
    n, m = w.shape
    if n != m:
        raise DimensionError(f"W must be square, got {w.shape}")
    if tol <= 0:
        raise ValueError("tol must be positive")
    if max_iters < 2:
        raise ValueError("max_iters must be at least 2")
    if n == 1:
        return abs(float(w[0, 0]))

    starts = _start_vectors(n)
    basis = [next(starts)]
    growth = []
    history = collections.deque(maxlen=_STOP_SPAN)
    rho_k = None
    for _ in range(max_iters):
        av = w @ basis[-1]
        g = float(np.linalg.norm(av))
        if not math.isfinite(g):
            raise ConvergenceError(
                "power iteration overflowed; rescale the matrix first", rho_k
            )
        if g == 0.0:
            # The orbit died; restart from the next deterministic vector.
            # If every start (including the full basis) dies, the matrix is
            # nilpotent and the radius is exactly zero.
            nxt = next(starts, None)
            if nxt is None:
                return 0.0
            basis = [nxt]
            growth = []
            history.clear()
            continue
        basis.append(av / g)
        growth.append(g)
        if len(basis) > min(n, _RITZ_WINDOW) + 1:
            basis.pop(0)
            growth.pop(0)

        est = _window_radius(basis, growth)
        if est is None:
            history.clear()
            continue
        rho_k = est
        history.append(est)
        if len(history) == _STOP_SPAN and max(history) - min(history) <= tol * max(
            est, 1e-300
        ):
            return est

    raise ConvergenceError(
        f"spectral radius did not converge within {max_iters} iterations "
        f"(best estimate {rho_k})",
        rho_k,
    )


def rescale_to_spectral_radius(w, rho, tol=1e-9, max_iters=10000):
    """Rescale a square matrix to spectral radius ``rho``.

    Returns ``rho * W / radius(W)``. The target must lie in (0, 1]; a zero
    matrix (radius 0) cannot be rescaled.
    """
    w = _require_matrix(w, "W")
    if w.shape[0] != w.shape[1]:
        raise DimensionError(f"W must be square, got {w.shape}")
    if not 0.0 < rho <= 1.0:
        raise ValueError(f"target spectral radius must be in (0, 1], got {rho}")
    measured = estimate_spectral_radius(w, tol=tol, max_iters=max_iters)
    if measured == 0.0:
        raise DegenerateMatrixError("matrix has spectral radius 0 and cannot be rescaled")
    return (rho / measured) * w


def ridge_solve(x, y, lam):
    """Closed-form ridge readout ``W = ((X'X + lam I)^-1 X'Y)'``.

    ``x`` is T x N, ``y`` is T x C; the result is C x N. The symmetric
    system is solved by Cholesky factorization, never by explicit inverse.
    With ``lam = 0`` the Gram matrix must be numerically positive definite.
    """
    x = _require_matrix(x, "X")
    y = _require_matrix(y, "Y")
    if x.shape[0] != y.shape[0]:
        raise DimensionError(
            f"X and Y must have the same number of rows, got {x.shape[0]} and {y.shape[0]}"
        )
    if lam < 0:
        raise ValueError(f"lambda must be nonnegative, got {lam}")
    gram = x.T @ x
    gram[np.diag_indices_from(gram)] += lam
    rhs = x.T @ y
    try:
        factor = scipy.linalg.cho_factor(gram, lower=True, check_finite=False)
    except np.linalg.LinAlgError as exc:
        hint = " (pass lambda > 0 to regularize)" if lam == 0 else ""
        raise SingularMatrixError(f"ridge system is singular at lambda={lam}{hint}") from exc
    w = scipy.linalg.cho_solve(factor, rhs, check_finite=False)
    return np.ascontiguousarray(w.T)
