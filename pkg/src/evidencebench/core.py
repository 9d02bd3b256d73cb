"""Shared numerical kernels: log-space reductions, running moments,
small SPD linear algebra and reproducible random-number streams.

Everything downstream works on log densities, so the reductions here
are the only place where exponentials are formed.  All of them subtract
the running maximum before exponentiating.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "CoreMathError",
    "log_sum_exp",
    "log_mean_exp",
    "RunningMoments",
    "solve_spd",
    "logdet_spd",
    "cholesky_spd",
    "RngStream",
    "derive_stream_id",
]

# Largest matrix dimension the dense SPD helpers accept.  Nothing in the
# benchmark suite needs more than 8 parameters; 16 leaves headroom.
MAX_SPD_DIM = 16


class CoreMathError(ValueError):
    """Raised when a numerical kernel is handed invalid input."""


def _as_float_array(values, name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.size == 0:
        raise CoreMathError(f"{name}: empty input")
    if np.any(np.isnan(arr)):
        raise CoreMathError(f"{name}: NaN entry in input")
    return arr


def log_sum_exp(log_values) -> float:
    """Return log(sum(exp(v))) without overflow.

    Parameters
    ----------
    log_values : array_like
        Log-scale terms.  ``-inf`` encodes a zero term and is allowed;
        NaN is rejected.

    Returns
    -------
    float
        ``log(sum_i exp(v_i))``.  Equals ``-inf`` when every term is zero.
    """
    arr = _as_float_array(log_values, "log_sum_exp")
    m = float(np.max(arr))
    if math.isinf(m):
        # All -inf (empty sum) or a +inf term dominating everything.
        return m
    return m + math.log(float(np.sum(np.exp(arr - m))))


def log_mean_exp(log_values) -> float:
    """log of the arithmetic mean of exponentials, in log space."""
    arr = _as_float_array(log_values, "log_mean_exp")
    return log_sum_exp(arr) - math.log(arr.size)


@dataclass
class RunningMoments:
    """One-pass mean and variance accumulator (Welford update).

    Batch pushes merge partial aggregates instead of looping, so feeding
    one large array is as fast as numpy allows while staying one-pass.
    """

    count: int = 0
    mean: float = 0.0
    _m2: float = field(default=0.0, repr=False)

    def push(self, x: float) -> None:
        x = float(x)
        if math.isnan(x):
            raise CoreMathError("RunningMoments.push: NaN value")
        self.count += 1
        delta = x - self.mean
        self.mean += delta / self.count
        self._m2 += delta * (x - self.mean)

    def push_many(self, values) -> None:
        arr = _as_float_array(values, "RunningMoments.push_many").ravel()
        n_b = arr.size
        mean_b = float(np.mean(arr))
        m2_b = float(np.sum((arr - mean_b) ** 2))
        if self.count == 0:
            self.count, self.mean, self._m2 = n_b, mean_b, m2_b
            return
        n_a, mean_a = self.count, self.mean
        n = n_a + n_b
        delta = mean_b - mean_a
        self.mean = mean_a + delta * n_b / n
        self._m2 += m2_b + delta * delta * n_a * n_b / n
        self.count = n

    @property
    def variance(self) -> float:
        """Sample variance (n - 1 divisor)."""
        if self.count < 2:
            raise CoreMathError(
                f"variance undefined for count={self.count} (need at least 2)"
            )
        return self._m2 / (self.count - 1)

    @property
    def std_error(self) -> float:
        """Standard error of the mean."""
        return math.sqrt(self.variance / self.count)


def _check_spd_input(matrix) -> np.ndarray:
    a = np.asarray(matrix, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise CoreMathError(f"expected a square matrix, got shape {a.shape}")
    n = a.shape[0]
    if n > MAX_SPD_DIM:
        raise CoreMathError(
            f"matrix dimension {n} exceeds the supported cap {MAX_SPD_DIM}"
        )
    if np.any(~np.isfinite(a)):
        raise CoreMathError("matrix has non-finite entries")
    if not np.allclose(a, a.T, rtol=1e-10, atol=1e-12):
        raise CoreMathError("matrix is not symmetric")
    return a


def cholesky_spd(matrix) -> np.ndarray:
    """Lower-triangular Cholesky factor, with an SPD check."""
    a = _check_spd_input(matrix)
    try:
        return np.linalg.cholesky(a)
    except np.linalg.LinAlgError as exc:
        raise CoreMathError("matrix is not positive definite") from exc


def solve_spd(matrix, rhs) -> np.ndarray:
    """Solve ``matrix @ x = rhs`` for a symmetric positive definite matrix."""
    chol = cholesky_spd(matrix)
    b = np.asarray(rhs, dtype=float)
    if b.shape[0] != chol.shape[0]:
        raise CoreMathError(
            f"rhs length {b.shape[0]} does not match matrix dimension {chol.shape[0]}"
        )
    y = np.linalg.solve(chol, b)
    return np.linalg.solve(chol.T, y)


def logdet_spd(matrix) -> float:
    """Log-determinant of an SPD matrix via its Cholesky factor."""
    chol = cholesky_spd(matrix)
    return 2.0 * float(np.sum(np.log(np.diag(chol))))


def derive_stream_id(*parts) -> int:
    """Map a label tuple (e.g. method name and replicate index) to a
    64-bit stream id.

    Uses SHA-256 of the canonical string form, so the id is stable
    across processes and platforms (unlike the builtin ``hash``).
    """
    text = "\x1f".join(str(p) for p in parts)
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


class RngStream:
    """Reproducible random stream keyed by (seed, stream_id).

    Wraps a counter-based Philox generator; equal keys give bitwise
    identical sequences on every platform.  Independent components of a
    run derive their own child streams instead of sharing one generator.
    """

    def __init__(self, seed: int, stream_id: int = 0):
        self.seed = int(seed) & 0xFFFFFFFFFFFFFFFF
        self.stream_id = int(stream_id) & 0xFFFFFFFFFFFFFFFF
        bitgen = np.random.Philox(key=np.array([self.seed, self.stream_id], dtype=np.uint64))
        self.generator = np.random.Generator(bitgen)

    def child(self, *parts) -> "RngStream":
        """Derive an independent stream for a labelled sub-task."""
        return RngStream(self.seed, derive_stream_id(self.stream_id, *parts))

    # Thin pass-throughs; estimators only use these few draw types.
    def normal(self, loc=0.0, scale=1.0, size=None):
        return self.generator.normal(loc, scale, size)

    def standard_normal(self, size=None):
        return self.generator.standard_normal(size)

    def gamma(self, shape, scale=1.0, size=None):
        return self.generator.gamma(shape, scale, size)

    def uniform(self, low=0.0, high=1.0, size=None):
        return self.generator.uniform(low, high, size)

    def integers(self, low, high=None, size=None):
        return self.generator.integers(low, high, size)

    def __repr__(self) -> str:
        return f"RngStream(seed={self.seed}, stream_id={self.stream_id})"
