"""Seeded synthetic instances for trend filtering and matrix completion.

All randomness comes from ``SplitMix64`` so an instance depends only on its
spec.  Draw order is part of the format: changing it changes every instance.
"""

from dataclasses import asdict, dataclass
from fractions import Fraction
import math

import numpy as np

from .rng import SplitMix64
from .trendfilter import apply_D


@dataclass(frozen=True)
class TrendGenSpec:
    N: int
    n: int
    r: int = 1
    snr: float = 1.0
    pieces: int = 5
    seed: int = 0

    def __post_init__(self):
        if self.r not in (1, 2):
            raise ValueError("trend instances support r in {1, 2}")
        if self.N < self.pieces or self.n < self.pieces or self.pieces < 1:
            raise ValueError("N and n must be at least the number of pieces")
        if self.n <= self.r + 1:
            raise ValueError("n too small for the requested order")
        if not self.snr > 0:
            raise ValueError("snr must be positive")

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class MatrixGenSpec:
    m: int
    n: int
    r: int = 5
    r1: int = 5
    snr: float = 5.0
    nnzr: float = 0.3
    delta_rel: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if min(self.m, self.n) < 1:
            raise ValueError("matrix sizes must be positive")
        if not (1 <= self.r <= min(self.m, self.n) and 1 <= self.r1 < self.m):
            raise ValueError("ranks must satisfy 1 <= r <= min(m, n) and 1 <= r1 < m")
        if not (0.0 < self.nnzr <= 1.0):
            raise ValueError("nnzr must lie in (0, 1]")
        if not (self.snr > 0 and self.delta_rel > 0):
            raise ValueError("snr and delta_rel must be positive")

    def to_dict(self):
        return asdict(self)


def _piece_bounds(n, pieces):
    """Start offsets of ``pieces`` near-equal consecutive blocks of range(n)."""
    return [(i * n) // pieces for i in range(pieces + 1)]


def trend_signal(n, r, pieces, rng):
    """Piecewise constant (r=1) or continuous piecewise linear (r=2) signal,
    scaled so that ||D^(r) x||_1 = 1."""
    bounds = _piece_bounds(n, pieces)
    draws = rng.uniform(pieces, low=-0.5, high=0.5)
    x = np.empty(n)
    if r == 1:
        for i in range(pieces):
            x[bounds[i]: bounds[i + 1]] = draws[i]
    else:
        slopes = np.empty(n - 1)
        for i in range(pieces):
            slopes[bounds[i]: bounds[i + 1]] = draws[i]
        x[0] = 0.0
        x[1:] = np.cumsum(slopes[: n - 1])
    # The jumps (r=1) or kinks (r=2) are exactly the differences between
    # consecutive draws; if they all vanish the signal lies in ker D^(r).
    if not np.any(np.diff(draws)):
        raise ValueError("degenerate signal: it lies in the kernel of D^(r)")
    return x / np.abs(apply_D(r, x)).sum()


def gen_trend_instance(spec):
    """Returns (A, b, x_star, delta) for min ||b - A x||^2 s.t. ||D^(r) x||_1 <= delta."""
    rng = SplitMix64(spec.seed)
    x_star = trend_signal(spec.n, spec.r, spec.pieces, rng)
    A = rng.normal((spec.N, spec.n))
    signal = A @ x_star
    eps = rng.normal(spec.N)
    if math.isinf(spec.snr):
        b = signal
    else:
        sigma2 = float(signal @ signal) / (spec.n * spec.snr)
        b = signal + math.sqrt(sigma2) * eps
    delta = float(np.abs(apply_D(spec.r, x_star)).sum())
    return A, b, x_star, delta


def observed_count(nnzr, m, n):
    """ceil(nnzr * m * n) with nnzr read as the decimal it prints as.

    Plain float arithmetic gives 0.3 * 40000 = 12000.000000000002.
    """
    return min(m * n, math.ceil(Fraction(repr(float(nnzr))) * m * n))


def sample_coordinates(m, n, count, rng):
    """``count`` distinct (row, col) pairs, uniformly chosen, sorted row-major."""
    flat = np.sort(rng.permutation(m * n)[:count])
    return flat // n, flat % n


def gen_matrix_instance(spec):
    """Returns (B_observed, (rows, cols), P1, delta, ground_truth).

    B_observed is m x n with zeros outside the observed set.
    """
    m, n = spec.m, spec.n
    rng = SplitMix64(spec.seed)
    U = rng.normal((m, spec.r))
    V = rng.normal((n, spec.r))
    Z = rng.normal((n, spec.r1))
    P1, _ = np.linalg.qr(rng.normal((m, spec.r1)))
    low_rank = U @ V.T
    truth = P1 @ Z.T + low_rank
    E = rng.normal((m, n))
    if not math.isinf(spec.snr):
        E *= math.sqrt(float(np.var(truth)) / spec.snr)
    else:
        E[:] = 0.0
    B = truth + E
    count = observed_count(spec.nnzr, m, n)
    rows, cols = sample_coordinates(m, n, count, rng)
    B_obs = np.zeros((m, n))
    B_obs[rows, cols] = B[rows, cols]
    projected = low_rank - P1 @ (P1.T @ low_rank)
    delta = spec.delta_rel * float(np.linalg.svd(projected, compute_uv=False).sum())
    return B_obs, (rows, cols), P1, delta, truth
