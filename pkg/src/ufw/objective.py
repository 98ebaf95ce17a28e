"""Smooth convex objectives, step-size estimation and exact line search."""

import math

import numpy as np

from .rng import SplitMix64

GOLDEN_RATIO_INV = (math.sqrt(5.0) - 1.0) / 2.0


class SmoothObjective:
    """Contract used by the solvers.

    Subclasses implement ``value`` and ``gradient``.  ``exact_linesearch``
    falls back to golden-section search; quadratic objectives override it.
    ``smoothness_bound`` returns a Lipschitz constant of the gradient when one
    is known, which is what ``estimate_step_eta`` uses for custom objectives.
    """

    dim = None

    def value(self, x):
        raise NotImplementedError

    def gradient(self, x):
        raise NotImplementedError

    def value_and_gradient(self, x):
        return self.value(x), self.gradient(x)

    def smoothness_bound(self):
        raise NotImplementedError(
            f"{type(self).__name__} has no smoothness bound; pass eta explicitly"
        )

    def exact_linesearch(self, y, d, alpha_max, grad=None):
        return golden_section_linesearch(self, y, d, alpha_max)


def _check_linesearch_args(y, d, alpha_max):
    if not (np.all(np.isfinite(y)) and np.all(np.isfinite(d))):
        raise ValueError("line search received non-finite point or direction")
    if not (math.isfinite(alpha_max) and alpha_max >= 0):
        raise ValueError(f"alpha_max must be finite and non-negative, got {alpha_max}")


def quadratic_step(slope, curvature, alpha_max):
    """Minimize ``slope * a + curvature * a**2`` over [0, alpha_max]."""
    if curvature <= 0.0:
        return alpha_max if slope < 0.0 else 0.0
    alpha = -slope / (2.0 * curvature)
    return min(max(alpha, 0.0), alpha_max)


def golden_section_linesearch(objective, y, d, alpha_max, tol=1e-12, max_iter=200):
    _check_linesearch_args(y, d, alpha_max)
    if alpha_max == 0.0:
        return 0.0
    phi = lambda a: objective.value(y + a * d)
    lo, hi = 0.0, float(alpha_max)
    width_tol = tol * max(1.0, alpha_max)
    a = hi - GOLDEN_RATIO_INV * (hi - lo)
    b = lo + GOLDEN_RATIO_INV * (hi - lo)
    fa, fb = phi(a), phi(b)
    for _ in range(max_iter):
        if hi - lo <= width_tol:
            break
        if fa <= fb:
            hi, b, fb = b, a, fa
            a = hi - GOLDEN_RATIO_INV * (hi - lo)
            fa = phi(a)
        else:
            lo, a, fa = a, b, fb
            b = lo + GOLDEN_RATIO_INV * (hi - lo)
            fb = phi(b)
    # The bracket midpoint is not guaranteed to beat the endpoints for
    # non-unimodal roundoff, so compare explicitly and never increase f.
    mid = 0.5 * (lo + hi)
    candidates = [(phi(0.0), 0.0), (phi(mid), mid), (phi(alpha_max), float(alpha_max))]
    return min(candidates, key=lambda t: (t[0], t[1]))[1]


class LeastSquaresObjective(SmoothObjective):
    """f(x) = ||b - A x||_2^2.

    When n <= N the Gram matrix A^T A is formed once, so each gradient costs an
    n x n product instead of two N x n ones.
    """

    def __init__(self, A, b, use_gram=None):
        self.A = np.asarray(A, dtype=float)
        self.b = np.asarray(b, dtype=float)
        if self.A.ndim != 2 or self.b.shape != (self.A.shape[0],):
            raise ValueError("A must be N x n and b of length N")
        self.dim = self.A.shape[1]
        if use_gram is None:
            use_gram = self.A.shape[1] <= self.A.shape[0]
        self._bb = float(self.b @ self.b)
        self._Atb = self.A.T @ self.b
        self._gram = self.A.T @ self.A if use_gram else None

    def value(self, x):
        r = self.b - self.A @ x
        return float(r @ r)

    def gradient(self, x):
        if self._gram is not None:
            return 2.0 * (self._gram @ x - self._Atb)
        return 2.0 * (self.A.T @ (self.A @ x) - self._Atb)

    def value_and_gradient(self, x):
        if self._gram is None:
            Ax = self.A @ x
            r = self.b - Ax
            return float(r @ r), 2.0 * (self.A.T @ Ax - self._Atb)
        Gx = self._gram @ x
        f = float(x @ Gx - 2.0 * (x @ self._Atb) + self._bb)
        return max(f, 0.0), 2.0 * (Gx - self._Atb)

    def curvature(self, d):
        """||A d||^2."""
        if self._gram is not None:
            return float(d @ (self._gram @ d))
        Ad = self.A @ d
        return float(Ad @ Ad)

    def exact_linesearch(self, y, d, alpha_max, grad=None):
        _check_linesearch_args(y, d, alpha_max)
        if grad is None:
            grad = self.gradient(y)
        # f(y + a d) = f(y) + a <grad, d> + a^2 ||A d||^2
        return quadratic_step(float(grad @ d), self.curvature(d), float(alpha_max))

    def operator_norm_sq(self, tol=1e-6, max_iter=500, seed=0):
        """||A||_op^2 by power iteration on A^T A."""
        v = SplitMix64(seed).normal(self.dim)
        v /= np.linalg.norm(v)
        lam = 0.0
        for _ in range(max_iter):
            w = self._gram @ v if self._gram is not None else self.A.T @ (self.A @ v)
            lam_new = float(v @ w)
            nw = np.linalg.norm(w)
            if nw == 0.0:
                return 0.0
            v = w / nw
            if abs(lam_new - lam) <= tol * abs(lam_new):
                return lam_new
            lam = lam_new
        return lam

    def smoothness_bound(self):
        return 2.0 * self.operator_norm_sq()


class MaskedFrobeniusObjective(SmoothObjective):
    """f(X) = ||P_Omega(X - B)||_F^2 on column-major flattened m x n matrices.

    ``rows``/``cols`` list the observed coordinates; ``values`` holds B on them.
    """

    def __init__(self, shape, rows, cols, values):
        self.shape = tuple(int(s) for s in shape)
        m, n = self.shape
        self.rows = np.asarray(rows, dtype=np.int64)
        self.cols = np.asarray(cols, dtype=np.int64)
        self.values = np.asarray(values, dtype=float)
        if not (self.rows.shape == self.cols.shape == self.values.shape):
            raise ValueError("rows, cols and values must have equal length")
        if self.rows.size and (self.rows.min() < 0 or self.rows.max() >= m
                               or self.cols.min() < 0 or self.cols.max() >= n):
            raise ValueError("observed coordinate out of range")
        self.flat_index = self.rows + m * self.cols
        self.dim = m * n

    @classmethod
    def from_matrix(cls, B, rows, cols):
        B = np.asarray(B, dtype=float)
        return cls(B.shape, rows, cols, B[np.asarray(rows), np.asarray(cols)])

    def residual(self, x):
        return x[self.flat_index] - self.values

    def value(self, x):
        r = self.residual(x)
        return float(r @ r)

    def gradient(self, x):
        g = np.zeros(self.dim)
        g[self.flat_index] = 2.0 * self.residual(x)
        return g

    def value_and_gradient(self, x):
        r = self.residual(x)
        g = np.zeros(self.dim)
        g[self.flat_index] = 2.0 * r
        return float(r @ r), g

    def smoothness_bound(self):
        return 2.0

    def exact_linesearch(self, y, d, alpha_max, grad=None):
        _check_linesearch_args(y, d, alpha_max)
        dO = d[self.flat_index]
        slope = 2.0 * float(self.residual(y) @ dO)
        return quadratic_step(slope, float(dO @ dO), float(alpha_max))


def estimate_step_eta(objective, region=None, override=None):
    """Gradient step size for the subspace step.

    Least squares uses 1/||A||^2 (the experimental choice, half of 1/L for
    f = ||b - Ax||^2); the masked Frobenius loss uses 1/2; anything else uses
    1/L from ``smoothness_bound``.
    """
    if override is not None:
        if not override > 0:
            raise ValueError("eta override must be positive")
        return float(override)
    if isinstance(objective, LeastSquaresObjective):
        norm_sq = objective.operator_norm_sq()
        if norm_sq <= 0.0:
            raise ValueError("A is zero; the step size is undefined")
        return 1.0 / norm_sq
    if isinstance(objective, MaskedFrobeniusObjective):
        return 0.5
    L = objective.smoothness_bound()
    if not L > 0:
        raise ValueError("smoothness bound must be positive")
    return 1.0 / L
