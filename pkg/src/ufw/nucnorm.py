"""Generalized nuclear-norm constraint ||P X Q||_* <= delta.

T = ker(X -> P X Q) and S is the constraint set inside T-perp.  Matrices are
m x n and travel through the solvers as column-major flattened vectors.
"""

from dataclasses import dataclass, field

import numpy as np

from .core import NumericalFailure
from .region import DecomposedRegion, VertexHandle, continuous_key
from .rng import SplitMix64

ROUNDOFF_REDUCED = 1e-13


def to_matrix(x, shape):
    return np.reshape(x, shape, order="F")


def to_vector(X):
    return np.ravel(X, order="F")


def pseudo_inverse(M):
    """Moore-Penrose inverse from a full SVD, cutting singular values below
    max(rows, cols) * sigma_1 * 1e-12."""
    M = np.asarray(M, dtype=float)
    if M.size == 0:
        return M.T.copy()
    U, s, Vt = np.linalg.svd(M, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return np.zeros(M.T.shape)
    cutoff = max(M.shape) * s[0] * 1e-12
    inv = np.where(s > cutoff, 1.0 / np.where(s > cutoff, s, 1.0), 0.0)
    return (Vt.T * inv) @ U.T


@dataclass
class SingularPair:
    sigma1: float
    u1: np.ndarray
    v1: np.ndarray
    iterations: int = 0
    residual: float = 0.0
    # Final iteration subspace, reusable as a warm start.
    basis: np.ndarray = field(default=None, repr=False)


def leading_singular_pair(C=None, tol=1e-9, max_iter=2000, matvec=None, rmatvec=None,
                          shape=None, start=None, seed=0, block=1):
    """Leading singular triple of C by (block) power iteration on C^T C.

    Either pass a dense ``C`` or the pair ``matvec`` (V -> C V), ``rmatvec``
    (U -> C^T U) together with ``shape``; both must accept 2-D blocks.  With
    ``block=1`` this is plain power iteration v <- normalize(C^T C v).  Larger
    blocks iterate a subspace and extract the top pair by Rayleigh-Ritz, which
    keeps the cost bounded when the leading singular values are clustered.
    Convergence is declared when ||C^T u - sigma v|| <= tol * sigma.
    """
    if C is not None:
        C = np.asarray(C, dtype=float)
        if not np.all(np.isfinite(C)):
            raise ValueError("matrix has non-finite entries")
        shape = C.shape
        matvec, rmatvec = C.__matmul__, C.T.__matmul__
    k, l = shape
    p = max(1, min(int(block), l))
    V = SplitMix64(seed).normal((l, p))
    if start is not None:
        start = np.asarray(start, dtype=float).reshape(l, -1)[:, :p]
        V[:, : start.shape[1]] = start
    V, _ = np.linalg.qr(V)
    res = rel = np.inf
    sigma = sigma_prev = sigma_step = 0.0
    for it in range(1, max_iter + 1):
        W = matvec(V)
        Z = rmatvec(W)
        theta, Y = np.linalg.eigh(V.T @ Z)
        y = Y[:, -1]
        w = W @ y
        sigma = float(np.linalg.norm(w))
        if sigma == 0.0:
            return SingularPair(0.0, np.eye(k, 1).ravel(), np.eye(l, 1).ravel(), it, 0.0, V)
        u, v = w / sigma, V @ y
        res = float(np.linalg.norm(Z @ y / sigma - sigma * v))
        rel = res / sigma
        if rel <= tol:
            return SingularPair(sigma, u, v, it, rel, V @ Y[:, ::-1])
        sigma_step, sigma_prev = abs(sigma - sigma_prev), sigma
        V, _ = np.linalg.qr(Z)
    # A cluster wider than the block slows the vector down but not sigma, and
    # any vector in the cluster is as good for the oracle; only a sigma that is
    # still moving is a genuine failure.
    if rel > 100 * tol and sigma_step > tol * sigma:
        raise NumericalFailure(
            f"power iteration stalled after {max_iter} steps (relative residual {rel:.2e})"
        )
    return SingularPair(sigma, u, v, max_iter, rel, V)


def _is_orthogonal_projection(M, tol=1e-12):
    M = np.asarray(M)
    if M.shape[0] != M.shape[1]:
        return False
    scale = max(1.0, float(np.abs(M).max()))
    return (np.abs(M - M.T).max() <= tol * scale
            and np.abs(M @ M - M).max() <= 1e-10 * scale)


class GenNucNormRegion(DecomposedRegion):
    """Region {X : ||P X Q||_* <= delta} for P (k x m) and Q (n x l).

    ``projection_flag`` is set when P and Q are orthogonal projections, in
    which case P+ = P and Q+ = Q and the oracle works with P C Q directly.
    """

    polyhedral = False

    def __init__(self, P, Q, delta, lmo_tol=1e-9, lmo_max_iter=2000, lmo_block=8, _P1=None):
        P = np.asarray(P, dtype=float)
        Q = np.asarray(Q, dtype=float)
        if not delta > 0:
            raise ValueError("delta must be positive")
        self.P, self.Q, self.delta = P, Q, float(delta)
        self.shape = (P.shape[1], Q.shape[0])
        self.ambient_dim = self.shape[0] * self.shape[1]
        self.lmo_tol, self.lmo_max_iter, self.lmo_block = lmo_tol, lmo_max_iter, lmo_block
        self.projection_flag = _is_orthogonal_projection(P) and _is_orthogonal_projection(Q)
        if self.projection_flag:
            self.Pplus, self.Qplus = P, Q
        else:
            self.Pplus, self.Qplus = pseudo_inverse(P), pseudo_inverse(Q)
        self.PplusP = self.Pplus @ P
        self.QQplus = Q @ self.Qplus
        self._P1 = _P1
        self._Q_identity = Q.shape[0] == Q.shape[1] and np.array_equal(Q, np.eye(Q.shape[0]))
        rank_p = int(round(np.trace(self.PplusP)))
        rank_q = int(round(np.trace(self.QQplus)))
        self.subspace_dim = self.ambient_dim - rank_p * rank_q

    @classmethod
    def side_information(cls, P1, n, delta, **kw):
        """||(I - P1 P1^T) X||_* <= delta with P1 having orthonormal columns."""
        P1 = np.asarray(P1, dtype=float)
        P = np.eye(P1.shape[0]) - P1 @ P1.T
        return cls(P, np.eye(n), delta, _P1=P1, **kw)

    def _left(self, X):
        if self._P1 is not None:
            return X - self._P1 @ (self._P1.T @ X)
        return self.PplusP @ X

    def _right(self, X):
        return X if self._Q_identity else X @ self.QQplus

    def project_Tperp_matrix(self, X):
        X = np.asarray(X, dtype=float)
        if X.shape != self.shape:
            raise ValueError(f"matrix has shape {X.shape}, expected {self.shape}")
        return self._right(self._left(X))

    def project_Tperp(self, x):
        x = self.check_vector(x)
        return to_vector(self._right(self._left(to_matrix(x, self.shape))))

    def project_T(self, x):
        x = self.check_vector(x)
        return x - self.project_Tperp(x)

    def reduced_operators(self, C):
        """matvec/rmatvec of C_bar = (P+)^T C (Q+)^T without forming it."""
        if self.projection_flag:
            if self._P1 is not None:
                left = lambda u: u - self._P1 @ (self._P1.T @ u)
            else:
                left = self.P.__matmul__
            right = (lambda v: v) if self._Q_identity else self.Q.__matmul__
            matvec = lambda v: left(C @ right(v))
            rmatvec = lambda u: right(C.T @ left(u))
            shape = (self.P.shape[0], self.Q.shape[1])
        else:
            PpT, QpT = self.Pplus.T, self.Qplus.T
            matvec = lambda v: PpT @ (C @ (QpT @ v))
            rmatvec = lambda u: self.Qplus @ (C.T @ (self.Pplus @ u))
            shape = (PpT.shape[0], QpT.shape[1])
        return matvec, rmatvec, shape

    def reduced_matrix(self, C):
        """C_bar = (P+)^T C (Q+)^T, or P C Q when P and Q are projections."""
        if self.projection_flag:
            X = self._left(C) if self._P1 is not None else self.P @ C
            return X if self._Q_identity else X @ self.Q
        return self.Pplus.T @ C @ self.Qplus.T

    def lmo(self, c, warm=None):
        c = self._check_cost(c)
        C = to_matrix(c, self.shape)
        Cbar = self.reduced_matrix(C)
        # C in T up to roundoff: every point of S has value zero.
        if np.linalg.norm(Cbar) <= ROUNDOFF_REDUCED * np.linalg.norm(C):
            x = np.zeros(self.ambient_dim)
            return VertexHandle(continuous_key(x), x)
        start = warm.aux if warm is not None and warm.aux is not None else None
        pair = leading_singular_pair(Cbar, tol=self.lmo_tol, max_iter=self.lmo_max_iter,
                                     start=start, block=self.lmo_block)
        if pair.sigma1 == 0.0:
            X = np.zeros(self.shape)
        else:
            X = -self.delta * np.outer(self.Pplus @ pair.u1, self.Qplus.T @ pair.v1)
        x = to_vector(X)
        return VertexHandle(continuous_key(x), x, aux=pair.basis)

    def default_start(self):
        return np.zeros(self.ambient_dim)


def lmo_nucnorm(region, C):
    """Oracle on a matrix gradient; returns the m x n minimizer."""
    return to_matrix(region.lmo(to_vector(np.asarray(C, dtype=float))).point, region.shape)


def project_Tperp_nuc(region, X):
    return region.project_Tperp_matrix(X)


def project_T_nuc(region, X):
    X = np.asarray(X, dtype=float)
    return X - region.project_Tperp_matrix(X)
