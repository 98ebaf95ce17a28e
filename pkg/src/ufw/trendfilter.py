"""l1 trend filtering of order r: ||D^(r) x||_1 <= delta.

T = ker(D^(r)) is spanned by 1, U 1, ..., U^(r-1) 1 where U is the all-ones
upper triangular matrix, and S is the part of the constraint set inside T-perp.
U and U^T are never stored: U x is a suffix cumulative sum and U^T x a prefix
cumulative sum, so every oracle call costs O(n r).
"""

from math import comb

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from .region import DecomposedRegion, VertexHandle

MAX_ORDER = 8
MAX_ENUMERATE = 64


def _check_order(n, r):
    if not (1 <= r < n):
        raise ValueError(f"need 1 <= r < n, got n={n}, r={r}")


def apply_D(r, x):
    """D^(r) x via r first-difference passes, (D x)_i = x_i - x_{i+1}."""
    x = np.asarray(x, dtype=float)
    _check_order(x.shape[0], r)
    for _ in range(r):
        x = x[:-1] - x[1:]
    return x


def dense_D(n, r):
    """Dense D^(r)_n, for tests and small checks only."""
    D = np.eye(n)
    for i in range(r):
        D1 = np.zeros((n - i - 1, n - i))
        idx = np.arange(n - i - 1)
        D1[idx, idx] = 1.0
        D1[idx, idx + 1] = -1.0
        D = D1 @ D
    return D


def apply_U(x, power=1):
    """U^power x: suffix cumulative sums along axis 0."""
    x = np.asarray(x, dtype=float)
    for _ in range(power):
        x = np.cumsum(x[::-1], axis=0)[::-1]
    return x


def apply_Ut(x, power=1):
    """(U^T)^power x: prefix cumulative sums along axis 0."""
    x = np.asarray(x, dtype=float)
    for _ in range(power):
        x = np.cumsum(x, axis=0)
    return x


def kernel_basis(n, r):
    """Orthonormal n x r basis of ker(D^(r)_n) from a QR of [1, U1, ..., U^(r-1) 1]."""
    _check_order(n, r)
    cols = [np.ones(n)]
    for _ in range(r - 1):
        cols.append(apply_U(cols[-1]))
    A = np.column_stack(cols)
    # Column scaling does not change the span and keeps the QR well balanced.
    A /= np.linalg.norm(A, axis=0)
    Q, _ = np.linalg.qr(A)
    return Q


def verify_HL_identity(n, i):
    """Check D^(i)_n U^i == [I_{n-i}, 0] exactly in integer arithmetic.

    Both sides are built as explicit integer matrices.  Entries of U^i are at
    most C(n+i-1, i) and every partial product of D^(i) U^i stays below
    2^i times that, so int64 is exact when that bound fits; otherwise Python
    integers are used.
    """
    _check_order(n, i)
    dtype = np.int64 if comb(n + i - 1, i) * 2**i * n < 2**62 else object
    U = np.triu(np.ones((n, n), dtype=np.int64)).astype(dtype)
    Ui = np.identity(n, dtype=np.int64).astype(dtype)
    for _ in range(i):
        Ui = Ui.dot(U)
    D = np.identity(n, dtype=np.int64).astype(dtype)
    for j in range(i):
        m = n - j
        D1 = np.zeros((m - 1, m), dtype=np.int64)
        idx = np.arange(m - 1)
        D1[idx, idx] = 1
        D1[idx, idx + 1] = -1
        D = D1.astype(dtype).dot(D)
    rhs = np.zeros((n - i, n), dtype=np.int64)
    rhs[np.arange(n - i), np.arange(n - i)] = 1
    return bool(np.array_equal(D.dot(Ui), rhs.astype(dtype)))


class TrendFilterRegion(DecomposedRegion):
    """Region {x : ||D^(r) x||_1 <= delta} split as ker(D^(r)) + S.

    Vertices of S are indexed by ``(j, sign)`` for 0 <= j < n - r; the vertex
    with that key has transformed coordinate z = -sign * delta * e_j.
    """

    def __init__(self, n, r, delta):
        _check_order(n, r)
        if r > MAX_ORDER:
            raise ValueError(f"order r={r} exceeds the supported maximum {MAX_ORDER}")
        if not delta > 0:
            raise ValueError("delta must be positive")
        self.n = self.ambient_dim = int(n)
        self.r = self.subspace_dim = int(r)
        self.delta = float(delta)
        self.Qbasis = kernel_basis(n, r)
        # Q^T U^r = [B1, B2] with B1: r x (n-r), B2: r x r.
        B = apply_Ut(self.Qbasis, r).T
        self.B1, self.B2 = B[:, : n - r], B[:, n - r:]
        if np.linalg.matrix_rank(self.B2) < r:
            raise np.linalg.LinAlgError("B2 is singular")
        self._B2_lu = lu_factor(self.B2)
        # M = B2^{-1} B1, so w = -M z for the back-map.
        self.M = lu_solve(self._B2_lu, self.B1)

    def project_T(self, x):
        x = self.check_vector(x)
        return self.Qbasis @ (self.Qbasis.T @ x)

    def reduced_cost(self, c):
        """c_tilde = c_bar_1 - B1^T B2^{-T} c_bar_2 with c_bar = (U^r)^T c."""
        cbar = apply_Ut(c, self.r)
        c1, c2 = cbar[: self.n - self.r], cbar[self.n - self.r:]
        t = lu_solve(self._B2_lu, c2, trans=1)
        return c1 - self.B1.T @ t

    def back_map(self, z):
        """x = U^r [z; -M z], followed by a cleanup projection onto T-perp."""
        w = -self.M @ z
        x = apply_U(np.concatenate([z, w]), self.r)
        return x - self.Qbasis @ (self.Qbasis.T @ x)

    def vertex(self, key):
        j, sign = key
        if not (0 <= j < self.n - self.r) or sign not in (-1, 1):
            raise KeyError(key)
        z = np.zeros(self.n - self.r)
        z[j] = -sign * self.delta
        return VertexHandle((int(j), int(sign)), self.back_map(z))

    def lmo(self, c, warm=None):
        c = self._check_cost(c)
        ct = self.reduced_cost(c)
        j = int(np.argmax(np.abs(ct)))
        return self.vertex((j, 1 if ct[j] >= 0 else -1))

    def default_start(self):
        return self.vertex((0, 1)).point.copy()

    def enumerate_vertices(self):
        if self.n - self.r > MAX_ENUMERATE:
            raise ValueError(f"refusing to enumerate {2 * (self.n - self.r)} vertices")
        return [self.vertex((j, s)) for j in range(self.n - self.r) for s in (-1, 1)]


def lmo_trend(region, c):
    return region.lmo(c)
