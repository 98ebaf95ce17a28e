"""Feasible regions of the form T + S with T a subspace and S a bounded set in T-perp."""

from abc import ABC, abstractmethod
from dataclasses import dataclass, field
import hashlib
from typing import Any, Hashable

import numpy as np


class DimensionError(ValueError):
    """Raised when a vector does not match the ambient dimension of a region."""


@dataclass(frozen=True, eq=False)
class VertexHandle:
    """A vertex of S together with a discrete key that names it.

    Equality and hashing use the key only.  ``aux`` carries adapter data
    (for example singular vectors that can warm-start the next oracle call).
    """

    key: Hashable
    point: np.ndarray
    aux: Any = field(default=None, repr=False)

    def __eq__(self, other):
        if not isinstance(other, VertexHandle):
            return NotImplemented
        return self.key == other.key

    def __hash__(self):
        return hash(self.key)


def continuous_key(point):
    """Sentinel key for vertices of a non-polyhedral S."""
    digest = hashlib.sha1(np.ascontiguousarray(point, dtype="<f8").tobytes()).hexdigest()
    return ("continuous", digest)


def is_continuous_key(key):
    return isinstance(key, tuple) and len(key) == 2 and key[0] == "continuous"


class DecomposedRegion(ABC):
    """Abstract region T + S.

    Subclasses provide the two orthogonal projections, a linear minimization
    oracle over S and a default starting point whose S-component is a vertex.
    """

    ambient_dim: int
    delta: float
    subspace_dim: int
    polyhedral: bool = True

    def check_vector(self, x, name="x"):
        x = np.asarray(x, dtype=float)
        if x.ndim != 1 or x.shape[0] != self.ambient_dim:
            raise DimensionError(
                f"{name} has shape {x.shape}, expected ({self.ambient_dim},)"
            )
        return x

    @abstractmethod
    def project_T(self, x):
        ...

    def project_Tperp(self, x):
        x = self.check_vector(x)
        return x - self.project_T(x)

    @abstractmethod
    def lmo(self, c, warm=None):
        """Return a VertexHandle minimizing <c, s> over S.

        ``warm`` is the handle returned by the previous call, if any; adapters
        may use it to speed up iterative oracles.
        """

    @abstractmethod
    def default_start(self):
        ...

    def enumerate_vertices(self):
        raise NotImplementedError(f"{type(self).__name__} cannot enumerate its vertices")

    def _check_cost(self, c):
        c = self.check_vector(c, "c")
        if not np.all(np.isfinite(c)):
            raise ValueError("linear oracle received a non-finite cost vector")
        return c


class L1BallRegion(DecomposedRegion):
    """T = {0}, S = the l1 ball of radius delta.  Plain Frank-Wolfe territory.

    Vertex keys are ``(j, sign)`` with point ``-sign * delta * e_j``; the
    oracle picks the largest |c_j| (smallest j on ties) and sign(0) = +1.
    """

    def __init__(self, n, delta):
        if n < 1 or delta <= 0:
            raise ValueError("need n >= 1 and delta > 0")
        self.ambient_dim = int(n)
        self.delta = float(delta)
        self.subspace_dim = 0

    def project_T(self, x):
        return np.zeros_like(self.check_vector(x))

    def vertex(self, key):
        j, sign = key
        p = np.zeros(self.ambient_dim)
        p[j] = -sign * self.delta
        return VertexHandle(key, p)

    def lmo(self, c, warm=None):
        c = self._check_cost(c)
        j = int(np.argmax(np.abs(c)))
        return self.vertex((j, 1 if c[j] >= 0 else -1))

    def default_start(self):
        return self.vertex((0, 1)).point.copy()

    def enumerate_vertices(self):
        return [self.vertex((j, s)) for j in range(self.ambient_dim) for s in (-1, 1)]


class FullSpaceRegion(DecomposedRegion):
    """T = R^n and S = {0}: the solvers reduce to gradient descent."""

    def __init__(self, n):
        self.ambient_dim = int(n)
        self.delta = 1.0
        self.subspace_dim = int(n)
        self._origin = VertexHandle(0, np.zeros(self.ambient_dim))

    def project_T(self, x):
        return self.check_vector(x).copy()

    def lmo(self, c, warm=None):
        self._check_cost(c)
        return self._origin

    def default_start(self):
        return np.zeros(self.ambient_dim)

    def enumerate_vertices(self):
        return [self._origin]
