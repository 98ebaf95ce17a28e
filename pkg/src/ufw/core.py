"""Unbounded Frank-Wolfe (uFW) and its away-step variant (uAFW).

Both solvers alternate a gradient step inside the subspace T with a
Frank-Wolfe (or away) step inside the bounded set S:

    y^k     = x^k - eta * P_T grad f(x^k)
    s^k     = argmin_{s in S} <grad f(y^k), s>
    x^{k+1} = y^k + alpha_k * d^k

Row k of a trace describes x^k (its value), the gaps G_k and H_k measured at
y^k, and the step taken from x^k.  The final row of every run carries the
``Stop`` kind: gaps are measured but no step is taken.
"""

from collections import deque
from dataclasses import dataclass, field
from enum import Enum
import math
from typing import List, Optional

import numpy as np

from .region import is_continuous_key

DEGENERATE_NORM = 1e-14
DROP_WEIGHT = 1e-12
DRIFT_FAIL = 1e-4


class StepRule(str, Enum):
    SIMPLE = "simple"
    LINESEARCH = "linesearch"


class StepKind(str, Enum):
    FW = "FW"
    AWAY = "Away"
    DROP = "Drop"
    GRADIENT_ONLY = "GradientOnly"
    STOP = "Stop"


class TerminationReason(str, Enum):
    GAP_TOLERANCE = "GapTolerance"
    MAX_ITERS = "MaxIters"
    DEGENERATE_DIRECTION = "DegenerateDirection"


class NumericalFailure(RuntimeError):
    """A solve produced a non-finite value or lost its convex-combination bookkeeping."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = list(trace or [])


class UnsupportedRegion(ValueError):
    pass


@dataclass
class UfwConfig:
    eta: float
    step_rule: StepRule = StepRule.SIMPLE
    max_iters: int = 10_000
    tol_G: float = 1e-4
    tol_H2: float = 1e-4
    record_trace: bool = True
    # None keeps every row; an int keeps only the most recent rows.
    trace_capacity: Optional[int] = None
    # uAFW: how often the active-set reconstruction is checked against x.
    drift_check_every: int = 100

    def __post_init__(self):
        self.step_rule = StepRule(self.step_rule)
        if not (self.eta > 0 and math.isfinite(self.eta)):
            raise ValueError(f"eta must be positive and finite, got {self.eta}")
        if self.tol_G < 0 or self.tol_H2 < 0:
            raise ValueError("tolerances must be non-negative")
        if self.max_iters < 0:
            raise ValueError("max_iters must be non-negative")


@dataclass
class IterationRecord:
    k: int
    f_val: float
    G: float
    H: float
    step_kind: StepKind
    alpha: float
    active_size: int
    # f(y^k); free to record and needed to check primal-gap bounds.
    f_y: float = float("nan")


@dataclass
class SolveResult:
    x_final: np.ndarray
    best_f: float
    iterations: int
    trace: List[IterationRecord]
    termination_reason: TerminationReason
    x_best: np.ndarray = field(repr=False, default=None)
    # uAFW only: final active set as {key: (point, weight)}.
    active_set: Optional[dict] = field(repr=False, default=None)


class ActiveVertexSet:
    """Vertices V(x^k) with positive weights summing to one.

    Points are kept as rows of a growable array so that the away oracle
    (argmax of <g, v> over V) is a single matrix-vector product.
    """

    def __init__(self, dim, capacity=16):
        self.dim = dim
        self._points = np.empty((capacity, dim))
        self._weights = np.empty(capacity)
        self._keys = []
        self._slot = {}

    def __len__(self):
        return len(self._keys)

    def __contains__(self, key):
        return key in self._slot

    @property
    def weight_sum(self):
        return float(self._weights[: len(self)].sum())

    def weight(self, key):
        return float(self._weights[self._slot[key]])

    def point(self, key):
        return self._points[self._slot[key]]

    def entries(self):
        return {k: (self._points[i].copy(), float(self._weights[i])) for k, i in self._slot.items()}

    def combination(self):
        n = len(self)
        return self._weights[:n] @ self._points[:n]

    def add(self, handle, weight):
        if handle.key in self._slot:
            self._weights[self._slot[handle.key]] += weight
            return
        n = len(self)
        if n == self._points.shape[0]:
            self._points = np.concatenate([self._points, np.empty_like(self._points)])
            self._weights = np.concatenate([self._weights, np.empty_like(self._weights)])
        self._points[n] = handle.point
        self._weights[n] = weight
        self._keys.append(handle.key)
        self._slot[handle.key] = n

    def remove(self, key):
        i = self._slot.pop(key)
        last = len(self._keys) - 1
        if i != last:
            self._points[i] = self._points[last]
            self._weights[i] = self._weights[last]
            moved = self._keys[last]
            self._keys[i] = moved
            self._slot[moved] = i
        self._keys.pop()

    def reset(self, handle):
        self._keys.clear()
        self._slot.clear()
        self.add(handle, 1.0)

    def away_vertex(self, g):
        """Key maximizing <g, v> over V; exact ties go to the smallest key."""
        n = len(self)
        scores = self._points[:n] @ g
        best = scores.max()
        tied = np.flatnonzero(scores == best)
        i = min(tied, key=lambda t: self._keys[t]) if tied.size > 1 else int(tied[0])
        return self._keys[i], float(scores[i])

    def fw_update(self, handle, alpha):
        if alpha >= 1.0:
            self.reset(handle)
            return
        n = len(self)
        self._weights[:n] *= 1.0 - alpha
        self.add(handle, alpha)
        self._cleanup()

    def away_update(self, key, alpha, alpha_max):
        n = len(self)
        if alpha >= alpha_max:
            self.remove(key)
            n -= 1
            self._weights[:n] *= 1.0 + alpha
        else:
            self._weights[:n] *= 1.0 + alpha
            self._weights[self._slot[key]] -= alpha
        self._cleanup()

    def _cleanup(self):
        for key in [k for k in self._keys if self._weights[self._slot[k]] < DROP_WEIGHT]:
            self.remove(key)
        n = len(self)
        if n == 0:
            raise NumericalFailure("active vertex set became empty")
        self._weights[:n] /= self._weights[:n].sum()


def compute_gaps(objective, region, y, s):
    """(G, H) at y for the oracle answer s = lmo(grad f(y)).point."""
    g = objective.gradient(y)
    return _gaps(region, g, region.project_Tperp(y), s)


def _gaps(region, g, py, s):
    G = float(g @ (py - s))
    H = float(np.linalg.norm(region.project_T(g)))
    return G, H


def primal_gap_bound(G, H, D_T_bound=None, mu=None):
    """Upper bound on f(y^k) - f*: min of G + H * D_T and G + H^2 / (2 mu)."""
    bounds = []
    if D_T_bound is not None:
        bounds.append(G + H * D_T_bound)
    if mu is not None:
        if not mu > 0:
            raise ValueError("mu must be positive")
        bounds.append(G + H * H / (2.0 * mu))
    if not bounds:
        raise ValueError("primal_gap_bound needs D_T_bound or mu")
    return min(bounds)


class _Run:
    """Bookkeeping shared by both solvers: trace, best value, termination test."""

    def __init__(self, objective, config, x0):
        self.objective = objective
        self.config = config
        cap = config.trace_capacity
        self.trace = deque(maxlen=cap) if cap else []
        self.best_f = math.inf
        self.x_best = x0

    def evaluate(self, x, what="x"):
        with np.errstate(over="ignore", invalid="ignore"):
            f, g = self.objective.value_and_gradient(x)
        if not (math.isfinite(f) and np.all(np.isfinite(g))):
            raise NumericalFailure(f"non-finite objective or gradient at {what}", self.trace)
        return f, g

    def observe(self, x, f):
        if f < self.best_f:
            self.best_f = f
            self.x_best = x

    def converged(self, G, H):
        scale = max(1.0, abs(self.best_f))
        return G / scale < self.config.tol_G and H * H / scale < self.config.tol_H2

    def record(self, k, f, G, H, kind, alpha, active, f_y):
        if self.config.record_trace:
            self.trace.append(IterationRecord(k, f, G, H, kind, float(alpha), active, f_y))

    def result(self, x, k, reason, active=None):
        return SolveResult(x, self.best_f, k, list(self.trace), reason, self.x_best,
                           None if active is None else active.entries())


def _check_start(region, x0):
    x0 = region.check_vector(x0, "x0").copy()
    resid = region.project_T(x0) + region.project_Tperp(x0) - x0
    if np.linalg.norm(resid) > 1e-8:
        raise ValueError("x0 is not consistent with the region's projections")
    return x0


def ufw_solve(objective, region, x0=None, config=None):
    """Unbounded Frank-Wolfe with the simple or the line-search step rule."""
    if config is None:
        raise ValueError("ufw_solve needs a UfwConfig")
    x = _check_start(region, region.default_start() if x0 is None else x0)
    run = _Run(objective, config, x)
    eta = config.eta
    simple = config.step_rule is StepRule.SIMPLE

    fx, gx = run.evaluate(x, "x0")
    f0 = fx
    s = None
    k = 0
    while True:
        run.observe(x, fx)
        y = x - eta * region.project_T(gx)
        fy, gy = run.evaluate(y, "y")
        s = region.lmo(gy, warm=s)
        px = region.project_Tperp(x)
        G, H = _gaps(region, gy, px, s.point)

        if run.converged(G, H):
            run.record(k, fx, G, H, StepKind.STOP, 0.0, 0, fy)
            return run.result(x, k, TerminationReason.GAP_TOLERANCE)
        if k >= config.max_iters:
            run.record(k, fx, G, H, StepKind.STOP, 0.0, 0, fy)
            return run.result(x, k, TerminationReason.MAX_ITERS)

        d = s.point - px
        if simple:
            alpha = 2.0 / (k + 2.0)
            cand = y + alpha * d
            fc, gc = run.evaluate(cand, "trial point")
            if fc <= f0:
                x_next, f_next, g_next = cand, fc, gc
            else:
                alpha = 0.0
                x_next, f_next, g_next = y, fy, gy
        else:
            alpha = objective.exact_linesearch(y, d, 1.0, grad=gy)
            if alpha > 0.0:
                x_next = y + alpha * d
                f_next, g_next = run.evaluate(x_next)
            else:
                x_next, f_next, g_next = y, fy, gy

        kind = StepKind.FW if alpha > 0.0 else StepKind.GRADIENT_ONLY
        run.record(k, fx, G, H, kind, alpha, 0, fy)
        x, fx, gx = x_next, f_next, g_next
        k += 1


def identify_start_vertex(region, x0):
    """Vertex handle for P_T-perp x0, required to seed the active set."""
    p = region.project_Tperp(x0)
    default = region.lmo(np.zeros(region.ambient_dim))
    if np.linalg.norm(default.point - p) <= 1e-10 * (1.0 + np.linalg.norm(p)):
        return default
    for v in region.enumerate_vertices():
        if np.linalg.norm(v.point - p) <= 1e-10 * (1.0 + np.linalg.norm(p)):
            return v
    raise ValueError("P_T-perp x0 is not a vertex of S")


def uafw_solve(objective, region, x0=None, config=None, start_vertex=None):
    """Unbounded away-step Frank-Wolfe with exact line search.

    Needs a polyhedral S whose vertices carry discrete keys.  When x0 is not
    given the region's default start is used; otherwise its S-component must
    be a vertex (pass ``start_vertex`` to skip the lookup).
    """
    if config is None:
        raise ValueError("uafw_solve needs a UfwConfig")
    if not getattr(region, "polyhedral", True):
        raise UnsupportedRegion(
            f"{type(region).__name__} has a non-polyhedral S; away steps need vertex identities"
        )
    if x0 is None:
        x0 = region.default_start()
    x = _check_start(region, x0)
    if start_vertex is None:
        start_vertex = identify_start_vertex(region, x)
    if is_continuous_key(start_vertex.key):
        raise UnsupportedRegion("continuous vertex keys cannot be tracked by uAFW")

    run = _Run(objective, config, x)
    eta = config.eta
    active = ActiveVertexSet(region.ambient_dim)
    active.add(start_vertex, 1.0)

    fx, gx = run.evaluate(x, "x0")
    k = 0
    while True:
        run.observe(x, fx)
        y = x - eta * region.project_T(gx)
        fy, gy = run.evaluate(y, "y")
        s = region.lmo(gy)
        if is_continuous_key(s.key):
            raise UnsupportedRegion("continuous vertex keys cannot be tracked by uAFW")
        px = region.project_Tperp(x)
        G, H = _gaps(region, gy, px, s.point)

        if run.converged(G, H):
            run.record(k, fx, G, H, StepKind.STOP, 0.0, len(active), fy)
            return run.result(x, k, TerminationReason.GAP_TOLERANCE, active)
        if k >= config.max_iters:
            run.record(k, fx, G, H, StepKind.STOP, 0.0, len(active), fy)
            return run.result(x, k, TerminationReason.MAX_ITERS, active)

        v_key, v_score = active.away_vertex(gy)
        away_gap = v_score - float(gy @ px)
        # Ties go to the Frank-Wolfe branch.
        if G >= away_gap:
            d = s.point - px
            alpha_max = 1.0
            away = False
        else:
            lam = active.weight(v_key)
            d = px - active.point(v_key)
            alpha_max = lam / (1.0 - lam) if lam < 1.0 else math.inf
            away = True

        if np.linalg.norm(d) <= DEGENERATE_NORM:
            if away and np.linalg.norm(y - x) <= DEGENERATE_NORM * (1.0 + np.linalg.norm(x)):
                run.record(k, fx, G, H, StepKind.STOP, 0.0, len(active), fy)
                return run.result(x, k, TerminationReason.DEGENERATE_DIRECTION, active)
            alpha = 0.0
        else:
            alpha = objective.exact_linesearch(y, d, alpha_max, grad=gy)

        if alpha > 0.0:
            x_next = y + alpha * d
            f_next, g_next = run.evaluate(x_next)
            if away:
                kind = StepKind.DROP if alpha >= alpha_max else StepKind.AWAY
                active.away_update(v_key, alpha, alpha_max)
            else:
                kind = StepKind.FW
                active.fw_update(s, alpha)
        else:
            kind = StepKind.GRADIENT_ONLY
            x_next, f_next, g_next = y, fy, gy

        run.record(k, fx, G, H, kind, alpha, len(active), fy)
        x, fx, gx = x_next, f_next, g_next
        k += 1

        if config.drift_check_every and k % config.drift_check_every == 0:
            x, fx, gx = _reanchor(region, active, run, x)


def _reanchor(region, active, run, x):
    """Check that sum_v lambda_v v still equals P_T-perp x, then snap x onto it."""
    recon = active.combination()
    drift = float(np.linalg.norm(recon - region.project_Tperp(x)))
    scale = 1.0 + float(np.linalg.norm(x))
    if drift > DRIFT_FAIL * scale or abs(active.weight_sum - 1.0) > 1e-8:
        raise NumericalFailure(
            f"active-set drift {drift:.3e} (weight sum {active.weight_sum:.12f})", run.trace
        )
    x = region.project_T(x) + recon
    f, g = run.evaluate(x)
    return x, f, g
