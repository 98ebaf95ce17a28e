"""High-accuracy reference optima, cached by instance content hash.

Trend filtering: uAFW run down to roundoff-level gap tolerances.  Matrix
completion: accelerated projected gradient with function-value restart.  The
projection onto {||(I - P1 P1^T) X||_* <= delta} is exact (one SVD per step),
which uFW cannot reach to 1e-6 in reasonable time but this can in ~100 steps.
"""

import json
import math
import os
from pathlib import Path

import numpy as np

from .core import UfwConfig, uafw_solve
from .instance_io import build_problem
from .objective import estimate_step_eta

TREND_TOL_G = 1e-13
TREND_TOL_H2 = 1e-20
TREND_MAX_ITERS = 1_000_000


def cache_dir():
    path = os.environ.get("UFW_CACHE")
    return Path(path) if path else Path.home() / ".cache" / "ufw-reference"


def project_l1_simplex(s, radius):
    """Euclidean projection of a non-negative vector onto {t >= 0, sum t <= radius}."""
    if s.sum() <= radius:
        return s.copy()
    u = np.sort(s)[::-1]
    excess = np.cumsum(u) - radius
    idx = np.arange(1, u.size + 1)
    rho = np.flatnonzero(u - excess / idx > 0)[-1]
    return np.maximum(s - excess[rho] / (rho + 1), 0.0)


def project_side_information(X, P1, delta):
    """Projection onto {X : ||(I - P1 P1^T) X||_* <= delta}."""
    XT = P1 @ (P1.T @ X)
    U, s, Vt = np.linalg.svd(X - XT, full_matrices=False)
    return XT + (U * project_l1_simplex(s, delta)) @ Vt


def matrix_reference(instance, max_iter=20_000, step_tol=1e-10):
    """Optimal value of the masked least-squares problem; returns (f*, X*)."""
    s, a = instance.scalars, instance.arrays
    m, n, delta = int(s["m"]), int(s["n"]), float(s["delta"])
    rows, cols, vals = a["rows"], a["cols"], a["values"]
    P1 = a["P1"]

    def f_grad(X):
        R = X[rows, cols] - vals
        G = np.zeros((m, n))
        G[rows, cols] = 2.0 * R
        return float(R @ R), G

    step = 0.5  # 1/L with L = 2 for a 0/1 mask
    X = np.zeros((m, n))
    Y = X
    t = 1.0
    f_x = f_grad(X)[0]
    for _ in range(max_iter):
        _, gY = f_grad(Y)
        X_new = project_side_information(Y - step * gY, P1, delta)
        f_new = f_grad(X_new)[0]
        if f_new > f_x:
            if t == 1.0:
                break  # a plain projected-gradient step failed to descend: roundoff floor
            Y, t = X, 1.0
            continue
        t_new = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t * t))
        move = np.linalg.norm(X_new - X)
        Y = X_new + ((t - 1.0) / t_new) * (X_new - X)
        X, f_x, t = X_new, f_new, t_new
        if move < step_tol * (1.0 + np.linalg.norm(X)):
            break
    return f_x, X


def trend_reference(instance, max_iters=TREND_MAX_ITERS):
    objective, region = build_problem(instance)
    config = UfwConfig(eta=estimate_step_eta(objective, region), max_iters=max_iters,
                       tol_G=TREND_TOL_G, tol_H2=TREND_TOL_H2, record_trace=False)
    res = uafw_solve(objective, region, config=config)
    return res.best_f, res.x_best


def reference_value(instance, use_cache=True):
    """f* for an instance; cached on disk as JSON keyed by content hash."""
    key = instance.content_hash()
    path = cache_dir() / f"{key}.json"
    if use_cache and path.exists():
        return float(json.loads(path.read_text(encoding="utf-8"))["f_star"])
    if instance.problem == "trend":
        f_star, _ = trend_reference(instance)
        method = "uafw"
    else:
        f_star, _ = matrix_reference(instance)
        method = "accelerated-projected-gradient"
    if use_cache:
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_suffix(".tmp")
        tmp.write_text(json.dumps({"f_star": f_star, "method": method}) + "\n", encoding="utf-8")
        tmp.replace(path)
    return f_star


def relative_gap(f, f_star):
    return (f - f_star) / max(1.0, abs(f_star))
