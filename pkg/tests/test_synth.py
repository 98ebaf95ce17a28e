import hashlib
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from ufw.synth import (
    MatrixGenSpec,
    TrendGenSpec,
    gen_matrix_instance,
    gen_trend_instance,
    observed_count,
)
from ufw.trendfilter import apply_D

# Frozen from the first run; these pin the draw order and the generator.
FROZEN_X_STAR = [-0.28467934173571213, 0.14750866915006078, 0.14750866915006078,
                 0.08320162131647628, -0.31456764664169945, -0.31456764664169945,
                 -0.2088319733192325, -0.2088319733192325]
FROZEN_A_SHA256 = "c70756218ccf95cf7ab19c763f0b0e83481babf78cd0a2be8bbadb4268e57d66"


def test_frozen_small_trend_instance():
    A, b, x, delta = gen_trend_instance(TrendGenSpec(N=12, n=8, seed=3))
    assert x.tolist() == FROZEN_X_STAR
    assert hashlib.sha256(A.tobytes()).hexdigest() == FROZEN_A_SHA256


@given(st.integers(10, 200), st.sampled_from([1, 2]), st.integers(1, 8), st.integers(0, 2**40))
def test_trend_signal_normalized(n, r, pieces, seed):
    spec = TrendGenSpec(N=10, n=n, r=r, pieces=pieces, seed=seed)
    try:
        _, _, x, delta = gen_trend_instance(spec)
    except ValueError:
        return  # every piece drew the same value; astronomically rare
    # differencing a cumulative sum cancels: roundoff scales with max|x|, not with 1
    tol = 1e-12 + 4 * n * 2**r * np.finfo(float).eps * np.abs(x).max()
    assert np.abs(apply_D(r, x)).sum() == pytest.approx(1.0, abs=tol)
    assert delta == np.abs(apply_D(r, x)).sum()


def test_trend_signal_shapes():
    _, _, x, _ = gen_trend_instance(TrendGenSpec(N=20, n=100, r=1, seed=1))
    assert np.count_nonzero(apply_D(1, x)) <= 4
    assert len(np.unique(x)) == 5
    _, _, x, _ = gen_trend_instance(TrendGenSpec(N=20, n=100, r=2, seed=1))
    assert x[0] == 0.0
    assert np.count_nonzero(np.abs(apply_D(2, x)) > 1e-10) <= 4  # continuous: kinks only


def test_trend_noiseless_limit():
    A, b, x, _ = gen_trend_instance(TrendGenSpec(N=30, n=20, snr=math.inf, seed=2))
    assert np.array_equal(b, A @ x)


def test_trend_snr_sample_variance():
    spec = TrendGenSpec(N=1000, n=500, r=1, snr=1.0, seed=4)
    A, b, x, _ = gen_trend_instance(spec)
    eps = b - A @ x
    signal = A @ x
    empirical = (signal @ signal) / (spec.n * np.var(eps))
    assert abs(empirical / spec.snr - 1) <= 0.15


def test_trend_determinism_and_seed_sensitivity():
    s = TrendGenSpec(N=50, n=30, seed=11)
    a1, a2 = gen_trend_instance(s), gen_trend_instance(s)
    for u, v in zip(a1, a2):
        assert np.array_equal(u, v)
    b = gen_trend_instance(TrendGenSpec(N=50, n=30, seed=12))
    assert not np.array_equal(a1[0], b[0])


@pytest.mark.parametrize("kwargs", [dict(N=10, n=10, r=3), dict(N=3, n=10), dict(N=10, n=10, snr=0.0),
                                    dict(N=10, n=2, pieces=1)])
def test_trend_spec_validation(kwargs):
    with pytest.raises(ValueError):
        TrendGenSpec(**kwargs)


def test_observed_count_exact():
    assert observed_count(0.3, 200, 200) == 12000
    assert observed_count(1.0, 7, 9) == 63
    assert observed_count(0.01, 3, 3) == 1


def test_matrix_instance_properties():
    spec = MatrixGenSpec(m=30, n=20, r=3, r1=2, nnzr=0.3, seed=5)
    B, (rows, cols), P1, delta, truth = gen_matrix_instance(spec)
    assert len(rows) == math.ceil(0.3 * 600)
    flat = rows * 20 + cols
    assert np.all(np.diff(flat) > 0)  # distinct and row-major sorted
    assert np.allclose(P1.T @ P1, np.eye(2), atol=1e-10)
    mask = np.zeros((30, 20), bool)
    mask[rows, cols] = True
    assert np.all(B[~mask] == 0.0)


def test_matrix_delta_matches_dense_svd():
    """Regenerate the low-rank factors with the same draw order and compare."""
    from ufw.rng import SplitMix64

    spec = MatrixGenSpec(m=12, n=10, r=2, r1=2, delta_rel=0.5, seed=6)
    _, _, P1, delta, _ = gen_matrix_instance(spec)
    rng = SplitMix64(6)
    U, V = rng.normal((12, 2)), rng.normal((10, 2))
    proj = (np.eye(12) - P1 @ P1.T) @ U @ V.T
    assert delta == pytest.approx(0.5 * np.linalg.svd(proj, compute_uv=False).sum(), rel=1e-8)


def test_matrix_full_observation_and_snr():
    spec = MatrixGenSpec(m=60, n=50, r=3, r1=3, snr=5.0, nnzr=1.0, seed=7)
    B, (rows, cols), _, _, truth = gen_matrix_instance(spec)
    assert len(rows) == 3000
    noise = B - truth
    assert abs(np.var(truth) / np.var(noise) / 5.0 - 1) < 0.1


def test_matrix_noiseless_and_determinism():
    spec = MatrixGenSpec(m=8, n=6, r=2, r1=2, snr=math.inf, nnzr=1.0, seed=8)
    B, _, _, _, truth = gen_matrix_instance(spec)
    assert np.array_equal(B, truth)
    a, b = gen_matrix_instance(spec), gen_matrix_instance(spec)
    assert np.array_equal(a[0], b[0]) and np.array_equal(a[2], b[2])


@pytest.mark.parametrize("kwargs", [dict(m=5, n=5, r=6), dict(m=5, n=5, r1=5), dict(m=5, n=5, nnzr=0.0),
                                    dict(m=5, n=5, nnzr=1.5), dict(m=5, n=5, delta_rel=0.0)])
def test_matrix_spec_validation(kwargs):
    base = dict(r=2, r1=2)
    base.update(kwargs)
    with pytest.raises(ValueError):
        MatrixGenSpec(**base)
