import numpy as np
import pytest
from hypothesis import given, strategies as st

from ufw.nucnorm import GenNucNormRegion
from ufw.region import (
    DimensionError,
    FullSpaceRegion,
    L1BallRegion,
    VertexHandle,
    continuous_key,
    is_continuous_key,
)
from ufw.trendfilter import TrendFilterRegion


def regions():
    rng = np.random.default_rng(0)
    P1, _ = np.linalg.qr(rng.standard_normal((6, 2)))
    return [
        L1BallRegion(7, 1.5),
        FullSpaceRegion(5),
        TrendFilterRegion(12, 1, 1.0),
        TrendFilterRegion(20, 2, 2.0),
        TrendFilterRegion(15, 3, 0.5),
        GenNucNormRegion.side_information(P1, 4, 1.0),
    ]


@pytest.mark.parametrize("region", regions(), ids=lambda r: type(r).__name__)
def test_projection_contract(region):
    rng = np.random.default_rng(1)
    for _ in range(200):
        x = rng.standard_normal(region.ambient_dim) * rng.uniform(0.1, 10)
        pt, pp = region.project_T(x), region.project_Tperp(x)
        tol = 1e-10 * (1 + np.linalg.norm(x))
        assert np.linalg.norm(region.project_T(pt) - pt) <= tol
        assert np.linalg.norm(region.project_Tperp(pp) - pp) <= tol
        assert np.linalg.norm(pt + pp - x) <= tol
        assert np.linalg.norm(region.project_T(pp)) <= tol


@pytest.mark.parametrize("region", regions(), ids=lambda r: type(r).__name__)
def test_projection_linearity(region):
    rng = np.random.default_rng(2)
    x, y = rng.standard_normal((2, region.ambient_dim))
    a, b = 1.7, -0.3
    lhs = region.project_T(a * x + b * y)
    assert np.allclose(lhs, a * region.project_T(x) + b * region.project_T(y), atol=1e-10)


@pytest.mark.parametrize("region", regions()[:5], ids=lambda r: type(r).__name__)
def test_lmo_beats_every_vertex(region):
    rng = np.random.default_rng(3)
    verts = region.enumerate_vertices()
    for _ in range(200):
        c = rng.standard_normal(region.ambient_dim)
        s = region.lmo(c)
        best = min(float(c @ v.point) for v in verts)
        assert float(c @ s.point) <= best + 1e-9 * (1 + np.linalg.norm(c))
        assert np.linalg.norm(region.project_T(s.point)) <= 1e-10


@pytest.mark.parametrize("region", regions(), ids=lambda r: type(r).__name__)
def test_lmo_zero_and_subspace_costs(region):
    s = region.lmo(np.zeros(region.ambient_dim))
    assert float(np.zeros(region.ambient_dim) @ s.point) == 0.0
    c = region.project_T(np.random.default_rng(4).standard_normal(region.ambient_dim))
    assert abs(float(c @ region.lmo(c).point)) <= 1e-9 * (1 + np.linalg.norm(c))


@pytest.mark.parametrize("region", regions(), ids=lambda r: type(r).__name__)
def test_dimension_and_finiteness_checks(region):
    with pytest.raises(DimensionError):
        region.project_T(np.zeros(region.ambient_dim + 1))
    with pytest.raises(DimensionError):
        region.project_Tperp(np.zeros((region.ambient_dim, 1)))
    bad = np.zeros(region.ambient_dim)
    bad[0] = np.nan
    with pytest.raises(ValueError):
        region.lmo(bad)


def test_zero_subspace_and_full_subspace():
    x = np.arange(5.0)
    ball = L1BallRegion(5, 1.0)
    assert np.array_equal(ball.project_T(x), np.zeros(5))
    assert np.array_equal(ball.project_Tperp(x), x)
    full = FullSpaceRegion(5)
    assert np.array_equal(full.project_T(x), x)
    assert np.array_equal(full.project_Tperp(x), np.zeros(5))


def test_trend_constants_lie_in_T():
    region = TrendFilterRegion(9, 1, 1.0)
    assert np.allclose(region.project_T(np.ones(9)), np.ones(9), atol=1e-12)


def test_handles_compare_by_key():
    a = VertexHandle((1, 1), np.array([1.0, 2.0]))
    b = VertexHandle((1, 1), np.array([1.0, 2.0]))
    c = VertexHandle((1, -1), np.array([1.0, 2.0]))
    assert a == b and hash(a) == hash(b)
    assert a != c
    assert len({a, b, c}) == 2


@given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=10))
def test_continuous_key_is_deterministic(values):
    p = np.array(values)
    k = continuous_key(p)
    assert k == continuous_key(p.copy())
    assert is_continuous_key(k)
    assert not is_continuous_key((0, 1))


def test_l1_ball_tie_break():
    ball = L1BallRegion(3, 2.0)
    s = ball.lmo(np.array([1.0, -1.0, 0.5]))
    assert s.key == (0, 1)
    assert np.array_equal(s.point, [-2.0, 0.0, 0.0])
    assert ball.lmo(np.zeros(3)).key == (0, 1)
