#!/usr/bin/env python3
"""
嵌入模块测试
"""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from core.catalog import TETRA8_DISTANCES
from core.embedding import (CenterSet, center_set_from_dict, center_set_to_dict, centers_uniformly_distributed,
                            dyadic_centers, embed, geodesic_distance, radii_for, verify_center_set)
from core.errors import DimensionError, DomainError, PreconditionError
from core.layering import Layering, dyadic_layering, enumerate_layerings, permutations_of
from core.spectral import spectral_report

SQRT2 = np.sqrt(2.0)


def test_radii():
    r, t = radii_for(4)
    assert r == pytest.approx(0.5)
    assert t == pytest.approx(np.sqrt(3.0) / 2.0)
    assert r * r + t * t == pytest.approx(1.0)


def test_k4_rectangle():
    centers = embed(dyadic_layering(1))
    assert centers.q == 2
    expected = np.array([[SQRT2 / 2, 0.5], [SQRT2 / 2, -0.5], [-SQRT2 / 2, 0.5], [-SQRT2 / 2, -0.5]])
    assert np.allclose(centers.points, expected, atol=1e-12)
    distances = centers.pairwise_distances()
    assert distances[0, 1] == pytest.approx(1.0)
    assert distances[0, 2] == pytest.approx(SQRT2)
    assert np.allclose(np.linalg.norm(centers.points, axis=1), np.sqrt(3.0) / 2.0)


def test_k2_antipodal_pair():
    centers = embed(dyadic_layering(0))
    assert centers.q == 1
    assert np.allclose(centers.points.ravel(), [1 / SQRT2, -1 / SQRT2])


def test_tetra8_embedding():
    layering = Layering(np.array(TETRA8_DISTANCES))
    centers = embed(layering)
    assert centers.q == 4
    assert verify_center_set(centers, layering).valid
    antipode = permutations_of(layering)[-1]
    assert np.max(np.linalg.norm(centers.points + centers.points[antipode], axis=1)) < 1e-9
    assert centers_uniformly_distributed(centers)


@pytest.mark.parametrize('n', [0, 1, 2, 3])
def test_dyadic_embedding_verifies(n):
    layering = dyadic_layering(n)
    centers = embed(layering)
    report = verify_center_set(centers, layering)
    assert report.valid
    assert report.max_deviation < 1e-9
    assert centers.q == n + 1


@pytest.mark.parametrize('n', [0, 1, 2, 3])
def test_dyadic_centers_match_layering(n):
    centers = dyadic_centers(n)
    layering = dyadic_layering(n)
    assert verify_center_set(centers, layering).valid
    squared = centers.pairwise_distances() ** 2
    assert np.allclose(squared, 4.0 * layering.dist * centers.r ** 2, atol=1e-12)


def test_embedding_requires_embeddable():
    layering = next(iter(enumerate_layerings(6)))
    with pytest.raises(PreconditionError):
        embed(layering)


def test_forced_embedding_is_a_negative_control():
    layering = next(iter(enumerate_layerings(6)))
    centers = embed(layering, force=True)
    assert np.allclose(np.linalg.norm(centers.points, axis=1), centers.t)
    report = verify_center_set(centers, layering)
    assert not report.valid
    assert 'distance' in report.rules()


def test_report_dimension_mismatch():
    with pytest.raises(DimensionError):
        embed(dyadic_layering(1), report=spectral_report(dyadic_layering(2)))


def test_verify_detects_perturbation():
    layering = dyadic_layering(1)
    centers = embed(layering)
    points = np.array(centers.points)
    points[0, 0] += 1e-3
    report = verify_center_set(CenterSet(points=points, r=centers.r, t=centers.t), layering)
    assert not report.valid
    assert {'norm', 'distance'} <= set(report.rules())


def test_geodesic_distance():
    t = 2.0
    assert geodesic_distance(np.array([t, 0.0]), np.array([0.0, t]), t) == pytest.approx(np.pi)
    assert geodesic_distance(np.array([t, 0.0]), np.array([-t, 0.0]), t) == pytest.approx(2 * np.pi)
    assert geodesic_distance(np.array([t, 0.0]), np.array([t, 0.0]), t) == 0.0


def test_center_set_dict():
    centers = dyadic_centers(1)
    data = center_set_to_dict(centers)
    assert data['m'] == 4 and data['q'] == 2
    restored = center_set_from_dict(data)
    assert np.array_equal(restored.points, centers.points)
    with pytest.raises(DimensionError):
        center_set_from_dict(dict(data, q=3))
    with pytest.raises(DomainError):
        center_set_from_dict({'points': [[1.0]]})


def test_non_uniform_centers():
    points = np.array([[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0]])
    assert not centers_uniformly_distributed(CenterSet(points=points, r=0.0, t=1.0))


@settings(max_examples=25, deadline=None)
@given(st.integers(min_value=0, max_value=3), st.integers(min_value=0, max_value=2 ** 32 - 1))
def test_geodesics_match_delta(n, seed):
    centers = embed(dyadic_layering(n))
    rng = np.random.default_rng(seed)
    i, j = rng.integers(centers.m, size=2)
    inner = float(centers.points[i] @ centers.points[j]) / centers.t ** 2
    d = dyadic_layering(n).dist[i, j]
    assert inner == pytest.approx((centers.m - 1 - 2 * d) / (centers.m - 1), abs=1e-9)


@settings(max_examples=20, deadline=None)
@given(st.integers(min_value=0, max_value=3), st.integers(min_value=0, max_value=2 ** 32 - 1))
def test_center_checks_are_orthogonally_invariant(n, seed):
    centers = dyadic_centers(n)
    layering = dyadic_layering(n)
    rng = np.random.default_rng(seed)
    q, _ = np.linalg.qr(rng.standard_normal((centers.q, centers.q)))
    rotated = CenterSet(points=centers.points @ q, r=centers.r, t=centers.t)
    report = verify_center_set(rotated, layering)
    assert report.valid
    assert report.max_deviation == pytest.approx(verify_center_set(centers, layering).max_deviation, abs=1e-12)


def test_rotation_keeps_violations():
    centers = dyadic_centers(2)
    points = centers.points.copy()
    points[0] *= 1.01
    q, _ = np.linalg.qr(np.random.default_rng(4).standard_normal((centers.q, centers.q)))
    broken = verify_center_set(CenterSet(points=points, r=centers.r, t=centers.t), dyadic_layering(2))
    rotated = verify_center_set(CenterSet(points=points @ q, r=centers.r, t=centers.t), dyadic_layering(2))
    assert not rotated.valid
    assert rotated.rules() == broken.rules()
