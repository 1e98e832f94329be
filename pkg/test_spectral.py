#!/usr/bin/env python3
"""
谱判据测试
"""

from unittest import mock

import numpy as np
import pytest

from core.catalog import PRINTED_TETRA8_DELTA7, TETRA8_DISTANCES
from core.errors import EigenSolverError, ForgeNumericError, PreconditionError
from core.layering import Layering, dyadic_layering, enumerate_layerings
from core.scheduler import WorkPool
from core.spectral import (antipodal_kernel, check_constructibility, delta_from_permutations, delta_matrix,
                           graph_matrices, screen, spectral_report, symmetric_eigenvalues)


def test_k4_exact_spectrum():
    report = spectral_report(dyadic_layering(1))
    assert report.m == 4 and report.p == 2
    assert report.gap == pytest.approx(6.0, abs=1e-9)
    assert report.threshold == 6.0
    assert report.embeddable
    assert report.gap_embeddable and report.delta_embeddable
    assert np.allclose(report.delta_eigenvalues, [0.0, 0.0, 4.0 / 3.0, 8.0 / 3.0], atol=1e-9)
    assert report.delta_rank == 2
    assert np.allclose(report.laplacian_eigenvalues, [0.0, 6.0, 8.0, 10.0], atol=1e-9)


def test_k2_is_embeddable():
    report = spectral_report(dyadic_layering(0))
    assert report.embeddable
    assert report.delta_rank == 1
    check_constructibility(report)


def test_k6_fails_screen():
    layerings = list(enumerate_layerings(6))
    for layering in layerings:
        report = spectral_report(layering)
        assert not report.embeddable
        assert report.gap < report.threshold
        check_constructibility(report)
    assert list(screen(layerings)) == []


def test_tetra8_spectrum():
    layering = Layering(np.array(TETRA8_DISTANCES))
    report = spectral_report(layering)
    assert report.embeddable
    assert report.delta_rank == 4
    positive = report.delta_eigenvalues > report.rank_tolerance
    assert int(positive.sum()) == 4
    assert np.allclose(report.delta_eigenvalues[~positive], 0.0, atol=1e-9)


def test_tetra8_matches_printed_rows():
    scaled = delta_matrix(Layering(np.array(TETRA8_DISTANCES))).scaled
    assert scaled.tolist()[:4] == [list(row) for row in PRINTED_TETRA8_DELTA7[:4]]
    printed = np.array(PRINTED_TETRA8_DELTA7)
    assert not np.array_equal(printed, printed.T)


@pytest.mark.parametrize('n', [0, 1, 2, 3])
def test_dyadic_is_embeddable_with_rank(n):
    report = spectral_report(dyadic_layering(n))
    assert report.embeddable
    assert report.delta_rank == n + 1


def test_delta_identity_and_permutation_form():
    layering = Layering(np.array(TETRA8_DISTANCES))
    delta = delta_matrix(layering)
    matrices = graph_matrices(layering)
    m, p = 8, 4
    expected = np.ones((m, m)) - 2 * p * np.eye(m) + 2.0 / (2 * p - 1) * matrices.laplacian
    assert np.allclose(delta.matrix, expected, atol=1e-12)
    assert np.allclose(delta_from_permutations(layering), delta.matrix, atol=1e-12)
    assert np.all(np.diag(delta.matrix) == 1.0)


def test_antipodal_kernel_is_in_null_space():
    for layering in (dyadic_layering(2), Layering(np.array(TETRA8_DISTANCES))):
        kernel = antipodal_kernel(layering)
        assert kernel.shape == (8, 4)
        assert np.allclose(delta_matrix(layering).matrix @ kernel, 0.0, atol=1e-12)


def test_graph_matrices_degree():
    matrices = graph_matrices(dyadic_layering(2))
    assert np.all(np.diag(matrices.degree) == 28)
    assert np.allclose(matrices.laplacian.sum(axis=1), 0.0)


def test_degree_invariant_violation():
    bad = Layering(np.array([[0, 1, 2, 3], [1, 0, 3, 2], [2, 3, 0, 2], [3, 2, 2, 0]]))
    with pytest.raises(PreconditionError):
        graph_matrices(bad)


def test_report_dict_keys():
    data = spectral_report(dyadic_layering(1)).to_dict()
    for key in ('gap', 'threshold', 'embeddable', 'delta_rank', 'l_eigs', 'delta_eigs'):
        assert key in data
    assert len(data['l_eigs']) == 4


def test_negative_tolerance_rejected():
    with pytest.raises(PreconditionError):
        spectral_report(dyadic_layering(1), psd_tolerance=-1.0)


def test_eigen_failure_is_wrapped():
    with mock.patch('numpy.linalg.eigh', side_effect=np.linalg.LinAlgError('no convergence')):
        with pytest.raises(EigenSolverError):
            symmetric_eigenvalues(np.eye(2))


def test_constructibility_guard():
    report = spectral_report(dyadic_layering(2))
    report.p = 3
    with pytest.raises(ForgeNumericError):
        check_constructibility(report)


def test_screen_keeps_order_with_pool():
    layerings = [dyadic_layering(0), dyadic_layering(1)] + list(enumerate_layerings(6)) + [dyadic_layering(2)]
    with WorkPool(max_workers=3) as pool:
        kept = [layering for layering, _ in screen(layerings, pool=pool)]
    assert kept == [dyadic_layering(0), dyadic_layering(1), dyadic_layering(2)]


def test_screen_attaches_index_to_errors():
    bad = Layering(np.array([[0, 1, 2, 3], [1, 0, 3, 2], [2, 3, 0, 2], [3, 2, 2, 0]]))
    with pytest.raises(PreconditionError) as info:
        list(screen([dyadic_layering(1), bad]))
    assert info.value.index == 2
    assert str(info.value).startswith('[#2]')
