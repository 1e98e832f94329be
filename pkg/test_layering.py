#!/usr/bin/env python3
"""
分层模块测试
"""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from core.catalog import PRINTED_TETRA8_DISTANCES, TETRA8_DISTANCES
from core.config import forge_config
from core.errors import CapacityError, DimensionError, DomainError
from core.layering import (Layering, check_antipodal_structure, dyadic_layering, enumerate_layerings,
                           from_permutations, layering_from_dict, layering_to_dict, permutations_of,
                           quadruple_partition, validate_layering)


@pytest.mark.parametrize('m, expected', [(2, 1), (4, 1), (6, 6)])
def test_enumeration_counts(m, expected):
    assert len(list(enumerate_layerings(m))) == expected


@pytest.mark.slow
def test_enumeration_count_k8():
    layerings = list(enumerate_layerings(8))
    assert len(layerings) == 6240
    assert Layering(np.array(TETRA8_DISTANCES)) in set(layerings)
    assert dyadic_layering(2) in set(layerings)


def test_enumeration_is_lexicographic_and_valid():
    layerings = list(enumerate_layerings(6))
    keys = [layering.key() for layering in layerings]
    assert keys == sorted(keys)
    assert len(set(keys)) == len(keys)
    for layering in layerings:
        assert validate_layering(layering.dist).valid
        assert list(layering.dist[0]) == list(range(6))


def test_enumeration_k4_is_dyadic():
    (only,) = list(enumerate_layerings(4))
    assert only == dyadic_layering(1)


def test_enumeration_limit():
    assert len(list(enumerate_layerings(6, limit=2))) == 2
    assert list(enumerate_layerings(6, limit=0)) == []


@pytest.mark.parametrize('m', [0, 3, 7, -2])
def test_enumeration_rejects_odd_or_small(m):
    with pytest.raises(DomainError):
        enumerate_layerings(m)


def test_enumeration_capacity():
    forge_config.set('MAX_LAYERING_ORDER', 6)
    with pytest.raises(CapacityError):
        enumerate_layerings(8)


def test_validate_reports_each_rule():
    report = validate_layering(PRINTED_TETRA8_DISTANCES)
    assert not report.valid
    assert 'symmetry' in report.rules()
    assert 'latin-row' not in report.rules()

    broken = np.array(dyadic_layering(1).dist)
    broken[0, 1], broken[0, 2] = broken[0, 2], broken[0, 1]
    rules = validate_layering(broken).rules()
    assert 'normalization' in rules
    assert 'symmetry' in rules

    diagonal = np.array(dyadic_layering(1).dist)
    diagonal[2, 2] = 1
    assert 'zero-diagonal' in validate_layering(diagonal).rules()
    assert 'even-order' in validate_layering(np.zeros((3, 3))).rules()


def test_validate_input_errors():
    with pytest.raises(DimensionError):
        validate_layering(np.zeros((2, 3)))
    with pytest.raises(DomainError):
        validate_layering([[0, 1.5], [1.5, 0]])
    with pytest.raises(DomainError):
        validate_layering([[0, -1], [-1, 0]])


def test_violation_indices_are_one_based():
    report = validate_layering(PRINTED_TETRA8_DISTANCES).to_dict()
    assert all(min(v['indices']) >= 1 for v in report['violations'] if v['indices'])


def test_dict_conversion():
    layering = dyadic_layering(1)
    data = layering_to_dict(layering)
    assert data == {'m': 4, 'd': [[0, 1, 2, 3], [1, 0, 3, 2], [2, 3, 0, 1], [3, 2, 1, 0]]}
    assert layering_from_dict(data) == layering
    with pytest.raises(DomainError):
        layering_from_dict({'m': 8, 'd': [list(row) for row in PRINTED_TETRA8_DISTANCES]})
    with pytest.raises(DimensionError):
        layering_from_dict({'m': 6, 'd': data['d']})
    with pytest.raises(DomainError):
        layering_from_dict({'m': 4})


@pytest.mark.parametrize('n', [0, 1, 2, 3])
def test_dyadic_layering_is_xor(n):
    layering = dyadic_layering(n)
    m = 2 ** (n + 1)
    assert layering.m == m
    assert validate_layering(layering.dist).valid
    for a in range(m):
        for b in range(m):
            assert layering.dist[a, b] == a ^ b


def test_dyadic_capacity():
    with pytest.raises(CapacityError):
        dyadic_layering(int(forge_config.get('MAX_DYADIC_LEVEL')) + 1)
    with pytest.raises(DomainError):
        dyadic_layering(-1)


@settings(max_examples=20, deadline=None)
@given(st.integers(min_value=0, max_value=4))
def test_permutations_are_involutions(n):
    layering = dyadic_layering(n)
    m = layering.m
    perms = permutations_of(layering)
    assert len(perms) == m - 1
    identity = np.arange(m)
    for perm in perms:
        assert np.array_equal(perm[perm], identity)
        assert not np.any(perm == identity)
    assert from_permutations(perms, m) == layering


def test_from_permutations_rejects_bad_maps():
    with pytest.raises(DomainError):
        from_permutations([[1, 0, 3, 2]], 4)
    with pytest.raises(DomainError):
        from_permutations([[1, 0, 3, 2], [1, 0, 3, 2], [3, 2, 1, 0]], 4)
    with pytest.raises(DomainError):
        from_permutations([[0, 1, 2, 3], [2, 3, 0, 1], [3, 2, 1, 0]], 4)
    with pytest.raises(DomainError):
        from_permutations([[1, 2, 0, 3], [2, 3, 0, 1], [3, 2, 1, 0]], 4)


def test_antipodal_structure():
    assert check_antipodal_structure(dyadic_layering(2)).valid
    assert check_antipodal_structure(Layering(np.array(TETRA8_DISTANCES))).valid
    # K_6 的分层在 m+1-j 的反射下不可能全部成立
    failing = [layering for layering in enumerate_layerings(6)
               if not check_antipodal_structure(layering).valid]
    assert failing


def test_quadruple_partition():
    blocks = quadruple_partition(dyadic_layering(2))
    assert blocks == [frozenset({0, 1, 6, 7}), frozenset({2, 3, 4, 5})]
    assert quadruple_partition(dyadic_layering(1)) == [frozenset({0, 1, 2, 3})]
    assert quadruple_partition(dyadic_layering(0)) is None
    tetra = quadruple_partition(Layering(np.array(TETRA8_DISTANCES)))
    assert tetra is not None
    assert sorted(len(block) for block in tetra) == [4, 4]


def test_layering_is_read_only_and_hashable():
    layering = dyadic_layering(1)
    with pytest.raises(ValueError):
        layering.dist[0, 1] = 3
    assert len({layering, dyadic_layering(1)}) == 1
    with pytest.raises(DimensionError):
        Layering(np.zeros((2, 3)))
