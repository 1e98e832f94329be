#!/usr/bin/env python3
"""
配置模块测试
"""

import json

import pytest

from core.config import ForgeConfig, forge_config


@pytest.fixture
def config(tmp_path):
    return ForgeConfig(str(tmp_path / 'forge_config.json'))


def test_defaults(config):
    assert config.get('DEFAULT_SEED') == 42
    assert config.get('DEFAULT_SAMPLES') == 1000000
    assert config.get('MC_SIGMAS') == 3.0
    assert config.validate() == []
    assert config.get('MISSING', 'fallback') == 'fallback'


def test_save_and_load(config, tmp_path):
    config.set('PIPELINE_TRIALS', 9)
    assert config.save()
    saved = json.loads((tmp_path / 'forge_config.json').read_text(encoding='utf-8'))
    assert saved['PIPELINE_TRIALS'] == 9

    reloaded = ForgeConfig(str(tmp_path / 'forge_config.json'))
    assert reloaded.get('PIPELINE_TRIALS') == 9
    assert reloaded.get('DEFAULT_SEED') == 42


def test_partial_file_keeps_defaults(tmp_path):
    path = tmp_path / 'partial.json'
    path.write_text(json.dumps({'NU_ABS_TOL': 1e-5}), encoding='utf-8')
    config = ForgeConfig(str(path))
    assert config.get('NU_ABS_TOL') == 1e-5
    assert config.get('SIGMA_ABS_TOL') == 1e-9


def test_invalid_file_falls_back(tmp_path):
    path = tmp_path / 'broken.json'
    path.write_text('[1, 2', encoding='utf-8')
    config = ForgeConfig(str(path))
    assert config.get('DEFAULT_SEED') == 42
    path.write_text('[1, 2]', encoding='utf-8')
    assert config.load() is False


@pytest.mark.parametrize('key, value', [
    ('MAX_LAYERING_ORDER', 7),
    ('MAX_DYADIC_LEVEL', -1),
    ('NU_ABS_TOL', -1e-6),
    ('DEFAULT_TRIALS', 0),
    ('DEFAULT_SEED', 2 ** 64),
    ('THREADS', 0),
    ('LOG_LEVEL', 'loud'),
])
def test_validate_reports_problems(config, key, value):
    config.set(key, value)
    problems = config.validate()
    assert len(problems) == 1
    assert key in problems[0]


def test_thread_count(config, monkeypatch):
    monkeypatch.setenv('FORGE_THREADS', '3')
    assert config.get_thread_count() == 3
    config.set('THREADS', 5)
    assert config.get_thread_count() == 5
    config.set('THREADS', None)
    monkeypatch.setenv('FORGE_THREADS', 'many')
    assert config.get_thread_count() >= 1


def test_psd_tolerance_scales_with_m(config):
    assert config.psd_tolerance(8) == pytest.approx(8e-9)


def test_import_export(config):
    exported = config.export_config()
    assert json.loads(exported)['DEFAULT_SEED'] == 42
    assert config.import_config(json.dumps({'DEFAULT_SEED': 7}))
    assert config.get('DEFAULT_SEED') == 7
    assert config.import_config('"text"') is False
    assert config.import_config('{') is False


def test_grouped_views(config):
    assert set(config.get_spectral_config()) == {'PSD_TOLERANCE_PER_POINT', 'RANK_TOLERANCE_RELATIVE',
                                                 'IDENTITY_TOLERANCE'}
    assert config.get_measure_config()['MC_CHUNK_SIZE'] == 65536
    pipeline = config.get_pipeline_config()
    assert pipeline['PIPELINE_SAMPLES'] == 20000
    assert pipeline['THREADS'] >= 1
    summary = config.get_config_summary()
    assert summary['config_file_exists'] is False
    assert summary['problems'] == []


def test_global_config_is_restored_between_tests():
    assert forge_config.get('MC_SIGMAS') == 3.0
    forge_config.set('MC_SIGMAS', 100.0)
