#!/usr/bin/env python3
"""
测试公共配置
"""

import sys
from pathlib import Path

import pytest

# 添加项目根目录到Python路径
project_root = Path(__file__).parent
sys.path.insert(0, str(project_root))

from core.config import forge_config


@pytest.fixture(autouse=True)
def restore_config():
    """每个测试结束后恢复全局配置"""
    snapshot = forge_config.get_all()
    yield
    forge_config.reset_to_default()
    forge_config.update(snapshot)


@pytest.fixture
def loose_mc():
    """蒙特卡洛比较放宽到5倍标准误"""
    forge_config.set('MC_SIGMAS', 5.0)
    yield 5.0
