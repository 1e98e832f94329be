#!/usr/bin/env python3
"""
冒烟测试脚本
用于验证项目基本功能是否正常，可直接运行 python test_app.py，也可由pytest收集
"""

import sys
import tempfile
import traceback
from pathlib import Path

# 添加项目根目录到Python路径
project_root = Path(__file__).parent
sys.path.insert(0, str(project_root))


def test_imports():
    """测试模块导入"""
    print("\n=== 测试模块导入 ===")

    import kivy
    print(f"✓ Kivy版本: {kivy.__version__}")

    import numpy
    print(f"✓ NumPy版本: {numpy.__version__}")

    import jsonschema
    print("✓ jsonschema导入成功")

    from core import __version__
    from core.config import forge_config
    from core.pipeline import pipeline_manager
    assert forge_config is not None and pipeline_manager is not None
    print(f"✓ 核心模块导入成功 (forge {__version__})")


def test_config():
    """测试配置功能"""
    print("\n=== 测试配置功能 ===")

    from core.config import forge_config

    problems = forge_config.validate()
    print(f"✓ 配置验证结果: {problems or '无问题'}")
    assert problems == []

    summary = forge_config.get_config_summary()
    print(f"✓ 配置摘要: {summary}")
    assert summary['threads'] >= 1


def test_database():
    """测试数据库功能"""
    print("\n=== 测试数据库功能 ===")

    from core.database import ResultStore

    with tempfile.TemporaryDirectory() as tmp:
        store = ResultStore(str(Path(tmp) / 'smoke.db'))
        run_id = store.start_run('smoke', seed=2 ** 63 + 5, samples=1, trials=1)
        assert run_id is not None
        print(f"✓ 登记运行 #{run_id}")

        db_info = store.get_database_info()
        print(f"✓ 数据库信息: {db_info['tables_info']}")
        assert db_info['tables_info']['runs'] == 1
        assert store.get_run(run_id)['seed'] == 2 ** 63 + 5


def test_pipeline_status():
    """测试流水线管理器"""
    print("\n=== 测试流水线管理器 ===")

    from core.pipeline import run_pipeline

    summary = run_pipeline(6, samples=100, trials=1, max_workers=1)
    print(f"✓ 流水线汇总: {summary.to_dict()}")
    assert summary.total == 6 and summary.kept == 0

    from core.pipeline import pipeline_manager
    status = pipeline_manager.get_status()
    print(f"✓ 管理器状态: {status['total_stats']}")
    assert status['is_running'] is False


def main():
    """主测试函数"""
    print("forge 距离对称球面构型 - 冒烟测试")
    print("=" * 50)

    checks = [
        ("模块导入", test_imports),
        ("配置功能", test_config),
        ("数据库功能", test_database),
        ("流水线管理器", test_pipeline_status),
    ]

    test_results = []
    for test_name, check in checks:
        try:
            check()
            test_results.append((test_name, True))
        except Exception as e:
            print(f"✗ {test_name}测试失败: {e}")
            traceback.print_exc()
            test_results.append((test_name, False))

    print("\n" + "=" * 50)
    print("测试结果汇总:")
    print("=" * 50)

    all_passed = True
    for test_name, result in test_results:
        status = "✓ 通过" if result else "✗ 失败"
        print(f"{test_name:<15} {status}")
        if not result:
            all_passed = False

    print("\n" + "=" * 50)
    if all_passed:
        print("🎉 所有测试通过！")
        print("\n下一步操作:")
        print("1. 运行 'python -m pytest' 执行完整测试")
        print("2. 运行 'python run.py pipeline --m 8' 处理K_8的全部分层")
    else:
        print("❌ 部分测试失败，请检查错误信息并修复问题。")
        print("\n建议操作:")
        print("1. 运行 'pip install -r requirements.txt' 安装依赖")
        print("2. 修复报错的模块后重新测试")

    return all_passed


if __name__ == '__main__':
    try:
        success = main()
        sys.exit(0 if success else 1)
    except KeyboardInterrupt:
        print("\n测试被用户中断")
        sys.exit(1)
