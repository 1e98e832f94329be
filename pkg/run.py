#!/usr/bin/env python3
"""
forge 启动脚本
用于开发和测试：python run.py pipeline --m 8
"""

import os
import sys
from pathlib import Path

# 添加项目根目录到Python路径
project_root = Path(__file__).parent
sys.path.insert(0, str(project_root))

# 设置环境变量
os.environ.setdefault('KIVY_NO_ARGS', '1')
os.environ.setdefault('KIVY_NO_CONSOLELOG', '0')
os.environ.setdefault('KIVY_LOG_MODE', 'MIXED')

if __name__ == '__main__':
    try:
        from main import main
        sys.exit(main())

    except ImportError as e:
        print(f"导入错误: {e}", file=sys.stderr)
        print("请确保所有依赖已正确安装 (pip install -r requirements.txt)", file=sys.stderr)
        sys.exit(2)
