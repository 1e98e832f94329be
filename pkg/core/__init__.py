#!/usr/bin/env python3
"""
核心模块包
距离对称球面并集与3-一致测度的构造、验证与导出
"""

import os

# Kivy配置：kivy不能解析CLI参数，也不写日志文件和配置文件
os.environ.setdefault('KIVY_NO_ARGS', '1')
os.environ.setdefault('KIVY_NO_FILELOG', '1')
os.environ.setdefault('KIVY_NO_CONFIG', '1')
os.environ.setdefault('KIVY_LOG_MODE', 'MIXED')

__version__ = '1.0.0'
