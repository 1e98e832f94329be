#!/usr/bin/env python3
"""
异常定义模块
每个异常类携带CLI退出码：0 全部通过，1 验证失败，2 输入错误，3 数值错误
"""

from typing import Any, Optional


class ForgeError(Exception):
    """所有领域异常的基类"""

    exit_code = 3

    def __init__(self, message: str, index: Optional[int] = None, detail: Any = None):
        super().__init__(message)
        self.message = message
        self.index = index
        self.detail = detail

    def with_index(self, index: int) -> 'ForgeError':
        """附加出错元素在输入流中的序号（从1开始）"""
        self.index = index
        return self

    def __str__(self) -> str:
        if self.index is None:
            return self.message
        return f"[#{self.index}] {self.message}"


class ForgeInputError(ForgeError):
    """输入错误"""
    exit_code = 2


class DimensionError(ForgeInputError):
    """矩阵维度错误（例如非方阵）"""


class DomainError(ForgeInputError):
    """参数不在定义域内（例如奇数阶完全图）"""


class PreconditionError(ForgeInputError):
    """操作前置条件不满足"""


class CapacityError(ForgeInputError):
    """超出配置的规模上限"""


class ForgeNumericError(ForgeError):
    """数值计算错误"""
    exit_code = 3


class EigenSolverError(ForgeNumericError):
    """对称特征值求解失败"""


class ForgeGeometryError(ForgeError):
    """几何计算错误"""
    exit_code = 3


class DegenerateProjectionError(ForgeGeometryError):
    """基点在3-平面V上的投影为零，最近点/最远点不唯一"""


class VerificationFailure(ForgeError):
    """测度验证未通过"""
    exit_code = 1
