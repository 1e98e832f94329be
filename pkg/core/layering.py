#!/usr/bin/env python3
"""
分层模块
分层（layering）以m×m整数距离矩阵表示，等价于完全图K_m的规范化真(m-1)-边着色。
内部索引从0开始；JSON与报告中的序号从1开始。
"""

from dataclasses import dataclass, field
from typing import Any, Dict, FrozenSet, Iterator, List, Optional, Sequence

import numpy as np
from kivy.logger import Logger

from .config import forge_config
from .errors import CapacityError, DimensionError, DomainError


@dataclass(frozen=True)
class Violation:
    """单条违反记录"""
    rule: str
    indices: tuple
    deviation: float = 0.0

    def to_dict(self) -> Dict[str, Any]:
        """转换为字典（序号从1开始）"""
        return {
            'rule': self.rule,
            'indices': [int(i) + 1 for i in self.indices],
            'deviation': float(self.deviation),
        }


@dataclass
class ValidationReport:
    """验证报告：valid 当且仅当 violations 为空"""
    violations: List[Violation] = field(default_factory=list)
    observed_deviation: float = 0.0

    @property
    def valid(self) -> bool:
        return not self.violations

    @property
    def max_deviation(self) -> float:
        """所有检查中观测到的最大偏差（含未超出容差的）"""
        return max([self.observed_deviation] + [v.deviation for v in self.violations])

    def observe(self, deviation: float):
        self.observed_deviation = max(self.observed_deviation, float(deviation))

    def rules(self) -> List[str]:
        """按出现顺序返回不重复的规则名"""
        seen = []
        for violation in self.violations:
            if violation.rule not in seen:
                seen.append(violation.rule)
        return seen

    def add(self, rule: str, indices: Sequence[int], deviation: float = 0.0):
        self.violations.append(Violation(rule, tuple(int(i) for i in indices), float(deviation)))

    def __bool__(self) -> bool:
        return self.valid

    def to_dict(self) -> Dict[str, Any]:
        return {
            'valid': self.valid,
            'max_deviation': self.max_deviation,
            'violations': [v.to_dict() for v in self.violations],
        }


@dataclass(frozen=True, eq=False)
class Layering:
    """分层数据类，dist为只读整数矩阵"""
    dist: np.ndarray

    def __post_init__(self):
        matrix = np.array(self.dist, dtype=np.int64)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise DimensionError(f"距离矩阵必须是方阵，实际形状 {matrix.shape}")
        matrix.setflags(write=False)
        object.__setattr__(self, 'dist', matrix)

    @property
    def m(self) -> int:
        return int(self.dist.shape[0])

    @property
    def p(self) -> int:
        return self.m // 2

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Layering):
            return NotImplemented
        return self.m == other.m and bool(np.array_equal(self.dist, other.dist))

    def __hash__(self) -> int:
        return hash((self.m, self.dist.tobytes()))

    def __repr__(self) -> str:
        return f"Layering(m={self.m}, dist={self.dist.tolist()})"

    def key(self) -> tuple:
        """展平后的距离矩阵，用于字典序比较"""
        return tuple(int(v) for v in self.dist.ravel())

    def to_dict(self) -> Dict[str, Any]:
        return layering_to_dict(self)


def layering_to_dict(layering: Layering) -> Dict[str, Any]:
    """分层转换为JSON对象 {"m", "d"}"""
    return {'m': layering.m, 'd': layering.dist.tolist()}


def layering_from_dict(data: Dict[str, Any], validate: bool = True) -> Layering:
    """从JSON对象创建分层"""
    try:
        matrix = data['d']
    except (KeyError, TypeError) as e:
        raise DomainError(f"分层JSON缺少字段 - {e}")
    if validate:
        # 先校验原始矩阵，转换为整数前拒绝非整数元素
        report = validate_layering(matrix)
        if not report.valid:
            raise DomainError(f"不是有效的分层: {', '.join(report.rules())}", detail=report)
    layering = Layering(np.asarray(matrix))
    declared = data.get('m')
    if declared is not None and int(declared) != layering.m:
        raise DimensionError(f"字段m={declared}与矩阵阶数{layering.m}不一致")
    return layering


def validate_layering(dist: Any) -> ValidationReport:
    """检查分层的全部公理：对称、零对角、拉丁行、规范化"""
    try:
        matrix = np.asarray(dist, dtype=float) if not isinstance(dist, np.ndarray) else dist
    except (TypeError, ValueError) as e:
        raise DimensionError(f"距离矩阵无法解析为方阵 - {e}")
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise DimensionError(f"距离矩阵必须是方阵，实际形状 {matrix.shape}")
    if matrix.size and not np.all(np.equal(np.mod(matrix, 1), 0)):
        raise DomainError("距离矩阵必须是整数矩阵")
    matrix = matrix.astype(np.int64)
    if matrix.size and matrix.min() < 0:
        raise DomainError("距离矩阵必须是非负的")

    m = matrix.shape[0]
    report = ValidationReport()

    if m == 0 or m % 2:
        report.add('even-order', (), 0.0)

    for i, j in zip(*np.nonzero(matrix != matrix.T)):
        if i < j:
            report.add('symmetry', (i, j), abs(int(matrix[i, j]) - int(matrix[j, i])))

    for i in np.nonzero(np.diag(matrix) != 0)[0]:
        report.add('zero-diagonal', (i, i), int(matrix[i, i]))

    colors = set(range(1, m))
    for i in range(m):
        row = [int(matrix[i, j]) for j in range(m) if j != i]
        if sorted(row) != sorted(colors):
            report.add('latin-row', (i,), len(colors - set(row)))

    for j in range(m):
        if int(matrix[0, j]) != j:
            report.add('normalization', (0, j), abs(int(matrix[0, j]) - j))

    return report


def permutations_of(layering: Layering) -> List[np.ndarray]:
    """读出对合l_1..l_{m-1}：返回列表第i-1项满足 l_i(j) = k 当且仅当 d_jk = i"""
    m = layering.m
    perms = []
    for i in range(1, m):
        rows, cols = np.nonzero(layering.dist == i)
        perm = np.empty(m, dtype=np.int64)
        perm[rows] = cols
        perms.append(perm)
    return perms


def from_permutations(perms: Sequence[Sequence[int]], m: int) -> Layering:
    """由对合族重建距离矩阵，是permutations_of的逆"""
    if len(perms) != m - 1:
        raise DomainError(f"需要{m - 1}个对合，实际{len(perms)}个")

    dist = np.zeros((m, m), dtype=np.int64)
    for i, perm in enumerate(perms, start=1):
        perm = np.asarray(perm, dtype=np.int64)
        if perm.shape != (m,) or sorted(perm.tolist()) != list(range(m)):
            raise DomainError(f"l_{i} 不是{{1..{m}}}上的置换")
        if np.any(perm == np.arange(m)):
            raise DomainError(f"l_{i} 有不动点")
        if np.any(perm[perm] != np.arange(m)):
            raise DomainError(f"l_{i} 不是对合")
        if np.any(dist[np.arange(m), perm] != 0):
            raise DomainError(f"l_{i} 与之前的对合在同一位置取值相同")
        dist[np.arange(m), perm] = i

    return Layering(dist)


def dyadic_layering(n: int) -> Layering:
    """二进分层：m = 2^{n+1}，d(a, b) = a XOR b

    递推 l_i(2^k + j) = 2^k + l_i(j)，l_{2^k} 交换两块，
    l_{2^k+i} = 块交换 ∘ l_i，恰好就是按位异或。
    """
    if n < 0:
        raise DomainError(f"n必须非负，实际{n}")
    cap = int(forge_config.get('MAX_DYADIC_LEVEL', 8))
    if n > cap:
        raise CapacityError(f"n={n} 超过上限 MAX_DYADIC_LEVEL={cap}")

    labels = np.arange(2 ** (n + 1), dtype=np.int64)
    return Layering(np.bitwise_xor.outer(labels, labels))


def enumerate_layerings(m: int, limit: Optional[int] = None) -> Iterator[Layering]:
    """按展平矩阵的字典序枚举K_m的全部规范化分层

    第一行固定为 0..m-1；上三角按行优先回溯填充，颜色从小到大尝试。
    下三角元素总是先于同一展平位置之后的自由元素确定，
    所以上三角的字典序就是整个矩阵的字典序。
    """
    if m < 2 or m % 2:
        raise DomainError(f"m必须是不小于2的偶数，实际{m}")
    cap = int(forge_config.get('MAX_LAYERING_ORDER', 10))
    if m > cap:
        raise CapacityError(f"m={m} 超过上限 MAX_LAYERING_ORDER={cap}")
    return _backtrack(m, limit)


def _backtrack(m: int, limit: Optional[int]) -> Iterator[Layering]:
    if limit is not None and limit <= 0:
        return

    full = (1 << m) - 2
    dist = np.zeros((m, m), dtype=np.int64)
    dist[0, :] = np.arange(m)
    dist[:, 0] = np.arange(m)
    used = [full] + [1 << j for j in range(1, m)]
    cells = [(i, j) for i in range(1, m) for j in range(i + 1, m)]
    total = len(cells)
    emitted = 0

    # 显式栈：choice[k] 为第k个格子当前尝试的颜色
    choice = [0] * total
    k = 0
    while k >= 0:
        if k == total:
            yield Layering(dist.copy())
            emitted += 1
            if limit is not None and emitted >= limit:
                break
            k -= 1
            continue

        i, j = cells[k]
        previous = choice[k]
        if previous:
            bit = 1 << previous
            used[i] &= ~bit
            used[j] &= ~bit

        blocked = used[i] | used[j]
        color = previous + 1
        while color < m and blocked & (1 << color):
            color += 1

        if color < m:
            bit = 1 << color
            used[i] |= bit
            used[j] |= bit
            dist[i, j] = dist[j, i] = color
            choice[k] = color
            k += 1
        else:
            choice[k] = 0
            dist[i, j] = dist[j, i] = 0
            k -= 1

    Logger.debug(f"Layering: K_{m} 枚举结束，共输出 {emitted} 个分层")


def check_antipodal_structure(layering: Layering) -> ValidationReport:
    """检查对径恒等式 l_{m-1}(j) = m+1-j 与 l_i∘l_{m-1} = l_{m-1}∘l_i = l_{m-1-i}

    两个恒等式只在存在嵌入时才是必要条件，这里用作谱检验之前的快速预筛选。
    """
    m = layering.m
    perms = permutations_of(layering)
    report = ValidationReport()

    antipode = perms[m - 2]
    for j in range(m):
        if antipode[j] != m - 1 - j:
            report.add('antipodal-reflection', (m - 2, j), abs(int(antipode[j]) - (m - 1 - j)))

    for i in range(1, m - 1):
        li = perms[i - 1]
        target = perms[m - 2 - i]
        left = li[antipode]
        right = antipode[li]
        for j in np.nonzero((left != target) | (right != target))[0]:
            report.add('antipodal-composition', (i - 1, j), 1.0)

    return report


def quadruple_partition(layering: Layering) -> Optional[List[FrozenSet[int]]]:
    """划分 {j, l_1(j), l_{m-1}(j), l_{m-2}(j)}；不构成4元划分时返回None

    对径恒等式成立时这些集合两两相等或不交，从而 m ≡ 0 (mod 4)。
    """
    m = layering.m
    if m < 4:
        return None
    perms = permutations_of(layering)
    l1, lm1, lm2 = perms[0], perms[m - 2], perms[m - 3]

    blocks: Dict[FrozenSet[int], None] = {}
    for j in range(m):
        block = frozenset((j, int(l1[j]), int(lm1[j]), int(lm2[j])))
        if len(block) != 4:
            return None
        blocks[block] = None

    parts = sorted(blocks, key=min)
    covered = set()
    for block in parts:
        if covered & block:
            return None
        covered |= block
    return parts
