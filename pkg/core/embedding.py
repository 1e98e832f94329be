#!/usr/bin/env python3
"""
嵌入模块
把半正定的 Δ 分解为 AᵀA，得到半径为 t 的球面上的距离对称中心 ξ_i
"""

from dataclasses import dataclass
from typing import Any, Dict, Optional

import numpy as np
from kivy.logger import Logger

from .config import forge_config
from .errors import CapacityError, DimensionError, DomainError, ForgeNumericError, PreconditionError
from .layering import Layering, ValidationReport, permutations_of
from .spectral import SpectralReport, delta_matrix, spectral_report, symmetric_eigh


@dataclass(frozen=True, eq=False)
class CenterSet:
    """距离对称中心集：m个点位于q维空间中半径为t的球面上"""
    points: np.ndarray
    r: float
    t: float

    def __post_init__(self):
        points = np.array(self.points, dtype=float)
        if points.ndim == 1:
            points = points.reshape(-1, 1)
        if points.ndim != 2:
            raise DimensionError(f"中心坐标必须是二维数组，实际维数 {points.ndim}")
        points.setflags(write=False)
        object.__setattr__(self, 'points', points)
        object.__setattr__(self, 'r', float(self.r))
        object.__setattr__(self, 't', float(self.t))

    @property
    def m(self) -> int:
        return int(self.points.shape[0])

    @property
    def q(self) -> int:
        return int(self.points.shape[1])

    @property
    def p(self) -> int:
        return self.m // 2

    def pairwise_distances(self) -> np.ndarray:
        diff = self.points[:, None, :] - self.points[None, :, :]
        return np.sqrt(np.sum(diff * diff, axis=-1))

    def to_dict(self) -> Dict[str, Any]:
        return center_set_to_dict(self)


def center_set_to_dict(centers: CenterSet) -> Dict[str, Any]:
    """中心集转换为JSON对象"""
    return {
        'm': centers.m,
        'q': centers.q,
        'r': centers.r,
        't': centers.t,
        'points': centers.points.tolist(),
    }


def center_set_from_dict(data: Dict[str, Any]) -> CenterSet:
    """从JSON对象创建中心集"""
    try:
        centers = CenterSet(points=np.asarray(data['points'], dtype=float), r=data['r'], t=data['t'])
    except (KeyError, TypeError, ValueError) as e:
        raise DomainError(f"中心集JSON无效 - {e}")
    if 'm' in data and int(data['m']) != centers.m:
        raise DimensionError(f"字段m={data['m']}与点数{centers.m}不一致")
    if 'q' in data and int(data['q']) != centers.q:
        raise DimensionError(f"字段q={data['q']}与坐标维数{centers.q}不一致")
    return centers


def radii_for(m: int) -> tuple:
    """球面半径 r = 1/√(2p) 与中心范数 t = √((2p-1)/(2p))"""
    two_p = float(m)
    return 1.0 / np.sqrt(two_p), np.sqrt((two_p - 1.0) / two_p)


def _fix_signs(vectors: np.ndarray) -> np.ndarray:
    """每个特征向量的第一个非零坐标取正"""
    vectors = vectors.copy()
    for k in range(vectors.shape[1]):
        column = vectors[:, k]
        nonzero = np.nonzero(np.abs(column) > 1e-10)[0]
        if nonzero.size and column[nonzero[0]] < 0:
            vectors[:, k] = -column
    return vectors


def embed(layering: Layering, report: Optional[SpectralReport] = None, force: bool = False) -> CenterSet:
    """分解 ((2p-1)/(2p))·Δ = AᵀA，A的列就是中心 ξ_i

    保留特征值大于rank_tolerance的特征方向（按特征值降序），
    坐标就在这组基下表示，维数 q = rank Δ。
    force=True 只用于构造反例：负特征值截断为零，点再缩放到范数 t。
    """
    if report is None:
        report = spectral_report(layering)
    if report.m != layering.m:
        raise DimensionError(f"谱报告阶数{report.m}与分层阶数{layering.m}不一致")
    if not report.embeddable and not force:
        raise PreconditionError(f"分层不可嵌入：gap={report.gap:.6g} < {report.threshold:g}")

    r, t = radii_for(layering.m)
    t2 = t * t
    delta = delta_matrix(layering).matrix
    gram = t2 * delta

    values, vectors = symmetric_eigh(gram, owner='Embedding')
    values = values[::-1]
    vectors = vectors[:, ::-1]

    if not force and values[-1] < -report.psd_tolerance * t2:
        raise ForgeNumericError(f"Gram矩阵存在超出容差的负特征值 {values[-1]:.3e}")

    keep = values > report.rank_tolerance * t2
    if not np.any(keep):
        raise ForgeNumericError("Gram矩阵没有正特征值")
    basis = _fix_signs(vectors[:, keep])
    points = basis * np.sqrt(values[keep])

    if force:
        norms = np.linalg.norm(points, axis=1)
        if np.any(norms <= 0):
            raise ForgeNumericError("截断后出现零向量，无法缩放到球面")
        points = points * (t / norms)[:, None]
        Logger.warning(f"Embedding: 强制嵌入 m={layering.m}，丢弃了 {int(np.sum(values < 0))} 个负特征值")
    else:
        deviation = float(np.max(np.abs(points @ points.T - gram)))
        tolerance = float(forge_config.get('GRAM_TOLERANCE', 1e-8))
        if deviation > tolerance:
            raise ForgeNumericError(f"Gram矩阵重建偏差 {deviation:.3e} 超过容差 {tolerance:.1e}")

    Logger.debug(f"Embedding: m={layering.m} 嵌入到 q={points.shape[1]} 维")
    return CenterSet(points=points, r=r, t=t)


def geodesic_distance(x: np.ndarray, y: np.ndarray, t: float) -> float:
    """半径为 t 的球面上的测地距离 t·arccos(⟨x,y⟩/t²)"""
    cosine = float(np.dot(x, y)) / (t * t)
    return t * float(np.arccos(np.clip(cosine, -1.0, 1.0)))


def verify_center_set(centers: CenterSet, layering: Layering, tol: Optional[float] = None) -> ValidationReport:
    """检查中心集的全部不变量，列出超出容差的项及最大偏差"""
    if centers.m != layering.m:
        raise DimensionError(f"中心数{centers.m}与分层阶数{layering.m}不一致")
    if tol is None:
        tol = float(forge_config.get('CENTER_TOLERANCE', 1e-8))

    m = centers.m
    r, t = centers.r, centers.t
    points = centers.points
    report = ValidationReport()

    identity = abs(r * r + t * t - 1.0)
    report.observe(identity)
    if identity > tol:
        report.add('radius-identity', (), identity)

    norms = np.linalg.norm(points, axis=1)
    for i in range(m):
        deviation = abs(norms[i] - t)
        report.observe(deviation)
        if deviation > tol:
            report.add('norm', (i,), deviation)

    squared = centers.pairwise_distances() ** 2
    expected = 4.0 * layering.dist * r * r
    for i in range(m):
        for j in range(i + 1, m):
            deviation = abs(squared[i, j] - expected[i, j])
            report.observe(deviation)
            if deviation > tol:
                report.add('distance', (i, j), deviation)

    if m >= 2:
        antipode = permutations_of(layering)[m - 2]
        for i in range(m):
            deviation = float(np.linalg.norm(points[i] + points[antipode[i]]))
            report.observe(deviation)
            if deviation > tol:
                report.add('antipodal', (i, int(antipode[i])), deviation)

    # arccos在±1附近条件数差，容差取平方根
    geodesic_tol = float(np.sqrt(tol))
    delta = delta_matrix(layering).matrix
    for i in range(m):
        for j in range(i + 1, m):
            expected_arc = t * float(np.arccos(np.clip(delta[i, j], -1.0, 1.0)))
            deviation = abs(geodesic_distance(points[i], points[j], t) - expected_arc)
            if deviation > geodesic_tol:
                report.add('geodesic', (i, j), deviation)

    if not report.valid:
        Logger.info(f"Embedding: 中心集验证失败 - {', '.join(report.rules())}")
    return report


def dyadic_centers(n: int) -> CenterSet:
    """矩形平行多面体的顶点：x_k(a) = (2·bit_k(a) - 1)·r·√(2^k)

    边长 2r√(2^k)，顶点到原点距离均为 t，d(a, b) = a XOR b。
    """
    if n < 0:
        raise DomainError(f"n必须非负，实际{n}")
    cap = int(forge_config.get('MAX_DYADIC_LEVEL', 8))
    if n > cap:
        raise CapacityError(f"n={n} 超过上限 MAX_DYADIC_LEVEL={cap}")

    m = 2 ** (n + 1)
    r, t = radii_for(m)
    labels = np.arange(m)[:, None]
    levels = np.arange(n + 1)[None, :]
    bits = (labels >> levels) & 1
    points = (2.0 * bits - 1.0) * r * np.sqrt(2.0 ** levels)
    return CenterSet(points=points, r=r, t=t)


def centers_uniformly_distributed(centers: CenterSet, tol: Optional[float] = None) -> bool:
    """中心的计数测度是否均匀分布：从每个中心看到的距离多重集都相同"""
    if tol is None:
        tol = float(forge_config.get('CENTER_TOLERANCE', 1e-8))
    distances = np.sort(centers.pairwise_distances(), axis=1)
    reference = distances[0]
    return bool(np.all(np.abs(distances - reference[None, :]) <= tol))
