#!/usr/bin/env python3
"""
谱判据模块
构造分层的加权图矩阵（邻接、度、拉普拉斯），用谱间隙判定可嵌入性：
Δ 半正定 ⟺ λ_G ≥ p(2p-1)
"""

from dataclasses import dataclass
from typing import Any, Dict, Iterable, Iterator, Optional, Tuple

import numpy as np
from kivy.logger import Logger

from .config import forge_config
from .errors import EigenSolverError, ForgeNumericError, PreconditionError
from .layering import Layering, permutations_of
from .scheduler import WorkPool


@dataclass(frozen=True)
class GraphMatrices:
    """加权图矩阵：A_ij = d_ij，D_ii = Σ_j d_ij，L = D - A"""
    adjacency: np.ndarray
    degree: np.ndarray
    laplacian: np.ndarray


@dataclass(frozen=True)
class DeltaMatrix:
    """Δ_ij = (2p-1-2d_ij)/(2p-1)；scaled 为整数矩阵 (2p-1)Δ"""
    matrix: np.ndarray
    scaled: np.ndarray
    p: int

    @property
    def m(self) -> int:
        return int(self.matrix.shape[0])


@dataclass
class SpectralReport:
    """谱报告"""
    m: int
    p: int
    laplacian_eigenvalues: np.ndarray
    gap: float
    threshold: float
    embeddable: bool
    delta_eigenvalues: np.ndarray
    delta_rank: int
    psd_tolerance: float
    rank_tolerance: float
    gap_embeddable: bool
    delta_embeddable: bool

    def to_dict(self) -> Dict[str, Any]:
        return {
            'm': self.m,
            'p': self.p,
            'gap': float(self.gap),
            'threshold': float(self.threshold),
            'embeddable': bool(self.embeddable),
            'delta_rank': int(self.delta_rank),
            'l_eigs': [float(v) for v in self.laplacian_eigenvalues],
            'delta_eigs': [float(v) for v in self.delta_eigenvalues],
            'gap_embeddable': bool(self.gap_embeddable),
            'delta_embeddable': bool(self.delta_embeddable),
        }


def symmetric_eigenvalues(matrix: np.ndarray, owner: str = 'Spectral') -> np.ndarray:
    """对称矩阵特征值（升序）；求解失败时抛出EigenSolverError"""
    try:
        values = np.linalg.eigh(matrix)[0]
    except np.linalg.LinAlgError as e:
        Logger.error(f"{owner}: 特征值求解失败 - {e}")
        raise EigenSolverError(f"特征值求解不收敛: {e}")
    if not np.all(np.isfinite(values)):
        raise EigenSolverError("特征值包含非有限值")
    return values


def symmetric_eigh(matrix: np.ndarray, owner: str = 'Spectral') -> Tuple[np.ndarray, np.ndarray]:
    """对称矩阵特征分解（升序）；求解失败时抛出EigenSolverError"""
    try:
        values, vectors = np.linalg.eigh(matrix)
    except np.linalg.LinAlgError as e:
        Logger.error(f"{owner}: 特征分解失败 - {e}")
        raise EigenSolverError(f"特征分解不收敛: {e}")
    if not (np.all(np.isfinite(values)) and np.all(np.isfinite(vectors))):
        raise EigenSolverError("特征分解包含非有限值")
    return values, vectors


def graph_matrices(layering: Layering) -> GraphMatrices:
    """构造邻接矩阵、度矩阵与拉普拉斯矩阵"""
    m = layering.m
    dist = layering.dist
    row_sums = dist.sum(axis=1)
    expected = m * (m - 1) // 2
    if np.any(row_sums != expected):
        raise PreconditionError(f"度不变量不成立：行和应为 {expected}")

    adjacency = dist.astype(float)
    degree = np.diag(row_sums.astype(float))
    return GraphMatrices(adjacency=adjacency, degree=degree, laplacian=degree - adjacency)


def delta_matrix(layering: Layering) -> DeltaMatrix:
    """构造 Δ 并校验 Δ = J - 2pI + (2/(2p-1))L

    整数路径：两边乘以 2p-1 后逐项比较整数；
    浮点路径：按 IDENTITY_TOLERANCE 逐项比较。
    """
    m = layering.m
    p = m // 2
    q = 2 * p - 1
    dist = layering.dist
    scaled = q - 2 * dist

    laplacian_int = np.diag(dist.sum(axis=1)) - dist
    rhs = q * np.ones((m, m), dtype=np.int64) - 2 * p * q * np.eye(m, dtype=np.int64) + 2 * laplacian_int
    if not np.array_equal(scaled, rhs):
        raise ForgeNumericError("整数恒等式 (2p-1)Δ = (2p-1)J - 2p(2p-1)I + 2L 不成立")

    matrix = scaled / q
    laplacian = graph_matrices(layering).laplacian
    identity = np.ones((m, m)) - 2 * p * np.eye(m) + (2.0 / q) * laplacian
    deviation = float(np.max(np.abs(matrix - identity))) if m else 0.0
    tolerance = float(forge_config.get('IDENTITY_TOLERANCE', 1e-12))
    if deviation > tolerance:
        raise ForgeNumericError(f"Δ 恒等式偏差 {deviation:.3e} 超过容差 {tolerance:.1e}")

    scaled = scaled.copy()
    scaled.setflags(write=False)
    matrix.setflags(write=False)
    return DeltaMatrix(matrix=matrix, scaled=scaled, p=p)


def delta_from_permutations(layering: Layering) -> np.ndarray:
    """Δ = Σ_i ((2p-1-2i)/(2p-1))·A_i，A_i 为 l_i 的置换矩阵，A_0 = I"""
    m = layering.m
    q = m - 1
    result = np.eye(m)
    for i, perm in enumerate(permutations_of(layering), start=1):
        result[np.arange(m), perm] += (q - 2 * i) / q
    return result


def antipodal_kernel(layering: Layering) -> np.ndarray:
    """列向量 u_j = e_j + e_{m+1-j}（j ≤ p）组成的 m×p 矩阵

    对径恒等式成立时每个 u_j 都在 Δ 的核中。
    """
    m = layering.m
    p = m // 2
    kernel = np.zeros((m, p))
    for j in range(p):
        kernel[j, j] = 1.0
        kernel[m - 1 - j, j] = 1.0
    return kernel


def spectral_report(layering: Layering, psd_tolerance: Optional[float] = None,
                    rank_tolerance: Optional[float] = None) -> SpectralReport:
    """计算拉普拉斯谱与 Δ 谱，给出可嵌入性结论"""
    m = layering.m
    p = m // 2
    if psd_tolerance is None:
        psd_tolerance = forge_config.psd_tolerance(m)
    if psd_tolerance < 0:
        raise PreconditionError(f"psd_tolerance必须非负，实际{psd_tolerance}")

    matrices = graph_matrices(layering)
    delta = delta_matrix(layering)

    l_eigs = symmetric_eigenvalues(matrices.laplacian)
    delta_eigs = symmetric_eigenvalues(delta.matrix)

    gap = float(l_eigs[1]) if m > 1 else 0.0
    threshold = float(p * (2 * p - 1))
    gap_embeddable = gap >= threshold - (2 * p - 1) / 2.0 * psd_tolerance
    delta_embeddable = bool(delta_eigs[0] >= -psd_tolerance)
    if gap_embeddable != delta_embeddable:
        Logger.warning(f"Spectral: 谱间隙判据({gap_embeddable})与Δ判据({delta_embeddable})不一致 - m={m}")

    if rank_tolerance is None:
        rank_tolerance = float(forge_config.get('RANK_TOLERANCE_RELATIVE', 1e-8)) * max(float(delta_eigs[-1]), 1.0)
    delta_rank = int(np.count_nonzero(delta_eigs > rank_tolerance))

    Logger.debug(f"Spectral: m={m} gap={gap:.6g} threshold={threshold:g} rank={delta_rank}")
    return SpectralReport(
        m=m,
        p=p,
        laplacian_eigenvalues=l_eigs,
        gap=gap,
        threshold=threshold,
        embeddable=delta_embeddable,
        delta_eigenvalues=delta_eigs,
        delta_rank=delta_rank,
        psd_tolerance=float(psd_tolerance),
        rank_tolerance=float(rank_tolerance),
        gap_embeddable=gap_embeddable,
        delta_embeddable=delta_embeddable,
    )


def check_constructibility(report: SpectralReport):
    """可嵌入且 m ≥ 4 时必须 p 为偶数且 rank Δ ≤ p；m = 2 不受奇偶约束"""
    if not report.embeddable or report.m < 4:
        return
    if report.p % 2:
        raise ForgeNumericError(f"m={report.m} 的分层被判为可嵌入，但 p={report.p} 为奇数")
    if report.delta_rank > report.p:
        raise ForgeNumericError(f"rank Δ = {report.delta_rank} 超过 p = {report.p}")


def _screen_one(layering: Layering, psd_tolerance: Optional[float]) -> Tuple[Layering, SpectralReport]:
    report = spectral_report(layering, psd_tolerance)
    check_constructibility(report)
    return layering, report


def screen(layerings: Iterable[Layering], psd_tolerance: Optional[float] = None,
           pool: Optional[WorkPool] = None) -> Iterator[Tuple[Layering, SpectralReport]]:
    """谱筛选：按输入顺序只保留可嵌入的分层

    出错元素的异常带上输入序号后抛出。
    """
    own_pool = pool is None
    pool = pool or WorkPool()
    try:
        outcomes = pool.imap_ordered(lambda layering: _screen_one(layering, psd_tolerance), layerings)
        for outcome in outcomes:
            layering, report = outcome.unwrap()
            if report.embeddable:
                yield layering, report
    finally:
        if own_pool:
            pool.shutdown()
