#!/usr/bin/env python3
"""
目录模块
具名的3-一致锥例子：光锥、C_k 族、8点四面体构型、矩形构型，
同时给出构造式表示与二次方程组表示，并可相互校验
"""

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np
from kivy.logger import Logger

from .config import forge_config
from .embedding import CenterSet, dyadic_centers, embed
from .errors import DomainError, ForgeGeometryError
from .geometry import SphereConfig, batch_distance_to_support, build_config, config_to_dict, sample_config_points
from .layering import Layering, ValidationReport, dyadic_layering

# 8点例子的距离矩阵（对称补全，前四行与最初给出的矩阵一致）
TETRA8_DISTANCES = (
    (0, 1, 2, 3, 4, 5, 6, 7),
    (1, 0, 3, 5, 2, 4, 7, 6),
    (2, 3, 0, 1, 6, 7, 4, 5),
    (3, 5, 1, 0, 7, 6, 2, 4),
    (4, 2, 6, 7, 0, 1, 5, 3),
    (5, 4, 7, 6, 1, 0, 3, 2),
    (6, 7, 4, 2, 5, 3, 0, 1),
    (7, 6, 5, 4, 3, 2, 1, 0),
)

# 最初给出的邻接矩阵与 7Δ，两者都不对称（第5、6、8行有误）
PRINTED_TETRA8_DISTANCES = (
    (0, 1, 2, 3, 4, 5, 6, 7),
    (1, 0, 3, 5, 2, 4, 7, 6),
    (2, 3, 0, 1, 6, 7, 4, 5),
    (3, 5, 1, 0, 7, 6, 2, 4),
    (4, 5, 6, 7, 0, 1, 2, 3),
    (2, 4, 7, 6, 1, 0, 3, 5),
    (6, 7, 4, 5, 2, 3, 0, 1),
    (7, 6, 2, 4, 3, 5, 1, 0),
)

PRINTED_TETRA8_DELTA7 = (
    (7, 5, 3, 1, -1, -3, -5, -7),
    (5, 7, 1, -3, 3, -1, -7, -5),
    (3, 1, 7, 5, -5, -7, -1, -3),
    (1, -3, 5, 7, -7, -5, 3, -1),
    (-1, -3, -5, -7, 7, 5, 3, 1),
    (3, -1, -7, -5, 5, 7, 1, -3),
    (-5, -7, -1, -3, 3, 1, 7, 5),
    (-7, -5, 3, -1, 1, -3, 5, 7),
)

CATALOG_NAMES = ('kp', 'ck', 'tetra8', 'rect4', 'kp5')


@dataclass(frozen=True)
class QuadricRelation:
    """平方坐标之间的整数系数关系 x_lhs² = Σ rhs[i]·x_i²（坐标序号从0开始）"""
    lhs: int
    rhs: Dict[int, int] = field(default_factory=dict)

    def residual(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        value = x[..., self.lhs] ** 2
        for index, coefficient in self.rhs.items():
            value = value - coefficient * x[..., index] ** 2
        return value

    def to_dict(self) -> Dict[str, Any]:
        return {
            'lhs': self.lhs + 1,
            'rhs': {str(index + 1): int(coefficient) for index, coefficient in sorted(self.rhs.items())},
        }

    def __str__(self) -> str:
        terms = ' + '.join(f"{c if c != 1 else ''}x{i + 1}²" for i, c in sorted(self.rhs.items())) or '0'
        return f"x{self.lhs + 1}² = {terms}"


@dataclass
class CatalogEntry:
    """目录条目"""
    name: str
    config: SphereConfig
    centers: CenterSet
    equations: List[QuadricRelation] = field(default_factory=list)
    k: Optional[int] = None
    layering: Optional[Layering] = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            'name': self.name,
            'k': self.k,
            'config': config_to_dict(self.config),
            'equations': [relation.to_dict() for relation in self.equations],
        }


def light_cone_relation() -> QuadricRelation:
    """x₄² = x₁² + x₂² + x₃²"""
    return QuadricRelation(lhs=3, rhs={0: 1, 1: 1, 2: 1})


def ck_relations(k: int) -> List[QuadricRelation]:
    """C_k 的方程组：光锥方程与 x_{l+4}² = 2^l·x₄²（l = 1..k）"""
    return [light_cone_relation()] + [QuadricRelation(lhs=l + 3, rhs={3: 2 ** l}) for l in range(1, k + 1)]


def equation_residuals(entry: CatalogEntry, x: np.ndarray) -> np.ndarray:
    """各方程的残差，按 |x|² 归一化"""
    x = np.asarray(x, dtype=float)
    scale = np.maximum(np.sum(x * x, axis=-1), np.finfo(float).tiny)
    return np.stack([relation.residual(x) / scale for relation in entry.equations], axis=-1)


def equation_membership(entry: CatalogEntry, x: np.ndarray, tol: float = 1e-9) -> bool:
    """x 是否满足条目的全部方程"""
    x = np.asarray(x, dtype=float)
    if not entry.equations:
        raise DomainError(f"条目 {entry.name} 没有方程表示")
    if not np.any(x):
        return True
    return bool(np.all(np.abs(equation_residuals(entry, x)) <= tol))


def sample_equation_solutions(entry: CatalogEntry, n: int, rng: np.random.Generator) -> np.ndarray:
    """方程组（三角形式）的随机解：自由坐标取标准正态，被确定的坐标取随机符号的平方根"""
    if not entry.equations:
        raise DomainError(f"条目 {entry.name} 没有方程表示")
    d = entry.config.d
    points = rng.standard_normal((n, d))
    for relation in entry.equations:
        value = np.zeros(n)
        for index, coefficient in relation.rhs.items():
            value += coefficient * points[:, index] ** 2
        signs = np.where(rng.random(n) < 0.5, -1.0, 1.0)
        points[:, relation.lhs] = signs * np.sqrt(value)
    return points


def cross_check(entry: CatalogEntry, samples: int = 10000, seed: Optional[int] = None,
                tol: float = 1e-7) -> ValidationReport:
    """方程表示与构造表示互相校验：构型采样点满足方程，方程的解落在锥上"""
    report = ValidationReport()
    if not entry.equations:
        return report
    if seed is None:
        seed = int(forge_config.get('DEFAULT_SEED', 42))
    rng = np.random.default_rng(seed)

    per_sphere = max(1, samples // entry.config.m)
    points = sample_config_points(entry.config, per_sphere, rng)
    residuals = np.abs(equation_residuals(entry, points))
    report.observe(float(residuals.max()))
    for row in np.nonzero(residuals.max(axis=1) > tol)[0][:10]:
        report.add('config-equation', (int(row),), float(residuals[row].max()))

    solutions = sample_equation_solutions(entry, samples, rng)
    norms = np.linalg.norm(solutions, axis=1)
    solutions = solutions[norms > 0] / norms[norms > 0][:, None]
    distances = batch_distance_to_support(entry.config, solutions)
    report.observe(float(distances.max()))
    for row in np.nonzero(distances > tol)[0][:10]:
        report.add('equation-support', (int(row),), float(distances[row]))

    if not report.valid:
        Logger.warning(f"Catalog: {entry.name} 两种表示不一致 - {', '.join(report.rules())}")
    return report


def kp_cone() -> CatalogEntry:
    """光锥 C_0：4维空间中两个半径 1/√2 的对径球面"""
    centers = dyadic_centers(0)
    return CatalogEntry(name='kp', config=build_config(centers), centers=centers,
                        equations=[light_cone_relation()], k=0, layering=dyadic_layering(0))


def ck_cone(k: int) -> CatalogEntry:
    """C_k：(k+4)维空间中 2^{k+1} 个半径 2^{-(k+1)/2} 的球面"""
    if k < 0:
        raise DomainError(f"k必须非负，实际{k}")
    centers = dyadic_centers(k)
    entry = CatalogEntry(name='ck', config=build_config(centers), centers=centers,
                         equations=ck_relations(k), k=k, layering=dyadic_layering(k))
    report = cross_check(entry)
    if not report.valid:
        raise ForgeGeometryError(f"C_{k} 的方程与构型不一致", detail=report)
    Logger.debug(f"Catalog: 构造 C_{k}，{entry.config.m} 个球面")
    return entry


def tetra8() -> CatalogEntry:
    """8点例子：四面体及其对径像，rank Δ = 4，嵌入7维空间；没有方程表示"""
    layering = Layering(np.array(TETRA8_DISTANCES))
    centers = embed(layering)
    return CatalogEntry(name='tetra8', config=build_config(centers), centers=centers, layering=layering)


def rectangle4() -> CatalogEntry:
    """5维空间中4个半径1/2的球面，中心 (0,0,0,±1/2,±√2/2)"""
    half, side = 0.5, np.sqrt(2.0) / 2.0
    points = np.array([[half, side], [-half, side], [half, -side], [-half, -side]])
    centers = CenterSet(points=points, r=0.5, t=np.sqrt(3.0) / 2.0)
    return CatalogEntry(name='rect4', config=build_config(centers), centers=centers,
                        equations=ck_relations(1), k=1)


def kp5() -> CatalogEntry:
    """嵌入5维空间的光锥：x₄² = x₁² + x₂² + x₃²，x₅² = 0"""
    a = 1.0 / np.sqrt(2.0)
    centers = CenterSet(points=np.array([[a, 0.0], [-a, 0.0]]), r=a, t=a)
    return CatalogEntry(name='kp5', config=build_config(centers), centers=centers,
                        equations=[light_cone_relation(), QuadricRelation(lhs=4, rhs={})], k=0)


def codim2_catalog() -> List[CatalogEntry]:
    """5维空间中余维2的非平坦例子：光锥与矩形构型"""
    return [kp5(), rectangle4()]


def get_entry(name: str, k: Optional[int] = None) -> CatalogEntry:
    """按命令行名称查找条目"""
    if name == 'kp':
        return kp_cone()
    if name == 'ck':
        if k is None:
            raise DomainError("ck 需要参数 k")
        return ck_cone(k)
    if name == 'tetra8':
        return tetra8()
    if name == 'rect4':
        return rectangle4()
    if name == 'kp5':
        return kp5()
    raise DomainError(f"未知的目录条目: {name}（可选 {', '.join(CATALOG_NAMES)}）")
