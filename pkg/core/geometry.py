#!/usr/bin/env python3
"""
几何模块
中心集上的2-球面并集 Ω、其上的锥 Σ，以及逐点几何量：
最近/最远点、球冠半径、球冠面积、层结构 C^i(z)
"""

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np
from kivy.logger import Logger

from .config import forge_config
from .embedding import CenterSet
from .errors import (DegenerateProjectionError, DimensionError, DomainError,
                     ForgeGeometryError, PreconditionError)

# R ≤ D 时 B(z,R) 与球面不相交
EMPTY_CAP = None


@dataclass(frozen=True, eq=False)
class SphereConfig:
    """球面配置：m个半径为r的2-球面，中心 c_i = (0,0,0,ξ_i)，V 为前三个坐标张成的平面"""
    centers: np.ndarray
    radius: float

    def __post_init__(self):
        centers = np.array(self.centers, dtype=float)
        if centers.ndim != 2 or centers.shape[1] < 3:
            raise DimensionError(f"球心必须是 m×d (d ≥ 3) 数组，实际形状 {centers.shape}")
        centers.setflags(write=False)
        object.__setattr__(self, 'centers', centers)
        object.__setattr__(self, 'radius', float(self.radius))

    @property
    def m(self) -> int:
        return int(self.centers.shape[0])

    @property
    def d(self) -> int:
        return int(self.centers.shape[1])

    @property
    def xi(self) -> np.ndarray:
        """球心在V的正交补中的分量"""
        return self.centers[:, 3:]

    @property
    def radii(self) -> np.ndarray:
        return np.full(self.m, self.radius)

    def sphere_point(self, index: int, direction: np.ndarray) -> np.ndarray:
        """球面 index 上方向为 direction（V中单位向量）的点"""
        point = self.centers[index].copy()
        point[:3] = self.radius * np.asarray(direction, dtype=float)
        return point

    def to_dict(self) -> Dict[str, Any]:
        return config_to_dict(self)


@dataclass(frozen=True)
class ConeSupport:
    """锥 Σ = {x : x/|x| ∈ Ω} ∪ {0}"""
    config: SphereConfig

    @property
    def d(self) -> int:
        return self.config.d

    def contains(self, x: np.ndarray, tol: Optional[float] = None) -> bool:
        return cone_membership(self, x, tol)


@dataclass(frozen=True)
class SphereProjection:
    """点 z 相对于单个球面的最近点、最远点与距离"""
    nearest: np.ndarray
    farthest: np.ndarray
    D: float
    D_bar: float
    delta: float
    inside: bool


@dataclass
class LayerStructure:
    """层结构：layers[i] = C^i(z)，radii[i] = R_i(z)，radii[0] = 0"""
    base_point: np.ndarray
    sphere_index: int
    radii: List[float]
    layers: List[List[int]]
    D: np.ndarray
    D_bar: np.ndarray
    delta: np.ndarray
    c: np.ndarray
    sphere_radii: np.ndarray
    cs_residuals: List[float] = field(default_factory=list)
    csds_residuals: List[float] = field(default_factory=list)
    unreached: List[int] = field(default_factory=list)

    @property
    def depth(self) -> int:
        """m(z)：第一个空层的序号"""
        return len(self.layers) - 1

    def departed(self, i: int) -> List[int]:
        """前 i 层中已完全落入球内的球面 ∪_{j≤i} (C^{j-1} \\ C^j)"""
        gone = set()
        for j in range(1, min(i, self.depth) + 1):
            gone |= set(self.layers[j - 1]) - set(self.layers[j])
        return sorted(gone)

    def max_residual(self) -> float:
        residuals = [abs(v) for v in self.cs_residuals + self.csds_residuals]
        return max(residuals) if residuals else 0.0

    def identities_hold(self, tol: float = 1e-9) -> bool:
        return self.max_residual() <= tol and not self.unreached

    def to_dict(self) -> Dict[str, Any]:
        return {
            'sphere_index': self.sphere_index + 1,
            'depth': self.depth,
            'radii': [float(v) for v in self.radii[1:]],
            'layers': [[s + 1 for s in layer] for layer in self.layers],
            'cs_residuals': [float(v) for v in self.cs_residuals],
            'csds_residuals': [float(v) for v in self.csds_residuals],
            'unreached': [s + 1 for s in self.unreached],
        }


def config_to_dict(config: SphereConfig) -> Dict[str, Any]:
    """球面配置转换为JSON对象 {"d", "r", "centers"}"""
    return {'d': config.d, 'r': config.radius, 'centers': config.centers.tolist()}


def config_from_dict(data: Dict[str, Any]) -> SphereConfig:
    """从JSON对象创建球面配置"""
    try:
        config = SphereConfig(centers=np.asarray(data['centers'], dtype=float), radius=data['r'])
    except (KeyError, TypeError, ValueError) as e:
        raise DomainError(f"球面配置JSON无效 - {e}")
    if 'd' in data and int(data['d']) != config.d:
        raise DimensionError(f"字段d={data['d']}与球心维数{config.d}不一致")
    if np.any(config.centers[:, :3] != 0.0):
        raise DomainError("球心的前三个坐标必须为零（V为前三个坐标平面）")
    return config


def sample_directions(rng: np.random.Generator, n: int) -> np.ndarray:
    """V中均匀分布的单位向量（标准正态归一化）"""
    vectors = rng.standard_normal((n, 3))
    norms = np.linalg.norm(vectors, axis=1)
    # 零向量的概率为零，仍然重采样以保证结果有限
    while np.any(norms == 0.0):
        bad = norms == 0.0
        vectors[bad] = rng.standard_normal((int(bad.sum()), 3))
        norms = np.linalg.norm(vectors, axis=1)
    return vectors / norms[:, None]


def sample_config_points(config: SphereConfig, n_per_sphere: int, rng: np.random.Generator) -> np.ndarray:
    """每个球面上均匀采样 n_per_sphere 个点，按球面顺序排列"""
    blocks = []
    for i in range(config.m):
        directions = sample_directions(rng, n_per_sphere)
        block = np.repeat(config.centers[i][None, :], n_per_sphere, axis=0)
        block[:, :3] = config.radius * directions
        blocks.append(block)
    if not blocks:
        return np.zeros((0, config.d))
    return np.vstack(blocks)


def random_support_point(config: SphereConfig, rng: np.random.Generator) -> np.ndarray:
    """随机选一个球面，再在其上均匀取点"""
    index = int(rng.integers(config.m))
    return config.sphere_point(index, sample_directions(rng, 1)[0])


def build_config(centers: CenterSet, strict: bool = True) -> SphereConfig:
    """由中心集构造球面配置并校验不变量

    strict=False 跳过互不相交检查，只用于反例。
    """
    if centers.m < 1:
        raise DomainError("中心集为空，至少需要一个中心")
    tol = float(forge_config.get('CENTER_TOLERANCE', 1e-8))
    r, t = centers.r, centers.t
    if abs(r * r + t * t - 1.0) > tol:
        raise DomainError(f"r² + t² = {r * r + t * t:.12g} ≠ 1")
    norms = np.linalg.norm(centers.points, axis=1)
    off = np.nonzero(np.abs(norms - t) > tol)[0]
    if off.size:
        raise DomainError(f"中心不在半径为t的球面上: {[int(i) + 1 for i in off]}")

    padded = np.zeros((centers.m, centers.q + 3))
    padded[:, 3:] = centers.points
    config = SphereConfig(centers=padded, radius=r)

    rng = np.random.default_rng(int(forge_config.get('DEFAULT_SEED', 42)))
    samples = sample_config_points(config, 100, rng)
    norm_deviation = float(np.max(np.abs(np.linalg.norm(samples, axis=1) - 1.0)))
    if norm_deviation > tol:
        raise DomainError(f"球面点不在单位球面上，偏差 {norm_deviation:.3e}")

    if strict and config.m > 1:
        distances = centers.pairwise_distances()
        np.fill_diagonal(distances, np.inf)
        closest = float(distances.min())
        if closest < 2.0 * r - tol:
            raise DomainError(f"球面相交：最小中心距 {closest:.12g} < 2r = {2.0 * r:.12g}")

    Logger.debug(f"Geometry: 构造 {config.m} 个球面，环境维数 {config.d}")
    return config


def sphere_distances(config: SphereConfig, z: np.ndarray) -> Dict[str, np.ndarray]:
    """所有球面的 D、D̄、δ 以及 |P_V(z)|（向量化）"""
    z = np.asarray(z, dtype=float)
    if z.shape != (config.d,):
        raise DimensionError(f"点的维数应为 {config.d}，实际形状 {z.shape}")
    rho = config.radius
    pnorm = float(np.linalg.norm(z[:3]))
    delta = np.linalg.norm(z[None, 3:] - config.xi, axis=1)
    return {
        'pnorm': pnorm,
        'delta': delta,
        'D': np.sqrt(delta ** 2 + (pnorm - rho) ** 2),
        'D_bar': np.sqrt(delta ** 2 + (pnorm + rho) ** 2),
    }


def nearest_farthest(config: SphereConfig, index: int, z: np.ndarray) -> SphereProjection:
    """球面 index 上距 z 最近的点 P_S(z) = r·P_V(z)/|P_V(z)| + ξ 与最远点"""
    if not 0 <= index < config.m:
        raise DomainError(f"球面序号越界: {index + 1}")
    z = np.asarray(z, dtype=float)
    if z.shape != (config.d,):
        raise DimensionError(f"点的维数应为 {config.d}，实际形状 {z.shape}")

    projection = z[:3]
    pnorm = float(np.linalg.norm(projection))
    if pnorm <= np.finfo(float).tiny:
        raise DegenerateProjectionError("P_V(z) = 0，最近点与最远点不唯一")

    direction = projection / pnorm
    rho = config.radius
    delta = float(np.linalg.norm(z[3:] - config.xi[index]))
    return SphereProjection(
        nearest=config.sphere_point(index, direction),
        farthest=config.sphere_point(index, -direction),
        D=float(np.sqrt(delta ** 2 + (pnorm - rho) ** 2)),
        D_bar=float(np.sqrt(delta ** 2 + (pnorm + rho) ** 2)),
        delta=delta,
        inside=pnorm < rho,
    )


def cap_radius(rho: float, D: float, delta: float, R: float, inside: bool) -> Optional[float]:
    """B(z,R) ∩ S 是以最近点为中心、弦半径为 x 的球冠

    x² = ρ(R² - D²) / (ρ ∓ √(D² - δ²))，z 在球内侧取减号。
    R ≤ D 时返回 EMPTY_CAP。
    """
    if R <= D:
        return EMPTY_CAP
    if delta < 0 or D < delta - 1e-9 * max(1.0, D):
        raise PreconditionError(f"需要 D ≥ δ ≥ 0，实际 D={D}, δ={delta}")
    offset = np.sqrt(max(D * D - delta * delta, 0.0))
    denominator = rho - offset if inside else rho + offset
    if denominator <= 0:
        raise ForgeGeometryError(f"球冠公式分母非正: {denominator}")
    return float(np.sqrt(rho * (R * R - D * D) / denominator))


def cap_area(rho: float, x: Optional[float]) -> float:
    """阿基米德定理：弦半径为 x 的球冠面积 πx²，x ≥ 2ρ 时为整个球面 4πρ²"""
    if x is EMPTY_CAP:
        return 0.0
    if x < 0:
        raise DomainError(f"弦半径必须非负，实际{x}")
    return float(np.pi * min(x, 2.0 * rho) ** 2)


def locate_sphere(config: SphereConfig, z: np.ndarray, tol: Optional[float] = None) -> int:
    """返回 z 所在球面的序号；不在支撑上时抛出PreconditionError"""
    if tol is None:
        tol = float(forge_config.get('ON_SUPPORT_TOLERANCE', 1e-9))
    distances = sphere_distances(config, z)['D']
    index = int(np.argmin(distances))
    if distances[index] > tol:
        raise PreconditionError(f"点不在球面并集上，最近距离 {distances[index]:.3e}")
    return index


def first_layer_distance(config: SphereConfig, z: np.ndarray) -> float:
    """z 到其余球面的最小距离；有效配置上等于 2r"""
    own = locate_sphere(config, z)
    distances = sphere_distances(config, z)['D']
    others = np.delete(distances, own)
    return float(others.min()) if others.size else float('inf')


def layer_structure(config: SphereConfig, z: np.ndarray, tol: float = 1e-9) -> LayerStructure:
    """按归纳定义计算层结构并给出 (cS)、(cSDS) 两个恒等式的残差

    R_1 = 2r_z，C^0 = {S_z}；
    C^i = {S : D_S = R_i} ∪ {S ∈ C^{i-1} : D̄_S > R_i}；
    R_{i+1} = min_{S ∈ C^i} D̄_S，直到 C^i 为空。
    """
    z = np.asarray(z, dtype=float)
    own = locate_sphere(config, z)
    values = sphere_distances(config, z)
    pnorm = values['pnorm']
    D, D_bar, delta = values['D'], values['D_bar'], values['delta']
    sphere_radii = config.radii

    # c_S = ρ/(ρ ∓ √(D²-δ²))，分母恰为 |P_V(z)|
    c = sphere_radii / pnorm

    radii = [0.0, 2.0 * sphere_radii[own]]
    layers = [[own]]
    limit = config.m + 2
    while True:
        R = radii[-1]
        previous = set(layers[-1])
        current = {s for s in range(config.m) if abs(D[s] - R) <= tol}
        current |= {s for s in previous if D_bar[s] > R + tol}
        layers.append(sorted(current))
        if not current:
            break
        radii.append(float(min(D_bar[s] for s in current)))
        if len(layers) > limit:
            raise ForgeGeometryError("层结构迭代没有终止")

    structure = LayerStructure(
        base_point=z, sphere_index=own, radii=radii, layers=layers,
        D=D, D_bar=D_bar, delta=delta, c=c, sphere_radii=sphere_radii,
    )

    for i in range(1, structure.depth):
        layer = layers[i]
        structure.cs_residuals.append(float(sum(c[s] for s in layer) - 1.0))
        lhs = 4.0 * sum(sphere_radii[s] ** 2 for s in structure.departed(i))
        rhs = float(sum(c[s] * D[s] ** 2 for s in layer))
        structure.csds_residuals.append(float(lhs - rhs))

    reached = set().union(*map(set, layers))
    structure.unreached = sorted(set(range(config.m)) - reached)
    if structure.unreached:
        Logger.debug(f"Geometry: {len(structure.unreached)} 个球面没有进入任何层")
    return structure


def layered_sigma(structure: LayerStructure, R: float) -> float:
    """按层公式计算 σ(B(z,R))：
    Σ_{已离开的球面} 4πr_S² + Σ_{S∈C^i(z)} πc_S(R² - D_S²)，其中 R_i < R ≤ R_{i+1}
    """
    if R <= 0:
        return 0.0
    i = 0
    while i + 1 < len(structure.radii) and R > structure.radii[i + 1]:
        i += 1
    gone = structure.departed(i)
    total = 4.0 * np.pi * float(sum(structure.sphere_radii[s] ** 2 for s in gone))
    for s in structure.layers[i]:
        total += np.pi * structure.c[s] * (R * R - structure.D[s] ** 2)
    return float(total)


def distance_to_support(config: SphereConfig, u: np.ndarray) -> float:
    """点到球面并集 Ω 的距离"""
    return float(sphere_distances(config, u)['D'].min())


def batch_distance_to_support(config: SphereConfig, points: np.ndarray) -> np.ndarray:
    """一批点（n×d）各自到 Ω 的距离"""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if points.shape[1] != config.d:
        raise DimensionError(f"点的维数应为 {config.d}，实际 {points.shape[1]}")
    result = np.empty(points.shape[0])
    block = max(1, 2 ** 20 // max(1, config.m * config.d))
    for start in range(0, points.shape[0], block):
        chunk = points[start:start + block]
        pnorm = np.linalg.norm(chunk[:, :3], axis=1)
        delta2 = np.sum((chunk[:, None, 3:] - config.xi[None, :, :]) ** 2, axis=-1)
        result[start:start + block] = np.sqrt(delta2 + (pnorm[:, None] - config.radius) ** 2).min(axis=1)
    return result


def cone_membership(cone: ConeSupport, x: np.ndarray, tol: Optional[float] = None) -> bool:
    """x ∈ Σ：x = 0 或 x/|x| 与某个球面的距离不超过 tol"""
    if tol is None:
        tol = float(forge_config.get('ON_SUPPORT_TOLERANCE', 1e-9))
    x = np.asarray(x, dtype=float)
    norm = float(np.linalg.norm(x))
    if norm == 0.0:
        return True
    return distance_to_support(cone.config, x / norm) <= tol
