#!/usr/bin/env python3
"""
测度模块
球面分量上的 σ(B(x,R)) 与锥上的 ν(B(x,r))：解析计算、蒙特卡洛估计、一致性验证
"""

from dataclasses import dataclass
from typing import Any, Callable, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from kivy.logger import Logger
from scipy import stats

from .config import forge_config
from .errors import DomainError, PreconditionError
from .geometry import (ConeSupport, SphereConfig, cap_area, cap_radius, cone_membership,
                       random_support_point, sample_directions, sphere_distances)
from .scheduler import WorkPool

FOUR_THIRDS_PI = 4.0 * np.pi / 3.0

# 随机流编号：0..m-1 留给各个球面
CONE_STREAM = 1 << 16
TRIAL_STREAM = 1 << 21


@dataclass
class MeasureReport:
    """测度报告：解析值、蒙特卡洛估计与理论目标"""
    kind: str
    point: List[float]
    radius: float
    analytic: float
    target: float
    abs_tol: float
    mc_estimate: Optional[float] = None
    mc_stderr: Optional[float] = None
    samples: int = 0
    seed: Optional[int] = None
    mc_sigmas: float = 3.0

    @property
    def analytic_ok(self) -> bool:
        return abs(self.analytic - self.target) <= self.abs_tol

    @property
    def mc_ok(self) -> bool:
        if self.mc_estimate is None:
            return True
        return abs(self.mc_estimate - self.target) <= self.mc_sigmas * self.mc_stderr + self.abs_tol

    @property
    def passed(self) -> bool:
        return self.analytic_ok and self.mc_ok

    @property
    def verdict(self) -> str:
        return 'pass' if self.passed else 'fail'

    def to_dict(self) -> Dict[str, Any]:
        return {
            'kind': self.kind,
            'point': [float(v) for v in self.point],
            'radius': float(self.radius),
            'analytic': float(self.analytic),
            'mc_estimate': None if self.mc_estimate is None else float(self.mc_estimate),
            'mc_stderr': None if self.mc_stderr is None else float(self.mc_stderr),
            'target': float(self.target),
            'abs_tol': float(self.abs_tol),
            'samples': int(self.samples),
            'seed': self.seed,
            'verdict': self.verdict,
        }


def phi(R: float) -> float:
    """锥形3-一致测度球面分量的分布函数：0 < R < 2 时为 πR²，R ≥ 2 时为 4π"""
    if R <= 0:
        return 0.0
    if R < 2.0:
        return float(np.pi * R * R)
    return float(4.0 * np.pi)


def sigma_total(config: SphereConfig) -> float:
    """球面并集的总面积 Σ 4πr_S²"""
    return float(4.0 * np.pi * np.sum(config.radii ** 2))


def adaptive_simpson(f: Callable[[float], float], a: float, b: float,
                     tol: Optional[float] = None, max_depth: Optional[int] = None,
                     breakpoints: Iterable[float] = (), min_depth: int = 2) -> Tuple[float, float]:
    """自适应Simpson积分，在给定断点处分段

    每段递归二分，误差估计 (S₂ - S₁)/15，达到容差后加上Richardson修正。
    返回 (积分值, 误差估计)。
    """
    if tol is None:
        tol = float(forge_config.get('QUADRATURE_TOL', 1e-8))
    if max_depth is None:
        max_depth = int(forge_config.get('QUADRATURE_MAX_DEPTH', 40))
    if a == b:
        return 0.0, 0.0
    if a > b:
        value, error = adaptive_simpson(f, b, a, tol, max_depth, breakpoints, min_depth)
        return -value, error

    def _simpson(fa: float, fm: float, fb: float, h: float) -> float:
        return h / 3.0 * (fa + 4.0 * fm + fb)

    def _adaptive(lo: float, hi: float, flo: float, fmid: float, fhi: float,
                  whole: float, depth: int, tol: float) -> Tuple[float, float]:
        mid = (lo + hi) / 2.0
        h = (hi - lo) / 2.0
        flm = f((lo + mid) / 2.0)
        frm = f((mid + hi) / 2.0)
        left = _simpson(flo, flm, fmid, h / 2.0)
        right = _simpson(fmid, frm, fhi, h / 2.0)
        combined = left + right
        error = (combined - whole) / 15.0

        if depth >= max_depth or (depth >= min_depth and abs(error) < tol):
            return combined + error, abs(error)

        left_value, left_error = _adaptive(lo, mid, flo, flm, fmid, left, depth + 1, tol / 2.0)
        right_value, right_error = _adaptive(mid, hi, fmid, frm, fhi, right, depth + 1, tol / 2.0)
        return left_value + right_value, left_error + right_error

    cuts = sorted({float(c) for c in breakpoints if a < c < b})
    edges = [a] + cuts + [b]
    total, total_error = 0.0, 0.0
    segment_tol = tol / (len(edges) - 1)
    for lo, hi in zip(edges[:-1], edges[1:]):
        if hi <= lo:
            continue
        flo, fhi = f(lo), f(hi)
        fmid = f((lo + hi) / 2.0)
        whole = _simpson(flo, fmid, fhi, (hi - lo) / 2.0)
        value, error = _adaptive(lo, hi, flo, fmid, fhi, whole, 0, segment_tol)
        total += value
        total_error += error
    return total, total_error


def _axis_quadrature_area(rho: float, pnorm: float, delta: float, R: float) -> float:
    """沿球面轴向积分的面积：∫_{-1}^{1} 2πρ²·1[δ² + |P|² + ρ² - 2ρ|P|h ≤ R²] dh

    球面上高度 h 的点到 z 的距离只依赖 h，阿基米德定理给出均匀的轴向密度。
    """
    base = delta * delta + pnorm * pnorm + rho * rho

    def integrand(h: float) -> float:
        return 2.0 * np.pi * rho * rho if base - 2.0 * rho * pnorm * h <= R * R else 0.0

    breakpoints = []
    if pnorm > 0:
        breakpoints.append((base - R * R) / (2.0 * rho * pnorm))
    value, _ = adaptive_simpson(integrand, -1.0, 1.0, breakpoints=breakpoints)
    return value


def sphere_ball_area(config: SphereConfig, index: int, x: np.ndarray, R: float,
                     distances: Optional[Dict[str, Any]] = None) -> float:
    """单个球面与 B(x,R) 的交的面积"""
    if distances is None:
        distances = sphere_distances(config, x)
    rho = config.radius
    pnorm = distances['pnorm']
    D = float(distances['D'][index])
    D_bar = float(distances['D_bar'][index])
    delta = float(distances['delta'][index])

    if R <= D:
        return 0.0
    if R >= D_bar:
        return float(4.0 * np.pi * rho * rho)
    if pnorm <= np.finfo(float).tiny:
        Logger.debug("Measure: 投影退化，改用轴向积分")
        return _axis_quadrature_area(rho, pnorm, delta, R)
    return cap_area(rho, cap_radius(rho, D, delta, R, inside=pnorm < rho))


def sigma_ball_analytic(config: SphereConfig, x: np.ndarray, R: float) -> float:
    """σ(B(x,R))：逐个球面按球冠公式求和，对任意 x 精确"""
    if R < 0:
        raise DomainError(f"半径必须非负，实际{R}")
    if R == 0:
        return 0.0
    x = np.asarray(x, dtype=float)
    distances = sphere_distances(config, x)
    return float(sum(sphere_ball_area(config, s, x, R, distances) for s in range(config.m)))


def _chunk_rng(seed: int, stream: int, chunk: int) -> np.random.Generator:
    """计数器型随机流：(seed, stream, chunk) 唯一确定一个Philox生成器"""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(stream, chunk))))


def _chunk_sizes(samples: int, chunk_size: Optional[int]) -> List[int]:
    if chunk_size is None:
        chunk_size = int(forge_config.get('MC_CHUNK_SIZE', 65536))
    full, rest = divmod(samples, chunk_size)
    return [chunk_size] * full + ([rest] if rest else [])


def _count_chunks(counter: Callable[[Tuple[int, int]], int], chunks: List[Tuple[int, int]],
                  pool: Optional[WorkPool]) -> int:
    """按块序号顺序累加命中数；串行与并行结果完全一致"""
    if pool is None:
        return sum(counter(chunk) for chunk in chunks)
    return sum(outcome.unwrap() for outcome in pool.map_ordered(counter, chunks))


def _binomial_stderr(scale: float, hits: int, n: int) -> float:
    """加半修正的二项标准误，命中率为0或1时也不为零

    只用于部分落在球内的区域；整体在球内或球外的区域由调用方直接记为零方差。
    """
    p = (hits + 0.5) / (n + 1.0)
    return float(scale * np.sqrt(p * (1.0 - p) / n))


def family_sigmas(mc_sigmas: float, comparisons: int) -> float:
    """Bonferroni带宽：comparisons 次比较合计的误报率等于单次 mc_sigmas 比较的误报率"""
    if comparisons < 1:
        raise DomainError(f"比较次数必须为正，实际{comparisons}")
    if comparisons == 1:
        return float(mc_sigmas)
    alpha = 2.0 * stats.norm.sf(mc_sigmas)
    return float(stats.norm.isf(alpha / (2.0 * comparisons)))


def sigma_ball_mc(config: SphereConfig, x: np.ndarray, R: float, samples: int, seed: int,
                  chunk_size: Optional[int] = None, pool: Optional[WorkPool] = None) -> Tuple[float, float]:
    """σ(B(x,R)) 的蒙特卡洛估计：每个球面均匀采样 samples // m 个点

    R ≤ D 或 R ≥ D̄ 的球面整体在球外或球内，不采样，贡献 0 或 4πρ² 且方差为零。
    """
    if samples < 1:
        raise DomainError(f"样本数必须为正，实际{samples}")
    x = np.asarray(x, dtype=float)
    if R <= 0:
        return 0.0, 0.0

    per_sphere = max(1, samples // config.m)
    rho = config.radius
    P = x[:3]
    pnorm = float(np.linalg.norm(P))
    area = 4.0 * np.pi * rho * rho
    estimate, variance = 0.0, 0.0
    for s in range(config.m):
        delta2 = float(np.sum((x[3:] - config.xi[s]) ** 2))
        if R * R <= delta2 + (pnorm - rho) ** 2:
            continue
        if R * R >= delta2 + (pnorm + rho) ** 2:
            estimate += area
            continue
        base = delta2 + float(P @ P) + rho * rho

        def count(chunk: Tuple[int, int], s=s, base=base) -> int:
            index, size = chunk
            directions = sample_directions(_chunk_rng(seed, s, index), size)
            squared = base - 2.0 * rho * (directions @ P)
            return int(np.count_nonzero(squared <= R * R))

        chunks = list(enumerate(_chunk_sizes(per_sphere, chunk_size)))
        hits = _count_chunks(count, chunks, pool)
        estimate += area * hits / per_sphere
        variance += _binomial_stderr(area, hits, per_sphere) ** 2
    return float(estimate), float(np.sqrt(variance))


def cap_area_mc(rho: float, x: float, samples: int, seed: int,
                chunk_size: Optional[int] = None) -> Tuple[float, float]:
    """单个球面上弦半径为 x 的球冠面积的蒙特卡洛估计（阿基米德定理的独立检验）"""
    if samples < 1:
        raise DomainError(f"样本数必须为正，实际{samples}")
    area = 4.0 * np.pi * rho * rho
    if x <= 0:
        return 0.0, 0.0
    if x >= 2.0 * rho:
        return float(area), 0.0
    pole = np.array([0.0, 0.0, rho])

    def count(chunk: Tuple[int, int]) -> int:
        index, size = chunk
        points = rho * sample_directions(_chunk_rng(seed, 0, index), size)
        return int(np.count_nonzero(np.sum((points - pole) ** 2, axis=1) <= x * x))

    hits = _count_chunks(count, list(enumerate(_chunk_sizes(samples, chunk_size))), None)
    return float(area * hits / samples), _binomial_stderr(area, hits, samples)


def _require_on_cone(cone: ConeSupport, x: np.ndarray):
    tol = float(forge_config.get('ON_SUPPORT_TOLERANCE', 1e-9))
    if not cone_membership(cone, x, tol):
        raise PreconditionError("点不在锥 Σ 上")


def _shell_breakpoints(config: SphereConfig, e: np.ndarray, lam: float, r: float) -> List[float]:
    """切片半径 R̂(ρ) 穿过某个球面的 D 或 D̄ 的壳半径

    R̂(ρ) = D ⟺ ρ² + (λD² - 2λ)ρ + (λ² - r²) = 0
    """
    distances = sphere_distances(config, e)
    points = []
    if r > lam:
        points.append(r - lam)
    for value in np.concatenate([distances['D'], distances['D_bar']]):
        b = lam * value * value - 2.0 * lam
        c = lam * lam - r * r
        discriminant = b * b - 4.0 * c
        if discriminant < 0:
            continue
        root = np.sqrt(discriminant)
        points.extend([(-b - root) / 2.0, (-b + root) / 2.0])
    return [float(v) for v in points if v > 0]


def cone_ball_analytic(cone: ConeSupport, x: np.ndarray, r: float) -> float:
    """ν(B(x,r)) = ∫ H²(B(x,r) ∩ ∂B_ρ ∩ Σ) dρ

    x = λe（|e| = 1）时切片面积为 ρ²·σ(B(e, R̂))，R̂² = (r² - (ρ-λ)²)/(ρλ)；
    被积函数在断点之间是三次多项式。
    """
    if r <= 0:
        raise DomainError(f"半径必须为正，实际{r}")
    x = np.asarray(x, dtype=float)
    _require_on_cone(cone, x)
    config = cone.config
    lam = float(np.linalg.norm(x))
    if lam == 0.0:
        return float(r ** 3 / 3.0 * sigma_total(config))

    e = x / lam

    def slice_area(rho: float) -> float:
        if rho <= 0:
            return 0.0
        radius2 = (r * r - (rho - lam) ** 2) / (rho * lam)
        if radius2 <= 0:
            return 0.0
        return rho * rho * sigma_ball_analytic(config, e, float(np.sqrt(radius2)))

    lo, hi = max(0.0, lam - r), lam + r
    scale = max(1.0, FOUR_THIRDS_PI * r ** 3)
    tol = min(float(forge_config.get('QUADRATURE_TOL', 1e-8)) * scale,
              0.1 * float(forge_config.get('NU_ABS_TOL', 1e-6)))
    value, _ = adaptive_simpson(slice_area, lo, hi, tol=tol,
                                breakpoints=_shell_breakpoints(config, e, lam, r))
    return float(value)


def cone_ball_mc(cone: ConeSupport, x: np.ndarray, r: float, samples: int, seed: int,
                 chunk_size: Optional[int] = None, pool: Optional[WorkPool] = None) -> Tuple[float, float]:
    """ν(B(x,r)) 的蒙特卡洛估计

    ρ 在 [max(0,|x|-r), |x|+r] 上按 ρ² 密度采样，x' 按面积从 Ω 采样，
    统计 ρx' ∈ B(x,r) 的比例，再乘以采样环形区域的总测度。
    """
    if samples < 1:
        raise DomainError(f"样本数必须为正，实际{samples}")
    config = cone.config
    x = np.asarray(x, dtype=float)
    lam = float(np.linalg.norm(x))
    lo, hi = max(0.0, lam - r), lam + r
    areas = 4.0 * np.pi * config.radii ** 2
    weights = areas / areas.sum()
    if lam == 0.0:
        # 整个采样区域都在球内
        return float(areas.sum()) * r ** 3 / 3.0, 0.0

    def count(chunk: Tuple[int, int]) -> int:
        index, size = chunk
        rng = _chunk_rng(seed, CONE_STREAM, index)
        shells = np.cbrt(lo ** 3 + rng.random(size) * (hi ** 3 - lo ** 3))
        spheres = rng.choice(config.m, size=size, p=weights)
        directions = sample_directions(rng, size)
        points = config.centers[spheres].copy()
        points[:, :3] = config.radius * directions
        points *= shells[:, None]
        return int(np.count_nonzero(np.sum((points - x) ** 2, axis=1) <= r * r))

    hits = _count_chunks(count, list(enumerate(_chunk_sizes(samples, chunk_size))), pool)
    region = float(areas.sum()) * (hi ** 3 - lo ** 3) / 3.0
    return float(region * hits / samples), _binomial_stderr(region, hits, samples)


def trial_seed(seed: int, trial: int) -> int:
    """第 trial 次试验的子种子"""
    state = np.random.SeedSequence(seed, spawn_key=(1 << 20, trial)).generate_state(1, dtype=np.uint64)
    return int(state[0])


def scale_identity_reports(cone: ConeSupport, e: np.ndarray, r: float,
                           scales: Sequence[float] = (0.1, 1.0, 10.0),
                           abs_tol: Optional[float] = None) -> List[MeasureReport]:
    """尺度恒等式 ν(B(sx, sr)) = s³·ν(B(x, r))，只做解析检验"""
    if abs_tol is None:
        abs_tol = float(forge_config.get('NU_ABS_TOL', 1e-6))
    reports = []
    for s in scales:
        point = s * np.asarray(e, dtype=float)
        target = FOUR_THIRDS_PI * (s * r) ** 3
        reports.append(MeasureReport(
            kind='nu-scale',
            point=point.tolist(),
            radius=s * r,
            analytic=cone_ball_analytic(cone, point, s * r),
            target=target,
            abs_tol=abs_tol,
        ))
    return reports


def verify_uniformity(cone: ConeSupport, trials: Optional[int] = None, samples: Optional[int] = None,
                      seed: Optional[int] = None, abs_tol: Optional[float] = None,
                      mc_sigmas: Optional[float] = None, check_scales: bool = True,
                      pool: Optional[WorkPool] = None, family_wise: bool = False) -> List[MeasureReport]:
    """随机取支撑点与半径，同时检验 σ（单位球面层面，R ∈ (0,2]）与 ν

    每次试验输出两条报告；check_scales 时再为第一次试验追加尺度恒等式报告。
    family_wise 时蒙特卡洛带宽按 2·trials 次比较做Bonferroni放宽，
    整组报告的误报率与单次 mc_sigmas 比较相同。
    """
    trials = int(forge_config.get('DEFAULT_TRIALS', 20)) if trials is None else int(trials)
    samples = int(forge_config.get('DEFAULT_SAMPLES', 1000000)) if samples is None else int(samples)
    seed = int(forge_config.get('DEFAULT_SEED', 42)) if seed is None else int(seed)
    if mc_sigmas is None:
        mc_sigmas = float(forge_config.get('MC_SIGMAS', 3.0))
    sigma_tol = float(forge_config.get('SIGMA_ABS_TOL', 1e-9)) if abs_tol is None else float(abs_tol)
    nu_tol = float(forge_config.get('NU_ABS_TOL', 1e-6)) if abs_tol is None else float(abs_tol)
    if trials < 1:
        raise DomainError(f"试验次数必须为正，实际{trials}")
    if family_wise:
        mc_sigmas = family_sigmas(mc_sigmas, 2 * trials)

    config = cone.config
    reports: List[MeasureReport] = []
    for trial in range(trials):
        rng = _chunk_rng(seed, TRIAL_STREAM, trial)
        e = random_support_point(config, rng)
        lam = float(rng.uniform(0.1, 10.0))
        r = 4.0 * lam * (1.0 - rng.random())
        R = 2.0 * (1.0 - rng.random())
        child = trial_seed(seed, trial)

        sigma_mc, sigma_err = sigma_ball_mc(config, e, R, samples, child, pool=pool)
        reports.append(MeasureReport(
            kind='sigma', point=e.tolist(), radius=R,
            analytic=sigma_ball_analytic(config, e, R), target=phi(R), abs_tol=sigma_tol,
            mc_estimate=sigma_mc, mc_stderr=sigma_err, samples=samples, seed=child, mc_sigmas=mc_sigmas,
        ))

        x = lam * e
        target = FOUR_THIRDS_PI * r ** 3
        nu_mc, nu_err = cone_ball_mc(cone, x, r, samples, child, pool=pool)
        reports.append(MeasureReport(
            kind='nu', point=x.tolist(), radius=r,
            analytic=cone_ball_analytic(cone, x, r), target=target, abs_tol=nu_tol,
            mc_estimate=nu_mc, mc_stderr=nu_err, samples=samples, seed=child, mc_sigmas=mc_sigmas,
        ))

        if check_scales and trial == 0:
            reports.extend(scale_identity_reports(cone, e, r / lam, abs_tol=nu_tol))

    failed = sum(1 for report in reports if not report.passed)
    if failed:
        Logger.warning(f"Measure: {failed}/{len(reports)} 条报告未通过")
    else:
        Logger.info(f"Measure: 全部 {len(reports)} 条报告通过")
    return reports
