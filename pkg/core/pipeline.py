#!/usr/bin/env python3
"""
流水线管理模块
整合全部核心功能：枚举 → 谱筛选 → 嵌入 → 构造锥 → 一致性验证，
每个分层输出一行汇总，单个分层出错不影响其余分层
"""

import asyncio
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional

import numpy as np
from kivy.logger import Logger

from .config import forge_config
from .embedding import embed, verify_center_set
from .errors import ForgeError, ForgeNumericError, VerificationFailure
from .geometry import ConeSupport, build_config
from .layering import Layering, check_antipodal_structure, enumerate_layerings
from .measure import MeasureReport, verify_uniformity
from .scheduler import WorkPool
from .spectral import check_constructibility, spectral_report

# 各分层子种子的随机流编号
PIPELINE_STREAM = 1 << 22


def layering_seed(seed: int, index: int) -> int:
    """第 index 个分层的子种子"""
    state = np.random.SeedSequence(seed, spawn_key=(PIPELINE_STREAM, index)).generate_state(1, dtype=np.uint64)
    return int(state[0])


@dataclass
class LayeringResult:
    """单个分层的汇总行；verdict 取 pass / fail / dropped / error"""
    index: int
    layering: Layering
    kept: bool = False
    gap: Optional[float] = None
    threshold: Optional[float] = None
    delta_rank: Optional[int] = None
    antipodal: Optional[bool] = None
    verdict: str = 'dropped'
    reports_total: int = 0
    reports_failed: int = 0
    seed: Optional[int] = None
    error: Optional[str] = None
    exit_code: int = 0
    reports: List[MeasureReport] = field(default_factory=list, repr=False)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'index': self.index + 1,
            'm': self.layering.m,
            'kept': self.kept,
            'gap': self.gap,
            'threshold': self.threshold,
            'delta_rank': self.delta_rank,
            'antipodal': self.antipodal,
            'verdict': self.verdict,
            'reports_total': self.reports_total,
            'reports_failed': self.reports_failed,
            'seed': self.seed,
            'error': self.error,
            'd': self.layering.dist.tolist(),
        }


@dataclass
class PipelineSummary:
    """流水线汇总"""
    m: int
    seed: int
    samples: int
    trials: int
    rows: List[LayeringResult] = field(default_factory=list)

    @property
    def total(self) -> int:
        return len(self.rows)

    @property
    def kept(self) -> int:
        return sum(1 for row in self.rows if row.kept)

    def count(self, verdict: str) -> int:
        return sum(1 for row in self.rows if row.verdict == verdict)

    @property
    def exit_code(self) -> int:
        """出错优先于验证失败：有错误取最大退出码，否则有失败为1"""
        errors = [row.exit_code for row in self.rows if row.verdict == 'error']
        if errors:
            return max(errors)
        return VerificationFailure.exit_code if self.count('fail') else 0

    def to_dict(self) -> Dict[str, Any]:
        return {
            'm': self.m,
            'seed': self.seed,
            'samples': self.samples,
            'trials': self.trials,
            'total': self.total,
            'kept': self.kept,
            'dropped': self.count('dropped'),
            'passed': self.count('pass'),
            'failed': self.count('fail'),
            'errors': self.count('error'),
        }


class PipelineManager:
    """流水线管理器"""

    def __init__(self, max_workers: Optional[int] = None):
        """初始化流水线管理器"""
        self.max_workers = max_workers
        self.is_running = False
        self.current_pool: Optional[WorkPool] = None
        self.last_summary: Optional[PipelineSummary] = None
        self.stats = {
            'total_runs': 0,
            'total_layerings': 0,
            'total_errors': 0,
            'last_error': None
        }

    def get_status(self) -> Dict[str, Any]:
        """获取管理器状态"""
        return {
            'is_running': self.is_running,
            'pool': self.current_pool.get_status() if self.current_pool else None,
            'last_summary': self.last_summary.to_dict() if self.last_summary else None,
            'total_stats': dict(self.stats),
        }

    def process_layering(self, index: int, layering: Layering, seed: int, samples: int,
                         trials: int) -> LayeringResult:
        """处理单个分层；领域异常记录在结果行里"""
        result = LayeringResult(index=index, layering=layering, seed=layering_seed(seed, index))
        try:
            report = spectral_report(layering)
            result.gap = report.gap
            result.threshold = report.threshold
            result.delta_rank = report.delta_rank
            result.antipodal = check_antipodal_structure(layering).valid
            check_constructibility(report)
            if not report.embeddable:
                return result

            result.kept = True
            centers = embed(layering, report)
            center_report = verify_center_set(centers, layering)
            if not center_report.valid:
                raise ForgeNumericError(f"中心集不变量不成立: {', '.join(center_report.rules())}",
                                        detail=center_report)

            cone = ConeSupport(build_config(centers))
            result.reports = verify_uniformity(cone, trials=trials, samples=samples, seed=result.seed,
                                               family_wise=True)
            result.reports_total = len(result.reports)
            result.reports_failed = sum(1 for item in result.reports if not item.passed)
            result.verdict = 'fail' if result.reports_failed else 'pass'

        except ForgeError as e:
            error = e.with_index(index + 1)
            result.verdict = 'error'
            result.error = str(error)
            result.exit_code = error.exit_code
            Logger.error(f"PipelineManager: 分层处理失败 - {error}")
        except Exception as e:
            result.verdict = 'error'
            result.error = f"[#{index + 1}] {e}"
            result.exit_code = ForgeNumericError.exit_code
            Logger.error(f"PipelineManager: 分层处理出现未预期的错误 - {e}")
        return result

    async def run_pipeline(self, m: int, seed: Optional[int] = None, samples: Optional[int] = None,
                           trials: Optional[int] = None, limit: Optional[int] = None,
                           on_row: Optional[Callable[[LayeringResult], None]] = None) -> PipelineSummary:
        """执行完整流水线

        枚举本身的输入错误直接抛出；之后按窗口把分层提交到工作池，
        结果按枚举顺序收集并逐行回调 on_row。
        """
        pipeline_config = forge_config.get_pipeline_config()
        seed = int(pipeline_config['DEFAULT_SEED'] if seed is None else seed)
        samples = int(pipeline_config['PIPELINE_SAMPLES'] if samples is None else samples)
        trials = int(pipeline_config['PIPELINE_TRIALS'] if trials is None else trials)

        layerings = enumerate_layerings(m, limit)
        summary = PipelineSummary(m=m, seed=seed, samples=samples, trials=trials)
        loop = asyncio.get_running_loop()

        self.is_running = True
        Logger.info(f"PipelineManager: 开始执行流水线 - m={m} seed={seed} samples={samples} trials={trials}")
        try:
            with WorkPool(self.max_workers) as pool:
                self.current_pool = pool
                executor = pool.get_executor()
                window = 4 * pool.max_workers
                batch: List[tuple] = []

                async def flush():
                    tasks = [loop.run_in_executor(executor, self.process_layering, index, layering,
                                                  seed, samples, trials)
                             for index, layering in batch]
                    for row in await asyncio.gather(*tasks):
                        summary.rows.append(row)
                        if on_row is not None:
                            on_row(row)
                    batch.clear()

                for index, layering in enumerate(layerings):
                    if pool.stop_event.is_set():
                        Logger.warning(f"PipelineManager: 流水线在第 {index} 个分层处停止")
                        break
                    batch.append((index, layering))
                    if len(batch) >= window:
                        await flush()
                if batch:
                    await flush()

            self.stats['total_runs'] += 1
            self.stats['total_layerings'] += summary.total
            self.stats['total_errors'] += summary.count('error')
            self.last_summary = summary
            Logger.info(f"PipelineManager: 流水线完成 - 共{summary.total}, 保留{summary.kept}, "
                        f"通过{summary.count('pass')}, 错误{summary.count('error')}")
            return summary

        except Exception as e:
            self.stats['last_error'] = str(e)
            Logger.error(f"PipelineManager: 执行流水线失败 - {e}")
            raise

        finally:
            self.is_running = False
            self.current_pool = None

    def stop(self) -> bool:
        """请求停止正在运行的流水线"""
        try:
            if self.current_pool is None:
                return False
            return self.current_pool.stop()
        except Exception as e:
            Logger.error(f"PipelineManager: 停止流水线失败 - {e}")
            return False


# 全局流水线管理器实例
pipeline_manager = PipelineManager()


def run_pipeline(m: int, seed: Optional[int] = None, samples: Optional[int] = None,
                 trials: Optional[int] = None, limit: Optional[int] = None,
                 on_row: Optional[Callable[[LayeringResult], None]] = None,
                 max_workers: Optional[int] = None) -> PipelineSummary:
    """同步入口，供命令行使用"""
    manager = pipeline_manager if max_workers is None else PipelineManager(max_workers)
    return asyncio.run(manager.run_pipeline(m, seed=seed, samples=samples, trials=trials,
                                            limit=limit, on_row=on_row))
