#!/usr/bin/env python3
"""
forge 命令行工具
主入口文件：枚举分层、谱筛选、嵌入中心集、构造锥并验证3-一致性
"""

import argparse
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any, List, Optional

# 添加项目根目录到Python路径
project_root = Path(__file__).parent
sys.path.insert(0, str(project_root))

from core import __version__
from core.config import forge_config
from core.errors import ForgeError, ForgeInputError, VerificationFailure
from kivy.logger import Logger


@dataclass
class RunConfig:
    """一次命令行调用的参数；未指定的数值回退到 forge_config"""
    command: str
    input: Optional[str] = None
    output: Optional[str] = None
    seed: int = 42
    samples: int = 1000000
    trials: int = 20
    tol: Optional[float] = None
    json: bool = False
    db: Optional[str] = None
    csv: Optional[str] = None
    m: Optional[int] = None
    limit: Optional[int] = None
    antipodal_filter: bool = False
    catalog: Optional[str] = None
    k: Optional[int] = None
    force: bool = False
    check: bool = False
    validate: bool = False

    @classmethod
    def from_args(cls, args: argparse.Namespace) -> 'RunConfig':
        if args.command == 'pipeline':
            default_samples = forge_config.get('PIPELINE_SAMPLES', 20000)
            default_trials = forge_config.get('PIPELINE_TRIALS', 5)
        else:
            default_samples = forge_config.get('DEFAULT_SAMPLES', 1000000)
            default_trials = forge_config.get('DEFAULT_TRIALS', 20)

        def pick(name: str, fallback: Any = None) -> Any:
            value = getattr(args, name, None)
            return fallback if value is None else value

        return cls(
            command=args.command,
            input=pick('input'),
            output=pick('output'),
            seed=int(pick('seed', forge_config.get('DEFAULT_SEED', 42))),
            samples=int(pick('samples', default_samples)),
            trials=int(pick('trials', default_trials)),
            tol=pick('tol'),
            json=bool(pick('json', False)),
            db=pick('db'),
            csv=pick('csv'),
            m=pick('m'),
            limit=pick('limit'),
            antipodal_filter=bool(pick('antipodal_filter', False)),
            catalog=pick('catalog_name') or pick('catalog'),
            k=pick('k'),
            force=bool(pick('force', False)),
            check=bool(pick('check', False)),
            validate=bool(pick('validate', False)),
        )


def seed_type(value: str) -> int:
    """64位无符号整数种子"""
    seed = int(value, 0)
    if not 0 <= seed < 2 ** 64:
        raise argparse.ArgumentTypeError(f"种子必须在 [0, 2^64) 内: {value}")
    return seed


def positive_int(value: str) -> int:
    number = int(value)
    if number < 1:
        raise argparse.ArgumentTypeError(f"必须是正整数: {value}")
    return number


def build_parser() -> argparse.ArgumentParser:
    """构造参数解析器；全局参数在子命令前后都可以出现"""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--seed', type=seed_type, default=argparse.SUPPRESS, help='随机种子（默认42）')
    common.add_argument('--samples', type=positive_int, default=argparse.SUPPRESS, help='蒙特卡洛样本数')
    common.add_argument('--trials', type=positive_int, default=argparse.SUPPRESS, help='随机试验次数')
    common.add_argument('--tol', type=float, default=argparse.SUPPRESS, help='覆盖该命令的容差')
    common.add_argument('--json', action='store_true', default=argparse.SUPPRESS, help='输出JSON报告')
    common.add_argument('-o', '--output', default=argparse.SUPPRESS, help='输出文件')
    common.add_argument('--db', default=argparse.SUPPRESS, help='把结果保存到SQLite数据库')
    common.add_argument('--verbose', action='store_true', default=argparse.SUPPRESS, help='输出调试日志')
    common.add_argument('--threads', type=positive_int, default=argparse.SUPPRESS, help='工作线程数')
    common.add_argument('--config', default=argparse.SUPPRESS, help='配置文件路径')

    parser = argparse.ArgumentParser(prog='forge', parents=[common],
                                     description='距离对称球面构型与3-一致锥测度')
    parser.add_argument('--version', action='version', version=f'forge {__version__}')
    sub = parser.add_subparsers(dest='command', metavar='COMMAND')
    sub.required = True

    p = sub.add_parser('enumerate', parents=[common], help='枚举K_m的全部分层（JSONL）')
    p.add_argument('--m', type=int, required=True)
    p.add_argument('--limit', type=int)
    p.add_argument('--antipodal-filter', action='store_true', help='只输出满足对径结构的分层')

    p = sub.add_parser('check-layering', parents=[common], help='检查分层公理')
    p.add_argument('input')

    p = sub.add_parser('spectral', parents=[common], help='谱判据报告')
    p.add_argument('input')

    p = sub.add_parser('embed', parents=[common], help='由分层构造中心集')
    p.add_argument('input')
    p.add_argument('--csv', help='同时导出点坐标CSV')
    p.add_argument('--force', action='store_true', help='不可嵌入时强制嵌入（只用于反例）')

    p = sub.add_parser('build-cone', parents=[common], help='由中心集构造球面配置')
    p.add_argument('input')
    p.add_argument('--force', action='store_true', help='跳过互不相交检查')

    p = sub.add_parser('verify', parents=[common], help='验证锥的3-一致性')
    p.add_argument('input', nargs='?')
    p.add_argument('--catalog', choices=['kp', 'ck', 'tetra8', 'rect4', 'kp5'])
    p.add_argument('--k', type=int)

    p = sub.add_parser('catalog', parents=[common], help='输出目录中的具名例子')
    p.add_argument('catalog_name', choices=['kp', 'ck', 'tetra8', 'rect4', 'kp5'])
    p.add_argument('--k', type=int)
    p.add_argument('--check', action='store_true', help='交叉校验方程与构型')

    p = sub.add_parser('pipeline', parents=[common], help='枚举→筛选→嵌入→构造→验证')
    p.add_argument('--m', type=int, required=True)
    p.add_argument('--limit', type=int)

    p = sub.add_parser('config', parents=[common], help='显示有效配置')
    p.add_argument('--validate', action='store_true', help='只做校验，有问题时返回2')

    return parser


def emit(obj: Any, run: RunConfig):
    """输出单个JSON对象到 -o 文件或标准输出"""
    from core.export import dumps_report, write_json

    if run.output:
        if not write_json(run.output, obj):
            raise ForgeInputError(f"无法写入 {run.output}")
    else:
        sys.stdout.write(dumps_report(obj))


def open_output(path: str):
    """打开 -o 指定的逐行输出文件"""
    try:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        return open(path, 'w', encoding='utf-8', newline='\n')
    except OSError as e:
        raise ForgeInputError(f"无法写入 {path} - {e}")


def cmd_enumerate(run: RunConfig) -> int:
    from core.export import dumps_report
    from core.layering import check_antipodal_structure, enumerate_layerings

    layerings = enumerate_layerings(run.m, run.limit)
    if run.antipodal_filter:
        layerings = (item for item in layerings if check_antipodal_structure(item).valid)

    count = 0
    stream = open_output(run.output) if run.output else sys.stdout
    try:
        for layering in layerings:
            stream.write(dumps_report(layering))
            count += 1
    finally:
        if run.output:
            stream.close()
    Logger.info(f"Forge: 共输出 {count} 个分层")
    return 0


def cmd_check_layering(run: RunConfig) -> int:
    from core.errors import DomainError
    from core.export import read_json
    from core.layering import validate_layering

    data = read_json(run.input)
    if not isinstance(data, dict) or 'd' not in data:
        raise DomainError("分层JSON缺少字段d")
    report = validate_layering(data['d'])
    if run.json:
        emit(report, run)
    elif report.valid:
        print("有效的分层")
    else:
        for violation in report.violations:
            print(f"违反 {violation.rule}: {[i + 1 for i in violation.indices]}")
    return 0 if report.valid else 1


def cmd_spectral(run: RunConfig) -> int:
    from core.export import load_layering
    from core.spectral import spectral_report

    report = spectral_report(load_layering(run.input), psd_tolerance=run.tol)
    if run.json:
        emit(report, run)
    else:
        print(f"gap={report.gap:.12g} threshold={report.threshold:g} "
              f"embeddable={'yes' if report.embeddable else 'no'} rank={report.delta_rank}")
    return 0 if report.embeddable else 1


def cmd_embed(run: RunConfig) -> int:
    from core.embedding import embed, verify_center_set
    from core.export import load_layering, write_points_csv

    layering = load_layering(run.input)
    centers = embed(layering, force=run.force)
    report = verify_center_set(centers, layering, tol=run.tol)
    emit(centers, run)
    if run.csv and not write_points_csv(run.csv, centers):
        raise ForgeInputError(f"无法写入 {run.csv}")
    if not report.valid:
        Logger.warning(f"Forge: 中心集不变量不成立 - {', '.join(report.rules())}")
        return 1
    return 0


def cmd_build_cone(run: RunConfig) -> int:
    from core.export import load_centers
    from core.geometry import build_config

    config = build_config(load_centers(run.input), strict=not run.force)
    emit(config, run)
    return 0


def _load_cone(run: RunConfig):
    from core.catalog import get_entry
    from core.errors import PreconditionError
    from core.export import load_catalog_entry, read_json
    from core.geometry import ConeSupport, config_from_dict

    if run.catalog:
        label = run.catalog if run.k is None else f"{run.catalog}-{run.k}"
        return label, ConeSupport(get_entry(run.catalog, run.k).config)
    if not run.input:
        raise PreconditionError("verify 需要锥文件或 --catalog")
    data = read_json(run.input)
    if isinstance(data, dict) and 'config' in data:
        return Path(run.input).stem, ConeSupport(load_catalog_entry(run.input).config)
    if not isinstance(data, dict):
        raise PreconditionError(f"无法识别的锥文件: {run.input}")
    return Path(run.input).stem, ConeSupport(config_from_dict(data))


def cmd_verify(run: RunConfig) -> int:
    from core.measure import verify_uniformity
    from core.scheduler import WorkPool

    label, cone = _load_cone(run)
    with WorkPool() as pool:
        reports = verify_uniformity(cone, trials=run.trials, samples=run.samples, seed=run.seed,
                                    abs_tol=run.tol, pool=pool)

    if run.db:
        from core.database import ResultStore

        store = ResultStore(run.db)
        run_id = store.start_run('verify', run.seed, run.samples, run.trials)
        if run_id is not None:
            store.add_measure_reports(run_id, label, reports)

    failed = [report for report in reports if not report.passed]
    if run.json or run.output:
        emit(reports, run)
    if not run.json:
        for report in reports:
            mc = '' if report.mc_estimate is None else f" mc={report.mc_estimate:.6g}±{report.mc_stderr:.2g}"
            print(f"{report.kind:9s} R={report.radius:.6g} analytic={report.analytic:.12g} "
                  f"target={report.target:.12g}{mc} {report.verdict}")
        print(f"{len(reports) - len(failed)}/{len(reports)} 通过")
    if failed:
        raise VerificationFailure(f"{label}: {len(failed)}/{len(reports)} 条报告未通过")
    return 0


def cmd_catalog(run: RunConfig) -> int:
    from core.catalog import cross_check, get_entry

    entry = get_entry(run.catalog, run.k)
    emit(entry, run)
    if run.check:
        report = cross_check(entry, seed=run.seed)
        print(f"交叉校验: {'通过' if report.valid else '失败'} (最大偏差 {report.max_deviation:.3e})",
              file=sys.stderr)
        return 0 if report.valid else 1
    return 0


def cmd_pipeline(run: RunConfig) -> int:
    from core.export import dumps_report
    from core.pipeline import run_pipeline

    store, run_id = None, None
    if run.db:
        from core.database import ResultStore

        store = ResultStore(run.db)
        run_id = store.start_run('pipeline', run.seed, run.samples, run.trials)

    stream = open_output(run.output) if run.output else None

    def on_row(row):
        if stream is not None:
            stream.write(dumps_report(row))
        elif run.json:
            sys.stdout.write(dumps_report(row))
        if store is not None and run_id is not None:
            store.add_layering_result(run_id, row.to_dict())
            if row.reports:
                store.add_measure_reports(run_id, f"layering-{row.index + 1}", row.reports)

    try:
        summary = run_pipeline(run.m, seed=run.seed, samples=run.samples, trials=run.trials,
                               limit=run.limit, on_row=on_row)
    finally:
        if stream is not None:
            stream.close()

    totals = summary.to_dict()
    text = (f"m={totals['m']}: 分层{totals['total']}, 保留{totals['kept']}, 丢弃{totals['dropped']}, "
            f"通过{totals['passed']}, 失败{totals['failed']}, 错误{totals['errors']}")
    print(text, file=sys.stderr if (run.json and not run.output) else sys.stdout)
    return summary.exit_code


def cmd_config(run: RunConfig) -> int:
    problems = forge_config.validate()
    if run.validate:
        for problem in problems:
            print(problem, file=sys.stderr)
        return 2 if problems else 0
    if run.json:
        emit(forge_config.get_all(), run)
    else:
        print(forge_config.export_config())
        for problem in problems:
            print(f"问题: {problem}", file=sys.stderr)
    return 2 if problems else 0


HANDLERS = {
    'enumerate': cmd_enumerate,
    'check-layering': cmd_check_layering,
    'spectral': cmd_spectral,
    'embed': cmd_embed,
    'build-cone': cmd_build_cone,
    'verify': cmd_verify,
    'catalog': cmd_catalog,
    'pipeline': cmd_pipeline,
    'config': cmd_config,
}


def main(argv: Optional[List[str]] = None) -> int:
    """解析参数并执行子命令，返回退出码（0 通过，1 验证失败，2 输入错误，3 数值错误）"""
    parser = build_parser()
    args = parser.parse_args(argv)

    if getattr(args, 'config', None):
        if not forge_config.load(args.config):
            print(f"forge: 无法加载配置 {args.config}", file=sys.stderr)
            return 2
    if getattr(args, 'verbose', False):
        forge_config.set('LOG_LEVEL', 'debug')
    if getattr(args, 'threads', None):
        forge_config.set('THREADS', args.threads)

    run = RunConfig.from_args(args)
    try:
        return HANDLERS[run.command](run)
    except ForgeError as e:
        Logger.error(f"Forge: {run.command} 失败 - {e}")
        print(f"forge: {e}", file=sys.stderr)
        return e.exit_code
    except KeyboardInterrupt:
        print("forge: 已中断", file=sys.stderr)
        return 130


if __name__ == '__main__':
    sys.exit(main())
