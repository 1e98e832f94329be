#!/usr/bin/env python3
"""
导出模块
报告的JSON/JSONL序列化（浮点数统一17位有效数字）、点坐标CSV导出，
以及各类输入文件的加载与JSON Schema校验
"""

import json
import math
import os
from pathlib import Path
from typing import Any, Dict, Iterable, List

import numpy as np
from kivy.logger import Logger

from .catalog import CatalogEntry, QuadricRelation
from .embedding import CenterSet, center_set_from_dict
from .errors import DomainError, ForgeNumericError
from .geometry import SphereConfig, config_from_dict
from .layering import Layering, layering_from_dict

SCHEMA_DIR = Path(__file__).resolve().parent.parent / 'schemas'


def _encode(obj: Any) -> str:
    if obj is None:
        return 'null'
    if isinstance(obj, (bool, np.bool_)):
        return 'true' if obj else 'false'
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        value = float(obj)
        if not math.isfinite(value):
            raise ForgeNumericError(f"报告中出现非有限浮点数 {value}")
        return '%.17g' % value
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=False)
    if hasattr(obj, 'to_dict'):
        return _encode(obj.to_dict())
    if isinstance(obj, dict):
        return '{' + ', '.join(f"{json.dumps(str(k), ensure_ascii=False)}: {_encode(v)}"
                               for k, v in obj.items()) + '}'
    if isinstance(obj, (list, tuple, np.ndarray)):
        items = obj.tolist() if isinstance(obj, np.ndarray) else obj
        return '[' + ', '.join(_encode(v) for v in items) + ']'
    raise TypeError(f"无法序列化的类型: {type(obj).__name__}")


def dumps_report(obj: Any) -> str:
    """单行JSON文本，浮点数按 %.17g 输出，以换行结尾"""
    return _encode(obj) + '\n'


def _ensure_parent(path: str):
    parent = os.path.dirname(os.path.abspath(path))
    os.makedirs(parent, exist_ok=True)


def write_json(path: str, obj: Any) -> bool:
    """写入单个JSON对象"""
    try:
        _ensure_parent(path)
        with open(path, 'w', encoding='utf-8', newline='\n') as f:
            f.write(dumps_report(obj))
        Logger.debug(f"Export: 写入 {path}")
        return True
    except OSError as e:
        Logger.error(f"Export: 写入JSON失败 - {e}")
        return False


def write_jsonl(path: str, rows: Iterable[Any]) -> int:
    """逐行写入JSON对象，返回行数"""
    count = 0
    _ensure_parent(path)
    with open(path, 'w', encoding='utf-8', newline='\n') as f:
        for row in rows:
            f.write(dumps_report(row))
            count += 1
    Logger.debug(f"Export: 写入 {count} 行到 {path}")
    return count


def write_points_csv(path: str, centers: CenterSet) -> bool:
    """每行一个中心点坐标"""
    try:
        _ensure_parent(path)
        np.savetxt(path, centers.points, fmt='%.17g', delimiter=',')
        return True
    except OSError as e:
        Logger.error(f"Export: 写入CSV失败 - {e}")
        return False


def read_json(path: str) -> Any:
    """读取JSON文件；文件缺失或格式错误时抛出DomainError"""
    try:
        with open(path, 'r', encoding='utf-8') as f:
            return json.load(f)
    except FileNotFoundError:
        raise DomainError(f"文件不存在: {path}")
    except json.JSONDecodeError as e:
        raise DomainError(f"JSON格式错误 {path} - {e}")


def read_jsonl(path: str) -> List[Any]:
    rows = []
    try:
        with open(path, 'r', encoding='utf-8') as f:
            for number, line in enumerate(f, start=1):
                if line.strip():
                    rows.append(json.loads(line))
    except FileNotFoundError:
        raise DomainError(f"文件不存在: {path}")
    except json.JSONDecodeError as e:
        raise DomainError(f"JSONL第{number}行格式错误 - {e}")
    return rows


def load_layering(path: str, validate: bool = True) -> Layering:
    return layering_from_dict(read_json(path), validate=validate)


def load_centers(path: str) -> CenterSet:
    return center_set_from_dict(read_json(path))


def load_config(path: str) -> SphereConfig:
    return config_from_dict(read_json(path))


def _relation_from_dict(data: Dict[str, Any]) -> QuadricRelation:
    try:
        return QuadricRelation(lhs=int(data['lhs']) - 1,
                               rhs={int(k) - 1: int(v) for k, v in data.get('rhs', {}).items()})
    except (KeyError, TypeError, ValueError) as e:
        raise DomainError(f"方程JSON无效 - {e}")


def load_catalog_entry(path: str) -> CatalogEntry:
    """读取目录条目；中心集由构型的 ξ 分量与 t = √(1 - r²) 还原"""
    data = read_json(path)
    if not isinstance(data, dict) or 'config' not in data:
        raise DomainError(f"目录条目缺少config字段: {path}")
    config = config_from_dict(data['config'])
    t = math.sqrt(max(0.0, 1.0 - config.radius ** 2))
    centers = CenterSet(points=config.xi, r=config.radius, t=t)
    equations = [_relation_from_dict(item) for item in data.get('equations', [])]
    return CatalogEntry(name=str(data.get('name', 'file')), config=config, centers=centers,
                        equations=equations, k=data.get('k'))


def load_schema(name: str) -> Dict[str, Any]:
    return read_json(str(SCHEMA_DIR / f"{name}.schema.json"))


def validate_against_schema(obj: Any, name: str) -> List[str]:
    """按 schemas/<name>.schema.json 校验，返回错误信息列表"""
    import jsonschema

    schema = load_schema(name)
    validator = jsonschema.Draft7Validator(schema)
    return [f"{'/'.join(str(p) for p in error.path)}: {error.message}"
            for error in validator.iter_errors(obj)]

