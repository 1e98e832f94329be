#!/usr/bin/env python3
"""
配置文件模块
处理所有容差、采样规模与运行参数，配置保存在JSON文件中
"""

import os
import json
from pathlib import Path
from typing import List, Dict, Any, Optional
from kivy.logger import Logger, LOG_LEVELS


class ForgeConfig:
    """基于JSON文件的配置类"""

    def __init__(self, config_file_path: Optional[str] = None):
        """初始化配置"""
        self._config_data = {}
        self._config_file_path = config_file_path or self._get_config_file_path()
        self._load_config()

    def _get_config_file_path(self) -> str:
        """获取配置文件路径"""
        env_path = os.environ.get('FORGE_CONFIG')
        if env_path:
            return env_path
        return str(Path.cwd() / 'forge_config.json')

    def _get_default_config(self) -> Dict[str, Any]:
        """获取默认配置"""
        return {
            # 分层配置
            'MAX_LAYERING_ORDER': 10,
            'MAX_DYADIC_LEVEL': 8,

            # 谱判据配置
            'PSD_TOLERANCE_PER_POINT': 1e-9,
            'RANK_TOLERANCE_RELATIVE': 1e-8,
            'IDENTITY_TOLERANCE': 1e-12,

            # 嵌入与几何配置
            'GRAM_TOLERANCE': 1e-8,
            'CENTER_TOLERANCE': 1e-8,
            'ON_SUPPORT_TOLERANCE': 1e-9,

            # 测度验证配置
            'SIGMA_ABS_TOL': 1e-9,
            'NU_ABS_TOL': 1e-6,
            'QUADRATURE_TOL': 1e-8,
            'QUADRATURE_MAX_DEPTH': 40,
            'MC_SIGMAS': 3.0,
            'MC_CHUNK_SIZE': 65536,

            # 运行配置
            'DEFAULT_SEED': 42,
            'DEFAULT_SAMPLES': 1000000,
            'DEFAULT_TRIALS': 20,
            'PIPELINE_SAMPLES': 20000,
            'PIPELINE_TRIALS': 5,
            'THREADS': None,

            # 高级配置
            'LOG_LEVEL': 'WARNING',
        }

    def _load_config(self) -> bool:
        """加载配置文件，缺失的键使用默认值"""
        self._config_data = self._get_default_config()
        try:
            if os.path.exists(self._config_file_path):
                with open(self._config_file_path, 'r', encoding='utf-8') as f:
                    loaded = json.load(f)
                if not isinstance(loaded, dict):
                    Logger.error(f"ForgeConfig: 无效的配置文件格式 - {self._config_file_path}")
                    return False
                self._config_data.update(loaded)
                Logger.info(f"ForgeConfig: 配置文件加载成功 - {self._config_file_path}")
            else:
                Logger.debug("ForgeConfig: 使用默认配置")

            self.apply_log_level()
            return True

        except Exception as e:
            Logger.error(f"ForgeConfig: 加载配置文件失败 - {e}")
            self._config_data = self._get_default_config()
            return False

    def _save_config(self) -> bool:
        """保存配置文件"""
        try:
            config_dir = os.path.dirname(self._config_file_path)
            if config_dir:
                os.makedirs(config_dir, exist_ok=True)

            with open(self._config_file_path, 'w', encoding='utf-8') as f:
                json.dump(self._config_data, f, ensure_ascii=False, indent=2)

            Logger.info(f"ForgeConfig: 配置文件保存成功 - {self._config_file_path}")
            return True

        except Exception as e:
            Logger.error(f"ForgeConfig: 保存配置文件失败 - {e}")
            return False

    def load(self, config_file_path: Optional[str] = None) -> bool:
        """加载配置（公共接口）"""
        if config_file_path:
            self._config_file_path = config_file_path
        return self._load_config()

    def save(self) -> bool:
        """保存配置（公共接口）"""
        return self._save_config()

    def get(self, key: str, default: Any = None) -> Any:
        """获取配置值"""
        return self._config_data.get(key, default)

    def set(self, key: str, value: Any) -> bool:
        """设置配置值（只修改内存中的配置）"""
        try:
            self._config_data[key] = value
            if key == 'LOG_LEVEL':
                self.apply_log_level()
            return True
        except Exception as e:
            Logger.error(f"ForgeConfig: 设置配置失败 {key} - {e}")
            return False

    def update(self, config_dict: Dict[str, Any]) -> bool:
        """批量更新配置"""
        try:
            self._config_data.update(config_dict)
            self.apply_log_level()
            return True
        except Exception as e:
            Logger.error(f"ForgeConfig: 批量更新配置失败 - {e}")
            return False

    def get_all(self) -> Dict[str, Any]:
        """获取所有配置"""
        return self._config_data.copy()

    def reset_to_default(self) -> bool:
        """重置为默认配置"""
        self._config_data = self._get_default_config()
        self.apply_log_level()
        return True

    def apply_log_level(self):
        """把LOG_LEVEL应用到kivy日志器"""
        level = str(self._config_data.get('LOG_LEVEL', 'WARNING')).lower()
        if level in LOG_LEVELS:
            Logger.setLevel(LOG_LEVELS[level])
        else:
            Logger.warning(f"ForgeConfig: 未知的日志级别 {level}")

    def validate(self) -> List[str]:
        """验证配置的有效性"""
        errors = []

        try:
            order = self.get('MAX_LAYERING_ORDER')
            if not isinstance(order, int) or order < 2 or order % 2:
                errors.append('MAX_LAYERING_ORDER 必须是不小于2的偶数')

            level = self.get('MAX_DYADIC_LEVEL')
            if not isinstance(level, int) or level < 0:
                errors.append('MAX_DYADIC_LEVEL 必须是非负整数')

            for key in ('PSD_TOLERANCE_PER_POINT', 'RANK_TOLERANCE_RELATIVE', 'IDENTITY_TOLERANCE',
                        'GRAM_TOLERANCE', 'CENTER_TOLERANCE', 'ON_SUPPORT_TOLERANCE',
                        'SIGMA_ABS_TOL', 'NU_ABS_TOL', 'QUADRATURE_TOL'):
                value = self.get(key)
                if not isinstance(value, (int, float)) or value < 0:
                    errors.append(f'{key} 必须是非负数')

            for key in ('DEFAULT_SAMPLES', 'DEFAULT_TRIALS', 'PIPELINE_SAMPLES',
                        'PIPELINE_TRIALS', 'MC_CHUNK_SIZE', 'QUADRATURE_MAX_DEPTH'):
                value = self.get(key)
                if not isinstance(value, int) or value < 1:
                    errors.append(f'{key} 必须是正整数')

            seed = self.get('DEFAULT_SEED')
            if not isinstance(seed, int) or seed < 0 or seed >= 2 ** 64:
                errors.append('DEFAULT_SEED 必须是64位无符号整数')

            threads = self.get('THREADS')
            if threads is not None and (not isinstance(threads, int) or threads < 1):
                errors.append('THREADS 必须为空或正整数')

            if str(self.get('LOG_LEVEL', '')).lower() not in LOG_LEVELS:
                errors.append('LOG_LEVEL 无效')

        except Exception as e:
            errors.append(f'配置验证出错: {e}')

        return errors

    def get_thread_count(self) -> int:
        """获取工作池线程数：配置 > FORGE_THREADS环境变量 > CPU数"""
        threads = self.get('THREADS')
        if threads:
            return int(threads)
        env_threads = os.environ.get('FORGE_THREADS')
        if env_threads:
            try:
                return max(1, int(env_threads))
            except ValueError:
                Logger.warning(f"ForgeConfig: 无效的FORGE_THREADS - {env_threads}")
        return os.cpu_count() or 1

    def psd_tolerance(self, m: int) -> float:
        """半正定判定容差，与点数成比例"""
        return float(self.get('PSD_TOLERANCE_PER_POINT')) * m

    def get_spectral_config(self) -> Dict[str, Any]:
        """获取谱判据相关配置"""
        return {
            'PSD_TOLERANCE_PER_POINT': self.get('PSD_TOLERANCE_PER_POINT'),
            'RANK_TOLERANCE_RELATIVE': self.get('RANK_TOLERANCE_RELATIVE'),
            'IDENTITY_TOLERANCE': self.get('IDENTITY_TOLERANCE'),
        }

    def get_measure_config(self) -> Dict[str, Any]:
        """获取测度验证相关配置"""
        return {
            'SIGMA_ABS_TOL': self.get('SIGMA_ABS_TOL'),
            'NU_ABS_TOL': self.get('NU_ABS_TOL'),
            'QUADRATURE_TOL': self.get('QUADRATURE_TOL'),
            'QUADRATURE_MAX_DEPTH': self.get('QUADRATURE_MAX_DEPTH'),
            'MC_SIGMAS': self.get('MC_SIGMAS'),
            'MC_CHUNK_SIZE': self.get('MC_CHUNK_SIZE'),
        }

    def get_pipeline_config(self) -> Dict[str, Any]:
        """获取流水线相关配置"""
        return {
            'DEFAULT_SEED': self.get('DEFAULT_SEED'),
            'PIPELINE_SAMPLES': self.get('PIPELINE_SAMPLES'),
            'PIPELINE_TRIALS': self.get('PIPELINE_TRIALS'),
            'MAX_LAYERING_ORDER': self.get('MAX_LAYERING_ORDER'),
            'THREADS': self.get_thread_count(),
        }

    def export_config(self) -> str:
        """导出配置为JSON字符串"""
        try:
            return json.dumps(self._config_data, ensure_ascii=False, indent=2)
        except Exception as e:
            Logger.error(f"ForgeConfig: 导出配置失败 - {e}")
            return '{}'

    def import_config(self, config_json: str) -> bool:
        """从JSON字符串导入配置"""
        try:
            config_data = json.loads(config_json)
            if not isinstance(config_data, dict):
                Logger.error("ForgeConfig: 无效的配置格式")
                return False
            return self.update(config_data)
        except Exception as e:
            Logger.error(f"ForgeConfig: 导入配置失败 - {e}")
            return False

    def get_config_summary(self) -> Dict[str, Any]:
        """获取配置摘要"""
        return {
            'config_file_path': self._config_file_path,
            'config_file_exists': os.path.exists(self._config_file_path),
            'problems': self.validate(),
            'threads': self.get_thread_count(),
            'seed': self.get('DEFAULT_SEED'),
        }


# 全局配置实例
forge_config = ForgeConfig()
