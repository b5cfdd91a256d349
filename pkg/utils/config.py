#!/usr/bin/env python3
# -*- coding: utf-8 -*-

import logging
import os
from dataclasses import dataclass, replace


VERSION = "0.1.0"
THREADS_ENV = "LATTICE_CF_THREADS"

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Settings:
    """
    数值默认值与运行参数
    Q=64、k网格128、λ扫描2000点、δ=1e-6、root_tol=1e-9
    """
    qnodes: int = 64
    kgrid: int = 128
    scan_points: int = 2000
    delta: float = 1e-6
    root_tol: float = 1e-9
    rcond_threshold: float = 1e-14
    # 单次批量求值允许的 λ×节点×M² 元素数
    batch_budget: int = 1 << 16
    threads: int = 1

    def __post_init__(self):
        if self.qnodes < 1:
            raise ValueError(f"积分节点数必须 ≥ 1: {self.qnodes}")
        if self.kgrid < 2:
            raise ValueError(f"k网格点数必须 ≥ 2: {self.kgrid}")
        if self.scan_points < 3:
            raise ValueError(f"λ扫描点数必须 ≥ 3: {self.scan_points}")
        if self.delta <= 0 or self.root_tol <= 0:
            raise ValueError(f"δ与root_tol必须为正: δ={self.delta}, root_tol={self.root_tol}")
        if self.threads < 1:
            raise ValueError(f"线程数必须 ≥ 1: {self.threads}")

    @classmethod
    def from_env(cls, **overrides) -> "Settings":
        """读取 LATTICE_CF_THREADS 后再应用覆盖项"""
        return cls(threads=read_thread_count()).with_overrides(**overrides)

    def with_overrides(self, **overrides) -> "Settings":
        """忽略值为 None 的覆盖项"""
        values = {key: value for key, value in overrides.items() if value is not None}
        return replace(self, **values) if values else self


def read_thread_count() -> int:
    """LATTICE_CF_THREADS 限制并行度，缺省或非法时为1"""
    raw = os.environ.get(THREADS_ENV)
    if raw is None or raw.strip() == "":
        return 1
    try:
        count = int(raw)
    except ValueError:
        logger.warning(f"{THREADS_ENV}={raw!r} 不是整数，使用单线程")
        return 1
    if count < 1:
        logger.warning(f"{THREADS_ENV}={count} 小于1，使用单线程")
        return 1
    return count
