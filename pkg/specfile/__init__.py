"""
规格文件模块
提供算子规格、分支规格的读写与校验功能
"""

from .schema import SpecFile, load_branches, load_spec, save_spec
from .validator import SpecValidator, ValidationReport

__all__ = [
    'SpecFile',
    'SpecValidator',
    'ValidationReport',
    'load_branches',
    'load_spec',
    'save_spec',
]
