"""
标量逆谱问题：由色散分支构造算子
"""

from .branches import BranchReport, BranchSpec, validate_branches
from .synthesis import (
    OperatorSynthesizer,
    RoundtripReport,
    SynthesisReport,
    synthesize_operator,
    verify_roundtrip,
)

__all__ = [
    'BranchReport',
    'BranchSpec',
    'OperatorSynthesizer',
    'RoundtripReport',
    'SynthesisReport',
    'synthesize_operator',
    'validate_branches',
    'verify_roundtrip',
]
