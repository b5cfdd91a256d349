"""
预解式模块：网格函数、𝒜u 与 ℛ(λ)f
"""

from .grid_function import GridFunction
from .resolvent import (
    FORMS,
    LatticeSite,
    ResolventKernels,
    ResponseReport,
    apply_operator,
    apply_resolvent,
    build_source,
    dense_operator_matrix,
    residual,
    source_response,
)

__all__ = [
    'FORMS',
    'GridFunction',
    'LatticeSite',
    'ResolventKernels',
    'ResponseReport',
    'apply_operator',
    'apply_resolvent',
    'build_source',
    'dense_operator_matrix',
    'residual',
    'source_response',
]
