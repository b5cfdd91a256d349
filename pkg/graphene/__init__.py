"""
带线缺陷与点缺陷的石墨烯算例

子模块:
    closed_forms  闭式色散与 G₁ 表达式
    torus         有限环面直接对角化
    model         模型构建与数据表
"""

from .closed_forms import (
    closed_form_g1,
    closed_form_guided,
    closed_form_projection,
    closed_form_sigma0,
    guided_candidates,
)
from .model import (
    GUIDED_COLUMNS,
    GrapheneModel,
    build_graphene,
    compare_guided,
    d_loc,
    d_loc_scan,
    dispersion_surface,
    guided_curves,
    projection_curves,
    torus_oracle,
)
from .torus import TorusLattice, decode_monomials, torus_from_spec

__all__ = [
    'GUIDED_COLUMNS',
    'GrapheneModel',
    'TorusLattice',
    'build_graphene',
    'closed_form_g1',
    'closed_form_guided',
    'closed_form_projection',
    'closed_form_sigma0',
    'compare_guided',
    'd_loc',
    'd_loc_scan',
    'decode_monomials',
    'dispersion_surface',
    'guided_candidates',
    'guided_curves',
    'projection_curves',
    'torus_from_spec',
    'torus_oracle',
]
