"""
谱分量与色散分支模块
"""

from .components import (
    DispersionBranch,
    RootRecord,
    SpectralComponent,
    complement_in_window,
    distance_to_intervals,
    merge_intervals,
)
from .solver import (
    SpectrumOptions,
    SpectrumSolver,
    branch_table,
    default_window,
    full_spectrum,
    sigma0,
    sigma_j,
    sigma_N_eigenvalues,
    tensor_grid,
)

__all__ = [
    'DispersionBranch',
    'RootRecord',
    'SpectralComponent',
    'SpectrumOptions',
    'SpectrumSolver',
    'branch_table',
    'complement_in_window',
    'default_window',
    'distance_to_intervals',
    'full_spectrum',
    'merge_intervals',
    'sigma0',
    'sigma_j',
    'sigma_N_eigenvalues',
    'tensor_grid',
]
