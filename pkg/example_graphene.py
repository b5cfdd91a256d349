#!/usr/bin/env python3
"""
示例程序：石墨烯线缺陷与点缺陷
"""

import numpy as np

from core.quadrature import QuadGrid
from graphene import build_graphene, d_loc_scan, guided_curves, torus_oracle
from spectrum import SpectrumOptions


def show_guided_modes(V1: float = 2.0):
    """导波色散曲线与闭式候选的偏差"""
    options = SpectrumOptions(kgrid=33, scan_points=800)
    frame = guided_curves(V1, k2=np.linspace(0.0, 1.0, 9), options=options, grid=QuadGrid(64))
    print(frame.to_string(index=False))
    print(f"最大偏差: {frame['deviation'].max():.3e}")


def show_point_eigenvalue(V1: float = -3.5, V2: float = 200.0):
    """D_loc 变号的位置与环面上的最大特征值"""
    scan = d_loc_scan(V1, V2, np.linspace(195.0, 205.0, 41), QuadGrid(32))
    signs = np.sign(scan["d_loc"].to_numpy())
    crossing = np.flatnonzero(signs[:-1] * signs[1:] < 0)
    for i in crossing:
        print(f"D_loc 在 [{scan['lambda'][i]:.3f}, {scan['lambda'][i + 1]:.3f}] 内变号")
    print(f"环面 P=16 最大特征值: {torus_oracle(V1, V2, 16).max():.6f}")


def main():
    model = build_graphene(2.0, 1.0)
    print(model)
    solver = model.solver(SpectrumOptions(kgrid=64))
    print(f"σ₀ = {solver.sigma0().hull}")
    show_guided_modes()
    show_point_eigenvalue()

if __name__ == "__main__":
    main()
