"""
共享夹具：固定种子生成的随机自伴三角多项式算子
"""

from typing import List, Sequence

import numpy as np
import pytest

from core.operator import OperatorSpec


CORPUS_SEED = 20240607
CORPUS_SIZE = 20


def _diagonal(rng: np.random.Generator, variables: Sequence[int]) -> str:
    """实常数加若干余弦项"""
    text = f"{rng.uniform(-1.0, 1.0):.6f}"
    for m in variables:
        if rng.random() < 0.7:
            text += f"+({rng.uniform(-1.0, 1.0):.6f})*cos(2*pi*{int(rng.integers(1, 3))}*k{m})"
    return text


def _off_diagonal(rng: np.random.Generator, variables: Sequence[int]):
    """(上三角元, 下三角元)，互为复共轭"""
    c = f"({rng.uniform(-1.0, 1.0):.6f})"
    if not variables:
        return c, c
    m = int(rng.choice(variables))
    n = int(rng.integers(1, 3))
    return f"{c}*exp(2*pi*i*{n}*k{m})", f"{c}*exp(-2*pi*i*{n}*k{m})"


def random_hermitian_spec(rng: np.random.Generator, index: int) -> OperatorSpec:
    """N ≤ 2、M ≤ 3；A_j 只依赖 k_{j+1}..k_N"""
    N = int(rng.integers(1, 3))
    M = int(rng.integers(1, 4))
    rows_per_level = []
    for j in range(N + 1):
        variables = list(range(j + 1, N + 1))
        rows = [[""] * M for _ in range(M)]
        for p in range(M):
            rows[p][p] = _diagonal(rng, variables)
            for q in range(p + 1, M):
                rows[p][q], rows[q][p] = _off_diagonal(rng, variables)
        rows_per_level.append(rows)
    return OperatorSpec.from_strings(N, rows_per_level, name=f"random-{index}")


def build_corpus(seed: int = CORPUS_SEED, size: int = CORPUS_SIZE) -> List[OperatorSpec]:
    rng = np.random.default_rng(seed)
    return [random_hermitian_spec(rng, index) for index in range(size)]


RANDOM_SPECS = build_corpus()


@pytest.fixture(params=range(CORPUS_SIZE), ids=lambda index: f"random-{index}")
def random_spec(request) -> OperatorSpec:
    return RANDOM_SPECS[request.param]
