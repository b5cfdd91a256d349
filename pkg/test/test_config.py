#!/usr/bin/env python3
"""
测试运行参数与 LATTICE_CF_THREADS
"""

import pytest

from spectrum import SpectrumOptions
from utils.config import THREADS_ENV, Settings, read_thread_count
from utils.parallel import parallel_map


@pytest.mark.parametrize("raw,expected", [(None, 1), ("", 1), ("4", 4), ("0", 1), ("-2", 1), ("many", 1)])
def test_thread_count(monkeypatch, raw, expected):
    if raw is None:
        monkeypatch.delenv(THREADS_ENV, raising=False)
    else:
        monkeypatch.setenv(THREADS_ENV, raw)
    assert read_thread_count() == expected


def test_overrides_ignore_none(monkeypatch):
    monkeypatch.setenv(THREADS_ENV, "3")
    settings = Settings.from_env(kgrid=None, qnodes=16)
    assert settings.threads == 3
    assert settings.qnodes == 16
    assert settings.kgrid == 128
    assert Settings.from_env(threads=1).threads == 1


def test_defaults():
    settings = Settings()
    assert (settings.qnodes, settings.kgrid, settings.scan_points) == (64, 128, 2000)
    assert settings.delta == 1e-6 and settings.root_tol == 1e-9


@pytest.mark.parametrize("field,value", [("qnodes", 0), ("kgrid", 1), ("scan_points", 2), ("delta", 0.0), ("threads", 0)])
def test_invalid_settings(field, value):
    with pytest.raises(ValueError):
        Settings(**{field: value})


def test_options_from_settings():
    options = SpectrumOptions.from_settings(Settings(kgrid=33, threads=2), use_gbar=True, window=None)
    assert options.kgrid == 33 and options.threads == 2
    assert options.use_gbar
    assert options.window is None


def test_parallel_map_keeps_order():
    items = list(range(50))
    assert parallel_map(lambda x: x * x, items, 4) == [x * x for x in items]
    assert parallel_map(lambda x: x + 1, items, 1) == [x + 1 for x in items]
