"""Smoke tests for the pycuspmap extension.

Build first with `cargo build -p pycuspmap`, then run `python3 -m pytest python/`.
The shared library is copied next to a temporary import path as `pycuspmap.so`.
"""

import importlib
import math
import os
import shutil
import sys
import tempfile

import pytest

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))


def _load():
    for profile in ("release", "debug"):
        lib = os.path.join(ROOT, "target", profile, "libpycuspmap.so")
        if os.path.exists(lib):
            break
    else:
        pytest.skip("libpycuspmap.so not built")
    tmp = tempfile.mkdtemp(prefix="pycuspmap-")
    shutil.copy(lib, os.path.join(tmp, "pycuspmap.so"))
    sys.path.insert(0, tmp)
    return importlib.import_module("pycuspmap")


cm = _load()


def test_minus_one_maps_to_origin():
    assert cm.map_point(-1.0, 0.0) == (0.0, 0.0)


def test_round_trip():
    for x in [(0.3, 0.2), (-0.5, -0.4), (0.0, 0.9), (0.7, -0.1)]:
        w = cm.map_point(*x)
        back = cm.map_inverse(*w)
        assert math.dist(x, back) < 1e-9


def test_distortion_at_least_one_and_conformal_stage():
    assert cm.distortion(-0.9, 0.05) >= 1.0
    assert cm.distortion(-0.9, 0.05, stages=["f1"]) == 1.0


def test_integrals():
    verdict, log_eps, log_values = cm.integrate_kpow(2.0, k_max=24)
    assert verdict == "Convergent"
    assert len(log_eps) == len(log_values) == 24
    assert cm.integrate_exp(1.0, k_max=24)[0] == "Divergent"


def test_test_function_energy():
    assert abs(cm.lip_test_energy(0.2, 1.0) - 0.10819071635468617) < 1e-12


def test_annulus_capacity():
    exact = 2 * math.pi / math.log(4.0)
    assert abs(cm.annulus_capacity(0.25, 1.0, resolution=64) / exact - 1) < 0.03


def test_boundary_trace():
    rows = cm.boundary_trace([1e-2, 1e-3])
    for t, _, _, residual in rows:
        assert residual < 2 * t * t


def test_verify_and_errors():
    ok, line = cm.verify(9)
    assert ok and line.startswith("PASS")
    with pytest.raises(ValueError):
        cm.lip_test_energy(-1.0, 1.0)
    with pytest.raises(ValueError):
        cm.map_point(0.0, 0.0, stages=["f9"])
