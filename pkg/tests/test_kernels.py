import importlib

import numpy as np
import pytest

from bdlandscape import _backend, _kernels_py
from bdlandscape.linalg import SignalPair, child_rng
from bdlandscape.sample import generate_measurements, sample_subgradient, sample_value
from bdlandscape.solver import PolyakConfig, run_polyak
from bdlandscape.experiments import init_gaussian

needs_cython = pytest.mark.skipif("cython" not in _backend.BACKENDS, reason="compiled extension not built")


def problem(seed, d1=7, d2=5, m=60):
    truth = SignalPair.canonical(d1, d2)
    ens = generate_measurements(child_rng(seed, 0), truth, m)
    return ens, init_gaussian(child_rng(seed, 1), 2.0, d1, d2)


def test_python_backend_always_available():
    assert _backend.get_kernels("python") is _kernels_py


def test_unknown_backend():
    with pytest.raises(ValueError):
        _backend.get_kernels("fortran")


def test_env_forces_fallback(monkeypatch):
    monkeypatch.setenv("BDL_PURE_PYTHON", "1")
    mod = importlib.reload(_backend)
    try:
        assert mod.BACKEND == "python"
        assert mod.kernels is _kernels_py
    finally:
        monkeypatch.delenv("BDL_PURE_PYTHON")
        importlib.reload(_backend)


@pytest.mark.parametrize("name", sorted(_backend.BACKENDS))
def test_value_and_subgradient_match_sample_module(name):
    k = _backend.get_kernels(name)
    ens, p = problem(3)
    f, gw, gx = k.sample_value_and_subgradient(ens.A, ens.B, ens.y, p.w, p.x)
    ew, ex = sample_subgradient(ens, p)
    assert f == pytest.approx(sample_value(ens, p), rel=1e-13)
    np.testing.assert_allclose(gw, ew, rtol=1e-12, atol=1e-15)
    np.testing.assert_allclose(gx, ex, rtol=1e-12, atol=1e-15)


@needs_cython
@pytest.mark.parametrize("seed", range(5))
def test_backends_agree_on_runs(seed):
    ens, init = problem(seed)
    cfg = PolyakConfig(max_iters=2000, trace_every=50)
    a = run_polyak(ens, init, cfg, backend="python")
    b = run_polyak(ens, init, cfg, backend="cython")
    assert a.termination == b.termination
    assert a.success == b.success
    assert abs(a.iterations - b.iterations) <= max(2, a.iterations // 20)
    assert b.final_value == pytest.approx(a.final_value, abs=1e-9)


@needs_cython
def test_backends_agree_on_short_runs_closely():
    ens, init = problem(9)
    cfg = PolyakConfig(max_iters=25)
    a = run_polyak(ens, init, cfg, backend="python")
    b = run_polyak(ens, init, cfg, backend="cython")
    np.testing.assert_allclose(b.final.concat(), a.final.concat(), rtol=1e-9, atol=1e-12)


@pytest.mark.parametrize("name", sorted(_backend.BACKENDS))
def test_loop_mutates_in_place_and_reports(name):
    k = _backend.get_kernels(name)
    ens, init = problem(4)
    w, x = init.w.copy(), init.x.copy()
    iters, f, code, trace = k.polyak_loop(
        ens.A, ens.B, ens.y, w, x, ens.truth.w, ens.truth.x, 5, 1e-10, 0.0, 1
    )
    assert iters == 5 and code == 1
    assert not np.array_equal(w, init.w)
    assert trace.shape == (6, 3)
    assert trace[:, 0].tolist() == [0, 1, 2, 3, 4, 5]
    assert trace[-1, 1] == pytest.approx(f, rel=1e-14)
