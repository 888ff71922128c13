import numpy as np
import pytest

from supchain import kernels

pytestmark = pytest.mark.skipif(not kernels.HAVE_NUMBA, reason="numba not installed")


def random_batch(seed, n_rep=40, mean_jumps=30):
    rng = np.random.default_rng(seed)
    counts = rng.poisson(mean_jumps, n_rep)
    counts[::7] = 0  # include empty replicates
    offsets = np.concatenate([[0], np.cumsum(counts)])
    u = rng.normal(scale=0.05, size=offsets[-1])
    w = rng.random(offsets[-1])
    return offsets, u, w


@pytest.mark.parametrize("kind, p", [(kernels.LINEAR, 1.0), (kernels.SINUSOID, 1.0), (kernels.HOELDER, 0.75)])
def test_paths_backends_agree(kind, p):
    off, u, w = random_batch(1)
    pts = np.linspace(0, 1, 65)
    a = kernels.paths_at(off, u, w, pts, kind, p, backend="numba")
    b = kernels.paths_at(off, u, w, pts, kind, p, backend="numpy")
    np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-14)


@pytest.mark.parametrize("kind, p", [(kernels.LINEAR, 1.0), (kernels.SINUSOID, 1.0), (kernels.HOELDER, 0.6)])
@pytest.mark.parametrize("centered", [False, True])
def test_grid_sup_backends_agree(kind, p, centered):
    off, u, w = random_batch(2)
    grid = np.arange(129) / 128
    a = kernels.grid_sup(off, u, w, grid, kind, p, 0.5, centered, backend="numba")
    b = kernels.grid_sup(off, u, w, grid, kind, p, 0.5, centered, backend="numpy")
    np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-14)


def test_grid_sup_matches_paths():
    off, u, w = random_batch(3)
    grid = np.arange(33) / 32
    vals = kernels.paths_at(off, u, w, grid, kernels.SINUSOID, 1.0)
    x0 = kernels.paths_at(off, u, w, [0.25], kernels.SINUSOID, 1.0)
    np.testing.assert_allclose(
        kernels.grid_sup(off, u, w, grid, kernels.SINUSOID, 1.0, 0.25, True),
        np.abs(vals - x0).max(axis=1), rtol=1e-13, atol=1e-15,
    )
    empty = np.diff(off) == 0
    assert np.all(vals[empty] == 0)


def test_numba_deterministic():
    off, u, w = random_batch(4)
    grid = np.arange(257) / 256
    a = kernels.grid_sup(off, u, w, grid, kernels.LINEAR, 1.0, 0.5, True, backend="numba")
    b = kernels.grid_sup(off, u, w, grid, kernels.LINEAR, 1.0, 0.5, True, backend="numba")
    assert a.tobytes() == b.tobytes()


def test_unknown_backend():
    with pytest.raises(ValueError):
        kernels.paths_at([0, 0], [], [], [0.5], kernels.LINEAR, backend="cuda")


def test_auto_dispatch():
    assert kernels.DEFAULT_BACKEND == "auto"
    assert kernels._resolve(None, kernels.LINEAR) == "numba"
    assert kernels._resolve(None, kernels.SINUSOID) == "numba"
    assert kernels._resolve(None, kernels.HOELDER) == "numpy"
    assert kernels._resolve("numba", kernels.HOELDER) == "numba"


def test_env_flag_selects_numpy(monkeypatch):
    import importlib

    monkeypatch.setenv("SUPCHAIN_DISABLE_NUMBA", "1")
    mod = importlib.reload(kernels)
    try:
        assert mod.DEFAULT_BACKEND == "numpy"
        assert mod._resolve(None, mod.LINEAR) == "numpy"
    finally:
        monkeypatch.delenv("SUPCHAIN_DISABLE_NUMBA")
        importlib.reload(kernels)
