import math
import os
import subprocess
import sys

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given
from hypothesis import strategies as st

from cracktip import _kernels
from cracktip.crack import CrackGraph
from cracktip.fem import triangle_areas
from cracktip.mesh import build_mesh

needs_numba = pytest.mark.skipif(_kernels.NUMBA_IMPL is None, reason="numba not installed")
BACKENDS = [_kernels.NUMPY_IMPL] + ([_kernels.NUMBA_IMPL] if _kernels.NUMBA_IMPL is not None else [])


@pytest.fixture(scope="module")
def mesh():
    return build_mesh(CrackGraph.from_function(lambda x: 0.1 * x * x, 33, x_end=-1.1), 0.2)


def assemble(impl, mesh):
    rows, cols, vals = impl.stiffness(mesh.nodes, mesh.tris)
    n = mesh.nodes.shape[0]
    return sp.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()


@pytest.mark.parametrize("impl", BACKENDS, ids=lambda i: i.name)
def test_stiffness_energy_of_linear_functions(impl, mesh):
    K = assemble(impl, mesh)
    one = np.ones(mesh.nodes.shape[0])
    np.testing.assert_allclose(K @ one, 0.0, atol=1e-12)
    area = triangle_areas(mesh).sum()
    for a, b in [(1.0, 0.0), (0.0, 1.0), (0.6, -0.8)]:
        u = a * mesh.nodes[:, 0] + b * mesh.nodes[:, 1]
        assert u @ K @ u == pytest.approx((a * a + b * b) * area, rel=1e-12)


@pytest.mark.parametrize("impl", BACKENDS, ids=lambda i: i.name)
def test_gradients_exact_for_linear_functions(impl, mesh):
    u = 0.3 * mesh.nodes[:, 0] - 1.7 * mesh.nodes[:, 1] + 2.0
    g = impl.gradients(mesh.nodes, mesh.tris, u)
    np.testing.assert_allclose(g, np.tile([0.3, -1.7], (mesh.tris.shape[0], 1)), atol=1e-10)


@pytest.mark.parametrize("impl", BACKENDS, ids=lambda i: i.name)
@pytest.mark.parametrize("center,r", [((0.0, 0.0), 0.5), ((0.2, -0.1), 0.3), ((-0.3, 0.05), 0.01)])
def test_disk_clip_areas_sum_to_disk(impl, mesh, center, r):
    clip = impl.disk_clip_areas(mesh.nodes, mesh.tris, center[0], center[1], r)
    assert clip.sum() == pytest.approx(math.pi * r * r, rel=1e-12)
    assert np.all(clip <= triangle_areas(mesh) + 1e-15)


@pytest.mark.parametrize("impl", BACKENDS, ids=lambda i: i.name)
def test_disk_clip_covering_disk(impl, mesh):
    clip = impl.disk_clip_areas(mesh.nodes, mesh.tris, 0.0, 0.0, 2.0)
    np.testing.assert_allclose(clip, triangle_areas(mesh), rtol=1e-12, atol=1e-15)


@pytest.mark.parametrize("impl", BACKENDS, ids=lambda i: i.name)
def test_pair_series_small(impl):
    ref = sum(2.0 / (8.0 * k * k - 1.0) for k in range(2, 101))
    assert impl.pair_series(100) == pytest.approx(ref, rel=1e-14)


@needs_numba
@given(st.lists(st.integers(min_value=2, max_value=100_000), min_size=1, max_size=20))
def test_gamma_backends_agree(ks):
    k = np.array(ks, dtype=np.float64)
    np.testing.assert_allclose(_kernels.NUMBA_IMPL.solve_gamma(k), _kernels.NUMPY_IMPL.solve_gamma(k), rtol=0, atol=1e-17)


@needs_numba
@given(seed=st.integers(min_value=0, max_value=2**32 - 1), r=st.floats(min_value=0.05, max_value=1.5))
def test_field_kernels_agree(mesh, seed, r):
    vals = np.random.default_rng(seed).standard_normal(mesh.nodes.shape[0])
    nb, npy = _kernels.NUMBA_IMPL, _kernels.NUMPY_IMPL
    np.testing.assert_allclose(nb.gradients(mesh.nodes, mesh.tris, vals), npy.gradients(mesh.nodes, mesh.tris, vals), atol=1e-12)
    np.testing.assert_allclose(
        nb.disk_clip_areas(mesh.nodes, mesh.tris, 0.1, 0.0, r), npy.disk_clip_areas(mesh.nodes, mesh.tris, 0.1, 0.0, r), atol=1e-15
    )
    for a, b in zip(nb.stiffness(mesh.nodes, mesh.tris), npy.stiffness(mesh.nodes, mesh.tris)):
        np.testing.assert_allclose(a, b, atol=1e-13)


@pytest.mark.parametrize("flag,expected", [("0", "numpy"), ("off", "numpy")])
def test_env_flag_selects_numpy(flag, expected):
    env = {**os.environ, "CRACKTIP_NUMBA": flag}
    out = subprocess.run(
        [sys.executable, "-c", "from cracktip import _kernels; print(_kernels.BACKEND)"],
        env=env,
        capture_output=True,
        text=True,
        check=True,
    )
    assert out.stdout.strip() == expected
