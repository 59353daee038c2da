from __future__ import annotations

import math
import os
import subprocess
import sys

import numpy as np
import pytest

from finslerkit._accel import HAVE_NUMBA
from finslerkit.crofton._kernels import BARY_EPS, count_hits_brute, count_hits_bvh
from finslerkit.crofton.lines import line_generator, sample_lines
from finslerkit.crofton.mesh import (MeshError, SurfaceMesh, build_bvh, empty_mesh, flat_disc_mesh, icosphere,
                                     read_off, write_off)
from finslerkit.geometry_core import rotation_matrix

ROT = rotation_matrix([1.0, 2.0, 3.0], 0.7)


def test_mesh_validation():
    with pytest.raises(MeshError, match="out of range"):
        SurfaceMesh(np.eye(3), [[0, 1, 3]])
    with pytest.raises(MeshError, match="degenerate"):
        SurfaceMesh([[0, 0, 0], [1, 0, 0], [2, 0, 0]], [[0, 1, 2]])
    assert len(empty_mesh()) == 0 and empty_mesh().area == 0.0


def test_builtin_mesh_areas():
    disc = flat_disc_mesh(1.0, 256, 8)
    # inscribed 256-gon
    assert disc.area == pytest.approx(0.5 * 256 * math.sin(2 * math.pi / 256), rel=1e-12)
    sphere = icosphere(4)
    assert sphere.area == pytest.approx(4 * math.pi, rel=2e-3)
    assert sphere.area < 4 * math.pi
    assert np.allclose(np.linalg.norm(sphere.vertices, axis=1), 1.0)
    assert sphere.transformed(ROT).area == pytest.approx(sphere.area, rel=1e-13)


def test_off_round_trip(tmp_path):
    mesh = icosphere(2, 1.3, ROT)
    path = tmp_path / "s.off"
    write_off(mesh, path)
    back = read_off(path)
    assert np.array_equal(back.vertices, mesh.vertices)
    assert np.array_equal(back.triangles, mesh.triangles)


def test_off_polygons_and_comments(tmp_path):
    path = tmp_path / "q.off"
    path.write_text("OFF # a unit square\n4 1 0\n0 0 0\n1 0 0\n1 1 0\n0 1 0\n# face\n4 0 1 2 3\n")
    m = read_off(path)
    assert len(m) == 2 and m.area == pytest.approx(1.0)


@pytest.mark.parametrize("text,match", [
    ("PLY\n", "header"),
    ("OFF\n3 x 0\n", "counts"),
    ("OFF\n3 1 0\n0 0 0\n1 0 0\n", "truncated"),
    ("OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n2 0 1\n", "face"),
])
def test_off_errors(tmp_path, text, match):
    path = tmp_path / "bad.off"
    path.write_text(text)
    with pytest.raises(MeshError, match=match):
        read_off(path)


def test_bvh_contains_all_triangles():
    m = icosphere(3, 1.0, ROT)
    bvh = build_bvh(*m.edges)
    leaves = bvh.count > 0
    assert np.sum(bvh.count[leaves]) == len(m)
    assert sorted(bvh.order.tolist()) == list(range(len(m)))
    P = m.vertices[m.triangles[bvh.order]]
    for node in np.nonzero(leaves)[0]:
        s, c = bvh.start[node], bvh.count[node]
        pts = P[s:s + c].reshape(-1, 3)
        assert np.all(pts >= bvh.lo[node] - 1e-12) and np.all(pts <= bvh.hi[node] + 1e-12)


def _lines(n, R, seed=5):
    u, p = sample_lines(line_generator(seed, 0), n, R)
    return p, u


@pytest.mark.parametrize("mesh,R", [(flat_disc_mesh(1.0, 64, 4), 1.0), (icosphere(3, 1.0, ROT), 1.2)])
def test_kernels_agree(mesh, R):
    """numba/numpy x bvh/brute give identical counts, including the degenerate flags."""
    p, u = _lines(3000, R)
    bvh = mesh.bvh
    ref = count_hits_brute(p, u, bvh.v0, bvh.e1, bvh.e2, use_numba=False)
    assert np.array_equal(count_hits_bvh(p, u, bvh, use_numba=False), ref)
    if HAVE_NUMBA:
        assert np.array_equal(count_hits_bvh(p, u, bvh, use_numba=True), ref)
        assert np.array_equal(count_hits_brute(p, u, bvh.v0, bvh.e1, bvh.e2, use_numba=True), ref)


@pytest.mark.parametrize("use_numba", [False, True] if HAVE_NUMBA else [False])
def test_edge_hits_flagged(use_numba):
    m = SurfaceMesh([[0, 0, 0], [1, 0, 0], [0, 1, 0], [1, 1, 0]], [[0, 1, 2], [1, 3, 2]])
    o = np.array([[0.5, 0.5, 0.0], [0.25, 0.25, 0.0], [0.5, 0.5 + 1e-12, 0.0], [3.0, 3.0, 0.0],
                  [0.75, 0.75, 0.0]])
    d = np.tile([0.0, 0.0, 1.0], (len(o), 1))
    got = count_hits_bvh(o, d, m.bvh, use_numba=use_numba)
    assert got.tolist() == [-1, 1, -1, 0, 1]
    # parallel to the plane: never a transversal hit
    assert count_hits_bvh(np.array([[0.3, 0.3, 0.0]]), np.array([[1.0, 0.0, 0.0]]), m.bvh,
                          use_numba=use_numba).tolist() == [0]
    assert BARY_EPS == 1e-9


def test_empty_mesh_counts():
    p, u = _lines(10, 1.0)
    assert np.array_equal(count_hits_bvh(p, u, empty_mesh().bvh), np.zeros(10))


def test_env_flag_selects_backend():
    code = "from finslerkit import backend; print(backend())"
    env = dict(os.environ, FINSLERKIT_BACKEND="numpy")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "numpy"
    env["FINSLERKIT_BACKEND"] = "fortran"
    bad = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True)
    assert bad.returncode != 0 and "FINSLERKIT_BACKEND" in bad.stderr


def test_numpy_backend_estimate_matches_numba():
    """A full Crofton estimate under the numpy backend is identical to the default backend's."""
    code = ("from finslerkit.crofton import crofton_area_euclidean, flat_disc_mesh;"
            "e = crofton_area_euclidean(flat_disc_mesh(1.0, 64, 4), 20000, 3, 1.0, batch_size=5000);"
            "print(repr(e.estimate), repr(e.stderr), e.resampled)")
    outs = []
    for be in ("numpy", "numba"):
        env = dict(os.environ, FINSLERKIT_BACKEND=be)
        outs.append(subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True,
                                   check=True).stdout)
    assert outs[0] == outs[1]
