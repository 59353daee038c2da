"""Triangle meshes, ASCII OFF I/O, and a bounding-volume hierarchy for line queries."""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class MeshError(ValueError):
    pass


@dataclass
class BVH:
    lo: np.ndarray        # (N, 3) node box minima
    hi: np.ndarray        # (N, 3) node box maxima
    left: np.ndarray      # (N,) child index, -1 for leaves
    right: np.ndarray
    start: np.ndarray     # (N,) first triangle of a leaf in the reordered arrays
    count: np.ndarray
    v0: np.ndarray        # (T, 3) reordered triangle data
    e1: np.ndarray
    e2: np.ndarray
    order: np.ndarray     # reordered -> original triangle index

    @property
    def depth_bound(self) -> int:
        return int(self.left.shape[0])


def build_bvh(v0: np.ndarray, e1: np.ndarray, e2: np.ndarray, leaf_size: int = 4) -> BVH:
    """Median-split AABB tree over triangles (v0, v0 + e1, v0 + e2)."""
    T = v0.shape[0]
    if T == 0:
        z = np.zeros((0, 3))
        return BVH(np.zeros((1, 3)), np.zeros((1, 3)), np.full(1, -1, np.int64), np.full(1, -1, np.int64),
                   np.zeros(1, np.int64), np.zeros(1, np.int64), z, z.copy(), z.copy(), np.zeros(0, np.int64))
    corners = np.stack([v0, v0 + e1, v0 + e2], axis=1)
    tlo = corners.min(axis=1)
    thi = corners.max(axis=1)
    cent = corners.mean(axis=1)
    pad = 1e-9 * max(1.0, float(np.abs(corners).max()))
    order = np.arange(T)
    lo, hi, left, right, start, count = [], [], [], [], [], []

    def new_node():
        lo.append(None); hi.append(None); left.append(-1); right.append(-1); start.append(0); count.append(0)
        return len(lo) - 1

    root = new_node()
    stack = [(root, 0, T)]
    while stack:
        node, a, b = stack.pop()
        idx = order[a:b]
        lo[node] = tlo[idx].min(axis=0) - pad
        hi[node] = thi[idx].max(axis=0) + pad
        if b - a <= leaf_size:
            start[node], count[node] = a, b - a
            continue
        c = cent[idx]
        axis = int(np.argmax(c.max(axis=0) - c.min(axis=0)))
        mid = (b - a) // 2
        part = np.argpartition(c[:, axis], mid)
        order[a:b] = idx[part]
        l, r = new_node(), new_node()
        left[node], right[node] = l, r
        stack.append((r, a + mid, b))
        stack.append((l, a, a + mid))
    return BVH(np.array(lo, float).reshape(-1, 3), np.array(hi, float).reshape(-1, 3),
               np.array(left, np.int64), np.array(right, np.int64),
               np.array(start, np.int64), np.array(count, np.int64),
               np.ascontiguousarray(v0[order]), np.ascontiguousarray(e1[order]),
               np.ascontiguousarray(e2[order]), order)


@dataclass
class SurfaceMesh:
    vertices: np.ndarray
    triangles: np.ndarray
    oriented: bool = True
    _bvh: BVH | None = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, float).reshape(-1, 3)
        self.triangles = np.asarray(self.triangles, np.int64).reshape(-1, 3)
        if self.triangles.size and (self.triangles.min() < 0 or self.triangles.max() >= len(self.vertices)):
            raise MeshError("triangle index out of range")
        bad = np.nonzero(self.triangle_areas() <= 1e-12)[0]
        if bad.size:
            raise MeshError(f"degenerate triangle(s), first at index {bad[0]}")

    @property
    def edges(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        P = self.vertices[self.triangles]
        return P[:, 0], P[:, 1] - P[:, 0], P[:, 2] - P[:, 0]

    def triangle_areas(self) -> np.ndarray:
        if not self.triangles.size:
            return np.zeros(0)
        _, e1, e2 = self.edges
        return 0.5 * np.linalg.norm(np.cross(e1, e2), axis=1)

    @property
    def area(self) -> float:
        return float(np.sum(self.triangle_areas()))

    @property
    def bounding_radius(self) -> float:
        return float(np.linalg.norm(self.vertices, axis=1).max()) if len(self.vertices) else 0.0

    @property
    def bvh(self) -> BVH:
        if self._bvh is None:
            self._bvh = build_bvh(*self.edges)
        return self._bvh

    def transformed(self, R: np.ndarray) -> "SurfaceMesh":
        return SurfaceMesh(self.vertices @ np.asarray(R, float).T, self.triangles.copy(), self.oriented)

    def __len__(self) -> int:
        return len(self.triangles)


def empty_mesh() -> SurfaceMesh:
    return SurfaceMesh(np.zeros((0, 3)), np.zeros((0, 3), np.int64))


def flat_disc_mesh(radius: float = 1.0, segments: int = 256, rings: int = 8) -> SurfaceMesh:
    """Polygonal disc in the x1x2-plane, concentric rings of ``segments`` vertices.

    The interior fan vertex sits slightly off the origin, between two spokes,
    so lines through the centre cross a triangle interior.
    """
    ang = (segments // 16 + 0.5) * 2 * np.pi / segments
    off = 0.3 * radius / rings
    verts = [np.array([off * np.cos(ang), off * np.sin(ang), 0.0])]
    th = 2 * np.pi * np.arange(segments) / segments
    for r in range(1, rings + 1):
        rr = radius * r / rings
        verts.extend(np.stack([rr * np.cos(th), rr * np.sin(th), np.zeros(segments)], axis=1))
    V = np.array(verts)
    tris = []
    for k in range(segments):
        tris.append((0, 1 + k, 1 + (k + 1) % segments))
    for r in range(1, rings):
        a0 = 1 + (r - 1) * segments
        b0 = 1 + r * segments
        for k in range(segments):
            k1 = (k + 1) % segments
            tris.append((a0 + k, b0 + k, b0 + k1))
            tris.append((a0 + k, b0 + k1, a0 + k1))
    return SurfaceMesh(V, np.array(tris))


def icosphere(level: int = 5, radius: float = 1.0, rotation=None) -> SurfaceMesh:
    """Subdivided icosahedron with vertices on the sphere of the given radius.

    Coordinate axes pass through vertices; pass ``rotation`` (3x3) to move them.
    """
    t = (1.0 + 5 ** 0.5) / 2.0
    V = [(-1, t, 0), (1, t, 0), (-1, -t, 0), (1, -t, 0), (0, -1, t), (0, 1, t), (0, -1, -t), (0, 1, -t),
         (t, 0, -1), (t, 0, 1), (-t, 0, -1), (-t, 0, 1)]
    F = [(0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11), (1, 5, 9), (5, 11, 4), (11, 10, 2),
         (10, 7, 6), (7, 1, 8), (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9), (4, 9, 5),
         (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1)]
    verts = [np.array(v, float) / np.linalg.norm(v) for v in V]
    for _ in range(level):
        cache: dict[tuple[int, int], int] = {}

        def mid(i, j):
            key = (i, j) if i < j else (j, i)
            if key not in cache:
                m = verts[i] + verts[j]
                verts.append(m / np.linalg.norm(m))
                cache[key] = len(verts) - 1
            return cache[key]

        nf = []
        for a, b, c in F:
            ab, bc, ca = mid(a, b), mid(b, c), mid(c, a)
            nf += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        F = nf
    V = radius * np.array(verts)
    if rotation is not None:
        V = V @ np.asarray(rotation, float).T
    return SurfaceMesh(V, np.array(F))


def read_off(path) -> SurfaceMesh:
    """ASCII OFF: 'OFF' header, 'nv nf ne' counts, vertex lines, face lines.

    Polygonal faces are fan-triangulated; '#' comments are ignored.
    """
    lines = []
    for raw in Path(path).read_text().splitlines():
        s = raw.split("#", 1)[0].strip()
        if s:
            lines.append(s)
    if not lines or not lines[0].startswith("OFF"):
        raise MeshError("missing OFF header")
    head = lines[0][3:].split()
    rest = lines[1:]
    if not head:
        head, rest = rest[0].split(), rest[1:]
    try:
        nv, nf = int(head[0]), int(head[1])
    except (IndexError, ValueError):
        raise MeshError("malformed OFF counts line") from None
    if len(rest) < nv + nf:
        raise MeshError(f"OFF file truncated: expected {nv} vertices and {nf} faces")
    V = np.array([[float(c) for c in rest[i].split()[:3]] for i in range(nv)]).reshape(-1, 3)
    tris = []
    for line in rest[nv:nv + nf]:
        vals = [int(c) for c in line.split()]
        k, idx = vals[0], vals[1:1 + vals[0]]
        if k < 3 or len(idx) != k:
            raise MeshError(f"malformed OFF face line: {line!r}")
        tris.extend((idx[0], idx[i], idx[i + 1]) for i in range(1, k - 1))
    return SurfaceMesh(V, np.array(tris, np.int64).reshape(-1, 3))


def write_off(mesh: SurfaceMesh, path) -> None:
    out = ["OFF", f"{len(mesh.vertices)} {len(mesh.triangles)} 0"]
    out += [" ".join(repr(float(c)) for c in v) for v in mesh.vertices]
    out += ["3 " + " ".join(str(int(i)) for i in t) for t in mesh.triangles]
    Path(path).write_text("\n".join(out) + "\n")
