"""Closed triangulated surfaces with an intrinsic metric.

Meshes carry no embedding: all geometry (areas, angles, and everything
downstream) derives from positive edge lengths via the law of cosines.
The module also validates orientation-reversing isometric involutions and
extracts their fixed-point curves.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DegenerateTriangleError,
    DisconnectedError,
    FixedSetNotCurveError,
    InconsistentOrientationError,
    NonManifoldError,
    NotInvolutiveError,
    NotIsometricError,
    NotSimplicialError,
    OrientationPreservingError,
)

# Relative tolerance for "equal length" when checking isometry of a vertex map.
ISOMETRY_RTOL = 1e-9


def edge_key(u: int, v: int) -> tuple[int, int]:
    """Canonical undirected edge key."""
    return (u, v) if u < v else (v, u)


def triangle_corner_angles(a: float, b: float, c: float) -> tuple[float, float, float]:
    """Angles of a triangle with side lengths a, b, c.

    Returns the angles opposite a, b, c respectively. Assumes the strict
    triangle inequality already holds; clips rounding noise at the ends of
    the arccos domain.
    """
    ca = (b * b + c * c - a * a) / (2.0 * b * c)
    cb = (a * a + c * c - b * b) / (2.0 * a * c)
    cc = (a * a + b * b - c * c) / (2.0 * a * b)
    clip = lambda x: min(1.0, max(-1.0, x))
    return math.acos(clip(ca)), math.acos(clip(cb)), math.acos(clip(cc))


def layout_triangle(l_ab: float, l_ac: float, l_bc: float) -> tuple[float, float]:
    """Planar coordinates of vertex c when a=(0,0) and b=(l_ab, 0).

    The third vertex is placed in the upper half plane; this is the common
    frame used for triangle gradients and nodal segment lengths.
    """
    x = (l_ab * l_ab + l_ac * l_ac - l_bc * l_bc) / (2.0 * l_ab)
    y2 = l_ac * l_ac - x * x
    return x, math.sqrt(max(y2, 0.0))


class SurfaceMesh:
    """Closed, connected, consistently oriented triangle mesh with edge lengths.

    Parameters are validated by :func:`build_mesh`; direct construction skips
    nothing (the constructor performs full validation as well). All cached
    arrays are read-only after construction; instances are safe to share
    across threads.

    Attributes
    ----------
    vertex_count : int
    triangles : (F, 3) int array, consistent winding
    edge_lengths : dict mapping (u, v) with u < v to a positive length
    edges : (E, 2) int array of undirected edges, lexicographic order
    edge_index : dict mapping edge key to row in ``edges``
    edge_triangles : list of triangle-index pairs per edge
    vertex_triangles : list of triangle index lists per vertex
    triangle_areas : (F,) float array (Heron, from intrinsic lengths)
    corner_angles : (F, 3) float array, angle at each triangle corner
    area : float, total surface area
    euler_characteristic : int
    genus : int
    """

    def __init__(self, vertex_count, triangles, edge_lengths):
        self.vertex_count = int(vertex_count)
        tris = np.asarray(triangles, dtype=np.int64)
        if tris.ndim != 2 or tris.shape[1] != 3 or tris.shape[0] == 0:
            raise ValueError("triangles must be a nonempty (F, 3) array")
        if self.vertex_count <= 0:
            raise ValueError("vertex_count must be positive")
        if tris.min() < 0 or tris.max() >= self.vertex_count:
            raise ValueError("triangle vertex index out of range")
        self.triangles = tris

        for t in tris:
            if len({int(t[0]), int(t[1]), int(t[2])}) != 3:
                raise DegenerateTriangleError(f"triangle {t.tolist()} repeats a vertex")

        self.edge_lengths = {edge_key(int(u), int(v)): float(l) for (u, v), l in edge_lengths.items()}
        if any(l <= 0 for l in self.edge_lengths.values()):
            raise ValueError("edge lengths must be positive")

        self._build_edge_tables()
        self._check_manifold_and_orientation()
        self._check_connected()
        self._compute_geometry()

        chi = self.vertex_count - len(self.edges) + len(self.triangles)
        if chi % 2 != 0 or chi > 2:
            raise NonManifoldError(f"Euler characteristic {chi} is not that of a closed orientable surface")
        self.euler_characteristic = chi
        self.genus = (2 - chi) // 2

        self.triangles.flags.writeable = False
        self.edges.flags.writeable = False
        self.triangle_areas.flags.writeable = False
        self.corner_angles.flags.writeable = False

    def _build_edge_tables(self):
        tris = self.triangles
        edge_index: dict[tuple[int, int], int] = {}
        edges: list[tuple[int, int]] = []
        edge_triangles: list[list[int]] = []
        for ti, (a, b, c) in enumerate(tris):
            for u, v in ((a, b), (b, c), (c, a)):
                k = edge_key(int(u), int(v))
                i = edge_index.get(k)
                if i is None:
                    edge_index[k] = len(edges)
                    edges.append(k)
                    edge_triangles.append([ti])
                else:
                    edge_triangles[i].append(ti)
        missing = [k for k in edges if k not in self.edge_lengths]
        if missing:
            raise ValueError(f"missing edge lengths for {len(missing)} edges, e.g. {missing[0]}")
        self.edges = np.array(edges, dtype=np.int64)
        self.edge_index = edge_index
        self.edge_triangles = edge_triangles

    def _check_manifold_and_orientation(self):
        for k, tlist in zip(self.edge_index, self.edge_triangles):
            if len(tlist) != 2:
                raise NonManifoldError(f"edge {k} belongs to {len(tlist)} triangles")
        directed = set()
        for a, b, c in self.triangles:
            for u, v in ((int(a), int(b)), (int(b), int(c)), (int(c), int(a))):
                if (u, v) in directed:
                    raise InconsistentOrientationError(f"directed edge {(u, v)} appears twice")
                directed.add((u, v))
        # Every undirected edge in 2 triangles + no repeated directed edge
        # forces each edge to appear once in each direction.

    def _check_connected(self):
        used = np.zeros(self.vertex_count, dtype=bool)
        used[self.triangles.ravel()] = True
        if not used.all():
            raise DisconnectedError("mesh has vertices not used by any triangle")
        # BFS over the edge graph.
        adj: list[list[int]] = [[] for _ in range(self.vertex_count)]
        for u, v in self.edges:
            adj[u].append(int(v))
            adj[v].append(int(u))
        seen = np.zeros(self.vertex_count, dtype=bool)
        stack = [0]
        seen[0] = True
        while stack:
            u = stack.pop()
            for w in adj[u]:
                if not seen[w]:
                    seen[w] = True
                    stack.append(w)
        if not seen.all():
            raise DisconnectedError("mesh is not connected")

    def _compute_geometry(self):
        F = len(self.triangles)
        areas = np.empty(F)
        angles = np.empty((F, 3))
        for ti, (a, b, c) in enumerate(self.triangles):
            lab = self.edge_lengths[edge_key(int(a), int(b))]
            lbc = self.edge_lengths[edge_key(int(b), int(c))]
            lca = self.edge_lengths[edge_key(int(c), int(a))]
            # strict triangle inequality on all three sides
            if not (lab + lbc > lca and lbc + lca > lab and lca + lab > lbc):
                raise DegenerateTriangleError(
                    f"triangle {self.triangles[ti].tolist()} violates the triangle inequality"
                )
            s = 0.5 * (lab + lbc + lca)
            areas[ti] = math.sqrt(max(s * (s - lab) * (s - lbc) * (s - lca), 0.0))
            # angle at a is opposite bc, at b opposite ca, at c opposite ab
            ang_bc, ang_ca, ang_ab = triangle_corner_angles(lbc, lca, lab)
            angles[ti] = (ang_bc, ang_ca, ang_ab)
        self.triangle_areas = areas
        self.corner_angles = angles
        self.area = float(areas.sum())

        vtx: list[list[int]] = [[] for _ in range(self.vertex_count)]
        for ti, t in enumerate(self.triangles):
            for v in t:
                vtx[int(v)].append(ti)
        self.vertex_triangles = vtx

    # -- small query helpers -----------------------------------------------

    def edge_length(self, u: int, v: int) -> float:
        return self.edge_lengths[edge_key(u, v)]

    def has_edge(self, u: int, v: int) -> bool:
        return edge_key(u, v) in self.edge_index

    def triangle_lengths(self, ti: int) -> tuple[float, float, float]:
        """Side lengths (ab, bc, ca) of triangle ``ti``."""
        a, b, c = (int(x) for x in self.triangles[ti])
        return (
            self.edge_lengths[edge_key(a, b)],
            self.edge_lengths[edge_key(b, c)],
            self.edge_lengths[edge_key(c, a)],
        )

    def vertex_angle_sums(self) -> np.ndarray:
        """Total corner angle around every vertex."""
        sums = np.zeros(self.vertex_count)
        for ti, t in enumerate(self.triangles):
            for j in range(3):
                sums[int(t[j])] += self.corner_angles[ti, j]
        return sums

    def directed_edge_triangle(self) -> dict[tuple[int, int], int]:
        """Map from directed edge (u, v) to the unique triangle wound (.., u, v, ..)."""
        out = {}
        for ti, (a, b, c) in enumerate(self.triangles):
            out[(int(a), int(b))] = ti
            out[(int(b), int(c))] = ti
            out[(int(c), int(a))] = ti
        return out

    def triangle_lookup(self) -> dict[tuple[int, int, int], int]:
        """Map from sorted vertex triple to triangle index."""
        return {tuple(sorted(int(v) for v in t)): ti for ti, t in enumerate(self.triangles)}


def build_mesh(vertex_count, triangles, lengths) -> SurfaceMesh:
    """Validate and cache a closed triangulated surface.

    Raises
    ------
    NonManifoldError, DisconnectedError, DegenerateTriangleError,
    InconsistentOrientationError
        When the input is not a closed connected oriented triangle mesh with
        valid intrinsic lengths.
    """
    return SurfaceMesh(vertex_count, triangles, lengths)


def genus(mesh: SurfaceMesh) -> int:
    """Genus of a validated mesh, (2 - chi) / 2."""
    return mesh.genus


@dataclass(frozen=True)
class Involution:
    """A validated orientation-reversing isometric simplicial involution.

    ``vertex_map[i]`` is the image of vertex ``i``. ``triangle_map[t]`` is the
    index of the image triangle.
    """

    vertex_map: np.ndarray
    triangle_map: np.ndarray

    def __post_init__(self):
        self.vertex_map.flags.writeable = False
        self.triangle_map.flags.writeable = False

    def fixed_vertices(self) -> np.ndarray:
        return np.nonzero(self.vertex_map == np.arange(len(self.vertex_map)))[0]


def validate_involution(mesh: SurfaceMesh, perm) -> Involution:
    """Certify a vertex permutation as an orientation-reversing isometric involution.

    Raises
    ------
    NotInvolutiveError
        If applying the map twice is not the identity.
    NotSimplicialError
        If some triangle image is not a triangle of the mesh.
    NotIsometricError
        If some edge length changes under the map.
    OrientationPreservingError
        If image triangles keep the cyclic order of their source.
    """
    sigma = np.asarray(perm, dtype=np.int64)
    n = mesh.vertex_count
    if sigma.shape != (n,) or sorted(sigma.tolist()) != list(range(n)):
        raise ValueError("perm must be a permutation of the vertex indices")
    if not np.array_equal(sigma[sigma], np.arange(n)):
        raise NotInvolutiveError("vertex map squared is not the identity")

    for (u, v), l in mesh.edge_lengths.items():
        k = edge_key(int(sigma[u]), int(sigma[v]))
        l2 = mesh.edge_lengths.get(k)
        if l2 is None:
            raise NotSimplicialError(f"image of edge {(u, v)} is not an edge")
        if not math.isclose(l, l2, rel_tol=ISOMETRY_RTOL):
            raise NotIsometricError(f"edge {(u, v)} length {l} maps to {l2}")

    lookup = mesh.triangle_lookup()
    tri_map = np.empty(len(mesh.triangles), dtype=np.int64)
    any_preserving = False
    for ti, (a, b, c) in enumerate(mesh.triangles):
        img = (int(sigma[a]), int(sigma[b]), int(sigma[c]))
        tj = lookup.get(tuple(sorted(img)))
        if tj is None:
            raise NotSimplicialError(f"image of triangle {ti} is not a triangle")
        tri_map[ti] = tj
        x, y, z = (int(v) for v in mesh.triangles[tj])
        # rotations of the stored winding
        forward = {(x, y, z), (y, z, x), (z, x, y)}
        if img in forward:
            any_preserving = True
        # else the image appears with reversed cyclic order
    if any_preserving:
        raise OrientationPreservingError(
            "triangle images keep their cyclic order; only orientation-reversing involutions are analyzed"
        )
    return Involution(vertex_map=sigma.copy(), triangle_map=tri_map)


@dataclass
class FixedCurve:
    """Fixed-point set of an involution, resolved by mesh edges.

    ``components`` are closed vertex loops (no repeats within a loop);
    ``arc_lengths[c][i]`` is the length of the edge from vertex ``i`` to
    ``i+1`` (cyclically) in component ``c``.
    """

    components: list[list[int]] = field(default_factory=list)
    arc_lengths: list[list[float]] = field(default_factory=list)
    separating: bool = False

    @property
    def component_count(self) -> int:
        return len(self.components)

    def total_length(self) -> float:
        return float(sum(sum(ls) for ls in self.arc_lengths))

    def vertex_set(self) -> set[int]:
        return {v for comp in self.components for v in comp}

    def edge_set(self) -> set[tuple[int, int]]:
        out = set()
        for comp in self.components:
            k = len(comp)
            for i in range(k):
                out.add(edge_key(comp[i], comp[(i + 1) % k]))
        return out


def fixed_point_set(mesh: SurfaceMesh, inv: Involution) -> FixedCurve:
    """Organize the fixed vertices of an involution into closed edge loops.

    An empty fixed set is allowed (free involutions). Raises
    :class:`FixedSetNotCurveError` when fixed vertices do not form disjoint
    simple loops along fixed edges, or when some edge is flipped end-to-end
    by the map; both signal a symmetry axis that cuts through triangle
    interiors instead of running along edges.
    """
    sigma = inv.vertex_map
    fixed = set(int(v) for v in inv.fixed_vertices())

    for u, v in mesh.edges:
        u, v = int(u), int(v)
        if sigma[u] == v and sigma[v] == u:
            raise FixedSetNotCurveError(
                f"edge {(u, v)} is flipped end-to-end; its midpoint is an unresolved fixed point"
            )

    if not fixed:
        curve = FixedCurve([], [], False)
        curve.separating = False
        return curve

    nbrs: dict[int, list[int]] = {v: [] for v in fixed}
    for u, v in mesh.edges:
        u, v = int(u), int(v)
        if u in fixed and v in fixed:
            nbrs[u].append(v)
            nbrs[v].append(u)
    bad = [v for v, ns in nbrs.items() if len(ns) != 2]
    if bad:
        raise FixedSetNotCurveError(
            f"fixed vertex {bad[0]} has {len(nbrs[bad[0]])} fixed neighbors (expected 2)"
        )

    components: list[list[int]] = []
    remaining = set(fixed)
    while remaining:
        start = min(remaining)
        loop = [start]
        prev, cur = None, start
        while True:
            a, b = nbrs[cur]
            nxt = b if a == prev else a
            if nxt == start:
                break
            loop.append(nxt)
            prev, cur = cur, nxt
        if len(loop) < 3:
            raise FixedSetNotCurveError("fixed loop shorter than 3 vertices")
        components.append(loop)
        remaining -= set(loop)

    components.sort(key=min)
    arc_lengths = []
    for comp in components:
        k = len(comp)
        arc_lengths.append([mesh.edge_length(comp[i], comp[(i + 1) % k]) for i in range(k)])

    curve = FixedCurve(components, arc_lengths, False)
    if len(components) > mesh.genus + 1:
        # Topologically impossible for a genuine orientation-reversing involution.
        raise FixedSetNotCurveError(
            f"{len(components)} fixed loops exceed genus + 1 = {mesh.genus + 1}"
        )
    curve.separating = is_separating(mesh, curve, inv)
    return curve


def complement_components(mesh: SurfaceMesh, curve: FixedCurve) -> np.ndarray:
    """Label triangles by connected component of the surface cut along the curve.

    Flood fill over triangle adjacency, blocked across curve edges. Returns an
    int array of component ids, numbered by first-seen triangle index.
    """
    blocked = {mesh.edge_index[k] for k in curve.edge_set()}
    F = len(mesh.triangles)
    label = np.full(F, -1, dtype=np.int64)
    comp = 0
    for seed in range(F):
        if label[seed] >= 0:
            continue
        stack = [seed]
        label[seed] = comp
        while stack:
            t = stack.pop()
            a, b, c = (int(x) for x in mesh.triangles[t])
            for u, v in ((a, b), (b, c), (c, a)):
                ei = mesh.edge_index[edge_key(u, v)]
                if ei in blocked:
                    continue
                for t2 in mesh.edge_triangles[ei]:
                    if label[t2] < 0:
                        label[t2] = comp
                        stack.append(t2)
        comp += 1
    return label


def is_separating(mesh: SurfaceMesh, curve: FixedCurve, inv: Involution | None = None) -> bool:
    """Whether deleting the curve disconnects the surface.

    With an involution supplied, additionally require that the map exchanges
    the sides (no complement component maps to itself).
    """
    if not curve.components:
        return False
    label = complement_components(mesh, curve)
    ncomp = int(label.max()) + 1
    if ncomp < 2:
        return False
    if inv is not None:
        for t in range(len(mesh.triangles)):
            if label[int(inv.triangle_map[t])] == label[t]:
                return False
    return True
