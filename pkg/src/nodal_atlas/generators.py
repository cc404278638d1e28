"""Built-in symmetric test surfaces.

Two families: flat square-grid tori with a reflection (analytic oracle
surface), and a genus-2 surface obtained by slitting a torus grid along a
row segment and mirroring the one-holed result across the opened slit.
The genus-2 lengths are conformally adjusted so every vertex carries the
same strictly negative discrete curvature (angle sum > 2pi).
"""

from __future__ import annotations

import math

import numpy as np
from scipy.sparse.linalg import spsolve

from .errors import BadResolutionError, DegenerateTriangleError
from .mesh import Involution, SurfaceMesh, build_mesh, edge_key, validate_involution


def _torus_tables(n: int, l1: float, l2: float, reflection_symmetric: bool):
    """Vertex/triangle/length tables for an n-by-n grid torus.

    With ``reflection_symmetric`` the cell diagonals alternate between the
    lower and upper half so the reflection (x, y) -> (x, -y) maps triangles
    to triangles; otherwise every cell uses the main diagonal.
    """
    h1, h2 = l1 / n, l2 / n
    diag = math.hypot(h1, h2)

    def vid(i: int, j: int) -> int:
        return (j % n) * n + (i % n)

    triangles = []
    lengths: dict[tuple[int, int], float] = {}

    def add_len(u, v, l):
        lengths[edge_key(u, v)] = l

    for j in range(n):
        for i in range(n):
            sw, se = vid(i, j), vid(i + 1, j)
            nw, ne = vid(i, j + 1), vid(i + 1, j + 1)
            add_len(sw, se, h1)
            add_len(sw, nw, h2)
            main = (not reflection_symmetric) or j < n // 2
            if main:
                triangles.append((sw, se, ne))
                triangles.append((sw, ne, nw))
                add_len(sw, ne, diag)
            else:
                triangles.append((sw, se, nw))
                triangles.append((se, ne, nw))
                add_len(se, nw, diag)
    return triangles, lengths, vid


def gen_flat_torus(n: int, l1: float, l2: float) -> tuple[SurfaceMesh, Involution]:
    """Flat torus of side lengths l1, l2 on an n-by-n grid, with its reflection.

    Each grid cell is split into two right triangles; the diagonal pattern is
    mirrored across the rows y = 0 and y = l2/2 so the reflection
    (x, y) -> (x, -y) is simplicial. Returns the validated mesh and the
    reflection involution (fixed set: the two rows above).

    Raises
    ------
    BadResolutionError
        If n is odd (the reflection would not be simplicial) or n < 4.
    """
    if n % 2 != 0 or n < 4:
        raise BadResolutionError(f"torus grid needs even n >= 4, got {n}")
    triangles, lengths, vid = _torus_tables(n, float(l1), float(l2), reflection_symmetric=True)
    mesh = build_mesh(n * n, triangles, lengths)
    perm = np.empty(n * n, dtype=np.int64)
    for j in range(n):
        for i in range(n):
            perm[vid(i, j)] = vid(i, (n - j) % n)
    return mesh, validate_involution(mesh, perm)


def torus_glide_permutation(n: int) -> np.ndarray:
    """Vertex permutation of the glide (x, y) -> (x + l1/2, -y) on the grid torus.

    A free orientation-reversing involution (no fixed vertices); useful for
    exercising the empty-fixed-set path.
    """
    if n % 2 != 0 or n < 4:
        raise BadResolutionError(f"glide needs even n >= 4, got {n}")
    perm = np.empty(n * n, dtype=np.int64)
    for j in range(n):
        for i in range(n):
            perm[(j % n) * n + (i % n)] = ((n - j) % n) * n + ((i + n // 2) % n)
    return perm


def flat_torus_mode(n: int, l1: float, l2: float, kx: int, ky: int,
                    trig_x: str = "cos", trig_y: str = "cos") -> np.ndarray:
    """Vertex samples of a product harmonic on the grid torus.

    Returns the unnormalized vector trig_x(2 pi kx x / l1) * trig_y(2 pi ky y / l2)
    sampled at grid vertices; these are exact eigenvectors of the assembled
    operators on the flat grid.
    """
    fx = np.cos if trig_x == "cos" else np.sin
    fy = np.cos if trig_y == "cos" else np.sin
    i = np.arange(n)
    vx = fx(2.0 * math.pi * kx * i / n)
    vy = fy(2.0 * math.pi * ky * i / n)
    return np.outer(vy, vx).ravel()  # vid = j*n + i


# -- genus-2 double ------------------------------------------------------------


def _slit_double_tables(n: int):
    """Combinatorics of the slit-torus double: triangles, base lengths, vertex map."""
    h = 1.0 / n
    diag = math.hypot(h, h)
    k = n // 2  # slit spans k edges along row 0

    def vid(i: int, j: int) -> int:
        return (j % n) * n + (i % n)

    base_tris, _, _ = _torus_tables(n, 1.0, 1.0, reflection_symmetric=False)

    n_orig = n * n
    dup = {vid(i, 0): n_orig + (i - 1) for i in range(1, k)}  # slit-interior duplicates
    n_cut = n_orig + (k - 1)

    def remap_below(tri):
        # Triangles in the wrap row (touching row 0 from below) contain a row n-1 vertex.
        if not any(v // n == n - 1 for v in tri):
            return tri
        return tuple(dup.get(v, v) for v in tri)

    cut_tris = [remap_below(t) for t in base_tris]

    boundary = {vid(i, 0) for i in range(k + 1)} | set(dup.values())

    mirror = {}
    next_id = n_cut
    for v in range(n_cut):
        if v in boundary:
            mirror[v] = v
        else:
            mirror[v] = next_id
            next_id += 1
    total_v = next_id

    mirror_tris = [(mirror[a], mirror[c], mirror[b]) for (a, b, c) in cut_tris]
    triangles = cut_tris + mirror_tris

    # grid coordinate of every vertex in the base torus (mirror copies inherit)
    coord = np.empty((total_v, 2), dtype=np.int64)
    for v in range(n_orig):
        coord[v] = (v % n, v // n)
    for src, d in dup.items():
        coord[d] = coord[src]
    for src, m in mirror.items():
        coord[m] = coord[src]

    lengths: dict[tuple[int, int], float] = {}
    for tri in triangles:
        for a, b in ((tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0])):
            key = edge_key(a, b)
            if key in lengths:
                continue
            (ia, ja), (ib, jb) = coord[a], coord[b]
            di = min((ia - ib) % n, (ib - ia) % n)
            dj = min((ja - jb) % n, (jb - ja) % n)
            if (di, dj) in ((1, 0), (0, 1)):
                lengths[key] = h
            elif (di, dj) == (1, 1):
                lengths[key] = diag
            else:  # pragma: no cover - construction guarantee
                raise AssertionError("unexpected edge in slit double")

    sigma = np.empty(total_v, dtype=np.int64)
    for v, m in mirror.items():
        sigma[v] = m
        sigma[m] = v
    return triangles, lengths, sigma, total_v


def _uniformize(triangles, lengths, sigma, total_v, max_iter=60, tol=1e-11):
    """Conformal length factors giving every vertex angle sum 2pi + 4pi/V.

    Newton iteration on vertex log-factors u, with lengths
    exp((u_a + u_b)/2) * l0. The Jacobian of the angle-sum map is minus the
    cotangent stiffness matrix of the current lengths, so each step solves a
    sparse symmetric system. Steps are damped if a triangle inequality would
    break, and u is symmetrized under the involution every iteration.
    """
    from scipy import sparse

    tris = np.asarray(triangles, dtype=np.int64)
    F = len(tris)
    base = np.empty((F, 3))
    for t, (a, b, c) in enumerate(tris):
        base[t] = (
            lengths[edge_key(int(a), int(b))],
            lengths[edge_key(int(b), int(c))],
            lengths[edge_key(int(c), int(a))],
        )

    target = 2.0 * math.pi + 4.0 * math.pi / total_v
    u = np.zeros(total_v)

    def tri_lengths(uvec):
        ua, ub, uc = uvec[tris[:, 0]], uvec[tris[:, 1]], uvec[tris[:, 2]]
        lab = base[:, 0] * np.exp(0.5 * (ua + ub))
        lbc = base[:, 1] * np.exp(0.5 * (ub + uc))
        lca = base[:, 2] * np.exp(0.5 * (uc + ua))
        return lab, lbc, lca

    def valid(lab, lbc, lca):
        return bool(np.all(lab + lbc > lca) and np.all(lbc + lca > lab) and np.all(lca + lab > lbc))

    def angle_data(uvec):
        lab, lbc, lca = tri_lengths(uvec)
        # angle at a is opposite bc, etc.
        cos_a = (lca**2 + lab**2 - lbc**2) / (2 * lca * lab)
        cos_b = (lab**2 + lbc**2 - lca**2) / (2 * lab * lbc)
        cos_c = (lbc**2 + lca**2 - lab**2) / (2 * lbc * lca)
        ang = np.arccos(np.clip(np.stack([cos_a, cos_b, cos_c], axis=1), -1.0, 1.0))
        sums = np.zeros(total_v)
        np.add.at(sums, tris[:, 0], ang[:, 0])
        np.add.at(sums, tris[:, 1], ang[:, 1])
        np.add.at(sums, tris[:, 2], ang[:, 2])
        return ang, sums

    for _ in range(max_iter):
        ang, sums = angle_data(u)
        resid = sums - target
        if np.max(np.abs(resid)) < tol:
            break
        # cotangent stiffness at current lengths
        cot = 1.0 / np.tan(ang)
        rows, cols, vals = [], [], []
        for corner, (ea, eb) in enumerate(((1, 2), (2, 0), (0, 1))):
            # corner angle is opposite the edge (ea, eb)
            w = 0.5 * cot[:, corner]
            i, j = tris[:, ea], tris[:, eb]
            rows.extend([i, j, i, j])
            cols.extend([j, i, i, j])
            vals.extend([-w, -w, w, w])
        S = sparse.csr_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=(total_v, total_v),
        )
        # dTheta/du = -S; pin vertex 0 to remove the constant kernel
        keep = np.arange(1, total_v)
        delta = np.zeros(total_v)
        delta[keep] = spsolve(S[keep][:, keep].tocsc(), resid[keep])
        step = 1.0
        while step > 1e-6:
            trial = u + step * delta
            trial = 0.5 * (trial + trial[sigma])
            if valid(*tri_lengths(trial)):
                u = trial
                break
            step *= 0.5
        else:  # pragma: no cover - safeguards a pathological mesh
            raise DegenerateTriangleError("curvature adjustment could not keep triangles valid")

    ang, sums = angle_data(u)
    if np.min(sums) <= 2.0 * math.pi:
        raise DegenerateTriangleError("curvature adjustment failed to reach negative curvature")
    return u


def gen_genus2(subdiv: int = 0) -> tuple[SurfaceMesh, Involution]:
    """Genus-2 mesh with a separating fixed curve and negative vertex curvature.

    A torus grid is slit along half of one row, the one-holed torus is
    mirrored across the opened slit, and the mirror swap is the involution.
    Its fixed set is the single slit loop, which separates the two copies.
    Edge lengths are conformally adjusted so every vertex angle sum is
    2pi + 4pi/V.
    """
    if subdiv < 0:
        raise ValueError("subdiv must be >= 0")
    n = 8 * (2**subdiv)
    triangles, lengths, sigma, total_v = _slit_double_tables(n)
    u = _uniformize(triangles, lengths, sigma, total_v)
    adjusted = {}
    for (a, b), l0 in lengths.items():
        adjusted[(a, b)] = l0 * math.exp(0.5 * (u[a] + u[b]))
    mesh = build_mesh(total_v, triangles, adjusted)
    return mesh, validate_involution(mesh, sigma)
