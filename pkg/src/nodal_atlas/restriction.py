"""Eigenfunction data along closed edge paths.

Dirichlet traces sample vertex values; normalized Neumann traces are
lambda^(-1/2) times a normal difference quotient built from the linear
interpolant on the two wing triangles of each path edge, averaged so the
estimate is odd under flipping the normal side and vanishes identically for
mirror-symmetric data.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import (
    AllAmbiguousError,
    EmptySegmentError,
    LengthMismatchError,
    NotAPathError,
    NotClosedError,
    SelfIntersectingError,
    ZeroEigenvalueError,
)
from .mesh import SurfaceMesh, edge_key, layout_triangle
from .spectral import EigenPair


@dataclass(frozen=True)
class CurvePath:
    """A closed simple loop along mesh edges, arc-length parameterized.

    ``left_triangles[i]`` / ``right_triangles[i]`` are the wing triangles of
    the directed edge from vertex i to vertex i+1 (cyclic); the left one
    contains that directed edge in its winding. ``normal_side`` fixes which
    side the unit normal points into.
    """

    mesh: SurfaceMesh
    vertices: np.ndarray
    seg_lengths: np.ndarray
    arc_s: np.ndarray
    total_length: float
    left_triangles: np.ndarray
    right_triangles: np.ndarray
    normal_side: str

    def __post_init__(self):
        for arr in (self.vertices, self.seg_lengths, self.arc_s,
                    self.left_triangles, self.right_triangles):
            arr.flags.writeable = False

    def __len__(self) -> int:
        return len(self.vertices)

    def edge_keys(self) -> list[tuple[int, int]]:
        k = len(self.vertices)
        return [edge_key(int(self.vertices[i]), int(self.vertices[(i + 1) % k]))
                for i in range(k)]


@dataclass(frozen=True)
class CurveTrace:
    """Samples of one eigenpair along a path."""

    kind: str  # "dirichlet" | "neumann_normalized"
    samples: np.ndarray
    eigen_index: int
    eigenvalue: float
    path: CurvePath

    def __post_init__(self):
        self.samples.flags.writeable = False


def make_path(mesh: SurfaceMesh, vertices, normal_side: str | None = None) -> CurvePath:
    """Build a CurvePath from a cyclic vertex list.

    The normal side defaults to the side containing the lexicographically
    smallest wing triangle, which makes the choice deterministic under
    relabeling-free reruns.

    Raises
    ------
    NotAPathError, NotClosedError, SelfIntersectingError
    """
    verts = np.asarray(vertices, dtype=np.int64)
    k = len(verts)
    if k < 3:
        raise NotAPathError("a closed loop needs at least 3 vertices")
    if len(set(verts.tolist())) != k:
        raise SelfIntersectingError("vertex loop repeats a vertex")
    for i in range(k - 1):
        if not mesh.has_edge(int(verts[i]), int(verts[i + 1])):
            raise NotAPathError(f"vertices {verts[i]} and {verts[i+1]} are not joined by an edge")
    if not mesh.has_edge(int(verts[-1]), int(verts[0])):
        raise NotClosedError(f"closing edge {verts[-1]}-{verts[0]} missing")

    seg = np.array([mesh.edge_length(int(verts[i]), int(verts[(i + 1) % k])) for i in range(k)])
    arc = np.concatenate([[0.0], np.cumsum(seg[:-1])])

    directed = mesh.directed_edge_triangle()
    left = np.array([directed[(int(verts[i]), int(verts[(i + 1) % k]))] for i in range(k)])
    right = np.array([directed[(int(verts[(i + 1) % k]), int(verts[i]))] for i in range(k)])

    if normal_side is None:
        lookup = mesh.triangles
        best_left = min(tuple(sorted(int(v) for v in lookup[t])) for t in left)
        best_right = min(tuple(sorted(int(v) for v in lookup[t])) for t in right)
        normal_side = "left" if best_left < best_right else "right"
    elif normal_side not in ("left", "right"):
        raise ValueError("normal_side must be 'left' or 'right'")

    return CurvePath(mesh=mesh, vertices=verts, seg_lengths=seg, arc_s=arc,
                     total_length=float(seg.sum()), left_triangles=left,
                     right_triangles=right, normal_side=normal_side)


def _wing_gradient(mesh: SurfaceMesh, a: int, b: int, tri: int, values: np.ndarray) -> float:
    """Derivative of the linear interpolant on ``tri`` perpendicular to edge (a, b),
    pointing into the triangle."""
    c = next(int(v) for v in mesh.triangles[tri] if int(v) not in (a, b))
    l_ab = mesh.edge_length(a, b)
    xc, yc = layout_triangle(l_ab, mesh.edge_length(a, c), mesh.edge_length(b, c))
    fa, fb, fc = float(values[a]), float(values[b]), float(values[c])
    return (fc - fa - xc * (fb - fa) / l_ab) / yc


def edge_normal_derivatives(path: CurvePath, values: np.ndarray) -> np.ndarray:
    """Per path-edge normal difference quotients toward the normal side.

    Each edge averages the two wing-triangle estimates; the result is exactly
    odd under flipping ``normal_side`` and exactly zero for data invariant
    under a mirror that swaps the wings.
    """
    mesh = path.mesh
    k = len(path)
    out = np.empty(k)
    sign = 1.0 if path.normal_side == "left" else -1.0
    for i in range(k):
        a, b = int(path.vertices[i]), int(path.vertices[(i + 1) % k])
        g_left = _wing_gradient(mesh, a, b, int(path.left_triangles[i]), values)
        g_right = _wing_gradient(mesh, a, b, int(path.right_triangles[i]), values)
        out[i] = sign * 0.5 * (g_left - g_right)
    return out


def restrict(pair: EigenPair, path: CurvePath, kind: str) -> CurveTrace:
    """Dirichlet or normalized Neumann trace of an eigenpair along a path.

    Raises
    ------
    ZeroEigenvalueError
        For the Neumann trace of the constant (lambda = 0) pair.
    """
    if kind == "dirichlet":
        samples = pair.coefficients[path.vertices]
    elif kind == "neumann_normalized":
        if pair.eigenvalue <= 0:
            raise ZeroEigenvalueError("normalized Neumann trace needs lambda > 0")
        per_edge = edge_normal_derivatives(path, pair.coefficients)
        k = len(path)
        samples = (per_edge + np.roll(per_edge, 1)) * 0.5  # mean of the two edges at each vertex
        samples = samples / np.sqrt(pair.eigenvalue)
    else:
        raise ValueError(f"unknown trace kind {kind!r}")
    return CurveTrace(kind=kind, samples=np.asarray(samples, dtype=float),
                      eigen_index=pair.index, eigenvalue=pair.eigenvalue, path=path)


def _vertex_weights(path: CurvePath) -> np.ndarray:
    """Cyclic trapezoid weights: half the two adjacent edge lengths per vertex."""
    seg = path.seg_lengths
    return 0.5 * (seg + np.roll(seg, 1))


def period_integral(trace: CurveTrace, f) -> float:
    """Trapezoidal quadrature of f * trace around the loop.

    Exact for the piecewise-linear product on the path polyline.
    """
    fs = np.asarray(f, dtype=float)
    if fs.shape != trace.samples.shape:
        raise LengthMismatchError(f"weight samples {fs.shape} vs trace {trace.samples.shape}")
    return float(np.sum(_vertex_weights(trace.path) * fs * trace.samples))


def quadrature_on_path(path: CurvePath, values) -> float:
    """Cyclic trapezoid of arbitrary vertex samples along the path."""
    vals = np.asarray(values, dtype=float)
    if vals.shape != (len(path),):
        raise LengthMismatchError("sample count does not match path")
    return float(np.sum(_vertex_weights(path) * vals))


def l2_norm_on_segment(trace: CurveTrace, s_start: float, s_end: float) -> float:
    """Integral of the squared trace over the arc [s_start, s_end].

    Endpoints snap to the nearest path vertices. Returns the full cyclic
    integral when the requested arc spans the whole loop.

    Raises
    ------
    EmptySegmentError
        If both endpoints resolve to the same vertex (arc shorter than an edge).
    """
    ell = trace.path.total_length
    if not (0.0 <= s_start < s_end <= ell + 1e-12):
        raise ValueError("need 0 <= s_start < s_end <= total length")
    k = len(trace.path)
    nodes = np.concatenate([trace.path.arc_s, [ell]])  # vertex 0 appears at both ends

    def nearest(s: float) -> int:
        return int(np.argmin(np.abs(nodes - s))) % k

    ia, ib = nearest(s_start), nearest(s_end)
    if ia == ib:
        if (s_end - s_start) > 0.5 * ell:  # snapped to a full loop
            g = trace.samples**2
            return float(np.sum(_vertex_weights(trace.path) * g))
        raise EmptySegmentError("segment endpoints resolve to the same path vertex")
    g = trace.samples**2
    total = 0.0
    i = ia
    while i != ib:
        j = (i + 1) % k
        total += 0.5 * (g[i] + g[j]) * trace.path.seg_lengths[i]
        i = j
    return float(total)


def sign_change_data(samples: np.ndarray, zero_tol: float):
    """Kept-index sign flips of a cyclic sample sequence.

    Returns (count, ambiguous, flip_slots) where flip_slots are pairs of
    kept indices (i, j) between which the sign flips.
    """
    if zero_tol < 0:
        raise ValueError("zero_tol must be >= 0")
    keep = np.nonzero(np.abs(samples) > zero_tol)[0]
    if len(keep) == 0:
        raise AllAmbiguousError("every sample lies below the zero tolerance")
    ambiguous = (len(samples) - len(keep)) > 0.2 * len(samples)
    signs = np.sign(samples[keep])
    flips = []
    for t in range(len(keep)):
        u = (t + 1) % len(keep)
        if signs[t] != signs[u]:
            flips.append((int(keep[t]), int(keep[u])))
    return len(flips), bool(ambiguous), flips


def count_sign_changes(trace: CurveTrace, zero_tol: float) -> tuple[int, bool]:
    """Number of cyclic sign flips among samples above the zero tolerance.

    Always even on a closed loop. ``ambiguous`` is set when more than 20% of
    the samples were skipped.
    """
    count, ambiguous, _ = sign_change_data(trace.samples, zero_tol)
    return count, ambiguous


def sign_change_positions(trace: CurveTrace, zero_tol: float) -> list[float]:
    """Arc-length positions of the sign flips (midpoint of each flip gap)."""
    _, _, flips = sign_change_data(trace.samples, zero_tol)
    ell = trace.path.total_length
    arc = trace.path.arc_s
    out = []
    for i, j in flips:
        si, sj = float(arc[i]), float(arc[j])
        if j < i:  # wrapped around the loop seam
            sj += ell
        out.append(((si + sj) / 2.0) % ell)
    return out


def default_zero_tol(pair: EigenPair) -> float:
    """Zero tolerance scaled to the eigenfunction amplitude."""
    return 1e-6 * float(np.max(np.abs(pair.coefficients)))


def write_trace_csv(traces: list[CurveTrace], fname) -> None:
    """Dump traces as CSV with columns s, value, kind, j, lambda."""
    with open(fname, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["s", "value", "kind", "j", "lambda"])
        for tr in traces:
            for s, val in zip(tr.path.arc_s, tr.samples):
                w.writerow([repr(float(s)), repr(float(val)), tr.kind,
                            tr.eigen_index, repr(float(tr.eigenvalue))])
