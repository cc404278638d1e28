"""Discrete Laplacian assembly, eigensolve, and parity splitting.

The stiffness matrix uses cotangent weights computed from the intrinsic
corner angles; the mass matrix is lumped (one third of the incident triangle
area per vertex) by default, with the consistent variant behind a flag.
Eigenpairs are mass-orthonormal; any solver reaching the residual contract
is conforming, and both a dense (LAPACK) and a shift-invert (ARPACK) path
are provided.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import sparse
from scipy.linalg import eigh
from scipy.sparse.linalg import ArpackNoConvergence, eigsh

from .errors import (
    BadKError,
    MixedParityResidualError,
    NoConvergenceError,
    NumericallyDegenerateError,
)
from .mesh import Involution, SurfaceMesh

ANGLE_TOL = 1e-9           # corner angle guard around 0 and pi
DENSE_SOLVER_LIMIT = 2600  # below this vertex count a full dense solve is cheapest
PARITY_DEFECT_TOL = 1e-6
MIXED_PARITY_TOL = 1e-3


@dataclass(frozen=True)
class OperatorPair:
    """Stiffness/mass pair of a mesh, plus the data shared by consumers."""

    stiffness: sparse.csr_matrix
    mass: sparse.csr_matrix
    lumped: bool
    area: float
    vertex_count: int

    def mass_diagonal(self) -> np.ndarray:
        return np.asarray(self.mass.diagonal())


@dataclass(frozen=True)
class EigenPair:
    """One mass-normalized eigenpair with its parity tag.

    ``parity`` is "even", "odd", or "none" (not yet split). ``residual`` is
    ||S v - lambda M v|| / lambda for positive eigenvalues and ||S v|| for the
    constant mode.
    """

    index: int
    eigenvalue: float
    coefficients: np.ndarray
    parity: str
    residual: float

    def __post_init__(self):
        self.coefficients.flags.writeable = False


def cotangent_stiffness(triangles: np.ndarray, corner_angles: np.ndarray, n: int) -> sparse.csr_matrix:
    """Cotangent-weight stiffness matrix from per-corner angles."""
    tris = np.asarray(triangles)
    cot = 1.0 / np.tan(corner_angles)
    rows, cols, vals = [], [], []
    for corner, (ea, eb) in enumerate(((1, 2), (2, 0), (0, 1))):
        w = 0.5 * cot[:, corner]  # corner angle faces edge (ea, eb)
        i, j = tris[:, ea], tris[:, eb]
        rows.extend([i, j, i, j])
        cols.extend([j, i, i, j])
        vals.extend([-w, -w, w, w])
    S = sparse.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n)
    )
    S.sum_duplicates()
    return S


def assemble_operators(mesh: SurfaceMesh, lumped: bool = True) -> OperatorPair:
    """Cotangent stiffness and mass matrices of a mesh.

    Raises
    ------
    NumericallyDegenerateError
        If any corner angle is within 1e-9 of 0 or pi.
    """
    ang = mesh.corner_angles
    if float(ang.min()) < ANGLE_TOL or float(ang.max()) > math.pi - ANGLE_TOL:
        raise NumericallyDegenerateError("a corner angle is numerically 0 or pi")
    n = mesh.vertex_count
    S = cotangent_stiffness(mesh.triangles, ang, n)

    tris = mesh.triangles
    areas = mesh.triangle_areas
    if lumped:
        diag = np.zeros(n)
        for c in range(3):
            np.add.at(diag, tris[:, c], areas / 3.0)
        M = sparse.diags(diag, format="csr")
    else:
        rows, cols, vals = [], [], []
        for a in range(3):
            for b in range(3):
                rows.append(tris[:, a])
                cols.append(tris[:, b])
                vals.append(np.full(len(tris), 0.0) + areas * (1.0 / 6.0 if a == b else 1.0 / 12.0))
        M = sparse.csr_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n)
        )
        M.sum_duplicates()
    return OperatorPair(stiffness=S, mass=M, lumped=lumped, area=mesh.area, vertex_count=n)


def _mass_norm(ops: OperatorPair, v: np.ndarray) -> float:
    return math.sqrt(float(v @ (ops.mass @ v)))


def _residual(ops: OperatorPair, lam: float, v: np.ndarray) -> float:
    r = float(np.linalg.norm(ops.stiffness @ v - lam * (ops.mass @ v)))
    return r / lam if lam > 0 else r


def _fix_sign(v: np.ndarray) -> np.ndarray:
    nz = np.nonzero(np.abs(v) > 1e-8 * np.max(np.abs(v)))[0]
    if len(nz) and v[nz[0]] < 0:
        return -v
    return v


def eigenpair_from_vector(ops: OperatorPair, vec: np.ndarray, parity: str = "none",
                          index: int = -1) -> EigenPair:
    """Normalize a vector against the mass form and tag it with its Rayleigh quotient."""
    v = np.asarray(vec, dtype=float).copy()
    v /= _mass_norm(ops, v)
    v = _fix_sign(v)
    lam = float(v @ (ops.stiffness @ v))
    if abs(lam) < 1e-9 * (1.0 + abs(lam)):
        lam = max(lam, 0.0)
    return EigenPair(index=index, eigenvalue=lam, coefficients=v, parity=parity,
                     residual=_residual(ops, lam, v))


def solve_eigenpairs(ops: OperatorPair, k: int, tol: float = 1e-8, seed: int = 0,
                     method: str = "auto") -> list[EigenPair]:
    """The k smallest generalized eigenpairs, mass-orthonormal and sorted.

    ``method`` is "auto" (dense below a size threshold, else shift-invert),
    "dense", or "arpack". The ARPACK start vector is seeded, so repeated runs
    are identical.

    Raises
    ------
    BadKError
        Unless 1 <= k < vertex_count.
    NoConvergenceError
        If the iteration budget is exhausted or a residual misses ``tol``.
    """
    n = ops.vertex_count
    if not 1 <= k < n:
        raise BadKError(f"k = {k} outside [1, {n})")
    if tol <= 0:
        raise ValueError("tol must be positive")

    use_dense = method == "dense" or (method == "auto" and (n <= DENSE_SOLVER_LIMIT or k >= n - 2))
    if use_dense:
        S = ops.stiffness.toarray()
        M = ops.mass.toarray()
        vals, vecs = eigh(S, M, subset_by_index=(0, k - 1))
    else:
        mdiag = ops.mass_diagonal()
        scale = float(np.mean(ops.stiffness.diagonal()) / np.mean(mdiag))
        sigma = -1e-2 * scale
        rng = np.random.default_rng(seed)
        v0 = rng.standard_normal(n)
        try:
            vals, vecs = eigsh(ops.stiffness, k=k, M=ops.mass, sigma=sigma, which="LM",
                               v0=v0, maxiter=5000, tol=min(tol * 1e-2, 1e-10))
        except ArpackNoConvergence as exc:
            raise NoConvergenceError(f"eigensolver did not converge: {exc}") from exc
        order = np.argsort(vals)
        vals, vecs = vals[order], vecs[:, order]

    pairs = []
    for j in range(k):
        v = vecs[:, j].copy()
        v /= _mass_norm(ops, v)
        lam = float(vals[j])
        if abs(lam) < 1e-9 * (1.0 + scale_estimate(ops)):
            lam = 0.0
        v = _fix_sign(v)
        res = _residual(ops, lam, v)
        if lam > 0 and res > tol:
            raise NoConvergenceError(f"pair {j} residual {res:.3e} exceeds tol {tol:.3e}")
        pairs.append(EigenPair(index=j, eigenvalue=lam, coefficients=v, parity="none", residual=res))
    return pairs


def scale_estimate(ops: OperatorPair) -> float:
    """Crude spectral scale, used only for zero-eigenvalue cleanup."""
    return float(np.mean(ops.stiffness.diagonal()) / np.mean(ops.mass_diagonal()))


def apply_involution(inv: Involution, v: np.ndarray) -> np.ndarray:
    """Pull back vertex values along the involution: (sigma* v)[i] = v[sigma(i)]."""
    return v[inv.vertex_map]


def split_parity(pairs: list[EigenPair], inv: Involution, ops: OperatorPair,
                 cluster_tol: float = 1e-6) -> list[EigenPair]:
    """Re-basis each numerically degenerate cluster into parity-pure vectors.

    Within each cluster (eigenvalue gap below ``cluster_tol * (1 + lambda)``)
    the projectors (I +- sigma*)/2 are applied and the images re-orthonormalized
    under the mass form. Output pairs are tagged "even"/"odd" and re-indexed by
    (eigenvalue, parity). A trailing cluster that the requested k cut in half
    is not sigma-invariant and is dropped (so fewer pairs may be returned).

    Raises
    ------
    MixedParityResidualError
        If a middle cluster is not sigma-invariant or a vector keeps mass at
        both parities, which signals ``cluster_tol`` too small.
    """
    if not pairs:
        return []
    M = ops.mass
    lams = np.array([p.eigenvalue for p in pairs])
    order = np.argsort(lams, kind="stable")
    pairs = [pairs[i] for i in order]
    lams = lams[order]

    clusters: list[list[int]] = [[0]]
    for j in range(1, len(pairs)):
        if lams[j] - lams[j - 1] <= cluster_tol * (1.0 + abs(lams[j])):
            clusters[-1].append(j)
        else:
            clusters.append([j])

    out: list[EigenPair] = []
    for ci, idx in enumerate(clusters):
        Q = np.column_stack([pairs[j].coefficients for j in idx])
        SQ = Q[inv.vertex_map, :]
        # sigma-invariance of the cluster span: project sigma*Q back onto span(Q)
        C = Q.T @ (M @ SQ)
        off_span = SQ - Q @ C
        defect = math.sqrt(max(float(np.sum(off_span * (M @ off_span))), 0.0))
        if defect > 1e-6 * math.sqrt(len(idx)):
            if ci == len(clusters) - 1:
                continue  # truncated trailing cluster: drop it
            raise MixedParityResidualError(
                f"cluster at lambda={lams[idx[0]]:.6g} is not symmetry-invariant "
                f"(defect {defect:.2e}); increase cluster_tol"
            )
        for sign, parity in ((+1.0, "even"), (-1.0, "odd")):
            P = 0.5 * (Q + sign * SQ)
            G = P.T @ (M @ P)
            evals, evecs = np.linalg.eigh(G)
            # input vectors are mass-orthonormal, so genuine parity components
            # carry O(1) Gram eigenvalues; anything tiny is projector noise
            rank = evals > 1e-8
            basis = P @ evecs[:, rank] / np.sqrt(evals[rank])
            for col in range(basis.shape[1]):
                v = basis[:, col]
                plus = 0.5 * (v + v[inv.vertex_map])
                minus = 0.5 * (v - v[inv.vertex_map])
                nplus = _mass_norm(ops, plus)
                nminus = _mass_norm(ops, minus)
                if min(nplus, nminus) >= MIXED_PARITY_TOL:
                    raise MixedParityResidualError(
                        f"vector at lambda={lams[idx[0]]:.6g} has mass at both parities"
                    )
                v = (plus if sign > 0 else minus)
                v /= _mass_norm(ops, v)
                out.append(eigenpair_from_vector(ops, v, parity=parity))

    out.sort(key=lambda p: (p.eigenvalue, 0 if p.parity == "even" else 1))
    return [EigenPair(index=j, eigenvalue=p.eigenvalue, coefficients=p.coefficients,
                      parity=p.parity, residual=p.residual) for j, p in enumerate(out)]


def sup_norm(pair: EigenPair) -> float:
    """Max vertex amplitude of a normalized pair."""
    return float(np.max(np.abs(pair.coefficients)))


def supnorm_growth_ratios(pairs: list[EigenPair]) -> list[float]:
    """sup|phi| * lambda^(-1/4) * log(lambda) per pair, for trend inspection.

    Pairs with lambda <= 1 report nan (the ratio is meaningless there); no
    monotonicity is asserted anywhere, this is a diagnostic sequence only.
    """
    out = []
    for p in pairs:
        if p.eigenvalue > 1.0:
            out.append(sup_norm(p) * p.eigenvalue ** (-0.25) * math.log(p.eigenvalue))
        else:
            out.append(float("nan"))
    return out


# -- eigenpair dump ------------------------------------------------------------


def save_eigenpairs(directory, pairs: list[EigenPair]) -> None:
    """Write pairs as raw little-endian float64 files plus a JSON index."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    index = []
    for p in pairs:
        fname = f"pair_{p.index:05d}.f64"
        p.coefficients.astype("<f8").tofile(d / fname)
        index.append({"j": p.index, "file": fname, "lambda": p.eigenvalue,
                      "parity": p.parity, "residual": p.residual})
    (d / "index.json").write_text(json.dumps(index, indent=2, sort_keys=True))


def load_eigenpairs(directory) -> list[EigenPair]:
    d = Path(directory)
    index = json.loads((d / "index.json").read_text())
    pairs = []
    for rec in index:
        coeffs = np.fromfile(d / rec["file"], dtype="<f8")
        pairs.append(EigenPair(index=rec["j"], eigenvalue=rec["lambda"],
                               coefficients=coeffs, parity=rec["parity"],
                               residual=rec["residual"]))
    return pairs
