"""Algebraic flux correction of TVD type for spline discretizations.

The convection operator ``K`` is made free of negative off-diagonal entries
by adding a symmetric discrete diffusion ``D`` (``L = K + D``). Limited
anti-diffusion is then fed back on the right-hand side, edge by edge.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .assembly import gauss_on_intervals
from .spline import KnotVector, TensorSplineSpace, basis_ders


class PatternMismatchError(ValueError):
    """Two operators do not share a sparsity pattern."""


def _canonical(A) -> sp.csr_matrix:
    A = sp.csr_matrix(A, copy=True)
    A.sum_duplicates()
    A.sort_indices()
    return A


def _same_pattern(A: sp.csr_matrix, B: sp.csr_matrix) -> bool:
    return (
        A.shape == B.shape
        and np.array_equal(A.indptr, B.indptr)
        and np.array_equal(A.indices, B.indices)
    )


def build_discrete_diffusion(K: sp.spmatrix) -> sp.csr_matrix:
    """``d_ij = max(0, -k_ij, -k_ji)`` off the diagonal, ``d_ii = -sum_j d_ij``.

    ``K`` must be structurally symmetric (as the support-overlap pattern is);
    the result is stored on exactly the same pattern, explicit zeros included.
    """
    K = _canonical(K)
    # CSR -> CSC -> CSR keeps stored zeros, unlike sparse arithmetic
    Kt = _canonical(K.T)
    if not _same_pattern(K, Kt):
        raise PatternMismatchError("K is not structurally symmetric")
    D = K.copy()
    D.data = np.maximum(0.0, -np.minimum(K.data, Kt.data))
    rows = np.repeat(np.arange(D.shape[0]), np.diff(D.indptr))
    diag = rows == D.indices
    D.data[diag] = 0.0
    rowsum = np.bincount(rows, weights=D.data, minlength=D.shape[0])
    D.data[diag] = -rowsum[rows[diag]]
    return D


def low_order_operator(K: sp.spmatrix, D: sp.spmatrix) -> sp.csr_matrix:
    """``L = K + D``; refuses operators whose stored patterns differ."""
    K, D = _canonical(K), _canonical(D)
    if not _same_pattern(K, D):
        raise PatternMismatchError("K and D have different sparsity patterns")
    L = K.copy()
    L.data = K.data + D.data
    return L


@dataclass(frozen=True)
class EdgeSet:
    """DOF pairs with ``d_ij > 0``, oriented so that ``up`` is the upwind end.

    ``up`` is the upwind endpoint when ``l_up,down <= l_down,up``; ties go to
    the smaller index.
    """

    up: np.ndarray
    down: np.ndarray
    d: np.ndarray
    n_dof: int

    def __len__(self):
        return self.up.size


def build_edges(L: sp.spmatrix, D: sp.spmatrix) -> EdgeSet:
    Dc = sp.coo_matrix(sp.triu(D, k=1))
    mask = Dc.data > 0
    i, j, d = Dc.row[mask], Dc.col[mask], Dc.data[mask]
    if d.size == 0:
        empty = np.zeros(0, dtype=int)
        return EdgeSet(empty, empty, np.zeros(0), D.shape[0])
    Lc = sp.csr_matrix(L)
    lij = np.asarray(Lc[i, j]).ravel()
    lji = np.asarray(Lc[j, i]).ravel()
    # i < j here, so the tie goes to i
    i_up = lij <= lji
    up = np.where(i_up, i, j)
    down = np.where(i_up, j, i)
    order = np.lexsort((down, up))
    return EdgeSet(up[order], down[order], d[order], D.shape[0])


@dataclass(frozen=True)
class LimiterWorkspace:
    P_plus: np.ndarray
    P_minus: np.ndarray
    Q_plus: np.ndarray
    Q_minus: np.ndarray
    R_plus: np.ndarray
    R_minus: np.ndarray


@dataclass(frozen=True)
class LimitedCorrection:
    fbar: np.ndarray
    alpha: np.ndarray
    workspace: LimiterWorkspace | None = None


def _ratio(Q, P):
    R = np.ones_like(P)
    nz = P != 0
    R[nz] = np.minimum(1.0, Q[nz] / P[nz])
    return R


def limit_fluxes(edges: EdgeSet, u, force_alpha: float | None = None) -> LimitedCorrection:
    """Upwind-biased TVD limiting of the raw fluxes ``d_ij (u_i - u_j)``.

    The upwind end of each edge gathers the positive and negative raw fluxes
    it would receive (P), the downstream balance of both ends is collected in
    Q, and the ratio Q/P caps the correction of every flux leaving the upwind
    node. ``force_alpha`` bypasses the limiter with a constant correction factor.
    """
    u = np.asarray(u, dtype=float)
    n = edges.n_dof
    i, j = edges.up, edges.down
    f = edges.d * (u[i] - u[j])
    ws = None
    if force_alpha is None:
        fp, fm = np.maximum(f, 0.0), np.minimum(f, 0.0)
        Pp = np.bincount(i, fp, n)
        Pm = np.bincount(i, fm, n)
        Qp = np.bincount(i, -fm, n) + np.bincount(j, fp, n)
        Qm = np.bincount(i, -fp, n) + np.bincount(j, fm, n)
        Rp, Rm = _ratio(Qp, Pp), _ratio(Qm, Pm)
        alpha = np.where(f > 0, Rp[i], np.where(f < 0, Rm[i], 1.0))
        ws = LimiterWorkspace(Pp, Pm, Qp, Qm, Rp, Rm)
    else:
        alpha = np.full(f.size, float(force_alpha))
    af = alpha * f
    fbar = np.bincount(i, af, n) - np.bincount(j, af, n)
    return LimitedCorrection(fbar, alpha, ws)


def limiter_correction(L: sp.spmatrix, D: sp.spmatrix, u, force_alpha: float | None = None):
    """Anti-diffusive correction ``fbar`` and per-edge limiter values ``alpha``.

    ``fbar_i = sum_j alpha_ij d_ij (u_i - u_j)``. With ``force_alpha=1`` this is
    ``-(D u)``, which restores the Galerkin scheme; with 0 it vanishes.
    """
    res = limit_fluxes(build_edges(L, D), u, force_alpha)
    return res.fbar, res.alpha


# --- Dirichlet data -----------------------------------------------------


def _boundary_quadrature(kv: KnotVector, q: int, breaks=()):
    pts = np.union1d(kv.breaks, [b for b in breaks if kv.start < b < kv.end])
    t, w = gauss_on_intervals(pts, q)
    return t.ravel(), w.ravel()


def _zalesak(qL, mL, F_i, F_j, F, nbr_min, nbr_max):
    """Limit antisymmetric fluxes ``F`` (from ``F_i`` to ``F_j``) around ``qL``."""
    n = qL.size
    Pp = np.bincount(F_i, np.maximum(F, 0), n) + np.bincount(F_j, np.maximum(-F, 0), n)
    Pm = np.bincount(F_i, np.minimum(F, 0), n) + np.bincount(F_j, np.minimum(-F, 0), n)
    Rp = _ratio(mL * (nbr_max - qL), Pp)
    Rm = _ratio(mL * (nbr_min - qL), Pm)
    alpha = np.where(F > 0, np.minimum(Rp[F_i], Rm[F_j]), np.minimum(Rm[F_i], Rp[F_j]))
    af = alpha * F
    return qL + (np.bincount(F_i, af, n) - np.bincount(F_j, af, n)) / mL


def project_dirichlet(kv: KnotVector, curve_points, beta, breaks=(), q: int | None = None) -> np.ndarray:
    """Bound-preserving projection of boundary data onto a univariate space.

    Parameters
    ----------
    kv : KnotVector
        Space along the boundary curve.
    curve_points : array_like, shape (n, 2)
        Control points of the boundary curve (gives the arc-length factor).
    beta : callable
        Boundary data as a function of the curve parameter.
    breaks : sequence of float
        Parameters where ``beta`` jumps; quadrature intervals are split there.
    q : int, optional
        Gauss points per interval, default ``2 * (p + 1)``.

    Returns the coefficients of a lumped projection corrected towards the
    consistent L2 projection by a Zalesak-type flux limiter. Every coefficient
    lies between the local extrema of the lumped solution, hence in
    ``[min beta, max beta]``.
    """
    p = kv.degree
    q = 2 * (p + 1) if q is None else q
    cp = np.asarray(curve_points, dtype=float)
    t, w = _boundary_quadrature(kv, q, breaks)
    span, ders = basis_ders(kv, t, 1)
    idx = span[:, None] - p + np.arange(p + 1)
    tangent = np.einsum("nr,nrc->nc", ders[:, 1], cp[idx])
    ws = w * np.hypot(tangent[:, 0], tangent[:, 1])
    b_vals = np.asarray(beta(t), dtype=float) * np.ones_like(t)
    N = ders[:, 0]
    n = kv.n
    b = np.zeros(n)
    mL = np.zeros(n)
    np.add.at(b, idx.ravel(), (ws * b_vals)[:, None].repeat(p + 1, 1).ravel() * N.ravel())
    np.add.at(mL, idx.ravel(), ws[:, None].repeat(p + 1, 1).ravel() * N.ravel())
    M = sp.coo_matrix(
        (
            (ws[:, None, None] * N[:, :, None] * N[:, None, :]).ravel(),
            (np.repeat(idx, p + 1, axis=1).ravel(), np.tile(idx, (1, p + 1)).ravel()),
        ),
        shape=(n, n),
    ).tocsr()
    lo, hi = float(np.min(b_vals)), float(np.max(b_vals))
    qL = np.clip(b / mL, lo, hi)
    qH = sp.linalg.spsolve(sp.csc_matrix(M), b)

    Mu = sp.coo_matrix(sp.triu(M, k=1))
    Fi, Fj = Mu.row, Mu.col
    F = Mu.data * (qH[Fi] - qH[Fj])

    nbr_min, nbr_max = qL.copy(), qL.copy()
    for s in range(1, p + 1):
        nbr_min[s:] = np.minimum(nbr_min[s:], qL[:-s])
        nbr_min[:-s] = np.minimum(nbr_min[:-s], qL[s:])
        nbr_max[s:] = np.maximum(nbr_max[s:], qL[:-s])
        nbr_max[:-s] = np.maximum(nbr_max[:-s], qL[s:])
    qc = _zalesak(qL, mL, Fi, Fj, F, nbr_min, nbr_max)
    return np.clip(qc, nbr_min, nbr_max)


_EDGES = ("bottom", "right", "top", "left")


def edge_dofs(space: TensorSplineSpace, edge: str) -> np.ndarray:
    """DOFs along a parametric edge, ordered by increasing edge parameter."""
    nx, ny = space.n_xi, space.n_eta
    if edge == "bottom":
        return space.index(np.arange(nx), 0)
    if edge == "top":
        return space.index(np.arange(nx), ny - 1)
    if edge == "left":
        return space.index(0, np.arange(ny))
    if edge == "right":
        return space.index(nx - 1, np.arange(ny))
    raise ValueError(f"unknown edge {edge!r}")


def edge_knots(space: TensorSplineSpace, edge: str) -> KnotVector:
    return space.kv_xi if edge in ("bottom", "top") else space.kv_eta


def edge_params(edge: str, t):
    """Parametric ``(xi, eta)`` of the edge parameter ``t``."""
    t = np.asarray(t, dtype=float)
    one, zero = np.ones_like(t), np.zeros_like(t)
    return {
        "bottom": (t, zero),
        "top": (t, one),
        "left": (zero, t),
        "right": (one, t),
    }[edge]


def boundary_values(space: TensorSplineSpace, control_points, profile, q: int | None = None):
    """Project a boundary profile onto the boundary ring of ``space``.

    ``profile`` provides ``evaluate(edge, t)`` and ``breaks(edge)``. Each edge
    is projected independently; corner DOFs, shared by two edges, take the mean
    of both edge values. Returns ``(dofs, values)`` sorted by DOF.
    """
    cp = np.asarray(control_points, dtype=float)
    acc = np.zeros(space.n_dof)
    cnt = np.zeros(space.n_dof)
    for edge in _EDGES:
        dofs = edge_dofs(space, edge)
        vals = project_dirichlet(
            edge_knots(space, edge),
            cp[dofs],
            lambda t, e=edge: profile.evaluate(e, t),
            breaks=profile.breaks(edge),
            q=q,
        )
        acc[dofs] += vals
        cnt[dofs] += 1
    ring = space.boundary_dofs()
    return ring, acc[ring] / cnt[ring]


def apply_dirichlet(S: sp.spmatrix, L: sp.spmatrix, r, dofs, values, boundary=None):
    """Constrained system ``(A, rhs)`` for ``A = S - L`` with Dirichlet rows.

    Boundary rows become identity rows with the prescribed values on the
    right-hand side; interior rows keep their boundary couplings.
    ``boundary`` lists the admissible DOFs (all DOFs when omitted).
    """
    dofs = np.asarray(dofs, dtype=int)
    values = np.asarray(values, dtype=float)
    if dofs.shape != values.shape:
        raise ValueError("dofs and values must match")
    if boundary is not None:
        bad = np.setdiff1d(dofs, boundary)
        if bad.size:
            raise ValueError(f"values given for non-boundary DOFs {bad.tolist()}")
    S, L = _canonical(S), _canonical(L)
    if _same_pattern(S, L):
        A = S.copy()
        A.data = S.data - L.data
    else:
        A = _canonical(S - L)
    rows = np.repeat(np.arange(A.shape[0]), np.diff(A.indptr))
    fixed = np.zeros(A.shape[0], dtype=bool)
    fixed[dofs] = True
    on_diag = rows == A.indices
    if np.count_nonzero(on_diag & fixed[rows]) < np.unique(dofs).size:
        # a constrained row without a stored diagonal; add one explicitly
        A = _canonical(sp.coo_matrix(
            (np.r_[A.data, np.zeros(dofs.size)], (np.r_[rows, dofs], np.r_[A.indices, dofs])),
            shape=A.shape,
        ))
        rows = np.repeat(np.arange(A.shape[0]), np.diff(A.indptr))
        on_diag = rows == A.indices
    # zero the constrained rows in place so their stored pattern survives
    A.data[fixed[rows]] = 0.0
    A.data[fixed[rows] & on_diag] = 1.0
    rhs = np.array(r, dtype=float, copy=True)
    rhs[dofs] = values
    return A, rhs
