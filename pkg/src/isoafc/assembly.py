"""Gauss quadrature assembly of the Galerkin operators on the unit square.

All operators share the support-overlap sparsity pattern of the space. Local
matrices are formed per knot-span element and scattered through a COO
accumulation, so the result does not depend on element visitation order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .geometry import DET_TOL, GeometryMap, SingularMapError, geometric_factor
from .spline import TensorSplineSpace, overlap_pairs, tensor_basis


@dataclass(frozen=True)
class QuadratureRule:
    """Tensor Gauss-Legendre rule on every nonempty span rectangle.

    ``points`` has shape ``(n_el, q*q, 2)`` and ``weights`` ``(n_el, q*q)``.
    """

    points: np.ndarray
    weights: np.ndarray
    q: int

    @property
    def n_elements(self) -> int:
        return self.points.shape[0]

    def flat_points(self) -> np.ndarray:
        return self.points.reshape(-1, 2)


def gauss_on_intervals(breaks, q: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes/weights on consecutive intervals, shape ``(n_int, q)``."""
    t, w = np.polynomial.legendre.leggauss(q)
    lo, hi = np.asarray(breaks[:-1]), np.asarray(breaks[1:])
    half = 0.5 * (hi - lo)
    return (lo + hi)[:, None] * 0.5 + half[:, None] * t, half[:, None] * w


def make_quadrature(space: TensorSplineSpace, q: int) -> QuadratureRule:
    if q < 1:
        raise ValueError("need at least one quadrature point per direction")
    xs, wx = gauss_on_intervals(space.kv_xi.breaks, q)
    ys, wy = gauss_on_intervals(space.kv_eta.breaks, q)
    # element (ex, ey) at index ey * n_ex + ex; points ordered eta-major
    P = np.empty((ys.shape[0], xs.shape[0], q, q, 2))
    P[..., 0] = xs[None, :, None, :]
    P[..., 1] = ys[:, None, :, None]
    W = wy[:, None, :, None] * wx[None, :, None, :]
    return QuadratureRule(P.reshape(-1, q * q, 2), W.reshape(-1, q * q), q)


@dataclass
class _ElementData:
    dofs: np.ndarray  # (n_el, nloc)
    N: np.ndarray  # (n_el, nqp, nloc)
    dN: np.ndarray  # (n_el, nqp, nloc, 2) parametric gradients
    J: np.ndarray  # (n_el, nqp, 2, 2)
    det: np.ndarray  # (n_el, nqp)
    x: np.ndarray  # (n_el, nqp, 2) physical points
    w: np.ndarray  # (n_el, nqp)


def _element_data(space: TensorSplineSpace, geom: GeometryMap, quad: QuadratureRule) -> _ElementData:
    n_el, nqp, _ = quad.points.shape
    pts = quad.flat_points()
    dofs, N, dN = tensor_basis(space, pts[:, 0], pts[:, 1], order=1)
    gd, gN, gdN = tensor_basis(geom.space, pts[:, 0], pts[:, 1], order=1)
    cp = geom.control_points[gd]
    x = np.einsum("nl,nlc->nc", gN, cp)
    J = np.einsum("nlc,nlk->nck", cp, gdN)
    det = J[:, 0, 0] * J[:, 1, 1] - J[:, 0, 1] * J[:, 1, 0]
    bad = np.abs(det) < DET_TOL
    if bad.any():
        k = int(np.flatnonzero(bad)[0])
        raise SingularMapError(pts[k], det[k])
    nloc = dofs.shape[1]
    return _ElementData(
        dofs=dofs.reshape(n_el, nqp, nloc)[:, 0, :],
        N=N.reshape(n_el, nqp, nloc),
        dN=dN.reshape(n_el, nqp, nloc, 2),
        J=J.reshape(n_el, nqp, 2, 2),
        det=det.reshape(n_el, nqp),
        x=x.reshape(n_el, nqp, 2),
        w=quad.weights,
    )


def _scatter(space: TensorSplineSpace, dofs: np.ndarray, local: np.ndarray) -> sp.csr_matrix:
    n = space.n_dof
    rows = np.broadcast_to(dofs[:, :, None], local.shape).ravel()
    cols = np.broadcast_to(dofs[:, None, :], local.shape).ravel()
    pr, pc = overlap_pairs(space)
    # explicit zeros keep the full overlap pattern stored
    rows = np.concatenate([pr, rows])
    cols = np.concatenate([pc, cols])
    data = np.concatenate([np.zeros(pr.size), local.ravel()])
    A = sp.coo_matrix((data, (rows, cols)), shape=(n, n)).tocsr()
    A.sort_indices()
    return A


def _physical_gradients(ed: _ElementData) -> np.ndarray:
    """``J^-T grad_xi phi`` for every element, point and local function."""
    J = ed.J
    inv = np.empty_like(J)
    inv[..., 0, 0] = J[..., 1, 1]
    inv[..., 0, 1] = -J[..., 0, 1]
    inv[..., 1, 0] = -J[..., 1, 0]
    inv[..., 1, 1] = J[..., 0, 0]
    inv /= ed.det[..., None, None]
    # grad_x phi = J^-T grad_xi phi  ->  component c = sum_k inv[k, c] dphi/dxi_k
    return np.einsum("eqkc,eqlk->eqlc", inv, ed.dN)


def _velocity_at_dofs(space: TensorSplineSpace, geom: GeometryMap, velocity) -> np.ndarray:
    """Group-formulation velocity samples, one per DOF, shape ``(n_dof, 2)``."""
    if callable(velocity):
        g = space.greville()
        x = geom.points(g[:, 0], g[:, 1])
        v = np.asarray(velocity(x), dtype=float)
        return np.broadcast_to(v, (space.n_dof, 2))
    v = np.asarray(velocity, dtype=float).reshape(2)
    return np.broadcast_to(v, (space.n_dof, 2))


def assemble_convection(space: TensorSplineSpace, geom: GeometryMap, quad: QuadratureRule, velocity) -> sp.csr_matrix:
    """Convection operator ``k_ij = -v_j . int grad(phi_j) phi_i dx``.

    ``velocity`` is a constant 2-vector or a callable mapping physical points
    ``(npts, 2)`` to velocities; in the latter case it is sampled at the image
    of each DOF's Greville point.
    """
    ed = _element_data(space, geom, quad)
    grad = _physical_gradients(ed)
    vj = _velocity_at_dofs(space, geom, velocity)[ed.dofs]  # (n_el, nloc, 2)
    wd = ed.w * np.abs(ed.det)
    # c_ij = sum_q wd N_i grad_j ; k_ij = -v_j . c_ij
    vgrad = np.einsum("eqlc,elc->eql", grad, vj)
    local = -np.einsum("eq,eqi,eqj->eij", wd, ed.N, vgrad)
    return _scatter(space, ed.dofs, local)


def assemble_diffusion(space: TensorSplineSpace, geom: GeometryMap, quad: QuadratureRule, d: float) -> sp.csr_matrix:
    """Diffusion operator ``d int grad_xi phi_j . G grad_xi phi_i dxi``."""
    if d < 0:
        raise ValueError("diffusion coefficient must be nonnegative")
    ed = _element_data(space, geom, quad)
    G = geometric_factor(ed.J, ed.det)
    GdN = np.einsum("eqab,eqjb->eqja", G, ed.dN)
    local = d * np.einsum("eq,eqia,eqja->eij", ed.w, ed.dN, GdN)
    return _scatter(space, ed.dofs, local)


def assemble_mass(space: TensorSplineSpace, geom: GeometryMap, quad: QuadratureRule) -> sp.csr_matrix:
    ed = _element_data(space, geom, quad)
    wd = ed.w * np.abs(ed.det)
    local = np.einsum("eq,eqi,eqj->eij", wd, ed.N, ed.N)
    return _scatter(space, ed.dofs, local)


def assemble_rhs(space: TensorSplineSpace, geom: GeometryMap, quad: QuadratureRule, source=None) -> np.ndarray:
    """Load vector ``r_i = int R phi_i dx``; ``source=None`` means R = 0."""
    r = np.zeros(space.n_dof)
    if source is None:
        return r
    ed = _element_data(space, geom, quad)
    if callable(source):
        R = np.asarray(source(ed.x.reshape(-1, 2)), dtype=float)
        R = np.broadcast_to(R, (ed.x.shape[0] * ed.x.shape[1],)).reshape(ed.w.shape)
    else:
        R = np.full(ed.w.shape, float(source))
    local = np.einsum("eq,eqi->ei", ed.w * np.abs(ed.det) * R, ed.N)
    np.add.at(r, ed.dofs.ravel(), local.ravel())
    return r


def domain_area(geom: GeometryMap, quad: QuadratureRule) -> float:
    ed = _element_data(geom.space, geom, quad)
    return float(np.sum(ed.w * np.abs(ed.det)))
