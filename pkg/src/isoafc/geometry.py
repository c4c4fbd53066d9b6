"""Spline geometry map from the parametric unit square to the physical domain."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .spline import SplineDomainError, TensorSplineSpace, tensor_basis

DET_TOL = 1e-12


class SingularMapError(ArithmeticError):
    """The Jacobian determinant is (nearly) zero at a parametric point."""

    def __init__(self, point, det):
        self.point = tuple(float(v) for v in point)
        self.det = float(det)
        super().__init__(f"singular geometry map at (xi, eta) = {self.point}: det J = {self.det:.3e}")


class GeometryMap:
    """Tensor spline map ``x(xi, eta) = sum_j c_j phi_j(xi, eta)``.

    Parameters
    ----------
    space : TensorSplineSpace
    control_points : array_like, shape (n_dof, 2)
        Physical control points in flat DOF order.
    """

    def __init__(self, space: TensorSplineSpace, control_points):
        cp = np.array(control_points, dtype=float)
        if cp.shape != (space.n_dof, 2):
            raise ValueError(
                f"expected control points of shape ({space.n_dof}, 2), got {cp.shape}"
            )
        cp.setflags(write=False)
        self.space = space
        self.control_points = cp

    @classmethod
    def identity(cls, space: TensorSplineSpace) -> "GeometryMap":
        """Identity map: control points at the tensor Greville abscissae."""
        return cls(space, space.greville())

    def points(self, xi, eta) -> np.ndarray:
        """Physical points for paired parameter arrays, shape ``(npts, 2)``."""
        xi, eta = _check_params(xi, eta)
        dofs, N, _ = tensor_basis(self.space, xi, eta, order=0)
        return np.einsum("nl,nlc->nc", N, self.control_points[dofs])

    def jacobians(self, xi, eta) -> np.ndarray:
        """Jacobians ``J[n, c, k] = d x_c / d xi_k``, shape ``(npts, 2, 2)``."""
        xi, eta = _check_params(xi, eta)
        dofs, _, dN = tensor_basis(self.space, xi, eta, order=1)
        return np.einsum("nlc,nlk->nck", self.control_points[dofs], dN)


@dataclass(frozen=True)
class JacobianData:
    J: np.ndarray
    detJ: float
    G: np.ndarray


@dataclass(frozen=True)
class BijectivityReport:
    min_det: float
    max_det: float
    argmin: tuple[float, float]
    n_samples: int

    @property
    def passed(self) -> bool:
        return self.min_det > 0.0


def _check_params(xi, eta):
    xi = np.atleast_1d(np.asarray(xi, dtype=float)).ravel()
    eta = np.atleast_1d(np.asarray(eta, dtype=float)).ravel()
    if xi.shape != eta.shape:
        raise ValueError("xi and eta must have matching shapes")
    return xi, eta


def eval_map(geom: GeometryMap, xi: float, eta: float) -> np.ndarray:
    """Physical point ``(x, y)`` of a single parameter pair."""
    if not (0.0 <= xi <= 1.0 and 0.0 <= eta <= 1.0):
        raise SplineDomainError(f"({xi}, {eta}) lies outside the unit square")
    return geom.points([xi], [eta])[0]


def geometric_factor(J: np.ndarray, det: np.ndarray | None = None) -> np.ndarray:
    """``|det J| J^-1 J^-T`` for a stack of 2x2 Jacobians.

    Uses the closed-form 2x2 inverse, so G = adj(J) adj(J)^T / |det J|.
    """
    if det is None:
        det = J[..., 0, 0] * J[..., 1, 1] - J[..., 0, 1] * J[..., 1, 0]
    adj = np.empty_like(J)
    adj[..., 0, 0] = J[..., 1, 1]
    adj[..., 0, 1] = -J[..., 0, 1]
    adj[..., 1, 0] = -J[..., 1, 0]
    adj[..., 1, 1] = J[..., 0, 0]
    G = np.einsum("...ik,...jk->...ij", adj, adj) / np.abs(det)[..., None, None]
    # the product above is symmetric in exact arithmetic; pin it bitwise
    G[..., 1, 0] = G[..., 0, 1]
    return G


def eval_jacobian(geom: GeometryMap, xi: float, eta: float) -> JacobianData:
    """Jacobian, its determinant and the geometric factor at one point.

    Raises
    ------
    SingularMapError
        If ``|det J| < 1e-12``.
    """
    if not (0.0 <= xi <= 1.0 and 0.0 <= eta <= 1.0):
        raise SplineDomainError(f"({xi}, {eta}) lies outside the unit square")
    J = geom.jacobians([xi], [eta])[0]
    det = J[0, 0] * J[1, 1] - J[0, 1] * J[1, 0]
    if abs(det) < DET_TOL:
        raise SingularMapError((xi, eta), det)
    return JacobianData(J, float(det), geometric_factor(J, det))


def validate_bijectivity(geom: GeometryMap, samples: int = 50, extra_points=None) -> BijectivityReport:
    """Sample ``det J`` on a uniform grid (plus optional extra points).

    The map passes when the smallest sampled determinant is positive. This is
    a sampling check, not a proof of global injectivity.
    """
    if samples < 2:
        raise ValueError("need at least 2 samples per direction")
    t = np.linspace(0.0, 1.0, samples)
    X, Y = np.meshgrid(t, t)
    pts = np.column_stack([X.ravel(), Y.ravel()])
    if extra_points is not None:
        pts = np.vstack([pts, np.asarray(extra_points, dtype=float).reshape(-1, 2)])
    J = geom.jacobians(pts[:, 0], pts[:, 1])
    det = J[:, 0, 0] * J[:, 1, 1] - J[:, 0, 1] * J[:, 1, 0]
    k = int(np.argmin(det))
    return BijectivityReport(
        min_det=float(det[k]),
        max_det=float(det.max()),
        argmin=(float(pts[k, 0]), float(pts[k, 1])),
        n_samples=len(pts),
    )
