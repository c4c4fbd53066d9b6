"""Sparse linear solves and the defect-correction iteration."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .afc import EdgeSet, apply_dirichlet, build_edges, limit_fluxes
from .spline import TensorSplineSpace

log = logging.getLogger(__name__)


class SolverError(RuntimeError):
    pass


def _factorize(A):
    try:
        lu = spla.splu(sp.csc_matrix(A))
    except RuntimeError as exc:  # "Factor is exactly singular"
        raise SolverError(f"factorization failed: {exc}") from exc
    if not np.all(np.isfinite(lu.U.diagonal())) or np.any(lu.U.diagonal() == 0):
        raise SolverError("matrix is numerically singular")
    return lu


def solve_linear(A, b, method: str = "direct", tol: float = 1e-14) -> np.ndarray:
    """Solve ``A x = b`` by sparse LU (default) or ILU-preconditioned GMRES."""
    b = np.asarray(b, dtype=float)
    if A.shape[0] != A.shape[1] or A.shape[0] != b.size:
        raise ValueError(f"incompatible shapes {A.shape} and {b.shape}")
    if method == "direct":
        return _factorize(A).solve(b)
    if method == "gmres":
        A = sp.csc_matrix(A)
        ilu = spla.spilu(A)
        M = spla.LinearOperator(A.shape, ilu.solve)
        x, info = spla.gmres(A, b, M=M, rtol=tol, atol=0.0, restart=200, maxiter=1000)
        if info != 0:
            raise SolverError(f"GMRES did not converge (info={info})")
        return x
    raise ValueError(f"unknown method {method!r}")


@dataclass
class DefectCorrectionParams:
    tolerance: float = 1e-8
    max_iterations: int = 500
    omega: float = 1.0
    min_omega: float = 0.125
    # damping is opt-in: halve omega after `stall_window` consecutive residual
    # increases, double it back after `recover_window` consecutive decreases
    stall_window: int | None = None
    recover_window: int | None = 3
    limiter: bool = True
    force_alpha: float | None = None


@dataclass
class SolveReport:
    iterations: int
    residuals: list[float]
    converged: bool
    u: np.ndarray
    omega: float = 1.0
    alpha: np.ndarray | None = field(default=None, repr=False)

    @property
    def u_min(self) -> float:
        return float(np.min(self.u))

    @property
    def u_max(self) -> float:
        return float(np.max(self.u))


def defect_correction_solve(S, L, K, r, bc, params: DefectCorrectionParams | None = None,
                            edges: EdgeSet | None = None) -> SolveReport:
    """Solve ``(S - L) u = r + fbar(u)`` by preconditioned fixed-point iteration.

    ``bc`` is a pair ``(dofs, values)`` of Dirichlet data. The low-order matrix
    ``S - L`` with identity rows on ``dofs`` is factorized once; each sweep
    recomputes the limited correction and updates
    ``u <- u + omega * A^-1 (r + fbar(u) - A u)``.
    """
    params = params or DefectCorrectionParams()
    dofs, values = (np.asarray(x) for x in bc)
    A, rhs = apply_dirichlet(S, L, r, dofs, values)
    lu = _factorize(A)
    n = A.shape[0]

    if edges is None:
        D = sp.csr_matrix(L - K)
        edges = build_edges(L, D)
    force = params.force_alpha
    if not params.limiter and force is None:
        force = 0.0
    interior = np.ones(n, dtype=bool)
    interior[dofs] = False
    scale = max(1.0, float(np.max(np.abs(rhs), initial=0.0)))
    tol = params.tolerance * scale

    u = lu.solve(rhs)
    # identity rows hold the data exactly; drop LU round-off on them
    u[dofs] = values
    iterations = 1
    omega = params.omega
    history: list[float] = []
    rising = falling = 0
    alpha = None
    while True:
        corr = limit_fluxes(edges, u, force)
        alpha = corr.alpha
        rho = rhs + corr.fbar * interior - A @ u
        rho[~interior] = 0.0
        res = float(np.max(np.abs(rho), initial=0.0))
        if not np.isfinite(res):
            raise SolverError(f"non-finite residual at iteration {iterations}")
        if history and res > history[-1]:
            rising += 1
            falling = 0
        else:
            rising = 0
            falling += 1
        history.append(res)
        if res < tol:
            converged = True
            break
        if iterations >= params.max_iterations:
            converged = False
            break
        if (params.stall_window is not None and rising >= params.stall_window
                and omega > params.min_omega):
            omega = max(params.min_omega, 0.5 * omega)
            rising = 0
            log.debug("residual rising, damping to omega=%g", omega)
        elif (params.recover_window is not None and falling >= params.recover_window
              and omega < params.omega):
            omega = min(params.omega, 2.0 * omega)
            falling = 0
        u = u + omega * lu.solve(rho)
        u[dofs] = values
        iterations += 1
    return SolveReport(iterations, history, converged, u, omega, alpha)


def peclet_number(d: float, v, space: TensorSplineSpace) -> dict:
    """Element Peclet number ``|v| h / (2 d)`` with ``h = 1 / (basis count)``."""
    if d <= 0:
        raise ValueError("Peclet number needs a positive diffusion coefficient")
    speed = float(np.linalg.norm(np.asarray(v, dtype=float)))
    pe_xi = speed / space.n_xi / (2.0 * d)
    pe_eta = speed / space.n_eta / (2.0 * d)
    return {"xi": pe_xi, "eta": pe_eta, "max": max(pe_xi, pe_eta)}
