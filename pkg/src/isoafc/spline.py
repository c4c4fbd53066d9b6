"""Univariate and tensor-product B-spline spaces.

Knot vectors are open (clamped). Basis functions are evaluated with the
triangular Cox-de Boor scheme restricted to the active span, which is
equivalent to the full recursion with the 0/0 := 0 convention.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class SplineDomainError(ValueError):
    """Raised when a parameter lies outside the knot range."""


class KnotVector:
    """Open knot vector together with a spline degree.

    Parameters
    ----------
    knots : array_like
        Nondecreasing breakpoints. The first and last value must each be
        repeated exactly ``degree + 1`` times.
    degree : int
        Polynomial degree ``p``.
    """

    def __init__(self, knots, degree: int):
        kv = np.array(knots, dtype=float)
        p = int(degree)
        if kv.ndim != 1:
            raise ValueError("knots must be one-dimensional")
        if p < 0:
            raise ValueError("degree must be nonnegative")
        if np.any(np.diff(kv) < 0):
            raise ValueError("knots must be nondecreasing")
        n = kv.size - p - 1
        if n < p + 1:
            raise ValueError(
                f"need at least {2 * (p + 1)} knots for degree {p}, got {kv.size}"
            )
        first, last = kv[0], kv[-1]
        if not first < last:
            raise ValueError("knot range is empty")
        if np.count_nonzero(kv == first) != p + 1 or np.count_nonzero(kv == last) != p + 1:
            raise ValueError("end knots must have multiplicity exactly degree + 1")
        _, counts = np.unique(kv[p + 1 : n], return_counts=True)
        if counts.size and counts.max() > p + 1:
            raise ValueError("interior knot multiplicity exceeds degree + 1")
        kv.setflags(write=False)
        self._knots = kv
        self._p = p

    @property
    def knots(self) -> np.ndarray:
        return self._knots

    @property
    def degree(self) -> int:
        return self._p

    @property
    def n(self) -> int:
        """Number of basis functions."""
        return self._knots.size - self._p - 1

    @property
    def start(self) -> float:
        return float(self._knots[0])

    @property
    def end(self) -> float:
        return float(self._knots[-1])

    @property
    def breaks(self) -> np.ndarray:
        """Distinct knot values."""
        return np.unique(self._knots)

    def spans(self) -> np.ndarray:
        """Indices ``k`` of the nonempty spans ``[knots[k], knots[k+1])``."""
        kv = self._knots
        return np.flatnonzero(kv[1:] > kv[:-1])

    def greville(self) -> np.ndarray:
        """Greville abscissae (knot averages), one per basis function."""
        p, kv = self._p, self._knots
        if p == 0:
            return 0.5 * (kv[:-1] + kv[1:])
        return np.array([kv[i + 1 : i + p + 1].mean() for i in range(self.n)])

    def multiplicity(self, xi: float) -> int:
        return int(np.count_nonzero(self._knots == xi))

    def __eq__(self, other):
        if not isinstance(other, KnotVector):
            return NotImplemented
        return self._p == other._p and np.array_equal(self._knots, other._knots)

    def __hash__(self):
        return hash((self._p, self._knots.tobytes()))

    def __repr__(self):
        return f"KnotVector({self._knots.tolist()!r}, degree={self._p})"


@dataclass(frozen=True)
class BasisSpan:
    """Nonzero basis functions at a parameter.

    ``values[r]`` belongs to basis function ``span - p + r``. ``derivs[k, r]``
    is the k-th derivative of the same function (``derivs[0] == values``).
    """

    span: int
    values: np.ndarray
    derivs: np.ndarray

    @property
    def indices(self) -> np.ndarray:
        p = self.values.size - 1
        return np.arange(self.span - p, self.span + 1)


def find_span(kv: KnotVector, xi) -> int | np.ndarray:
    """Index ``k`` of the nonempty span with ``knots[k] <= xi < knots[k+1]``.

    The right end of the parameter range belongs to the last nonempty span.
    Accepts a scalar or an array of parameters.
    """
    x = np.asarray(xi, dtype=float)
    if np.any(~np.isfinite(x)) or np.any(x < kv.start) or np.any(x > kv.end):
        raise SplineDomainError(f"parameter outside knot range [{kv.start}, {kv.end}]")
    k = np.searchsorted(kv.knots, x, side="right") - 1
    k = np.minimum(k, kv.n - 1)
    return int(k) if k.ndim == 0 else k


def _ders(kv: KnotVector, span: np.ndarray, x: np.ndarray, order: int) -> np.ndarray:
    """Vectorized basis derivatives, shape ``(npts, order + 1, p + 1)``."""
    p = kv.degree
    U = kv.knots
    npts = x.size
    ndu = np.zeros((npts, p + 1, p + 1))
    ndu[:, 0, 0] = 1.0
    left = np.zeros((npts, p + 1))
    right = np.zeros((npts, p + 1))
    for j in range(1, p + 1):
        left[:, j] = x - U[span + 1 - j]
        right[:, j] = U[span + j] - x
        saved = np.zeros(npts)
        for r in range(j):
            # lower triangle holds knot differences
            ndu[:, j, r] = right[:, r + 1] + left[:, j - r]
            temp = ndu[:, r, j - 1] / ndu[:, j, r]
            ndu[:, r, j] = saved + right[:, r + 1] * temp
            saved = left[:, j - r] * temp
        ndu[:, j, j] = saved

    out = np.zeros((npts, order + 1, p + 1))
    out[:, 0, :] = ndu[:, :, p]
    top = min(order, p)
    for r in range(p + 1):
        a = np.zeros((npts, 2, p + 1))
        a[:, 0, 0] = 1.0
        s1, s2 = 0, 1
        for k in range(1, top + 1):
            d = np.zeros(npts)
            rk, pk = r - k, p - k
            if r >= k:
                a[:, s2, 0] = a[:, s1, 0] / ndu[:, pk + 1, rk]
                d = a[:, s2, 0] * ndu[:, rk, pk]
            j1 = 1 if rk >= -1 else -rk
            j2 = k - 1 if r - 1 <= pk else p - r
            for j in range(j1, j2 + 1):
                a[:, s2, j] = (a[:, s1, j] - a[:, s1, j - 1]) / ndu[:, pk + 1, rk + j]
                d = d + a[:, s2, j] * ndu[:, rk + j, pk]
            if r <= pk:
                a[:, s2, k] = -a[:, s1, k - 1] / ndu[:, pk + 1, r]
                d = d + a[:, s2, k] * ndu[:, r, pk]
            out[:, k, r] = d
            s1, s2 = s2, s1
    fac = p
    for k in range(1, top + 1):
        out[:, k, :] *= fac
        fac *= p - k
    return out


def basis_ders(kv: KnotVector, xs, order: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Spans and derivatives of the active functions at many parameters.

    Returns ``(spans, ders)`` with ``ders`` of shape ``(npts, order + 1, p + 1)``.
    Orders above the degree come back as exact zeros.
    """
    x = np.atleast_1d(np.asarray(xs, dtype=float)).ravel()
    span = np.atleast_1d(find_span(kv, x))
    return span, _ders(kv, span, x, order)


def eval_basis(kv: KnotVector, xi: float) -> BasisSpan:
    """Values of the ``p + 1`` basis functions that may be nonzero at ``xi``."""
    return eval_basis_derivs(kv, xi, 0)


def eval_basis_derivs(kv: KnotVector, xi: float, order: int) -> BasisSpan:
    """Values and derivatives up to ``order`` of the active basis functions."""
    if order < 0:
        raise ValueError("order must be nonnegative")
    span, d = basis_ders(kv, [xi], order)
    vals = d[0, 0].copy()
    return BasisSpan(int(span[0]), vals, d[0].copy())


def eval_curve(kv: KnotVector, coeffs, xs) -> np.ndarray:
    """Evaluate ``sum_a coeffs[a] N_a(x)`` at the parameters ``xs``."""
    c = np.asarray(coeffs, dtype=float)
    span, d = basis_ders(kv, xs, 0)
    p = kv.degree
    idx = span[:, None] - p + np.arange(p + 1)
    return np.einsum("nr,nr...->n...", d[:, 0, :], c[idx])


def insert_knot(kv: KnotVector, coeffs, xi_bar: float) -> tuple[KnotVector, np.ndarray]:
    """Insert ``xi_bar`` once and return the new knot vector and coefficients.

    ``coeffs`` has the basis index along axis 0; trailing axes (e.g. physical
    coordinates) are carried along. The represented function is unchanged.
    """
    c = np.asarray(coeffs, dtype=float)
    if c.shape[0] != kv.n:
        raise ValueError(f"expected {kv.n} coefficients, got {c.shape[0]}")
    if not kv.start < xi_bar < kv.end:
        raise SplineDomainError("inserted knot must lie strictly inside the knot range")
    p = kv.degree
    if kv.multiplicity(xi_bar) + 1 > p:
        raise ValueError(f"inserting {xi_bar} would raise its multiplicity above {p}")
    U = kv.knots
    k = find_span(kv, xi_bar)
    new = np.empty((c.shape[0] + 1,) + c.shape[1:])
    for i in range(kv.n + 1):
        if i <= k - p:
            new[i] = c[i]
        elif i >= k + 1:
            new[i] = c[i - 1]
        else:
            alpha = (xi_bar - U[i]) / (U[i + p] - U[i])
            new[i] = alpha * c[i] + (1.0 - alpha) * c[i - 1]
    knots = np.insert(U, k + 1, xi_bar)
    return KnotVector(knots, p), new


def refine_knots(kv: KnotVector, coeffs, target: int) -> tuple[KnotVector, np.ndarray]:
    """Insert span midpoints until there are ``target`` basis functions.

    The largest span is halved first; ties go to the leftmost span.
    """
    if target < kv.n:
        raise ValueError(f"target {target} is below the current basis count {kv.n}")
    c = np.asarray(coeffs, dtype=float)
    while kv.n < target:
        U = kv.knots
        spans = kv.spans()
        widths = U[spans + 1] - U[spans]
        k = spans[int(np.argmax(widths))]
        kv, c = insert_knot(kv, c, 0.5 * (U[k] + U[k + 1]))
    return kv, c


class TensorSplineSpace:
    """Bivariate tensor-product spline space.

    DOFs are numbered row-major in xi: ``j = b * n_xi + a``.
    """

    def __init__(self, kv_xi: KnotVector, kv_eta: KnotVector):
        self.kv_xi = kv_xi
        self.kv_eta = kv_eta

    @property
    def n_xi(self) -> int:
        return self.kv_xi.n

    @property
    def n_eta(self) -> int:
        return self.kv_eta.n

    @property
    def n_dof(self) -> int:
        return self.n_xi * self.n_eta

    @property
    def degrees(self) -> tuple[int, int]:
        return self.kv_xi.degree, self.kv_eta.degree

    def index(self, a, b):
        return np.asarray(b) * self.n_xi + np.asarray(a)

    def tensor_index(self, j):
        j = np.asarray(j)
        return j % self.n_xi, j // self.n_xi

    def greville(self) -> np.ndarray:
        """Greville points of all DOFs, shape ``(n_dof, 2)``."""
        gx, gy = np.meshgrid(self.kv_xi.greville(), self.kv_eta.greville())
        return np.column_stack([gx.ravel(), gy.ravel()])

    def boundary_dofs(self) -> np.ndarray:
        """DOFs whose tensor index lies on the outer ring, sorted."""
        a, b = self.tensor_index(np.arange(self.n_dof))
        ring = (a == 0) | (a == self.n_xi - 1) | (b == 0) | (b == self.n_eta - 1)
        return np.flatnonzero(ring)

    def __eq__(self, other):
        if not isinstance(other, TensorSplineSpace):
            return NotImplemented
        return self.kv_xi == other.kv_xi and self.kv_eta == other.kv_eta

    def __repr__(self):
        return f"TensorSplineSpace({self.kv_xi!r}, {self.kv_eta!r})"


def support_overlap(space: TensorSplineSpace, i: int, j: int) -> bool:
    """True if DOFs ``i`` and ``j`` share support (index distance at most ``p``)."""
    ai, bi = space.tensor_index(i)
    aj, bj = space.tensor_index(j)
    px, py = space.degrees
    return bool(abs(int(ai) - int(aj)) <= px and abs(int(bi) - int(bj)) <= py)


def overlap_pairs(space: TensorSplineSpace, include_diagonal: bool = True):
    """All ordered pairs ``(i, j)`` with overlapping support, as two arrays."""
    px, py = space.degrees
    a, b = space.tensor_index(np.arange(space.n_dof))
    rows, cols = [], []
    for da in range(-px, px + 1):
        for db in range(-py, py + 1):
            if not include_diagonal and da == 0 and db == 0:
                continue
            a2, b2 = a + da, b + db
            ok = (a2 >= 0) & (a2 < space.n_xi) & (b2 >= 0) & (b2 < space.n_eta)
            rows.append(np.flatnonzero(ok))
            cols.append(space.index(a2[ok], b2[ok]))
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    order = np.lexsort((cols, rows))
    return rows[order], cols[order]


def tensor_basis(space: TensorSplineSpace, xi, eta, order: int = 1):
    """Tensor basis at paired parameter arrays.

    Returns ``(dofs, N, dN)`` where ``dofs`` has shape ``(npts, nloc)``,
    ``N`` the values and ``dN`` the parametric gradients ``(npts, nloc, 2)``
    (``dN`` is None when ``order == 0``).
    """
    px, py = space.degrees
    sx, Dx = basis_ders(space.kv_xi, xi, order)
    sy, Dy = basis_ders(space.kv_eta, eta, order)
    ax = sx[:, None] - px + np.arange(px + 1)
    by = sy[:, None] - py + np.arange(py + 1)
    npts = ax.shape[0]
    dofs = (by[:, :, None] * space.n_xi + ax[:, None, :]).reshape(npts, -1)
    N = (Dy[:, 0, :, None] * Dx[:, 0, None, :]).reshape(npts, -1)
    if order == 0:
        return dofs, N, None
    dxi = (Dy[:, 0, :, None] * Dx[:, 1, None, :]).reshape(npts, -1)
    deta = (Dy[:, 1, :, None] * Dx[:, 0, None, :]).reshape(npts, -1)
    return dofs, N, np.stack([dxi, deta], axis=-1)


def eval_tensor(space: TensorSplineSpace, coeffs, xi, eta) -> np.ndarray:
    """Evaluate a tensor spline with DOF coefficients at paired parameters."""
    c = np.asarray(coeffs, dtype=float)
    dofs, N, _ = tensor_basis(space, xi, eta, order=0)
    return np.einsum("nl,nl...->n...", N, c[dofs])


def refine_space(space: TensorSplineSpace, net, target) -> tuple[TensorSplineSpace, np.ndarray]:
    """Refine a space and its control net by knot insertion.

    ``net`` holds one row per DOF (flat, row-major in xi). ``target`` gives the
    requested basis counts ``(n_xi, n_eta)``.
    """
    tx, ty = target
    if tx < space.n_xi or ty < space.n_eta:
        raise ValueError(
            f"target {tuple(target)} below current counts ({space.n_xi}, {space.n_eta})"
        )
    c = np.asarray(net, dtype=float)
    if c.shape[0] != space.n_dof:
        raise ValueError(f"net has {c.shape[0]} rows, space has {space.n_dof} DOFs")
    grid = c.reshape((space.n_eta, space.n_xi) + c.shape[1:])
    # xi direction runs along axis 1
    kv_xi, g = refine_knots(space.kv_xi, np.swapaxes(grid, 0, 1), tx)
    grid = np.swapaxes(g, 0, 1)
    kv_eta, grid = refine_knots(space.kv_eta, grid, ty)
    new_space = TensorSplineSpace(kv_xi, kv_eta)
    return new_space, grid.reshape((new_space.n_dof,) + c.shape[1:])
