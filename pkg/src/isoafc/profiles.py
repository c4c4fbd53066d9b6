"""Dirichlet boundary profiles prescribed in parametric coordinates.

A profile exposes ``evaluate(edge, t)`` for the edge parameter ``t`` in
[0, 1] and ``breaks(edge)``, the parameters where the data jumps.
Edges are named ``bottom`` (eta=0), ``right`` (xi=1), ``top`` (eta=1) and
``left`` (xi=0); ``t`` runs along xi on bottom/top and along eta on left/right.
"""

from __future__ import annotations

import numpy as np

from .afc import edge_params

EDGES = ("bottom", "right", "top", "left")


class StepProfile:
    """1 where ``eta <= c0 + c1 * xi`` and 0 elsewhere.

    The default line ``eta = 1/5 - xi/5`` gives the benchmark inflow profile.
    """

    name = "paper-step"

    def __init__(self, c0: float = 0.2, c1: float = -0.2):
        self.c0 = c0
        self.c1 = c1

    def __call__(self, xi, eta):
        return np.where(np.asarray(eta) <= self.c0 + self.c1 * np.asarray(xi), 1.0, 0.0)

    def evaluate(self, edge: str, t):
        xi, eta = edge_params(edge, t)
        return self(xi, eta)

    def breaks(self, edge: str) -> tuple[float, ...]:
        # intersection of the step line with the edge, if interior
        c0, c1 = self.c0, self.c1
        if edge in ("left", "right"):
            t = c0 + c1 * (0.0 if edge == "left" else 1.0)
        else:
            eta = 0.0 if edge == "bottom" else 1.0
            if c1 == 0.0:
                return ()
            t = (eta - c0) / c1
        return (t,) if 0.0 < t < 1.0 else ()


class TableProfile:
    """Piecewise-constant data per edge.

    ``table`` maps edge names to lists of ``(t0, t1, value)`` segments that
    tile [0, 1]. At a shared breakpoint the later segment wins.
    """

    name = "table"

    def __init__(self, table: dict):
        self.table = {e: [tuple(map(float, seg)) for seg in table[e]] for e in EDGES}

    def evaluate(self, edge: str, t):
        t = np.asarray(t, dtype=float)
        out = np.zeros_like(t)
        for t0, t1, val in self.table[edge]:
            out = np.where((t >= t0) & (t <= t1), val, out)
        return out

    def breaks(self, edge: str) -> tuple[float, ...]:
        pts = {s[0] for s in self.table[edge]} | {s[1] for s in self.table[edge]}
        return tuple(sorted(b for b in pts if 0.0 < b < 1.0))


class ConstantProfile:
    name = "constant"

    def __init__(self, value: float = 1.0):
        self.value = float(value)

    def evaluate(self, edge, t):
        return np.full(np.shape(t), self.value)

    def breaks(self, edge):
        return ()
