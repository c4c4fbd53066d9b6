"""Solution export: legacy VTK structured grid, coefficient table, report."""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .geometry import GeometryMap
from .spline import TensorSplineSpace, eval_tensor


def sample_lattice(space: TensorSplineSpace, geom: GeometryMap, u, resolution: int):
    """Sample geometry and solution on a uniform parametric lattice.

    Returns ``(xi, eta, points, values)``; arrays are flattened with xi
    varying fastest, ``points`` has shape ``(resolution**2, 2)``.
    """
    if resolution < 2:
        raise ValueError("resolution must be at least 2")
    t = np.linspace(0.0, 1.0, resolution)
    XI, ETA = np.meshgrid(t, t)
    xi, eta = XI.ravel(), ETA.ravel()
    return xi, eta, geom.points(xi, eta), eval_tensor(space, u, xi, eta)


def write_vtk(path, space: TensorSplineSpace, geom: GeometryMap, u, resolution: int) -> Path:
    path = Path(path)
    xi, eta, pts, vals = sample_lattice(space, geom, u, resolution)
    n = resolution * resolution
    with path.open("w") as fh:
        fh.write("# vtk DataFile Version 3.0\n")
        fh.write("isoafc convection-diffusion solution\n")
        fh.write("ASCII\n")
        fh.write("DATASET STRUCTURED_GRID\n")
        fh.write(f"DIMENSIONS {resolution} {resolution} 1\n")
        fh.write(f"POINTS {n} double\n")
        np.savetxt(fh, np.column_stack([pts, np.zeros(n)]), fmt="%.17g")
        fh.write(f"POINT_DATA {n}\n")
        for name, data in (("u", vals), ("xi", xi), ("eta", eta)):
            fh.write(f"SCALARS {name} double 1\nLOOKUP_TABLE default\n")
            np.savetxt(fh, data, fmt="%.17g")
    return path


def read_vtk_scalars(path) -> dict:
    """Minimal reader for files written by :func:`write_vtk` (used in tests)."""
    lines = Path(path).read_text().splitlines()
    out = {"header": lines[:5]}
    k = 0
    while k < len(lines):
        line = lines[k]
        if line.startswith("DIMENSIONS"):
            out["dimensions"] = tuple(int(v) for v in line.split()[1:])
        elif line.startswith("POINTS"):
            n = int(line.split()[1])
            out["points"] = np.loadtxt(lines[k + 1 : k + 1 + n])
            k += n
        elif line.startswith("SCALARS"):
            name = line.split()[1]
            n = out["points"].shape[0]
            out[name] = np.loadtxt(lines[k + 2 : k + 2 + n])
            k += n + 1
        k += 1
    return out


def write_coefficients(path, space: TensorSplineSpace, u) -> Path:
    """Comma-separated DOF table: index, tensor indices, Greville anchor, value."""
    path = Path(path)
    a, b = space.tensor_index(np.arange(space.n_dof))
    g = space.greville()
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["dof", "a", "b", "greville_xi", "greville_eta", "u"])
        for j in range(space.n_dof):
            w.writerow([j, int(a[j]), int(b[j]), repr(float(g[j, 0])), repr(float(g[j, 1])), repr(float(u[j]))])
    return path


def format_report(diag: dict) -> str:
    width = max(len(k) for k in diag)
    lines = []
    for k, v in diag.items():
        if isinstance(v, float):
            v = f"{v:.10g}"
        elif isinstance(v, bool):
            v = str(v).lower()
        elif v is None:
            v = "null"
        lines.append(f"{k + ':':<{width + 1}} {v}")
    return "\n".join(lines) + "\n"


def write_report(path, diag: dict) -> Path:
    path = Path(path)
    path.write_text(format_report(diag))
    return path
