"""Run a case description end to end: refine, assemble, stabilize, solve, export."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import afc, assembly, export
from .config import ProblemConfig
from .geometry import GeometryMap, SingularMapError, validate_bijectivity
from .solver import DefectCorrectionParams, SolveReport, SolverError, defect_correction_solve, peclet_number
from .spline import refine_space

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_NOT_CONVERGED = 2
EXIT_CONFIG = 3
EXIT_GEOMETRY = 4


class CaseError(RuntimeError):
    """A pipeline stage failed; ``exit_code`` follows the CLI convention."""

    def __init__(self, stage: str, cause: BaseException | str, exit_code: int = EXIT_FAILURE):
        self.stage = stage
        self.cause = cause
        self.exit_code = exit_code
        super().__init__(f"stage '{stage}' failed: {cause}")


@dataclass
class CaseResult:
    report: SolveReport
    diagnostics: dict
    space: object
    geometry: GeometryMap
    boundary: tuple
    operators: dict = field(repr=False, default_factory=dict)
    files: dict = field(default_factory=dict)


def with_overrides(cfg: ProblemConfig, **kw) -> ProblemConfig:
    """Copy of ``cfg`` with solver/physics/output fields replaced (None = keep)."""
    solver = {k: kw[k] for k in ("tolerance", "max_iterations", "quadrature", "limiter") if kw.get(k) is not None}
    if "force_alpha" in kw and kw["force_alpha"] is not None:
        solver["force_alpha"] = float(kw["force_alpha"])
    physics = {"diffusion": kw["diffusion"]} if kw.get("diffusion") is not None else {}
    output = {"resolution": kw["resolution"]} if kw.get("resolution") is not None else {}
    if kw.get("formats") is not None:
        output["formats"] = list(kw["formats"])
    return replace(
        cfg,
        solver=replace(cfg.solver, **solver),
        physics=replace(cfg.physics, **physics),
        output=replace(cfg.output, **output),
    )


def run_case(cfg: ProblemConfig, out_dir=None) -> CaseResult:
    """Execute every stage of a case; writes outputs when ``out_dir`` is given."""
    t0 = time.perf_counter()
    stage = "refine"
    try:
        space, net = refine_space(cfg.space(), cfg.net(), cfg.refinement.target)
        geom = GeometryMap(space, net)

        stage = "geometry"
        q = cfg.solver.quadrature or max(space.degrees) + 1
        quad = assembly.make_quadrature(space, q)
        check = validate_bijectivity(geom, 101, quad.flat_points())
        if not check.passed:
            raise CaseError(
                stage,
                f"det J = {check.min_det:.3e} at (xi, eta) = {check.argmin}; map is not bijective",
                EXIT_GEOMETRY,
            )

        stage = "assemble"
        v = cfg.physics.velocity
        K = assembly.assemble_convection(space, geom, quad, v)
        S = assembly.assemble_diffusion(space, geom, quad, cfg.physics.diffusion)
        r = assembly.assemble_rhs(space, geom, quad, cfg.source_function())

        stage = "afc"
        D = afc.build_discrete_diffusion(K)
        L = afc.low_order_operator(K, D)

        stage = "dirichlet"
        dofs, values = afc.boundary_values(space, net, cfg.profile())

        stage = "solve"
        params = DefectCorrectionParams(
            tolerance=cfg.solver.tolerance,
            max_iterations=cfg.solver.max_iterations,
            omega=cfg.solver.omega,
            limiter=cfg.solver.limiter,
            force_alpha=cfg.solver.force_alpha,
        )
        report = defect_correction_solve(S, L, K, r, (dofs, values), params)
    except CaseError:
        raise
    except SingularMapError as exc:
        raise CaseError(stage, exc, EXIT_GEOMETRY) from exc
    except (ValueError, ArithmeticError, SolverError) as exc:
        raise CaseError(stage, exc) from exc

    d = cfg.physics.diffusion
    pe = peclet_number(d, v, space) if d > 0 else {"xi": float("inf"), "eta": float("inf"), "max": float("inf")}
    diag = {
        "case": cfg.name,
        "dofs": space.n_dof,
        "basis": f"{space.n_xi} x {space.n_eta}",
        "degree": space.degrees[0],
        "boundary_dofs": int(dofs.size),
        "diffusion": d,
        "peclet_xi": pe["xi"],
        "peclet_eta": pe["eta"],
        "peclet": pe["max"],
        "min_detJ": check.min_det,
        "max_detJ": check.max_det,
        "limiter": cfg.solver.limiter,
        "force_alpha": cfg.solver.force_alpha,
        "u_min": report.u_min,
        "u_max": report.u_max,
        "iterations": report.iterations,
        "converged": report.converged,
        "final_residual": report.residuals[-1],
        "omega": report.omega,
        "runtime_s": time.perf_counter() - t0,
    }
    result = CaseResult(
        report, diag, space, geom, (dofs, values),
        operators={"K": K, "S": S, "D": D, "L": L, "r": r},
    )
    if out_dir is not None:
        try:
            result.files = write_outputs(result, cfg, out_dir)
        except OSError as exc:
            raise CaseError("export", exc) from exc
    return result


def write_outputs(result: CaseResult, cfg: ProblemConfig, out_dir) -> dict:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    fmts = set(cfg.output.formats)
    res = cfg.output.resolution
    u = result.report.u
    files = {}
    if "vtk" in fmts:
        files["vtk"] = export.write_vtk(out / "solution.vtk", result.space, result.geometry, u, res)
    if "csv" in fmts:
        files["csv"] = export.write_coefficients(out / "coeffs.csv", result.space, u)
    if "png" in fmts:
        from . import plotting

        files["png"] = plotting.plot_solution(
            out / "solution.png", result.space, result.geometry, u, res,
            coarse_net=np.asarray(cfg.geometry.control_net), title=cfg.name,
        )
        files["convergence"] = plotting.plot_convergence(
            out / "convergence.png", result.report.residuals, cfg.solver.tolerance
        )
    if "report" in fmts:
        files["report"] = export.write_report(out / "report.txt", result.diagnostics)
    return files
