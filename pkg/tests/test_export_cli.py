import csv
import subprocess
import sys
from dataclasses import replace

import numpy as np
import numpy.testing as npt
import pytest
import yaml

from isoafc.cli import main
from isoafc.config import resolve_case
from isoafc.driver import EXIT_CONFIG, EXIT_GEOMETRY, EXIT_NOT_CONVERGED, EXIT_OK, CaseError, run_case, with_overrides
from isoafc.export import format_report, read_vtk_scalars, sample_lattice, write_coefficients, write_vtk


class TestExport:
    def test_vtk_structure(self, unit_square_result, tmp_path):
        res = unit_square_result
        path = write_vtk(tmp_path / "s.vtk", res.space, res.geometry, res.report.u, 101)
        data = read_vtk_scalars(path)
        assert data["header"][0].startswith("# vtk DataFile")
        assert data["header"][3] == "DATASET STRUCTURED_GRID"
        assert data["dimensions"] == (101, 101, 1)
        assert data["points"].shape == (101 * 101, 3)
        u = data["u"]
        assert u.size == 101 * 101
        # spline values are convex combinations of the coefficients
        assert u.min() >= res.report.u_min - 1e-15
        assert u.max() <= res.report.u_max + 1e-15
        npt.assert_allclose(data["xi"][:101], np.linspace(0, 1, 101))

    def test_vtk_points_follow_geometry(self, deformed_result, tmp_path):
        res = deformed_result
        data = read_vtk_scalars(write_vtk(tmp_path / "d.vtk", res.space, res.geometry, res.report.u, 11))
        npt.assert_allclose(data["points"][0, :2], [0, 0], atol=1e-15)
        npt.assert_allclose(data["points"][-1, :2], [1, 1], atol=1e-15)
        assert data["points"][:, 0].min() < 0  # curved left edge bulges outward

    def test_sample_lattice_resolution(self, unit_square_result):
        res = unit_square_result
        with pytest.raises(ValueError):
            sample_lattice(res.space, res.geometry, res.report.u, 1)

    def test_coefficients_csv(self, unit_square_result, tmp_path):
        res = unit_square_result
        path = write_coefficients(tmp_path / "c.csv", res.space, res.report.u)
        with path.open() as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == 324
        assert list(rows[0]) == ["dof", "a", "b", "greville_xi", "greville_eta", "u"]
        assert rows[19]["a"] == "1" and rows[19]["b"] == "1"
        npt.assert_array_equal([float(r["u"]) for r in rows], res.report.u)

    def test_report_format(self):
        text = format_report({"case": "x", "peclet": 555.5555555555, "converged": True, "force_alpha": None})
        lines = text.splitlines()
        assert lines[0].split() == ["case:", "x"]
        assert lines[1].split() == ["peclet:", "555.5555556"]
        assert lines[2].endswith("true")
        assert lines[3].endswith("null")


class TestDriver:
    def test_diagnostics(self, unit_square_result):
        diag = unit_square_result.diagnostics
        assert diag["dofs"] == 324
        assert diag["boundary_dofs"] == 68
        assert diag["basis"] == "18 x 18"
        assert diag["converged"] is True
        assert diag["min_detJ"] > 0

    def test_deterministic(self, unit_square_cfg, unit_square_result):
        again = run_case(unit_square_cfg)
        npt.assert_array_equal(again.report.u, unit_square_result.report.u)
        a = {k: v for k, v in again.diagnostics.items() if k != "runtime_s"}
        b = {k: v for k, v in unit_square_result.diagnostics.items() if k != "runtime_s"}
        assert a == b

    def test_singular_geometry(self, unit_square_cfg):
        net = [list(p) for p in unit_square_cfg.geometry.control_net]
        net[1], net[2] = net[2], net[1]  # x_xi < 0 around xi = 0.5 on the bottom rows
        bad = replace(unit_square_cfg, geometry=replace(unit_square_cfg.geometry, control_net=net))
        with pytest.raises(CaseError) as exc:
            run_case(bad)
        assert exc.value.exit_code == EXIT_GEOMETRY
        assert exc.value.stage == "geometry"

    def test_outputs_written(self, unit_square_cfg, tmp_path):
        cfg = with_overrides(unit_square_cfg, resolution=21)
        res = run_case(cfg, tmp_path)
        assert set(res.files) == {"vtk", "csv", "png", "convergence", "report"}
        for p in res.files.values():
            assert p.exists() and p.stat().st_size > 0
        assert (tmp_path / "solution.png").read_bytes()[:4] == b"\x89PNG"


def _write_case(tmp_path, mutate):
    raw = yaml.safe_load(resolve_case("unit_square").read_text())
    mutate(raw)
    p = tmp_path / "case.case"
    p.write_text(yaml.safe_dump(raw))
    return p


class TestCLI:
    def test_solve_ok(self, tmp_path, capsys):
        code = main(["solve", "unit_square", "--out", str(tmp_path), "--no-figures", "--resolution", "11"])
        out = capsys.readouterr().out
        assert code == EXIT_OK
        assert "peclet:" in out and "555.5555556" in out
        assert (tmp_path / "solution.vtk").exists()
        assert not (tmp_path / "solution.png").exists()
        assert read_vtk_scalars(tmp_path / "solution.vtk")["dimensions"] == (11, 11, 1)

    def test_default_out_dir(self, tmp_path, monkeypatch):
        monkeypatch.chdir(tmp_path)
        assert main(["solve", "unit_square", "--no-figures", "--resolution", "5"]) == EXIT_OK
        assert (tmp_path / "unit_square-out" / "report.txt").exists()

    def test_non_convergence(self, tmp_path, capsys):
        code = main(["solve", "unit_square", "--out", str(tmp_path), "--max-iter", "2", "--no-figures"])
        assert code == EXIT_NOT_CONVERGED
        assert "did not converge" in capsys.readouterr().err

    def test_config_error(self, tmp_path, capsys):
        p = _write_case(tmp_path, lambda r: r["geometry"]["control_net"].pop())
        assert main(["solve", str(p), "--out", str(tmp_path / "o")]) == EXIT_CONFIG
        assert "geometry.control_net" in capsys.readouterr().err

    def test_missing_file(self, tmp_path):
        assert main(["solve", str(tmp_path / "nope.case")]) == EXIT_CONFIG

    def test_geometry_error(self, tmp_path, capsys):
        def fold(r):
            net = r["geometry"]["control_net"]
            net[1], net[2] = net[2], net[1]

        p = _write_case(tmp_path, fold)
        assert main(["solve", str(p), "--out", str(tmp_path / "o")]) == EXIT_GEOMETRY
        assert "not bijective" in capsys.readouterr().err

    def test_force_alpha_zero_one_iteration(self, tmp_path, capsys):
        code = main(["solve", "unit_square", "--out", str(tmp_path), "--force-alpha", "0", "--no-figures"])
        assert code == EXIT_OK
        report = dict(line.split(":", 1) for line in (tmp_path / "report.txt").read_text().splitlines())
        assert report["iterations"].strip() == "1"
        assert report["force_alpha"].strip() == "0"

    def test_flags_forwarded(self, tmp_path):
        code = main(["solve", "deformed", "--out", str(tmp_path), "--no-limiter", "--quadrature", "4",
                     "--tol", "1e-6", "--diffusion", "0.01", "--no-figures"])
        assert code == EXIT_OK
        report = (tmp_path / "report.txt").read_text()
        assert "limiter:" in report and "false" in report
        assert "diffusion:" in report and "0.01" in report

    def test_cases_listing(self, capsys):
        assert main(["cases"]) == EXIT_OK
        out = capsys.readouterr().out
        assert "unit_square.case" in out and "deformed.case" in out

    def test_module_entry_point(self):
        proc = subprocess.run([sys.executable, "-m", "isoafc", "cases"], capture_output=True, text=True)
        assert proc.returncode == 0
        assert "deformed.case" in proc.stdout

    def test_bad_argument(self):
        with pytest.raises(SystemExit) as exc:
            main(["solve", "unit_square", "--force-alpha", "2"])
        assert exc.value.code == 2
