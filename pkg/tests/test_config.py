import copy

import numpy as np
import numpy.testing as npt
import pytest
import yaml

from isoafc.config import (
    ConfigError,
    bundled_cases,
    config_from_dict,
    config_to_dict,
    parse_config,
    resolve_case,
    write_config,
)
from isoafc.profiles import StepProfile, TableProfile


@pytest.fixture
def raw():
    return yaml.safe_load(resolve_case("unit_square").read_text())


def problems(exc):
    return dict(exc.value.problems)


class TestBundledCases:
    def test_listing(self):
        assert set(bundled_cases()) == {"unit_square.case", "deformed.case"}

    def test_unit_square(self, unit_square_cfg):
        cfg = unit_square_cfg
        assert cfg.name == "unit_square"
        assert cfg.geometry.degree == 2
        assert cfg.geometry.knots_xi == [0, 0, 0, 0.5, 1, 1, 1]
        assert cfg.geometry.knots_eta == [0, 0, 0, 0.5, 1, 1, 1]
        assert cfg.physics.diffusion == 1e-4
        npt.assert_allclose(cfg.physics.velocity, [np.sqrt(2)] * 2, rtol=1e-15)
        net = cfg.net()
        assert net.shape == (16, 2)
        npt.assert_allclose(net[5], [1 / 3, 1 / 3], rtol=1e-15)
        assert cfg.refinement.target == [18, 18]
        assert isinstance(cfg.profile(), StepProfile)
        assert cfg.source_function() is None

    def test_deformed_net_from_figure(self, deformed_cfg):
        net = deformed_cfg.net()
        npt.assert_array_equal(net[:6], [[0, 0], [0.33, -0.2], [0.66, 0], [1, 0], [-0.2, 0.33], [0.4, 0.33]])
        npt.assert_array_equal(net[11], [1.2, 0.66])

    @pytest.mark.parametrize("name", ["unit_square.case", "deformed.case"])
    def test_round_trip(self, name, tmp_path):
        cfg = parse_config(resolve_case(name))
        out = tmp_path / name
        write_config(cfg, out)
        again = parse_config(out)
        assert again == cfg
        assert config_to_dict(again) == config_to_dict(cfg)

    def test_resolve_unknown(self):
        with pytest.raises(FileNotFoundError):
            resolve_case("no_such_case")


class TestValidation:
    def test_net_size_15(self, raw):
        raw["geometry"]["control_net"] = raw["geometry"]["control_net"][:15]
        with pytest.raises(ConfigError) as exc:
            config_from_dict(raw)
        assert "geometry.control_net" in problems(exc)
        assert "geometry.control_net" in str(exc.value)
        assert "15" in problems(exc)["geometry.control_net"]

    def test_collects_every_problem(self, raw):
        raw["geometry"]["degree"] = "two"
        raw["physics"]["diffusion"] = -1
        raw["physics"]["velocity"] = [1.0]
        raw["solver"]["omega"] = 1.5
        raw["output"]["formats"] = ["vtk", "gif"]
        raw["extra"] = 1
        with pytest.raises(ConfigError) as exc:
            config_from_dict(raw)
        got = problems(exc)
        for path in ("geometry.degree", "physics.diffusion", "physics.velocity",
                     "solver.omega", "output.formats", "extra"):
            assert path in got, path

    def test_missing_sections(self):
        with pytest.raises(ConfigError) as exc:
            config_from_dict({"name": "x"})
        assert {"geometry", "refinement", "physics"} <= set(problems(exc))

    def test_not_a_mapping(self):
        with pytest.raises(ConfigError):
            config_from_dict([1, 2, 3])

    @pytest.mark.parametrize(
        "section, key, value, path",
        [
            ("geometry", "knots_xi", [0, 0, 1, 0.5, 1, 1, 1], "geometry.knots_xi"),
            ("geometry", "knots_xi", [0, 0, 0, "half", 1, 1, 1], "geometry.knots_xi[3]"),
            ("refinement", "target", [3, 18], "refinement.target[0]"),
            ("refinement", "target", [18], "refinement.target"),
            ("physics", "source", "sin(z)", "physics.source"),
            ("solver", "force_alpha", 0.5, "solver.force_alpha"),
            ("solver", "limiter", "yes", "solver.limiter"),
            ("solver", "max_iterations", 0, "solver.max_iterations"),
            ("solver", "quadrature", 0, "solver.quadrature"),
            ("solver", "tolerance", -1, "solver.tolerance"),
            ("output", "resolution", 1, "output.resolution"),
            ("boundary", "profile", "ramp", "boundary.profile"),
            ("geometry", "bogus", 1, "geometry.bogus"),
        ],
    )
    def test_single_field(self, raw, section, key, value, path):
        raw = copy.deepcopy(raw)
        raw.setdefault(section, {})[key] = value
        with pytest.raises(ConfigError) as exc:
            config_from_dict(raw)
        assert path in problems(exc)

    def test_boolean_is_not_a_number(self, raw):
        raw["physics"]["diffusion"] = True
        with pytest.raises(ConfigError, match="boolean"):
            config_from_dict(raw)

    def test_yaml_syntax(self, tmp_path):
        p = tmp_path / "bad.case"
        p.write_text("geometry: [unclosed\n")
        with pytest.raises(ConfigError, match="YAML"):
            parse_config(p)


class TestExpressions:
    def test_constant_expressions(self, raw):
        raw["physics"]["diffusion"] = "1/2 * 10**-3"
        raw["physics"]["velocity"] = ["cos(pi/4)", "sin(pi/4)"]
        cfg = config_from_dict(raw)
        assert cfg.physics.diffusion == 5e-4
        npt.assert_allclose(cfg.physics.velocity, [np.sqrt(0.5)] * 2, rtol=1e-15)

    def test_source_expression(self, raw):
        raw["physics"]["source"] = "x*y + 1"
        f = config_from_dict(raw).source_function()
        npt.assert_allclose(f(np.array([[0.5, 2.0], [0.0, 0.0]])), [2.0, 1.0])

    def test_constant_source_broadcasts(self, raw):
        raw["physics"]["source"] = "3"
        f = config_from_dict(raw).source_function()
        npt.assert_array_equal(f(np.zeros((4, 2))), 3.0)


class TestTableProfile:
    def test_valid(self, raw):
        raw["boundary"] = {
            "profile": "table",
            "table": {
                "bottom": [[0, 1, 1]],
                "right": [[0, 1, 0]],
                "top": [[0, 1, 0]],
                "left": [[0, 0.25, 1], [0.25, 1, 0]],
            },
        }
        cfg = config_from_dict(raw)
        prof = cfg.profile()
        assert isinstance(prof, TableProfile)
        npt.assert_array_equal(prof.evaluate("left", np.array([0.1, 0.5])), [1, 0])

    def test_gap(self, raw):
        raw["boundary"] = {
            "profile": "table",
            "table": {e: [[0, 1, 0]] for e in ("bottom", "right", "top")} | {"left": [[0, 0.2, 1], [0.3, 1, 0]]},
        }
        with pytest.raises(ConfigError) as exc:
            config_from_dict(raw)
        assert "boundary.table.left" in problems(exc)

    def test_missing_edge(self, raw):
        raw["boundary"] = {"profile": "table", "table": {"left": [[0, 1, 1]]}}
        with pytest.raises(ConfigError) as exc:
            config_from_dict(raw)
        assert {"boundary.table.bottom", "boundary.table.right", "boundary.table.top"} <= set(problems(exc))


class TestStepProfile:
    def test_edges(self):
        prof = StepProfile()
        npt.assert_array_equal(prof.evaluate("bottom", np.linspace(0, 1, 5)), 1.0)
        npt.assert_array_equal(prof.evaluate("top", np.linspace(0, 1, 5)), 0.0)
        npt.assert_array_equal(prof.evaluate("left", np.array([0, 0.2, 0.21, 1])), [1, 1, 0, 0])
        npt.assert_array_equal(prof.evaluate("right", np.array([0, 0.01])), [1, 0])

    def test_breaks(self):
        prof = StepProfile()
        assert prof.breaks("left") == (0.2,)
        assert prof.breaks("bottom") == ()
        assert prof.breaks("right") == ()
        assert prof.breaks("top") == ()
