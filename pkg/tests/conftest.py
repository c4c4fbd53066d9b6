import numpy as np
import pytest

from isoafc.config import parse_config, resolve_case
from isoafc.driver import run_case
from isoafc.geometry import GeometryMap
from isoafc.spline import KnotVector, TensorSplineSpace, refine_space

PAPER_KNOTS = [0, 0, 0, 0.5, 1, 1, 1]


@pytest.fixture
def paper_kv():
    return KnotVector(PAPER_KNOTS, 2)


@pytest.fixture
def paper_space(paper_kv):
    return TensorSplineSpace(paper_kv, paper_kv)


@pytest.fixture(scope="session")
def unit_square_cfg():
    return parse_config(resolve_case("unit_square.case"))


@pytest.fixture(scope="session")
def deformed_cfg():
    return parse_config(resolve_case("deformed.case"))


def _refined(cfg, target=(18, 18)):
    space, net = refine_space(cfg.space(), cfg.net(), target)
    return GeometryMap(space, net)


@pytest.fixture(scope="session")
def unit_square_geom(unit_square_cfg):
    return _refined(unit_square_cfg)


@pytest.fixture(scope="session")
def deformed_geom(deformed_cfg):
    return _refined(deformed_cfg)


@pytest.fixture(scope="session")
def unit_square_result(unit_square_cfg):
    return run_case(unit_square_cfg)


@pytest.fixture(scope="session")
def deformed_result(deformed_cfg):
    return run_case(deformed_cfg)


def uniform_kv(n_spans, p):
    inner = np.linspace(0, 1, n_spans + 1)[1:-1]
    return KnotVector(np.r_[[0.0] * (p + 1), inner, [1.0] * (p + 1)], p)


def hat_strip(n_spans):
    """p=1 space: uniform hats in xi, one linear element in eta (identity map)."""
    space = TensorSplineSpace(uniform_kv(n_spans, 1), KnotVector([0, 0, 1, 1], 1))
    return space, GeometryMap.identity(space)


# --- acceptance summary -------------------------------------------------------

_acceptance = []


def pytest_runtest_logreport(report):
    if "test_acceptance" in report.nodeid and report.when == "call":
        _acceptance.append((report.nodeid.split("::")[-1], report.outcome))
    elif "test_acceptance" in report.nodeid and report.when == "setup" and report.outcome != "passed":
        _acceptance.append((report.nodeid.split("::")[-1], report.outcome))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome in _acceptance:
        mark = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"{mark}  {name}")
