import logging
import textwrap

import numpy as np
import pytest

from sssta.problem_builder import sample_scenario

from helpers import small_scenario_with


@pytest.fixture(autouse=True)
def reset_logging():
    """Drop handlers bound to a test's captured stderr."""
    yield
    root = logging.getLogger("sssta")
    for handler in list(root.handlers):
        root.removeHandler(handler)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def small_scenario():
    return small_scenario_with()


@pytest.fixture
def small_problem(small_scenario):
    return sample_scenario(small_scenario)


@pytest.fixture
def write_config(tmp_path):
    """Write a TOML run config into tmp_path and return its path."""

    def _write(body: str, name: str = "run.toml"):
        path = tmp_path / name
        path.write_text(textwrap.dedent(body), encoding="utf-8")
        return path

    return _write


SMALL_CONFIG = """
    schema_version = 1
    method = "{method}"
    output_dir = "{output_dir}"

    [scenario]
    mainlobe_theta = 0.0
    gamma = 45.0
    eta = 100.0
    aperture = 3.0
    grid_count = 31
    alpha = {alpha}
    min_separation = 0.8

    [[scenario.sidelobes]]
    phi = 90.0
    theta_start = 20.0
    theta_end = 90.0
    step = 5.0

    [[scenario.sidelobes]]
    phi = -90.0
    theta_start = 20.0
    theta_end = 90.0
    step = 5.0

    [evaluation]
    pattern_step = 0.5
    ula_spacing = 0.5
"""


@pytest.fixture
def small_config(write_config, tmp_path):
    def _make(method: str = "cs-imdsm", alpha: float = 0.5, name: str = "run.toml"):
        output_dir = (tmp_path / "out").as_posix()
        return write_config(SMALL_CONFIG.format(method=method, alpha=alpha, output_dir=output_dir), name)

    return _make

