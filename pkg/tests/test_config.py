import logging

import pytest

from app_config import OutputSettings, configure_logging, load_output_settings, load_tolerances
from src.errors import SchemaError
from src.numerics import DEFAULT_TOLERANCES


def test_defaults_without_environment(clean_env):
    assert load_tolerances(environ=clean_env) == DEFAULT_TOLERANCES


def test_environment_then_overrides():
    env = {"EPSKIT_WINDOW": "6", "EPSKIT_SET_TOL": "0.01", "EPSKIT_ETA_LADDER": "1,0.1", "EPSKIT_DIRS": "32"}
    tol = load_tolerances(environ=env)
    assert tol.window_radius == 6.0
    assert tol.set_tol == 0.01
    assert tol.eta_ladder == (1.0, 0.1)
    assert tol.support_dirs == 32
    assert tol.gamma_splits == DEFAULT_TOLERANCES.gamma_splits

    tol = load_tolerances({"window_radius": 3, "gamma_splits": "9", "set_tol": None}, environ=env)
    assert tol.window_radius == 3.0
    assert tol.gamma_splits == 9
    assert tol.set_tol == 0.01


def test_empty_environment_values_are_ignored():
    assert load_tolerances(environ={"EPSKIT_WINDOW": ""}) == DEFAULT_TOLERANCES


@pytest.mark.parametrize(
    "env, overrides",
    [
        ({"EPSKIT_WINDOW": "wide"}, None),
        ({"EPSKIT_GAMMA_SPLITS": "3.5"}, None),
        ({}, {"radius": 4.0}),
        ({}, {"set_tol": -1.0}),
        ({}, {"eta_ladder": [0.1, 1.0]}),
    ],
)
def test_bad_tolerances(env, overrides):
    with pytest.raises(SchemaError):
        load_tolerances(overrides, environ=env)


def test_output_settings_priority():
    env = {"EPSKIT_OUT_DIR": "env_out", "EPSKIT_FORMAT": "both"}
    settings = load_output_settings(environ=env)
    assert settings == OutputSettings("env_out", "both")
    assert settings.wants_csv and settings.wants_svg
    settings = load_output_settings("cli_out", "svg", environ=env)
    assert settings.out_dir == "cli_out"
    assert not settings.wants_csv
    assert load_output_settings(environ={}) == OutputSettings()


def test_unknown_report_format():
    with pytest.raises(SchemaError):
        load_output_settings(fmt="pdf", environ={})


def test_configure_logging():
    root = logging.getLogger()
    previous = root.level
    try:
        assert configure_logging({"EPSKIT_LOG_LEVEL": "warning"}) == logging.WARNING
        assert root.level == logging.WARNING
        assert configure_logging({}) == logging.INFO
        with pytest.raises(SchemaError):
            configure_logging({"EPSKIT_LOG_LEVEL": "chatty"})
    finally:
        root.setLevel(previous)
