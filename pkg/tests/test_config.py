import pytest

from bdlab.config import SCHEMA, ConfigError, emit, load_config, parse_config


def test_minimal_linear_disk_defaults():
    cfg = parse_config("[experiment]\nkind = linear-disk\n")
    assert cfg.kind == "linear-disk"
    assert cfg["time"]["tau"] == 1 / 128
    assert cfg["solver"]["tol"] == 1e-10


def test_lambda_bound_is_named():
    with pytest.raises(ConfigError, match=r"Lambda > 1") as exc:
        parse_config("[coefficients]\nLambda = 0.5\n")
    assert exc.value.key == "coefficients.Lambda"


@pytest.mark.parametrize(
    "text, key",
    [
        ("[grid]\nnr = 3\n", "grid.nr"),
        ("[mystery]\nx = 1\n", "mystery"),
        ("[time]\ntau = fast\n", "time.tau"),
        ("[experiment]\ndepth = 0\n", "experiment.depth"),
        ("[experiment]\nkind = heat\n", "experiment.kind"),
        ("[nonlinear]\nband = 0.5\n", "nonlinear.band"),
        ("[coefficients]\na = import os\n", "coefficients.a"),
        ("[verification]\nproblems = torus\n", "verification.problems"),
    ],
)
def test_errors_name_the_key(text, key):
    with pytest.raises(ConfigError) as exc:
        parse_config(text)
    assert exc.value.key == key


def test_round_trip_and_full_echo():
    text = "[time]\ntau = 1/256\nT = 0.5\n[coefficients]\nv0 = 2 + cos(theta)\nmodes = 1, 4\n"
    cfg = parse_config(text)
    echo = emit(cfg)
    assert parse_config(echo) == cfg
    for section, keys in SCHEMA.items():
        assert f"[{section}]" in echo
        for key in keys:
            assert f"\n{key} = " in echo


def test_fractions_and_comments():
    cfg = parse_config("[time]\ntau = 1/64  # sixty-fourth\n")
    assert cfg["time"]["tau"] == 1 / 64


def test_replace_validates():
    cfg = parse_config("")
    assert cfg.replace("experiment", depth=3)["experiment"]["depth"] == 3
    with pytest.raises(ConfigError):
        cfg.replace("experiment", depth=0)
    with pytest.raises(ConfigError):
        cfg.replace("experiment", colour="red")


@pytest.mark.parametrize("name", ["default", "linear-disk", "disk-convergence", "linear-halfspace", "nonlinear-disk"])
def test_shipped_configs_parse(name):
    cfg = load_config(name)
    assert parse_config(emit(cfg)) == cfg


def test_missing_file():
    with pytest.raises(ConfigError, match="not found"):
        load_config("/nonexistent/run.ini")
