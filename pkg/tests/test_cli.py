import csv
import json
import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from bolzalab import cli
from bolzalab.errors import ConfigError

ladders = st.lists(st.floats(1e-3, 10.0), min_size=3, max_size=6, unique=True).map(
    lambda xs: tuple(sorted(xs, reverse=True)))


@given(
    seed=st.integers(0, 2**32),
    n=st.integers(1, 10**7),
    ladder=ladders,
    t_max=st.floats(0.1, 100.0),
    L=st.floats(0.5, 10.0),
    m=st.integers(0, 4),
)
def test_config_json_roundtrip(seed, n, ladder, t_max, L, m):
    cfg = cli.RunConfig(seed=seed, n_samples=n, lambda_ladder=ladder, t_max=t_max, census_L=L, m=m)
    assert cli.RunConfig.from_json(cfg.to_json()) == cfg


@pytest.mark.parametrize(
    "bad",
    [
        {"lambda_ladder": [0.1, 0.2, 0.05]},
        {"lambda_ladder": [0.4, 0.4, 0.1]},
        {"lambda_ladder": [0.4, 0.2]},
        {"n_samples": 0},
        {"basis_size": 0},
        {"seed": 1.5},
        {"t_max": -1.0},
        {"colour": "blue"},
    ],
)
def test_invalid_configs(bad):
    with pytest.raises(ConfigError):
        cli.RunConfig.from_dict(bad)


def test_invalid_config_exits_3(tmp_path, capsys):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"lambda_ladder": [0.1, 0.2, 0.3]}))
    code = cli.main(["census", "--config", str(path), "--out", str(tmp_path)])
    assert code == 3
    err = json.loads(capsys.readouterr().err)
    assert err["error"] == "ConfigError" and err["exit_code"] == 3
    assert json.loads((tmp_path / "census" / "error.json").read_text())["exit_code"] == 3


def test_bad_arguments_exit_3(capsys):
    assert cli.main(["no-such-command"]) == 3
    assert cli.main(["census", "--seed", "x"]) == 3


def test_budget_error_exits_4(tmp_path, capsys):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"census_L": 40.0}))
    assert cli.main(["census", "--config", str(path), "--out", str(tmp_path)]) == 4
    assert json.loads(capsys.readouterr().err)["error"] == "BudgetExceeded"


def test_census_subcommand_writes_systole(tmp_path, capsys):
    path = tmp_path / "cfg.json"
    path.write_text(cli.RunConfig(census_L=3.06).to_json())
    code = cli.main(["census", "--config", str(path), "--out", str(tmp_path / "a")])
    assert code == 0
    rows = list(csv.DictReader(open(tmp_path / "a" / "census" / "census.csv")))
    assert len(rows) == 12
    assert float(rows[0]["length"]) == pytest.approx(2 * math.acosh(1 + math.sqrt(2)), abs=1e-12)
    assert float(rows[0]["length"]) == pytest.approx(3.0571412, abs=1e-6)
    manifest = json.loads((tmp_path / "a" / "census" / "manifest.json").read_text())
    assert manifest["config"]["census_L"] == 3.06
    assert manifest["versions"]["kernel_backend"] in ("cython", "numpy")
    assert "wall_time_s" in manifest
    # a second run with another thread count gives the same bytes
    cli.main(["census", "--config", str(path), "--out", str(tmp_path / "b"), "--threads", "3"])
    for name in ("census.csv", "report.json"):
        assert (tmp_path / "a" / "census" / name).read_bytes() == (tmp_path / "b" / "census" / name).read_bytes()


def test_threads_from_environment(monkeypatch):
    args = cli.build_parser().parse_args(["geometry"])
    assert cli.load_config(args, {"LAB_THREADS": "6"}).threads == 6
    args = cli.build_parser().parse_args(["geometry", "--threads", "2"])
    assert cli.load_config(args, {"LAB_THREADS": "6"}).threads == 2
    with pytest.raises(ConfigError):
        cli.load_config(cli.build_parser().parse_args(["geometry"]), {"LAB_THREADS": "many"})


def test_seed_override(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(cli.RunConfig(seed=3).to_json())
    args = cli.build_parser().parse_args(["geometry", "--config", str(path), "--seed", "9"])
    assert cli.load_config(args, {}).seed == 9


def test_geometry_subcommand_passes(tmp_path, capsys):
    assert cli.main(["geometry", "--out", str(tmp_path)]) == 0
    report = json.loads((tmp_path / "geometry" / "report.json").read_text())
    assert report["passed"] and all(report["checks"].values())
