import json

import pytest
from click.testing import CliRunner

from alpertlab.cli import load_params, main
from alpertlab.experiments import ConfigError


@pytest.fixture
def runner():
    return CliRunner()


def test_list(runner):
    res = runner.invoke(main, ["list"])
    assert res.exit_code == 0
    assert "averaged-testing" in res.output and "psp-scan" in res.output


def test_run_writes_outputs(runner, tmp_path):
    res = runner.invoke(main, ["run", "dft", "--out", str(tmp_path)])
    assert res.exit_code == 0, res.output
    (run_dir,) = list((tmp_path / "dft").iterdir())
    assert {p.name for p in run_dir.iterdir()} == {"rows.csv", "summary.json", "config.resolved"}
    summary = json.loads((run_dir / "summary.json").read_text())
    assert summary["experiment"] == "dft" and summary["schema_version"] == "1"
    assert (run_dir / "rows.csv").read_text().startswith("experiment,label,d,s,kappa,eta,q,m,xi,x,value_re")


def test_config_file_and_override(runner, tmp_path):
    cfg = tmp_path / "c.toml"
    cfg.write_text("d = 2\nkappa = 3\nq = 4.5\n")
    res = runner.invoke(main, ["run", "dft", "--config", str(cfg), "--set", "s=3", "--out", str(tmp_path)])
    assert res.exit_code == 0, res.output
    (run_dir,) = list((tmp_path / "dft").iterdir())
    assert "s = 3" in (run_dir / "config.resolved").read_text()


@pytest.mark.parametrize(
    "args,needle",
    [
        (["run", "zero-case", "--set", "q=4"], "q=4"),
        (["run", "zero-case", "--set", "kappa=2"], "kappa=2"),
        (["run", "dft", "--set", "delta=0.7"], "delta=0.7"),
        (["run", "dft", "--set", "bogus=1"], "bogus"),
        (["run", "no-such-experiment"], "unknown experiment"),
        (["run", "dft", "--set", "novalue"], "key=value"),
    ],
)
def test_config_errors_exit_2(runner, tmp_path, args, needle):
    res = runner.invoke(main, args + ["--out", str(tmp_path)])
    assert res.exit_code == 2
    assert needle in res.output


def test_missing_config_file(runner, tmp_path):
    res = runner.invoke(main, ["run", "dft", "--config", str(tmp_path / "missing.toml")])
    assert res.exit_code == 2


def test_override_values_are_parsed_as_toml():
    p = load_params(None, ["s_values=[3, 4]", "eta=0.125", "seed=7"])
    assert p.s_values == (3, 4) and p.eta == 0.125 and p.seed == 7
    with pytest.raises(ConfigError):
        load_params(None, ["d=two"]).validate()
