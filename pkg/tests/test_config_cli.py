from dataclasses import replace
from pathlib import Path

import pytest

from vrbdsde_lab import config as cfgmod
from vrbdsde_lab.cli import execute, main
from vrbdsde_lab.errors import ConfigError
from vrbdsde_lab.reports import parse_summary

CONFIGS = Path(__file__).resolve().parents[1] / "configs"
HEAD = "schema_version = 1\n"


@pytest.mark.parametrize("path", sorted(CONFIGS.glob("*.toml")), ids=lambda p: p.stem)
def test_configs_round_trip(path):
    cfg = cfgmod.load(path)
    assert cfgmod.loads(cfgmod.dumps(cfg)) == cfg


def test_defaults_round_trip():
    cfg = cfgmod.from_dict({"schema_version": 1})
    assert cfgmod.loads(cfgmod.dumps(cfg)) == cfg


@pytest.mark.parametrize(
    "text, key",
    [
        ("[grid]\nsteps = 4\n", "grid.steps"),
        ("[solver]\nmax_iter = 1\n", "solver.max_iter"),
        ("[grid]\nN = \"four\"\n", "grid.N"),
        ('experiment = "nope"\n', "experiment"),
        ("[boundary]\npreset = \"ramp\"\nscale = 2.0\n", "boundary.scale"),
    ],
)
def test_bad_configs_name_the_key(text, key):
    with pytest.raises(ConfigError) as err:
        cfgmod.loads(HEAD + text)
    assert err.value.key == key


def test_schema_version_is_required():
    with pytest.raises(ConfigError) as err:
        cfgmod.loads("[grid]\nN = 4\n")
    assert err.value.key == "schema_version"


def write(tmp_path, text):
    p = tmp_path / "cfg.toml"
    p.write_text(text)
    return str(p)


def run(tmp_path, experiment, config, *extra):
    out = tmp_path / f"out_{experiment}"
    code = main([experiment, "--config", str(config), "--out", str(out), *extra])
    return code, out


def test_solve_passes(tmp_path, capsys):
    code, out = run(tmp_path, "solve", CONFIGS / "contraction.toml")
    assert code == 0
    assert capsys.readouterr().out.strip() == "PASS 0"
    summary = parse_summary((out / "summary.txt").read_text())
    assert summary["verdict"] == "PASS" and summary["experiment"] == "solve"
    assert (out / "nodes.csv").read_text().startswith("time_index,w_state,b_suffix,w_path,b_path,")


def test_non_contractive_problem_exits_3(tmp_path, capsys):
    code, out = run(tmp_path, "solve", CONFIGS / "not_contractive.toml", "--strict")
    assert code == 3
    err = capsys.readouterr().err
    assert "contraction" in err and "drift.lipschitz_y" in err
    assert (out / "verdict.txt").read_text() == "FAIL 3\n"


def test_no_convergence_exits_2(tmp_path):
    cfg = write(tmp_path, (CONFIGS / "contraction.toml").read_text().replace("max_iter = 50", "max_iter = 2")
                .replace("tol_fp = 1e-9", "tol_fp = 1e-15"))
    code, _ = run(tmp_path, "solve", cfg)
    assert code == 2


def test_unknown_key_exits_3(tmp_path, capsys):
    cfg = write(tmp_path, HEAD + "[grid]\nsteps = 4\n")
    code, _ = run(tmp_path, "solve", cfg)
    assert code == 3
    assert "grid.steps" in capsys.readouterr().err


def test_validate_reports_constants(tmp_path):
    code, out = run(tmp_path, "validate", CONFIGS / "linear_validate.toml")
    assert code == 0
    summary = parse_summary((out / "summary.txt").read_text())
    for key in ("assumptions.gamma_hat", "constants.contraction", "constants.stability"):
        float(summary[key])


def test_compare_constant_shift(tmp_path):
    code, out = run(tmp_path, "compare", CONFIGS / "compare_shift.toml")
    assert code == 0
    assert parse_summary((out / "summary.txt").read_text())["compare.y_order_ok"] == "True"


@pytest.mark.parametrize("experiment", ["represent", "skorohod", "stability"])
def test_other_experiments_pass(tmp_path, experiment):
    code, _ = run(tmp_path, experiment, CONFIGS / "contraction.toml")
    assert code == 0


def test_outputs_are_byte_identical(tmp_path):
    _, a = run(tmp_path / "a", "solve", CONFIGS / "contraction.toml")
    _, b = run(tmp_path / "b", "solve", CONFIGS / "contraction.toml")
    names = sorted(p.name for p in a.iterdir())
    assert names == sorted(p.name for p in b.iterdir())
    for name in names:
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_node_granularity(tmp_path):
    cfg = cfgmod.load(CONFIGS / "contraction.toml")
    cfg = replace(cfg, output=replace(cfg.output, granularity="node"))
    res = execute(cfg)
    assert res.code == 0
    head = res.files["nodes.csv"].splitlines()[0]
    assert head.startswith("time_index,w_state,b_suffix,") and "w_path" not in head
