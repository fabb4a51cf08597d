import dataclasses

import pytest

from partibandits import cli
from partibandits.config import PRESETS, dump_config, get_preset, loads_config
from partibandits.harness import ConfigError, read_csv


@pytest.mark.parametrize("name", list(PRESETS))
def test_preset_round_trip(name):
    cfg = get_preset(name)
    text = dump_config(cfg)
    again = loads_config(text)
    assert dump_config(again) == text
    if cfg.scenario.kind != "csv":
        again.validate()


def test_fig1_grids():
    right = get_preset("fig1-right")
    assert right.budgets == (50, 100, 150, 200)
    assert [a.param("split") for a in right.roster[1:]] == [0.3, 0.4, 0.5]
    left = get_preset("fig1-left")
    assert left.budgets == tuple(range(10, 101, 10))
    assert sorted({a.scenario.rho_le for a in left.roster}) == [0.0, 0.025, 0.05, 0.075, 0.1]
    assert get_preset("fig1-mid").budgets == tuple(range(80, 141, 10))


def test_override_scenario_merges():
    cfg = loads_config("""
budgets = [10]
[scenario]
kind = "threshold"
rho_le = 0.05
rho_gt = 0.05
[[algorithms]]
name = "srs"
label = "srs-clean"
[algorithms.scenario]
rho_le = 0.0
""")
    s = cfg.roster[0].scenario
    assert (s.rho_le, s.rho_gt) == (0.0, 0.05)


def test_unknown_key():
    with pytest.raises(ConfigError, match="bogus"):
        loads_config("bogus = 1\n")


def test_unknown_preset():
    with pytest.raises(ConfigError, match="fig1-right"):
        get_preset("fig9")


class TestCli:
    def test_presets_listing(self, capsys):
        assert cli.main(["presets"]) == 0
        out = capsys.readouterr().out
        for name in PRESETS:
            assert name in out

    def test_show_is_loadable(self, capsys):
        assert cli.main(["presets", "--show", "fig1-right"]) == 0
        assert loads_config(capsys.readouterr().out).budgets == (50, 100, 150, 200)

    def test_validate_bad_rho(self, tmp_path, capsys):
        bad = tmp_path / "bad.toml"
        bad.write_text('[scenario]\nkind = "threshold"\nrho_le = -0.1\n[[algorithms]]\nname = "srs"\n')
        assert cli.main(["validate", "--config", str(bad)]) == cli.EXIT_CONFIG
        assert "rho_le" in capsys.readouterr().err

    def test_preset_and_config_exclusive(self):
        with pytest.raises(SystemExit) as info:
            cli.main(["run", "--preset", "default", "--config", "x.toml"])
        assert info.value.code == 2

    def test_unknown_flag(self):
        with pytest.raises(SystemExit) as info:
            cli.main(["run", "--preset", "default", "--frobnicate"])
        assert info.value.code != 0

    def test_run_fig1_right(self, tmp_path, capsys):
        out = tmp_path / "results.csv"
        code = cli.main(["run", "--preset", "fig1-right", "--reps", "3", "--out", str(out),
                         "--plot", str(tmp_path / "plots")])
        assert code == 0
        rows = read_csv(out)
        assert {r["algorithm"] for r in rows} == {"srs", "ws-ucb@0.3", "ws-ucb@0.4", "ws-ucb@0.5"}
        assert sorted({int(r["budget"]) for r in rows}) == [50, 100, 150, 200]
        assert (tmp_path / "plots" / "results.svg").exists()

    def test_overrides_compose(self, monkeypatch):
        monkeypatch.setenv("PARTIBANDITS_SEED", "11")
        args = cli.build_parser().parse_args(
            ["validate", "--preset", "fig1-right", "--budgets", "50,60", "--reps", "7", "--metric", "squared"])
        cfg = cli.effective_config(args)
        expected = dataclasses.replace(get_preset("fig1-right"), budgets=(50, 60), replications=7,
                                       metric="squared", seed=11)
        assert cfg == expected
        args = cli.build_parser().parse_args(["validate", "--preset", "fig1-right", "--seed", "2"])
        assert cli.effective_config(args).seed == 2

    def test_bad_env_seed(self, monkeypatch, capsys):
        monkeypatch.setenv("PARTIBANDITS_SEED", "abc")
        assert cli.main(["validate", "--preset", "default"]) == cli.EXIT_CONFIG

    def test_replay_is_deterministic(self, capsys):
        argv = ["replay", "--seed", "7", "--algo", "partibandits", "--budget", "100", "--rep", "42"]
        assert cli.main(argv) == 0
        first = capsys.readouterr().out
        assert cli.main(argv) == 0
        assert capsys.readouterr().out == first
        lines = first.splitlines()
        assert len(lines) == 102 and lines[-1].startswith("# estimate=")

    def test_runtime_failure_reports_coordinates(self, tmp_path, capsys):
        cfg = tmp_path / "tiny.toml"
        cfg.write_text('budgets = [50]\nreplications = 2\nseed = 4\n[scenario]\nkind = "threshold"\n'
                       'pool_size = 20\n[[algorithms]]\nname = "srs"\n')
        code = cli.main(["run", "--config", str(cfg), "--out", str(tmp_path / "o.csv")])
        assert code == cli.EXIT_RUNTIME
        err = capsys.readouterr().err
        assert "replay --seed 4 --algo 'srs' --budget 50 --rep 0" in err

    def test_csv_path_override(self, tmp_path, capsys):
        p = tmp_path / "d.csv"
        p.write_text("x,y\n" + "".join(f"{k / 400},{int(k > 200)}\n" for k in range(400)))
        code = cli.main(["run", "--preset", "csv-tails", "--csv", str(p), "--reps", "2", "--budgets", "10",
                         "--out", str(tmp_path / "o.csv")])
        assert code == 0
