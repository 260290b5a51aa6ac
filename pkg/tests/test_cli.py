import json
import math

import pytest

from symgrad.cli import (ConfigError, ExperimentConfig, KEYS, SEED_ENV, SUBCOMMANDS, main,
                         resolve_seed, run)


def test_config_round_trip():
    for sub in SUBCOMMANDS:
        cfg = ExperimentConfig.defaults(sub)
        again = ExperimentConfig.parse(cfg.format())
        assert again.values == cfg.values
        assert again.format() == cfg.format()


def test_config_parse_and_diagnostics():
    cfg = ExperimentConfig.parse("subcommand = singular\n# comment\np = 1.4, 1.6  # trailing\nseed=7\n")
    assert cfg["p"] == [1.4, 1.6] and cfg["seed"] == 7 and cfg["subcommand"] == "singular"
    with pytest.raises(ConfigError, match="unknown key"):
        ExperimentConfig.parse("bogus = 1")
    with pytest.raises(ConfigError, match="p:"):
        ExperimentConfig.parse("p = 0.5", "thresholds")
    with pytest.raises(ConfigError, match="cells"):
        ExperimentConfig.parse("cells = x", "solve")
    with pytest.raises(ConfigError, match="expected key"):
        ExperimentConfig.parse("just words")
    assert set(KEYS) >= {"seed", "p", "cells", "formats", "out"}


def test_seed_precedence():
    assert resolve_seed(3, None, {}) == 3
    assert resolve_seed(3, None, {SEED_ENV: "11"}) == 11
    assert resolve_seed(3, 5, {SEED_ENV: "11"}) == 5
    with pytest.raises(ConfigError):
        resolve_seed(3, None, {SEED_ENV: "abc"})


def test_threshold_table_rows():
    rep = run(ExperimentConfig.defaults("thresholds"))
    assert rep.passed
    assert [r["n"] for r in rep.rows] == list(range(2, 9))
    assert rep.rows[-1]["p_plus"] == 2.5 and all(math.isinf(r["p_plus"]) for r in rep.rows[:-1])


def test_singular_classifications():
    cfg = ExperimentConfig.parse("p = 1.4, 1.5, 1.6", "singular")
    rep = run(cfg)
    got = {r["p"]: r["classification"] for r in rep.rows}
    assert got == {1.4: "divergent", 1.5: "divergent", 1.6: "convergent"}
    assert rep.passed


def test_identities_deterministic_outputs(tmp_path, monkeypatch):
    monkeypatch.delenv(SEED_ENV, raising=False)
    outs = []
    for k in range(2):
        d = tmp_path / f"run{k}"
        code = main(["identities", "--seed", "0", "--out", str(d), "--format", "csv",
                     "--format", "json", "--set", "samples=20", "--set", "dims=2"])
        assert code == 0
        outs.append(d)
    a, b = (o / "identities.csv" for o in outs)
    assert a.read_bytes() == b.read_bytes()
    ja, jb = (json.loads((o / "identities.json").read_text()) for o in outs)
    assert set(ja) == {"config", "checks", "timing"}
    ja["config"].pop("out"), jb["config"].pop("out")
    assert ja["config"] == jb["config"] and ja["checks"] == jb["checks"]


def test_csv_precision_and_plot(tmp_path):
    assert main(["singular", "--out", str(tmp_path), "--format", "csv", "--format", "plot",
                 "--set", "p=1.6"]) == 0
    lines = (tmp_path / "singular.csv").read_text().splitlines()
    assert lines[0] == "p,delta,quadrature,analytic,classification"
    value = lines[1].split(",")[2]
    assert float(value) == float(repr(float(value)))
    assert len(value.replace(".", "").replace("-", "").lstrip("0").split("e")[0]) >= 15
    dat = (tmp_path / "singular.dat").read_text().splitlines()
    assert dat[0].startswith("#") and len(dat) == 5


def test_exit_code_reflects_failed_checks(tmp_path):
    # cutoffs this coarse cannot reveal the convergent tail at p = 1.6
    code = main(["singular", "--out", str(tmp_path), "--set", "p=1.6",
                 "--set", "deltas=0.5, 0.4, 0.3"])
    assert code == 1


def test_usage_errors(tmp_path, capsys):
    with pytest.raises(SystemExit) as exc:
        main(["nosuch"])
    assert exc.value.code == 2
    with pytest.raises(SystemExit):
        main(["thresholds", "--set", "p=0.3"])
    assert "p:" in capsys.readouterr().err


def test_config_file_and_print(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv(SEED_ENV, "42")
    path = tmp_path / "exp.cfg"
    path.write_text("seed = 9\ncells = 4, 8\n")
    assert main(["korn", "--config", str(path), "--print-config"]) == 0
    out = capsys.readouterr().out
    assert "seed = 42" in out and "cells = 4, 8" in out
    cfg = ExperimentConfig.parse(out)
    assert cfg["seed"] == 42 and cfg["subcommand"] == "korn"
