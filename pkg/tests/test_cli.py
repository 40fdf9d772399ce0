import csv
import json
import shutil
import subprocess
from pathlib import Path

import pytest

from decotunnel import cli
from decotunnel.config import dump_config, load_config, parse_config
from decotunnel.errors import ConfigError
from decotunnel.spectral import MODE_COLUMNS
from decotunnel.twostate import TRAJECTORY_COLUMNS
from decotunnel.validation import fig3_config

ROOT = Path(__file__).resolve().parents[1]
BOX = ROOT / "configs" / "box.json"


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def write_config(tmp_path, data, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(data), encoding="utf-8")
    return p


def box_data():
    return json.loads(BOX.read_text())


def run(args, tmp_path):
    return cli.main(list(args) + ["--out", str(tmp_path / "out")])


# subcommands ---------------------------------------------------------------


def test_modes(tmp_path):
    assert run(["modes", "-c", str(BOX)], tmp_path) == 0
    rows = read_csv(tmp_path / "out" / "modes.csv")
    assert tuple(rows[0]) == MODE_COLUMNS
    assert len(rows) == 7
    assert rows[1][-1] == "NonResonantA"


def test_evolve(tmp_path):
    assert run(["evolve", "-c", str(BOX)], tmp_path) == 0
    rows = read_csv(tmp_path / "out" / "trajectory.csv")
    assert tuple(rows[0]) == TRAJECTORY_COLUMNS
    assert len(rows) == 102
    assert float(rows[1][-1]) == 0.0


def test_rates_and_regime_map(tmp_path):
    assert run(["rates", "-c", str(BOX)], tmp_path) == 0
    assert run(["regime-map", "-c", str(BOX)], tmp_path) == 0
    rates = read_csv(tmp_path / "out" / "rates.csv")
    assert rates[0] == list(cli.RATE_COLUMNS)
    assert len(rates) == 1 + 3 * 13
    regime = read_csv(tmp_path / "out" / "regime.csv")
    assert regime[0] == ["class", "eta", "omega_d", "omega_tilde_formula", "omega_tilde_sim", "flag"]
    non = [float(r[3]) for r in regime[1:] if r[0] == "NonResonantA"]
    assert all(b >= a for a, b in zip(non, non[1:]))


def test_env(tmp_path):
    assert run(["env", "-c", str(BOX)], tmp_path) == 0
    rows = read_csv(tmp_path / "out" / "environment.csv")
    assert rows[0] == ["t", "rho_AA", "rho_BB", "re_rho_AB", "im_rho_AB", "purity"]
    assert min(float(r[-1]) for r in rows[1:]) < 1.0


def test_normalized_output(tmp_path):
    assert run(["evolve", "-c", str(BOX), "--normalized"], tmp_path) == 0
    norm = read_csv(tmp_path / "out" / "trajectory.csv")
    assert run(["evolve", "-c", str(BOX)], tmp_path) == 0
    plain = read_csv(tmp_path / "out" / "trajectory.csv")
    ctx = cli.Context(load_config(BOX), tmp_path, False, 1)
    assert float(norm[-1][0]) == pytest.approx(float(plain[-1][0]) / ctx.tau0, rel=1e-12)


def test_csv_uses_lf(tmp_path):
    run(["modes", "-c", str(BOX)], tmp_path)
    raw = (tmp_path / "out" / "modes.csv").read_bytes()
    assert b"\r" not in raw and raw.endswith(b"\n")


def test_regime_map_byte_identical_across_threads(tmp_path):
    data = fig3_config()
    data["decoherence"]["omega_d_grid"]["num"] = 12
    data["decoherence"]["max_events"] = 5000
    cfg = write_config(tmp_path, data)
    outs = []
    for threads in ("1", "4"):
        out = tmp_path / f"t{threads}"
        assert cli.main(["regime-map", "-c", str(cfg), "--out", str(out), "--threads", threads, "--seed", "3"]) == 0
        outs.append((out / "regime.csv").read_bytes())
    assert outs[0] == outs[1]


def test_threads_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("DECOTUNNEL_THREADS", "3")
    assert cli._threads(None, load_config(BOX)) == 3
    assert cli._threads(2, load_config(BOX)) == 2
    monkeypatch.setenv("DECOTUNNEL_THREADS", "many")
    assert run(["modes", "-c", str(BOX)], tmp_path) == 1


# configuration -------------------------------------------------------------


def test_dump_config_round_trip(tmp_path, capsys):
    assert cli.main(["modes", "-c", str(BOX), "--dump-config", "--seed", "42"]) == 0
    dumped = capsys.readouterr().out
    again = load_config(write_config(tmp_path, json.loads(dumped)))
    assert again.decoherence.seed == 42
    assert dump_config(again) == dumped


def test_unknown_key_rejected(tmp_path, capsys):
    data = box_data()
    data["geometry"]["x_C"] = 1.0
    assert run(["modes", "-c", str(write_config(tmp_path, data))], tmp_path) == 1
    assert "geometry.x_C" in capsys.readouterr().err


def test_every_field_error_listed(tmp_path, capsys):
    data = box_data()
    data["geometry"]["x_A"] = -1.0
    data["decoherence"]["lam"] = 2.0
    assert run(["modes", "-c", str(write_config(tmp_path, data))], tmp_path) == 1
    err = capsys.readouterr().err
    assert "geometry.x_A" in err and "decoherence.lam" in err


@pytest.mark.parametrize("text", ["{", "[1, 2]"])
def test_malformed_json(tmp_path, text):
    p = tmp_path / "bad.json"
    p.write_text(text)
    assert run(["modes", "-c", str(p)], tmp_path) == 1


def test_missing_file(tmp_path):
    assert run(["modes", "-c", str(tmp_path / "nope.json")], tmp_path) == 1


def test_missing_pair_for_evolve(tmp_path):
    data = box_data()
    del data["modes"]["pair"]
    assert run(["evolve", "-c", str(write_config(tmp_path, data))], tmp_path) == 1


def test_numeric_error_exit_code(tmp_path, capsys):
    data = box_data()
    data["geometry"] = {"x_A": 1.0, "x_B": 1.0, "s_tilde": 100.0}
    data["modes"]["pair"] = [5, 7]
    assert run(["evolve", "-c", str(write_config(tmp_path, data))], tmp_path) == 2
    assert "numeric error" in capsys.readouterr().err


def test_seed_range(tmp_path):
    assert run(["modes", "-c", str(BOX), "--seed", "-1"], tmp_path) == 1


def test_parse_config_defaults():
    cfg = parse_config({"geometry": {"x_A": 1, "x_B": 2, "s_tilde": 3}, "modes": {"k_max": 5}})
    assert cfg.decoherence.lam == 1.0
    assert cfg.oracle.n == 4000
    with pytest.raises(ConfigError) as exc:
        parse_config({"geometry": {"x_A": 1, "x_B": 2, "s_tilde": 3}, "modes": {}})
    assert any(e.startswith("modes") for e in exc.value.errors)


def test_shipped_configs_load():
    for path in sorted((ROOT / "configs").glob("*.json")):
        load_config(path)


def test_fig3_config_matches_module():
    shipped = json.loads((ROOT / "configs" / "fig3.json").read_text())
    assert parse_config(shipped) == parse_config(fig3_config())


# validate ------------------------------------------------------------------


def test_validate_exit_matches_report(tmp_path, capsys):
    code = run(["validate", "-c", str(BOX)], tmp_path)
    rows = read_csv(tmp_path / "out" / "report.csv")
    failed = any(r[-1] == "fail" for r in rows[1:])
    assert code == (3 if failed else 0)
    out = capsys.readouterr().out
    assert out.count("\n") >= 13


@pytest.mark.skipif(shutil.which("decotunnel") is None, reason="console script not installed")
def test_console_script(tmp_path):
    proc = subprocess.run(
        ["decotunnel", "modes", "-c", str(BOX), "--out", str(tmp_path)], capture_output=True, text=True
    )
    assert proc.returncode == 0
    assert (tmp_path / "modes.csv").exists()
