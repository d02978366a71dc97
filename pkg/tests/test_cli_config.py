import json
from pathlib import Path

import pytest

from bjlab.cli import main, run
from bjlab.config import ConfigError, load_config, loads_config
from bjlab.operator import GOLDEN_MEAN

CONFIGS = Path(__file__).resolve().parent.parent / "configs"

MINIMAL = """
[spec]
l = 1
lambda = 10
omega = "goldenmean"
F = [[1, 0, 0, 1.0, 0.0], [-1, 0, 0, 1.0, 0.0]]
"""


def test_minimal_config_loads():
    cfg = loads_config(MINIMAL)
    assert cfg.spec.l == 1 and cfg.spec.lam == 10.0
    assert cfg.spec.omega == pytest.approx(GOLDEN_MEAN)
    assert cfg.N == 16 and cfg.seed == 0


def test_zero_coupling():
    with pytest.raises(ConfigError) as info:
        loads_config(MINIMAL.replace("lambda = 10", "lambda = 0"))
    assert any("coupling must be nonzero" in e for e in info.value.errors)


def test_unknown_keys_named():
    text = MINIMAL + "colour = 3\n[campaign]\nNN = 4\n"
    with pytest.raises(ConfigError) as info:
        loads_config(text)
    msgs = " ".join(info.value.errors)
    assert "'colour'" in msgs and "'NN'" in msgs


def test_errors_are_collected():
    text = MINIMAL.replace("lambda = 10", "lambda = 0") + "[campaign]\nquadrature_size = 100\nhorizon = 0\n"
    with pytest.raises(ConfigError) as info:
        loads_config(text)
    assert len(info.value.errors) == 3


def test_parse_error_has_line(tmp_path):
    bad = tmp_path / "bad.toml"
    bad.write_text("[spec]\nl = 1\nlambda = = 3\n")
    with pytest.raises(ConfigError) as info:
        load_config(bad)
    assert "line 3" in str(info.value)


def test_bad_fourier_table():
    with pytest.raises(ConfigError) as info:
        loads_config(MINIMAL.replace("[-1, 0, 0, 1.0, 0.0]", "[-1, 0, 0, 2.0, 0.0]"))
    assert any("spec.F" in e for e in info.value.errors)


def test_radii_validated():
    with pytest.raises(ConfigError):
        loads_config(MINIMAL + "[campaign]\nradii = [1.01, 1.02, 1.7, 1.03, 1.04]\n")


def test_shipped_configs_load():
    for path in sorted(CONFIGS.glob("*.toml")):
        load_config(path)


def test_preflight_report(tmp_path):
    code, rep, paths = run("preflight", load_config(CONFIGS / "amo.toml"), tmp_path)
    assert code == 0
    s = rep.summary
    for key in ("det_W_min", "no_constant_eigenvalue", "diophantine_t", "lambda0_estimate"):
        assert key in s
    assert s["no_constant_eigenvalue"] is True
    assert json.loads(paths[0].read_text())["verdict"] in ("PASS", "WARN")


def test_byte_identical_reports(tmp_path):
    cfg = load_config(CONFIGS / "amo.toml")
    outs = []
    for k, threads in enumerate((1, 1, 3)):
        d = tmp_path / str(k)
        assert main(["verify-lower", "--config", str(CONFIGS / "amo.toml"), "--out", str(d),
                     "--threads", str(threads), "--seed", "7"]) == 0
        outs.append(((d / "verify-lower.json").read_bytes(), (d / "verify-lower.csv").read_bytes()))
    assert outs[0] == outs[1] == outs[2]
    assert json.loads(outs[0][0])["provenance"]["seed"] == 7
    assert cfg.seed == 1


def test_localize_negative_control_exit_code(tmp_path):
    assert main(["localize", "--config", str(CONFIGS / "amo_delocalized.toml"), "--out", str(tmp_path)]) == 1


def test_usage_errors(tmp_path, capsys):
    assert main(["nonsense", "--config", "x.toml"]) == 2
    assert main(["preflight", "--config", str(tmp_path / "missing.toml")]) == 2
    bad = tmp_path / "bad.toml"
    bad.write_text(MINIMAL + "[campaign]\nwhat = 1\n")
    assert main(["preflight", "--config", str(bad)]) == 2
    assert "'what'" in capsys.readouterr().err


def test_hardy_radii_flag(tmp_path):
    code = main(["hardy-check", "--config", str(CONFIGS / "amo.toml"), "--out", str(tmp_path),
                 "--radii", "1.01,1.02,1.03,1.04,1.05", "--energies", "0,1"])
    assert code == 0
    rep = json.loads((tmp_path / "hardy-check.json").read_text())
    assert set(rep["summary"]["parts"]) == {"E=0", "E=1"}


def test_minor_oracle_matrix_file(tmp_path, capsys):
    m = tmp_path / "g.txt"
    m.write_text("2 3 0\n1 4 5\n0 7 -1\n")
    code = main(["minor-oracle", "--config", str(CONFIGS / "amo.toml"), "--out", str(tmp_path),
                 "--matrix", str(m), "--alpha", "1", "--alpha-prime", "3"])
    assert code == 0
    assert "direct=7 paths=7" in capsys.readouterr().out


def test_module_qualified_errors(tmp_path, capsys):
    m = tmp_path / "g.txt"
    m.write_text("1 2 3\n4 5 6\n")
    code = main(["minor-oracle", "--config", str(CONFIGS / "amo.toml"), "--out", str(tmp_path), "--matrix", str(m)])
    assert code == 1
    assert "bjlab.cli" in capsys.readouterr().err
