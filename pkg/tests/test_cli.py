import csv
import json
import os
import subprocess
import sys

import numpy as np
import pytest

from fenchelgame import DegenerateFit
from fenchelgame.cli import (
    OUTPUT_ENV,
    TRACE_HEADER,
    ConfigError,
    fit_rate_slope,
    load_config,
    main,
    run_experiment,
)

MINIMAL = """\
[experiment]
seed = 3

[quad]
problem = quadratic
dim = 5
kappa = 10
method = accelerated
rounds = 10, 20, 40
"""

FULL = MINIMAL + """
[hb]
problem = logsumexp
dim = 6
method = heavy_ball
rounds = 16 32 64
x0_scale = 1.0

[n83]
problem = quadratic
dim = 8
kappa = 20
method = nesterov83
rounds = 50

[pair]
problem = ball_quadratic
dim = 4
center_norm = 2.0
method = game
y_strategy = FTL
x_strategy = FWGauge
rounds = 30
"""


def write(tmp_path, text, name="exp.ini"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


# ---- slope fitting -------------------------------------------------------------

def test_slope_inverse_square():
    fit = fit_rate_slope([(T, 3.0 / T**2) for T in (10, 100, 1000)])
    assert abs(fit.slope + 2.0) <= 1e-12
    assert fit.r2 == pytest.approx(1.0, abs=1e-12)


def test_slope_inverse_linear():
    fit = fit_rate_slope([(T, 0.5 / T) for T in (10, 100, 1000)])
    assert fit.slope == pytest.approx(-1.0, abs=1e-12)


def test_slope_linear_in_T():
    fit = fit_rate_slope([(T, 2.0 * 0.9**T) for T in (5, 10, 20, 40)], log_x=False)
    assert fit.slope == pytest.approx(np.log(0.9), abs=1e-12)


@pytest.mark.parametrize("pts", [[(10, 1.0), (20, 0.5)], [(10, 1.0), (20, 0.0), (40, 0.1)]])
def test_slope_degenerate(pts):
    with pytest.raises(DegenerateFit):
        fit_rate_slope(pts)


# ---- config validation -------------------------------------------------------

@pytest.mark.parametrize("text, line, field", [
    (MINIMAL.replace("kappa = 10", "kappa = ten"), 7, "kappa"),
    (MINIMAL.replace("method = accelerated", "method = adam"), 8, "method"),
    (MINIMAL + "colour = blue\n", 10, "colour"),
    (MINIMAL.replace("rounds = 10, 20, 40", "rounds = 0 10"), 9, "rounds"),
    (MINIMAL.replace("[experiment]\nseed = 3", "[experiment]\nseed = x"), 2, "seed"),
])
def test_config_errors_are_located(tmp_path, text, line, field):
    path = write(tmp_path, text)
    with pytest.raises(ConfigError) as exc:
        load_config(path)
    assert exc.value.line == line and exc.value.field == field
    assert f"{path}:{line}" in str(exc.value)


def test_missing_key_and_game_strategies(tmp_path):
    with pytest.raises(ConfigError, match="rounds"):
        load_config(write(tmp_path, MINIMAL.replace("rounds = 10, 20, 40\n", "")))
    bad = FULL.replace("x_strategy = FWGauge", "x_strategy = SGD")
    with pytest.raises(ConfigError, match="x_strategy"):
        load_config(write(tmp_path, bad))
    with pytest.raises(ConfigError, match="only valid"):
        load_config(write(tmp_path, MINIMAL + "y_strategy = FTL\n"))


def test_corrupt_config_exits_nonzero_without_files(tmp_path, capsys):
    out = tmp_path / "out"
    path = write(tmp_path, MINIMAL + "[broken\n")
    assert main(["run", path, "--output", str(out)]) == 2
    assert "error" in capsys.readouterr().err
    assert not out.exists() or not any(out.iterdir())


# ---- running -------------------------------------------------------------------

def test_minimal_run_writes_three_files(tmp_path):
    out = tmp_path / "out"
    ok, results = run_experiment(write(tmp_path, MINIMAL), str(out))
    assert ok
    entry = out / "quad"
    assert sorted(os.listdir(entry)) == ["certificates.json", "summary.csv", "trace.csv"]
    with open(entry / "trace.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == TRACE_HEADER and len(rows) == 41
    report = json.loads((entry / "certificates.json").read_text())
    assert report["all_pass"] and [r["T"] for r in report["rounds"]] == [10, 20, 40]
    names = {c["name"] for c in report["rounds"][0]["certificates"]}
    assert {"equilibrium_gap", "optimistic_ftl_regret", "rate_bound"} <= names
    assert (out / "summary.csv").read_text().splitlines()[0] == "entry,method,T,gap,slope"
    assert sorted(p for p in os.listdir(out) if p.startswith(".")) == []


def test_rerun_is_byte_identical(tmp_path):
    cfg = write(tmp_path, FULL)
    run_experiment(cfg, str(tmp_path / "a"), workers=1)
    run_experiment(cfg, str(tmp_path / "b"), workers=2)
    for entry in ("quad", "hb", "n83", "pair"):
        for f in ("trace.csv", "certificates.json", "summary.csv"):
            assert (tmp_path / "a" / entry / f).read_bytes() == (tmp_path / "b" / entry / f).read_bytes()
    assert (tmp_path / "a" / "summary.csv").read_bytes() == (tmp_path / "b" / "summary.csv").read_bytes()


def test_equivalence_is_reported(tmp_path):
    run_experiment(write(tmp_path, FULL), str(tmp_path / "o"), workers=1)
    report = json.loads((tmp_path / "o" / "n83" / "certificates.json").read_text())
    eq = [c for r in report["rounds"] for c in r["certificates"] if "equivalence" in c["name"]]
    assert len(eq) == 2 and all(c["pass"] for c in eq)


def test_output_env_var(tmp_path, monkeypatch):
    root = tmp_path / "from_env"
    monkeypatch.setenv(OUTPUT_ENV, str(root))
    assert main(["run", write(tmp_path, MINIMAL)]) == 0
    assert (root / "quad" / "trace.csv").exists()


def test_certify_and_slope_verbs(tmp_path, capsys):
    out = tmp_path / "o"
    assert main(["run", write(tmp_path, MINIMAL), "--output", str(out)]) == 0
    assert main(["certify", str(out / "quad" / "trace.csv")]) == 0
    assert main(["slope", str(out / "summary.csv")]) == 0
    text = capsys.readouterr().out
    assert "all certificates pass" in text and "slope" in text


def test_certify_rejects_tampered_trace(tmp_path, capsys):
    out = tmp_path / "o"
    main(["run", write(tmp_path, MINIMAL), "--output", str(out)])
    path = out / "quad" / "trace.csv"
    lines = path.read_text().splitlines()
    cols = lines[5].split(",")
    cols[4] = "1e6"  # gap far above eps_bound
    lines[5] = ",".join(cols)
    path.write_text("\n".join(lines) + "\n")
    assert main(["certify", str(path)]) == 1
    path.write_text("a,b\n1,2\n")
    assert main(["certify", str(path)]) == 1


def test_console_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "fenchelgame.cli", "run",
                          write(tmp_path, MINIMAL), "--output", str(tmp_path / "o")],
                         capture_output=True, text=True)
    assert res.returncode == 0, res.stderr
    assert "quad: pass" in res.stdout
