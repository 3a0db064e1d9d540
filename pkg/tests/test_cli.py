import json

import numpy as np
import pytest

from nordvlasov import cli
from nordvlasov.io import read_csv, read_snapshot

ZERO_RUN = """
mode = "solve1d"
t_final = 0.5
snapshot_every = 2
output_dir = "{out}"
[grid]
x_min = -4.0
x_max = 4.0
nx = 32
p_min = -4.0
p_max = 4.0
np = 16
"""

CORE_RUN = """
mode = "solve1d"
sign = "repulsive"
t_final = 2.5
output_dir = "{out}"
[grid]
x_min = -8.0
x_max = 8.0
nx = 128
p_min = -4.0
p_max = 4.0
np = 64
[initial.f]
family = "box"
half_x = 3.0
half_p = 1.0
edge = 0.5
"""


def write(tmp_path, text, name="c.toml"):
    path = tmp_path / name
    path.write_text(text.format(out=tmp_path / "out"))
    return str(path)


def test_zero_run(tmp_path):
    assert cli.main(["run", write(tmp_path, ZERO_RUN)]) == 0
    out = tmp_path / "out"
    cols, rows = read_csv(out / "diagnostics.csv")
    assert len(rows) == 3
    for row in rows:
        vals = dict(zip(cols, row))
        assert all(float(vals[c]) == 0.0 for c in cols if c not in ("step", "t"))
    snap = read_snapshot(out / "final_state.csv")
    assert snap.step == 2 and not snap.f.any() and not snap.phi.any()
    for name in ("snapshot_000000.csv", "snapshot_000002.csv", "diagnostics.png", "final_state.png", "report.txt"):
        assert (out / name).exists()
    man = json.loads((out / "manifest.json").read_text())
    assert man["exit_status"] == 0 and man["mode"] == "solve1d" and "diagnostics.csv" in man["artifacts"]


def test_blowup_instance(tmp_path):
    out = tmp_path / "b"
    assert cli.main(["verify-blowup", "--mu0", "2", "--phidot0", "2", "--R", "1", "--output-dir", str(out)]) == 0
    cols, rows = read_csv(out / "blowup.csv")
    row = dict(zip(cols, rows[0]))
    assert row["status"] == "blowup" and float(row["t_star"]) <= 1.0
    assert float(row["bracket_hi"]) - float(row["bracket_lo"]) <= 1e-3
    assert row["bound_holds"] == "True" and row["step_violations"] == "0"
    assert (out / "blowup.png").exists() and (out / "trajectory.csv").exists()


def test_kernelcheck_deterministic(tmp_path):
    args = ["check-kernels", "--seed", "11", "--samples", "5000"]
    assert cli.main(args + ["--output-dir", str(tmp_path / "a")]) == 0
    assert cli.main(args + ["--output-dir", str(tmp_path / "b")]) == 0
    a = (tmp_path / "a" / "kernels.csv").read_bytes()
    assert a == (tmp_path / "b" / "kernels.csv").read_bytes()
    cols, rows = read_csv(tmp_path / "a" / "kernels.csv")
    assert cols == ["quantity", "value", "threshold", "passed"]
    assert all(r[3] == "True" for r in rows)


def test_env_override(tmp_path, monkeypatch):
    target = tmp_path / "env"
    monkeypatch.setenv(cli.OUTPUT_ENV, str(target))
    assert cli.main(["run", write(tmp_path, ZERO_RUN)]) == 0
    assert (target / "diagnostics.csv").exists()
    assert not (tmp_path / "out").exists()


@pytest.mark.parametrize("text", [ZERO_RUN + "bogus = 1\n", ZERO_RUN.replace("t_final = 0.5", "t_final = 0.5\ndt = 0.3")])
def test_config_error_exit(tmp_path, text, capsys):
    assert cli.main(["run", write(tmp_path, text)]) == cli.EXIT_CONFIG
    assert "config error" in capsys.readouterr().err


def test_missing_config_file(tmp_path):
    assert cli.main(["run", str(tmp_path / "nope.toml")]) == cli.EXIT_CONFIG


def test_runtime_abort_exit(tmp_path, capsys):
    assert cli.main(["run", write(tmp_path, CORE_RUN)]) == cli.EXIT_ABORT
    err = capsys.readouterr().err
    assert "rest mass" in err and "last artifact written" in err
    out = tmp_path / "out"
    assert (out / "diagnostics.csv").exists()
    assert json.loads((out / "manifest.json").read_text())["exit_status"] == cli.EXIT_ABORT


def test_property_violation_exit(tmp_path, monkeypatch):
    monkeypatch.setattr(cli, "IDENTITY_RTOL", -1.0)
    args = ["check-kernels", "--samples", "100", "--output-dir", str(tmp_path)]
    assert cli.main(args) == cli.EXIT_PROPERTY
    cols, rows = read_csv(tmp_path / "kernels.csv")
    assert any(r[0].startswith("ident") and r[3] == "False" for r in rows)


def test_check_run_properties_flags_decrease():
    from types import SimpleNamespace
    recs = [SimpleNamespace(step=k, Lambda=lam, mu_bound_slack=0.0, f_sup=1.0) for k, lam in enumerate([1.0, 2.0, 1.5])]
    lat = SimpleNamespace(dp=0.1)
    assert "Lambda decreased at step 2" in cli.check_run_properties(recs, lat)[0]
    recs = [SimpleNamespace(step=0, Lambda=1.0, mu_bound_slack=-1.0, f_sup=1.0)]
    assert "mu bound" in cli.check_run_properties(recs, lat)[0]
    assert np.isfinite(lat.dp)
