import filecmp
import json
import math

import numpy as np
import pytest

from susypt import cli
from susypt.errors import ConfigError

SMALL = """
model: {alpha: 1.4142135623730951, beta: 3.0}
spectrum: {n_max: 4, points: 201}
partner: {kind: first, n_max: 3}
run:
  N: [10, 40]
  steps: 51
  count: 300
  haar_count: 400
  chunk: 128
  tol: 0.01
  tail_radii: [1.0, 2.0]
"""


def _run(tmp_path, command, text=SMALL, name="out", **kw):
    out = tmp_path / name
    cli.run(command, cli.parse_config(text), out, kw.pop("seed", 7), **kw)
    return out


def _csv(path):
    with open(path) as fh:
        header = fh.readline().strip().split(",")
    return header, np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)


def test_defaults_parse():
    cfg = cli.parse_config("")
    assert cfg.model.beta == 4.0 and cfg.run.seed == cli.DEFAULT_SEED


def test_config_errors_name_field_and_line():
    with pytest.raises(ConfigError, match=r"model\.gamma \(line 3\)"):
        cli.parse_config("model:\n  alpha: 2.0\n  gamma: 1.0\n")
    with pytest.raises(ConfigError, match=r"run\.steps \(line 2\).*int"):
        cli.parse_config("run:\n  steps: many\n")
    with pytest.raises(ConfigError, match="unknown section"):
        cli.parse_config("plots: {}\n")
    with pytest.raises(ConfigError, match="malformed config at line"):
        cli.parse_config("model: [1, 2\n")
    with pytest.raises(ConfigError, match="windows.f1"):
        cli.parse_config("windows:\n  f1: {kind: indicator, a: 1, b: 0}\n")
    with pytest.raises(ConfigError, match="time_density"):
        cli.parse_config("run:\n  time_density: {kind: cauchy}\n")
    with pytest.raises(ConfigError, match="model"):
        cli.parse_config("model: {alpha: 0.5, beta: 3}\n")


def test_json_config_accepted():
    cfg = cli.parse_config(json.dumps({"model": {"alpha": 2, "beta": 3.5}}))
    assert cfg.model.alpha == 2.0 and isinstance(cfg.model.alpha, float)


def test_spectrum_layout(tmp_path):
    out = _run(tmp_path, "spectrum")
    header, data = _csv(out / "spectrum.csv")
    assert header == ["x", "V0"] + [f"psi{n}_sq" for n in range(5)]
    assert data.shape == (201, 7)
    assert np.all((data[:, 0] > 0) & (data[:, 0] < math.pi / 2))
    _, ev = _csv(out / "eigenvalues.csv")
    gamma = math.sqrt(2) + 3
    assert np.allclose(ev[:, 1], 0.5 * (2 * ev[:, 0] + gamma) ** 2, rtol=1e-13)
    raw = (out / "spectrum.csv").read_bytes()
    assert b"\r" not in raw and raw.endswith(b"\n")
    for name in ("config.resolved.json", "seeds.json", "version.json"):
        assert (out / name).exists()
    resolved = json.loads((out / "config.resolved.json").read_text())
    assert resolved["run"]["seed"] == 7
    assert list(resolved) == sorted(resolved)


def test_partner_report(tmp_path):
    out = _run(tmp_path, "partner")
    rep = json.loads((out / "partner_report.json").read_text())
    assert max(rep["residual_partner"]) < 1e-5
    assert max(rep["residual_base"]) < 1e-5
    header, _ = _csv(out / "potentials.csv")
    assert header == ["x", "V0", "V1"]


def test_partner_second_order(tmp_path):
    text = SMALL.replace("partner: {kind: first, n_max: 3}", "partner: {kind: second, level: 0, n_max: 3}")
    text = text.replace("beta: 3.0", "beta: 3.7").replace("alpha: 1.4142135623730951", "alpha: 2.5")
    out = _run(tmp_path, "partner", text)
    rep = json.loads((out / "partner_report.json").read_text())
    assert max(rep["residual_partner"]) < 1e-4


def test_partner_rejects_small_beta(tmp_path):
    cfg = tmp_path / "c.yaml"
    cfg.write_text("model: {alpha: 2.0, beta: 1.5}\n")
    assert cli.main(["partner", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2


def test_autocorr_outputs(tmp_path):
    out = _run(tmp_path, "autocorr")
    header, tr = _csv(out / "trace_N10.csv")
    assert header == ["t", "re1", "im1", "re0", "im0"]
    assert tr.shape == (51, 5)
    meta = json.loads((out / "autocorr_meta.json").read_text())
    assert all(v["max_abs_error"] < 1e-10 for v in meta["lift_check"].values())
    _, s = _csv(out / "samples_N40.csv")
    assert s.shape == (300, 4)
    seeds = json.loads((out / "seeds.json").read_text())
    assert set(seeds["streams"]) == {"times_N10", "times_N40"}


def test_autocorr_single_term(tmp_path):
    out = _run(tmp_path, "autocorr", SMALL.replace("N: [10, 40]", "N: [1]"))
    _, tr = _csv(out / "trace_N1.csv")
    assert np.allclose(np.hypot(tr[:, 1], tr[:, 2]), 1.0, atol=1e-14)


def test_limit_reports(tmp_path):
    out = _run(tmp_path, "limit")
    tails = json.loads((out / "tail_report.json").read_text())
    assert tails["theta1"]["predicted"] is None
    assert len(tails["theta1"]["empirical_probs"]) == 2
    dep = json.loads((out / "dependence_report.json").read_text())
    assert {"joint", "product", "ratio", "corr_sq_moduli"} <= set(dep)
    ks = json.loads((out / "ks_report.json").read_text())
    assert set(ks) == {"10", "40"} and 0 <= ks["40"]["abs1"] <= 1
    _, s = _csv(out / "haar_samples.csv")
    assert s.shape == (400, 4)


def test_limit_hermite_tail_table(tmp_path):
    text = SMALL + "windows:\n  f1: {kind: hermite, k: 0}\n  f0: {kind: hermite, k: 0}\n"
    out = _run(tmp_path, "limit", text.replace("count: 300", "count: 0"))
    tails = json.loads((out / "tail_report.json").read_text())
    assert tails["theta1"]["d_constant"] == pytest.approx(2 * math.pi / math.sqrt(3))
    dep = json.loads((out / "dependence_report.json").read_text())
    assert dep["corr_sq_moduli"] == pytest.approx(1.0)


def test_json_format(tmp_path):
    out = _run(tmp_path, "spectrum", formats=["json"])
    data = json.loads((out / "spectrum.json").read_text())
    assert len(data["x"]) == 201
    assert not (out / "spectrum.csv").exists()


@pytest.mark.parametrize("command", ["spectrum", "autocorr", "limit"])
def test_byte_identical_reruns(tmp_path, command):
    a = _run(tmp_path, command, name="a")
    b = _run(tmp_path, command, name="b")
    c = _run(tmp_path, command, name="c", workers=3)
    names = sorted(p.name for p in a.iterdir())
    assert names == sorted(p.name for p in c.iterdir())
    for other in (b, c):
        match, mismatch, errors = filecmp.cmpfiles(a, other, names, shallow=False)
        assert mismatch == [] and errors == []


def test_seed_changes_samples(tmp_path):
    a = _run(tmp_path, "limit", name="a", seed=1)
    b = _run(tmp_path, "limit", name="b", seed=2)
    assert (a / "haar_samples.csv").read_bytes() != (b / "haar_samples.csv").read_bytes()


def test_main_flags(tmp_path):
    cfg = tmp_path / "c.yaml"
    cfg.write_text(SMALL)
    out = tmp_path / "m"
    assert cli.main(["spectrum", "--config", str(cfg), "--out", str(out), "--seed", "11", "--format", "json"]) == 0
    assert json.loads((out / "seeds.json").read_text())["master"] == 11
    assert (out / "eigenvalues.json").exists()
    assert cli.main(["spectrum", "--config", str(cfg), "--out", str(out), "--seed", "-1"]) == 2
    bad = tmp_path / "bad.yaml"
    bad.write_text("run:\n  N: [0]\n")
    assert cli.main(["spectrum", "--config", str(bad)]) == 2


def test_table_inputs(tmp_path):
    w = tmp_path / "w.csv"
    w.write_text("t,f\n0,0\n0.5,1\n1,0\n")
    d = tmp_path / "rho.csv"
    d.write_text("# t,rho\n0,1\n1,1\n")
    text = SMALL + f"windows:\n  f1: {{kind: table, path: {w}}}\n"
    text = text.replace("  tail_radii", f"  time_density: {{kind: table, path: {d}}}\n  tail_radii")
    out = _run(tmp_path, "autocorr", text)
    _, s = _csv(out / "samples_N10.csv")
    assert s.shape == (300, 4)
