import json
from pathlib import Path

import numpy as np
import pytest

from dampedwaves import cli
from dampedwaves import config as cf
from dampedwaves.errors import ConfigurationError
from dampedwaves.norms import NormSpec, wiener_norm

MINIMAL = """
[model]
alpha = 3.0

[grid]
n_modes = 64

[time]
dt = 1e-3
t_final = 1.0

[initial]
preset = small_two_mode
amplitude = 0.01
"""


class TestParsing:
    def test_minimal_with_defaults(self):
        cfg = cf.parse_config(MINIMAL)
        assert cfg.params.alpha == 3.0
        assert cfg.params.epsilon == 1.0
        assert cfg.n_modes == 64
        assert cfg.record_every == 10
        assert cfg.step_options.picard_tol == min(1e-10, 1e-9)

    def test_mu_invariant_rejected(self):
        bad = MINIMAL.replace("alpha = 3.0", "alpha = 3.0\nmu = 2.0")
        with pytest.raises(ConfigurationError, match="mu < alpha/2"):
            cf.parse_config(bad)

    def test_odd_n_rejected(self):
        bad = MINIMAL.replace("n_modes = 64", "n_modes = 63")
        with pytest.raises(ConfigurationError, match="even"):
            cf.parse_config(bad)

    def test_unknown_key_line_anchored(self):
        bad = MINIMAL + "\n[grid]\nnodes = 12\n"
        with pytest.raises(ConfigurationError, match=r"line \d+: unknown key"):
            cf.parse_config(bad)

    def test_unknown_section(self):
        with pytest.raises(ConfigurationError, match="unknown section"):
            cf.parse_config(MINIMAL + "\n[physics]\n")

    def test_bad_value_line_anchored(self):
        bad = MINIMAL.replace("dt = 1e-3", "dt = fast")
        with pytest.raises(ConfigurationError, match="line"):
            cf.parse_config(bad)

    def test_round_trip(self):
        cfg = cf.parse_config(MINIMAL)
        again = cf.parse_config(cf.config_to_text(cfg))
        assert again == cfg

    def test_explicit_modes(self):
        text = MINIMAL.replace("preset = small_two_mode",
                               "preset = explicit\nh_modes = 1:0.004, 2:0.002:1.5707963\nxi_modes = 1:0.003")
        cfg = cf.parse_config(text)
        h0, xi0 = cf.initial_data(cfg)
        assert abs(h0.coeff(1)) == pytest.approx(0.002, rel=1e-12)
        assert abs(xi0.coeff(1)) == pytest.approx(0.0015, rel=1e-12)

    def test_mode_zero_forbidden_for_h(self):
        text = MINIMAL.replace("preset = small_two_mode",
                               "preset = explicit\nh_modes = 0:0.004")
        cfg = cf.parse_config(text)
        with pytest.raises(ConfigurationError, match="zero mean"):
            cf.initial_data(cfg)


class TestPresets:
    def test_zero(self):
        cfg = cf.parse_config(MINIMAL.replace("small_two_mode", "zero"))
        h0, xi0 = cf.initial_data(cfg)
        assert np.all(h0.coeffs == 0) and np.all(xi0.coeffs == 0)

    def test_small_two_mode_norm_target(self):
        cfg = cf.parse_config(MINIMAL)
        h0, xi0 = cf.initial_data(cfg)
        total = wiener_norm(h0, NormSpec(1.0, 0.0)) + wiener_norm(xi0, NormSpec(1.0, 0.0))
        assert total == pytest.approx(0.01, rel=1e-12)
        assert abs(h0.coeffs[0]) == 0.0


def run_cli(*argv) -> int:
    return cli.main(list(argv))


@pytest.fixture()
def tiny_config(tmp_path: Path) -> Path:
    text = """
[model]
alpha = 3.0
mu = 1.0

[grid]
n_modes = 16
n_depth = 64

[time]
dt = 2e-3
t_final = 0.03

[initial]
preset = small_two_mode
amplitude = 0.01

[output]
record_every = 5
"""
    p = tmp_path / "run.ini"
    p.write_text(text)
    return p


class TestCli:
    def test_run_outputs(self, tiny_config, tmp_path, monkeypatch):
        monkeypatch.delenv("DAMPEDWAVES_OUTDIR", raising=False)
        out = tmp_path / "out"
        code = run_cli("run", "--config", str(tiny_config), "--output-dir", str(out))
        assert code == 0
        series = (out / "series.csv").read_text().splitlines()
        assert series[0] == "# dampedwaves-series-v1"
        assert series[1].split(",") == list(
            ("t", "sobolev_h3", "sobolev_xi3", "wiener_h", "wiener_xi",
             "energy", "radius", "lyapunov"))
        verdict = json.loads((out / "verdict.json").read_text())
        assert verdict["failed"] == 0
        snaps = (out / "snapshots.jsonl").read_text().splitlines()
        assert len(snaps) >= 2
        first = json.loads(snaps[0])
        assert len(first["h_re"]) == 16

    def test_run_determinism(self, tiny_config, tmp_path, monkeypatch):
        monkeypatch.delenv("DAMPEDWAVES_OUTDIR", raising=False)
        a, b = tmp_path / "a", tmp_path / "b"
        assert run_cli("run", "--config", str(tiny_config), "--output-dir", str(a)) == 0
        assert run_cli("run", "--config", str(tiny_config), "--output-dir", str(b)) == 0
        assert (a / "series.csv").read_bytes() == (b / "series.csv").read_bytes()
        assert (a / "snapshots.jsonl").read_bytes() == (b / "snapshots.jsonl").read_bytes()

    def test_env_override(self, tiny_config, tmp_path, monkeypatch):
        target = tmp_path / "envdir"
        monkeypatch.setenv("DAMPEDWAVES_OUTDIR", str(target))
        assert run_cli("run", "--config", str(tiny_config)) == 0
        assert (target / "series.csv").exists()

    def test_run_bad_config_exit_code(self, tmp_path, monkeypatch):
        monkeypatch.delenv("DAMPEDWAVES_OUTDIR", raising=False)
        p = tmp_path / "bad.ini"
        p.write_text("[model]\nalpha = -1\n")
        assert run_cli("run", "--config", str(p)) == 2

    def test_zero_preset_series_is_zero(self, tmp_path, monkeypatch):
        monkeypatch.delenv("DAMPEDWAVES_OUTDIR", raising=False)
        text = """
[model]
alpha = 3.0

[grid]
n_modes = 16
n_depth = 64

[time]
dt = 1e-2
t_final = 0.05

[initial]
preset = zero
"""
        p = tmp_path / "zero.ini"
        p.write_text(text)
        out = tmp_path / "out0"
        assert run_cli("run", "--config", str(p), "--output-dir", str(out)) == 0
        rows = (out / "series.csv").read_text().splitlines()[2:]
        for row in rows:
            vals = row.split(",")
            assert float(vals[1]) == 0.0 and float(vals[7]) == 0.0

    def test_linear_validate(self, tmp_path, monkeypatch):
        monkeypatch.delenv("DAMPEDWAVES_OUTDIR", raising=False)
        out = tmp_path / "lv"
        code = run_cli("linear-validate", "--t-final", "0.05",
                       "--output-dir", str(out))
        assert code == 0
        lines = (out / "linear_validate.csv").read_text().splitlines()
        assert lines[0] == "# dampedwaves-linear-v1"
        assert len(lines) == 2 + 3

    def test_lint_inequalities(self, tmp_path, monkeypatch):
        monkeypatch.delenv("DAMPEDWAVES_OUTDIR", raising=False)
        out = tmp_path / "li"
        code = run_cli("lint-inequalities", "--trials", "24", "--seed", "42",
                       "--output-dir", str(out))
        assert code == 0
        lines = (out / "inequalities.csv").read_text().splitlines()
        assert lines[1].startswith("lemma,trial,")
        fams = {ln.split(",")[0] for ln in lines[2:]}
        assert fams == {"product_rule", "power_rule", "interpolation_theta",
                        "interpolation_zero_mean", "composition",
                        "composition_corrected", "trace"}

    def test_elliptic_validate(self, tmp_path, monkeypatch):
        monkeypatch.delenv("DAMPEDWAVES_OUTDIR", raising=False)
        out = tmp_path / "ev"
        code = run_cli("elliptic-validate", "--trials", "6", "--seed", "3",
                       "--output-dir", str(out))
        assert code == 0
        verdict = json.loads((out / "verdict.json").read_text())
        names = {c["name"] for c in verdict["checks"]}
        assert {"manufactured_error", "manufactured_order", "solver_bounds"} <= names
