"""
Tests for the command-line surface: outputs, round trips, determinism and
exit codes.
"""

from pathlib import Path

import numpy as np
import pandas as pd
import pytest

from cli import EXIT_CONFIG, EXIT_DOMAIN, EXIT_IO, EXIT_OK, run
from utils.units import mhz_to_angular

REFERENCE_CONFIG = str(Path(__file__).resolve().parent.parent / "configs" / "reference.toml")

SMALL_GRID = """
[grid]
delta_p_min_mhz = -50.0
delta_p_max_mhz = 50.0
delta_p_points = 201
omega_c_min_mhz = 0.0
omega_c_max_mhz = 100.0
omega_c_points = 21
delta_c_min_mhz = -50.0
delta_c_max_mhz = 50.0
delta_c_points = 41
"""


def _config(tmp_path: Path, text: str, name: str = "run.toml") -> str:
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return str(path)


def _footer(path: Path) -> dict[str, str]:
    values = {}
    for line in path.read_text(encoding="utf-8").splitlines():
        if line.startswith("# ") and " = " in line:
            key, value = line[2:].split(" = ", 1)
            values[key] = value
    return values


def _result_block(text: str, section: str = "[result]") -> dict[str, str]:
    lines = text.splitlines()
    start = lines.index(section) + 1
    values = {}
    for line in lines[start:]:
        if line.startswith("["):
            break
        key, value = line.split("=", 1)
        values[key] = value
    return values


class TestSpectrum:
    """Test the spectrum subcommand."""

    def test_writes_commented_csv(self, tmp_path):
        """Test header echo, columns and resonant values."""
        out = tmp_path / "spectrum.csv"
        assert run(["spectrum", "--config", _config(tmp_path, SMALL_GRID), "--out", str(out)]) == EXIT_OK
        text = out.read_text(encoding="utf-8")
        assert text.startswith("# eit-ladder 1.0.0\n")
        assert "(defaulted)" in text
        frame = pd.read_csv(out, comment="#")
        assert list(frame.columns) == ["delta_p_over_2pi_hz", "re_t", "im_t", "T"]
        assert len(frame) == 201
        assert frame["T"].iloc[100] == pytest.approx(0.0544, abs=1e-4)

    def test_decoupled_atom_transmits_everything(self, tmp_path):
        """Test that Γ21 = 0 gives T = 1 at every detuning."""
        config = _config(tmp_path, "[atom]\ngamma_rel_21 = 0.0\n" + SMALL_GRID)
        out = tmp_path / "flat.csv"
        assert run(["spectrum", "--config", config, "--out", str(out)]) == EXIT_OK
        frame = pd.read_csv(out, comment="#")
        assert (frame["T"] == 1.0).all()

    def test_control_ladder_blocks(self, tmp_path):
        """Test one block per control amplitude of the bundled configuration."""
        out = tmp_path / "ladder.csv"
        assert run(["spectrum", "--config", REFERENCE_CONFIG, "--out", str(out)]) == EXIT_OK
        frame = pd.read_csv(out, comment="#")
        assert frame.columns[0] == "omega_c_over_2pi_hz"
        assert sorted(frame["omega_c_over_2pi_hz"].unique()) == pytest.approx([0.0, 11e6, 22e6, 44e6])

    def test_reports_dip_splitting(self, tmp_path):
        """Test the splitting footer of a single control-on spectrum."""
        config = _config(tmp_path, "[drive]\nomega_c_rabi_mhz = 44.0\n" + SMALL_GRID)
        out = tmp_path / "eit.csv"
        assert run(["spectrum", "--config", config, "--out", str(out)]) == EXIT_OK
        splitting = float(_footer(out)["dip_splitting_over_2pi_hz"])
        assert splitting == pytest.approx(44e6, rel=0.15)

    def test_numeric_mode_override(self, tmp_path):
        """Test that --mode numeric agrees with the closed form."""
        grid = "[grid]\ndelta_p_min_mhz = -20.0\ndelta_p_max_mhz = 20.0\ndelta_p_points = 11\n"
        config = _config(tmp_path, grid)
        analytic, numeric = tmp_path / "a.csv", tmp_path / "n.csv"
        assert run(["spectrum", "--config", config, "--out", str(analytic)]) == EXIT_OK
        assert run(["spectrum", "--config", config, "--mode", "numeric", "--out", str(numeric)]) == EXIT_OK
        assert "mode = full_numeric" in numeric.read_text(encoding="utf-8")
        a = pd.read_csv(analytic, comment="#")
        n = pd.read_csv(numeric, comment="#")
        np.testing.assert_allclose(n["re_t"], a["re_t"], atol=1e-3)

    def test_writes_to_stdout(self, tmp_path, capsys):
        """Test that output goes to stdout without --out."""
        assert run(["spectrum", "--config", _config(tmp_path, SMALL_GRID)]) == EXIT_OK
        assert "delta_p_over_2pi_hz,re_t,im_t,T" in capsys.readouterr().out


class TestFitRoundTrip:
    """Test fitting traces written by the spectrum subcommand."""

    def test_two_level(self, tmp_path, capsys):
        """Test that Γ21 and γ21 come back to 0.1%."""
        config = _config(tmp_path, SMALL_GRID)
        trace = tmp_path / "trace.csv"
        assert run(["spectrum", "--config", config, "--out", str(trace)]) == EXIT_OK
        report = tmp_path / "fit.txt"
        assert run(["fit", "--config", config, "--trace", str(trace), "--out", str(report)]) == EXIT_OK
        result = _result_block(report.read_text(encoding="utf-8"))
        assert result["converged"] == "true"
        assert float(result["gamma_rel_21"]) == pytest.approx(6.9e7, rel=1e-3)
        assert float(result["gamma_deph_21"]) == pytest.approx(4.5e7, rel=1e-3)

    def test_eit(self, tmp_path):
        """Test that γ31 and Ωc come back to 0.1% with Γ21, γ21 from the config."""
        config = _config(tmp_path, '[drive]\nomega_c_rabi_mhz = 44.0\n[fit]\nmodel = "eit"\n' + SMALL_GRID)
        trace = tmp_path / "trace.csv"
        assert run(["spectrum", "--config", config, "--out", str(trace)]) == EXIT_OK
        report = tmp_path / "fit.txt"
        assert run(["fit", "--config", config, "--trace", str(trace), "--out", str(report)]) == EXIT_OK
        result = _result_block(report.read_text(encoding="utf-8"))
        assert float(result["gamma_deph_31"]) == pytest.approx(4.3e7, rel=1e-3)
        assert float(result["omega_c_rabi"]) == pytest.approx(mhz_to_angular(44.0), rel=1e-3)
        assert float(result["gamma_rel_21_fixed"]) == 6.9e7

    def test_magnitude_residuals(self, tmp_path):
        """Test that fit.residual = "magnitude" fits |t|."""
        config = _config(tmp_path, '[fit]\nresidual = "magnitude"\n' + SMALL_GRID)
        trace = tmp_path / "trace.csv"
        assert run(["spectrum", "--config", config, "--out", str(trace)]) == EXIT_OK
        report = tmp_path / "fit.txt"
        assert run(["fit", "--config", config, "--trace", str(trace), "--out", str(report)]) == EXIT_OK
        result = _result_block(report.read_text(encoding="utf-8"))
        assert result["residual_kind"] == "magnitude"
        assert float(result["gamma_rel_21"]) == pytest.approx(6.9e7, rel=1e-3)

    def test_bootstrap_block(self, tmp_path):
        """Test the seeded bootstrap summary."""
        trace = tmp_path / "noisy.csv"
        rng = np.random.default_rng(0)
        x = np.linspace(-50e6, 50e6, 201)
        delta = 2 * np.pi * x
        t = 1 - 6.9e7 / (2 * (4.5e7 - 1j * delta))
        t = t + 0.01 * (rng.standard_normal(x.size) + 1j * rng.standard_normal(x.size))
        pd.DataFrame({"delta_p_over_2pi_hz": x, "re_t": t.real, "im_t": t.imag}).to_csv(trace, index=False)
        config = _config(tmp_path, "seed = 3\n[fit]\nbootstrap_runs = 5\n")
        report = tmp_path / "fit.txt"
        assert run(["fit", "--config", config, "--trace", str(trace), "--out", str(report)]) == EXIT_OK
        bootstrap = _result_block(report.read_text(encoding="utf-8"), "[bootstrap]")
        assert bootstrap["runs"] == "5"
        assert float(bootstrap["gamma_rel_21_std"]) > 0


class TestOtherCommands:
    """Test the map, extinction, evolve, control and atom-info subcommands."""

    def test_extinction_contrast(self, tmp_path):
        """Test that the bundled configuration gives contrast in [0.90, 0.96]."""
        out = tmp_path / "extinction.csv"
        assert run(["extinction", "--config", REFERENCE_CONFIG, "--out", str(out)]) == EXIT_OK
        footer = _footer(out)
        assert 0.90 <= float(footer["contrast"]) <= 0.96
        assert float(footer["contrast_ideal"]) == pytest.approx(1.0)
        frame = pd.read_csv(out, comment="#")
        assert list(frame.columns) == ["omega_c_over_2pi_hz", "re_t", "im_t", "T", "T_ideal"]

    def test_map_long_format(self, tmp_path):
        """Test one row per (Ωc, δp) pair with Ωc varying slowest."""
        out = tmp_path / "map.csv"
        assert run(["map", "--config", _config(tmp_path, SMALL_GRID), "--out", str(out)]) == EXIT_OK
        frame = pd.read_csv(out, comment="#")
        assert list(frame.columns) == ["omega_c_over_2pi_hz", "delta_p_over_2pi_hz", "T"]
        assert len(frame) == 21 * 201
        assert (frame["omega_c_over_2pi_hz"].iloc[:201] == 0.0).all()

    def test_evolve_columns(self, tmp_path):
        """Test the time-series columns and the initial state."""
        config = _config(tmp_path, "[drive]\nomega_p_rabi_mhz = 5.0\n[evolve]\nt_final = 2e-7\nsamples = 21\n")
        out = tmp_path / "evolve.csv"
        assert run(["evolve", "--config", config, "--out", str(out)]) == EXIT_OK
        frame = pd.read_csv(out, comment="#")
        assert list(frame.columns) == ["time_s", "rho11", "rho22", "rho33", "abs_rho21"]
        assert len(frame) == 21
        assert frame["rho11"].iloc[0] == 1.0
        np.testing.assert_allclose(frame[["rho11", "rho22", "rho33"]].sum(axis=1), 1.0, atol=1e-9)
        assert "stability_bound" in _footer(out)

    def test_control_sweep(self, tmp_path):
        """Test the |t/t0| column of the control-detuning sweep."""
        config = _config(tmp_path, "[drive]\nomega_c_rabi_mhz = 44.0\n" + SMALL_GRID)
        out = tmp_path / "control.csv"
        assert run(["control", "--config", config, "--out", str(out)]) == EXIT_OK
        frame = pd.read_csv(out, comment="#")
        assert list(frame.columns) == ["delta_c_over_2pi_hz", "abs_t_over_t0"]
        assert frame["abs_t_over_t0"].idxmax() == 20

    def test_atom_info(self, tmp_path, capsys):
        """Test M from Γ21, the bounds check and defaulted-rate disclosure."""
        assert run(["atom-info", "--config", REFERENCE_CONFIG]) == EXIT_OK
        lines = capsys.readouterr().out.splitlines()
        values = dict(line.split("=", 1) for line in lines if "=" in line and not line.startswith("#"))
        assert float(values["mutual_inductance_from_gamma_rel_21"]) == pytest.approx(12e-12, rel=0.05)
        assert values["bounds_ok"] == "true"
        assert values["defaulted"] == "gamma_rel_32,gamma_deph_32"
        assert values["caveat"].startswith("gamma_deph_31")


class TestDeterminism:
    """Test byte-identical output across runs."""

    @pytest.mark.parametrize("command", ["spectrum", "map", "extinction", "evolve", "control", "atom-info"])
    def test_repeated_runs_match(self, tmp_path, command):
        """Test that two runs with the same config write identical bytes."""
        config = _config(tmp_path, "seed = 1\n[evolve]\nt_final = 5e-8\nsamples = 11\n" + SMALL_GRID)
        first, second = tmp_path / "first.out", tmp_path / "second.out"
        assert run([command, "--config", config, "--out", str(first)]) == EXIT_OK
        assert run([command, "--config", config, "--out", str(second)]) == EXIT_OK
        assert first.read_bytes() == second.read_bytes()

    def test_fit_with_bootstrap_matches(self, tmp_path):
        """Test that a seeded fit report is reproducible."""
        config = _config(tmp_path, "seed = 2\n[fit]\nbootstrap_runs = 3\n" + SMALL_GRID)
        trace = tmp_path / "trace.csv"
        assert run(["spectrum", "--config", config, "--out", str(trace)]) == EXIT_OK
        first, second = tmp_path / "first.txt", tmp_path / "second.txt"
        for out in (first, second):
            assert run(["fit", "--config", config, "--trace", str(trace), "--out", str(out)]) == EXIT_OK
        assert first.read_bytes() == second.read_bytes()

    def test_line_endings(self, tmp_path):
        """Test '\\n' line endings and no carriage returns."""
        out = tmp_path / "spectrum.csv"
        assert run(["spectrum", "--config", _config(tmp_path, SMALL_GRID), "--out", str(out)]) == EXIT_OK
        assert b"\r" not in out.read_bytes()


class TestExitCodes:
    """Test failure reporting."""

    def test_config_error(self, tmp_path, capsys):
        """Test exit 2 and a machine-readable error line for an unknown key."""
        config = _config(tmp_path, "[atom]\nbogus = 1\n")
        assert run(["spectrum", "--config", config]) == EXIT_CONFIG
        assert capsys.readouterr().err.startswith("error: ConfigError: ")

    def test_missing_config_file(self, tmp_path, capsys):
        """Test exit 4 when the config file does not exist."""
        assert run(["spectrum", "--config", str(tmp_path / "nope.toml")]) == EXIT_IO
        assert "error: IoError: " in capsys.readouterr().err

    def test_unwritable_output(self, tmp_path, capsys):
        """Test exit 4 when the output directory does not exist."""
        out = tmp_path / "missing" / "out.csv"
        assert run(["spectrum", "--config", _config(tmp_path, SMALL_GRID), "--out", str(out)]) == EXIT_IO
        assert "error: IoError: " in capsys.readouterr().err

    def test_missing_trace(self, tmp_path, capsys):
        """Test exit 4 when the trace file does not exist."""
        assert run(["fit", "--trace", str(tmp_path / "none.csv")]) == EXIT_IO
        assert "error: IoError: " in capsys.readouterr().err

    def test_fit_without_trace(self, capsys):
        """Test exit 2 when no trace is given."""
        assert run(["fit"]) == EXIT_CONFIG
        assert "error: ConfigError: " in capsys.readouterr().err

    def test_domain_error(self, tmp_path, capsys):
        """Test exit 3 when the integrator step is too large."""
        config = _config(tmp_path, "[evolve]\nt_final = 1e-5\nstep = 1e-6\n")
        assert run(["evolve", "--config", config]) == EXIT_DOMAIN
        assert capsys.readouterr().err.startswith("error: StepTooLarge: ")

    def test_bad_trace(self, tmp_path, capsys):
        """Test exit 3 for a trace with too few points."""
        trace = tmp_path / "short.csv"
        pd.DataFrame({"delta_p_over_2pi_hz": [0.0, 1.0], "abs_t": [0.5, 0.6]}).to_csv(trace, index=False)
        assert run(["fit", "--trace", str(trace)]) == EXIT_DOMAIN
        assert "error: BadTrace: " in capsys.readouterr().err
