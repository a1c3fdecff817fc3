import numpy as np
import pytest

from bstirap.cli import main as cli_main
from bstirap.errors import ConfigError
from bstirap.scenario import (
    SNAPSHOT_COLUMNS,
    load_preset,
    parse_config,
    preset_names,
    run_scenario,
    serialize_config,
    sweep,
)

MINI_CONFIG = """
[medium]
q = 1.0

[grid]
n_tau = 512
zeta_max = 0.5
n_zeta = 100

[run]
mode = propagate
snapshots = 0, 0.5
"""


class TestParseConfig:
    def test_defaults_fill_missing_sections(self):
        cfg = parse_config("[medium]\nq = 2.5\n")
        assert cfg.pulses.omega0T == 40.0
        assert cfg.pulses.delay_over_T == 1.3
        assert cfg.medium.delta_p0 == 40.0
        assert cfg.medium.delta_two0 == 0.0
        assert cfg.grid.n_tau == 4096 and cfg.grid.zeta_max == 20.0
        assert cfg.mode == "propagate"

    def test_missing_ratio_is_an_error(self):
        with pytest.raises(ConfigError, match="oscillator-strength ratio"):
            parse_config("[pulses]\nomega0T = 40\n")

    def test_negative_ratio_rejected(self):
        with pytest.raises(ConfigError, match="positive"):
            parse_config("[medium]\nq = -1\n")

    def test_unknown_key_names_line_and_key(self):
        text = "[medium]\nq = 1\nqq = 2\n"
        with pytest.raises(ConfigError, match="line 3") as err:
            parse_config(text)
        assert "qq" in str(err.value)

    def test_unknown_section(self):
        with pytest.raises(ConfigError, match=r"unknown section"):
            parse_config("[medium]\nq=1\n[atoms]\nx=1\n")

    def test_malformed_number_names_line_and_key(self):
        text = "[medium]\nq = 1\n\n[grid]\nn_tau = many\n"
        with pytest.raises(ConfigError, match="line 5") as err:
            parse_config(text)
        assert "n_tau" in str(err.value)

    def test_snapshot_outside_grid_rejected(self):
        with pytest.raises(ConfigError, match="snapshot"):
            parse_config("[medium]\nq = 1\n[run]\nsnapshots = 0, 30\n")

    def test_bad_mode(self):
        with pytest.raises(ConfigError, match="mode"):
            parse_config("[medium]\nq = 1\n[run]\nmode = render\n")

    def test_round_trip_identity(self):
        text = """
[medium]
q = 0.1

[pulses]
peak_convention = split

[run]
mode = propagate
snapshots = 0, 7, 20
"""
        cfg = parse_config(text)
        assert parse_config(serialize_config(cfg)) == cfg


class TestPresets:
    def test_all_presets_parse(self):
        names = preset_names()
        assert names == [f"fig{i}" for i in range(2, 8)]
        for name in names:
            cfg = load_preset(name)
            assert cfg.medium.q > 0

    def test_fig3_matches_reference_scenario(self):
        cfg = load_preset("fig3")
        assert cfg.medium.q == 1.0
        assert cfg.snapshot_zetas == (0.0, 7.0, 20.0)
        assert cfg.pulses.peak_convention == "split"
        assert cfg.mode == "propagate"

    def test_fig7_lists_three_ratios(self):
        cfg = load_preset("fig7")
        assert cfg.mode == "analytic"
        assert cfg.q_values == (0.5, 1.0, 5.0)

    def test_unknown_preset(self):
        with pytest.raises(ConfigError):
            load_preset("fig99")


class TestRunScenario:
    def test_propagate_artifacts(self, tmp_path):
        cfg = parse_config(MINI_CONFIG)
        result = run_scenario(cfg, tmp_path)
        assert result.ok
        names = set(result.files)
        assert {"snapshot_zeta0.csv", "snapshot_zeta0.5.csv", "config_resolved.ini",
                "summary.txt"} <= names
        header = (tmp_path / "snapshot_zeta0.5.csv").read_text().splitlines()[0]
        assert header.split(",") == SNAPSHOT_COLUMNS
        assert len(header.split(",")) == 16
        raw = (tmp_path / "snapshot_zeta0.5.csv").read_bytes()
        assert b"\r" not in raw  # LF line endings only
        assert any(line.startswith("zeta_max =") for line in result.summary_lines)

    def test_byte_identical_reruns(self, tmp_path):
        cfg = parse_config(MINI_CONFIG)
        out1, out2 = tmp_path / "a", tmp_path / "b"
        r1 = run_scenario(cfg, out1)
        r2 = run_scenario(cfg, out2)
        assert r1.files == r2.files
        for name in r1.files:
            assert (out1 / name).read_bytes() == (out2 / name).read_bytes()

    def test_convergence_check_mode(self, tmp_path):
        cfg = parse_config(MINI_CONFIG)
        result = run_scenario(cfg, tmp_path, check_convergence=True)
        assert result.ok
        assert any("convergence_check" in line for line in result.summary_lines)
        assert result.values["convergence_dmax"] < 1e-3

    def test_analytic_mode_artifacts(self, tmp_path):
        cfg = parse_config(
            "[medium]\nq = 0.5\n[grid]\nn_tau = 512\n"
            "[run]\nmode = analytic\nsnapshots = 5\nq_values = 0.5, 5\n"
        )
        result = run_scenario(cfg, tmp_path)
        assert result.ok
        assert (tmp_path / "analytic_q0.5_zeta5.csv").is_file()
        assert (tmp_path / "zmax_q5.csv").is_file()
        assert set(result.values["zeta_max"]) == {0.5, 5.0}


class TestSweep:
    def test_single_cell_matches_run_scenario(self, tmp_path):
        base = parse_config(MINI_CONFIG)
        matrix, qs, zs, notes = sweep(base, q_values=[1.0], zeta_values=[0.5])
        assert not notes
        ref = run_scenario(base, tmp_path)
        assert matrix[0, 0] == pytest.approx(ref.values["P3"][0.5], abs=1e-12)

    def test_failure_leaves_nan_cell(self):
        base = parse_config(MINI_CONFIG)
        matrix, qs, zs, notes = sweep(base, q_values=[1.0], zeta_values=[5.0])
        assert np.isnan(matrix[0, 0])
        assert notes and "failed" in notes[0]

    def test_empty_lists_rejected(self):
        base = parse_config(MINI_CONFIG)
        with pytest.raises(ConfigError):
            sweep(base, q_values=[], zeta_values=[1.0])

    def test_transfer_hierarchy_with_depth(self):
        # Weak pump coupling sustains transfer; the other ratios are ordered
        # below it at moderate depth, with the strong-coupling cases losing
        # monotonicity only beyond adiabaticity breakdown.
        cfg = parse_config(
            "[medium]\nq = 1\n[pulses]\npeak_convention = split\n"
            "[grid]\nn_tau = 2048\nzeta_max = 7\nn_zeta = 700\n"
            "[run]\nmode = sweep\nq_values = 0.1, 0.5, 1, 2, 5, 10\nzeta_values = 7\n"
        )
        matrix, qs, zs, notes = sweep(cfg, jobs=2)
        assert not notes
        p3 = matrix[:, 0]
        # Nonincreasing while adiabaticity survives (q <= 2) ...
        assert np.all(np.diff(p3[:4]) < 0)
        # ... and every pre-breakdown ratio beats every post-breakdown one.
        assert p3[:4].min() > p3[4:].max()


class TestCompareMode:
    def test_compare_passes_for_weak_coupling(self, tmp_path):
        cfg = parse_config(
            "[medium]\nq = 0.1\n[pulses]\npeak_convention = split\n"
            "[grid]\nn_tau = 1024\nzeta_max = 2\nn_zeta = 200\n"
            "[run]\nmode = compare\nsnapshots = 0, 1, 2\n"
        )
        result = run_scenario(cfg, tmp_path)
        assert result.ok
        assert result.values["verdict"] is True
        assert result.values["per_zeta_linf"][0.0] == pytest.approx(0.0, abs=1e-9)
        assert (tmp_path / "comparison.csv").is_file()
        assert any("verdict = PASS" in line for line in result.summary_lines)

    def test_steep_slope_flag_beyond_breakdown(self, tmp_path):
        cfg = parse_config(
            "[medium]\nq = 14\n[pulses]\npeak_convention = split\n"
            "[grid]\nn_tau = 1024\nzeta_max = 20\nn_zeta = 1000\n"
            "[run]\nmode = compare\nsnapshots = 20\n"
        )
        result = run_scenario(cfg, tmp_path)
        joined = "\n".join(result.summary_lines)
        assert "steep-slope" in joined
        assert "excluded from verdict" in joined
        assert result.ok  # breakdown depths do not fail the verdict


class TestCli:
    def test_requires_exactly_one_source(self, capsys):
        assert cli_main([]) == 2
        assert cli_main(["x.ini", "--preset", "fig2"]) == 2

    def test_missing_config_file(self):
        assert cli_main(["/nonexistent/path.ini"]) == 2

    def test_unknown_preset_exits_2(self):
        assert cli_main(["--preset", "fig99"]) == 2

    def test_config_error_exits_2(self, tmp_path):
        path = tmp_path / "bad.ini"
        path.write_text("[medium]\nq = -2\n")
        assert cli_main([str(path)]) == 2

    def test_mini_run_exits_0(self, tmp_path, capsys):
        path = tmp_path / "mini.ini"
        path.write_text(MINI_CONFIG)
        code = cli_main([str(path), "--out", str(tmp_path / "out")])
        captured = capsys.readouterr()
        assert code == 0
        assert "P3(zeta=0.5)" in captured.out
        assert (tmp_path / "out" / "summary.txt").is_file()

    def test_mode_override(self, tmp_path):
        path = tmp_path / "mini.ini"
        path.write_text(MINI_CONFIG + "\nq_values = 1\nzeta_values = 0.5\n")
        code = cli_main([str(path), "--out", str(tmp_path / "out"), "--mode", "sweep", "--jobs", "2"])
        assert code == 0
        assert (tmp_path / "out" / "sweep.csv").is_file()
