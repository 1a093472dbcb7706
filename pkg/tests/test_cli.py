import os

import pytest

from sevsteps import cli


FAST_RATES = [
    "--K", "8", "--M", "10",
    "--k_grid", "2^-4,2^-5,2^-6,2^-7",
    "--k_ref", "2^-10",
    "--scheme", "implicit_euler",
    "--u0_decay", "3.0",
]


def _run(args):
    return cli.main(args)


class TestConfigParsing:
    def test_defaults(self):
        cfg = cli.load_config(None, {})
        assert cfg.problem == "linear"
        assert cfg.M == 200

    def test_file_and_overrides(self, tmp_path):
        f = tmp_path / "exp.cfg"
        f.write_text("K = 16  # spatial cutoff\nM = 50\n\nseed = 9\n")
        cfg = cli.load_config(str(f), {"M": "75"})
        assert (cfg.K, cfg.M, cfg.seed) == (16, 75, 9)

    def test_unknown_key_rejected(self, tmp_path):
        f = tmp_path / "exp.cfg"
        f.write_text("frobnicate = 1\n")
        with pytest.raises(cli.ConfigError):
            cli.load_config(str(f), {})

    def test_bad_value_rejected(self):
        with pytest.raises(cli.ConfigError):
            cli.load_config(None, {"M": "many"})

    def test_dyadic_tokens(self):
        assert cli._dyadic("2^-6") == 2.0**-6
        assert cli._dyadic("0.125") == 0.125

    def test_missing_file_is_config_error(self):
        with pytest.raises(cli.ConfigError):
            cli.load_config("/nonexistent/exp.cfg", {})


class TestExitCodes:
    def test_unknown_override_exit_1(self, tmp_path, capsys):
        code = _run(["rates", "--outdir", str(tmp_path), "--bogus", "1"])
        assert code == 1

    def test_bad_grid_exit_1(self, tmp_path):
        code = _run(["rates", "--outdir", str(tmp_path), "--k_grid", "0.3"])
        assert code == 1

    def test_kref_budget_enforced(self, tmp_path):
        code = _run(
            ["rates", "--outdir", str(tmp_path), "--k_ref", "2^-22"]
        )
        assert code == 1

    def test_stability_tolerance_failure_exit_2(self, tmp_path, capsys):
        # an impossible ratio bound forces the tolerance branch
        code = _run(
            [
                "stability", "--outdir", str(tmp_path),
                "--K", "6", "--M", "8",
                "--n_grid", "16,64",
                "--stability_ratio", "1.0000000001",
                "--scheme", "implicit_euler",
            ]
        )
        assert code == 2


class TestOutputs:
    def test_rates_outputs(self, tmp_path, capsys):
        out = str(tmp_path / "run")
        code = _run(["rates", "--outdir", out] + FAST_RATES)
        assert code == 0
        names = sorted(os.listdir(out))
        assert "manifest.txt" in names
        assert "rates.svg" in names
        assert "rates_implicit_euler.csv" in names
        manifest = (tmp_path / "run" / "manifest.txt").read_text()
        assert "version = sevsteps" in manifest
        assert "wall_seconds" in manifest
        csv = (tmp_path / "run" / "rates_implicit_euler.csv").read_text()
        assert csv.startswith("k,N_k,uniform_err")

    def test_repeat_runs_byte_identical(self, tmp_path, capsys):
        a, b = str(tmp_path / "a"), str(tmp_path / "b")
        assert _run(["rates", "--outdir", a] + FAST_RATES) == 0
        assert _run(["rates", "--outdir", b] + FAST_RATES) == 0
        ca = (tmp_path / "a" / "rates_implicit_euler.csv").read_bytes()
        cb = (tmp_path / "b" / "rates_implicit_euler.csv").read_bytes()
        assert ca == cb

    def test_threads_env_fallback(self, tmp_path, capsys, monkeypatch):
        monkeypatch.setenv("SEVSTEPS_THREADS", "4")
        cfg = cli.load_config(None, {})
        assert cli._resolve_threads(cfg) == 4
        monkeypatch.setenv("SEVSTEPS_THREADS", "junk")
        with pytest.raises(cli.ConfigError):
            cli._resolve_threads(cfg)
        monkeypatch.delenv("SEVSTEPS_THREADS")
        assert cli._resolve_threads(cfg) == 1

    def test_single_k_report_only(self, tmp_path, capsys):
        out = str(tmp_path / "single")
        code = _run(
            [
                "rates", "--outdir", out,
                "--K", "6", "--M", "8",
                "--k_grid", "2^-5", "--k_ref", "2^-9",
                "--scheme", "implicit_euler", "--u0_decay", "3.0",
            ]
        )
        assert code == 0
        assert "report only" in capsys.readouterr().out

    def test_deterministic_zero_noise_reported_exact(self, tmp_path, capsys):
        out = str(tmp_path / "exact")
        code = _run(
            [
                "rates", "--outdir", out,
                "--K", "6", "--M", "4",
                "--k_grid", "2^-4,2^-5,2^-6,2^-7", "--k_ref", "2^-9",
                "--scheme", "exponential_euler",
                "--amplitudes", "0.0",
                "--lambda_decay", "200.0",  # trace ~ 1 on mode 0 only
                "--u0_decay", "3.0",
            ]
        )
        # EE with only informational fit always passes
        assert code == 0

    def test_inequalities_outputs(self, tmp_path, capsys):
        out = str(tmp_path / "ineq")
        code = _run(
            [
                "inequalities", "--outdir", out,
                "--K", "6", "--ineq_paths", "400",
                "--gronwall_trials", "50",
            ]
        )
        assert code == 0
        text = (tmp_path / "ineq" / "inequalities.csv").read_text()
        assert text.splitlines()[0] == "check,value,bound,pass"
        assert ",1" in text  # every check passed
