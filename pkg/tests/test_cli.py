import json
from pathlib import Path

import pytest

from longrates.cli import EXIT_OK, EXIT_USAGE, EXIT_VERIFY, main

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def run_cli(*argv) -> int:
    return main([str(a) for a in argv])


def read_summary(out: Path) -> dict:
    return json.loads((out / "summary.json").read_text())


def csv_lines(path: Path) -> list[str]:
    return path.read_text().splitlines()


class TestSimulate:
    def test_writes_paths_and_summary(self, tmp_path):
        code = run_cli("simulate", "--config", CONFIGS / "markov2.json",
                       "--out", tmp_path)
        assert code == EXIT_OK
        lines = csv_lines(tmp_path / "paths.csv")
        assert lines[0] == "path,time,rate"
        summary = read_summary(tmp_path)
        assert summary["command"] == "simulate"
        assert summary["n_paths"] == 2000
        assert summary["seed"] == 42
        # horizon 8 reports times 0..8 inclusive for every path
        assert summary["n_rows"] == len(lines) - 1 == 2000 * 9

    def test_reruns_and_threads_are_byte_identical(self, tmp_path):
        outs = [tmp_path / name for name in ("a", "b", "c")]
        run_cli("simulate", "--config", CONFIGS / "poisson.json", "--out", outs[0])
        run_cli("simulate", "--config", CONFIGS / "poisson.json", "--out", outs[1])
        run_cli("simulate", "--config", CONFIGS / "poisson.json", "--out", outs[2],
                "--threads", "4")
        ref_paths = (outs[0] / "paths.csv").read_bytes()
        ref_summary = (outs[0] / "summary.json").read_bytes()
        for out in outs[1:]:
            assert (out / "paths.csv").read_bytes() == ref_paths
            assert (out / "summary.json").read_bytes() == ref_summary

    def test_seed_override(self, tmp_path):
        a, b, c = tmp_path / "a", tmp_path / "b", tmp_path / "c"
        run_cli("simulate", "--config", CONFIGS / "markov2.json", "--out", a,
                "--seed", "1")
        run_cli("simulate", "--config", CONFIGS / "markov2.json", "--out", b,
                "--seed", "2")
        run_cli("simulate", "--config", CONFIGS / "markov2.json", "--out", c,
                "--seed", "1")
        assert (a / "paths.csv").read_bytes() != (b / "paths.csv").read_bytes()
        assert (a / "paths.csv").read_bytes() == (c / "paths.csv").read_bytes()
        assert read_summary(a)["seed"] == 1

    def test_nested_out_directory_is_created(self, tmp_path):
        out = tmp_path / "deep" / "nested"
        assert run_cli("simulate", "--config", CONFIGS / "constant.json",
                       "--out", out) == EXIT_OK
        assert (out / "paths.csv").exists()


class TestPrice:
    def test_constant_model_matches_exactly(self, tmp_path):
        code = run_cli("price", "--config", CONFIGS / "constant.json",
                       "--out", tmp_path)
        assert code == EXIT_OK
        lines = csv_lines(tmp_path / "price.csv")
        assert lines[0] == "t,T,log_price,closed_form,mc_value,mc_std_error,mc_n,z_score"
        summary = read_summary(tmp_path)
        assert summary["z_score"] == 0.0
        assert summary["closed_form"] == pytest.approx(1.03 ** -3, rel=1e-15)

    def test_poisson_mc_within_four_sigma(self, tmp_path):
        code = run_cli("price", "--config", CONFIGS / "poisson.json",
                       "--out", tmp_path)
        assert code == EXIT_OK
        summary = read_summary(tmp_path)
        assert summary["mc_n"] == 2000
        assert summary["mc_std_error"] > 0
        assert abs(summary["z_score"]) <= 4.0


class TestCurve:
    def test_poisson_curve_tail(self, tmp_path):
        code = run_cli("curve", "--config", CONFIGS / "poisson.json",
                       "--out", tmp_path)
        assert code == EXIT_OK
        lines = csv_lines(tmp_path / "curve.csv")
        assert lines[0].startswith("observation_time,maturity,log_price")
        assert len(lines) == 1 + 4  # one row per scheduled maturity
        summary = read_summary(tmp_path)
        assert summary["tail_maturity"] == 1005.0  # t = 5 plus tau = 1000
        # zero curve tends to r0 + intensity = 0.55 from below
        assert summary["tail_zero"] == pytest.approx(0.545, abs=1e-3)
        assert summary["tail_zero"] < 0.55


class TestLongRate:
    def test_markov2_against_spectral_oracle(self, tmp_path):
        code = run_cli("long-rate", "--config", CONFIGS / "markov2.json",
                       "--out", tmp_path)
        assert code == EXIT_OK
        summary = read_summary(tmp_path)
        assert summary["quantity"] == "x"
        assert summary["converged"] is True
        # observing at t = 2 shifts the absolute-maturity exponent, so the
        # tail fit lands ~2e-6 off the spectral value instead of ~8e-9 at t = 0
        assert summary["value"] == pytest.approx(21.0 / 22.0, abs=1e-5)
        assert summary["spectral_value"] == pytest.approx(21.0 / 22.0, abs=1e-12)
        assert summary["spectral_gap"] <= 1e-5
        lines = csv_lines(tmp_path / "long_rate.csv")
        assert len(lines) == 3  # extracted row plus spectral row
        assert lines[1].startswith("extracted,x,reciprocal_extrapolation,")
        assert lines[2].startswith("spectral,x,spectral,")

    def test_plain_tail_override_reports_nonconvergence(self, tmp_path):
        code = run_cli("long-rate", "--config", CONFIGS / "poisson.json",
                       "--out", tmp_path, "--method", "plain_tail")
        assert code == EXIT_OK
        summary = read_summary(tmp_path)
        assert summary["method"] == "plain_tail"
        assert summary["converged"] is False
        # plain tail reads z(1000) ~ 0.55 - 5/1000, still 5e-3 short
        assert summary["value"] == pytest.approx(0.545, abs=1e-3)

    def test_tol_override(self, tmp_path):
        code = run_cli("long-rate", "--config", CONFIGS / "poisson.json",
                       "--out", tmp_path, "--tol", "1e-12")
        assert code == EXIT_OK
        summary = read_summary(tmp_path)
        assert summary["tol"] == 1e-12
        assert summary["converged"] is False  # residual cannot meet 1e-12


class TestVerifyMeasure:
    def test_markov2_exact(self, tmp_path):
        code = run_cli("verify-measure", "--config", CONFIGS / "markov2.json",
                       "--out", tmp_path)
        assert code == EXIT_OK
        summary = read_summary(tmp_path)
        assert summary["exact"] is True
        assert abs(summary["gap"]) <= 1e-12
        assert summary["passed"] is True
        assert csv_lines(tmp_path / "measure.csv")[0] == "s,t,T,lhs,rhs,gap,se"

    def test_poisson_monte_carlo(self, tmp_path):
        code = run_cli("verify-measure", "--config", CONFIGS / "poisson.json",
                       "--out", tmp_path)
        assert code == EXIT_OK
        summary = read_summary(tmp_path)
        assert summary["exact"] is False
        assert summary["se"] > 0
        assert abs(summary["gap"]) <= 3.0 * summary["se"]


class TestVerifyDir:
    def test_markov2_run_is_clean(self, tmp_path):
        code = run_cli("verify-dir", "--config", CONFIGS / "markov2.json",
                       "--out", tmp_path)
        assert code == EXIT_OK
        summary = read_summary(tmp_path)
        assert summary["n_violations"] == 0
        assert summary["n_nonconverged"] == 0
        assert summary["passed"] is True
        assert summary["spectral_gap"] <= 1e-4
        lines = csv_lines(tmp_path / "report.csv")
        assert lines[0] == "path,x_s,x_t,residual_s,residual_t,epsilon,violation"
        assert len(lines) == 1 + 2000
        assert all(line.endswith(",false") for line in lines[1:])


class TestLemmaLab:
    def test_four_atoms_passes(self, tmp_path):
        code = run_cli("lemma-lab", "--config", CONFIGS / "four_atoms.json",
                       "--out", tmp_path)
        assert code == EXIT_OK
        summary = read_summary(tmp_path)
        assert summary["all_pass"] is True
        assert summary["converged"] is True
        lines = csv_lines(tmp_path / "trace.csv")
        assert lines[0] == "n,atom,norm,limit,verdict"
        assert len(lines) == 1 + 6 * 4  # schedule length times atoms
        last = lines[-1].split(",")
        assert last[0] == "50" and last[1] == "3"
        assert float(last[2]) == 3.8906198337159748
        assert last[4] == "true"

    def test_zero_tolerance_fails_verification(self, tmp_path):
        doc = json.loads((CONFIGS / "four_atoms.json").read_text())
        doc["tolerances"]["tol"] = 0.0
        strict = tmp_path / "strict.json"
        strict.write_text(json.dumps(doc))
        out = tmp_path / "out"
        code = run_cli("lemma-lab", "--config", strict, "--out", out)
        assert code == EXIT_VERIFY
        summary = read_summary(out)
        assert summary["all_pass"] is False
        assert summary["converged"] is True

    def test_missing_tol_is_a_config_error(self, tmp_path):
        doc = json.loads((CONFIGS / "four_atoms.json").read_text())
        del doc["tolerances"]["tol"]
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps(doc))
        assert run_cli("lemma-lab", "--config", bad, "--out", tmp_path) == EXIT_USAGE


class TestErrorHandling:
    def test_missing_config_file(self, tmp_path):
        code = run_cli("simulate", "--config", tmp_path / "absent.json",
                       "--out", tmp_path)
        assert code == EXIT_USAGE

    def test_invalid_json(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        assert run_cli("simulate", "--config", bad, "--out", tmp_path) == EXIT_USAGE

    def test_missing_section(self, tmp_path):
        doc = json.loads((CONFIGS / "markov2.json").read_text())
        del doc["model"]
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps(doc))
        assert run_cli("simulate", "--config", bad, "--out", tmp_path) == EXIT_USAGE

    def test_unknown_model_kind(self, tmp_path):
        doc = json.loads((CONFIGS / "markov2.json").read_text())
        doc["model"] = {"kind": "vasicek", "rate": 0.03}
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps(doc))
        assert run_cli("simulate", "--config", bad, "--out", tmp_path) == EXIT_USAGE

    def test_discrete_grid_rejects_output_step(self, tmp_path):
        doc = json.loads((CONFIGS / "markov2.json").read_text())
        doc["grid"]["output_step"] = 0.5
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps(doc))
        assert run_cli("simulate", "--config", bad, "--out", tmp_path) == EXIT_USAGE

    def test_negative_seed_override(self, tmp_path):
        code = run_cli("simulate", "--config", CONFIGS / "markov2.json",
                       "--out", tmp_path, "--seed", "-3")
        assert code == EXIT_USAGE

    def test_bad_argv_exits_one(self):
        with pytest.raises(SystemExit) as exc:
            main(["bogus-command"])
        assert exc.value.code == EXIT_USAGE
        with pytest.raises(SystemExit) as exc:
            main(["simulate"])  # missing required --config
        assert exc.value.code == EXIT_USAGE
