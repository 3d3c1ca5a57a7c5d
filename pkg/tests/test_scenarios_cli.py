import json
import math
import os

import numpy as np
import pytest
from click.testing import CliRunner

from expldp import acceptance, scenario_names, scenario_run
from expldp.cli import main
from expldp.errors import UnknownScenario


def test_registry_names():
    assert scenario_names() == [
        "gauss-mean-eq-sd", "hardy-weinberg", "poisson-landau", "strip-boundary"
    ]


def test_unknown_scenario_raises(tmp_path):
    with pytest.raises(UnknownScenario):
        scenario_run("nope", str(tmp_path))


@pytest.fixture(scope="module")
def hw_outdir(tmp_path_factory):
    path = tmp_path_factory.mktemp("hw")
    scenario_run("hardy-weinberg", str(path))
    return path


@pytest.fixture(scope="module")
def pl_outdir(tmp_path_factory):
    path = tmp_path_factory.mktemp("pl")
    scenario_run("poisson-landau", str(path))
    return path


@pytest.fixture(scope="module")
def strip_outdir(tmp_path_factory):
    path = tmp_path_factory.mktemp("strip")
    scenario_run("strip-boundary", str(path))
    return path


class TestHardyWeinbergScenario:
    @pytest.fixture
    def outdir(self, hw_outdir):
        return hw_outdir

    def test_expected_files(self, outdir):
        for name in ("posterior_rate", "decay_rates", "pythagoras", "mle_oracle"):
            assert (outdir / f"{name}.csv").exists()
            assert (outdir / f"{name}.json").exists()

    def test_csv_header_and_formatting(self, outdir):
        text = (outdir / "posterior_rate.csv").read_text()
        lines = text.split("\n")
        assert lines[0] == "coordinate,rate"
        assert text.endswith("\n")
        coord, rate = lines[1].split(",")
        float(coord), float(rate)

    def test_decay_metadata_within_tolerance(self, outdir):
        meta = json.loads((outdir / "decay_rates.json").read_text())["metadata"]
        assert meta["relative_error"] < 0.02

    def test_oracle_metadata_within_tolerance(self, outdir):
        meta = json.loads((outdir / "mle_oracle.json").read_text())["metadata"]
        assert meta["relative_error"] < 0.05

    def test_pythagoras_residuals_tiny(self, outdir):
        meta = json.loads((outdir / "pythagoras.json").read_text())["metadata"]
        assert meta["max_abs_residual"] < 1e-10


class TestPoissonLandauScenario:
    @pytest.fixture
    def outdir(self, pl_outdir):
        return pl_outdir

    def test_dual_gap_below_tolerance(self, outdir):
        meta = json.loads((outdir / "dual_gap.json").read_text())["metadata"]
        assert meta["max_gap"] < 1e-10

    def test_ultimo_closed_form(self, outdir):
        rows = json.loads((outdir / "ultimo_rate.json").read_text())["rows"]
        assert max(abs(r[3]) for r in rows) < 1e-12

    def test_landau_checks_report(self, outdir):
        checks = json.loads((outdir / "landau_checks.json").read_text())
        assert abs(checks["normalization"]["measured"] - 1.0) < 1e-3
        assert checks["conjugate_of_conjugate_max_gap"] < 1e-8


class TestStripScenario:
    @pytest.fixture
    def outdir(self, strip_outdir):
        return strip_outdir

    def test_curve_cumulant_blowup(self, outdir):
        lines = (outdir / "curve_cumulant.csv").read_text().strip().split("\n")[1:]
        table = {float(a): float(b) for a, b in (ln.split(",") for ln in lines)}
        assert table[0.01] > 10.0
        assert table[0.05] < table[0.02] < table[0.01]

    def test_continuity_report_verdicts(self, outdir):
        report = json.loads((outdir / "continuity_report.json").read_text())
        assert report["open_origin"]["continuity_report"]["condition_c"]["holds"]
        assert not report["adjoined_origin"]["continuity_report"]["condition_c"]["holds"]

    def test_boundary_rates_exceed_naive_prediction(self, outdir):
        rows = json.loads((outdir / "boundary_rates.json").read_text())["rows"]
        for eps, rate, inf_rate, naive in rows:
            assert rate > naive


def test_gauss_scenario_and_byte_determinism(tmp_path):
    first = tmp_path / "a"
    second = tmp_path / "b"
    scenario_run("gauss-mean-eq-sd", str(first))
    scenario_run("gauss-mean-eq-sd", str(second))
    for name in os.listdir(first):
        assert (first / name).read_bytes() == (second / name).read_bytes()
    meta = json.loads((first / "quadratic_certificate.json").read_text())["metadata"]
    assert meta["max_abs_diff"] < 1e-6


def test_json_only_format(tmp_path):
    paths = scenario_run("gauss-mean-eq-sd", str(tmp_path), fmt="json")
    assert all(p.endswith(".json") for p in paths)
    assert not any(p.endswith(".csv") for p in paths)


class TestCli:
    def test_scenario_list(self):
        result = CliRunner().invoke(main, ["scenario", "list"])
        assert result.exit_code == 0
        for name in scenario_names():
            assert name in result.output

    def test_scenario_run_unknown_is_usage_error(self, tmp_path):
        result = CliRunner().invoke(
            main, ["scenario", "run", "nope", "--outdir", str(tmp_path)]
        )
        assert result.exit_code == 2

    def test_legendre_command(self):
        result = CliRunner().invoke(
            main, ["legendre", "--family", "poisson", "--t", "2"]
        )
        assert result.exit_code == 0
        value = float(result.output.split("\n")[0].split()[1])
        assert value == pytest.approx(2 * math.log(2.0) - 1.0, abs=1e-10)

    def test_legendre_json_flag(self):
        result = CliRunner().invoke(
            main, ["legendre", "--family", "poisson", "--t", "2", "--json"]
        )
        obj = json.loads(result.output)
        assert set(obj) == {
            "value", "argmax", "converged", "iterations", "multiplicity_flag"
        }

    def test_legendre_constrained(self):
        result = CliRunner().invoke(
            main,
            ["legendre", "--family", "hardy-weinberg-saturated",
             "--t", "0.3,0.2", "--constraint", "hw-line", "--json"],
        )
        obj = json.loads(result.output)
        assert obj["argmax"][0] == pytest.approx(math.log(11 / 9), abs=1e-9)

    def test_legendre_bad_mean_point_is_usage_error(self):
        result = CliRunner().invoke(
            main, ["legendre", "--family", "poisson", "--t", "-1"]
        )
        assert result.exit_code == 2

    def test_rate_cramer(self):
        result = CliRunner().invoke(
            main,
            ["rate", "cramer", "--family", "poisson", "--theta0", "0",
             "--t", "2"],
        )
        assert result.exit_code == 0
        assert float(result.output) == pytest.approx(2 * math.log(2) - 1, abs=1e-10)

    def test_rate_posterior_to_file(self, tmp_path):
        out = tmp_path / "rate.csv"
        result = CliRunner().invoke(
            main,
            ["rate", "posterior", "--model", "hw-line", "--mu0", "0.3,0.2",
             "--support", "-3,3", "--grid", "-1,1,11", "--out", str(out)],
        )
        assert result.exit_code == 0
        lines = out.read_text().strip().split("\n")
        assert lines[0] == "coordinate,rate"
        assert len(lines) == 12

    def test_rate_mle(self):
        result = CliRunner().invoke(
            main,
            ["rate", "mle", "--model", "hw-line", "--theta0-coord", "0",
             "--grid", "0.5,0.5,1", "--method", "pythagoras"],
        )
        assert result.exit_code == 0
        rate = float(result.output.strip().split("\n")[1].split(",")[1])
        assert rate == pytest.approx(0.060599723961, abs=1e-9)

    def test_verify_filter_single_criterion(self):
        result = CliRunner().invoke(main, ["verify", "--filter", "1-closed"])
        assert result.exit_code == 0
        assert "[PASS] 1-closed-form-hw" in result.output

    def test_verify_filter_dual_selects_dual_checks(self):
        result = CliRunner().invoke(main, ["verify", "--filter", "dual"])
        assert result.exit_code == 0
        assert "8-duality" in result.output
        assert "9-landau-dual-numerics" in result.output
        assert "1-closed-form-hw" not in result.output


class TestVerifySensitivity:
    def test_perturbed_mle_flags_criteria_and_exits_nonzero(self, monkeypatch):
        # bug-injection contract: biasing the constrained-MLE solve by 1e-3
        # must trip the closed-form and Pythagoras criteria
        from expldp import legendre as legendre_mod

        original = legendre_mod.conjugate_constrained

        def biased(family, constraint, t, **kwargs):
            res = original(family, constraint, t, **kwargs)
            if res.argmax is None:
                return res
            if constraint.kind == "curve" and res.coordinate is not None:
                z = res.coordinate + 1e-3
                res.coordinate = z
                res.argmax = np.asarray(constraint.model.map(z), dtype=float)
            elif constraint.kind == "affine":
                res.argmax = res.argmax + 1e-3 * constraint.directions[0]
            return res

        monkeypatch.setattr(legendre_mod, "conjugate_constrained", biased)
        results = acceptance.verify_suite("1-closed")
        results += acceptance.verify_suite("3-pythagoras")
        flagged = [r.name for r in results if not r.passed]
        assert "1-closed-form-hw" in flagged
        assert "3-pythagoras" in flagged

        cli = CliRunner().invoke(main, ["verify", "--filter", "3-pythagoras"])
        assert cli.exit_code == 1
        assert "FAILED" in cli.output


def test_seed_env_override(monkeypatch):
    monkeypatch.setenv("EXPLDP_SEED", "98765")
    assert acceptance._seed() == 98765
