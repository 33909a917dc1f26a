import json
import math
import logging
import pytest

from src.cli.main import build_parser, load_config, main
from src.cli.runner import AnalysisRunner
from src.config import ConfigFactory, TestFunctionConfig, TowerConfig
from src.negstate.energy import TheoremReport, TheoremRow
from src.output import OutputManager
from src.utils.errors import NumericError, TheoremViolationError


SMALL_BETA_GRID = {"beta": [0.1, 0.2, 0.5, 1.0]}


@pytest.fixture
def write_config(tmp_path):
    def write(document, name="run.json"):
        path = tmp_path / name
        path.write_text(json.dumps(document))
        return str(path)
    return write


def _read(path):
    return json.loads(path.read_text())


@pytest.fixture(scope="module")
def arithmetic_report(tmp_path_factory):
    """tower-report on the default arithmetic tower with the default beta grid."""
    out = tmp_path_factory.mktemp("arithmetic")
    config = ConfigFactory.for_analysis("tower-report")
    config.output.output_dir = str(out)
    summary = AnalysisRunner(config).run()
    return out, summary


@pytest.fixture(scope="module")
def qei_report(tmp_path_factory):
    """qei-report on the default arithmetic tower with exponentially decaying transform samples."""
    out = tmp_path_factory.mktemp("qei")
    u = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0]
    samples = {'u': u, 'values': [math.exp(-x) for x in u]}
    config = ConfigFactory.for_analysis("qei-report", test_function=TestFunctionConfig(decay_samples=samples))
    config.output.output_dir = str(out)
    summary = AnalysisRunner(config).run()
    return out, summary['results']


class TestParser:
    def test_arguments(self):
        args = build_parser().parse_args(["qei-report", "--config", "run.json", "--seed", "5",
                                          "--out", "reports", "--plots"])
        assert args.analysis == "qei-report"
        assert args.config == "run.json"
        assert args.seed == 5
        assert args.out == "reports"
        assert args.plots is True

    def test_unknown_analysis(self):
        with pytest.raises(SystemExit):
            build_parser().parse_args(["spectral-flow"])


class TestTowerReport:
    def test_arithmetic_sufficient(self, arithmetic_report):
        out, summary = arithmetic_report
        record = _read(out / "summary.json")
        assert record['results']['sufficient_holds'] == "yes"
        assert record['results']['necessary_holds'] == "yes"
        assert record == json.loads(json.dumps(record))
        assert summary['analysis'] == "tower-report"

    def test_tables_written(self, arithmetic_report):
        out, summary = arithmetic_report
        for name in ("tower_sums", "counting_identity", "local_normality", "index_bounds", "counting"):
            assert (out / f"{name}.csv").exists()
            assert f"{name}.csv" in summary['files']
        header, *rows = (out / "tower_sums.csv").read_text().splitlines()
        assert header == "beta,F_status,F,F_remainder,G_status,G,G_remainder"
        assert len(rows) == 13

    def test_identity_residuals_small(self, arithmetic_report):
        out, _ = arithmetic_report
        rows = [line.split(",") for line in (out / "counting_identity.csv").read_text().splitlines()[1:]]
        for beta, status, G, integral, tail, residual, approximate in rows:
            assert status == "convergent"
            assert float(residual) < 1e-6 * float(G)

    def test_counting_steps_at_multiples_of_gap(self, arithmetic_report):
        out, _ = arithmetic_report
        rows = [line.split(",") for line in (out / "counting.csv").read_text().splitlines()[1:]]
        assert len(rows) == 401
        for u, n in rows:
            u = float(u)
            if abs(u - round(u)) > 1e-9:
                assert float(n) == math.floor(u)

    def test_logarithmic_tower(self, tmp_path):
        config = ConfigFactory.for_analysis("tower-report", tower=TowerConfig(type="logarithmic", d0=1.0))
        summary = AnalysisRunner(config, OutputManager(str(tmp_path))).run()
        assert summary['results']['sufficient_holds'] == "no"
        assert summary['results']['necessary_holds'] == "no"


class TestQeiReport:
    def test_pipeline_applies_to_default_function(self, qei_report):
        _, results = qei_report
        pipeline = results['pipeline']
        assert pipeline['applicable'] is True
        assert pipeline['nuclearity']['sufficient_holds'] == "yes"
        assert pipeline['locally_normal_all_temperatures'] == "yes"
        assert results['envelope']['kappa'] > 0

    def test_domain_from_user_samples(self, qei_report):
        out, results = qei_report
        assert results['decay']['class'] == "exponential"
        assert results['decay']['gamma'] == pytest.approx(1.0, rel=1e-3)
        assert results['domain']['admissible'] is True
        assert (out / "qei_domain.csv").exists()

    def test_domain_sweep(self, qei_report):
        _, results = qei_report
        admissible = [row['admissible'] for row in results['domain_sweep']]
        assert admissible[:2] == [False, False]
        assert admissible[-1] is True

    def test_without_samples_or_scaling(self, tmp_path, mocker):
        mocker.patch("src.qei.theorems.compute_scaling", side_effect=NumericError("skipped"))
        assert main(["qei-report", "--out", str(tmp_path)]) == 0
        results = _read(tmp_path / "summary.json")['results']
        assert results['decay'] is None
        assert "no finite QEI scaling" in results['pipeline']['reason']
        assert 'domain' not in results and 'domain_sweep' not in results


class TestDeterminism:
    def test_identical_runs_byte_identical(self, tmp_path, write_config):
        path = write_config({"analysis": "tower-report", "seed": 11, "grids": SMALL_BETA_GRID})
        assert main(["tower-report", "--config", path, "--out", str(tmp_path / "a")]) == 0
        assert main(["tower-report", "--config", path, "--out", str(tmp_path / "b")]) == 0

        first = sorted(p.name for p in (tmp_path / "a").iterdir())
        second = sorted(p.name for p in (tmp_path / "b").iterdir())
        assert first == second
        assert "summary.json" in first
        for name in first:
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_distal_demo_reproducible(self, tmp_path):
        assert main(["distal-demo", "--out", str(tmp_path / "a")]) == 0
        assert main(["distal-demo", "--out", str(tmp_path / "b")]) == 0
        for name in ("summary.json", "distal_trace.json", "distal_band.csv"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


class TestAnalyses:
    def test_distal_demo(self, tmp_path):
        assert main(["distal-demo", "--out", str(tmp_path)]) == 0
        results = _read(tmp_path / "summary.json")['results']
        assert results['shrink']['holds'] is True
        assert results['shrink']['conclusion'] == "d(S) in {0, inf}"
        assert results['identity_covering_radius'] == 1.0
        assert [s['kappa'] for s in results['scaling']] == pytest.approx([0.25, 0.5, 0.75])
        assert "maximum temperature" in results['band']
        trace = _read(tmp_path / "distal_trace.json")
        assert trace['shrink']['bound_trace'][:3] == [1.0, 0.5, 0.25]

    def test_negstate_verify(self, tmp_path, mocker):
        rows = [TheoremRow(m, 0.1, 0.01, -2.0 * m, 1e-12, -1.0 * m, 2.0, 0.99, 0.98) for m in (1.0, 2.0, 4.0)]
        verify = mocker.patch("src.negstate.energy.verify_theorem",
                              return_value=TheoremReport(0.1, 0.002, 0.01, {'cutoff': 40}, rows))
        mocker.patch("src.negstate.kernel.derive_kernel", return_value="kernel")

        assert main(["negstate-verify", "--out", str(tmp_path), "--seed", "3", "--plots"]) == 0
        args, kwargs = verify.call_args
        assert args[0] == [1.0, 2.0, 4.0]
        assert kwargs['seed'] == 3
        assert kwargs['mc_samples'] == 0
        assert kwargs['kernel'] == "kernel"

        record = _read(tmp_path / "summary.json")
        assert record['seed'] == 3
        assert record['results']['all_margins_ok'] is True
        assert all(row['margin'] >= 1 for row in record['results']['rows'])
        assert all(k['ok'] for k in record['results']['kinematics'].values())
        assert math.isnan(float(record['results']['rows'][0]['mc_estimate']))
        header = (tmp_path / "negstate.csv").read_text().splitlines()[0]
        assert header == "m,lambda0,Gamma,energy,error,bound,margin,mc_estimate,mc_stderr"
        assert (tmp_path / "energy_bound.svg").exists()

    def test_plots_only_on_request(self, tmp_path, write_config):
        path = write_config({"analysis": "tower-report", "grids": SMALL_BETA_GRID})
        assert main(["tower-report", "--config", path, "--out", str(tmp_path / "plain")]) == 0
        assert main(["tower-report", "--config", path, "--out", str(tmp_path / "plots"), "--plots"]) == 0
        assert not list((tmp_path / "plain").glob("*.svg"))
        assert (tmp_path / "plots" / "counting.svg").exists()
        assert (tmp_path / "plots" / "tower_sums.svg").exists()
        assert "counting.svg" in _read(tmp_path / "plots" / "summary.json")['files']


class TestExitCodes:
    def test_config_error(self, tmp_path, write_config):
        path = write_config({"analysis": "tower-report", "tower": {"type": "arithmetic", "m1": 0}})
        assert main(["tower-report", "--config", path, "--out", str(tmp_path)]) == 2
        record = _read(tmp_path / "error.json")
        assert record['error'] == "ConfigError"
        assert record['exit_code'] == 2
        assert any("mass gap violated" in e for e in record['errors'])
        assert not (tmp_path / "summary.json").exists()

    def test_analysis_mismatch(self, tmp_path, write_config):
        path = write_config({"analysis": "qei-report"})
        assert main(["tower-report", "--config", path, "--out", str(tmp_path)]) == 2
        assert "not tower-report" in _read(tmp_path / "error.json")['message']

    def test_invalid_seed_override(self, tmp_path):
        assert main(["distal-demo", "--seed", "-4", "--out", str(tmp_path)]) == 2

    def test_numeric_failure(self, tmp_path, mocker):
        mocker.patch.object(AnalysisRunner, "distal_demo",
                            side_effect=NumericError("quadrature did not converge"))
        assert main(["distal-demo", "--out", str(tmp_path)]) == 3
        assert _read(tmp_path / "error.json")['error'] == "NumericError"

    def test_error_record_carries_logged_errors(self, tmp_path, mocker):
        def fail():
            logging.getLogger("src.tower.series").error("partial sums did not settle")
            raise NumericError("quadrature did not converge")

        mocker.patch.object(AnalysisRunner, "distal_demo", side_effect=fail)
        assert main(["distal-demo", "--out", str(tmp_path)]) == 3
        logged = _read(tmp_path / "error.json")['logged_errors']
        assert [entry['logger'] for entry in logged] == ["src.tower.series", "src"]
        assert logged[0]['message'] == "partial sums did not settle"
        assert logged[1]['message'] == "Numerical failure: quadrature did not converge"
        assert logged[1]['level'] == "ERROR"

    def test_theorem_violation(self, tmp_path, mocker):
        mocker.patch("src.negstate.kernel.derive_kernel")
        mocker.patch("src.negstate.energy.verify_theorem",
                     side_effect=TheoremViolationError("averaged energy exceeds the bound"))
        assert main(["negstate-verify", "--out", str(tmp_path)]) == 4
        assert _read(tmp_path / "error.json")['exit_code'] == 4

    def test_unexpected_failure(self, tmp_path, mocker):
        mocker.patch.object(AnalysisRunner, "testfn_build", side_effect=RuntimeError("boom"))
        assert main(["testfn-build", "--out", str(tmp_path)]) == 1
        record = _read(tmp_path / "error.json")
        assert record['error'] == "LabError"
        assert "boom" in record['message']

    def test_overrides_applied(self, tmp_path, write_config):
        path = write_config({"analysis": "qei-report", "seed": 1, "grids": {"lambda": [1.0, 0.5]}})
        args = build_parser().parse_args(["qei-report", "--config", path, "--seed", "9",
                                          "--out", str(tmp_path / "reports"), "--plots"])
        config = load_config(args)
        assert config.seed == 9
        assert config.output.output_dir == str(tmp_path / "reports")
        assert config.output.plots is True
        assert config.grids.lam == [1.0, 0.5]
