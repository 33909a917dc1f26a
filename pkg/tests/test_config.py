import os
import json
import pytest
from unittest.mock import patch

from src.config import (
    Analysis,
    ConfigFactory,
    GridConfig,
    LogConfig,
    MonteCarloConfig,
    OutputConfig,
    ProfileConfig,
    RunConfig,
    TestFunctionConfig,
    TowerConfig,
    parse_config,
)
from src.tower.spectrum import TailKind
from src.utils.errors import ConfigError, ValidationError


@pytest.fixture
def write_config(tmp_path):
    """Write a JSON document and return its path."""
    def write(document, name="run.json"):
        path = tmp_path / name
        path.write_text(document if isinstance(document, str) else json.dumps(document))
        return path
    return write


class TestAnalysis:
    def test_values(self):
        assert [a.value for a in Analysis] == [
            "tower-report", "qei-report", "negstate-verify", "testfn-build", "distal-demo"]

    def test_invalid_analysis(self):
        with pytest.raises(ValueError):
            Analysis("fourier-report")


class TestParseConfig:
    def test_minimal_config_fills_defaults(self, write_config):
        """Only the analysis given: every section defaults and the seed is 0."""
        with patch.dict(os.environ, {}, clear=True):
            config = parse_config(write_config({"analysis": "tower-report"}))

        assert config.analysis is Analysis.TOWER_REPORT
        assert config.seed == 0
        assert config.tower.type == "arithmetic"
        assert config.test_function.a == 1.0
        assert config.constants.d == 4
        assert config.profile.m0 == 0.5
        assert config.monte_carlo.samples == 0
        assert config.output.output_dir == "output"

    def test_zero_mass_gap_rejected(self, write_config):
        path = write_config({"analysis": "tower-report", "tower": {"type": "arithmetic", "m1": 0}})
        with pytest.raises(ConfigError) as exc:
            parse_config(path)
        assert any("mass gap violated" in e for e in exc.value.errors)

    def test_logarithmic_tower_parses(self, write_config):
        config = parse_config(write_config({"analysis": "tower-report",
                                            "tower": {"type": "logarithmic", "d0": 1.0}}))
        tower = config.tower.build()
        assert tower.kind is TailKind.LOGARITHMIC
        assert tower.d0 == 1.0
        assert tower.counting(1.5) == 19     # floor(e^3 - 1)

    def test_unknown_keys_rejected_at_every_level(self, write_config):
        path = write_config({"analysis": "tower-report", "verbose": True,
                             "tower": {"type": "arithmetic", "gap": 1.0},
                             "grids": {"lambda": [1.0, 0.5], "lam": [1.0]}})
        with pytest.raises(ConfigError) as exc:
            parse_config(path)
        errors = exc.value.errors
        assert "unknown key 'verbose'" in errors
        assert "tower: unknown key 'gap'" in errors
        assert "grids: unknown key 'lam'" in errors

    def test_all_problems_collected(self, write_config):
        path = write_config({"analysis": "qei-report", "seed": -1,
                             "test_function": {"a": -1.0, "beta0": 0},
                             "constants": {"d": 1}})
        with pytest.raises(ConfigError) as exc:
            parse_config(path)
        assert len(exc.value.errors) == 4
        assert exc.value.exit_code == 2

    @pytest.mark.parametrize("document,message", [
        ("{not json", "not valid JSON"),
        ('{"analysis": "tower-report", "seed": NaN}', "not valid JSON"),
        ("[1, 2]", "must be a JSON object"),
    ])
    def test_malformed_documents(self, write_config, document, message):
        with pytest.raises(ConfigError, match=message):
            parse_config(write_config(document))

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="cannot read"):
            parse_config(tmp_path / "absent.json")

    def test_missing_or_unknown_analysis(self, write_config):
        with pytest.raises(ConfigError) as exc:
            parse_config(write_config({"seed": 1}))
        assert "analysis is required" in exc.value.errors

        with pytest.raises(ConfigError) as exc:
            parse_config(write_config({"analysis": "plot-everything"}))
        assert "unknown analysis" in exc.value.errors[0]

    def test_lambda_alias_round_trip(self, write_config):
        config = parse_config(write_config({"analysis": "qei-report",
                                            "grids": {"lambda": [1.0, 0.5, 0.25]}}))
        assert config.grids.lam == [1.0, 0.5, 0.25]
        assert config.to_dict()['grids']['lambda'] == [1.0, 0.5, 0.25]


class TestSections:
    def test_tower_default_gap(self):
        tower = TowerConfig().build()
        assert tower.m1 == 1.0
        assert TowerConfig().m1 is None

    def test_unknown_tower_type(self):
        assert TowerConfig(type="geometric").problems() == ["tower: unknown tower type: geometric"]

    def test_test_function_shape(self):
        errors = TestFunctionConfig(shape="gaussian").problems()
        assert len(errors) == 1 and "test_function.shape" in errors[0]

    def test_decay_samples(self):
        samples = {'u': [1.0, 2.0, 3.0, 4.0], 'values': [0.5, 0.2, 0.1, 0.05]}
        assert TestFunctionConfig(decay_samples=samples).problems() == []

    @pytest.mark.parametrize("samples,message", [
        ({'u': [1.0, 2.0, 3.0, 4.0]}, "keys \"u\" and \"values\""),
        ({'u': [1.0, 2.0], 'values': [0.5, 0.2]}, "equal length >= 4"),
        ({'u': [0.0, 1.0, 2.0, 3.0], 'values': [1.0, 0.5, 0.2, 0.1]}, "positive finite"),
    ])
    def test_bad_decay_samples(self, samples, message):
        errors = TestFunctionConfig(decay_samples=samples).problems()
        assert len(errors) == 1 and message in errors[0]

    def test_profile_interval(self):
        assert ProfileConfig(radial_shape=[0.6, 0.9]).problems() == []
        errors = ProfileConfig(angular_shape=[0.2, 0.9]).problems()
        assert "leaves the support" in errors[0]
        errors = ProfileConfig(radial_shape="flat").problems()
        assert "must be \"bump\" or [lower, upper]" in errors[0]

    def test_lambda_grid_must_decrease(self):
        assert GridConfig(lam=[1.0, 0.5]).problems() == []
        assert GridConfig(lam=[0.5, 1.0]).problems() == ["grids.lambda must be strictly decreasing"]

    def test_grid_values(self):
        errors = GridConfig(beta=[], m=[1.0, -2.0]).problems()
        assert "grids.beta must be a nonempty list, got []" in errors
        assert "grids.m must be positive, got -2.0" in errors
        assert GridConfig(u=[0.0, 1.0]).problems() == []

    def test_monte_carlo_samples(self):
        assert MonteCarloConfig(samples=0).problems() == []
        assert MonteCarloConfig(samples=100_000).problems() == []
        errors = MonteCarloConfig(samples=500).problems()
        assert "at least 10000" in errors[0]

    def test_log_level(self):
        assert LogConfig(level="debug").problems() == []
        assert "log.level" in LogConfig(level="LOUD").problems()[0]

    def test_section_validate_raises(self):
        with pytest.raises(ConfigError, match="output configuration is invalid"):
            OutputConfig(output_dir="", plots=False).validate()


class TestEnvironment:
    def test_env_overrides(self):
        env = {"QEILAB_SEED": "42", "QEILAB_OUTPUT_DIR": "/tmp/qeilab", "QEILAB_LOG_LEVEL": "DEBUG"}
        with patch.dict(os.environ, env, clear=True):
            config = RunConfig(Analysis.TESTFN_BUILD)
        assert config.seed == 42
        assert config.output.output_dir == "/tmp/qeilab"
        assert config.log.level == "DEBUG"

    def test_invalid_env_seed(self):
        with patch.dict(os.environ, {"QEILAB_SEED": "forty"}, clear=True):
            with pytest.raises(ConfigError, match="QEILAB_SEED"):
                RunConfig(Analysis.TESTFN_BUILD)


class TestConfigFactory:
    def test_for_analysis(self):
        config = ConfigFactory.for_analysis("distal-demo")
        assert config.analysis is Analysis.DISTAL_DEMO

    def test_for_analysis_with_sections(self):
        config = ConfigFactory.for_analysis(Analysis.NEGSTATE_VERIFY, grids=GridConfig(m=[1.0, 2.0]))
        assert config.grids.m == [1.0, 2.0]

    def test_unsupported_analysis(self):
        with pytest.raises(ConfigError, match="Unsupported analysis"):
            ConfigFactory.for_analysis("spectral-flow")

    def test_invalid_sections_rejected(self):
        with pytest.raises(ConfigError) as exc:
            ConfigFactory.for_analysis("tower-report", tower=TowerConfig(type="finite", masses=[]))
        assert isinstance(exc.value, ValidationError)
        assert exc.value.errors[0].startswith("tower:")

    def test_from_file(self, write_config):
        config = ConfigFactory.from_file(write_config({"analysis": "negstate-verify", "seed": 7}))
        assert config.seed == 7
        assert config.to_dict()['analysis'] == "negstate-verify"
