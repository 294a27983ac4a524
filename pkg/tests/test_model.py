import json
import math

import numpy as np
import pytest

from fcdgame.model import (
    ConfigError,
    ImpactLevel,
    ImpactLevelTable,
    Message,
    PrivacyProfile,
    ScenarioConfig,
    Strategy,
    classify_message,
    default_scenario,
    load_scenario,
    save_scenario,
    scenario_from_dict,
    scenario_to_dict,
    strategy_feasible,
)

from conftest import make_table


def msg(impact, radius, ident=0):
    return Message(
        id=ident, origin=(0.0, 0.0), impact=impact, size=1.0, radius_km=radius, created_at=0
    )


class TestClassification:
    def test_table_one_level_one(self):
        table = default_scenario().impact_levels
        assert classify_message(msg(1.0, 10.0), table) == 1

    def test_lower_bound_inclusive(self):
        table = default_scenario().impact_levels
        assert classify_message(msg(10.0, 1.0), table) == 2

    def test_top_level_unbounded(self):
        table = default_scenario().impact_levels
        assert classify_message(msg(5000.0, 100.0), table) == 4

    def test_radius_mismatch_gives_none(self):
        table = default_scenario().impact_levels
        assert classify_message(msg(1.0, 3.0), table) is None

    def test_impact_below_every_interval_gives_none(self):
        table = default_scenario().impact_levels
        assert classify_message(msg(0.5, 10.0), table) is None

    def test_radius_matched_within_relative_tolerance(self):
        table = default_scenario().impact_levels
        assert classify_message(msg(1.0, 10.0 * (1 + 1e-8)), table) == 1
        assert classify_message(msg(1.0, 10.0 * (1 + 1e-4)), table) is None

    def test_at_most_one_level_matches(self, rng):
        table = default_scenario().impact_levels
        radii = table.radii()
        for _ in range(500):
            radius = radii[int(rng.integers(0, len(radii)))]
            impact = float(rng.uniform(0.5, 5000.0))
            matches = [
                lv.index
                for lv in table.levels
                if math.isclose(radius, lv.radius_km, rel_tol=1e-6)
                and lv.contains_impact(impact)
            ]
            assert len(matches) <= 1
            result = classify_message(msg(impact, radius), table)
            assert result == (matches[0] if matches else None)


class TestDefaultScenario:
    def test_four_levels_with_table_impacts(self):
        config = default_scenario()
        assert config.impact_levels.n_levels == 4
        assert config.impact_levels.expected_impacts() == (1.0, 10.0, 100.0, 1000.0)

    def test_bandwidth_is_ten_percent_of_total_load(self):
        config = default_scenario()
        total = sum(config.impact_levels.loads())
        assert config.bandwidth_per_slot / total == pytest.approx(0.10, rel=1e-12)

    def test_level_radii(self):
        config = default_scenario()
        assert config.impact_levels.radii() == (10.0, 1.0, 100.0, 100.0)

    def test_level_shares_match_frequencies(self):
        config = default_scenario()
        loads = config.impact_levels.loads()
        total = sum(loads)
        shares = tuple(a / total for a in loads)
        assert shares == pytest.approx((0.90, 0.09, 0.009, 0.001), rel=1e-12)


class TestValidation:
    def test_message_requires_positive_fields(self):
        with pytest.raises(ConfigError):
            msg(-1.0, 10.0)
        with pytest.raises(ConfigError):
            Message(id=0, origin=(0, 0), impact=1.0, size=0.0, radius_km=1.0, created_at=0)

    def test_levels_must_be_contiguous_from_one(self):
        level = ImpactLevel(2, 1.0, 1.0, math.inf, 1.0, 1.0)
        with pytest.raises(ConfigError):
            ImpactLevelTable((level,))

    def test_top_level_must_be_unbounded(self):
        level = ImpactLevel(1, 1.0, 1.0, 10.0, 1.0, 1.0)
        with pytest.raises(ConfigError):
            ImpactLevelTable((level,))

    def test_same_radius_levels_need_disjoint_intervals(self):
        a = ImpactLevel(1, 5.0, 1.0, 20.0, 1.0, 1.0)
        b = ImpactLevel(2, 5.0, 10.0, math.inf, 15.0, 1.0)
        with pytest.raises(ConfigError):
            ImpactLevelTable((a, b))

    def test_levels_ordered_by_impact_then_radius(self):
        a = ImpactLevel(1, 5.0, 10.0, math.inf, 10.0, 1.0)
        b = ImpactLevel(2, 5.0, 1.0, 10.0, 1.0, 1.0)
        with pytest.raises(ConfigError):
            ImpactLevelTable((a, b))

    def test_privacy_level_one_means_accurate(self):
        with pytest.raises(ConfigError):
            PrivacyProfile(phi=1, imprecision_radius_km=2.0, count=1)

    def test_strategy_probabilities_in_unit_interval(self):
        with pytest.raises(ConfigError):
            Strategy((0.5, 1.2))
        with pytest.raises(ConfigError):
            Strategy((-0.1,))

    def test_strategy_length_mismatch_rejected(self):
        config = default_scenario()
        with pytest.raises(ConfigError):
            config.validate_strategy(Strategy((1.0, 0.0)), (1.0, 1.0))

    def test_infeasible_strategy_rejected(self):
        config = default_scenario()
        loads = config.impact_levels.loads()
        with pytest.raises(ConfigError):
            config.validate_strategy(Strategy((1.0, 1.0, 1.0, 1.0)), loads)
        ok = Strategy((0.0, 1.0, 1.0, 1.0))
        config.validate_strategy(ok, loads)

    def test_feasibility_tolerance(self):
        assert strategy_feasible(Strategy((1.0,)), (10.0,), 10.0)
        assert not strategy_feasible(Strategy((1.0,)), (10.0,), 9.99)


class TestScenarioFiles:
    def test_dict_roundtrip(self):
        config = default_scenario()
        assert scenario_from_dict(scenario_to_dict(config)) == config

    def test_file_roundtrip(self, tmp_path):
        config = default_scenario()
        path = tmp_path / "scenario.json"
        save_scenario(config, path)
        assert load_scenario(path) == config

    def test_unbounded_top_level_serializes_as_null(self, tmp_path):
        path = tmp_path / "scenario.json"
        save_scenario(default_scenario(), path)
        data = json.loads(path.read_text())
        assert data["impact_levels"][-1]["impact_upper_per_bit"] is None

    def test_malformed_file_raises_config_error(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{not json")
        with pytest.raises(ConfigError):
            load_scenario(path)
        path.write_text(json.dumps({"impact_levels": "nope"}))
        with pytest.raises(ConfigError):
            load_scenario(path)

    def test_missing_file_raises_config_error(self, tmp_path):
        with pytest.raises(ConfigError):
            load_scenario(tmp_path / "absent.json")
