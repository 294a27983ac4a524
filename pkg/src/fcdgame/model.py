"""Domain types, scenario configuration, and message classification.

Messages carry an impact per bit, a size, and a dissemination radius; a table
of impact levels buckets them by radius and impact interval. A scenario ties
the level table to a per-slot bandwidth budget, the privacy population, and
the simulation geometry.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, fields, replace

FEASIBILITY_TOL = 1e-9
RADIUS_MATCH_RTOL = 1e-6


class ConfigError(ValueError):
    """Invalid configuration or domain-type construction."""


class GuardError(RuntimeError):
    """A complexity guard (support enumeration or oracle grid size) was exceeded."""


@dataclass(frozen=True)
class Message:
    """One floating-car-data unit."""

    id: int
    origin: tuple[float, float]
    impact: float
    size: float
    radius_km: float
    created_at: int

    def __post_init__(self):
        if self.impact <= 0:
            raise ConfigError(f"message impact must be positive, got {self.impact}")
        if self.size <= 0:
            raise ConfigError(f"message size must be positive, got {self.size}")
        if self.radius_km <= 0:
            raise ConfigError(f"message radius must be positive, got {self.radius_km}")


@dataclass(frozen=True)
class ImpactLevel:
    """A message class: one dissemination radius plus one impact-per-bit interval.

    ``load`` is the traffic expected per slot, in bits, for a vehicle that
    reports its location accurately. The top level of a table has an
    unbounded upper impact bound (math.inf).
    """

    index: int
    radius_km: float
    impact_lower: float
    impact_upper: float
    expected_impact: float
    load: float

    def __post_init__(self):
        if self.radius_km <= 0:
            raise ConfigError("impact level radius must be positive")
        if not self.impact_lower < self.impact_upper:
            raise ConfigError("impact interval must be non-empty")
        if not (self.impact_lower <= self.expected_impact < self.impact_upper):
            raise ConfigError("expected impact must lie inside the impact interval")
        if self.expected_impact <= 0:
            raise ConfigError("expected impact must be positive")
        if self.load < 0:
            raise ConfigError("impact level load must be non-negative")

    def contains_impact(self, impact: float) -> bool:
        # Lower bound inclusive, upper exclusive.
        return self.impact_lower <= impact < self.impact_upper


def _same_radius(r_a: float, r_b: float) -> bool:
    return math.isclose(r_a, r_b, rel_tol=RADIUS_MATCH_RTOL, abs_tol=0.0)


@dataclass(frozen=True)
class ImpactLevelTable:
    """Ordered impact levels; order is ascending (expected_impact, radius_km)."""

    levels: tuple[ImpactLevel, ...]

    def __post_init__(self):
        if not self.levels:
            raise ConfigError("impact level table must not be empty")
        object.__setattr__(self, "levels", tuple(self.levels))
        for pos, level in enumerate(self.levels):
            if level.index != pos + 1:
                raise ConfigError("impact level indices must be contiguous from 1")
        if not math.isinf(self.levels[-1].impact_upper):
            raise ConfigError("the top impact level must have an unbounded upper bound")
        keys = [(lv.expected_impact, lv.radius_km) for lv in self.levels]
        for prev, cur in zip(keys, keys[1:]):
            if cur <= prev:
                raise ConfigError(
                    "impact levels must be ordered by strictly increasing "
                    "(expected_impact, radius_km)"
                )
        # Classification must be unambiguous: levels sharing a radius need
        # disjoint impact intervals.
        for i, a in enumerate(self.levels):
            for b in self.levels[i + 1 :]:
                if _same_radius(a.radius_km, b.radius_km):
                    if a.impact_lower < b.impact_upper and b.impact_lower < a.impact_upper:
                        raise ConfigError(
                            f"levels {a.index} and {b.index} share radius "
                            f"{a.radius_km} km with overlapping impact intervals"
                        )

    @property
    def n_levels(self) -> int:
        return len(self.levels)

    def level(self, index: int) -> ImpactLevel:
        """Fetch by 1-based level index."""
        return self.levels[index - 1]

    def loads(self) -> tuple[float, ...]:
        return tuple(lv.load for lv in self.levels)

    def radii(self) -> tuple[float, ...]:
        return tuple(lv.radius_km for lv in self.levels)

    def expected_impacts(self) -> tuple[float, ...]:
        return tuple(lv.expected_impact for lv in self.levels)

    def weights(self) -> tuple[float, ...]:
        """Per-level expected impact mass (impact per bit times load)."""
        return tuple(lv.expected_impact * lv.load for lv in self.levels)


def classify_message(message: Message, table: ImpactLevelTable) -> int | None:
    """Return the 1-based index of the level containing the message, or None.

    A level matches when its radius equals the message radius (relative
    tolerance 1e-6) and its impact interval contains the message impact.
    """
    for level in table.levels:
        if _same_radius(message.radius_km, level.radius_km) and level.contains_impact(
            message.impact
        ):
            return level.index
    return None


@dataclass(frozen=True)
class PrivacyProfile:
    """A class of vehicles sharing one location-imprecision radius.

    ``count`` is the number of such vehicles in the tagged vehicle's
    neighborhood, including the tagged vehicle itself.
    """

    phi: int
    imprecision_radius_km: float
    count: int

    def __post_init__(self):
        if self.imprecision_radius_km < 0:
            raise ConfigError("imprecision radius must be non-negative")
        if self.phi == 1 and self.imprecision_radius_km != 0:
            raise ConfigError("privacy level 1 means an accurate location (radius 0)")
        if self.count < 0:
            raise ConfigError("privacy profile count must be non-negative")


@dataclass(frozen=True)
class Strategy:
    """Per-impact-level subscription probabilities announced to the server."""

    probabilities: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "probabilities", tuple(float(p) for p in self.probabilities))
        for p in self.probabilities:
            if not 0.0 <= p <= 1.0:
                raise ConfigError(f"subscription probability {p} outside [0, 1]")

    def __len__(self) -> int:
        return len(self.probabilities)


def strategy_spend(strategy: Strategy, adapted_loads: tuple[float, ...]) -> float:
    """Expected bits per slot a strategy requests given per-level adapted loads."""
    if len(strategy) != len(adapted_loads):
        raise ConfigError(
            f"strategy length {len(strategy)} does not match level count {len(adapted_loads)}"
        )
    return sum(a * p for a, p in zip(adapted_loads, strategy.probabilities))


def strategy_feasible(
    strategy: Strategy,
    adapted_loads: tuple[float, ...],
    bandwidth_per_slot: float,
    tol: float = FEASIBILITY_TOL,
) -> bool:
    """True when the expected spend stays within the bandwidth budget."""
    return strategy_spend(strategy, adapted_loads) <= bandwidth_per_slot + tol


@dataclass(frozen=True)
class ScenarioConfig:
    """Everything a run needs: level table, budget, population, geometry, knobs."""

    bandwidth_per_slot: float
    impact_levels: ImpactLevelTable
    privacy_profiles: tuple[PrivacyProfile, ...]
    trust_weight: float = 1.0
    convergence_epsilon: float = 1e-9
    generation_region_km: float = 220.0
    sim_region_km: float = 2.0
    v2v_range_km: float = 0.3
    slot_seconds: float = 1.0
    seed: int = 42
    num_vehicles: int = 40
    speed_min_mps: float = 5.0
    speed_max_mps: float = 15.0
    cluster_timeout_slots: int = 5
    metric_window_slots: int = 60
    nc_receives_shares: bool = False
    resample_region_on_exit: bool = True
    neighbor_count_bias: int = 0
    enumeration_guard_bits: int = 20

    def __post_init__(self):
        object.__setattr__(self, "privacy_profiles", tuple(self.privacy_profiles))
        if self.bandwidth_per_slot <= 0:
            raise ConfigError("bandwidth must be positive")
        if self.convergence_epsilon <= 0:
            raise ConfigError("convergence epsilon must be positive")
        if not 0.0 <= self.trust_weight <= 1.0:
            raise ConfigError("trust weight must lie in [0, 1]")
        if self.generation_region_km <= 0 or self.sim_region_km <= 0:
            raise ConfigError("region sizes must be positive")
        if self.sim_region_km > self.generation_region_km:
            raise ConfigError("simulation region cannot exceed the generation region")
        if self.v2v_range_km < 0:
            raise ConfigError("V2V range must be non-negative")
        if self.slot_seconds <= 0:
            raise ConfigError("slot length must be positive")
        if self.num_vehicles < 1:
            raise ConfigError("at least one vehicle is required")
        if not 0 <= self.speed_min_mps <= self.speed_max_mps:
            raise ConfigError("speed range must satisfy 0 <= min <= max")
        if self.cluster_timeout_slots < 1:
            raise ConfigError("cluster timeout must be at least one slot")
        if self.metric_window_slots < 1:
            raise ConfigError("metric window must be at least one slot")
        if self.enumeration_guard_bits < 1:
            raise ConfigError("enumeration guard must be at least 1 bit")
        if not self.privacy_profiles:
            raise ConfigError("at least one privacy profile is required")
        phis = [p.phi for p in self.privacy_profiles]
        if len(set(phis)) != len(phis):
            raise ConfigError("privacy profile identifiers must be unique")

    @property
    def n_levels(self) -> int:
        return self.impact_levels.n_levels

    def counts(self) -> tuple[int, ...]:
        return tuple(p.count for p in self.privacy_profiles)

    def validate_strategy(self, strategy: Strategy, adapted_loads: tuple[float, ...]) -> None:
        """Reject a strategy whose length or spend does not fit this scenario."""
        if len(strategy) != self.n_levels:
            raise ConfigError(
                f"strategy length {len(strategy)} does not match the "
                f"{self.n_levels}-level table"
            )
        if not strategy_feasible(strategy, adapted_loads, self.bandwidth_per_slot):
            raise ConfigError("strategy exceeds the bandwidth budget")


def default_scenario() -> ScenarioConfig:
    """The stock four-level scenario.

    Expected impacts (1, 10, 100, 1000), level shares (90%, 9%, 0.9%, 0.1%)
    of a 100 message-per-slot generation rate (unit message size, so loads
    count messages), dissemination radii (10, 1, 100, 100) km, and a budget
    of 10% of the total accurate-location load.
    """
    rate = 100.0
    shares = (0.90, 0.09, 0.009, 0.001)
    impacts = (1.0, 10.0, 100.0, 1000.0)
    radii = (10.0, 1.0, 100.0, 100.0)
    bounds = impacts + (math.inf,)
    levels = tuple(
        ImpactLevel(
            index=i + 1,
            radius_km=radii[i],
            impact_lower=impacts[i],
            impact_upper=bounds[i + 1],
            expected_impact=impacts[i],
            load=rate * shares[i],
        )
        for i in range(4)
    )
    table = ImpactLevelTable(levels)
    total_load = sum(table.loads())
    return ScenarioConfig(
        bandwidth_per_slot=0.10 * total_load,
        impact_levels=table,
        privacy_profiles=(
            PrivacyProfile(phi=1, imprecision_radius_km=0.0, count=1),
            PrivacyProfile(phi=2, imprecision_radius_km=10.0, count=1),
        ),
    )


# --- scenario files -------------------------------------------------------
#
# JSON, one key per ScenarioConfig field, units spelled out in key names.

_SCALAR_KEYS = {
    "bandwidth_bits_per_slot": "bandwidth_per_slot",
    "trust_weight": "trust_weight",
    "convergence_epsilon": "convergence_epsilon",
    "generation_region_km": "generation_region_km",
    "sim_region_km": "sim_region_km",
    "v2v_range_km": "v2v_range_km",
    "slot_seconds": "slot_seconds",
    "seed": "seed",
    "num_vehicles": "num_vehicles",
    "speed_min_mps": "speed_min_mps",
    "speed_max_mps": "speed_max_mps",
    "cluster_timeout_slots": "cluster_timeout_slots",
    "metric_window_slots": "metric_window_slots",
    "nc_receives_shares": "nc_receives_shares",
    "resample_region_on_exit": "resample_region_on_exit",
    "neighbor_count_bias": "neighbor_count_bias",
    "enumeration_guard_bits": "enumeration_guard_bits",
}


def scenario_to_dict(config: ScenarioConfig) -> dict:
    data = {json_key: getattr(config, attr) for json_key, attr in _SCALAR_KEYS.items()}
    data["impact_levels"] = [
        {
            "index": lv.index,
            "radius_km": lv.radius_km,
            "impact_lower_per_bit": lv.impact_lower,
            "impact_upper_per_bit": None if math.isinf(lv.impact_upper) else lv.impact_upper,
            "expected_impact_per_bit": lv.expected_impact,
            "load_bits_per_slot": lv.load,
        }
        for lv in config.impact_levels.levels
    ]
    data["privacy_profiles"] = [
        {"phi": p.phi, "imprecision_radius_km": p.imprecision_radius_km, "count": p.count}
        for p in config.privacy_profiles
    ]
    return data


def scenario_from_dict(data: dict) -> ScenarioConfig:
    try:
        levels = tuple(
            ImpactLevel(
                index=entry["index"],
                radius_km=entry["radius_km"],
                impact_lower=entry["impact_lower_per_bit"],
                impact_upper=(
                    math.inf
                    if entry.get("impact_upper_per_bit") is None
                    else entry["impact_upper_per_bit"]
                ),
                expected_impact=entry["expected_impact_per_bit"],
                load=entry["load_bits_per_slot"],
            )
            for entry in data["impact_levels"]
        )
        profiles = tuple(
            PrivacyProfile(
                phi=entry["phi"],
                imprecision_radius_km=entry["imprecision_radius_km"],
                count=entry["count"],
            )
            for entry in data["privacy_profiles"]
        )
        kwargs = {}
        for json_key, attr in _SCALAR_KEYS.items():
            if json_key in data:
                kwargs[attr] = data[json_key]
        return ScenarioConfig(
            impact_levels=ImpactLevelTable(levels), privacy_profiles=profiles, **kwargs
        )
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"malformed scenario file: {exc}") from exc


def save_scenario(config: ScenarioConfig, path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(scenario_to_dict(config), handle, indent=2, sort_keys=True)
        handle.write("\n")


def load_scenario(path) -> ScenarioConfig:
    try:
        with open(path, "r", encoding="utf-8") as handle:
            data = json.load(handle)
    except OSError as exc:
        raise ConfigError(f"cannot read scenario file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"scenario file {path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"scenario file {path} must contain a JSON object")
    return scenario_from_dict(data)
