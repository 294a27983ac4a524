import math

import numpy as np
import pytest

from fcdgame.model import (
    ImpactLevel,
    ImpactLevelTable,
    PrivacyProfile,
    ScenarioConfig,
)
from fcdgame.obfuscation import build_adaptation_table


def make_table(expected_impacts, loads, radii) -> ImpactLevelTable:
    """Build a table with intervals [impact_i, impact_{i+1}) and unbounded top."""
    bounds = list(expected_impacts) + [math.inf]
    levels = tuple(
        ImpactLevel(
            index=i + 1,
            radius_km=float(radii[i]),
            impact_lower=float(expected_impacts[i]),
            impact_upper=float(bounds[i + 1]),
            expected_impact=float(expected_impacts[i]),
            load=float(loads[i]),
        )
        for i in range(len(expected_impacts))
    )
    return ImpactLevelTable(levels)


def make_profiles(privacy_radii, counts) -> tuple[PrivacyProfile, ...]:
    profiles = []
    for i, (radius, count) in enumerate(zip(privacy_radii, counts)):
        phi = i + 1 if privacy_radii[0] == 0 else i + 2
        profiles.append(
            PrivacyProfile(phi=phi, imprecision_radius_km=float(radius), count=int(count))
        )
    return tuple(profiles)


def make_config(table, privacy_radii, counts, bandwidth, beta=1.0, **kwargs) -> ScenarioConfig:
    return ScenarioConfig(
        bandwidth_per_slot=float(bandwidth),
        impact_levels=table,
        privacy_profiles=make_profiles(privacy_radii, counts),
        trust_weight=beta,
        **kwargs,
    )


def random_instance(rng, max_phi=2, max_levels=3, max_total=4):
    """Random small game instance: (counts, table, rho_table, bandwidth, radii)."""
    n_levels = int(rng.integers(1, max_levels + 1))
    impacts = []
    value = float(rng.uniform(0.5, 2.0))
    for _ in range(n_levels):
        impacts.append(value)
        value *= float(rng.uniform(1.6, 8.0))
    loads = rng.uniform(0.2, 10.0, size=n_levels)
    radii = rng.uniform(0.5, 50.0, size=n_levels)
    table = make_table(impacts, loads, radii)

    n_phi = int(rng.integers(1, max_phi + 1))
    privacy_radii = [0.0] + [float(rng.uniform(0.1, 20.0)) for _ in range(n_phi - 1)]
    total = int(rng.integers(1, max_total + 1))
    counts = [0] * n_phi
    for _ in range(total):
        counts[int(rng.integers(0, n_phi))] += 1
    profiles = make_profiles(privacy_radii, counts)
    rho_table = build_adaptation_table(profiles, table)
    bandwidth = float(rng.uniform(0.05, 0.9)) * float(np.sum(loads))
    return tuple(counts), table, rho_table, bandwidth, tuple(privacy_radii)


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)
