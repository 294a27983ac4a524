"""Location imprecision and geocast relevance under obfuscated positions.

A privacy-sensitive vehicle reports a disk that certainly contains it instead
of a point. A server that must not drop anything relevant then has to serve
the grown disk, which inflates the expected load per level and dilutes the
expected impact per bit by the same factor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import ConfigError, ImpactLevelTable, Message, PrivacyProfile


@dataclass(frozen=True)
class ReportedRegion:
    """The disk a vehicle reports instead of its exact position."""

    center: tuple[float, float]
    radius_km: float

    def __post_init__(self):
        if self.radius_km < 0:
            raise ConfigError("reported region radius must be non-negative")

    def contains(self, point: tuple[float, float]) -> bool:
        return distance(self.center, point) <= self.radius_km


def distance(a: tuple[float, float], b: tuple[float, float]) -> float:
    return math.hypot(a[0] - b[0], a[1] - b[1])


def adaptation_factor(imprecision_radius_km: float, level_radius_km: float) -> float:
    """Load multiplier caused by reporting a disk of radius r instead of a point.

    Serving every message within ``level_radius`` of any point of the reported
    disk means serving the disk of radius ``imprecision_radius + level_radius``
    around its center. Under uniform message origins the expected load grows by
    the area ratio ((r / r_level) + 1)^2, which is also the factor by which the
    expected impact per received bit shrinks.
    """
    if level_radius_km <= 0:
        raise ConfigError(f"dissemination radius must be positive, got {level_radius_km}")
    if imprecision_radius_km < 0:
        raise ConfigError("imprecision radius must be non-negative")
    return (imprecision_radius_km / level_radius_km + 1.0) ** 2


def obfuscated_load(load: float, factor: float) -> float:
    """Expected per-level load after inflation by the adaptation factor."""
    if load < 0:
        raise ConfigError("load must be non-negative")
    if factor < 1.0:
        raise ConfigError("adaptation factor must be at least 1")
    return load * factor


def obfuscated_impact(expected_impact: float, factor: float) -> float:
    """Expected impact per bit after dilution by the adaptation factor.

    The product (impact per bit) x (load) is invariant: the extra traffic is
    exactly the irrelevant share.
    """
    if factor < 1.0:
        raise ConfigError("adaptation factor must be at least 1")
    return expected_impact / factor


def build_adaptation_table(
    profiles: tuple[PrivacyProfile, ...], table: ImpactLevelTable
) -> tuple[tuple[float, ...], ...]:
    """Adaptation factors per (privacy profile, impact level)."""
    return tuple(
        tuple(adaptation_factor(p.imprecision_radius_km, lv.radius_km) for lv in table.levels)
        for p in profiles
    )


def _uniform_disk(rng: np.random.Generator, radius: float) -> tuple[float, float]:
    r = radius * math.sqrt(rng.random())
    theta = 2.0 * math.pi * rng.random()
    return (r * math.cos(theta), r * math.sin(theta))


def sample_reported_region(
    true_pos: tuple[float, float], imprecision_radius_km: float, rng: np.random.Generator
) -> ReportedRegion:
    """Draw a region whose center hides the true position uniformly in the disk."""
    if imprecision_radius_km < 0:
        raise ConfigError("imprecision radius must be non-negative")
    dx, dy = _uniform_disk(rng, imprecision_radius_km)
    center = (true_pos[0] + dx, true_pos[1] + dy)
    return ReportedRegion(center=center, radius_km=imprecision_radius_km)


def server_relevant(message: Message, region: ReportedRegion, level_radius_km: float) -> bool:
    """Server-side filter: could the message matter to a vehicle inside the region?

    Closed-disk decision, so any message relevant to any position inside the
    region passes the filter.
    """
    return distance(message.origin, region.center) <= region.radius_km + level_radius_km


def vehicle_relevant(
    message: Message, true_pos: tuple[float, float], level_radius_km: float
) -> bool:
    """Ground truth: the vehicle sits inside the message's dissemination disk."""
    return distance(message.origin, true_pos) <= level_radius_km
