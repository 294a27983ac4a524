"""Brute-force references used to validate the game solver and the geometry.

Nothing here shares logic with the analytic solver: utilities are recomputed
inline, optima come from exhaustive grids or a greedy fill, and the
adaptation factor is re-estimated by area sampling. Desk scale only.
"""

from __future__ import annotations

import math

import numpy as np

from .model import ConfigError, GuardError, ImpactLevelTable, Strategy
from .solver import StrategyProfile

GRID_GUARD = 1e8


def single_vehicle_greedy(
    table: ImpactLevelTable, rho_row: tuple[float, ...], bandwidth: float
) -> Strategy:
    """Optimal strategy for a lone vehicle: a fractional-knapsack fill.

    With one vehicle the expected utility is linear in the probabilities, so
    levels are filled by descending adapted impact per bit (ties keep table
    order) until the budget runs out.
    """
    n_levels = table.n_levels
    loads = [lv.load * rho_row[l] for l, lv in enumerate(table.levels)]
    density = [lv.expected_impact / rho_row[l] for l, lv in enumerate(table.levels)]
    row = [0.0] * n_levels
    for l in range(n_levels):
        if loads[l] <= 0.0:
            row[l] = 1.0
    remaining = bandwidth
    for l in sorted(range(n_levels), key=lambda l: (-density[l], l)):
        if loads[l] <= 0.0:
            continue
        if remaining <= 0.0:
            break
        row[l] = min(1.0, remaining / loads[l])
        remaining -= row[l] * loads[l]
    return Strategy(tuple(row))


def _profile_utility(probs, counts, weights) -> float:
    total = 0.0
    for l, w in enumerate(weights):
        miss = 1.0
        for j, n in enumerate(counts):
            if n > 0:
                miss *= (1.0 - probs[j][l]) ** n
        total += w * (1.0 - miss)
    return total


def grid_search(
    counts: tuple[int, ...],
    table: ImpactLevelTable,
    rho_table: tuple[tuple[float, ...], ...],
    bandwidth: float,
    step: float,
    guard: float = GRID_GUARD,
    chunk: int = 1 << 18,
) -> tuple[StrategyProfile, float]:
    """Exhaustive symmetric-strategy search on a probability grid.

    Levels beyond the first take values {0, step, 2 step, ...} up to their
    individual budget cap; candidates over budget are scaled back onto it,
    and the first level always absorbs the remaining budget (utility is
    non-decreasing in every probability, so that is optimal for it). Returns
    the utility-maximal profile and its utility.
    """
    if not 0.0 < step <= 0.5:
        raise ConfigError(f"grid step must lie in (0, 0.5], got {step}")
    n_phi = len(counts)
    n_levels = table.n_levels
    active = [j for j in range(n_phi) if counts[j] > 0]
    weights = np.asarray(table.weights())
    loads = {
        j: [table.levels[l].load * rho_table[j][l] for l in range(n_levels)] for j in active
    }

    axes: list[tuple[int, int, int]] = []  # (phi, level, grid points)
    for j in active:
        for l in range(1, n_levels):
            a = loads[j][l]
            pmax = 1.0 if a <= 0.0 else min(1.0, bandwidth / a)
            axes.append((j, l, int(math.floor(pmax / step + 1e-9)) + 1))
    total = 1
    for _, _, k in axes:
        total *= k
    if total > guard:
        raise GuardError(
            f"grid search would evaluate {total} candidates (guard {guard:g}); "
            "increase the step or shrink the instance"
        )
    strides = [1] * len(axes)
    for i in range(len(axes) - 2, -1, -1):
        strides[i] = strides[i + 1] * axes[i + 1][2]

    def candidate_rows(values, m):
        """Per-privacy-level probability matrices (levels x m) after projection."""
        rows = {}
        for j in active:
            pj = np.zeros((n_levels, m))
            spent = np.zeros(m)
            for i, (jj, l, _) in enumerate(axes):
                if jj != j:
                    continue
                pj[l] = values[i]
                spent += loads[j][l] * values[i]
            over = spent > bandwidth
            if over.any():
                scale = np.ones(m)
                scale[over] = bandwidth / spent[over]
                pj[1:] *= scale
                spent[over] = bandwidth
            a0 = loads[j][0]
            if a0 > 0.0:
                pj[0] = np.clip((bandwidth - spent) / a0, 0.0, 1.0)
            else:
                pj[0] = 1.0
            rows[j] = pj
        return rows

    best_utility = -math.inf
    best_index = 0
    for start in range(0, total, chunk):
        idx = np.arange(start, min(start + chunk, total), dtype=np.int64)
        values = [((idx // strides[i]) % axes[i][2]) * step for i in range(len(axes))]
        rows = candidate_rows(values, idx.size)
        miss = np.ones((n_levels, idx.size))
        for j in active:
            miss *= (1.0 - rows[j]) ** counts[j]
        utility = weights @ (1.0 - miss)
        pos = int(np.argmax(utility))
        if utility[pos] > best_utility:
            best_utility = float(utility[pos])
            best_index = start + pos

    values = [
        np.asarray([((best_index // strides[i]) % axes[i][2]) * step])
        for i in range(len(axes))
    ]
    rows = candidate_rows(values, 1)
    probs = []
    for j in range(n_phi):
        if j in rows:
            probs.append(tuple(float(rows[j][l, 0]) for l in range(n_levels)))
        else:
            probs.append(tuple([0.0] * n_levels))
    profile = StrategyProfile(tuple(Strategy(p) for p in probs), tuple(counts))
    utility = _profile_utility(probs, counts, table.weights())
    return profile, utility


def monte_carlo_rho(
    imprecision_radius_km: float,
    level_radius_km: float,
    samples: int,
    rng: np.random.Generator,
) -> float:
    """Estimate the load inflation factor by sampling uniform message origins.

    Origins fall in a padded square around a vehicle; the estimate is the
    count the server must push for the reported disk over the count actually
    relevant at the true position.
    """
    if samples < 100_000:
        raise ConfigError("at least 1e5 samples are required for a stable estimate")
    if level_radius_km <= 0:
        raise ConfigError("dissemination radius must be positive")
    if imprecision_radius_km < 0:
        raise ConfigError("imprecision radius must be non-negative")
    served_radius = imprecision_radius_km + level_radius_km
    half = 1.1 * served_radius
    points = rng.uniform(-half, half, size=(int(samples), 2))
    dist_sq = points[:, 0] ** 2 + points[:, 1] ** 2
    served = int(np.count_nonzero(dist_sq <= served_radius**2))
    wanted = int(np.count_nonzero(dist_sq <= level_radius_km**2))
    if wanted == 0:
        raise ConfigError("no relevant samples; increase the sample count")
    return served / wanted
