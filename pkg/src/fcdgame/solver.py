"""Mixed-strategy solution of the bandwidth-constrained subscription game.

Every vehicle announces, per impact level, the probability of subscribing to
that level's messages. Vehicles of the same privacy level play identical
strategies, so a solution is one strategy per privacy level. The solver
walks every split of privacy levels into supporters / non-supporters per
impact level, solves the stationarity conditions on each split with a
round-robin fixed-point iteration, and keeps the feasible solution with the
best (optionally worst-case-weighted) score.

How one recalculation works, for a privacy level with population n >= 2:
level 1 acts as the balance level, absorbing whatever budget the higher
levels leave. Stationarity ties every supported level l to the balance level
through a complement ratio C_l, with (1 - p_l) = (1 - p_1) * C_l. Together
with budget equality this pins the whole row:

    x = (sum of supported adapted loads - bandwidth) / sum(load_l * C_l)
    p_l = 1 - x * C_l

Negative or oversized values are clamped to [0, 1] and the row is
re-projected onto the budget (trim cheapest-impact levels first, spend any
residual on the most valuable ones). A privacy level with population 1 has a
linear utility in its own probabilities, so its exact best response is a
greedy fill by marginal value instead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import (
    FEASIBILITY_TOL,
    ConfigError,
    GuardError,
    ImpactLevelTable,
    ScenarioConfig,
    Strategy,
    strategy_spend,
)

BALANCE_LEVEL = 0  # 0-based position of the level that absorbs budget remainders


class DegenerateSupportError(ValueError):
    """A supported impact level has no second vehicle to balance against."""


@dataclass(frozen=True)
class SupportPartition:
    """Per (privacy level, impact level) flag: does this privacy level subscribe?"""

    included: tuple[tuple[bool, ...], ...]

    def __post_init__(self):
        object.__setattr__(self, "included", tuple(tuple(row) for row in self.included))
        widths = {len(row) for row in self.included}
        if len(widths) > 1:
            raise ConfigError("partition rows must all cover the same impact levels")

    @classmethod
    def from_mask(cls, mask: int, active: list[int], n_phi: int, n_levels: int) -> "SupportPartition":
        """Decode an enumeration bitmask; inactive privacy levels support nothing."""
        rows = [[False] * n_levels for _ in range(n_phi)]
        bit = 0
        for j in active:
            for l in range(n_levels):
                rows[j][l] = bool((mask >> bit) & 1)
                bit += 1
        return cls(tuple(tuple(row) for row in rows))

    @classmethod
    def full(cls, n_phi: int, n_levels: int) -> "SupportPartition":
        return cls(tuple(tuple([True] * n_levels) for _ in range(n_phi)))

    @property
    def n_levels(self) -> int:
        return len(self.included[0]) if self.included else 0

    def supports(self, phi_idx: int, level_idx: int) -> bool:
        return self.included[phi_idx][level_idx]

    def supporters(self, level_idx: int) -> tuple[int, ...]:
        return tuple(j for j, row in enumerate(self.included) if row[level_idx])

    def non_supporters(self, level_idx: int) -> tuple[int, ...]:
        return tuple(j for j, row in enumerate(self.included) if not row[level_idx])

    def supported_levels(self, phi_idx: int) -> tuple[int, ...]:
        return tuple(l for l, flag in enumerate(self.included[phi_idx]) if flag)

    def support_exponent(self, level_idx: int, counts: tuple[int, ...]) -> int:
        """Pooled supporter population minus the tagged vehicle."""
        return sum(counts[j] for j in self.supporters(level_idx)) - 1

    def size(self) -> int:
        return sum(sum(row) for row in self.included)


@dataclass(frozen=True)
class StrategyProfile:
    """One strategy per privacy level plus the neighborhood counts."""

    strategies: tuple[Strategy, ...]
    counts: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "strategies", tuple(self.strategies))
        object.__setattr__(self, "counts", tuple(int(n) for n in self.counts))
        if len(self.strategies) != len(self.counts):
            raise ConfigError("one strategy per privacy level is required")
        widths = {len(s) for s in self.strategies}
        if len(widths) > 1:
            raise ConfigError("strategies must all cover the same impact levels")
        if any(n < 0 for n in self.counts):
            raise ConfigError("counts must be non-negative")

    @property
    def n_phi(self) -> int:
        return len(self.strategies)

    @property
    def n_levels(self) -> int:
        return len(self.strategies[0]) if self.strategies else 0

    def probability(self, phi_idx: int, level_idx: int) -> float:
        return self.strategies[phi_idx].probabilities[level_idx]

    def with_strategy(self, phi_idx: int, strategy: Strategy) -> "StrategyProfile":
        rows = list(self.strategies)
        rows[phi_idx] = strategy
        return StrategyProfile(tuple(rows), self.counts)


@dataclass(frozen=True)
class SolverReport:
    """Outcome of one solve: chosen support, convergence data, and scores."""

    partition: SupportPartition
    converged: bool
    iterations: int
    last_change: float
    utility_by_phi: tuple[float, ...]
    robust_score: float | None = None


def receive_probability(level_idx: int, profile: StrategyProfile) -> float:
    """Chance that at least one neighborhood vehicle receives a level's message."""
    miss = 1.0
    for strategy, n in zip(profile.strategies, profile.counts):
        if n > 0:
            miss *= (1.0 - strategy.probabilities[level_idx]) ** n
    return 1.0 - miss


def expected_utility(
    phi_e: int,
    profile: StrategyProfile,
    table: ImpactLevelTable,
    rho_table: tuple[tuple[float, ...], ...],
) -> float:
    """Expected impact mass reaching a tagged vehicle of privacy level phi_e.

    Per level: (diluted impact per bit) x (inflated load) x (probability that
    anyone nearby receives it). The dilution and inflation cancel, so the
    value does not depend on phi_e for a fixed profile.
    """
    total = 0.0
    for l, level in enumerate(table.levels):
        adapted_impact = level.expected_impact / rho_table[phi_e][l]
        adapted_load = level.load * rho_table[phi_e][l]
        total += adapted_impact * adapted_load * receive_probability(l, profile)
    return total


def _complement_ratio_raw(level_idx, anchor_idx, partition, probs, counts, phi_e, table, rho_table):
    if level_idx == anchor_idx:
        return 1.0
    supporters = partition.supporters(level_idx)
    # Only populations >= 2 are bound by stationarity and pool into the
    # exponent. Singleton supporters sit at knapsack vertices, so their
    # current probabilities enter as constants, like non-supporters' zeros.
    co_movers = {j for j in supporters if counts[j] >= 2 or j == phi_e}
    n_plus = sum(counts[j] for j in co_movers) - 1
    if n_plus <= 0:
        raise DegenerateSupportError(
            f"level {level_idx + 1} is supported by a single vehicle; "
            "the stationarity ratio is undefined"
        )
    anchor_impact = table.levels[anchor_idx].expected_impact / rho_table[phi_e][anchor_idx]
    level_impact = table.levels[level_idx].expected_impact / rho_table[phi_e][level_idx]
    inner = anchor_impact / level_impact
    for j, n_j in enumerate(counts):
        if n_j <= 0 or j in co_movers:
            continue
        level_term = (1.0 - probs[j][level_idx]) ** n_j
        if level_term == 0.0:
            return math.inf  # someone already covers the level for sure
        anchor_term = (1.0 - probs[j][anchor_idx]) ** n_j
        inner *= anchor_term / level_term
    return inner ** (1.0 / n_plus)


def complement_ratio(
    level_idx: int,
    partition: SupportPartition,
    profile: StrategyProfile,
    phi_e: int,
    table: ImpactLevelTable,
    rho_table: tuple[tuple[float, ...], ...],
) -> float:
    """Equilibrium ratio of non-subscription odds between a level and the balance level.

    For a supported level l, stationarity forces (1 - p_l) = (1 - p_balance)
    times this ratio. It bundles the adapted-impact ratio between the two
    levels with the balance-level slack of the privacy levels outside the
    pooled stationarity family, all under the root of the family population
    minus one.
    """
    probs = [s.probabilities for s in profile.strategies]
    return _complement_ratio_raw(
        level_idx, BALANCE_LEVEL, partition, probs, profile.counts, phi_e, table, rho_table
    )


def _adapted_rows(table, rho_table, phi_idx):
    loads = tuple(lv.load * rho_table[phi_idx][l] for l, lv in enumerate(table.levels))
    impacts = tuple(lv.expected_impact / rho_table[phi_idx][l] for l, lv in enumerate(table.levels))
    return loads, impacts


def _others_miss(probs, counts, level_idx, phi_e):
    """Probability that no vehicle outside phi_e receives the level's message."""
    miss = 1.0
    for j, n in enumerate(counts):
        if j != phi_e and n > 0:
            miss *= (1.0 - probs[j][level_idx]) ** n
    return miss


def _project_row(row, supported, loads, impacts, bandwidth):
    """Clamp a strategy row onto the budget, keeping the most valuable levels."""
    spend = sum(loads[l] * row[l] for l in supported)
    if spend > bandwidth + FEASIBILITY_TOL:
        # Shed the cheapest impact first.
        for l in sorted(supported, key=lambda l: (impacts[l], l)):
            if loads[l] <= 0.0 or row[l] <= 0.0:
                continue
            cut = min(row[l], (spend - bandwidth) / loads[l])
            row[l] -= cut
            spend -= cut * loads[l]
            if spend <= bandwidth + FEASIBILITY_TOL:
                break
    elif spend < bandwidth - FEASIBILITY_TOL:
        # Spend the residual on the most valuable supported levels.
        for l in sorted(supported, key=lambda l: (-impacts[l], l)):
            if loads[l] <= 0.0 or row[l] >= 1.0:
                continue
            add = min(1.0 - row[l], (bandwidth - spend) / loads[l])
            row[l] += add
            spend += add * loads[l]
            if spend >= bandwidth - FEASIBILITY_TOL:
                break
    return row


def _greedy_row(phi_e, probs, supported, loads, impacts, counts, bandwidth):
    """Exact best response for a singleton privacy level (linear utility)."""
    row = [0.0] * len(loads)
    remaining = bandwidth
    free = [l for l in supported if loads[l] <= 0.0]
    for l in free:
        row[l] = 1.0
    paid = [l for l in supported if loads[l] > 0.0]
    densities = {l: impacts[l] * _others_miss(probs, counts, l, phi_e) for l in paid}
    for l in sorted(paid, key=lambda l: (-densities[l], l)):
        if remaining <= 0.0:
            break
        row[l] = min(1.0, remaining / loads[l])
        remaining -= row[l] * loads[l]
    return row


def _equilibrium_row(phi_e, probs, partition, counts, table, rho_table, loads, impacts, bandwidth):
    """One stationarity recalculation for a privacy level with population >= 2.

    Anchored at the lowest supported level that still has marginal value; the
    balance level whenever it is supported, which is the canonical case.
    """
    supported = list(partition.supported_levels(phi_e))
    row = [0.0] * len(loads)
    free = [l for l in supported if loads[l] <= 0.0]
    for l in free:
        row[l] = 1.0
    paid = [l for l in supported if loads[l] > 0.0]
    anchor = next(
        (l for l in paid if _others_miss(probs, counts, l, phi_e) > 0.0), None
    )
    if anchor is None:
        return row  # everything is already covered by others; spend nothing
    ratios = {
        l: _complement_ratio_raw(l, anchor, partition, probs, counts, phi_e, table, rho_table)
        for l in paid
    }
    # An infinite ratio marks a level someone else already covers for sure;
    # spending there has zero marginal value.
    paid = [l for l in paid if math.isfinite(ratios[l])]
    denom = sum(loads[l] * ratios[l] for l in paid)
    if denom <= 0.0:
        for l in paid:
            row[l] = 1.0
    else:
        x = (sum(loads[l] for l in paid) - bandwidth) / denom
        for l in paid:
            row[l] = min(1.0, max(0.0, 1.0 - x * ratios[l]))
        rest = sum(loads[l] * row[l] for l in paid if l != anchor)
        row[anchor] = min(1.0, max(0.0, (bandwidth - rest) / loads[anchor]))
    return _project_row(row, supported, loads, impacts, bandwidth)


def solve_fixed_support(
    partition: SupportPartition,
    counts: tuple[int, ...],
    table: ImpactLevelTable,
    rho_table: tuple[tuple[float, ...], ...],
    bandwidth: float,
    epsilon: float = 1e-9,
    max_sweeps: int | None = None,
) -> tuple[StrategyProfile, SolverReport]:
    """Fixed-point iteration over privacy levels for one support partition.

    Each sweep recalculates every populated privacy level in order, using the
    freshest values of the others; iteration stops when the summed absolute
    change of a full sweep drops to epsilon, or gives up after the sweep cap.
    """
    if epsilon <= 0:
        raise ConfigError("epsilon must be positive")
    n_phi = len(counts)
    n_levels = table.n_levels
    active = [j for j in range(n_phi) if counts[j] > 0]
    if max_sweeps is None:
        max_sweeps = 10 * max(1, len(active))
    adapted = [_adapted_rows(table, rho_table, j) for j in range(n_phi)]
    probs = [[0.0] * n_levels for _ in range(n_phi)]
    converged = not active
    sweeps = 0
    last_change = 0.0
    for _ in range(max_sweeps):
        if converged:
            break
        sweeps += 1
        change = 0.0
        for j in active:
            loads, impacts = adapted[j]
            if counts[j] == 1:
                supported = list(partition.supported_levels(j))
                new_row = _greedy_row(j, probs, supported, loads, impacts, counts, bandwidth)
            else:
                new_row = _equilibrium_row(
                    j, probs, partition, counts, table, rho_table, loads, impacts, bandwidth
                )
            change += sum(abs(a - b) for a, b in zip(new_row, probs[j]))
            probs[j] = new_row
        last_change = change
        if change <= epsilon:
            converged = True
    profile = StrategyProfile(tuple(Strategy(tuple(row)) for row in probs), tuple(counts))
    utilities = tuple(
        expected_utility(j, profile, table, rho_table) for j in range(n_phi)
    )
    report = SolverReport(
        partition=partition,
        converged=converged,
        iterations=sweeps,
        last_change=last_change,
        utility_by_phi=utilities,
    )
    return profile, report


def robust_score(
    profile: StrategyProfile,
    phi_e: int,
    counts: tuple[int, ...],
    table: ImpactLevelTable,
    rho_table: tuple[tuple[float, ...], ...],
    beta: float,
) -> float:
    """Trust-weighted blend of the cooperative and the go-it-alone utility.

    beta = 1 trusts the neighborhood fully; beta = 0 scores the own strategy
    as if every neighbor vanished.
    """
    if not 0.0 <= beta <= 1.0:
        raise ConfigError("trust weight must lie in [0, 1]")
    with_neighbors = StrategyProfile(profile.strategies, counts)
    u_with = expected_utility(phi_e, with_neighbors, table, rho_table)
    if beta == 1.0:
        return u_with
    alone_counts = tuple(1 if j == phi_e else 0 for j in range(len(counts)))
    alone = StrategyProfile(profile.strategies, alone_counts)
    u_alone = expected_utility(phi_e, alone, table, rho_table)
    return beta * u_with + (1.0 - beta) * u_alone


def _score(profile, counts, table, rho_table, beta, phi_e):
    if phi_e is not None:
        return robust_score(profile, phi_e, counts, table, rho_table, beta)
    total = sum(counts)
    if total == 0:
        return 0.0
    acc = 0.0
    for j, n in enumerate(counts):
        if n > 0:
            acc += n * robust_score(profile, j, counts, table, rho_table, beta)
    return acc / total


def solve_optimal(
    counts: tuple[int, ...],
    table: ImpactLevelTable,
    rho_table: tuple[tuple[float, ...], ...],
    config: ScenarioConfig,
    phi_e: int | None = None,
) -> tuple[StrategyProfile, SolverReport]:
    """Enumerate every support partition and keep the best-scoring solution.

    Only populated privacy levels are enumerated (2 ^ (active x levels)
    cases, guarded). Non-converged partitions are dropped. Ties prefer fewer
    supported pairs, then the earliest enumeration mask. When phi_e is None
    the score is the count-weighted mean of the per-level robust scores,
    which every vehicle can compute identically.
    """
    n_phi = len(counts)
    n_levels = table.n_levels
    if len(rho_table) != n_phi:
        raise ConfigError("adaptation table must have one row per privacy level")
    active = [j for j in range(n_phi) if counts[j] > 0]
    bits = len(active) * n_levels
    if bits > config.enumeration_guard_bits:
        raise GuardError(
            f"support enumeration would need 2^{bits} cases "
            f"(guard: {config.enumeration_guard_bits} bits); merge impact levels "
            "or reduce the number of privacy levels"
        )
    bandwidth = config.bandwidth_per_slot
    beta = config.trust_weight
    best: tuple[float, int, StrategyProfile, SolverReport] | None = None
    for mask in range(1 << bits):
        partition = SupportPartition.from_mask(mask, active, n_phi, n_levels)
        profile, report = solve_fixed_support(
            partition, counts, table, rho_table, bandwidth, config.convergence_epsilon
        )
        if not report.converged:
            continue
        feasible = all(
            strategy_spend(profile.strategies[j], _adapted_rows(table, rho_table, j)[0])
            <= bandwidth + FEASIBILITY_TOL
            for j in active
        )
        if not feasible:
            continue
        score = _score(profile, counts, table, rho_table, beta, phi_e)
        size = partition.size()
        if (
            best is None
            or score > best[0]
            or (score == best[0] and size < best[1])
        ):
            best = (score, size, profile, report)
    if best is None:
        raise ConfigError("no support partition converged")
    score, _, profile, report = best
    report = SolverReport(
        partition=report.partition,
        converged=report.converged,
        iterations=report.iterations,
        last_change=report.last_change,
        utility_by_phi=report.utility_by_phi,
        robust_score=score,
    )
    return profile, report


def check_concavity(
    profile: StrategyProfile,
    phi_e: int,
    level_idx: int,
    table: ImpactLevelTable,
    rho_table: tuple[tuple[float, ...], ...],
    step: float = 2e-2,
    tol: float = 1e-6,
) -> bool:
    """Finite-difference curvature of the utility along the budget direction.

    Perturbs the tagged level and lets the balance level absorb the budget
    change; a concave utility keeps the central second difference below tol
    for any step, so the step only has to be large enough to beat rounding
    noise. The direction is normalized so neither component exceeds 1.
    """
    loads, _ = _adapted_rows(table, rho_table, phi_e)
    if level_idx == BALANCE_LEVEL:
        raise ConfigError("pick a level other than the balance level")
    if loads[BALANCE_LEVEL] <= 0.0:
        raise ConfigError("the balance level needs a positive load")
    trade = loads[level_idx] / loads[BALANCE_LEVEL]
    norm = max(1.0, trade)
    d_level = 1.0 / norm
    d_balance = trade / norm
    p = list(profile.strategies[phi_e].probabilities)
    bounds = [
        (1.0 - p[level_idx]) / d_level,
        p[level_idx] / d_level,
    ]
    if d_balance > 0.0:
        bounds += [
            p[BALANCE_LEVEL] / d_balance,
            (1.0 - p[BALANCE_LEVEL]) / d_balance,
        ]
    h = min(step, 0.5 * min(bounds))
    if h <= 1e-12:
        return True  # no interior room to probe

    def utility_at(t: float) -> float:
        q = list(p)
        q[level_idx] = min(1.0, max(0.0, p[level_idx] + t * d_level))
        q[BALANCE_LEVEL] = min(1.0, max(0.0, p[BALANCE_LEVEL] - t * d_balance))
        moved = profile.with_strategy(phi_e, Strategy(tuple(q)))
        return expected_utility(phi_e, moved, table, rho_table)

    second = (utility_at(h) - 2.0 * utility_at(0.0) + utility_at(-h)) / (h * h)
    return second <= tol


def deviation_utility(
    deviant: tuple[float, ...],
    profile: StrategyProfile,
    phi_e: int,
    table: ImpactLevelTable,
    rho_table: tuple[tuple[float, ...], ...],
) -> float:
    """Utility of one tagged vehicle that deviates while its peers keep playing.

    The tagged vehicle is pulled out of its own privacy level's exponent and
    replaced by the deviant strategy.
    """
    total = 0.0
    n_e = profile.counts[phi_e]
    probs = [s.probabilities for s in profile.strategies]
    for l, level in enumerate(table.levels):
        weight = level.expected_impact * level.load
        miss = _others_miss(probs, profile.counts, l, phi_e)
        own = (1.0 - profile.probability(phi_e, l)) ** max(0, n_e - 1)
        total += weight * (1.0 - miss * own * (1.0 - deviant[l]))
    return total


def max_deviation_gain(
    profile: StrategyProfile,
    phi_e: int,
    table: ImpactLevelTable,
    rho_table: tuple[tuple[float, ...], ...],
    bandwidth: float,
    trials: int,
    rng: np.random.Generator,
) -> float:
    """Best utility gain over random feasible unilateral deviations.

    At a Nash solution this stays at numerical-residue scale: every budget-
    feasible deviation inside the chosen support is utility-equivalent, and
    support changes were already enumerated.
    """
    loads, _ = _adapted_rows(table, rho_table, phi_e)
    base = deviation_utility(profile.strategies[phi_e].probabilities, profile, phi_e, table, rho_table)
    best_gain = 0.0
    n_levels = table.n_levels
    for _ in range(trials):
        q = rng.random(n_levels)
        spend = float(sum(loads[l] * q[l] for l in range(n_levels)))
        if spend > bandwidth and spend > 0.0:
            q = q * (bandwidth / spend)
        gain = deviation_utility(tuple(q), profile, phi_e, table, rho_table) - base
        if gain > best_gain:
            best_gain = gain
    return best_gain
