"""Campaign planning: pick one procedure variant per requirement.

Every claimed requirement still gets tested; the choice is only between
variants (say, a manual walkthrough versus a scripted run) that trade
money for bench time.  The planner minimizes total bench time subject to
the money budget, breaking ties toward lower cost and then lower variant
ids so plans are reproducible.

`optimize_plan` solves this exactly with a memoized search over
(requirement index, budget left); `brute_force_plan` enumerates every
combination and exists so the two can be checked against each other.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cache
from itertools import product
from math import prod
from typing import Mapping, Sequence

from .errors import Infeasible, TooLarge

BRUTE_FORCE_LIMIT = 10**6


@dataclass(frozen=True)
class ProcedureVariant:
    """One way to execute the procedure for a requirement.

    `time` is bench hours, `cost` is money in abstract units; both are
    nonnegative integers.
    """

    requirement_id: str
    variant_id: str
    time: int
    cost: int

    def __post_init__(self):
        if self.time < 0 or self.cost < 0:
            raise ValueError(f"{self.requirement_id}/{self.variant_id}: negative time or cost")


@dataclass(frozen=True)
class CampaignPlan:
    """Chosen variant per requirement, in claim order, with the totals."""

    chosen: tuple[ProcedureVariant, ...]
    total_time: int
    total_cost: int
    budget: int | None


def _validated_groups(
    catalog: Mapping[str, Sequence[ProcedureVariant]],
) -> list[tuple[ProcedureVariant, ...]]:
    groups = []
    for rid, variants in catalog.items():
        if not variants:
            raise ValueError(f"requirement {rid} has no procedure variants")
        names = [v.variant_id for v in variants]
        if len(set(names)) != len(names):
            raise ValueError(f"requirement {rid} has duplicate variant ids")
        stray = [v.variant_id for v in variants if v.requirement_id != rid]
        if stray:
            raise ValueError(f"variants filed under {rid} but naming another requirement: {stray}")
        groups.append(tuple(variants))
    return groups


def _as_plan(chosen: Sequence[ProcedureVariant], budget: int | None) -> CampaignPlan:
    return CampaignPlan(
        chosen=tuple(chosen),
        total_time=sum(v.time for v in chosen),
        total_cost=sum(v.cost for v in chosen),
        budget=budget,
    )


def optimize_plan(
    catalog: Mapping[str, Sequence[ProcedureVariant]], budget: int | None = None
) -> CampaignPlan:
    """Exact minimum-time plan within the budget; `budget=None` lifts the cap.

    Raises Infeasible when even the cheapest variant per requirement
    overruns the budget.
    """
    groups = _validated_groups(catalog)
    if budget is None:
        return _as_plan(
            [min(g, key=lambda v: (v.time, v.cost, v.variant_id)) for g in groups], None
        )
    if budget < 0:
        raise ValueError(f"budget must be nonnegative: {budget}")

    @cache
    def best(i: int, remaining: int) -> tuple[int, int] | None:
        # Least (time, cost) achievable for groups i.. with this much money,
        # compared lexicographically; None when nothing fits.
        if i == len(groups):
            return (0, 0)
        found = None
        for v in groups[i]:
            if v.cost > remaining:
                continue
            tail = best(i + 1, remaining - v.cost)
            if tail is None:
                continue
            pair = (v.time + tail[0], v.cost + tail[1])
            if found is None or pair < found:
                found = pair
        return found

    target = best(0, budget)
    if target is None:
        floor = sum(min(v.cost for v in g) for g in groups)
        raise Infeasible(
            f"budget {budget} cannot cover the campaign; cheapest selection costs {floor}"
        )
    chosen = []
    remaining = budget
    need_time, need_cost = target
    for i, group in enumerate(groups):
        for v in sorted(group, key=lambda v: v.variant_id):
            if v.cost > remaining:
                continue
            tail = best(i + 1, remaining - v.cost)
            if tail is None:
                continue
            if (v.time + tail[0], v.cost + tail[1]) == (need_time, need_cost):
                chosen.append(v)
                remaining -= v.cost
                need_time -= v.time
                need_cost -= v.cost
                break
    return _as_plan(chosen, budget)


def brute_force_plan(
    catalog: Mapping[str, Sequence[ProcedureVariant]], budget: int | None = None
) -> CampaignPlan:
    """Enumerate every combination; independent witness for `optimize_plan`."""
    groups = _validated_groups(catalog)
    combos = prod(len(g) for g in groups)
    if combos > BRUTE_FORCE_LIMIT:
        raise TooLarge(f"{combos} combinations exceed the enumeration limit")
    winner = None
    winner_key = None
    for combo in product(*groups):
        total_cost = sum(v.cost for v in combo)
        if budget is not None and total_cost > budget:
            continue
        key = (
            sum(v.time for v in combo),
            total_cost,
            tuple(v.variant_id for v in combo),
        )
        if winner_key is None or key < winner_key:
            winner, winner_key = combo, key
    if winner is None:
        raise Infeasible(f"budget {budget} cannot cover the campaign")
    return _as_plan(winner, budget)
