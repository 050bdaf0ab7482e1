"""Brute-force ground truth for small instances.

The oracle does breadth-first search over hyperstates using every applicable
tactic, so the scripts it returns are minimum-length by construction. It
stays deliberately simple: no heuristics, no pruning beyond a visited set.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Callable, Iterable

from .env import (
    Hyperstate,
    Obligation,
    ProofScript,
    Tactic,
    TacticError,
    enumerate_applicable,
    step_hyperstate,
)

__all__ = [
    "OracleResult",
    "ActionProvider",
    "all_applicable_actions",
    "shortest_proof",
    "shortest_obligation_length",
    "optimal_value",
    "reproducible_under_predictor",
]

# Maps an obligation to the candidate tactics to try on it.
ActionProvider = Callable[[Obligation], Iterable[Tactic]]


@dataclass(frozen=True)
class OracleResult:
    provable: bool
    shortest_script: ProofScript | None
    shortest_length: int | None
    depth_limited: bool


def all_applicable_actions(ob: Obligation) -> tuple[Tactic, ...]:
    return tuple(tactic for tactic, _ in enumerate_applicable(ob))


def shortest_proof(start: Hyperstate, max_depth: int, actions: ActionProvider | None = None) -> OracleResult:
    """BFS over hyperstates; returns a minimum-length valid script.

    `actions` restricts the tactics tried on each first obligation (used for
    predictor-constrained searches); by default every applicable tactic is
    tried. Depth exhaustion is reported as not-provable with depth_limited.
    """
    if max_depth < 0:
        raise ValueError("max_depth must be nonnegative")
    provider = all_applicable_actions if actions is None else actions
    if start.is_empty:
        return OracleResult(True, ProofScript(), 0, False)
    queue: deque[tuple[Hyperstate, tuple[Tactic, ...]]] = deque([(start, ())])
    visited = {start.canonical_key()}
    depth_limited = False
    while queue:
        state, script = queue.popleft()
        if len(script) >= max_depth:
            depth_limited = True
            continue
        for tactic in provider(state.first):
            try:
                child = step_hyperstate(state, tactic)
            except TacticError:
                continue
            if child.is_empty:
                found = script + (tactic,)
                return OracleResult(True, ProofScript(found), len(found), False)
            key = child.canonical_key()
            if key in visited:
                continue
            visited.add(key)
            queue.append((child, script + (tactic,)))
    return OracleResult(False, None, None, depth_limited)


def shortest_obligation_length(ob: Obligation, max_depth: int, actions: ActionProvider | None = None) -> int | None:
    """Minimum number of tactics to discharge `ob` alone, or None."""
    result = shortest_proof(Hyperstate((ob,)), max_depth, actions)
    return result.shortest_length


def optimal_value(ob: Obligation, gamma: float, max_depth: int = 8, actions: ActionProvider | None = None) -> float:
    """gamma^(shortest proof length), or 0 when unprovable within depth."""
    if not 0.0 < gamma < 1.0:
        raise ValueError("gamma must lie in (0, 1)")
    length = shortest_obligation_length(ob, max_depth, actions)
    if length is None:
        return 0.0
    return gamma**length


def reproducible_under_predictor(task: tuple[Obligation, ProofScript], predictor, n: int) -> bool:
    """True iff every step of the task's script is in the predictor's top n
    predictions at the corresponding replay state."""
    from .predictor import predict_top_n

    obligation, script = task
    state = Hyperstate((obligation,))
    for tactic in script.steps:
        if n <= 0:
            return False
        predicted = {p.tactic for p in predict_top_n(predictor, state.first, n)}
        if tactic not in predicted:
            return False
        state = step_hyperstate(state, tactic)
    if not state.is_empty:
        raise ValueError("task script does not discharge its obligation")
    return True
