"""Local refinement of an existing network.

Because the score decomposes over nodes, a subset of nodes can be improved
in isolation: re-learn their parent sets, and accept the joint replacement
exactly when the subset's summed description length strictly drops, which
guarantees the whole network's score drops by the same amount.
"""

from __future__ import annotations

import itertools
import math

from .core import (
    ConstraintError,
    ConstraintSet,
    Dataset,
    IllegalArcError,
    NetworkStructure,
    constraint_cycle,
    detect_cycle,
    validate_constraints,
    violates_ordering,
)
from .scoring import EncodingConfig, ScoreCache


def refine_subset(
    network: NetworkStructure,
    data: Dataset,
    subset,
    config: EncodingConfig | None = None,
    max_parents: int = 5,
    constraints: ConstraintSet | None = None,
    cache: ScoreCache | None = None,
) -> tuple[NetworkStructure, bool, float, float]:
    """Re-learn parent sets for the given nodes and accept iff their summed
    description length strictly decreases.

    Nodes are processed in index order; each takes the best parent set
    (among subsets of the other nodes with at most `max_parents` members)
    that keeps the whole network acyclic and constraint-consistent given the
    choices made so far. Nodes outside the subset keep their parents.

    Returns (network, accepted, dl_before, dl_after) where the description
    lengths are summed over the subset only; the original network is
    returned unchanged when the replacement is not accepted.
    """
    config = config if config is not None else EncodingConfig()
    constraints = constraints if constraints is not None else ConstraintSet()
    subset = sorted(set(int(i) for i in subset))
    n = network.n
    if not subset:
        raise ValueError("subset must be nonempty")
    for i in subset:
        if not 0 <= i < n:
            raise IndexError(f"subset index {i} out of range for {n} nodes")
    if detect_cycle(network):
        raise IllegalArcError("refinement requires an acyclic network")
    if not validate_constraints(constraints):
        cycle = constraint_cycle(constraints)
        raise ConstraintError(f"constraints contain a cycle: {' -> '.join(map(str, cycle))}")
    cache = cache or ScoreCache(data, config)

    dl_before = math.fsum(cache.dl(i, network.parents[i]) for i in subset)
    current = network
    for node in subset:
        mandated = frozenset(a for a, b in constraints.direct_causes if b == node)
        forbidden = {b for a, b in constraints.orderings if a == node}
        others = [j for j in range(n) if j != node]
        best = None
        limit = max(max_parents, len(mandated))
        for r in range(min(limit, len(others)) + 1):
            for combo in itertools.combinations(others, r):
                fset = frozenset(combo)
                if not mandated <= fset or fset & forbidden:
                    continue
                candidate = current.with_parents(node, combo)
                if detect_cycle(candidate) or violates_ordering(candidate, constraints):
                    continue
                key = (cache.dl(node, combo), len(combo), combo)
                if best is None or key < best[0]:
                    best = (key, candidate)
        current = best[1]

    dl_after = math.fsum(cache.dl(i, current.parents[i]) for i in subset)
    if dl_after < dl_before:
        return current, True, dl_before, dl_after
    return network, False, dl_before, dl_after


def refine_all_nodes(
    network: NetworkStructure,
    data: Dataset,
    config: EncodingConfig | None = None,
    max_parents: int = 5,
    constraints: ConstraintSet | None = None,
) -> tuple[NetworkStructure, list[tuple[int, bool, float, float]]]:
    """Convenience sweep: refine each node as a singleton subset, in index
    order, chaining any accepted improvements. Returns the final network
    and one (node, accepted, dl_before, dl_after) entry per node."""
    config = config if config is not None else EncodingConfig()
    cache = ScoreCache(data, config)
    reports = []
    current = network
    for node in range(network.n):
        current, accepted, before, after = refine_subset(
            current, data, [node], config, max_parents, constraints, cache=cache
        )
        reports.append((node, accepted, before, after))
    return current, reports
