"""Best-first structure search over DAGs guided by description length.

Candidate arcs are ranked once, up front, by the description length of the
target node with the source as its only parent. Search elements pair a
candidate network with a pending arc from that ranking; expanding an element
absorbs the arc into the network (locally re-optimizing the direction of
arcs incident to the target) and enqueues two successors, one continuing
from the grown network and one skipping the arc. The answer is the lowest
scoring constrained network materialized anywhere during the search.

An exhaustive enumerator over all DAGs (small n only) serves as the oracle
the heuristic search is measured against.
"""

from __future__ import annotations

import heapq
import itertools
import math
from collections import deque
from dataclasses import dataclass, field

from .core import (
    ConstraintError,
    ConstraintSet,
    Dataset,
    IllegalArcError,
    NetworkStructure,
    ancestors_of,
    constraint_cycle,
    initial_structure,
    reachable_from,
    validate_constraints,
)
from .scoring import EncodingConfig, ScoreCache, ScoreLedger


@dataclass(frozen=True)
class ArcCandidate:
    """A directed arc source->target with the description length of target
    given {source} as its single parent."""

    source: int
    target: int
    dl: float

    def __post_init__(self):
        if self.source == self.target:
            raise ValueError("arc cannot be a self-loop")
        if not math.isfinite(self.dl):
            raise ValueError("arc description length must be finite")


@dataclass(frozen=True)
class SearchBudget:
    """Resource bound on the number of search-element expansions."""

    max_expansions: int

    def __post_init__(self):
        if self.max_expansions < 1:
            raise ValueError("max_expansions must be >= 1")


@dataclass(frozen=True)
class SearchElement:
    """A candidate network plus the index of its pending arc in the ranked
    arc list; heuristic = network's relative total DL + the arc's DL."""

    network: NetworkStructure
    cursor: int
    heuristic: float
    dl_sum: float


@dataclass
class SearchStatistics:
    """Instrumentation for one search run.

    incumbent_trace holds (expansion index, relative total DL) pairs, one
    per improvement of the best network seen, starting with the initial
    network at expansion 0.
    """

    expansions: int = 0
    cycle_checks: int = 0
    ordering_checks: int = 0
    ordering_check_failures: int = 0
    reversals_attempted: int = 0
    reversals_taken: int = 0
    networks_materialized: int = 0
    incumbent_trace: list[tuple[int, float]] = field(default_factory=list)

    @property
    def expansions_to_best(self) -> int:
        """Expansion count at which the final incumbent was reached."""
        return self.incumbent_trace[-1][0] if self.incumbent_trace else 0

    def as_dict(self) -> dict:
        return {
            "expansions": self.expansions,
            "cycle_checks": self.cycle_checks,
            "ordering_checks": self.ordering_checks,
            "ordering_check_failures": self.ordering_check_failures,
            "reversals_attempted": self.reversals_attempted,
            "reversals_taken": self.reversals_taken,
            "networks_materialized": self.networks_materialized,
            "expansions_to_best": self.expansions_to_best,
        }


def build_pairs(
    data: Dataset,
    constraints: ConstraintSet,
    config: EncodingConfig,
    cache: ScoreCache | None = None,
) -> list[ArcCandidate]:
    """Rank all admissible directed arcs by single-parent description length.

    Arcs whose reverse is a mandated direct-causation arc, and arcs that
    directly contradict an ordering pair, are excluded. Sorted ascending by
    score with ties broken by (source, target).
    """
    cache = cache or ScoreCache(data, config)
    n = data.n_variables
    out = []
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            if (j, i) in constraints.direct_causes:
                continue
            if (j, i) in constraints.orderings:
                continue
            out.append(ArcCandidate(i, j, cache.dl(j, (i,))))
    out.sort(key=lambda a: (a.dl, a.source, a.target))
    return out


def _addable(
    g: NetworkStructure,
    children: list[list[int]],
    source: int,
    target: int,
    constraints: ConstraintSet,
    stats: SearchStatistics,
    desc_cache: dict[int, set[int]] | None = None,
    anc_cache: dict[int, set[int]] | None = None,
) -> bool:
    """Whether source->target can join g: not already present, keeps the
    graph acyclic, and creates no path contradicting an ordering pair.

    The optional caches memoize reachability sets across repeated queries
    against the same unchanged network (one ranked-arc scan).
    """
    if g.has_arc(source, target):
        return False
    stats.cycle_checks += 1
    if desc_cache is not None and target in desc_cache:
        desc_target = desc_cache[target]
    else:
        desc_target = reachable_from(children, target)
        if desc_cache is not None:
            desc_cache[target] = desc_target
    if source in desc_target:
        return False
    if constraints.orderings:
        stats.ordering_checks += 1
        if anc_cache is not None and source in anc_cache:
            anc_source = anc_cache[source]
        else:
            anc_source = ancestors_of(g, source)
            if anc_cache is not None:
                anc_cache[source] = anc_source
        for a, b in constraints.orderings:
            # A new violating path b ~> a must run through the new arc.
            if b in anc_source and a in desc_target:
                stats.ordering_check_failures += 1
                return False
    return True


def _next_addable(
    g: NetworkStructure,
    pairs: list[ArcCandidate],
    start: int,
    constraints: ConstraintSet,
    stats: SearchStatistics,
) -> int | None:
    children = g.children_lists()
    desc_cache: dict[int, set[int]] = {}
    anc_cache: dict[int, set[int]] = {}
    for idx in range(start, len(pairs)):
        cand = pairs[idx]
        if _addable(g, children, cand.source, cand.target, constraints, stats,
                    desc_cache, anc_cache):
            return idx
    return None


def arc_absorption(
    g: NetworkStructure,
    arc: tuple[int, int],
    data: Dataset,
    constraints: ConstraintSet,
    config: EncodingConfig,
    cache: ScoreCache | None = None,
    stats: SearchStatistics | None = None,
) -> NetworkStructure:
    """Insert an arc, then locally re-optimize arc directions.

    Every arc incident to the arc's target is examined (the new arc
    included) and reversed when that strictly lowers the summed description
    length; each reversal cascades the examination to the arc's other
    endpoint. Reversals that would create a cycle, remove a mandated
    direct-causation arc, or contradict an ordering pair are never taken.
    Only nodes whose parent sets change are re-scored.
    """
    cache = cache or ScoreCache(data, config)
    stats = stats if stats is not None else SearchStatistics()
    source, target = arc
    if not _addable(g, g.children_lists(), source, target, constraints, SearchStatistics()):
        raise IllegalArcError(f"arc {source}->{target} cannot be added to this network")

    g = g.add_arc(source, target)
    pending = deque([target])
    while pending:
        node = pending.popleft()
        neighbors = sorted(
            set(g.parents[node]) | {c for c, ps in enumerate(g.parents) if node in ps}
        )
        for other in neighbors:
            if g.has_arc(other, node):
                u, v = other, node
            elif g.has_arc(node, other):
                u, v = node, other
            else:
                continue
            if (u, v) in constraints.direct_causes:
                continue
            reduced_v = tuple(p for p in g.parents[v] if p != u)
            g_minus = g.with_parents(v, reduced_v)
            stats.cycle_checks += 1
            desc_u = reachable_from(g_minus.children_lists(), u)
            if v in desc_u:
                continue
            if constraints.orderings:
                stats.ordering_checks += 1
                anc_v = ancestors_of(g_minus, v)
                if any(b in anc_v and a in desc_u for a, b in constraints.orderings):
                    stats.ordering_check_failures += 1
                    continue
            stats.reversals_attempted += 1
            delta = (
                cache.dl(u, g.parents[u] + (v,))
                + cache.dl(v, reduced_v)
                - cache.dl(u, g.parents[u])
                - cache.dl(v, g.parents[v])
            )
            if delta < 0.0:  # ties never flip, so the cascade terminates
                g = g.flip_arc(u, v)
                stats.reversals_taken += 1
                pending.append(other)
    return g


def expand(
    element: SearchElement,
    pairs: list[ArcCandidate],
    data: Dataset,
    constraints: ConstraintSet,
    config: EncodingConfig,
    cache: ScoreCache | None = None,
    stats: SearchStatistics | None = None,
    visit=None,
) -> tuple[list[SearchElement], SearchElement]:
    """Expand one search element.

    Absorbs the element's pending arc into its network, then emits up to two
    successors: the grown network with the next arc addable to it, and the
    old network with the next arc addable to it. Successors with no
    qualifying arc are not emitted. `visit`, when given, is called with
    (network, dl_sum) for the network the absorption materialized.

    Returns (successors, the element itself, now closed).
    """
    cache = cache or ScoreCache(data, config)
    stats = stats if stats is not None else SearchStatistics()
    cand = pairs[element.cursor]
    g_new = arc_absorption(
        element.network, (cand.source, cand.target), data, constraints, config, cache, stats
    )
    dl_new = cache.dl_sum(g_new)
    if visit is not None:
        visit(g_new, dl_new)
    successors = []
    idx = _next_addable(g_new, pairs, element.cursor + 1, constraints, stats)
    if idx is not None:
        successors.append(SearchElement(g_new, idx, dl_new + pairs[idx].dl, dl_new))
    idx = _next_addable(element.network, pairs, element.cursor + 1, constraints, stats)
    if idx is not None:
        successors.append(
            SearchElement(element.network, idx, element.dl_sum + pairs[idx].dl, element.dl_sum)
        )
    return successors, element


def _heap_entry(element: SearchElement, counter: int):
    # Value-based ordering (heuristic, cursor, parent sets) keeps pops
    # deterministic; the counter only separates exact duplicates.
    return (element.heuristic, element.cursor, element.network.parents, counter, element)


def learn(
    data: Dataset,
    constraints: ConstraintSet | None = None,
    config: EncodingConfig | None = None,
    budget: SearchBudget | None = None,
) -> tuple[NetworkStructure, ScoreLedger, SearchStatistics]:
    """Learn a constrained network structure by best-first search.

    Starts from the network containing exactly the mandated arcs, seeds the
    OPEN list with one element per admissible ranked arc, and expands
    elements in heuristic order until OPEN empties or the expansion budget
    (default 5*n^2) is exhausted. Returns the lowest-scoring constrained
    network materialized during the search, its score ledger, and the run's
    statistics.
    """
    constraints = constraints if constraints is not None else ConstraintSet()
    config = config if config is not None else EncodingConfig()
    if not validate_constraints(constraints):
        cycle = constraint_cycle(constraints)
        raise ConstraintError(f"constraints contain a cycle: {' -> '.join(map(str, cycle))}")
    n = data.n_variables
    budget = budget if budget is not None else SearchBudget(max(1, 5 * n * n))
    cache = ScoreCache(data, config)
    stats = SearchStatistics()
    pairs = build_pairs(data, constraints, config, cache=cache)

    g_init = initial_structure(data.schema, constraints)
    best = g_init
    best_dl = cache.dl_sum(g_init)
    stats.networks_materialized = 1
    stats.incumbent_trace.append((0, best_dl))

    def visit(network, dl_sum):
        nonlocal best, best_dl
        stats.networks_materialized += 1
        if dl_sum < best_dl:
            best, best_dl = network, dl_sum
            stats.incumbent_trace.append((stats.expansions, dl_sum))

    counter = itertools.count()
    open_heap = []
    init_children = g_init.children_lists()
    init_desc: dict[int, set[int]] = {}
    init_anc: dict[int, set[int]] = {}
    init_dl = best_dl
    for idx, cand in enumerate(pairs):
        if _addable(g_init, init_children, cand.source, cand.target, constraints, stats,
                    init_desc, init_anc):
            el = SearchElement(g_init, idx, init_dl + cand.dl, init_dl)
            heapq.heappush(open_heap, _heap_entry(el, next(counter)))

    while open_heap and stats.expansions < budget.max_expansions:
        element = heapq.heappop(open_heap)[-1]
        stats.expansions += 1
        successors, _closed = expand(
            element, pairs, data, constraints, config, cache, stats, visit=visit
        )
        for child in successors:
            heapq.heappush(open_heap, _heap_entry(child, next(counter)))

    return best, cache.ledger(best), stats


DEFAULT_EXHAUSTIVE_CAP = 5


def exhaustive_learn(
    data: Dataset,
    constraints: ConstraintSet | None = None,
    config: EncodingConfig | None = None,
    max_nodes: int = DEFAULT_EXHAUSTIVE_CAP,
) -> tuple[NetworkStructure, ScoreLedger]:
    """Find a minimum relative-total-DL constrained network by enumerating
    every admissible DAG (feasible only for small n; 29281 DAGs at n = 5).

    Ties are broken by fewest arcs, then lexicographically smaller parent
    sets. Refuses to run above `max_nodes` nodes.
    """
    constraints = constraints if constraints is not None else ConstraintSet()
    config = config if config is not None else EncodingConfig()
    n = data.n_variables
    if n > max_nodes:
        raise ValueError(
            f"exhaustive enumeration over {n} nodes refused (cap is {max_nodes}); "
            "use learn() instead"
        )
    if not validate_constraints(constraints):
        cycle = constraint_cycle(constraints)
        raise ConstraintError(f"constraints contain a cycle: {' -> '.join(map(str, cycle))}")
    cache = ScoreCache(data, config)

    candidates: list[list[tuple[float, tuple[int, ...]]]] = []
    for i in range(n):
        mandated = frozenset(a for a, b in constraints.direct_causes if b == i)
        forbidden = {b for a, b in constraints.orderings if a == i}
        others = [j for j in range(n) if j != i]
        sets = []
        for r in range(len(others) + 1):
            for combo in itertools.combinations(others, r):
                fset = frozenset(combo)
                if not mandated <= fset or fset & forbidden:
                    continue
                sets.append((cache.dl(i, combo), combo))
        sets.sort(key=lambda t: (t[0], len(t[1]), t[1]))
        candidates.append(sets)
    min_rest = [min(dl for dl, _ in sets) for sets in candidates]
    suffix_min = [0.0] * (n + 1)
    for i in range(n - 1, -1, -1):
        suffix_min[i] = suffix_min[i + 1] + min_rest[i]

    children: dict[int, list[int]] = {i: [] for i in range(n)}
    chosen: list[tuple[int, ...]] = [()] * n
    best_key: tuple | None = None
    best_parents: tuple | None = None
    orderings = sorted(constraints.orderings)

    def creates_cycle(node: int, parent_set: tuple[int, ...]) -> bool:
        # A new cycle must pass through `node`; DFS over arcs chosen so far.
        targets = set(parent_set)
        seen = {node}
        stack = [node]
        while stack:
            for nxt in children[stack.pop()]:
                if nxt in targets:
                    return True
                if nxt not in seen:
                    seen.add(nxt)
                    stack.append(nxt)
        return False

    def ordering_violated() -> bool:
        for a, b in orderings:
            seen = {b}
            stack = [b]
            while stack:
                cur = stack.pop()
                if cur == a:
                    return True
                for nxt in children[cur]:
                    if nxt not in seen:
                        seen.add(nxt)
                        stack.append(nxt)
        return False

    def assign(node: int, partial_dl: float):
        nonlocal best_key, best_parents
        if node == n:
            key = (partial_dl, sum(len(p) for p in chosen), tuple(chosen))
            if best_key is None or key < best_key:
                best_key = key
                best_parents = tuple(chosen)
            return
        for dl, parent_set in candidates[node]:
            total = partial_dl + dl
            if best_key is not None and total + suffix_min[node + 1] > best_key[0]:
                continue  # bound: no completion can beat the incumbent
            if creates_cycle(node, parent_set):
                continue
            chosen[node] = parent_set
            for p in parent_set:
                children[p].append(node)
            if not (orderings and ordering_violated()):
                assign(node + 1, total)
            for p in parent_set:
                children[p].pop()
            chosen[node] = ()

    assign(0, 0.0)
    structure = NetworkStructure(data.schema, best_parents)
    return structure, cache.ledger(structure)
