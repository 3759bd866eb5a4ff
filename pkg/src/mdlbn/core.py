"""Domain types for discrete Bayesian networks and the graph predicates used
by structure search: variables, DAG structures, parameterized networks,
datasets, and expert constraints.

All types are immutable after construction; algorithms that modify a network
do so by building modified copies.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

PROBABILITY_SUM_TOL = 1e-9


class SchemaError(ValueError):
    """A record, variable list, or file does not match the expected schema."""


class UndefinedScoreError(ValueError):
    """A description-length quantity was requested for an empty dataset."""


class IllegalArcError(ValueError):
    """An arc insertion would create a cycle or violate a constraint."""


class ConstraintError(ValueError):
    """A constraint set is inconsistent (circular causation/ordering)."""


class ZeroProbabilityRecordError(ValueError):
    """A data record was assigned probability zero by the model."""


@dataclass(frozen=True)
class Variable:
    """A named discrete variable with a fixed, ordered set of values."""

    name: str
    arity: int
    value_labels: tuple[str, ...] = ()

    def __post_init__(self):
        if not self.name:
            raise SchemaError("variable name must be nonempty")
        if self.arity < 2:
            raise SchemaError(f"variable {self.name!r}: arity must be >= 2, got {self.arity}")
        labels = tuple(self.value_labels) or tuple(str(v) for v in range(self.arity))
        if len(labels) != self.arity:
            raise SchemaError(
                f"variable {self.name!r}: {len(labels)} value labels for arity {self.arity}"
            )
        if len(set(labels)) != len(labels):
            raise SchemaError(f"variable {self.name!r}: value labels must be unique")
        object.__setattr__(self, "value_labels", labels)


def _check_unique_names(variables: Sequence[Variable]):
    names = [v.name for v in variables]
    if len(set(names)) != len(names):
        dup = sorted({n for n in names if names.count(n) > 1})
        raise SchemaError(f"duplicate variable names: {dup}")


@dataclass(frozen=True)
class NetworkStructure:
    """A directed graph over variables, stored as per-node parent sets.

    Construction validates well-formedness (index ranges, no self-parents,
    unique names) but deliberately not acyclicity, so that `detect_cycle`
    can be asked about arbitrary digraphs; operations that require a DAG
    check it at their entry points.
    """

    variables: tuple[Variable, ...]
    parents: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        variables = tuple(self.variables)
        _check_unique_names(variables)
        n = len(variables)
        if len(self.parents) != n:
            raise SchemaError(f"{len(self.parents)} parent sets for {n} variables")
        norm = []
        for i, ps in enumerate(self.parents):
            ps = tuple(sorted(set(int(p) for p in ps)))
            for p in ps:
                if p == i:
                    raise SchemaError(f"node {i} cannot be its own parent")
                if not 0 <= p < n:
                    raise SchemaError(f"node {i} has out-of-range parent {p}")
            norm.append(ps)
        object.__setattr__(self, "variables", variables)
        object.__setattr__(self, "parents", tuple(norm))

    @classmethod
    def empty(cls, variables: Iterable[Variable]) -> "NetworkStructure":
        variables = tuple(variables)
        return cls(variables, tuple(() for _ in variables))

    @property
    def n(self) -> int:
        return len(self.variables)

    @property
    def arities(self) -> tuple[int, ...]:
        return tuple(v.arity for v in self.variables)

    def arcs(self) -> list[tuple[int, int]]:
        """All arcs as (parent, child) pairs, sorted."""
        return sorted((p, i) for i, ps in enumerate(self.parents) for p in ps)

    def arc_count(self) -> int:
        return sum(len(ps) for ps in self.parents)

    def has_arc(self, source: int, target: int) -> bool:
        return source in self.parents[target]

    def children_lists(self) -> list[list[int]]:
        out: list[list[int]] = [[] for _ in range(self.n)]
        for child, ps in enumerate(self.parents):
            for p in ps:
                out[p].append(child)
        return out

    def with_parents(self, node: int, new_parents: Iterable[int]) -> "NetworkStructure":
        ps = list(self.parents)
        ps[node] = tuple(sorted(set(new_parents)))
        return NetworkStructure(self.variables, tuple(ps))

    def add_arc(self, source: int, target: int) -> "NetworkStructure":
        return self.with_parents(target, self.parents[target] + (source,))

    def flip_arc(self, source: int, target: int) -> "NetworkStructure":
        if not self.has_arc(source, target):
            raise IllegalArcError(f"no arc {source}->{target} to reverse")
        ps = list(self.parents)
        ps[target] = tuple(p for p in ps[target] if p != source)
        ps[source] = tuple(sorted(ps[source] + (target,)))
        return NetworkStructure(self.variables, tuple(ps))

    def index_of(self, name: str) -> int:
        for i, v in enumerate(self.variables):
            if v.name == name:
                return i
        raise SchemaError(f"unknown variable name {name!r}")


def topological_order(structure: NetworkStructure) -> list[int] | None:
    """Kahn's algorithm; returns a parent-first node order, or None if the
    graph is cyclic. Ready nodes are taken in ascending index order so the
    result is deterministic."""
    n = structure.n
    indegree = [len(ps) for ps in structure.parents]
    children = structure.children_lists()
    ready = [i for i in range(n) if indegree[i] == 0]
    heapq.heapify(ready)
    order = []
    while ready:
        node = heapq.heappop(ready)
        order.append(node)
        for c in children[node]:
            indegree[c] -= 1
            if indegree[c] == 0:
                heapq.heappush(ready, c)
    if len(order) != n:
        return None
    return order


def detect_cycle(structure: NetworkStructure) -> bool:
    """True iff the directed graph contains a cycle (linear time)."""
    return topological_order(structure) is None


def reachable_from(children: list[list[int]], start: int) -> set[int]:
    """Nodes reachable from `start` by directed paths, including `start`."""
    seen = {start}
    stack = [start]
    while stack:
        for nxt in children[stack.pop()]:
            if nxt not in seen:
                seen.add(nxt)
                stack.append(nxt)
    return seen


def ancestors_of(structure: NetworkStructure, start: int) -> set[int]:
    """Nodes with a directed path to `start`, including `start`."""
    seen = {start}
    stack = [start]
    while stack:
        for p in structure.parents[stack.pop()]:
            if p not in seen:
                seen.add(p)
                stack.append(p)
    return seen


def has_path(structure: NetworkStructure, source: int, target: int) -> bool:
    return target in reachable_from(structure.children_lists(), source)


@dataclass(frozen=True)
class ConstraintSet:
    """Expert-supplied domain knowledge.

    direct_causes: pairs (i, j) meaning "i is a direct cause of j"; the arc
        i->j must appear in any learned network.
    orderings: pairs (i, j) meaning "i precedes j"; the network may not
        contain a directed path from j to i.
    """

    direct_causes: frozenset[tuple[int, int]] = frozenset()
    orderings: frozenset[tuple[int, int]] = frozenset()

    def __post_init__(self):
        object.__setattr__(
            self, "direct_causes", frozenset((int(a), int(b)) for a, b in self.direct_causes)
        )
        object.__setattr__(
            self, "orderings", frozenset((int(a), int(b)) for a, b in self.orderings)
        )

    def is_empty(self) -> bool:
        return not self.direct_causes and not self.orderings

    def union_pairs(self) -> set[tuple[int, int]]:
        return set(self.direct_causes) | set(self.orderings)


def constraint_cycle(constraints: ConstraintSet) -> list[int] | None:
    """A cycle (as a node sequence, first node repeated at the end) in the
    union graph of causes and orderings, or None if it is acyclic."""
    adj: dict[int, list[int]] = {}
    for a, b in sorted(constraints.union_pairs()):
        adj.setdefault(a, []).append(b)
        adj.setdefault(b, [])
    WHITE, GRAY, BLACK = 0, 1, 2
    color = {v: WHITE for v in adj}
    trail: list[int] = []

    def visit(v):
        color[v] = GRAY
        trail.append(v)
        for w in adj[v]:
            if color[w] == GRAY:
                return trail[trail.index(w):] + [w]
            if color[w] == WHITE:
                found = visit(w)
                if found:
                    return found
        trail.pop()
        color[v] = BLACK
        return None

    for v in sorted(adj):
        if color[v] == WHITE:
            found = visit(v)
            if found:
                return found
    return None


def validate_constraints(constraints: ConstraintSet) -> bool:
    """True iff the union graph of direct causes and orderings is acyclic."""
    return constraint_cycle(constraints) is None


def violates_ordering(structure: NetworkStructure, constraints: ConstraintSet) -> bool:
    """True iff for some ordering pair (i, j) the structure contains a
    directed path from j back to i."""
    if not constraints.orderings:
        return False
    children = structure.children_lists()
    reach_cache: dict[int, set[int]] = {}
    for i, j in constraints.orderings:
        if j not in reach_cache:
            reach_cache[j] = reachable_from(children, j)
        if i in reach_cache[j] and i != j:
            return True
    return False


def is_constrained_network(structure: NetworkStructure, constraints: ConstraintSet) -> bool:
    """True iff the structure is a DAG that contains every mandated
    direct-causation arc and violates no ordering pair."""
    for i, j in constraints.direct_causes:
        if not structure.has_arc(i, j):
            return False
    return not detect_cycle(structure) and not violates_ordering(structure, constraints)


def initial_structure(variables: Sequence[Variable], constraints: ConstraintSet) -> NetworkStructure:
    """The starting network for search: exactly the mandated arcs."""
    g = NetworkStructure.empty(variables)
    for i, j in sorted(constraints.direct_causes):
        g = g.add_arc(i, j)
    return g


def _cpt_rows(structure: NetworkStructure, node: int) -> int:
    rows = 1
    for p in structure.parents[node]:
        rows *= structure.variables[p].arity
    return rows


@dataclass(frozen=True, eq=False)
class ParameterizedNetwork:
    """A DAG structure plus one conditional probability table per node.

    cpts[i] has shape (R_i, s_i) where R_i is the product of the parent
    arities (1 for a root) and rows are laid out row-major over the parents
    in ascending node-index order. Every row must be a probability vector
    (nonnegative, summing to 1 within 1e-9).
    """

    structure: NetworkStructure
    cpts: tuple[np.ndarray, ...]

    def __post_init__(self):
        if detect_cycle(self.structure):
            raise IllegalArcError("parameterized network requires an acyclic structure")
        if len(self.cpts) != self.structure.n:
            raise SchemaError(f"{len(self.cpts)} tables for {self.structure.n} nodes")
        frozen = []
        for i, table in enumerate(self.cpts):
            arr = np.asarray(table, dtype=np.float64)
            rows = _cpt_rows(self.structure, i)
            s = self.structure.variables[i].arity
            if arr.shape != (rows, s):
                raise SchemaError(
                    f"node {i}: table shape {arr.shape}, expected {(rows, s)}"
                )
            if np.any(arr < 0):
                raise SchemaError(f"node {i}: negative probability entry")
            bad = np.abs(arr.sum(axis=1) - 1.0) > PROBABILITY_SUM_TOL
            if np.any(bad):
                raise SchemaError(
                    f"node {i}: row {int(np.nonzero(bad)[0][0])} does not sum to 1"
                )
            arr = np.ascontiguousarray(arr)
            arr.flags.writeable = False
            frozen.append(arr)
        object.__setattr__(self, "cpts", tuple(frozen))

    def __eq__(self, other):
        if not isinstance(other, ParameterizedNetwork):
            return NotImplemented
        return self.structure == other.structure and all(
            np.array_equal(a, b) for a, b in zip(self.cpts, other.cpts)
        )

    def row_index(self, node: int, record: Sequence[int]) -> int:
        """Row of node's table selected by the record's parent values."""
        idx = 0
        for p in self.structure.parents[node]:
            idx = idx * self.structure.variables[p].arity + int(record[p])
        return idx


def record_log_probability(network: ParameterizedNetwork, record: Sequence[int]) -> float:
    """log2 of the probability the network assigns to one full assignment.

    Returns -inf if any factor is exactly zero. Raises SchemaError for a
    record that does not fit the network's variables.
    """
    structure = network.structure
    if len(record) != structure.n:
        raise SchemaError(f"record has {len(record)} values, expected {structure.n}")
    total = 0.0
    for i, var in enumerate(structure.variables):
        v = int(record[i])
        if not 0 <= v < var.arity:
            raise SchemaError(f"record value {v} out of range for variable {var.name!r}")
        p = network.cpts[i][network.row_index(i, record), v]
        if p == 0.0:
            return float("-inf")
        total += math.log2(p)
    return total


@dataclass(frozen=True, eq=False)
class Dataset:
    """N complete records of discrete value indices over a fixed schema."""

    schema: tuple[Variable, ...]
    records: np.ndarray

    def __post_init__(self):
        schema = tuple(self.schema)
        _check_unique_names(schema)
        arr = np.asarray(self.records, dtype=np.int64)
        if arr.size == 0:
            arr = arr.reshape(0, len(schema))
        if arr.ndim != 2 or arr.shape[1] != len(schema):
            raise SchemaError(
                f"records shape {arr.shape} does not match {len(schema)} variables"
            )
        for i, var in enumerate(schema):
            if arr.shape[0] and (arr[:, i].min() < 0 or arr[:, i].max() >= var.arity):
                raise SchemaError(f"column {var.name!r} has values outside [0, {var.arity})")
        arr = np.ascontiguousarray(arr)
        arr.flags.writeable = False
        object.__setattr__(self, "schema", schema)
        object.__setattr__(self, "records", arr)

    @classmethod
    def from_records(
        cls, records, names: Sequence[str] | None = None, arities: Sequence[int] | None = None
    ) -> "Dataset":
        """Build a dataset from a sequence of integer rows, inferring binary
        or larger arities from the data unless given explicitly."""
        arr = np.asarray(records, dtype=np.int64)
        if arr.ndim != 2:
            arr = arr.reshape(len(records), -1)
        n = arr.shape[1]
        if names is None:
            names = [f"x{i}" for i in range(n)]
        if arities is None:
            arities = [max(2, int(arr[:, i].max()) + 1) if arr.shape[0] else 2 for i in range(n)]
        schema = tuple(Variable(str(nm), int(a)) for nm, a in zip(names, arities))
        return cls(schema, arr)

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return self.schema == other.schema and np.array_equal(self.records, other.records)

    @property
    def n_records(self) -> int:
        return int(self.records.shape[0])

    @property
    def n_variables(self) -> int:
        return len(self.schema)

    @property
    def arities(self) -> tuple[int, ...]:
        return tuple(v.arity for v in self.schema)

    def variable_names(self) -> tuple[str, ...]:
        return tuple(v.name for v in self.schema)
