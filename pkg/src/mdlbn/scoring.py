"""Description-length arithmetic for MDL-based network scoring.

The score of a candidate network decomposes over nodes. Each node's
description length combines the bits needed to list its parents, the bits
needed to store its conditional probability table, and a data-fit credit of
N times the empirical mutual information between the node and its parent
set. Lower is better. The sum over nodes differs from the full description
length (network encoding plus data encoding) only by a structure-independent
entropy constant, so either can rank candidates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .core import (
    Dataset,
    NetworkStructure,
    ParameterizedNetwork,
    UndefinedScoreError,
    ZeroProbabilityRecordError,
)

LEDGER_REL_TOL = 1e-9


@dataclass(frozen=True)
class EncodingConfig:
    """Encoding parameters: d is the number of bits used to store one
    numerical probability parameter."""

    d: int = 10

    def __post_init__(self):
        if self.d < 1:
            raise ValueError(f"d must be a positive integer, got {self.d}")


@dataclass(frozen=True, eq=False)
class CountTable:
    """Exact joint occurrence counts over a scope of variables.

    `counts` is an integer array with one axis per scope variable, in the
    scope's order; the empty scope yields a zero-dimensional array holding N.
    """

    scope: tuple[int, ...]
    counts: np.ndarray
    total: int

    def __getitem__(self, instantiation) -> int:
        return int(self.counts[tuple(instantiation)])

    def nonzero_items(self):
        """(instantiation, count) pairs for every nonzero cell."""
        flat = self.counts.reshape(-1)
        for pos in np.nonzero(flat)[0]:
            yield tuple(int(v) for v in np.unravel_index(pos, self.counts.shape)), int(flat[pos])

    def as_dict(self) -> dict[tuple[int, ...], int]:
        return dict(self.nonzero_items())


def count_joint(data: Dataset, scope: Sequence[int]) -> CountTable:
    """Tally joint occurrences of the scope variables over all records.

    The scope's order is preserved: axis k of the result indexes the values
    of scope[k].
    """
    scope = tuple(int(i) for i in scope)
    n = data.n_variables
    for i in scope:
        if not 0 <= i < n:
            raise IndexError(f"scope index {i} out of range for {n} variables")
    if len(set(scope)) != len(scope):
        raise ValueError(f"scope {scope} contains duplicates")
    N = data.n_records
    if not scope:
        return CountTable(scope, np.array(N, dtype=np.int64), N)
    shape = tuple(data.schema[i].arity for i in scope)
    if N == 0:
        return CountTable(scope, np.zeros(shape, dtype=np.int64), 0)
    code = np.zeros(N, dtype=np.int64)
    for i in scope:
        code = code * data.schema[i].arity + data.records[:, i]
    counts = np.bincount(code, minlength=int(np.prod(shape))).reshape(shape)
    return CountTable(scope, counts, N)


def _entropy_bits(counts: np.ndarray, total: int) -> float:
    """Empirical entropy, in bits, of the distribution given by `counts`."""
    if total == 0:
        raise UndefinedScoreError("entropy of an empty dataset is undefined")
    nz = counts.reshape(-1)
    nz = nz[nz > 0].astype(np.float64)
    return math.log2(total) - float(nz @ np.log2(nz)) / total


def weight(data: Dataset, node: int, parents: Iterable[int]) -> float:
    """Empirical mutual information, in bits per record, between a node and
    its parent set; exactly 0.0 for an empty parent set.

    Cells with zero joint count are skipped (the 0*log2(0) = 0 convention).
    """
    parents = tuple(sorted(set(int(p) for p in parents)))
    node = int(node)
    if node in parents:
        raise ValueError(f"node {node} cannot be its own parent")
    if not parents:
        return 0.0
    if data.n_records == 0:
        raise UndefinedScoreError("weight is undefined on an empty dataset")
    # Marginalize everything from one sorted-scope table so repeated queries
    # (here, via ScoreCache, or with permuted parent input) agree exactly.
    scope = tuple(sorted(parents + (node,)))
    joint = count_joint(data, scope)
    node_axis = scope.index(node)
    h_joint = _entropy_bits(joint.counts, joint.total)
    h_parents = _entropy_bits(joint.counts.sum(axis=node_axis), joint.total)
    other_axes = tuple(a for a in range(len(scope)) if a != node_axis)
    h_node = _entropy_bits(joint.counts.sum(axis=other_axes), joint.total)
    return h_node + h_parents - h_joint


def _parameter_count(structure: NetworkStructure, node: int) -> int:
    rows = 1
    for p in structure.parents[node]:
        rows *= structure.variables[p].arity
    return (structure.variables[node].arity - 1) * rows


def structure_encoding_length(structure: NetworkStructure, config: EncodingConfig) -> float:
    """Bits needed to store the network itself: each node's parent list
    (k_i * log2(n) bits) plus d bits per free conditional probability."""
    n = structure.n
    log_n = math.log2(n) if n > 1 else 0.0
    total = 0.0
    for i in range(n):
        total += len(structure.parents[i]) * log_n + config.d * _parameter_count(structure, i)
    return total


def node_description_length(
    data: Dataset, node: int, parents: Iterable[int], config: EncodingConfig
) -> float:
    """Description length of one node with respect to a candidate parent
    set: parent-list bits plus table-storage bits minus N times the mutual
    information credit."""
    parents = tuple(sorted(set(int(p) for p in parents)))
    if data.n_records == 0:
        raise UndefinedScoreError("node description length is undefined on an empty dataset")
    n = data.n_variables
    log_n = math.log2(n) if n > 1 else 0.0
    rows = 1
    for p in parents:
        rows *= data.schema[p].arity
    table_bits = (data.schema[node].arity - 1) * rows * config.d
    return len(parents) * log_n + table_bits - data.n_records * weight(data, node, parents)


@dataclass(frozen=True)
class ScoreLedger:
    """Per-node description lengths and their sum (the relative total
    description length); `entropy` optionally carries the data-dependent
    constant that upgrades the sum to the full description length."""

    per_node: tuple[float, ...]
    total: float
    entropy: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "per_node", tuple(float(x) for x in self.per_node))
        s = math.fsum(self.per_node)
        scale = max(abs(s), abs(self.total), 1.0)
        if abs(s - self.total) > LEDGER_REL_TOL * scale:
            raise ValueError(f"ledger total {self.total} != sum of node lengths {s}")


def relative_total_dl(
    data: Dataset, structure: NetworkStructure, config: EncodingConfig
) -> ScoreLedger:
    """Sum of per-node description lengths; sufficient for ranking candidate
    networks on fixed data (lower is better)."""
    per_node = tuple(
        node_description_length(data, i, structure.parents[i], config)
        for i in range(structure.n)
    )
    return ScoreLedger(per_node, math.fsum(per_node))


def entropy_term(data: Dataset) -> float:
    """N times the summed empirical marginal entropies of all variables;
    constant across candidate structures for fixed data."""
    if data.n_records == 0:
        raise UndefinedScoreError("entropy term is undefined on an empty dataset")
    total = 0.0
    for i in range(data.n_variables):
        table = count_joint(data, (i,))
        total += _entropy_bits(table.counts, table.total)
    return data.n_records * total


def total_description_length(
    data: Dataset, structure: NetworkStructure, config: EncodingConfig
) -> float:
    """Full description length: relative total plus the entropy constant.
    Ranks structures identically to `relative_total_dl`."""
    return relative_total_dl(data, structure, config).total + entropy_term(data)


def data_encoding_length_direct(data: Dataset, network: ParameterizedNetwork) -> float:
    """Bits to encode the dataset with per-event code lengths of
    -log2(model probability), summed record by record.

    This is the slow, direct form used to cross-check the decomposed score;
    it requires the model to give every observed record nonzero probability.
    """
    structure = network.structure
    if len(data.schema) != structure.n or any(
        dv.arity != sv.arity for dv, sv in zip(data.schema, structure.variables)
    ):
        raise ValueError("dataset schema does not match the network's variables")
    N = data.n_records
    if N == 0:
        return 0.0
    total = 0.0
    for i in range(structure.n):
        rows = np.zeros(N, dtype=np.int64)
        for p in structure.parents[i]:
            rows = rows * structure.variables[p].arity + data.records[:, p]
        probs = network.cpts[i][rows, data.records[:, i]]
        zero = np.nonzero(probs == 0.0)[0]
        if zero.size:
            raise ZeroProbabilityRecordError(
                f"record {int(zero[0])} has model probability 0 "
                f"(variable {structure.variables[i].name!r})"
            )
        total -= float(np.log2(probs).sum())
    return total


class ScoreCache:
    """Memoizes joint entropies and node description lengths per
    (node, parent set) for one dataset and encoding configuration.

    The search re-scores the same families many times; caching is purely an
    implementation aid (identical queries return identical values).
    """

    def __init__(self, data: Dataset, config: EncodingConfig):
        if data.n_records == 0:
            raise UndefinedScoreError("scores are undefined on an empty dataset")
        self.data = data
        self.config = config
        self._n = data.n_variables
        self._log_n = math.log2(self._n) if self._n > 1 else 0.0
        self._arities = data.arities
        self._entropy: dict[tuple[int, ...], float] = {}
        self._dl: dict[tuple[int, tuple[int, ...]], float] = {}

    def entropy(self, scope: tuple[int, ...]) -> float:
        h = self._entropy.get(scope)
        if h is None:
            table = count_joint(self.data, scope)
            h = _entropy_bits(table.counts, table.total)
            self._entropy[scope] = h
        return h

    def weight(self, node: int, parents: tuple[int, ...]) -> float:
        if not parents:
            return 0.0
        scope = tuple(sorted(parents + (node,)))
        return self.entropy((node,)) + self.entropy(parents) - self.entropy(scope)

    def dl(self, node: int, parents: Iterable[int]) -> float:
        parents = tuple(sorted(parents))
        key = (node, parents)
        val = self._dl.get(key)
        if val is None:
            rows = 1
            for p in parents:
                rows *= self._arities[p]
            val = (
                len(parents) * self._log_n
                + (self._arities[node] - 1) * rows * self.config.d
                - self.data.n_records * self.weight(node, parents)
            )
            self._dl[key] = val
        return val

    def dl_sum(self, structure: NetworkStructure) -> float:
        return math.fsum(self.dl(i, structure.parents[i]) for i in range(structure.n))

    def ledger(self, structure: NetworkStructure) -> ScoreLedger:
        per_node = tuple(self.dl(i, structure.parents[i]) for i in range(structure.n))
        return ScoreLedger(per_node, math.fsum(per_node))
