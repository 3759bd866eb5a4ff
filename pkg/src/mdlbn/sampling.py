"""Forward (logic) sampling, maximum-likelihood parameter fitting, and
structural comparison of networks.

Sampling uses numpy's PCG64 generator (`numpy.random.default_rng`), so a
given seed reproduces the same dataset byte for byte on any platform.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    Dataset,
    NetworkStructure,
    ParameterizedNetwork,
    SchemaError,
    UndefinedScoreError,
    topological_order,
)


def logic_sample(network: ParameterizedNetwork, count: int, seed: int) -> Dataset:
    """Draw `count` complete records from the network by visiting nodes in a
    topological order and sampling each node's value from the table row
    selected by its already-drawn parents."""
    structure = network.structure
    n = structure.n
    rng = np.random.default_rng(seed)
    records = np.zeros((count, n), dtype=np.int64)
    if count:
        for node in topological_order(structure):
            rows = np.zeros(count, dtype=np.int64)
            for p in structure.parents[node]:
                rows = rows * structure.variables[p].arity + records[:, p]
            probs = network.cpts[node][rows]
            cum = np.cumsum(probs, axis=1)
            u = rng.random(count)
            values = (u[:, None] >= cum).sum(axis=1)
            records[:, node] = np.minimum(values, structure.variables[node].arity - 1)
    return Dataset(structure.variables, records)


def fit_parameters(
    structure: NetworkStructure, data: Dataset, pseudocount: float = 0.0
) -> ParameterizedNetwork:
    """Estimate conditional probability tables from frequency counts.

    Each table cell gets (count + pseudocount) / (row count + pseudocount *
    arity). With pseudocount 0 these are the plain relative frequencies,
    and rows whose parent configuration never occurs are set to uniform.
    """
    if len(data.schema) != structure.n or any(
        dv.arity != sv.arity for dv, sv in zip(data.schema, structure.variables)
    ):
        raise SchemaError("dataset schema does not match the structure's variables")
    if data.n_records == 0:
        raise UndefinedScoreError("cannot fit parameters to an empty dataset")
    if pseudocount < 0:
        raise ValueError("pseudocount must be nonnegative")
    tables = []
    for i in range(structure.n):
        s = structure.variables[i].arity
        rows = 1
        code = np.zeros(data.n_records, dtype=np.int64)
        for p in structure.parents[i]:
            arity = structure.variables[p].arity
            code = code * arity + data.records[:, p]
            rows *= arity
        code = code * s + data.records[:, i]
        counts = np.bincount(code, minlength=rows * s).reshape(rows, s).astype(np.float64)
        counts += pseudocount
        row_totals = counts.sum(axis=1, keepdims=True)
        empty = row_totals[:, 0] == 0
        counts[empty] = 1.0
        row_totals[empty] = float(s)
        tables.append(counts / row_totals)
    return ParameterizedNetwork(structure, tuple(tables))


@dataclass(frozen=True)
class StructureDiff:
    """Arc-level differences between two networks over the same variables.

    missing: arcs of the reference network whose adjacency is absent from
        the learned one; extra: learned arcs whose adjacency is absent from
        the reference; reversed: shared adjacencies pointing the other way
        (reported in the reference's direction).
    """

    missing: frozenset[tuple[int, int]]
    extra: frozenset[tuple[int, int]]
    reversed: frozenset[tuple[int, int]]

    @property
    def total_errors(self) -> int:
        return len(self.missing) + len(self.extra) + len(self.reversed)


def compare_structures(learned: NetworkStructure, original: NetworkStructure) -> StructureDiff:
    """Classify every adjacency of either network as matching, missing,
    extra, or reversed, relative to `original`."""
    if learned.variables != original.variables:
        raise SchemaError("structures are over different variable lists")
    learned_arcs = set(learned.arcs())
    original_arcs = set(original.arcs())
    learned_adj = {frozenset(a) for a in learned_arcs}
    original_adj = {frozenset(a) for a in original_arcs}
    missing = frozenset(a for a in original_arcs if frozenset(a) not in learned_adj)
    extra = frozenset(a for a in learned_arcs if frozenset(a) not in original_adj)
    flipped = frozenset(
        (i, j) for (i, j) in original_arcs if (j, i) in learned_arcs
    )
    return StructureDiff(missing, extra, flipped)
