# -*- coding: utf-8 -*-
"""
This module contains brute-force ground truth for flow existence, minimal depth and maximally delayed layers on tiny
labelled open graphs. It shares no search code with the finder:

    * brute_delayed_layers grows layers from the outputs and isolated vertices, testing each remaining vertex by
      enumerating every correction vector supported on the vertices already placed.
    * brute_min_depth enumerates every ordered partition of the vertices and, column by column, every vector of
      Z_d^V as a candidate column of C.
"""
import functools
import itertools
import logging
from dataclasses import dataclass
from typing import Callable, Dict, FrozenSet, Iterator, List, Optional, Tuple

import dask.bag as db
import numpy as np

from zdflow import utils
from zdflow.errors import InstanceTooLarge
from zdflow.finder import find_flow
from zdflow.flow import ZdFlow, flow_to_json, validate_flow
from zdflow.gfp import FieldMatrix
from zdflow.graph import LabelledOpenGraph, isolated_vertices, sort_vertices

logger = logging.getLogger(__name__)

Layers = Tuple[FrozenSet[str], ...]


@dataclass
class OracleReport:
    exists: bool
    min_depth: Optional[int] = None
    delayed_layers: Optional[Layers] = None
    witness: Optional[ZdFlow] = None

    def to_json(self) -> dict:
        return {
            "exists": self.exists,
            "min_depth": self.min_depth,
            "delayed_layers": [sort_vertices(layer) for layer in self.delayed_layers]
            if self.delayed_layers is not None
            else None,
            "witness": flow_to_json(self.witness) if self.witness is not None else None,
        }


def _check_size(lg: LabelledOpenGraph, max_vertices: int = None, max_modulus: int = None) -> None:
    max_vertices = max_vertices if max_vertices is not None else utils.get_setting("oracle", "max_vertices")
    max_modulus = max_modulus if max_modulus is not None else utils.get_setting("oracle", "max_modulus")
    if len(lg.vertices) > max_vertices:
        raise InstanceTooLarge(f"The oracle handles at most {max_vertices} vertices, got {len(lg.vertices)}.")
    if lg.d > max_modulus:
        raise InstanceTooLarge(f"The oracle handles d <= {max_modulus}, got {lg.d}.")


def _all_vectors(d: int, length: int) -> np.ndarray:
    """every vector of Z_d^length as rows, in lexicographic order"""
    if length == 0:
        return np.zeros((1, 0), dtype=np.int64)
    return np.array(list(itertools.product(range(d), repeat=length)), dtype=np.int64)


def _correctable(lg: LabelledOpenGraph, u: str, placed: FrozenSet[str]) -> bool:
    """
    Whether some c with c_u = a, c zero outside placed ∪ {u} and on inputs, gives (Gc)_u = b and
    (Gc)_w = 0 for every w outside placed ∪ {u}.
    """
    graph = lg.graph
    d = lg.d
    a, b = lg.labels[u]
    if u in graph.inputs and a != 0:
        return False
    free = [graph.index(w) for w in graph.ordered(placed) if w not in graph.inputs and w != u]
    candidates = np.zeros((d ** len(free), len(graph)), dtype=np.int64)
    candidates[:, free] = _all_vectors(d, len(free))
    candidates[:, graph.index(u)] = a
    gc = (candidates @ graph.adjacency.entries) % d
    others = [graph.index(w) for w in graph.vertices if w not in placed and w != u]
    ok = gc[:, graph.index(u)] == b
    if others:
        ok &= ~gc[:, others].any(axis=1)
    return bool(ok.any())


def brute_delayed_layers(lg: LabelledOpenGraph, max_vertices: int = None, max_modulus: int = None) -> Optional[Layers]:
    """
    Maximally delayed layers from their closed form: layer 0 is the outputs and isolated vertices, layer k the
    remaining vertices correctable from the union of earlier layers.

    :return: the layers, layer 0 first, or None when some round places nothing.
    :raises: InstanceTooLarge.
    """
    _check_size(lg, max_vertices, max_modulus)
    graph = lg.graph
    outputs = frozenset(graph.outputs)
    layer0 = outputs | isolated_vertices(graph)
    for u in sort_vertices(layer0 - outputs):
        if not _correctable(lg, u, outputs):
            return None
    layers = [frozenset(layer0)]
    placed = frozenset(layer0)
    while len(placed) < len(graph):
        layer = frozenset(u for u in graph.vertices if u not in placed and _correctable(lg, u, placed))
        if not layer:
            return None
        layers.append(layer)
        placed |= layer
    return tuple(layers)


def ordered_partitions(n: int, blocks: int) -> Iterator[Tuple[int, ...]]:
    """
    Surjective block assignments of n items onto 0..blocks-1 in lexicographic order; each one is an ordered
    partition.
    """
    for assignment in itertools.product(range(blocks), repeat=n):
        if len(set(assignment)) == blocks:
            yield assignment


def _column_checker(lg: LabelledOpenGraph) -> Callable[[int, FrozenSet[int]], Optional[int]]:
    """
    Returns check(j, blocked) giving the index of the first vector of Z_d^V usable as column j of C when the
    rows in blocked must vanish in C and GC, or None.
    """
    graph = lg.graph
    d = lg.d
    candidates = _all_vectors(d, len(graph))
    gc = (candidates @ graph.adjacency.entries) % d
    input_rows = graph.indices(graph.inputs)
    base = ~candidates[:, input_rows].any(axis=1) if input_rows else np.ones(len(candidates), dtype=bool)

    @functools.lru_cache(maxsize=None)
    def check(j: int, blocked: FrozenSet[int]) -> Optional[int]:
        v = graph.vertices[j]
        ok = base.copy()
        if v in graph.outputs:
            ok &= ~candidates.any(axis=1)
        else:
            a, b = lg.labels[v]
            ok &= (candidates[:, j] == a) & (gc[:, j] == b)
        if blocked:
            rows = sorted(blocked)
            ok &= ~candidates[:, rows].any(axis=1) & ~gc[:, rows].any(axis=1)
        hits = np.flatnonzero(ok)
        return int(hits[0]) if hits.size else None

    check.candidates = candidates
    return check


def _partition_witness(item: Tuple[int, Tuple[int, ...]], check: Callable, n: int) -> Optional[Tuple[int, tuple]]:
    """column choices for one ordered partition, or None when some column has no candidate"""
    index, assignment = item
    columns = []
    for j in range(n):
        blocked = frozenset(u for u in range(n) if u != j and assignment[u] >= assignment[j])
        choice = check(j, blocked)
        if choice is None:
            return None
        columns.append(choice)
    return index, tuple(columns)


@utils.timeit
def brute_min_depth(
    lg: LabelledOpenGraph, max_vertices: int = None, max_modulus: int = None, scheduler: str = None
) -> OracleReport:
    """
    Minimal flow depth by raw enumeration of ordered partitions, fewest layers first.

    Within a layer count the lexicographically first satisfiable partition is the witness. Large layer counts are
    checked in parallel with dask; merging keeps the smallest enumeration index so the witness is reproducible.

    :return: OracleReport with the witness flow and the maximally delayed layers from brute_delayed_layers.
    :raises: InstanceTooLarge.
    """
    _check_size(lg, max_vertices, max_modulus)
    scheduler = scheduler or utils.get_setting("oracle", "scheduler")
    threshold = utils.get_setting("oracle", "parallel_threshold")
    graph = lg.graph
    n = len(graph)
    check = _column_checker(lg)
    delayed = brute_delayed_layers(lg, max_vertices, max_modulus)

    for blocks in range(1, n + 1):
        items = list(enumerate(ordered_partitions(n, blocks)))
        if len(items) > threshold:
            bag = db.from_sequence(items, npartitions=max(1, min(32, len(items) // threshold + 1)))
            found = [r for r in bag.map(_partition_witness, check=check, n=n).compute(scheduler=scheduler) if r]
        else:
            found = [r for r in (_partition_witness(item, check, n) for item in items) if r]
        if not found:
            continue
        index, columns = min(found)
        assignment = items[index][1]
        correction = np.stack([check.candidates[c] for c in columns], axis=1)
        layers = tuple(
            frozenset(graph.vertices[u] for u in range(n) if assignment[u] == k) for k in range(blocks)
        )
        witness = ZdFlow(FieldMatrix(correction, graph.modulus), layers)
        logger.debug(f"Minimal depth {blocks - 1} with {len(found)} satisfiable partitions")
        return OracleReport(True, blocks - 1, delayed, witness)
    return OracleReport(False, None, delayed, None)


def compare_with_finder(lg: LabelledOpenGraph) -> Dict:
    """
    Run the finder and both oracles and report whether existence, depth and layers agree.
    """
    report = brute_min_depth(lg)
    result = find_flow(lg)
    layers_agree = True
    if result.found and report.delayed_layers is not None:
        layers_agree = tuple(result.flow.layers) == tuple(report.delayed_layers)
    agreement = {
        "exists": result.found == report.exists,
        "depth": result.depth == report.min_depth,
        "layers": layers_agree,
        "witness_valid": report.witness is None or validate_flow(lg, report.witness).valid,
    }
    if not all(agreement.values()):
        logger.error(f"Finder and oracle disagree: {agreement}")
    return {
        "oracle": report.to_json(),
        "finder": {"found": result.found, "depth": result.depth},
        "agreement": agreement,
        "agree": all(agreement.values()),
    }
