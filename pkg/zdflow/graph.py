# -*- coding: utf-8 -*-
"""
This module contains the labelled open Z_d-graph data model, submatrix and multiset utilities, and the json graph
format.

Vertices are opaque string names. Matrices index them in canonical (natural) sort order, and every result reports
names rather than indices.
"""
import logging
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, FrozenSet, Iterable, Iterator, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from zdflow import utils
from zdflow.errors import InvalidGraph, InvalidLabel, MissingLabel, UnknownVertex, ZeroLabel
from zdflow.gfp import FieldMatrix, PrimeModulus, as_modulus

logger = logging.getLogger(__name__)

Label = Tuple[int, int]
Labelling = Dict[str, Label]

_CHUNKS = re.compile(r"(\d+)")


def vertex_key(name: str) -> tuple:
    """natural sort key, so that "v2" sorts before "v10"."""
    return tuple((0, int(chunk), "") if chunk.isdigit() else (1, 0, chunk) for chunk in _CHUNKS.split(name) if chunk)


def sort_vertices(names: Iterable[str]) -> List[str]:
    return sorted(names, key=vertex_key)


@dataclass(frozen=True, eq=False)
class OpenGraph:
    """
    Loop-free undirected Z_d-weighted graph with input and output vertex sets (which may overlap).

    :param modulus: the prime d.
    :param vertices: vertex names; stored in canonical order.
    :param adjacency: symmetric |V| x |V| matrix over Z_d with zero diagonal, in canonical vertex order.
    :param inputs: I.
    :param outputs: O.
    """

    modulus: PrimeModulus
    vertices: Tuple[str, ...]
    adjacency: FieldMatrix
    inputs: FrozenSet[str] = frozenset()
    outputs: FrozenSet[str] = frozenset()
    _index: Dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        modulus = as_modulus(self.modulus)
        object.__setattr__(self, "modulus", modulus)
        names = [str(v) for v in self.vertices]
        if len(set(names)) != len(names):
            raise InvalidGraph(f"Duplicate vertex names in {names}.")
        ordered = sort_vertices(names)
        adjacency = self.adjacency
        if not isinstance(adjacency, FieldMatrix):
            adjacency = FieldMatrix(np.array(adjacency, dtype=np.int64).reshape(len(names), len(names)), modulus)
        if adjacency.shape != (len(names), len(names)):
            raise InvalidGraph(f"Adjacency shape {adjacency.shape} does not match {len(names)} vertices.")
        if adjacency.modulus != modulus:
            raise InvalidGraph(f"Adjacency is over Z_{adjacency.d}, graph over Z_{modulus.d}.")
        if ordered != names:
            # permute the adjacency given in the caller's order into canonical order
            perm = [names.index(v) for v in ordered]
            adjacency = FieldMatrix(adjacency.entries[np.ix_(perm, perm)], modulus)
        entries = adjacency.entries
        if np.any(np.diag(entries)):
            loop = ordered[int(np.flatnonzero(np.diag(entries))[0])]
            raise InvalidGraph(f"Vertex {loop} has a self loop.")
        if not np.array_equal(entries, entries.T):
            u, v = np.argwhere(entries != entries.T)[0]
            raise InvalidGraph(f"Adjacency is not symmetric at ({ordered[u]}, {ordered[v]}).")
        object.__setattr__(self, "vertices", tuple(ordered))
        object.__setattr__(self, "adjacency", adjacency)
        object.__setattr__(self, "_index", {v: i for i, v in enumerate(ordered)})
        for kind in ("inputs", "outputs"):
            members = frozenset(str(v) for v in getattr(self, kind))
            unknown = members - set(ordered)
            if unknown:
                raise UnknownVertex(f"{kind} contain unknown vertices {sort_vertices(unknown)}.")
            object.__setattr__(self, kind, members)

    @classmethod
    def from_edges(
        cls,
        modulus: Union[PrimeModulus, int],
        vertices: Iterable[str],
        edges: Iterable[Sequence],
        inputs: Iterable[str] = (),
        outputs: Iterable[str] = (),
    ) -> "OpenGraph":
        """
        Build from an edge list [(u, v, weight), ...]. Weights are reduced mod d; negative weights, duplicate
        pairs, self loops and unknown endpoints are rejected.
        """
        modulus = as_modulus(modulus)
        names = sort_vertices(str(v) for v in vertices)
        index = {v: i for i, v in enumerate(names)}
        if len(index) != len(names):
            raise InvalidGraph(f"Duplicate vertex names in {names}.")
        entries = np.zeros((len(names), len(names)), dtype=np.int64)
        seen = set()
        for edge in edges:
            if len(edge) != 3:
                raise InvalidGraph(f"Edge {edge} must be [u, v, weight].")
            u, v, weight = str(edge[0]), str(edge[1]), edge[2]
            for endpoint in (u, v):
                if endpoint not in index:
                    raise UnknownVertex(f"Edge ({u}, {v}) uses unknown vertex {endpoint}.")
            if u == v:
                raise InvalidGraph(f"Edge ({u}, {v}) is a self loop.")
            if isinstance(weight, bool) or not isinstance(weight, (int, np.integer)) or weight < 0:
                raise InvalidGraph(f"Edge ({u}, {v}) has weight {weight!r}; weights are non-negative integers.")
            pair = frozenset((u, v))
            if pair in seen:
                raise InvalidGraph(f"Duplicate edge ({u}, {v}).")
            seen.add(pair)
            entries[index[u], index[v]] = entries[index[v], index[u]] = int(weight) % modulus.d
        return cls(modulus, tuple(names), FieldMatrix(entries, modulus), frozenset(inputs), frozenset(outputs))

    @property
    def d(self) -> int:
        return self.modulus.d

    def __len__(self) -> int:
        return len(self.vertices)

    def __eq__(self, other) -> bool:
        if not isinstance(other, OpenGraph):
            return NotImplemented
        return (
            self.modulus == other.modulus
            and self.vertices == other.vertices
            and self.adjacency == other.adjacency
            and self.inputs == other.inputs
            and self.outputs == other.outputs
        )

    __hash__ = None

    def index(self, vertex: str) -> int:
        try:
            return self._index[vertex]
        except KeyError:
            raise UnknownVertex(f"Unknown vertex {vertex!r}.")

    def indices(self, vertices: Iterable[str]) -> List[int]:
        """canonical-order indices of a vertex set"""
        return sorted(self.index(v) for v in vertices)

    def ordered(self, vertices: Iterable[str]) -> List[str]:
        return [self.vertices[i] for i in self.indices(vertices)]

    def weight(self, u: str, v: str) -> int:
        return self.adjacency[self.index(u), self.index(v)]

    def neighbours(self, u: str) -> Dict[str, int]:
        row = self.adjacency.entries[self.index(u)]
        return {self.vertices[j]: int(row[j]) for j in np.flatnonzero(row)}

    def edges(self) -> Iterator[Tuple[str, str, int]]:
        """weighted edges (u, v, w) with u before v in canonical order"""
        entries = self.adjacency.entries
        for i, j in zip(*np.nonzero(np.triu(entries, k=1))):
            yield self.vertices[i], self.vertices[j], int(entries[i, j])

    @property
    def non_outputs(self) -> Tuple[str, ...]:
        """Oᶜ in canonical order"""
        return tuple(v for v in self.vertices if v not in self.outputs)

    @property
    def non_inputs(self) -> Tuple[str, ...]:
        return tuple(v for v in self.vertices if v not in self.inputs)

    def relabel(self, mapping: Mapping[str, str]) -> "OpenGraph":
        """rename vertices; unmapped names keep their name"""
        rename = {v: str(mapping.get(v, v)) for v in self.vertices}
        return OpenGraph.from_edges(
            self.modulus,
            rename.values(),
            [(rename[u], rename[v], w) for u, v, w in self.edges()],
            [rename[v] for v in self.inputs],
            [rename[v] for v in self.outputs],
        )


def validate_labelling(graph: OpenGraph, labels: Mapping[str, Sequence[int]], total: bool = True) -> Labelling:
    """
    Reduce labels mod d and check them against the graph.

    :param graph: the open graph.
    :param labels: vertex -> (a, b).
    :param total: if True every non-output needs a label.
    :return: the reduced labelling.
    :raises: MissingLabel, ZeroLabel, InvalidLabel, UnknownVertex.
    """
    d = graph.d
    reduced = {}
    for vertex, label in labels.items():
        vertex = str(vertex)
        graph.index(vertex)
        if vertex in graph.outputs:
            raise InvalidLabel(f"Output vertex {vertex} cannot carry a measurement label.")
        if len(label) != 2:
            raise InvalidLabel(f"Label of {vertex} must be a pair [a, b], got {label!r}.")
        a, b = label
        for value in (a, b):
            if isinstance(value, bool) or not isinstance(value, (int, np.integer)) or value < 0:
                raise InvalidLabel(f"Label of {vertex} has entry {value!r}; entries are non-negative integers.")
        a, b = int(a) % d, int(b) % d
        if a == 0 and b == 0:
            raise ZeroLabel(f"Label of {vertex} is (0, 0) mod {d}.")
        reduced[vertex] = (a, b)
    if total:
        missing = [v for v in graph.non_outputs if v not in reduced]
        if missing:
            raise MissingLabel(f"Non-output vertices {missing} have no measurement label.")
    return reduced


@dataclass(frozen=True, eq=False)
class LabelledOpenGraph:
    """An open graph with a measurement-space label (a, b) != (0, 0) on every non-output vertex."""

    graph: OpenGraph
    labels: Mapping[str, Label]

    def __post_init__(self):
        object.__setattr__(self, "labels", validate_labelling(self.graph, self.labels, total=True))

    @property
    def d(self) -> int:
        return self.graph.d

    @property
    def vertices(self) -> Tuple[str, ...]:
        return self.graph.vertices

    @property
    def inputs(self) -> FrozenSet[str]:
        return self.graph.inputs

    @property
    def outputs(self) -> FrozenSet[str]:
        return self.graph.outputs

    def __eq__(self, other) -> bool:
        if not isinstance(other, LabelledOpenGraph):
            return NotImplemented
        return self.graph == other.graph and dict(self.labels) == dict(other.labels)

    __hash__ = None

    def relabel(self, mapping: Mapping[str, str]) -> "LabelledOpenGraph":
        rename = {v: str(mapping.get(v, v)) for v in self.vertices}
        return LabelledOpenGraph(self.graph.relabel(mapping), {rename[v]: lab for v, lab in self.labels.items()})


def submatrix(
    graph: OpenGraph,
    rows: Iterable[str],
    cols: Iterable[str],
    matrix: FieldMatrix = None,
) -> FieldMatrix:
    """
    G[A, B] in canonical vertex order.

    :param graph: supplies the vertex order.
    :param rows: vertex set A.
    :param cols: vertex set B.
    :param matrix: the |V| x |V| matrix to slice, adjacency by default.
    :raises: UnknownVertex.
    """
    matrix = graph.adjacency if matrix is None else matrix
    r = graph.indices(rows)
    c = graph.indices(cols)
    return FieldMatrix(matrix.entries[np.ix_(r, c)].reshape(len(r), len(c)), matrix.modulus)


def indicator(graph: OpenGraph, vertices: Iterable[str]) -> FieldMatrix:
    """column vector 1_S in Z_d^V"""
    column = np.zeros((len(graph), 1), dtype=np.int64)
    column[graph.indices(vertices), 0] = 1
    return FieldMatrix(column, graph.modulus)


def multiset_vector(graph: OpenGraph, multiset: Mapping[str, int]) -> FieldMatrix:
    """sparse {vertex: multiplicity} to a column of Z_d^V"""
    column = np.zeros((len(graph), 1), dtype=np.int64)
    for vertex, count in multiset.items():
        column[graph.index(vertex), 0] += int(count)
    return FieldMatrix(column, graph.modulus)


def multiset_mapping(graph: OpenGraph, column: FieldMatrix) -> Dict[str, int]:
    """column of Z_d^V to sparse {vertex: multiplicity}, zero entries dropped"""
    values = column.entries.reshape(-1)
    return {graph.vertices[i]: int(values[i]) for i in np.flatnonzero(values)}


def isolated_vertices(graph: OpenGraph) -> FrozenSet[str]:
    entries = graph.adjacency.entries
    return frozenset(graph.vertices[i] for i in np.flatnonzero(~entries.any(axis=1)))


def parse_graph(
    data: Mapping,
    allow_partial_labels: bool = False,
    d_override: Optional[int] = None,
) -> Tuple[OpenGraph, Labelling]:
    """
    Read the json graph format
    {"d": int, "vertices": [...], "edges": [[u, v, w], ...], "inputs": [...], "outputs": [...], "labels": {...}}.

    :param data: the decoded json object.
    :param allow_partial_labels: accept missing labels (any-labelling finder).
    :param d_override: modulus to use when the file has no "d"; rejected when it has one.
    :return: the open graph and its (possibly partial) labelling.
    """
    if not isinstance(data, Mapping):
        raise InvalidGraph("A graph file must hold a json object.")
    if "d" in data and d_override is not None:
        raise InvalidGraph("The graph file specifies d; --d-override is not allowed.")
    d = data.get("d", d_override)
    if d is None:
        raise InvalidGraph("The graph file has no modulus d.")
    if "vertices" not in data:
        raise InvalidGraph("The graph file has no 'vertices' entry.")
    graph = OpenGraph.from_edges(
        PrimeModulus(d),
        data["vertices"],
        data.get("edges", []),
        data.get("inputs", []),
        data.get("outputs", []),
    )
    labels = validate_labelling(graph, data.get("labels", {}), total=not allow_partial_labels)
    logger.debug(f"Parsed graph with {len(graph)} vertices over Z_{graph.d}")
    return graph, labels


def load_graph(path: Union[str, Path], d_override: Optional[int] = None) -> LabelledOpenGraph:
    """load a fully labelled graph from a json file"""
    graph, labels = parse_graph(utils.read_json(path), d_override=d_override)
    return LabelledOpenGraph(graph, labels)


def graph_to_json(graph: OpenGraph, labels: Mapping[str, Label] = None) -> dict:
    labels = labels or {}
    return {
        "d": graph.d,
        "vertices": list(graph.vertices),
        "edges": [[u, v, w] for u, v, w in graph.edges()],
        "inputs": graph.ordered(graph.inputs),
        "outputs": graph.ordered(graph.outputs),
        "labels": {v: list(labels[v]) for v in graph.vertices if v in labels},
    }


def random_open_graph(
    n: int,
    d: int,
    rng: np.random.Generator,
    density: float = 0.5,
    n_inputs: int = None,
    n_outputs: int = None,
) -> OpenGraph:
    """
    Random open graph on vertices "1".."n": each pair is an edge with probability `density` and a uniform nonzero
    weight. Inputs and outputs are uniform random subsets of the given sizes (random sizes when omitted).
    """
    names = [str(k) for k in range(1, n + 1)]
    entries = np.triu(rng.integers(1, d, size=(n, n)) * (rng.random((n, n)) < density), k=1)
    entries = entries + entries.T
    n_inputs = rng.integers(0, n + 1) if n_inputs is None else n_inputs
    n_outputs = rng.integers(0, n + 1) if n_outputs is None else n_outputs
    inputs = rng.choice(names, size=n_inputs, replace=False) if n_inputs else []
    outputs = rng.choice(names, size=n_outputs, replace=False) if n_outputs else []
    return OpenGraph(PrimeModulus(d), tuple(names), FieldMatrix(entries, d), frozenset(inputs), frozenset(outputs))


def random_labelling(graph: OpenGraph, rng: np.random.Generator) -> Labelling:
    """a uniform nonzero label for every non-output"""
    d = graph.d
    labels = {}
    for v in graph.non_outputs:
        k = int(rng.integers(1, d * d))
        labels[v] = (k // d, k % d)
    return labels
