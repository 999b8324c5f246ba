# -*- coding: utf-8 -*-
"""
This module contains the Z_d-flow object, its validity conditions, correction synthesis, the induced correction
order and the depth/delay comparison of layer decompositions.

A flow is a correction matrix C over Z_d together with an ordered partition of the vertices into layers. Layers are
indexed from layer 0 (outputs, measured last or never) upwards, so the highest layer is measured first.
"""
import enum
import itertools
import logging
from dataclasses import dataclass
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Tuple

import networkx as nx
import numpy as np

from zdflow.errors import (
    CyclicDependency,
    DimensionMismatch,
    IndexOutOfRange,
    InvalidFlow,
    PartitionMismatch,
)
from zdflow.gfp import FieldMatrix, mat_mul
from zdflow.graph import LabelledOpenGraph, OpenGraph, sort_vertices, vertex_key

logger = logging.getLogger(__name__)

# subsets of Oᶜ are enumerated exhaustively below this size
EXHAUSTIVE_PREFIX_LIMIT = 12


@dataclass(frozen=True, eq=False)
class ZdFlow:
    """
    Correction matrix C (|V| x |V|, canonical vertex order) and layers listed layer 0 first.
    """

    correction: FieldMatrix
    layers: Tuple[FrozenSet[str], ...]

    def __post_init__(self):
        layers = tuple(frozenset(str(v) for v in layer) for layer in self.layers)
        seen = set()
        for k, layer in enumerate(layers):
            # the graph without vertices has the single empty layer
            if not layer and len(layers) > 1:
                raise InvalidFlow(f"Layer {k} is empty.")
            if seen & layer:
                raise InvalidFlow(f"Vertices {sort_vertices(seen & layer)} appear in more than one layer.")
            seen |= layer
        object.__setattr__(self, "layers", layers)

    def __eq__(self, other) -> bool:
        if not isinstance(other, ZdFlow):
            return NotImplemented
        return self.correction == other.correction and self.layers == other.layers

    __hash__ = None

    @property
    def depth(self) -> int:
        return len(self.layers) - 1

    def layer_of(self) -> Dict[str, int]:
        return {v: k for k, layer in enumerate(self.layers) for v in layer}

    def totalisation(self) -> List[str]:
        """all vertices, first-measured layer first, canonical order inside a layer"""
        return [v for layer in reversed(self.layers) for v in sort_vertices(layer)]


def depth(flow: ZdFlow) -> int:
    return flow.depth


def layer_at(flow: ZdFlow, k: int) -> FrozenSet[str]:
    """
    :raises: IndexOutOfRange for k outside 0..depth.
    """
    if k < 0 or k >= len(flow.layers):
        raise IndexOutOfRange(f"Layer {k} does not exist; the flow has depth {flow.depth}.")
    return flow.layers[k]


@dataclass(frozen=True)
class FlowReport:
    """
    Outcome of validate_flow. condition is one of "partition", "i", "ii", "iii" when invalid; witness is the
    offending (row, column) vertex pair, or a single vertex for partition failures.
    """

    valid: bool
    condition: Optional[str] = None
    witness: Optional[tuple] = None
    message: str = "valid"

    def to_json(self) -> dict:
        return {
            "valid": self.valid,
            "condition": self.condition,
            "witness": list(self.witness) if self.witness is not None else None,
            "message": self.message,
        }


def _check_dimensions(lg: LabelledOpenGraph, correction: FieldMatrix) -> None:
    n = len(lg.vertices)
    if correction.shape != (n, n):
        raise DimensionMismatch(f"Correction matrix has shape {correction.shape}, the graph has {n} vertices.")
    if correction.modulus != lg.graph.modulus:
        raise DimensionMismatch(f"Correction matrix is over Z_{correction.d}, the graph over Z_{lg.d}.")


def validate_flow(lg: LabelledOpenGraph, flow: ZdFlow) -> FlowReport:
    """
    Check the three flow conditions and report the first violation.

    Scan order: layer partition, then (i) labels on the diagonal, then (ii) C[I, V] = 0 and C[V, O] = 0,
    then (iii) layer triangularity, each row-major in canonical vertex order.

    :param lg: labelled open graph.
    :param flow: candidate flow.
    :return: FlowReport.
    :raises: DimensionMismatch when C does not match the graph.
    """
    _check_dimensions(lg, flow.correction)
    graph = lg.graph
    vertices = graph.vertices
    covered = set().union(*flow.layers) if flow.layers else set()
    for v in vertices:
        if v not in covered:
            return FlowReport(False, "partition", (v,), f"Vertex {v} is in no layer.")
    extra = covered - set(vertices)
    if extra:
        v = sort_vertices(extra)[0]
        return FlowReport(False, "partition", (v,), f"Layer vertex {v} is not in the graph.")

    c = flow.correction.entries
    gc = mat_mul(graph.adjacency, flow.correction).entries

    # (i)
    for v in graph.non_outputs:
        i = graph.index(v)
        actual = (int(c[i, i]), int(gc[i, i]))
        if actual != lg.labels[v]:
            return FlowReport(
                False, "i", (v, v), f"Label of {v} is {lg.labels[v]} but (C, GC) diagonal gives {actual}."
            )

    # (ii)
    for u in graph.ordered(graph.inputs):
        row = c[graph.index(u)]
        if row.any():
            v = vertices[int(np.flatnonzero(row)[0])]
            return FlowReport(False, "ii", (u, v), f"C[{u}, {v}] is nonzero but {u} is an input.")
    output_cols = graph.indices(graph.outputs)
    for i, u in enumerate(vertices):
        for j in output_cols:
            if c[i, j]:
                return FlowReport(False, "ii", (u, vertices[j]), f"C[{u}, {vertices[j]}] is nonzero on an output.")

    # (iii)
    layer = flow.layer_of()
    rank = np.array([layer[v] for v in vertices])
    # a nonzero (u, v) entry needs u in a strictly lower layer than v
    blocked = rank[:, None] >= rank[None, :]
    np.fill_diagonal(blocked, False)
    hits_c = blocked & (c != 0)
    hits_gc = blocked & (gc != 0)
    combined = hits_c | hits_gc
    if combined.any():
        i, j = (int(k) for k in np.argwhere(combined)[0])
        u, v = vertices[i], vertices[j]
        which = "C" if hits_c[i, j] else "GC"
        return FlowReport(
            False,
            "iii",
            (u, v),
            f"{which}[{u}, {v}] is nonzero but {u} (layer {layer[u]}) is not measured after {v} (layer {layer[v]}).",
        )
    return FlowReport(True)


@dataclass(frozen=True, eq=False)
class CorrectionSets:
    """
    Per measured vertex v, the X and Z correction multisets x(v), z(v) as sparse {target: power} maps.
    Their self entries are always zero.
    """

    d: int
    x: Mapping[str, Mapping[str, int]]
    z: Mapping[str, Mapping[str, int]]

    def __post_init__(self):
        if set(self.x) != set(self.z):
            raise InvalidFlow("x and z corrections must share the same domain.")
        clean = {}
        for name in ("x", "z"):
            sets = {}
            for v, targets in getattr(self, name).items():
                reduced = {str(t): int(k) % self.d for t, k in targets.items()}
                reduced = {t: k for t, k in reduced.items() if k}
                if v in reduced:
                    raise InvalidFlow(f"{name}({v}) must not correct {v} itself.")
                sets[str(v)] = reduced
            clean[name] = sets
        object.__setattr__(self, "x", clean["x"])
        object.__setattr__(self, "z", clean["z"])

    @classmethod
    def zero(cls, d: int, domain: Iterable[str]) -> "CorrectionSets":
        domain = list(domain)
        return cls(d, {v: {} for v in domain}, {v: {} for v in domain})

    @property
    def domain(self) -> List[str]:
        return sort_vertices(self.x)

    def __eq__(self, other) -> bool:
        if not isinstance(other, CorrectionSets):
            return NotImplemented
        return self.d == other.d and self.x == other.x and self.z == other.z

    __hash__ = None

    def restrict(self, measured: Iterable[str]) -> "CorrectionSets":
        """keep only the corrections triggered by the given vertices"""
        keep = set(measured)
        return CorrectionSets(
            self.d, {v: t for v, t in self.x.items() if v in keep}, {v: t for v, t in self.z.items() if v in keep}
        )

    def to_json(self) -> dict:
        return {
            v: {
                "x": {t: self.x[v][t] for t in sort_vertices(self.x[v])},
                "z": {t: self.z[v][t] for t in sort_vertices(self.z[v])},
            }
            for v in self.domain
        }


def corrections(lg: LabelledOpenGraph, flow: ZdFlow) -> CorrectionSets:
    """
    x(v) = C[:, v] - a 1_v and z(v) = (GC)[:, v] - b 1_v for every measured v with label (a, b).

    :raises: InvalidFlow when the flow is not valid for the graph.
    """
    report = validate_flow(lg, flow)
    if not report.valid:
        raise InvalidFlow(f"Cannot derive corrections from an invalid flow: {report.message}")
    graph = lg.graph
    c = flow.correction.entries
    gc = mat_mul(graph.adjacency, flow.correction).entries
    x, z = {}, {}
    for v in graph.non_outputs:
        j = graph.index(v)
        a, b = lg.labels[v]
        x_col = c[:, j].copy()
        z_col = gc[:, j].copy()
        x_col[j] = (x_col[j] - a) % lg.d
        z_col[j] = (z_col[j] - b) % lg.d
        x[v] = {graph.vertices[i]: int(x_col[i]) for i in np.flatnonzero(x_col)}
        z[v] = {graph.vertices[i]: int(z_col[i]) for i in np.flatnonzero(z_col)}
    return CorrectionSets(lg.d, x, z)


@dataclass(frozen=True)
class PartialOrder:
    """
    Strict order on measured vertices. (u, v) in relation, written u ≺ v, means the outcome of v feeds a
    correction on u, so v is measured before u.
    """

    elements: FrozenSet[str]
    relation: FrozenSet[Tuple[str, str]]

    def precedes(self, u: str, v: str) -> bool:
        return (u, v) in self.relation

    def dag(self) -> nx.DiGraph:
        """edges point from the earlier-measured vertex to the later one"""
        dag = nx.DiGraph()
        dag.add_nodes_from(sort_vertices(self.elements))
        dag.add_edges_from((v, u) for u, v in self.relation)
        return dag

    def measurement_order(self) -> List[str]:
        """a measurement sequence respecting the order; ties broken by canonical name"""
        return list(nx.lexicographical_topological_sort(self.dag(), key=vertex_key))

    def is_respected_by(self, order: Sequence[str]) -> bool:
        position = {v: i for i, v in enumerate(order)}
        if set(position) != set(self.elements):
            return False
        return all(position[v] < position[u] for u, v in self.relation)

    def is_prefix(self, measured: Iterable[str]) -> bool:
        """whether the set is closed under measured-before"""
        measured = set(measured)
        return all(v in measured for u, v in self.relation if u in measured)

    def measurement_prefixes(self, limit: int = None) -> List[FrozenSet[str]]:
        """
        Sets of vertices that can have been measured at some point of a run, i.e. lowersets of the
        measured-before order, from the empty set to all elements.

        All of them are listed when there are at most `limit` (and the order is small enough to enumerate),
        otherwise the prefixes of measurement_order.
        """
        elements = sort_vertices(self.elements)
        chain = self.measurement_order()
        chain_prefixes = [frozenset(chain[:k]) for k in range(len(chain) + 1)]
        if len(elements) > EXHAUSTIVE_PREFIX_LIMIT:
            return chain_prefixes
        prefixes = []
        for size in range(len(elements) + 1):
            for subset in itertools.combinations(elements, size):
                if self.is_prefix(subset):
                    prefixes.append(frozenset(subset))
                    if limit is not None and len(prefixes) > limit:
                        logger.debug(f"More than {limit} measurement prefixes; using the chain of one order")
                        return chain_prefixes
        return prefixes


def induced_order(c: CorrectionSets) -> PartialOrder:
    """
    Transitive closure of {(u, v) | x(v)_u != 0 or z(v)_u != 0, u != v, u measured}.

    :raises: CyclicDependency when the closure is not a strict order.
    """
    elements = frozenset(c.x)
    generators = set()
    for v in c.domain:
        for u in set(c.x[v]) | set(c.z[v]):
            if u in elements and u != v:
                generators.add((u, v))
    dag = nx.DiGraph()
    dag.add_nodes_from(elements)
    dag.add_edges_from((v, u) for u, v in generators)
    if not nx.is_directed_acyclic_graph(dag):
        cycle = [edge[0] for edge in nx.find_cycle(dag)]
        raise CyclicDependency(f"Corrections depend on each other in a cycle: {cycle}", cycle)
    closure = nx.transitive_closure_dag(dag)
    relation = frozenset((u, v) for v, u in closure.edges())
    return PartialOrder(elements, relation)


def check_triangular_form(lg: LabelledOpenGraph, correction: FieldMatrix, order: Sequence[str]) -> bool:
    """
    Whether C and GC become lower triangular once rows and columns follow `order` (first-measured first),
    with labels on the diagonal, no C rows on inputs and no C columns on outputs.
    """
    _check_dimensions(lg, correction)
    graph = lg.graph
    if len(order) != len(graph.vertices) or set(order) != set(graph.vertices):
        logger.warning("check_triangular_form needs an order covering every vertex once")
        return False
    c = correction.entries
    gc = mat_mul(graph.adjacency, correction).entries
    for v in graph.non_outputs:
        i = graph.index(v)
        if (int(c[i, i]), int(gc[i, i])) != lg.labels[v]:
            return False
    if c[graph.indices(graph.inputs), :].any() or c[:, graph.indices(graph.outputs)].any():
        return False
    perm = [graph.index(v) for v in order]
    c_perm = c[np.ix_(perm, perm)]
    gc_perm = gc[np.ix_(perm, perm)]
    return not (np.triu(c_perm, k=1).any() or np.triu(gc_perm, k=1).any())


class Delay(str, enum.Enum):
    MORE = "more"
    NOT_MORE = "not-more"
    INCOMPARABLE = "incomparable"


def _prefix_sizes(layers: Sequence[Iterable[str]], length: int) -> List[int]:
    sizes, total = [], 0
    for k in range(length):
        if k < len(layers):
            total += len(layers[k])
        sizes.append(total)
    return sizes


def is_more_delayed(lam: Sequence[Iterable[str]], phi: Sequence[Iterable[str]]) -> Delay:
    """
    Compare cumulative prefix sizes |Λ_0 ∪ ... ∪ Λ_k| against those of Φ.

    :return: MORE when every prefix is at least as large and one is larger, INCOMPARABLE when they cross,
        NOT_MORE otherwise.
    :raises: PartitionMismatch when the two do not partition the same vertex set.
    """
    lam = [frozenset(layer) for layer in lam]
    phi = [frozenset(layer) for layer in phi]
    for name, layers in (("first", lam), ("second", phi)):
        if sum(len(layer) for layer in layers) != len(frozenset().union(*layers)):
            raise PartitionMismatch(f"The {name} layer decomposition is not a partition.")
    if frozenset().union(*lam) != frozenset().union(*phi):
        raise PartitionMismatch("The layer decompositions cover different vertex sets.")
    length = max(len(lam), len(phi))
    ours, theirs = _prefix_sizes(lam, length), _prefix_sizes(phi, length)
    larger = any(a > b for a, b in zip(ours, theirs))
    smaller = any(a < b for a, b in zip(ours, theirs))
    if larger and smaller:
        return Delay.INCOMPARABLE
    if larger:
        return Delay.MORE
    return Delay.NOT_MORE


def flow_to_json(flow: ZdFlow) -> dict:
    return {"C": flow.correction.to_list(), "layers": [sort_vertices(layer) for layer in flow.layers]}


def parse_flow(data: Mapping, graph: OpenGraph) -> ZdFlow:
    """read {"C": [[...]], "layers": [[...], ...]} with layers listed layer 0 first"""
    if not isinstance(data, Mapping) or "C" not in data or "layers" not in data:
        raise InvalidFlow("A flow file must hold a json object with 'C' and 'layers'.")
    correction = FieldMatrix(np.array(data["C"], dtype=np.int64).reshape(-1, len(graph)), graph.modulus)
    return ZdFlow(correction, tuple(frozenset(layer) for layer in data["layers"]))


def schedule_report(lg: LabelledOpenGraph, flow: ZdFlow) -> dict:
    """
    Execution schedule: rounds in measurement order, each with its layer index, measured vertices and their
    correction sets.
    """
    sets = corrections(lg, flow)
    outputs = lg.outputs
    rounds = []
    for k in range(flow.depth, -1, -1):
        measured = [v for v in sort_vertices(flow.layers[k]) if v not in outputs]
        if not measured:
            continue
        rounds.append(
            {
                "round": len(rounds) + 1,
                "layer": k,
                "measure": measured,
                "corrections": {v: sets.to_json()[v] for v in measured},
            }
        )
    return {"depth": flow.depth, "rounds": rounds, "outputs": sort_vertices(outputs)}


def format_schedule(schedule: dict) -> str:
    """human readable version of schedule_report"""
    lines = [f"depth {schedule['depth']}"]
    for entry in schedule["rounds"]:
        lines.append(f"round {entry['round']} (layer {entry['layer']}): measure {', '.join(entry['measure'])}")
        for v, sets in entry["corrections"].items():
            parts = [f"X^{k}·{t}" for t, k in sets["x"].items()] + [f"Z^{k}·{t}" for t, k in sets["z"].items()]
            lines.append(f"    {v} -> {' '.join(parts) if parts else 'no corrections'}")
    lines.append(f"outputs: {', '.join(schedule['outputs']) if schedule['outputs'] else 'none'}")
    return "\n".join(lines)
