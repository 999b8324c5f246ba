# -*- coding: utf-8 -*-
"""
This module finds maximally delayed Z_d-flows, which have minimal depth among all flows of a labelled open graph.

Layer 0 is the outputs together with the isolated vertices. Every following round looks for the unfinished vertices
v with label (a, b) for which

    G[Oᶜ, O \\ I] c = b 1_v - a G[Oᶜ, v]

has a solution c, where O is everything placed so far. The systems of one round share their coefficient matrix and
are solved with a single echelon reduction. The round's solvable vertices form the next layer and write
C[O \\ I, v] = c, C[v, v] = a. The search stops with a flow once every vertex is placed, and with no flow when a
round places nothing.
"""
import enum
import logging
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Dict, FrozenSet, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from zdflow import utils
from zdflow.flow import ZdFlow, format_schedule, schedule_report
from zdflow.gfp import EliminationStats, FieldMatrix, Solution, solve_all
from zdflow.graph import (
    Label,
    Labelling,
    LabelledOpenGraph,
    OpenGraph,
    isolated_vertices,
    load_graph,
    sort_vertices,
    submatrix,
    validate_labelling,
)

logger = logging.getLogger(__name__)


class Outcome(str, enum.Enum):
    FOUND = "found"
    NO_FLOW = "no-flow"


@dataclass
class FinderStatistics:
    layers: int = 0
    systems_solved: int = 0
    row_operations: int = 0
    field_operations: int = 0

    @classmethod
    def from_elimination(cls, layers: int, stats: EliminationStats) -> "FinderStatistics":
        return cls(layers, stats.systems, stats.row_operations, stats.field_operations)

    def to_json(self) -> dict:
        return {
            "layers": self.layers,
            "systems_solved": self.systems_solved,
            "row_operations": self.row_operations,
            "field_operations": self.field_operations,
        }


@dataclass
class FinderResult:
    """
    :param outcome: FOUND or NO_FLOW.
    :param flow: the maximally delayed flow when found.
    :param labels: the labelling the flow is valid for (completed by the any-labelling search).
    :param statistics: rounds and elimination work.
    :param stuck: unfinished vertices of the round that placed nothing.
    """

    outcome: Outcome
    flow: Optional[ZdFlow] = None
    labels: Labelling = field(default_factory=dict)
    statistics: FinderStatistics = field(default_factory=FinderStatistics)
    stuck: FrozenSet[str] = frozenset()

    @property
    def found(self) -> bool:
        return self.outcome == Outcome.FOUND

    @property
    def depth(self) -> Optional[int]:
        return self.flow.depth if self.flow is not None else None


class _Search:
    """State of one layer-by-layer search over a graph. Single use."""

    def __init__(self, graph: OpenGraph, labels: Mapping[str, Label], batched: bool):
        self.graph = graph
        self.d = graph.d
        self.labels: Dict[str, Label] = dict(labels)
        self.batched = batched
        self.correction = np.zeros((len(graph), len(graph)), dtype=np.int64)
        self.stats = EliminationStats()
        self.layers: List[FrozenSet[str]] = []

    def _result(self, outcome: Outcome, stuck: FrozenSet[str] = frozenset()) -> FinderResult:
        statistics = FinderStatistics.from_elimination(len(self.layers), self.stats)
        flow = None
        if outcome == Outcome.FOUND:
            flow = ZdFlow(FieldMatrix(self.correction, self.graph.modulus), tuple(self.layers))
        return FinderResult(outcome, flow, dict(self.labels), statistics, stuck)

    def _place_isolated(self, free: bool) -> Optional[str]:
        """
        Isolated vertices join layer 0. A measured one is correctable only with a label (a, 0) and outside I.

        :return: the first vertex that cannot be corrected, if any.
        """
        graph = self.graph
        for u in sort_vertices(isolated_vertices(graph) - graph.outputs):
            if free and u not in self.labels and u not in graph.inputs:
                self.labels[u] = (1, 0)
            label = self.labels.get(u)
            if label is None or label[1] != 0 or u in graph.inputs:
                return u
            self.correction[graph.index(u), graph.index(u)] = label[0]
        return None

    def _rhs(self, rows: Sequence[str], v: str, a: int, b: int) -> np.ndarray:
        """b 1_v - a G[rows, v] as a flat array"""
        g_col = submatrix(self.graph, rows, [v]).entries[:, 0]
        target = np.array([b if w == v else 0 for w in rows], dtype=np.int64)
        return (target - a * g_col) % self.d

    def _write(self, cols: Sequence[str], v: str, c: np.ndarray, a: int) -> None:
        j = self.graph.index(v)
        for w, value in zip(cols, c):
            self.correction[self.graph.index(w), j] = int(value)
        self.correction[j, j] = a

    def _solve_fixed(self, coefficients: FieldMatrix, rows: List[str], vertices: List[str]) -> List[Solution]:
        if not vertices:
            return []
        rhs = np.stack([self._rhs(rows, v, *self.labels[v]) for v in vertices], axis=1)
        rhs = FieldMatrix(rhs.reshape(len(rows), len(vertices)), self.graph.modulus)
        if self.batched:
            return solve_all(coefficients, rhs, self.stats)
        # per-vertex debug mode
        return [solve_all(coefficients, rhs.column(k), self.stats)[0] for k in range(len(vertices))]

    def _solve_free(self, coefficients: FieldMatrix, rows: List[str], v: str) -> Optional[Tuple[np.ndarray, Label]]:
        """
        Label unknown: inputs take (0, 1); other vertices first try a = 1 with b free, then b = 1 with a free.

        :return: (c, label) or None.
        """
        m = self.graph.modulus
        n_cols = coefficients.cols
        e_v = np.array([1 if w == v else 0 for w in rows], dtype=np.int64)
        g_col = submatrix(self.graph, rows, [v]).entries[:, 0]
        if v in self.graph.inputs:
            solution = solve_all(coefficients, FieldMatrix(e_v.reshape(-1, 1), m), self.stats)[0]
            return (solution.x.flat(), (0, 1)) if solution.solvable else None
        # a = 1:  A c - b e_v = -G[rows, v]
        extended = FieldMatrix(np.concatenate([coefficients.entries, -e_v[:, None]], axis=1), m)
        solution = solve_all(extended, FieldMatrix((-g_col).reshape(-1, 1), m), self.stats)[0]
        if solution.solvable:
            values = solution.x.flat()
            return values[:n_cols], (1, values[n_cols])
        # b = 1:  A c + a G[rows, v] = e_v
        extended = FieldMatrix(np.concatenate([coefficients.entries, g_col[:, None]], axis=1), m)
        solution = solve_all(extended, FieldMatrix(e_v.reshape(-1, 1), m), self.stats)[0]
        if solution.solvable:
            values = solution.x.flat()
            return values[:n_cols], (values[n_cols], 1)
        return None

    def run(self, free: bool = False) -> FinderResult:
        graph = self.graph
        blocked = self._place_isolated(free)
        layer0 = frozenset(graph.outputs | isolated_vertices(graph))
        self.layers.append(layer0)
        if blocked is not None:
            logger.warning(f"Isolated vertex {blocked} cannot be corrected with label {self.labels.get(blocked)}")
            return self._result(Outcome.NO_FLOW, frozenset([blocked]))
        solved = set(layer0)
        logger.debug(f"Layer 0: {sort_vertices(layer0)}")

        while len(solved) < len(graph):
            rows = [v for v in graph.vertices if v not in solved]
            cols = [w for w in graph.vertices if w in solved and w not in graph.inputs]
            coefficients = submatrix(graph, rows, cols)
            layer = set()

            fixed = [v for v in rows if v in self.labels]
            # an input can only be corrected with a label (0, b)
            fixed = [v for v in fixed if not (v in graph.inputs and self.labels[v][0] != 0)]
            for v, solution in zip(fixed, self._solve_fixed(coefficients, rows, fixed)):
                if solution.solvable:
                    self._write(cols, v, solution.x.flat(), self.labels[v][0])
                    layer.add(v)

            if free:
                for v in [v for v in rows if v not in self.labels]:
                    found = self._solve_free(coefficients, rows, v)
                    if found is not None:
                        c, label = found
                        self.labels[v] = label
                        self._write(cols, v, c, label[0])
                        layer.add(v)

            if not layer:
                stuck = frozenset(rows)
                logger.warning(f"No flow: round {len(self.layers)} corrects none of {rows}")
                return self._result(Outcome.NO_FLOW, stuck)
            self.layers.append(frozenset(layer))
            solved |= layer
            logger.debug(f"Layer {len(self.layers) - 1}: {sort_vertices(layer)}")

        logger.info(f"Found a flow of depth {len(self.layers) - 1} on {len(graph)} vertices")
        return self._result(Outcome.FOUND)


def find_flow(lg: LabelledOpenGraph, batched: bool = None) -> FinderResult:
    """
    Maximally delayed flow of a labelled open graph.

    :param lg: labelled open graph.
    :param batched: one echelon reduction per round (default from the finder.batched setting); False solves
        every vertex separately.
    :return: FinderResult; a found flow passes validate_flow and has minimal depth.
    """
    if batched is None:
        batched = utils.get_setting("finder", "batched")
    return _Search(lg.graph, lg.labels, batched).run(free=False)


def find_flow_any_labelling(graph: OpenGraph, fixed: Mapping[str, Label] = None) -> FinderResult:
    """
    Maximally delayed flow where the labels of unlabelled non-outputs are chosen by the search.

    Labels equal up to a scalar give the same measurement spaces, so fixing one coordinate to 1 loses nothing.
    When both choices work for a vertex the a = 1 solution is kept.

    :param graph: open graph.
    :param fixed: labels that must be kept.
    :return: FinderResult whose labels field is the completed labelling.
    """
    fixed = validate_labelling(graph, fixed or {}, total=False)
    return _Search(graph, fixed, batched=True).run(free=True)


def run(graph_file: Union[str, Path], batched: bool = None) -> FinderResult:
    """find a flow for a graph file and log the schedule"""
    start = datetime.now()
    lg = load_graph(graph_file)
    result = find_flow(lg, batched=batched)
    if result.found:
        logger.info(f"\n{format_schedule(schedule_report(lg, result.flow))}")
    else:
        logger.info(f"No flow; stuck vertices {sort_vertices(result.stuck)}")
    logger.info(f"Finder runtime: {datetime.now() - start}")
    return result


if __name__ == "__main__":
    from zdflow import logs

    logs.setup_logging()
    run(utils.PACKAGE_ROOT / "configs" / "examples" / "path.json")
