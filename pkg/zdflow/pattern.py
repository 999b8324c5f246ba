# -*- coding: utf-8 -*-
"""
This module contains measurement patterns: the command dataclasses, runnability checking, standardization by the
commutation rules and the translation between standard patterns and labelled open graphs with corrections.

Commands are kept in execution order, the first command acts first. Operator notation composes right to left,
so the json format carries a "direction" flag and operator-ordered files are reversed on load.

    N(u)              prepare u in |0:X>
    E(u, v)^w         controlled phase E^w
    M(u, (a, b), θ)   measure u in a basis of M(a, b)
    X(u)^(k m_s)      shift u by k times the outcome of s
    Z(u)^(k m_s)      clock u by k times the outcome of s
"""
import enum
import logging
from collections import defaultdict
from dataclasses import dataclass
from typing import ClassVar, Dict, Iterable, Iterator, List, Mapping, Optional, Sequence, Tuple, Union

from zdflow.errors import NotRunnable, NotStandardForm, OrderViolation, PatternSyntaxError, ZeroLabel
from zdflow.flow import CorrectionSets, ZdFlow, corrections, induced_order
from zdflow.gfp import PrimeModulus, as_modulus
from zdflow.graph import LabelledOpenGraph, OpenGraph, sort_vertices, vertex_key
from zdflow.meas import MeasurementSpec

logger = logging.getLogger(__name__)


class CommandKind(str, enum.Enum):
    N = "N"
    E = "E"
    M = "M"
    X = "X"
    Z = "Z"


@dataclass(frozen=True)
class N:
    node: str
    kind: ClassVar[CommandKind] = CommandKind.N

    def targets(self) -> Tuple[str, ...]:
        return (self.node,)

    def to_json(self) -> dict:
        return {"op": "N", "node": self.node}


@dataclass(frozen=True)
class E:
    """the pair is stored in canonical order"""

    nodes: Tuple[str, str]
    weight: int = 1
    kind: ClassVar[CommandKind] = CommandKind.E

    def __post_init__(self):
        u, v = (str(n) for n in self.nodes)
        if u == v:
            raise PatternSyntaxError(f"E needs two distinct qudits, got ({u}, {v}).")
        object.__setattr__(self, "nodes", tuple(sort_vertices((u, v))))

    def targets(self) -> Tuple[str, ...]:
        return self.nodes

    def to_json(self) -> dict:
        return {"op": "E", "nodes": list(self.nodes), "weight": self.weight}


@dataclass(frozen=True)
class M:
    node: str
    label: Tuple[int, int]
    angles: Tuple[float, ...] = ()
    kind: ClassVar[CommandKind] = CommandKind.M

    def targets(self) -> Tuple[str, ...]:
        return (self.node,)

    def to_json(self) -> dict:
        return {"op": "M", "node": self.node, "label": list(self.label), "angles": list(self.angles)}


@dataclass(frozen=True)
class X:
    node: str
    signal: str
    power: int = 1
    kind: ClassVar[CommandKind] = CommandKind.X

    def targets(self) -> Tuple[str, ...]:
        return (self.node,)

    def to_json(self) -> dict:
        return {"op": "X", "node": self.node, "signal": self.signal, "power": self.power}


@dataclass(frozen=True)
class Z:
    node: str
    signal: str
    power: int = 1
    kind: ClassVar[CommandKind] = CommandKind.Z

    def targets(self) -> Tuple[str, ...]:
        return (self.node,)

    def to_json(self) -> dict:
        return {"op": "Z", "node": self.node, "signal": self.signal, "power": self.power}


Command = Union[N, E, M, X, Z]
Correction = Union[X, Z]


def _reduce(command: Command, d: int) -> Command:
    """reduce weights, powers and labels mod d; fill missing measurement angles with zeros"""
    if isinstance(command, E):
        return E(command.nodes, int(command.weight) % d)
    if isinstance(command, (X, Z)):
        return type(command)(str(command.node), str(command.signal), int(command.power) % d)
    if isinstance(command, M):
        a, b = (int(k) % d for k in command.label)
        if a == 0 and b == 0:
            raise ZeroLabel(f"Measurement of {command.node} has label {tuple(command.label)}, zero mod {d}.")
        angles = tuple(float(t) for t in command.angles) or (0.0,) * (d - 1)
        return M(str(command.node), (a, b), angles)
    return N(str(command.node))


@dataclass(frozen=True)
class Pattern:
    """
    :param d: the prime modulus.
    :param inputs: I, present before the first command.
    :param outputs: O, never measured.
    :param commands: execution order.
    """

    d: int
    inputs: frozenset
    outputs: frozenset
    commands: Tuple[Command, ...]

    def __post_init__(self):
        d = as_modulus(self.d).d
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "inputs", frozenset(str(v) for v in self.inputs))
        object.__setattr__(self, "outputs", frozenset(str(v) for v in self.outputs))
        object.__setattr__(self, "commands", tuple(_reduce(c, d) for c in self.commands))

    def __iter__(self) -> Iterator[Command]:
        return iter(self.commands)

    def __len__(self) -> int:
        return len(self.commands)

    @property
    def measured(self) -> List[str]:
        """vertices in measurement order"""
        return [c.node for c in self.commands if isinstance(c, M)]

    def is_standard(self) -> bool:
        """runnable, with every N before every E and every E before any measurement or correction"""
        stage = 0
        for command in self.commands:
            rank = {CommandKind.N: 0, CommandKind.E: 1}.get(command.kind, 2)
            if rank < stage:
                return False
            stage = rank
        return check_runnable(self).ok


@dataclass(frozen=True)
class RunnableReport:
    ok: bool
    index: Optional[int] = None
    reason: str = "runnable"

    def to_json(self) -> dict:
        return {"runnable": self.ok, "index": self.index, "reason": self.reason}


def check_runnable(pattern: Pattern) -> RunnableReport:
    """
    A pattern is runnable when no command acts on a qudit before its preparation or after its measurement, and
    every correction uses the outcome of a qudit measured earlier. Every non-output must end up measured and every
    output prepared.

    :return: RunnableReport; index is the offending command, or len(pattern) for a failure at the end.
    """
    prepared = set(pattern.inputs)
    measured = set()
    for i, command in enumerate(pattern.commands):
        if isinstance(command, N):
            if command.node in prepared:
                return RunnableReport(False, i, f"{command.node} is prepared twice")
            prepared.add(command.node)
            continue
        for node in command.targets():
            if node not in prepared:
                return RunnableReport(False, i, f"{command.kind.value} acts on {node} before it is prepared")
            if node in measured:
                return RunnableReport(False, i, f"{command.kind.value} acts on {node} after it is measured")
        if isinstance(command, (X, Z)) and command.signal not in measured:
            reason = f"{command.kind.value} on {command.node} uses m{command.signal} before it exists"
            return RunnableReport(False, i, reason)
        if isinstance(command, M):
            if command.node in pattern.outputs:
                return RunnableReport(False, i, f"output {command.node} is measured")
            measured.add(command.node)
    end = len(pattern.commands)
    missing = sort_vertices(pattern.outputs - prepared)
    if missing:
        return RunnableReport(False, end, f"outputs {missing} are never prepared")
    unmeasured = sort_vertices(prepared - measured - pattern.outputs)
    if unmeasured:
        return RunnableReport(False, end, f"non-outputs {unmeasured} are never measured")
    return RunnableReport(True)


def standardize(pattern: Pattern) -> Pattern:
    """
    Rewrite a runnable pattern into standard form: the N block, the E block, then each measurement followed by the
    corrections that use its outcome.

    Moving E^w(u, v) ahead of X(u)^(k m_s) leaves Z(v)^(w k m_s) behind in place of the shift, since
    E^w X_u = X_u Z_v^w E^w. Z commutes with E, and commands on different qudits commute. Corrections on one qudit
    are reordered up to a global phase and merged mod d. Inside a block the order is canonical, so the result
    does not depend on the input order within a block and standardizing twice changes nothing.

    :raises: NotRunnable.
    """
    report = check_runnable(pattern)
    if not report.ok:
        raise NotRunnable(f"Cannot standardize: command {report.index}: {report.reason}", report.index)
    d = pattern.d
    entanglers = [c for c in pattern.commands if isinstance(c, E)]

    weights: Dict[Tuple[str, str], int] = defaultdict(int)
    for command in entanglers:
        weights[command.nodes] = (weights[command.nodes] + command.weight) % d

    tail: List[Command] = []
    for i, command in enumerate(pattern.commands):
        if isinstance(command, (N, E)):
            continue
        tail.append(command)
        if not isinstance(command, X):
            continue
        # every entangler executed after this shift and touching its qudit leaves a clock on the partner
        for later in pattern.commands[i + 1 :]:
            if isinstance(later, E) and command.node in later.nodes:
                partner = later.nodes[1] if later.nodes[0] == command.node else later.nodes[0]
                tail.append(Z(partner, command.signal, later.weight * command.power))

    groups: Dict[str, Dict[Tuple[CommandKind, str], int]] = defaultdict(lambda: defaultdict(int))
    for command in tail:
        if isinstance(command, (X, Z)):
            key = (command.kind, command.node)
            groups[command.signal][key] = (groups[command.signal][key] + command.power) % d

    commands: List[Command] = [N(v) for v in sort_vertices(c.node for c in pattern.commands if isinstance(c, N))]
    commands += [E(pair, w) for pair, w in sorted(weights.items(), key=lambda kv: tuple(map(vertex_key, kv[0]))) if w]
    for command in tail:
        if not isinstance(command, M):
            continue
        commands.append(command)
        group = groups.get(command.node, {})
        for kind, cls in ((CommandKind.Z, Z), (CommandKind.X, X)):
            for node in sort_vertices(t for k, t in group if k == kind):
                if group[(kind, node)]:
                    commands.append(cls(node, command.node, group[(kind, node)]))
    result = Pattern(d, pattern.inputs, pattern.outputs, tuple(commands))
    logger.debug(f"Standardized {len(pattern)} commands into {len(result)}")
    return result


def build_standard_pattern(
    lg: LabelledOpenGraph,
    correction_sets: CorrectionSets,
    measurements: Mapping[str, MeasurementSpec] = None,
    order: Sequence[str] = None,
) -> Pattern:
    """
    Standard-form pattern of a labelled open graph with corrections: N for every non-input, E for every edge, then
    per measured vertex M followed by its Z and X corrections.

    :param measurements: angles per vertex; missing vertices get the reference measurement of their label.
    :param order: measurement sequence, default the canonical order of the corrections.
    :raises: OrderViolation, CyclicDependency.
    """
    graph = lg.graph
    measurements = measurements or {}
    partial = induced_order(correction_sets)
    if order is None:
        order = partial.measurement_order()
    order = [str(v) for v in order]
    if set(order) != set(graph.non_outputs) or not partial.is_respected_by(order):
        raise OrderViolation(f"Measurement order {order} does not respect the correction order.")
    commands: List[Command] = [N(v) for v in graph.non_inputs]
    commands += [E((u, v), w) for u, v, w in graph.edges()]
    for v in order:
        spec = measurements.get(v) or MeasurementSpec.reference(lg.labels[v], lg.d)
        commands.append(M(v, lg.labels[v], spec.angles))
        z_sets, x_sets = correction_sets.z.get(v, {}), correction_sets.x.get(v, {})
        commands += [Z(t, v, z_sets[t]) for t in sort_vertices(z_sets)]
        commands += [X(t, v, x_sets[t]) for t in sort_vertices(x_sets)]
    return Pattern(lg.d, graph.inputs, graph.outputs, tuple(commands))


def from_flow(lg: LabelledOpenGraph, flow: ZdFlow, measurements: Mapping[str, MeasurementSpec] = None) -> Pattern:
    """
    Standard-form pattern with the flow's corrections, measuring the highest layer first.

    :raises: InvalidFlow.
    """
    sets = corrections(lg, flow)
    order = [v for v in flow.totalisation() if v not in lg.outputs]
    return build_standard_pattern(lg, sets, measurements, order)


@dataclass
class ExtractedPattern:
    lg: LabelledOpenGraph
    corrections: CorrectionSets
    measurements: Dict[str, MeasurementSpec]
    order: List[str]


def extract_open_graph(pattern: Pattern) -> ExtractedPattern:
    """
    Read the labelled open graph and correction sets off a standard-form pattern. Repeated entanglers on a pair
    add up mod d and corrections with the same signal and target merge.

    :raises: NotStandardForm.
    """
    if not pattern.is_standard():
        raise NotStandardForm("The pattern is not in standard form; standardize it first.")
    d = pattern.d
    vertices = set(pattern.inputs) | {c.node for c in pattern.commands if isinstance(c, N)}
    weights: Dict[Tuple[str, str], int] = defaultdict(int)
    x: Dict[str, Dict[str, int]] = {}
    z: Dict[str, Dict[str, int]] = {}
    labels, measurements, order = {}, {}, []
    for command in pattern.commands:
        if isinstance(command, E):
            weights[command.nodes] = (weights[command.nodes] + command.weight) % d
        elif isinstance(command, M):
            labels[command.node] = command.label
            measurements[command.node] = MeasurementSpec(command.label, command.angles, d)
            order.append(command.node)
            x.setdefault(command.node, {})
            z.setdefault(command.node, {})
        elif isinstance(command, (X, Z)):
            sets = x if isinstance(command, X) else z
            target = sets[command.signal]
            target[command.node] = (target.get(command.node, 0) + command.power) % d
    graph = OpenGraph.from_edges(
        PrimeModulus(d), vertices, [(u, v, w) for (u, v), w in weights.items() if w], pattern.inputs, pattern.outputs
    )
    return ExtractedPattern(LabelledOpenGraph(graph, labels), CorrectionSets(d, x, z), measurements, order)


DIRECTIONS = ("execution", "operator")


def _field(entry: Mapping, key: str, index: int):
    if key not in entry:
        raise PatternSyntaxError(f"Command {index} ({entry.get('op')}) has no '{key}'.")
    return entry[key]


def _parse_command(entry: Mapping, index: int) -> List[Command]:
    if not isinstance(entry, Mapping) or "op" not in entry:
        raise PatternSyntaxError(f"Command {index} must be an object with an 'op'.")
    op = entry["op"]
    if op == "N":
        return [N(str(_field(entry, "node", index)))]
    if op == "E":
        nodes = _field(entry, "nodes", index)
        if len(nodes) != 2:
            raise PatternSyntaxError(f"Command {index}: E needs exactly two nodes.")
        return [E((str(nodes[0]), str(nodes[1])), int(entry.get("weight", 1)))]
    if op == "M":
        label = _field(entry, "label", index)
        if len(label) != 2:
            raise PatternSyntaxError(f"Command {index}: a label is a pair [a, b].")
        return [M(str(_field(entry, "node", index)), (int(label[0]), int(label[1])), tuple(entry.get("angles", ())))]
    if op in ("X", "Z"):
        cls = X if op == "X" else Z
        signal = str(_field(entry, "signal", index))
        power = int(entry.get("power", 1))
        if "targets" in entry:
            # multiset correction, one command per target
            targets = entry["targets"]
            if not isinstance(targets, Mapping):
                targets = {t: 1 for t in targets}
            return [cls(str(t), signal, power * int(k)) for t, k in targets.items()]
        return [cls(str(_field(entry, "node", index)), signal, power)]
    raise PatternSyntaxError(f"Command {index} has unknown op {op!r}.")


def parse_pattern(data: Mapping, d_override: int = None) -> Pattern:
    """
    Read {"d", "inputs", "outputs", "direction", "commands": [{"op": ...}, ...]}. The direction defaults to
    "execution"; "operator" lists the last executed command first.

    :raises: PatternSyntaxError, ZeroLabel, NonPrimeModulus.
    """
    if not isinstance(data, Mapping) or "commands" not in data:
        raise PatternSyntaxError("A pattern file must hold a json object with 'commands'.")
    if "d" in data and d_override is not None:
        raise PatternSyntaxError("The pattern file specifies d; --d-override is not allowed.")
    d = data.get("d", d_override)
    if d is None:
        raise PatternSyntaxError("The pattern file has no modulus d.")
    direction = data.get("direction", "execution")
    if direction not in DIRECTIONS:
        raise PatternSyntaxError(f"Unknown direction {direction!r}; use one of {DIRECTIONS}.")
    entries = list(data["commands"])
    if direction == "operator":
        entries = entries[::-1]
    commands = [command for i, entry in enumerate(entries) for command in _parse_command(entry, i)]
    return Pattern(PrimeModulus(d).d, data.get("inputs", []), data.get("outputs", []), tuple(commands))


def pattern_to_json(pattern: Pattern, direction: str = "execution") -> dict:
    if direction not in DIRECTIONS:
        raise PatternSyntaxError(f"Unknown direction {direction!r}; use one of {DIRECTIONS}.")
    commands = [c.to_json() for c in pattern.commands]
    return {
        "d": pattern.d,
        "inputs": sort_vertices(pattern.inputs),
        "outputs": sort_vertices(pattern.outputs),
        "direction": direction,
        "commands": commands[::-1] if direction == "operator" else commands,
    }


def format_command(command: Command) -> str:
    if isinstance(command, N):
        return f"N({command.node})"
    if isinstance(command, E):
        return f"E({command.nodes[0]},{command.nodes[1]})^{command.weight}"
    if isinstance(command, M):
        return f"M({command.node})[{command.label[0]},{command.label[1]}]"
    return f"{command.kind.value}({command.node})^{command.power}·m{command.signal}"


def format_pattern(pattern: Pattern) -> str:
    """one line in execution order"""
    return " ; ".join(format_command(c) for c in pattern.commands) or "(empty)"


def commands_on(pattern: Pattern, vertices: Iterable[str]) -> List[int]:
    """indices of the commands touching any of the given qudits"""
    vertices = set(vertices)
    return [i for i, c in enumerate(pattern.commands) if vertices & set(c.targets())]
