# -*- coding: utf-8 -*-
"""
This module contains a dense qudit state-vector simulator: open graph states, branch maps of measurement runs,
the open-graph stabilizer check, determinism classification and pattern execution.

A register is a tensor of shape (d,) * k with one axis per active vertex. Measuring a vertex contracts its axis
with the measurement bra, so later commands can only reach vertices that are still in the register.
"""
import enum
import logging
import multiprocessing
from dataclasses import dataclass, field
from itertools import product, repeat
from multiprocessing.pool import ThreadPool as Pool
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from zdflow import utils
from zdflow.errors import (
    InputSupport,
    NotInMeasurementSpace,
    OrderViolation,
    TooManyBranches,
    WrongInputRegister,
)
from zdflow.flow import CorrectionSets, induced_order
from zdflow.gfp import FieldMatrix, PrimeModulus, inv_mod
from zdflow.graph import LabelledOpenGraph, OpenGraph, multiset_mapping, sort_vertices
from zdflow.meas import MeasurementSpec, eigenbasis, measurement_unitary, omega, random_spec
from zdflow.pattern import Command, CommandKind, Pattern

logger = logging.getLogger(__name__)

Measurement = Union[MeasurementSpec, np.ndarray]


@dataclass(frozen=True, eq=False)
class QuditState:
    """
    Possibly subnormalized state of the qudits named in `vertices`; axis i of `amplitudes` belongs to vertices[i].
    Operations return new states.
    """

    amplitudes: np.ndarray
    vertices: Tuple[str, ...]
    d: int

    def __post_init__(self):
        vertices = tuple(self.vertices)
        if len(set(vertices)) != len(vertices):
            raise WrongInputRegister(f"Register names repeat: {vertices}.")
        amplitudes = np.asarray(self.amplitudes, dtype=complex).reshape((self.d,) * len(vertices))
        object.__setattr__(self, "amplitudes", amplitudes)
        object.__setattr__(self, "vertices", vertices)

    @classmethod
    def from_vector(cls, vector: Sequence[complex], vertices: Sequence[str], d: int) -> "QuditState":
        vector = np.asarray(vector, dtype=complex)
        if vector.size != d ** len(vertices):
            raise WrongInputRegister(f"{vector.size} amplitudes do not fit {len(vertices)} qudits of dimension {d}.")
        return cls(vector.reshape((d,) * len(vertices)), tuple(vertices), d)

    @classmethod
    def empty(cls, d: int) -> "QuditState":
        return cls(np.ones(()), (), d)

    @property
    def vector(self) -> np.ndarray:
        return self.amplitudes.reshape(-1)

    @property
    def norm_squared(self) -> float:
        return float(np.vdot(self.vector, self.vector).real)

    def normalized(self) -> "QuditState":
        norm = np.sqrt(self.norm_squared)
        if norm == 0:
            raise ValueError("Cannot normalize the zero state.")
        return QuditState(self.amplitudes / norm, self.vertices, self.d)

    def axis(self, vertex: str) -> int:
        try:
            return self.vertices.index(vertex)
        except ValueError:
            raise OrderViolation(f"Qudit {vertex} is not in the register {self.vertices}.")

    def _along(self, vertex: str, values: np.ndarray) -> np.ndarray:
        shape = [1] * len(self.vertices)
        shape[self.axis(vertex)] = self.d
        return values.reshape(shape)

    def shift(self, vertex: str, power: int) -> "QuditState":
        """X^power"""
        power = int(power) % self.d
        if power == 0:
            return self
        return QuditState(np.roll(self.amplitudes, power, axis=self.axis(vertex)), self.vertices, self.d)

    def clock(self, vertex: str, power: int) -> "QuditState":
        """Z^power"""
        power = int(power) % self.d
        if power == 0:
            return self
        phases = omega(self.d) ** (power * np.arange(self.d))
        return QuditState(self.amplitudes * self._along(vertex, phases), self.vertices, self.d)

    def controlled_phase(self, u: str, v: str, weight: int) -> "QuditState":
        """E^weight |m>|n> = ω^(weight m n) |m>|n>"""
        weight = int(weight) % self.d
        if weight == 0:
            return self
        if u == v:
            raise ValueError(f"Controlled phase needs two qudits, got ({u}, {v}).")
        m = np.arange(self.d)
        phases = omega(self.d) ** ((weight * np.multiply.outer(m, m)) % self.d)
        shape = [1] * len(self.vertices)
        i, j = self.axis(u), self.axis(v)
        shape[i] = shape[j] = self.d
        if i > j:
            phases = phases.T
        return QuditState(self.amplitudes * phases.reshape(shape), self.vertices, self.d)

    def apply(self, vertex: str, matrix: np.ndarray) -> "QuditState":
        """single-qudit operator"""
        ax = self.axis(vertex)
        moved = np.tensordot(matrix, self.amplitudes, axes=([1], [ax]))
        return QuditState(np.moveaxis(moved, 0, ax), self.vertices, self.d)

    def project(self, vertex: str, vector: np.ndarray) -> "QuditState":
        """contract the qudit with <vector|; the qudit leaves the register"""
        ax = self.axis(vertex)
        amplitudes = np.tensordot(np.conj(vector), self.amplitudes, axes=([0], [ax]))
        return QuditState(amplitudes, self.vertices[:ax] + self.vertices[ax + 1 :], self.d)

    def extend(self, vertex: str, vector: np.ndarray) -> "QuditState":
        """append a qudit in the given state"""
        if vertex in self.vertices:
            raise OrderViolation(f"Qudit {vertex} is already in the register.")
        return QuditState(np.multiply.outer(self.amplitudes, vector), self.vertices + (vertex,), self.d)

    def reorder(self, vertices: Sequence[str]) -> "QuditState":
        vertices = tuple(vertices)
        if sorted(vertices) != sorted(self.vertices):
            raise WrongInputRegister(f"Cannot reorder {self.vertices} as {vertices}.")
        axes = [self.vertices.index(v) for v in vertices]
        return QuditState(np.transpose(self.amplitudes, axes), vertices, self.d)

    def overlap(self, other: "QuditState") -> complex:
        """<self|other> after aligning the registers"""
        return complex(np.vdot(self.vector, other.reorder(self.vertices).vector))


def plus_state(d: int) -> np.ndarray:
    """|0:X>, the uniform superposition"""
    return np.full(d, 1 / np.sqrt(d), dtype=complex)


def random_state(vertices: Iterable[str], d: int, rng: np.random.Generator) -> QuditState:
    """Haar-like random normalized state from complex gaussians"""
    vertices = tuple(vertices)
    size = d ** len(vertices)
    vector = rng.normal(size=size) + 1j * rng.normal(size=size)
    return QuditState.from_vector(vector / np.linalg.norm(vector), vertices, d)


def basis_state(vertices: Sequence[str], d: int, index: int) -> QuditState:
    vector = np.zeros(d ** len(vertices), dtype=complex)
    vector[index] = 1.0
    return QuditState.from_vector(vector, vertices, d)


def graph_state(graph: OpenGraph, input_state: QuditState = None) -> QuditState:
    """
    E_G (|φ> ⊗ |0:X>...) on all vertices in canonical order.

    :param graph: open graph.
    :param input_state: state on exactly the inputs; may be omitted when there are none.
    :raises: WrongInputRegister, EvenModulus.
    """
    d = PrimeModulus(graph.d).require_odd().d
    if input_state is None:
        if graph.inputs:
            raise WrongInputRegister(f"Inputs {graph.ordered(graph.inputs)} need an input state.")
        state = QuditState.empty(d)
    else:
        if set(input_state.vertices) != set(graph.inputs) or input_state.d != d:
            raise WrongInputRegister(
                f"Input register {input_state.vertices} over Z_{input_state.d} does not match inputs "
                f"{graph.ordered(graph.inputs)} over Z_{d}."
            )
        state = input_state
    for v in graph.non_inputs:
        state = state.extend(v, plus_state(d))
    state = state.reorder(graph.vertices)
    # all E commute
    for u, v, w in graph.edges():
        state = state.controlled_phase(u, v, w)
    return state


@dataclass
class StabilizerReport:
    passed: bool
    max_deviation: float
    phase_exponent: int
    trials: int


def check_stabilizer(
    graph: OpenGraph,
    multiset: Union[Mapping[str, int], FieldMatrix],
    trials: int = 5,
    rng: np.random.Generator = None,
    tolerance: float = None,
) -> StabilizerReport:
    """
    Check ω^(2⁻¹ AᵀGA) X_A Z_GA |G(φ)> = |G(φ)> on random input states.

    :param graph: open graph, d odd.
    :param multiset: A, zero on the inputs.
    :param trials: number of random inputs.
    :raises: InputSupport, EvenModulus.
    """
    d = PrimeModulus(graph.d).require_odd().d
    rng = rng if rng is not None else np.random.default_rng(utils.get_setting("sim", "seed"))
    tolerance = tolerance if tolerance is not None else utils.get_setting("sim", "tolerance")
    if isinstance(multiset, FieldMatrix):
        multiset = multiset_mapping(graph, multiset)
    a = np.zeros(len(graph), dtype=np.int64)
    for v, k in multiset.items():
        a[graph.index(v)] = int(k) % d
    on_inputs = [v for v in graph.ordered(graph.inputs) if a[graph.index(v)]]
    if on_inputs:
        raise InputSupport(f"The multiset is nonzero on inputs {on_inputs}.")
    g = graph.adjacency.entries
    ga = (g @ a) % d
    exponent = (inv_mod(2, d) * int(a @ g @ a)) % d
    deviation = 0.0
    for _ in range(trials):
        phi = random_state(graph.ordered(graph.inputs), d, rng) if graph.inputs else None
        state = graph_state(graph, phi)
        image = state
        for i, v in enumerate(graph.vertices):
            image = image.clock(v, ga[i]).shift(v, a[i])
        image_vector = omega(d) ** exponent * image.vector
        deviation = max(deviation, float(np.linalg.norm(image_vector - state.vector)))
    passed = deviation <= tolerance
    if not passed:
        logger.warning(f"Stabilizer check failed with deviation {deviation:.3e}")
    return StabilizerReport(passed, deviation, exponent, trials)


@dataclass
class BranchOutcome:
    """
    :param outcomes: measured vertex -> outcome.
    :param probability: product of the step probabilities.
    :param state: subnormalized output on the outputs (canonical order); its squared norm is the probability
        for normalized inputs.
    """

    outcomes: Dict[str, int]
    probability: float
    state: QuditState
    step_probabilities: Tuple[float, ...] = ()

    @property
    def key(self) -> str:
        return ",".join(str(self.outcomes[v]) for v in sort_vertices(self.outcomes))

    @property
    def output(self) -> Optional[QuditState]:
        return self.state.normalized() if self.state.norm_squared > 0 else None


def _bases(lg: LabelledOpenGraph, measurements: Mapping[str, Measurement]) -> Dict[str, List[np.ndarray]]:
    bases = {}
    for v in lg.graph.non_outputs:
        if v not in measurements:
            raise NotInMeasurementSpace(f"No measurement given for {v}.")
        m = measurements[v]
        if isinstance(m, MeasurementSpec):
            if tuple(m.label) != tuple(lg.labels[v]):
                raise NotInMeasurementSpace(f"Measurement of {v} has label {m.label}, the graph says {lg.labels[v]}.")
            m = measurement_unitary(m)
        bases[v] = eigenbasis(np.asarray(m), lg.labels[v], lg.d)
    return bases


def _check_order(lg: LabelledOpenGraph, corrections: CorrectionSets, order: Optional[Sequence[str]]) -> List[str]:
    measured = set(lg.graph.non_outputs)
    if order is None:
        return induced_order(corrections).measurement_order()
    order = [str(v) for v in order]
    if len(order) != len(measured) or set(order) != measured:
        raise OrderViolation(f"Measurement order {order} must list every non-output exactly once.")
    if not induced_order(corrections).is_respected_by(order):
        raise OrderViolation(f"Measurement order {order} measures a vertex before its corrections are known.")
    return order


def _measure(
    state: QuditState, v: str, vector: np.ndarray, outcome: int, corrections: CorrectionSets
) -> QuditState:
    state = state.project(v, vector)
    for target, power in sorted(corrections.z.get(v, {}).items()):
        state = state.clock(target, power * outcome)
    for target, power in sorted(corrections.x.get(v, {}).items()):
        state = state.shift(target, power * outcome)
    return state


def run_branch(
    lg: LabelledOpenGraph,
    corrections: CorrectionSets,
    measurements: Mapping[str, Measurement],
    outcomes: Mapping[str, int],
    order: Sequence[str] = None,
    input_state: QuditState = None,
    bases: Mapping[str, List[np.ndarray]] = None,
) -> BranchOutcome:
    """
    One branch of a run: measure in `order`, project on <m_v : M(v)|, then apply Z^(m_v z(v)) and X^(m_v x(v)).

    :param lg: labelled open graph.
    :param corrections: x and z correction sets.
    :param measurements: MeasurementSpec or unitary per measured vertex.
    :param outcomes: outcome per measured vertex.
    :param order: measurement sequence, default the canonical order of the corrections.
    :param input_state: normalized state on the inputs.
    :param bases: precomputed eigenbases, skips the measurement-space checks.
    :raises: OrderViolation, NotInMeasurementSpace.
    """
    order = _check_order(lg, corrections, order)
    bases = bases if bases is not None else _bases(lg, measurements)
    d = lg.d
    state = graph_state(lg.graph, input_state)
    steps = []
    for v in order:
        before = state.norm_squared
        m = int(outcomes[v]) % d
        state = _measure(state, v, bases[v][m], m, corrections)
        steps.append(state.norm_squared / before if before > 0 else 0.0)
    state = state.reorder(lg.graph.ordered(lg.outputs))
    norm = input_state.norm_squared if input_state is not None else 1.0
    return BranchOutcome({v: int(outcomes[v]) % d for v in order}, state.norm_squared / norm, state, tuple(steps))


def _explore(
    state: QuditState,
    prefix: Tuple[int, ...],
    order: Sequence[str],
    bases: Mapping[str, List[np.ndarray]],
    corrections: CorrectionSets,
    outputs: Sequence[str],
    norm: float,
) -> List[BranchOutcome]:
    """every branch below a partial run, sharing the measured prefix"""
    depth = len(prefix)
    if depth == len(order):
        final = state.reorder(outputs)
        return [BranchOutcome(dict(zip(order, prefix)), final.norm_squared / norm, final)]
    v = order[depth]
    branches = []
    for m in range(state.d):
        child = _measure(state, v, bases[v][m], m, corrections)
        branches.extend(_explore(child, prefix + (m,), order, bases, corrections, outputs, norm))
    return branches


def enumerate_branches(
    lg: LabelledOpenGraph,
    corrections: CorrectionSets,
    measurements: Mapping[str, Measurement] = None,
    order: Sequence[str] = None,
    input_state: QuditState = None,
    max_branches: int = None,
    parallel: bool = None,
    bases: Mapping[str, List[np.ndarray]] = None,
) -> List[BranchOutcome]:
    """
    All d^|Oᶜ| branches, sorted by outcome string.

    :param parallel: explore the outcomes of the first measurement in a thread pool.
    :raises: TooManyBranches, OrderViolation, NotInMeasurementSpace.
    """
    max_branches = max_branches if max_branches is not None else utils.get_setting("sim", "max_branches")
    parallel = parallel if parallel is not None else utils.get_setting("sim", "parallel")
    count = lg.d ** len(lg.graph.non_outputs)
    if count > max_branches:
        raise TooManyBranches(f"{count} branches exceed the limit of {max_branches}.")
    order = _check_order(lg, corrections, order)
    bases = bases if bases is not None else _bases(lg, measurements or {})
    outputs = lg.graph.ordered(lg.outputs)
    norm = input_state.norm_squared if input_state is not None else 1.0
    state = graph_state(lg.graph, input_state)
    if parallel and order:
        v = order[0]
        starts = [_measure(state, v, bases[v][m], m, corrections) for m in range(lg.d)]
        with Pool(processes=min(lg.d, multiprocessing.cpu_count())) as pool:
            results = pool.starmap(
                _explore,
                zip(starts, [(m,) for m in range(lg.d)], repeat(order), repeat(bases), repeat(corrections),
                    repeat(outputs), repeat(norm)),
            )
            pool.close()
            pool.join()
        branches = [branch for result in results for branch in result]
    else:
        branches = _explore(state, (), order, bases, corrections, outputs, norm)
    return sorted(branches, key=lambda branch: branch.key)


def _branch_metrics(branches: Sequence[BranchOutcome], tolerance: float) -> Tuple[float, float]:
    """
    :return: (minimum pairwise |<ψ_i|ψ_j>| over normalized nonzero branches, total probability)
    """
    total = float(sum(branch.probability for branch in branches))
    live = [branch.state.vector for branch in branches if branch.probability > tolerance]
    if len(live) < 2:
        return 1.0, total
    outputs = np.array([vector / np.linalg.norm(vector) for vector in live])
    gram = np.abs(outputs.conj() @ outputs.T)
    return float(gram.min()), total


class Verdict(str, enum.Enum):
    NOT_DETERMINISTIC = "not-deterministic"
    DETERMINISTIC = "deterministic"
    STRONG = "strong"
    ROBUST_EVIDENCE = "robust-evidence"


@dataclass
class DeterminismReport:
    verdict: str
    seed: int
    draws: int
    input_states: int
    min_fidelity: float
    max_probability_deviation: float
    max_total_probability_error: float
    truncations_checked: int
    order: List[str]
    branches: pd.DataFrame = field(repr=False, default_factory=pd.DataFrame)

    def to_json(self) -> dict:
        per_branch = []
        if not self.branches.empty:
            summary = self.branches.groupby("outcome")["probability"].agg(["mean", "min", "max"]).reset_index()
            per_branch = summary.to_dict(orient="records")
        return {
            "verdict": Verdict(self.verdict).value,
            "seed": self.seed,
            "draws": self.draws,
            "input_states": self.input_states,
            "min_fidelity": self.min_fidelity,
            "max_probability_deviation": self.max_probability_deviation,
            "max_total_probability_error": self.max_total_probability_error,
            "truncations_checked": self.truncations_checked,
            "order": self.order,
            "branches": per_branch,
        }


def truncate(lg: LabelledOpenGraph, corrections: CorrectionSets, measured: Iterable[str]):
    """the run stopped after measuring `measured`: other non-outputs become outputs"""
    measured = frozenset(measured)
    graph = lg.graph
    outputs = frozenset(v for v in graph.vertices if v not in measured)
    sub = OpenGraph(graph.modulus, graph.vertices, graph.adjacency, graph.inputs, outputs)
    return LabelledOpenGraph(sub, {v: lg.labels[v] for v in measured}), corrections.restrict(measured)


def _is_strong(branches: Sequence[BranchOutcome], expected: float, tolerance: float) -> Tuple[bool, float, float]:
    fidelity, _ = _branch_metrics(branches, tolerance)
    deviation = max(abs(branch.probability - expected) for branch in branches)
    return fidelity >= 1 - tolerance and deviation <= tolerance, fidelity, deviation


@utils.timeit
def classify_determinism(
    lg: LabelledOpenGraph,
    corrections: CorrectionSets,
    draws: int = None,
    input_states: int = None,
    seed: int = None,
    max_branches: int = None,
    max_lowersets: int = None,
    order: Sequence[str] = None,
    tolerance: float = None,
) -> DeterminismReport:
    """
    Sample measurement choices and inputs, enumerate every branch and classify:

        * not-deterministic: two nonzero branches differ beyond a global phase;
        * deterministic: all nonzero branches agree up to global phase;
        * strong: additionally every branch has probability d^-|Oᶜ|;
        * robust-evidence: additionally strong after every tested measurement prefix of the run, for every sampled
          input state.

    This is sampled evidence; robustness quantifies over every measurement choice.

    :raises: TooManyBranches, CyclicDependency, EvenModulus.
    """
    settings = utils.load_settings()["sim"]
    draws = draws if draws is not None else settings["draws"]
    input_states = input_states if input_states is not None else settings["input_states"]
    seed = seed if seed is not None else settings["seed"]
    max_branches = max_branches if max_branches is not None else settings["max_branches"]
    max_lowersets = max_lowersets if max_lowersets is not None else settings["max_lowersets"]
    tolerance = tolerance if tolerance is not None else settings["tolerance"]

    d = PrimeModulus(lg.d).require_odd().d
    graph = lg.graph
    measured = list(graph.non_outputs)
    count = d ** len(measured)
    if count > max_branches:
        raise TooManyBranches(f"{count} branches exceed the limit of {max_branches}.")
    order = _check_order(lg, corrections, order)
    partial = induced_order(corrections)
    prefixes = [p for p in partial.measurement_prefixes(max_lowersets) if 0 < len(p) < len(measured)]
    expected = float(d) ** -len(measured)
    rng = np.random.default_rng(seed)
    inputs = graph.ordered(graph.inputs)

    deterministic, strong, robust = True, True, True
    min_fidelity, max_deviation, max_total_error = 1.0, 0.0, 0.0
    truncations = 0
    records = []
    for draw in range(draws):
        specs = {v: random_spec(lg.labels[v], d, rng) for v in measured}
        bases = {v: eigenbasis(measurement_unitary(specs[v]), lg.labels[v], d) for v in measured}
        phis = [random_state(inputs, d, rng) if inputs else None for _ in range(input_states)]
        for trial, phi in enumerate(phis):
            branches = enumerate_branches(
                lg, corrections, order=order, input_state=phi, max_branches=max_branches, bases=bases
            )
            fidelity, total = _branch_metrics(branches, tolerance)
            deviation = max(abs(branch.probability - expected) for branch in branches)
            min_fidelity = min(min_fidelity, fidelity)
            max_deviation = max(max_deviation, deviation)
            max_total_error = max(max_total_error, abs(total - 1.0))
            deterministic &= fidelity >= 1 - tolerance
            strong &= deviation <= tolerance
            records.extend(
                {"draw": draw, "trial": trial, "outcome": branch.key, "probability": branch.probability}
                for branch in branches
            )
        if deterministic and strong and robust:
            for prefix, phi in product(prefixes, phis):
                sub_lg, sub_corrections = truncate(lg, corrections, prefix)
                sub_order = [v for v in order if v in prefix]
                sub_bases = {v: bases[v] for v in prefix}
                branches = enumerate_branches(
                    sub_lg, sub_corrections, order=sub_order, input_state=phi, max_branches=max_branches,
                    bases=sub_bases,
                )
                ok, _, _ = _is_strong(branches, float(d) ** -len(prefix), tolerance)
                truncations += 1
                if not ok:
                    logger.info(f"Run stopped after {sort_vertices(prefix)} is not strongly deterministic")
                    robust = False
                    break

    if not deterministic:
        verdict = Verdict.NOT_DETERMINISTIC
    elif not strong:
        verdict = Verdict.DETERMINISTIC
    elif not robust:
        verdict = Verdict.STRONG
    else:
        verdict = Verdict.ROBUST_EVIDENCE
    log = logger.warning if verdict == Verdict.NOT_DETERMINISTIC else logger.info
    log(f"Verdict {verdict}: minimum fidelity {min_fidelity:.12f}, probability deviation {max_deviation:.3e}")
    return DeterminismReport(
        verdict,
        seed,
        draws,
        input_states,
        min_fidelity,
        max_deviation,
        max_total_error,
        truncations,
        list(order),
        pd.DataFrame.from_records(records, columns=["draw", "trial", "outcome", "probability"]),
    )


def ideal_output(
    lg: LabelledOpenGraph, measurements: Mapping[str, Measurement], input_state: QuditState = None
) -> QuditState:
    """the correction-free all-zero branch ⊗<0:M(u)| E_G (|φ> ⊗ |0:X>...), renormalized"""
    zero = CorrectionSets.zero(lg.d, lg.graph.non_outputs)
    outcomes = {v: 0 for v in lg.graph.non_outputs}
    branch = run_branch(lg, zero, measurements, outcomes, list(lg.graph.non_outputs), input_state)
    return branch.state.normalized()


def branch_gram(
    lg: LabelledOpenGraph,
    corrections: CorrectionSets,
    measurements: Mapping[str, Measurement],
    outcomes: Mapping[str, int],
    order: Sequence[str] = None,
) -> np.ndarray:
    """
    d^|Oᶜ| times the Gram matrix of one branch's outputs over the computational basis of the inputs.
    A strongly deterministic run gives the identity.
    """
    d = lg.d
    inputs = lg.graph.ordered(lg.inputs)
    bases = _bases(lg, measurements)
    columns = []
    for index in range(d ** len(inputs)):
        phi = basis_state(inputs, d, index) if inputs else None
        branch = run_branch(lg, corrections, measurements, outcomes, order, phi, bases=bases)
        columns.append(branch.state.vector)
    psi = np.array(columns).T
    return float(d) ** len(lg.graph.non_outputs) * (psi.conj().T @ psi)


def run_pattern(
    pattern: Pattern, outcomes: Mapping[str, int], input_state: QuditState = None
) -> QuditState:
    """
    Execute the commands in order for fixed outcomes.

    :return: subnormalized state on the pattern outputs, in canonical order.
    :raises: WrongInputRegister, OrderViolation.
    """
    d = PrimeModulus(pattern.d).require_odd().d
    inputs = sort_vertices(pattern.inputs)
    if input_state is None:
        if inputs:
            raise WrongInputRegister(f"Inputs {inputs} need an input state.")
        state = QuditState.empty(d)
    else:
        if set(input_state.vertices) != set(inputs):
            raise WrongInputRegister(f"Input register {input_state.vertices} does not match inputs {inputs}.")
        state = input_state
    for command in pattern:
        state = _run_command(state, command, outcomes)
    return state.reorder(sort_vertices(pattern.outputs))


def _run_command(state: QuditState, command: Command, outcomes: Mapping[str, int]) -> QuditState:
    kind = command.kind
    if kind == CommandKind.N:
        return state.extend(command.node, plus_state(state.d))
    if kind == CommandKind.E:
        return state.controlled_phase(command.nodes[0], command.nodes[1], command.weight)
    if kind == CommandKind.M:
        spec = MeasurementSpec(command.label, command.angles, state.d)
        basis = eigenbasis(measurement_unitary(spec), command.label, state.d)
        return state.project(command.node, basis[int(outcomes[command.node]) % state.d])
    power = command.power * int(outcomes[command.signal])
    if kind == CommandKind.X:
        return state.shift(command.node, power)
    return state.clock(command.node, power)
