# -*- coding: utf-8 -*-
import itertools
import unittest
from unittest import TestCase

import numpy as np
from hypothesis import assume, given, settings, strategies as st

from zdflow import utils
from zdflow.errors import NotRunnable, NotStandardForm, OrderViolation, PatternSyntaxError, ZeroLabel
from zdflow.finder import find_flow
from zdflow.flow import CorrectionSets, corrections
from zdflow.graph import sort_vertices
from zdflow.pattern import (
    E,
    M,
    N,
    Pattern,
    X,
    Z,
    build_standard_pattern,
    check_runnable,
    commands_on,
    extract_open_graph,
    format_pattern,
    from_flow,
    parse_pattern,
    pattern_to_json,
    standardize,
)
from zdflow.sim import random_state, run_pattern
from . import Base


def lazy_pattern(lg, sets, order, angles):
    """
    Runnable but non-standard pattern: qudits are prepared and entangled only when a measurement or correction
    first needs them, so shifts often run before entanglers on the same qudit.
    """
    graph = lg.graph
    commands, prepared, entangled = [], set(lg.inputs), set()

    def prepare(v):
        if v not in prepared:
            commands.append(N(v))
            prepared.add(v)

    def entangle(v):
        for w, weight in sorted(graph.neighbours(v).items()):
            prepare(w)
            pair = frozenset((v, w))
            if pair not in entangled:
                commands.append(E((v, w), weight))
                entangled.add(pair)

    for v in order:
        prepare(v)
        entangle(v)
        commands.append(M(v, lg.labels[v], angles[v]))
        for kind, targets in ((Z, sets.z[v]), (X, sets.x[v])):
            for t, k in sorted(targets.items()):
                prepare(t)
                commands.append(kind(t, v, k))
    for v in graph.vertices:
        prepare(v)
        entangle(v)
    return Pattern(lg.d, lg.inputs, lg.outputs, tuple(commands))


def random_runnable_pattern(rng: np.random.Generator, d: int = 3, steps: int = 12) -> Pattern:
    """
    Random walk over the commands that keep a pattern runnable, then the missing preparations and measurements.
    """
    names = [str(k) for k in range(1, int(rng.integers(2, 5)) + 1)]
    inputs = [v for v in names if rng.random() < 0.4]
    outputs = [str(v) for v in rng.choice(names, size=int(rng.integers(1, len(names))), replace=False)]
    prepared, measured, commands = set(inputs), [], []

    def pick(options):
        return options[int(rng.integers(len(options)))]

    def measure(v):
        label = pick([(a, b) for a in range(d) for b in range(d) if (a, b) != (0, 0)])
        commands.append(M(v, label, tuple(rng.uniform(0, 2 * np.pi, size=d - 1))))
        measured.append(v)

    for _ in range(int(rng.integers(0, steps + 1))):
        live = sort_vertices(prepared - set(measured))
        actions = []
        if prepared != set(names):
            actions.append(N)
        if len(live) >= 2:
            actions.append(E)
        if set(live) - set(outputs):
            actions.append(M)
        if measured and live:
            actions += [X, Z]
        if not actions:
            break
        kind = pick(actions)
        if kind is N:
            v = pick(sort_vertices(set(names) - prepared))
            commands.append(N(v))
            prepared.add(v)
        elif kind is E:
            u, v = (live[k] for k in rng.choice(len(live), size=2, replace=False))
            commands.append(E((u, v), int(rng.integers(1, d))))
        elif kind is M:
            measure(pick(sort_vertices(set(live) - set(outputs))))
        else:
            commands.append(kind(pick(live), pick(measured), int(rng.integers(1, d))))
    for v in sort_vertices(set(names) - prepared):
        commands.append(N(v))
    for v in sort_vertices(set(names) - set(measured) - set(outputs)):
        measure(v)
    return Pattern(d, inputs, outputs, tuple(commands))


class PatternTests(Base, TestCase):
    """Tests the pattern module."""

    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.path_pattern = parse_pattern(utils.read_json(cls.examples / "path_pattern.json"))
        cls.operator_pattern = parse_pattern(utils.read_json(cls.examples / "operator_pattern.json"))

    def assertSameUpToPhase(self, first, second):
        self.assertAlmostEqual(first.norm_squared, second.norm_squared)
        if first.norm_squared > 1e-12:
            self.assertAlmostEqual(abs(first.overlap(second)), first.norm_squared)

    def test_example_patterns(self):
        pattern = self.path_pattern
        self.assertTrue(pattern.is_standard())
        self.assertEqual(pattern.measured, ["1"])
        self.assertEqual(format_pattern(pattern), "N(1) ; N(2) ; E(1,2)^1 ; M(1)[1,0] ; Z(2)^1·m1")
        self.assertEqual(commands_on(pattern, ["2"]), [1, 2, 4])

        operator = self.operator_pattern
        self.assertEqual(
            operator.commands, (N("2"), E(("1", "2"), 2), M("1", (0, 1), (0.0, 0.0)), X("2", "1", 2))
        )
        data = pattern_to_json(operator, direction="operator")
        self.assertEqual(data["commands"][0], {"op": "X", "node": "2", "signal": "1", "power": 2})
        self.assertEqual(parse_pattern(data), operator)
        self.assertEqual(parse_pattern(pattern_to_json(operator)), operator)

    def test_extract_examples(self):
        extracted = extract_open_graph(self.operator_pattern)
        teleport = self.load_example("teleport.json")
        self.assertEqual(extracted.lg, teleport)
        self.assertEqual(extracted.corrections, corrections(teleport, find_flow(teleport).flow))
        self.assertEqual(extracted.order, ["1"])

        path = extract_open_graph(self.path_pattern)
        self.assertEqual(path.lg, self.load_example("path.json"))
        self.assertEqual(path.measurements["1"].angles, (0.4, 1.3))
        self.assertEqual(path.corrections.z, {"1": {"2": 1}})

    def test_runnable_failures(self):
        d, out = 3, ["2"]
        cases = [
            ([E(("1", "2")), N("1"), N("2"), M("1", (1, 0))], 0, "before it is prepared"),
            ([N("1"), N("2"), Z("2", "1"), M("1", (1, 0))], 2, "before it exists"),
            ([N("1"), N("2"), M("1", (1, 0)), X("1", "1")], 3, "after it is measured"),
            ([N("1"), N("2"), M("2", (1, 0))], 2, "output 2 is measured"),
            ([N("1"), N("1"), N("2"), M("1", (1, 0))], 1, "prepared twice"),
            ([N("1"), N("2")], 2, "never measured"),
            ([N("1"), M("1", (1, 0))], 2, "never prepared"),
        ]
        for commands, index, reason in cases:
            report = check_runnable(Pattern(d, [], out, tuple(commands)))
            self.assertFalse(report.ok)
            self.assertEqual(report.index, index, reason)
            self.assertIn(reason, report.reason)
        with self.assertRaises(NotRunnable) as context:
            standardize(Pattern(d, [], out, (N("1"), N("2"), Z("2", "1"), M("1", (1, 0)))))
        self.assertEqual(context.exception.index, 2)

    def test_standardize_example(self):
        pattern = Pattern(
            3,
            ["1"],
            ["3"],
            (
                N("2"), E(("1", "2")), M("1", (0, 1)), X("2", "1"),
                N("3"), E(("2", "3")), M("2", (0, 1)), X("3", "2"),
            ),
        )
        self.assertFalse(pattern.is_standard())
        standard = standardize(pattern)
        expected = (
            N("2"), N("3"), E(("1", "2")), E(("2", "3")),
            M("1", (0, 1)), Z("3", "1"), X("2", "1"),
            M("2", (0, 1)), X("3", "2"),
        )
        self.assertEqual(standard.commands, Pattern(3, ["1"], ["3"], expected).commands)
        self.assertTrue(standard.is_standard())
        self.assertEqual(standardize(standard), standard)

        # the shift on 2 ran before E(2, 3), which leaves Z(3)^m1 behind
        extracted = extract_open_graph(standard)
        self.assertEqual(extracted.corrections, corrections(extracted.lg, find_flow(extracted.lg).flow))

        phi = random_state(["1"], 3, self.rng)
        for m1, m2 in itertools.product(range(3), repeat=2):
            outcomes = {"1": m1, "2": m2}
            self.assertSameUpToPhase(run_pattern(pattern, outcomes, phi), run_pattern(standard, outcomes, phi))

    def test_standardize_preserves_semantics(self):
        rng = np.random.default_rng(self.seed + 17)
        changed = 0
        for lg, result in self.flow_bearing(rng, 12, sizes=[3, 4], moduli=[3], max_measured=3):
            sets = corrections(lg, result.flow)
            order = [v for v in result.flow.totalisation() if v not in lg.outputs]
            angles = {v: tuple(rng.uniform(0, 2 * np.pi, size=2)) for v in order}
            pattern = lazy_pattern(lg, sets, order, angles)
            self.assertTrue(check_runnable(pattern).ok)
            standard = standardize(pattern)
            self.assertTrue(standard.is_standard())
            self.assertEqual(standardize(standard), standard)
            changed += standard != pattern
            inputs = lg.graph.ordered(lg.inputs)
            phi = random_state(inputs, 3, rng) if inputs else None
            for values in itertools.product(range(3), repeat=len(order)):
                outcomes = dict(zip(order, values))
                self.assertSameUpToPhase(run_pattern(pattern, outcomes, phi), run_pattern(standard, outcomes, phi))
        self.assertGreater(changed, 0)

    def test_standardize_random_patterns(self):
        rng = np.random.default_rng(self.seed + 23)
        changed = 0
        for _ in range(120):
            pattern = random_runnable_pattern(rng)
            self.assertTrue(check_runnable(pattern).ok, format_pattern(pattern))
            standard = standardize(pattern)
            self.assertTrue(standard.is_standard())
            self.assertEqual(sorted(standard.measured), sorted(pattern.measured))
            changed += standard != pattern
            inputs = sort_vertices(pattern.inputs)
            phi = random_state(inputs, pattern.d, rng) if inputs else None
            for values in itertools.product(range(pattern.d), repeat=len(pattern.measured)):
                outcomes = dict(zip(pattern.measured, values))
                self.assertSameUpToPhase(run_pattern(pattern, outcomes, phi), run_pattern(standard, outcomes, phi))
        self.assertGreater(changed, 30)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.sampled_from([3, 5]))
    def test_standardize_is_idempotent(self, seed, d):
        rng = np.random.default_rng(seed)
        found = self.flow_bearing(rng, 1, sizes=[2, 3, 4, 5], moduli=[d], max_measured=4, attempts=50)
        assume(found)
        lg, result = found[0]
        order = [v for v in result.flow.totalisation() if v not in lg.outputs]
        angles = {v: tuple(rng.uniform(0, 2 * np.pi, size=d - 1)) for v in order}
        once = standardize(lazy_pattern(lg, corrections(lg, result.flow), order, angles))
        self.assertTrue(once.is_standard())
        self.assertEqual(standardize(once), once)
        self.assertEqual(extract_open_graph(once).lg, lg)

    def test_flow_round_trip(self):
        rng = np.random.default_rng(self.seed + 19)
        for lg, result in self.flow_bearing(rng, 20, sizes=[3, 4, 5, 6], moduli=[3, 5], max_measured=4):
            pattern = from_flow(lg, result.flow)
            self.assertTrue(pattern.is_standard())
            self.assertEqual(standardize(pattern), pattern)
            extracted = extract_open_graph(pattern)
            self.assertEqual(extracted.lg, lg)
            self.assertEqual(extracted.corrections, corrections(lg, result.flow))
            self.assertEqual(extracted.order, pattern.measured)

    def test_build_standard_pattern_checks_order(self):
        lg = self.load_example("line4.json")
        sets = corrections(lg, find_flow(lg).flow)
        pattern = build_standard_pattern(lg, sets)
        self.assertEqual(pattern.measured, ["1", "2", "3"])
        with self.assertRaises(OrderViolation):
            build_standard_pattern(lg, sets, order=["3", "2", "1"])
        with self.assertRaises(OrderViolation):
            build_standard_pattern(lg, CorrectionSets.zero(3, ["1", "2"]))

    def test_repeated_entanglers_add_up(self):
        base = (N("1"), N("2"))
        tail = (M("1", (1, 0)),)
        twice = Pattern(3, [], ["2"], base + (E(("1", "2")), E(("2", "1"))) + tail)
        self.assertEqual(extract_open_graph(twice).lg.graph.weight("1", "2"), 2)
        cancelled = Pattern(3, [], ["2"], base + (E(("1", "2")), E(("1", "2"), 2)) + tail)
        self.assertEqual(list(extract_open_graph(cancelled).lg.graph.edges()), [])
        self.assertEqual(standardize(cancelled).commands, Pattern(3, [], ["2"], base + tail).commands)

    def test_extract_needs_standard_form(self):
        pattern = Pattern(3, [], ["2"], (N("1"), M("1", (1, 0)), N("2")))
        self.assertTrue(check_runnable(pattern).ok)
        with self.assertRaises(NotStandardForm):
            extract_open_graph(pattern)

    def test_syntax(self):
        with self.assertRaises(PatternSyntaxError):
            E(("1", "1"))
        with self.assertRaises(PatternSyntaxError):
            parse_pattern({"d": 3, "commands": [{"op": "Q"}]})
        with self.assertRaises(PatternSyntaxError):
            parse_pattern({"d": 3, "commands": [{"op": "N"}]})
        with self.assertRaises(PatternSyntaxError):
            parse_pattern({"d": 3, "commands": [], "direction": "sideways"})
        with self.assertRaises(PatternSyntaxError):
            parse_pattern({"d": 3, "commands": []}, d_override=5)
        with self.assertRaises(PatternSyntaxError):
            parse_pattern({"commands": []})
        with self.assertRaises(ZeroLabel):
            parse_pattern({"d": 3, "commands": [{"op": "M", "node": "1", "label": [3, 0]}]})
        self.assertEqual(parse_pattern({"commands": []}, d_override=5).d, 5)

        expanded = parse_pattern(
            {"d": 5, "commands": [{"op": "X", "signal": "1", "power": 2, "targets": {"2": 1, "3": 3}}]}
        )
        self.assertEqual(expanded.commands, (X("2", "1", 2), X("3", "1", 1)))
        self.assertEqual(Pattern(3, [], [], (Z("2", "1", 7),)).commands, (Z("2", "1", 1),))


if __name__ == '__main__':
    unittest.main()
