# -*- coding: utf-8 -*-
import itertools
import unittest
from unittest import TestCase

import numpy as np

from zdflow import utils
from zdflow.errors import CyclicDependency, DimensionMismatch, IndexOutOfRange, InvalidFlow, PartitionMismatch
from zdflow.flow import (
    CorrectionSets,
    Delay,
    ZdFlow,
    check_triangular_form,
    corrections,
    depth,
    flow_to_json,
    induced_order,
    is_more_delayed,
    layer_at,
    parse_flow,
    schedule_report,
    validate_flow,
)
from zdflow.gfp import FieldMatrix
from zdflow.graph import LabelledOpenGraph, OpenGraph
from . import Base


def totalisations(flow: ZdFlow):
    """every measurement sequence compatible with the layers, first-measured layer first"""
    blocks = [list(itertools.permutations(sorted(layer))) for layer in reversed(flow.layers)]
    for choice in itertools.product(*blocks):
        yield [v for block in choice for v in block]


class FlowTests(Base, TestCase):
    """Tests the flow module."""

    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.path = cls.load_example("path.json")
        cls.path_flow = parse_flow(utils.read_json(cls.examples / "path_flow.json"), cls.path.graph)
        cls.instances = cls.flow_bearing(cls.rng, 40, sizes=[3, 4, 5], moduli=[2, 3, 5], max_measured=4)

    def test_nothing_measured(self):
        graph = OpenGraph.from_edges(3, ["1", "2"], [["1", "2", 1]], outputs=["1", "2"])
        lg = LabelledOpenGraph(graph, {})
        flow = ZdFlow(FieldMatrix.zeros(2, 2, 3), (frozenset({"1", "2"}),))
        self.assertTrue(validate_flow(lg, flow).valid)
        self.assertEqual(depth(flow), 0)
        self.assertTrue(check_triangular_form(lg, flow.correction, ["1", "2"]))

    def test_path_example(self):
        report = validate_flow(self.path, self.path_flow)
        self.assertTrue(report.valid, report.message)
        sets = corrections(self.path, self.path_flow)
        self.assertEqual(sets.x, {"1": {}})
        self.assertEqual(sets.z, {"1": {"2": 1}})
        self.assertEqual(self.path_flow.layers, (frozenset({"2"}), frozenset({"1"})))
        self.assertEqual(layer_at(self.path_flow, 1), frozenset({"1"}))
        with self.assertRaises(IndexOutOfRange):
            layer_at(self.path_flow, 2)

    def test_teleport_example(self):
        lg = self.load_example("teleport.json")
        # C_21 is the inverse of the weight 2 mod 3
        flow = ZdFlow(FieldMatrix([[0, 0], [2, 0]], 3), (frozenset({"2"}), frozenset({"1"})))
        self.assertTrue(validate_flow(lg, flow).valid)
        sets = corrections(lg, flow)
        self.assertEqual(sets.x, {"1": {"2": 2}})
        self.assertEqual(sets.z, {"1": {}})

    def test_first_violation(self):
        lg = self.path
        output_column = ZdFlow(FieldMatrix([[1, 1], [0, 0]], 3), self.path_flow.layers)
        report = validate_flow(lg, output_column)
        self.assertEqual((report.valid, report.condition, report.witness), (False, "ii", ("1", "2")))

        wrong_label = ZdFlow(FieldMatrix([[2, 0], [0, 0]], 3), self.path_flow.layers)
        report = validate_flow(lg, wrong_label)
        self.assertEqual((report.condition, report.witness), ("i", ("1", "1")))

        one_layer = ZdFlow(self.path_flow.correction, (frozenset({"1", "2"}),))
        report = validate_flow(lg, one_layer)
        self.assertEqual((report.condition, report.witness), ("iii", ("2", "1")))

        missing = ZdFlow(self.path_flow.correction, (frozenset({"2"}),))
        report = validate_flow(lg, missing)
        self.assertEqual((report.condition, report.witness), ("partition", ("1",)))

        with self.assertRaises(DimensionMismatch):
            validate_flow(lg, ZdFlow(FieldMatrix.zeros(3, 3, 3), self.path_flow.layers))
        with self.assertRaises(InvalidFlow):
            corrections(lg, output_column)

    def test_input_row_violation(self):
        lg = self.load_example("teleport.json")
        flow = ZdFlow(FieldMatrix([[1, 0], [2, 0]], 3), (frozenset({"2"}), frozenset({"1"})))
        report = validate_flow(lg, flow)
        # the diagonal is checked first and C_11 = 1 breaks the label (0, 1)
        self.assertEqual(report.condition, "i")

    def test_layers_must_be_disjoint(self):
        with self.assertRaises(InvalidFlow):
            ZdFlow(FieldMatrix.zeros(2, 2, 3), (frozenset({"1", "2"}), frozenset({"1"})))
        with self.assertRaises(InvalidFlow):
            ZdFlow(FieldMatrix.zeros(2, 2, 3), (frozenset({"1", "2"}), frozenset()))

    def test_triangular_form(self):
        self.assertTrue(check_triangular_form(self.path, self.path_flow.correction, ["1", "2"]))
        self.assertFalse(check_triangular_form(self.path, self.path_flow.correction, ["2", "1"]))
        self.assertFalse(check_triangular_form(self.path, self.path_flow.correction, ["1"]))

    def test_triangular_form_matches_validation(self):
        rng = np.random.default_rng(self.seed + 1)
        for lg, result in self.instances:
            flow = result.flow
            self.assertTrue(all(check_triangular_form(lg, flow.correction, t) for t in totalisations(flow)))
            # perturb one entry; validity and triangularity must still agree
            entries = flow.correction.entries.copy()
            i, j = rng.integers(0, len(lg.vertices), size=2)
            entries[i, j] = (entries[i, j] + rng.integers(1, lg.d)) % lg.d
            perturbed = ZdFlow(FieldMatrix(entries, lg.d), flow.layers)
            valid = validate_flow(lg, perturbed).valid
            triangular = all(check_triangular_form(lg, perturbed.correction, t) for t in totalisations(perturbed))
            self.assertEqual(valid, triangular)

    def test_corrections_respect_layers(self):
        for lg, result in self.instances:
            flow = result.flow
            sets = corrections(lg, flow)
            layer = flow.layer_of()
            for v in sets.domain:
                self.assertNotIn(v, sets.x[v])
                self.assertNotIn(v, sets.z[v])
                self.assertFalse(set(sets.x[v]) & lg.inputs)
                for u in set(sets.x[v]) | set(sets.z[v]):
                    # only vertices measured after v, or outputs, are corrected
                    self.assertLess(layer[u], layer[v])
            order = induced_order(sets)
            for u, v in order.relation:
                self.assertLess(layer[u], layer[v])
            self.assertTrue(order.is_respected_by([w for w in flow.totalisation() if w not in lg.outputs]))

    def test_induced_order(self):
        outputs_only = CorrectionSets(3, {"a": {"o": 1}}, {"a": {"o": 2}})
        self.assertEqual(induced_order(outputs_only).relation, frozenset())

        chain = CorrectionSets(3, {"a": {}, "b": {}, "c": {}}, {"a": {}, "b": {"a": 1}, "c": {"b": 2}})
        order = induced_order(chain)
        self.assertTrue(order.precedes("a", "b"))
        # transitive closure
        self.assertTrue(order.precedes("a", "c"))
        self.assertEqual(order.measurement_order(), ["c", "b", "a"])
        self.assertTrue(order.is_respected_by(["c", "b", "a"]))
        self.assertFalse(order.is_respected_by(["a", "b", "c"]))
        prefixes = order.measurement_prefixes()
        self.assertEqual(prefixes, [frozenset(), frozenset({"c"}), frozenset({"b", "c"}), frozenset({"a", "b", "c"})])

        cyclic = CorrectionSets(3, {"a": {"b": 1}, "b": {}}, {"a": {}, "b": {"a": 1}})
        with self.assertRaises(CyclicDependency) as context:
            induced_order(cyclic)
        self.assertEqual(set(context.exception.cycle), {"a", "b"})

    def test_correction_sets(self):
        with self.assertRaises(InvalidFlow):
            CorrectionSets(3, {"a": {"a": 1}}, {"a": {}})
        with self.assertRaises(InvalidFlow):
            CorrectionSets(3, {"a": {}}, {"b": {}})
        sets = CorrectionSets(3, {"a": {"b": 3, "c": 4}}, {"a": {}})
        self.assertEqual(sets.x, {"a": {"c": 1}})
        self.assertEqual(sets.to_json(), {"a": {"x": {"c": 1}, "z": {}}})

    def test_more_delayed(self):
        lam = [{"2", "3"}, {"1"}]
        phi = [{"3"}, {"2"}, {"1"}]
        self.assertEqual(is_more_delayed(lam, phi), Delay.MORE)
        self.assertEqual(is_more_delayed(phi, lam), Delay.NOT_MORE)
        self.assertEqual(is_more_delayed(lam, lam), Delay.NOT_MORE)
        crossing = [{"1"}, {"2", "3", "4"}, {"5"}]
        other = [{"1", "2"}, {"3"}, {"4", "5"}]
        self.assertEqual(is_more_delayed(crossing, other), Delay.INCOMPARABLE)
        with self.assertRaises(PartitionMismatch):
            is_more_delayed([{"1"}], [{"2"}])
        with self.assertRaises(PartitionMismatch):
            is_more_delayed([{"1"}, {"1"}], [{"1"}])

    def test_json_round_trip_and_schedule(self):
        data = flow_to_json(self.path_flow)
        self.assertEqual(data, {"C": [[1, 0], [0, 0]], "layers": [["2"], ["1"]]})
        self.assertEqual(parse_flow(data, self.path.graph), self.path_flow)
        with self.assertRaises(InvalidFlow):
            parse_flow({"C": [[1]]}, self.path.graph)
        schedule = schedule_report(self.path, self.path_flow)
        self.assertEqual(schedule["depth"], 1)
        self.assertEqual(schedule["outputs"], ["2"])
        self.assertEqual(schedule["rounds"][0]["measure"], ["1"])
        self.assertEqual(schedule["rounds"][0]["corrections"]["1"], {"x": {}, "z": {"2": 1}})


if __name__ == '__main__':
    unittest.main()
