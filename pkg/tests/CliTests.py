# -*- coding: utf-8 -*-
import contextlib
import io
import json
import pathlib
import tempfile
import unittest
from unittest import TestCase

from zdflow import utils
from zdflow.cli import EXIT_ERROR, EXIT_PASS, EXIT_PROPERTY, main
from zdflow.pattern import M, N, Pattern, Z, pattern_to_json
from . import Base


class CliTests(Base, TestCase):
    """Tests the command line entry point: exit codes and json output."""

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.tmp_path = pathlib.Path(self.tmp.name)

    def tearDown(self):
        self.tmp.cleanup()

    def run_cli(self, *argv):
        """run main with --quiet and return (exit code, parsed stdout or None)"""
        out = io.StringIO()
        with contextlib.redirect_stdout(out):
            code = main([*argv, "--quiet"])
        text = out.getvalue()
        return code, json.loads(text) if text.strip() else None

    def example(self, name: str) -> str:
        return str(self.examples / name)

    def test_find(self):
        code, result = self.run_cli("find", self.example("path.json"))
        self.assertEqual(code, EXIT_PASS)
        self.assertEqual(result["outcome"], "found")
        self.assertEqual(result["layers"], [["2"], ["1"]])
        self.assertEqual(result, {**result, **utils.read_json(self.examples / "path_flow.json")})

        code, result = self.run_cli("find", self.example("triangle.json"))
        self.assertEqual(code, EXIT_PROPERTY)
        self.assertEqual(result["stuck"], ["1", "2", "3"])

    def test_bad_input(self):
        data = utils.read_json(self.examples / "path.json")
        data["d"] = 4
        path = self.tmp_path / "composite.json"
        utils.write_json(data, path)
        code, result = self.run_cli("find", str(path))
        self.assertEqual(code, EXIT_ERROR)
        self.assertIsNone(result)

        self.assertEqual(self.run_cli("find", str(self.tmp_path / "missing.json"))[0], EXIT_ERROR)
        broken = self.tmp_path / "broken.json"
        broken.write_text("{ not json")
        self.assertEqual(self.run_cli("find", str(broken))[0], EXIT_ERROR)
        # the file already names its modulus
        self.assertEqual(self.run_cli("find", self.example("path.json"), "--d-override", "5")[0], EXIT_ERROR)

    def test_d_override(self):
        data = utils.read_json(self.examples / "path.json")
        del data["d"]
        path = self.tmp_path / "no_modulus.json"
        utils.write_json(data, path)
        self.assertEqual(self.run_cli("find", str(path))[0], EXIT_ERROR)
        code, result = self.run_cli("find", str(path), "--d-override", "5")
        self.assertEqual(code, EXIT_PASS)
        self.assertEqual(result["layers"], [["2"], ["1"]])

    def test_find_then_verify(self):
        out = io.StringIO()
        with contextlib.redirect_stdout(out):
            self.assertEqual(main(["find", self.example("line4.json"), "--json", "--quiet"]), EXIT_PASS)
        report = json.loads(out.getvalue())
        self.assertEqual(report["subcommand"], "find")
        self.assertEqual(len(report["input_digest"]), 64)
        self.assertIn("find", report["timings"])

        wrapped = self.tmp_path / "report.json"
        utils.write_json(report, wrapped)
        code, result = self.run_cli("verify", self.example("line4.json"), str(wrapped))
        self.assertEqual(code, EXIT_PASS)
        self.assertTrue(result["valid"])

        # zero corrections are not a flow for line4
        bare = self.tmp_path / "zero.json"
        utils.write_json({"C": [[0] * 4] * 4, "layers": [["4"], ["3"], ["2"], ["1"]]}, bare)
        code, result = self.run_cli("verify", self.example("line4.json"), str(bare))
        self.assertEqual(code, EXIT_PROPERTY)
        self.assertFalse(result["valid"])

    def test_find_any_labelling(self):
        code, result = self.run_cli("find-any-labelling", self.example("unlabelled.json"))
        self.assertEqual(code, EXIT_PASS)
        self.assertEqual(result["graph"]["labels"], {"a": [0, 1], "b": [0, 1]})

    def test_classify(self):
        code, result = self.run_cli("classify", self.example("path.json"), "--draws", "2")
        self.assertEqual(code, EXIT_PASS)
        self.assertEqual(result["verdict"], "robust-evidence")

        code, result = self.run_cli(
            "classify", self.example("path.json"), self.example("path_flow.json"), "--draws", "2", "--seed", "3"
        )
        self.assertEqual(code, EXIT_PASS)

        # classify straight from a pattern file
        code, result = self.run_cli("classify", self.example("operator_pattern.json"), "--draws", "2")
        self.assertEqual(code, EXIT_PASS)

        self.assertEqual(self.run_cli("classify", self.example("triangle.json"))[0], EXIT_PROPERTY)
        self.assertEqual(
            self.run_cli("classify", self.example("line4.json"), "--draws", "1", "--max-branches", "8")[0],
            EXIT_ERROR,
        )

    def test_simulate(self):
        code, result = self.run_cli("simulate", self.example("teleport.json"), "--seed", "7")
        self.assertEqual(code, EXIT_PASS)
        self.assertEqual([row["outcome"] for row in result["branches"]], ["0", "1", "2"])
        self.assertAlmostEqual(result["total_probability"], 1.0)
        self.assertAlmostEqual(result["min_fidelity"], 1.0)
        self.assertEqual(self.run_cli("simulate", self.example("teleport.json"), "--seed", "7")[1], result)

    def test_oracle(self):
        code, result = self.run_cli("oracle", self.example("path.json"))
        self.assertEqual(code, EXIT_PASS)
        self.assertTrue(result["agree"])
        self.assertEqual(result["oracle"]["min_depth"], 1)

    def test_standardize(self):
        code, result = self.run_cli("standardize", self.example("operator_pattern.json"))
        self.assertEqual(code, EXIT_PASS)
        self.assertEqual(result["direction"], "execution")
        self.assertEqual(result["commands"][0], {"op": "N", "node": "2"})

        code, result = self.run_cli("standardize", self.example("operator_pattern.json"), "--direction", "operator")
        self.assertEqual(code, EXIT_PASS)
        self.assertEqual(result["direction"], "operator")
        self.assertEqual(result["commands"][-1], {"op": "N", "node": "2"})

        # correction before the signal is measured
        pattern = Pattern(3, [], ["2"], (N("1"), N("2"), Z("2", "1"), M("1", (1, 0))))
        path = self.tmp_path / "not_runnable.json"
        utils.write_json(pattern_to_json(pattern), path)
        code, result = self.run_cli("standardize", str(path))
        self.assertEqual(code, EXIT_PROPERTY)
        self.assertEqual(result["index"], 2)

    def test_extract(self):
        code, result = self.run_cli("extract", self.example("path_pattern.json"))
        self.assertEqual(code, EXIT_PASS)
        self.assertEqual(result["order"], ["1"])
        self.assertEqual(result["graph"]["edges"], [["1", "2", 1]])

        pattern = Pattern(3, [], ["2"], (N("1"), M("1", (1, 0)), N("2")))
        path = self.tmp_path / "late_prepare.json"
        utils.write_json(pattern_to_json(pattern), path)
        self.assertEqual(self.run_cli("extract", str(path))[0], EXIT_ERROR)


if __name__ == '__main__':
    unittest.main()
