# -*- coding: utf-8 -*-
import logging
import pathlib
import unittest
import os

import numpy as np

from zdflow import utils
from zdflow.finder import find_flow
from zdflow.graph import LabelledOpenGraph, load_graph, random_labelling, random_open_graph


class Base(unittest.TestCase):
    """Base class"""

    work_dir = pathlib.Path.cwd().as_posix()
    test_path = pathlib.Path(__file__).parent.absolute().as_posix()
    examples = utils.PACKAGE_ROOT / "configs" / "examples"
    seed = 20240611

    @classmethod
    def setUpClass(cls):
        """setup the default test parameters"""
        cls.setUpLog()
        logging.info(f"*** run test case in work dir '{cls.work_dir}' "
                     f"and save logs in test dir '{cls.test_path}/logs'. ***")
        cls.rng = np.random.default_rng(cls.seed)

    @classmethod
    def tearDownClass(cls):
        pass

    @classmethod
    def setUpLog(cls):
        if not os.path.exists(cls.test_path / pathlib.Path('logs')):
            os.makedirs(cls.test_path / pathlib.Path('logs'))
        logging.basicConfig(
            filename=str(cls.test_path / pathlib.Path(f'logs/{cls.__name__}.log')),
            filemode="w",
            format='%(asctime)s %(levelname)7s %(name)6s %(module)10s::%(funcName)12s> %(message)s',
            datefmt='%Y-%m-%d %H:%M:%S',
            encoding="utf-8",
            level=logging.DEBUG,
            force=True,
        )
        logging.captureWarnings(True)
        logging.getLogger("py.warnings").setLevel(logging.ERROR)
        logging.getLogger('asyncio').propagate = False
        logging.getLogger('fsspec').propagate = False
        logging.getLogger('distributed').propagate = False
        # the finder logs every layer at debug level
        logging.getLogger('zdflow.finder').setLevel(logging.INFO)

    @classmethod
    def load_example(cls, name: str) -> LabelledOpenGraph:
        return load_graph(cls.examples / name)

    @staticmethod
    def random_instance(rng: np.random.Generator, n: int, d: int, density: float = 0.5, **kwargs) -> LabelledOpenGraph:
        graph = random_open_graph(n, d, rng, density=density, **kwargs)
        return LabelledOpenGraph(graph, random_labelling(graph, rng))

    @classmethod
    def flow_bearing(cls, rng: np.random.Generator, count: int, sizes, moduli, max_measured: int, attempts: int = 5000):
        """
        (lg, result) pairs with a flow, at most max_measured measured vertices and at least one measured vertex
        """
        found = []
        for _ in range(attempts):
            n = int(rng.choice(sizes))
            d = int(rng.choice(moduli))
            n_outputs = int(rng.integers(max(1, n - max_measured), n))
            lg = cls.random_instance(rng, n, d, density=0.6, n_outputs=n_outputs)
            result = find_flow(lg)
            if result.found:
                found.append((lg, result))
                if len(found) == count:
                    break
        return found
