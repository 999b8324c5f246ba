# -*- coding: utf-8 -*-
"""
A package for finding, validating and simulating Z_d-flows of qudit measurement-based quantum computations,
including a measurement-pattern rewriter and a dense state-vector simulator that checks determinism.

Modules:
    * gfp: arithmetic and linear algebra over the prime field Z_d.
    * graph: labelled open Z_d-graphs, submatrices and multisets.
    * flow: Z_d-flows, their validity conditions, corrections and the depth/delay order theory.
    * finder: the polynomial-time maximally delayed flow finder and its any-labelling variant.
    * oracle: brute-force ground truth for tiny instances.
    * meas: measurement spaces, measurement unitaries and their eigenbases.
    * sim: qudit graph states, branch maps, stabilizers and determinism classification.
    * pattern: measurement patterns, runnability, standardization and flow round-tripping.
    * cli: command-line entry point.
    * errors, logs, utils: shared errors, logging setup and configuration helpers.
"""

from zdflow import version

__version__ = version.__version__
