# -*- coding: utf-8 -*-
"""
This module contains the errors raised by the package.

All errors derive from ZdFlowError and from the closest builtin exception, so callers may catch either.
"""


class ZdFlowError(Exception):
    """Base class for every error raised by zdflow."""


# field arithmetic
class NonPrimeModulus(ZdFlowError, ValueError):
    pass


class ModulusTooLarge(ZdFlowError, ValueError):
    pass


class EvenModulus(ZdFlowError, ValueError):
    pass


class ZeroInverse(ZdFlowError, ZeroDivisionError):
    pass


class DimensionMismatch(ZdFlowError, ValueError):
    pass


# graphs and labels
class UnknownVertex(ZdFlowError, ValueError):
    pass


class InvalidGraph(ZdFlowError, ValueError):
    pass


class MissingLabel(ZdFlowError, ValueError):
    pass


class InvalidLabel(ZdFlowError, ValueError):
    pass


class ZeroLabel(InvalidLabel):
    pass


# flows and orders
class InvalidFlow(ZdFlowError, ValueError):
    pass


class CyclicDependency(ZdFlowError, ValueError):
    def __init__(self, message: str, cycle: list = None):
        super().__init__(message)
        self.cycle = cycle or []


class IndexOutOfRange(ZdFlowError, IndexError):
    pass


class PartitionMismatch(ZdFlowError, ValueError):
    pass


class InstanceTooLarge(ZdFlowError, ValueError):
    pass


# measurements and simulation
class NotInMeasurementSpace(ZdFlowError, ValueError):
    pass


class WrongInputRegister(ZdFlowError, ValueError):
    pass


class InputSupport(ZdFlowError, ValueError):
    pass


class OrderViolation(ZdFlowError, ValueError):
    pass


class TooManyBranches(ZdFlowError, ValueError):
    pass


# patterns
class NotRunnable(ZdFlowError, ValueError):
    def __init__(self, message: str, index: int = None):
        super().__init__(message)
        self.index = index


class NotStandardForm(ZdFlowError, ValueError):
    pass


class PatternSyntaxError(ZdFlowError, ValueError):
    pass
