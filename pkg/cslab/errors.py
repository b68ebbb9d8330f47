"""Exceptions raised by cslab.

Every error carries the process exit code the cli reports for it.
"""


class CslabError(Exception):
    exit_code = 2


class ConfigError(CslabError, ValueError):
    """
    raise when cslab is unable to configure correctly
    """

    exit_code = 1


class HypothesisViolation(CslabError):
    exit_code = 3


class NumericalFailure(CslabError):
    exit_code = 2


class ZeroPoint(NumericalFailure, ValueError): ...


class FaceMismatch(NumericalFailure, ValueError): ...


class LevelOutOfRange(NumericalFailure, ValueError): ...


class DegenerateTriangle(NumericalFailure): ...


class FoldedImage(NumericalFailure): ...


class NonConvergence(NumericalFailure): ...


class NumericOverflow(NumericalFailure): ...


class SingularJacobian(NumericalFailure): ...


class UnsupportedModel(NumericalFailure): ...


class NoAxialFixedPoint(NumericalFailure): ...


class MultipleRoots(NumericalFailure): ...


class NewtonSingular(NumericalFailure): ...


class ComplexInternalEigenvalues(NumericalFailure): ...


class NonpositiveEigenvalue(NumericalFailure): ...


class InsufficientSamples(NumericalFailure): ...


class BasisSingular(NumericalFailure): ...


class UnconvergedSurface(NumericalFailure): ...


class HullDegenerate(NumericalFailure): ...


class OrbitHitsFixedPoint(NumericalFailure): ...


class OutsideOctant(NumericalFailure, ValueError): ...
