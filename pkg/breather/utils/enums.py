from enum import Enum


class CPolicy(Enum):
    zero = "zero"
    quadrature_f3_zero = "quadrature_f3_zero"
    explicit = "explicit"


class NonlinearKind(Enum):
    polynomial = "polynomial"
    nonpolynomial = "nonpolynomial"


class ModelKind(Enum):
    cubic = "cubic"
    nonpolynomial = "nonpolynomial"


class SplittingScheme(Enum):
    strang = "strang"
    lie = "lie"


class LinearSolver(Enum):
    banded = "banded"
    thomas = "thomas"


class BoundaryPolicy(Enum):
    dirichlet = "dirichlet"


class StabilityVerdict(Enum):
    stable = "stable"
    unstable = "unstable"
    blow_up = "blow_up"
