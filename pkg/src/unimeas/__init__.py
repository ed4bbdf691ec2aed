"""Exact measure oracles, lower semicomputable tests and randomness checks."""
from __future__ import annotations

from .basis import BasicFunction, Bump, Hat, LinComb, Max, Min, One, basic_function, index_of, parse_sexpr, to_sexpr
from .errors import (
    BudgetExceeded,
    MonotonicityError,
    OutOfRange,
    PreconditionError,
    RepresentationError,
    UnimeasError,
)
from .exact import Dyadic, DyadicInterval, RealStream
from .measures import (
    MeasureOracle,
    bernoulli,
    dirac,
    integrate_basic,
    lebesgue_unit,
    measure_from_descriptor,
    measure_metric,
    mixture,
    norm,
    product,
    pushforward,
    uniform_cantor,
)
from .spaces import BAIRE, CANTOR, REAL, UNIT, CauchyName, Space

__version__ = "0.1.0"

__all__ = [
    "BAIRE",
    "CANTOR",
    "REAL",
    "UNIT",
    "BasicFunction",
    "BudgetExceeded",
    "Bump",
    "CauchyName",
    "Dyadic",
    "DyadicInterval",
    "Hat",
    "LinComb",
    "Max",
    "MeasureOracle",
    "Min",
    "MonotonicityError",
    "One",
    "OutOfRange",
    "PreconditionError",
    "RealStream",
    "RepresentationError",
    "Space",
    "UnimeasError",
    "basic_function",
    "bernoulli",
    "dirac",
    "index_of",
    "integrate_basic",
    "lebesgue_unit",
    "measure_from_descriptor",
    "measure_metric",
    "mixture",
    "norm",
    "parse_sexpr",
    "product",
    "pushforward",
    "to_sexpr",
    "uniform_cantor",
]
