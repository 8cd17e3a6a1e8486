"""Regression test functions used by the simulation studies."""

from dataclasses import dataclass
from typing import Callable, Tuple

import numpy as np


@dataclass(frozen=True)
class TestFunction:
    id: str
    evaluate: Callable[[np.ndarray], np.ndarray]
    noise_sd: float
    design_interval: Tuple[float, float]
    formula: str = ""

    __test__ = False  # not a pytest class

    def __call__(self, x):
        return self.evaluate(np.asarray(x, dtype=float))


def _peaked(x):
    return 3.0 + 3.0 * np.abs(x) ** 2.5 + x**2 + 4.0 * np.cos(10.0 * x)


def _m1(x):
    return np.sin(5.0 * np.pi * x)


def _m2(x):
    return np.sin(15.0 * np.pi * x)


def _m3(x):
    return 1.0 - 48.0 * x + 218.0 * x**2 - 315.0 * x**3 + 145.0 * x**4


def _m4(x):
    return 0.3 * np.exp(-64.0 * (x - 0.25) ** 2) + 0.7 * np.exp(-256.0 * (x - 0.75) ** 2)


GLOBAL_DESIGN = (-0.2, 1.2)

FUNCTIONS = {
    "local": TestFunction("local", _peaked, 0.1, (-1.0, 1.0), "3 + 3|x|^(5/2) + x^2 + 4 cos(10x)"),
    "m1": TestFunction("m1", _m1, 0.3, GLOBAL_DESIGN, "sin(5 pi x)"),
    "m2": TestFunction("m2", _m2, 0.3, GLOBAL_DESIGN, "sin(15 pi x)"),
    "m3": TestFunction("m3", _m3, 0.3, GLOBAL_DESIGN, "1 - 48x + 218x^2 - 315x^3 + 145x^4"),
    "m4": TestFunction(
        "m4", _m4, 0.05, GLOBAL_DESIGN, "0.3 exp(-64 (x-0.25)^2) + 0.7 exp(-256 (x-0.75)^2)"
    ),
}


def get_function(name: str) -> TestFunction:
    try:
        return FUNCTIONS[name]
    except KeyError:
        raise KeyError(f"unknown test function {name!r}; choose from {sorted(FUNCTIONS)}") from None
