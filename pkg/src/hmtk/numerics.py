"""Order-independent reductions.

Every mass, inner product and norm that ends up in a report goes through
these helpers so the numbers do not depend on evaluation order or on how
many worker threads were used.  Sums are correctly rounded (the exact real
sum rounded once), which is stronger than a Kahan-style error bound and
makes two different evaluation orders agree bit for bit.
"""
from __future__ import annotations

import math
from fractions import Fraction
from itertools import accumulate

import numpy as np

_INT64_LIMIT = 2 ** 62


def exact_sum(values) -> float:
    """Correctly rounded sum of a sequence of floats."""
    if isinstance(values, np.ndarray):
        values = values.tolist()
    return math.fsum(values)


def exact_dot(a: np.ndarray, b: np.ndarray) -> float:
    """Correctly rounded sum of the (individually rounded) products a*b."""
    return math.fsum((np.asarray(a, dtype=float) * np.asarray(b, dtype=float)).tolist())


class ScaledIntegers:
    """Represent a vector of floats exactly as integers over one power of two.

    Prefix sums of the integers are exact, and converting back performs a
    single correctly rounded division, so ``prefix(order)[j]`` equals
    ``math.fsum`` of the same elements bit for bit.
    """

    def __init__(self, values: np.ndarray):
        values = np.asarray(values, dtype=float)
        ratios = [float(v).as_integer_ratio() for v in values.tolist()]
        self.denominator = max((d for _, d in ratios), default=1)
        self.ints = [n * (self.denominator // d) for n, d in ratios]
        total = sum(abs(i) for i in self.ints)
        self._fits_int64 = total < _INT64_LIMIT
        if self._fits_int64:
            self._array = np.array(self.ints, dtype=np.int64)
            # exact: the denominator is a power of two
            self._scale = float(self.denominator)

    def prefix(self, order: np.ndarray) -> np.ndarray:
        """Correctly rounded cumulative sums of the values taken in ``order``."""
        if self._fits_int64:
            cs = np.cumsum(self._array[order])
            return cs.astype(np.float64) / self._scale
        ints = self.ints
        den = self.denominator
        return np.array([a / den for a in accumulate(ints[i] for i in order.tolist())],
                        dtype=float)


def exact_cumsum(values) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    return ScaledIntegers(values).prefix(np.arange(values.size))


def powm(values, exponent: float) -> np.ndarray:
    """Elementwise ``math.pow``.

    numpy's vectorised ``power`` may use SIMD kernels that differ from libm in
    the last bit; oracles written with plain ``math.pow`` must agree exactly.
    """
    arr = np.asarray(values, dtype=float)
    if arr.size == 0:
        return arr.copy()
    uniq, inverse = np.unique(arr, return_inverse=True)
    powered = np.array([math.pow(u, exponent) for u in uniq.tolist()], dtype=float)
    return powered[inverse].reshape(arr.shape)


class ExactAccumulator:
    """Exact running sum of floats (rational arithmetic)."""

    __slots__ = ("_total",)

    def __init__(self, total: Fraction | None = None):
        self._total = Fraction(0) if total is None else total

    def add(self, value: float) -> None:
        self._total += Fraction(value)

    def merge(self, other: "ExactAccumulator") -> None:
        self._total += other._total

    def value(self) -> float:
        return float(self._total)


def linear_fit(x, y) -> tuple[float, float]:
    """Least-squares ``y ~ slope * x + intercept`` from correctly rounded sums."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n = x.size
    if n < 2:
        return 0.0, (float(y[0]) if n else 0.0)
    mx = exact_sum(x) / n
    my = exact_sum(y) / n
    dx = x - mx
    sxx = exact_sum(dx * dx)
    if sxx == 0.0:
        return 0.0, my
    slope = exact_sum(dx * (y - my)) / sxx
    return slope, my - slope * mx
