"""Canonical example spaces with known geometry.

All generators use cell-centred grids: point ``i`` of a 1-D grid sits at
``(i + 1/2) * spacing`` and carries the cell volume as its mass, so the
space models Lebesgue measure on ``[0, n * spacing]``.

Unit-scale convention: radius 1 must separate the grid resolution from the
extent of the space so that both branches of the Lipschitz functional and
the unit-ball tests are populated.  Generators therefore require a metric
extent of at least 4 and a metric spacing of at most 1/2.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .space import FiniteHomSpace

KINDS = ("grid1d", "grid2d", "snowflake", "power_metric", "weighted_grid")
MIN_EXTENT = 4.0
MAX_SPACING = 0.5

_DEFAULT_EXPONENT = {"grid1d": 1.0, "grid2d": 1.0, "snowflake": 0.5,
                     "power_metric": 2.0, "weighted_grid": 0.0}


@dataclass(frozen=True)
class GeneratorSpec:
    """What to generate.

    ``n`` is the number of points, except for ``grid2d`` where it is the
    number of points per side.  ``exponent`` is the snowflake ``eps``
    (``d = |x-y|^eps``), the power-metric ``p`` (``d = |x-y|^p``) or the
    weight exponent ``a`` (``mu_i = h (1 + |x_i|)^a``).  ``spacing`` defaults
    to the value giving a metric extent of exactly 4.
    """

    kind: str
    n: int
    spacing: float | None = None
    exponent: float | None = None

    def resolved(self) -> "GeneratorSpec":
        exponent = _DEFAULT_EXPONENT.get(self.kind) if self.exponent is None else self.exponent
        spacing = self.spacing
        if spacing is None and self.kind in KINDS:
            spacing = MIN_EXTENT ** (1.0 / self.metric_exponent(exponent)) / self.n
        return GeneratorSpec(self.kind, self.n, spacing, exponent)

    def metric_exponent(self, exponent=None) -> float:
        exponent = self.exponent if exponent is None else exponent
        if self.kind in ("snowflake", "power_metric"):
            return float(exponent)
        return 1.0

    def validate(self) -> None:
        if self.kind not in KINDS:
            raise ValidationError(f"unknown generator kind {self.kind!r}; expected one of {KINDS}")
        if int(self.n) != self.n or self.n < 8:
            raise ValidationError(f"n must be an integer >= 8, got {self.n}")
        if self.spacing is None or not self.spacing > 0:
            raise ValidationError(f"spacing must be positive, got {self.spacing}")
        if self.kind == "snowflake" and not 0 < self.exponent <= 1:
            raise ValidationError(f"snowflake exponent must lie in (0, 1], got {self.exponent}")
        if self.kind == "power_metric" and not self.exponent >= 1:
            raise ValidationError(f"power-metric exponent must be >= 1, got {self.exponent}")
        e = self.metric_exponent()
        extent = (self.n * self.spacing) ** e
        step = self.spacing ** e
        if extent < MIN_EXTENT * (1 - 1e-12):
            raise ValidationError(
                f"metric extent {extent:.6g} < {MIN_EXTENT}: radius 1 would not sit inside the space")
        if step > MAX_SPACING:
            raise ValidationError(
                f"metric spacing {step:.6g} > {MAX_SPACING}: grid too coarse for unit-scale balls")


def pairwise_distances(coords: np.ndarray, kind: str = "euclidean",
                       param: float | None = None) -> np.ndarray:
    coords = np.asarray(coords, dtype=float)
    if coords.ndim == 1:
        coords = coords[:, None]
    if coords.shape[1] == 1:
        base = np.abs(coords[:, 0][:, None] - coords[:, 0][None, :])
    else:
        diff = coords[:, None, :] - coords[None, :, :]
        base = np.sqrt((diff * diff).sum(axis=-1))
    if kind == "euclidean":
        return base
    if kind in ("snowflake", "power"):
        if param is None:
            raise ValidationError(f"metric kind {kind!r} needs a 'param'")
        return base ** float(param)
    raise ValidationError(f"unknown metric kind {kind!r}")


def generate(spec: GeneratorSpec) -> FiniteHomSpace:
    spec = spec.resolved()
    spec.validate()
    h, n, a = spec.spacing, spec.n, spec.exponent
    if spec.kind == "grid2d":
        ticks = (np.arange(n) + 0.5) * h
        xx, yy = np.meshgrid(ticks, ticks, indexing="ij")
        coords = np.column_stack([xx.ravel(), yy.ravel()])
        weight = np.full(n * n, h * h)
        metric = {"kind": "euclidean"}
    else:
        coords = ((np.arange(n) + 0.5) * h)[:, None]
        weight = np.full(n, h)
        metric = {"kind": "euclidean"}
        if spec.kind == "snowflake":
            metric = {"kind": "snowflake", "param": float(a)}
        elif spec.kind == "power_metric":
            metric = {"kind": "power", "param": float(a)}
        elif spec.kind == "weighted_grid":
            weight = h * (1.0 + np.abs(coords[:, 0])) ** a
    dist = pairwise_distances(coords, metric["kind"], metric.get("param"))
    return FiniteHomSpace(dist, weight, coords, name=spec_name(spec), metric=metric)


def spec_name(spec: GeneratorSpec) -> str:
    parts = [spec.kind, f"n{spec.n}"]
    if spec.kind in ("snowflake", "power_metric", "weighted_grid"):
        parts.append(f"e{spec.exponent:g}")
    parts.append(f"h{spec.spacing:.6g}")
    return "-".join(parts)


def known_a0(spec: GeneratorSpec) -> float:
    """The quasi-metric constant each generator plants."""
    spec = spec.resolved()
    if spec.kind == "power_metric":
        return 2.0 ** (spec.exponent - 1)
    return 1.0


def planted_suite() -> dict[str, GeneratorSpec]:
    """Instances with known answers for the geometry classifiers.

    ``weighted_up`` has mass growing like ``(1+x)^2`` (no upper bound on unit
    balls), ``weighted_down`` mass decaying like ``(1+x)^{-1/2}`` (no lower
    bound); both extents are large enough for the planted defect to clear the
    default thresholds.
    """
    return {
        "grid1d": GeneratorSpec("grid1d", 256),
        "grid2d": GeneratorSpec("grid2d", 32),
        "snowflake": GeneratorSpec("snowflake", 256, exponent=0.5),
        "weighted_up": GeneratorSpec("weighted_grid", 256, spacing=1 / 16, exponent=2.0),
        "weighted_down": GeneratorSpec("weighted_grid", 1024, spacing=1 / 4, exponent=-0.5),
    }


def expected_verdicts(label: str) -> dict[str, bool]:
    if label in ("grid1d", "grid2d", "snowflake"):
        return {"lower": True, "upper": True, "ahlfors": True}
    if label == "weighted_up":
        return {"upper": False, "ahlfors": False}
    if label == "weighted_down":
        return {"lower": False, "ahlfors": False}
    raise KeyError(label)


def unit_window_mass(a: float, x: float) -> float:
    """``int_{x-1}^{x+1} (1+|t|)^a dt`` on ``t >= 0``: continuum reference for
    ``mu(B(x, 1))`` on a weighted grid."""
    lo, hi = max(x - 1.0, 0.0), x + 1.0
    if abs(a + 1) < 1e-12:
        return math.log1p(hi) - math.log1p(lo)
    return ((1 + hi) ** (a + 1) - (1 + lo) ** (a + 1)) / (a + 1)
