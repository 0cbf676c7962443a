"""Finite metric-measure spaces and their ball geometry.

A :class:`FiniteHomSpace` is a quadrature model of a space of homogeneous
type: ``n`` atoms carrying positive masses and a quasi-metric given as a
dense distance matrix.  Balls are open, ``B(x, r) = {z : d(x, z) < r}``.

Only finitely many radii matter for any supremum over balls, since ball
membership changes only when ``r`` crosses a pairwise distance.  The
:class:`BallQueryCache` sorts every row of the distance matrix once so that
``mu(B(x, r))`` becomes a binary search.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import ValidationError
from .numerics import ScaledIntegers, exact_sum

TOL = 1e-9
EXACT_A0_LIMIT = 2048


@dataclass(frozen=True, eq=False)
class FiniteHomSpace:
    """Points ``0..n-1`` with distances ``dist`` and atom masses ``weight``.

    ``metric`` records how ``dist`` was produced (``{"kind": "euclidean"}``,
    ``{"kind": "snowflake", "param": eps}``, ...) so the space can be written
    back to disk without storing the matrix.
    """

    dist: np.ndarray
    weight: np.ndarray
    coords: np.ndarray | None = None
    name: str = "space"
    metric: dict = field(default_factory=lambda: {"kind": "matrix"})

    def __post_init__(self):
        dist = np.array(self.dist, dtype=np.float64)
        weight = np.array(self.weight, dtype=np.float64).reshape(-1)
        if dist.ndim != 2 or dist.shape[0] != dist.shape[1]:
            raise ValidationError(f"distance matrix must be square, got shape {dist.shape}")
        if dist.shape[0] != weight.size:
            raise ValidationError(
                f"{weight.size} weights for a {dist.shape[0]}-point distance matrix")
        if dist.shape[0] == 0:
            raise ValidationError("empty space")
        dist.setflags(write=False)
        weight.setflags(write=False)
        object.__setattr__(self, "dist", dist)
        object.__setattr__(self, "weight", weight)
        if self.coords is not None:
            coords = np.array(self.coords, dtype=np.float64)
            if coords.ndim == 1:
                coords = coords[:, None]
            coords.setflags(write=False)
            object.__setattr__(self, "coords", coords)

    @property
    def n(self) -> int:
        return self.weight.size

    @property
    def point_ids(self) -> range:
        return range(self.n)

    @cached_property
    def total_mass(self) -> float:
        return exact_sum(self.weight)

    @cached_property
    def min_distance(self) -> float:
        """Smallest positive pairwise distance (inf for a single point)."""
        if self.n == 1:
            return math.inf
        off = self.dist[~np.eye(self.n, dtype=bool)]
        return float(off.min())

    @cached_property
    def diameter(self) -> float:
        return float(self.dist.max())

    @cached_property
    def resolution(self) -> float:
        """Largest nearest-neighbour distance; below this scale balls are atoms."""
        if self.n == 1:
            return 0.0
        d = self.dist + np.diag(np.full(self.n, np.inf))
        return float(d.min(axis=1).max())

    @cached_property
    def balls(self) -> "BallQueryCache":
        return BallQueryCache(self)

    @cached_property
    def distinct_distances(self) -> np.ndarray:
        """Sorted distinct positive pairwise distances."""
        iu = np.triu_indices(self.n, 1)
        return np.unique(self.dist[iu])

    def restrict(self, points) -> "FiniteHomSpace":
        """Subspace on ``points`` with the inherited metric and weights."""
        idx = np.asarray(sorted(set(int(p) for p in points)), dtype=int)
        coords = None if self.coords is None else self.coords[idx]
        return FiniteHomSpace(self.dist[np.ix_(idx, idx)], self.weight[idx], coords,
                              name=f"{self.name}|{idx.size}", metric=dict(self.metric))


class BallQueryCache:
    """Per-centre sorted distances with exact cumulative masses."""

    def __init__(self, space: FiniteHomSpace):
        n = space.n
        self.order = np.argsort(space.dist, axis=1, kind="stable")
        self.sorted_dist = np.take_along_axis(space.dist, self.order, axis=1)
        scaled = ScaledIntegers(space.weight)
        cum = np.empty((n, n), dtype=float)
        for x in range(n):
            cum[x] = scaled.prefix(self.order[x])
        self.cum_mass = cum
        # last index of each group of equal distances along a row
        last = np.ones((n, n), dtype=bool)
        if n > 1:
            last[:, :-1] = self.sorted_dist[:, 1:] != self.sorted_dist[:, :-1]
        self.group_end = last
        for arr in (self.order, self.sorted_dist, self.cum_mass, self.group_end):
            arr.setflags(write=False)

    def count(self, x: int, r) -> np.ndarray | int:
        """Number of points strictly closer than ``r`` to ``x``."""
        return np.searchsorted(self.sorted_dist[x], r, side="left")

    def measure(self, x: int, r):
        """``mu(B(x, r))`` for scalar or array ``r`` (all radii > 0)."""
        idx = self.count(x, r)
        return self.cum_mass[x][np.asarray(idx) - 1]


def ball_measure(space: FiniteHomSpace, x: int, r: float) -> float:
    """Mass of the open ball ``{z : d(x, z) < r}``."""
    if not r > 0:
        raise ValueError(f"radius must be positive, got {r}")
    return float(space.balls.measure(x, r))


def vol_pair(space: FiniteHomSpace, x: int, y: int) -> float:
    """``V(x, y) = mu(B(x, d(x, y)))``."""
    if x == y:
        raise ValueError("vol_pair needs distinct points: coincident points")
    return ball_measure(space, x, float(space.dist[x, y]))


@dataclass(frozen=True)
class ValidationReport:
    a0: float
    symmetric: bool
    separated: bool
    positive_weights: bool
    exact: bool = True
    note: str = ""

    @property
    def ok(self) -> bool:
        return self.symmetric and self.separated and self.positive_weights


def quasi_metric_constant(dist: np.ndarray, *, exact_limit: int = EXACT_A0_LIMIT,
                          samples: int = 2_000_000, seed: int = 0) -> tuple[float, bool]:
    """Smallest ``A0`` with ``d(i,k) <= A0 (d(i,j) + d(j,k))`` over all triples.

    For fixed ``(i, k)`` the worst middle point minimises ``d(i,j) + d(j,k)``,
    so the exact constant is a min-plus product followed by a ratio.  Above
    ``exact_limit`` points a seeded random sample of triples is used instead.
    Returns ``(a0, exact)``; ``a0`` is clamped below at 1.
    """
    n = dist.shape[0]
    if n < 3:
        return 1.0, True
    if n <= exact_limit:
        worst = 1.0
        for i in range(n):
            through = (dist[i][:, None] + dist).min(axis=0)
            through[i] = np.inf
            worst = max(worst, float((dist[i] / through).max()))
        exact = True
    else:
        rng = np.random.default_rng(seed)
        i, j, k = (rng.integers(0, n, samples) for _ in range(3))
        denom = dist[i, j] + dist[j, k]
        ok = denom > 0
        worst = max(1.0, float((dist[i, k][ok] / denom[ok]).max()))
        exact = False
    # collinear Euclidean triples can round a hair above 1
    if worst < 1.0 + TOL and worst - 1.0 < 64 * np.finfo(float).eps:
        worst = 1.0
    return worst, exact


def validate_space(space: FiniteHomSpace, *, strict: bool = True) -> ValidationReport:
    """Check the quasi-metric axioms and compute ``A0``.

    With ``strict`` a violated axiom raises :class:`ValidationError`;
    otherwise the flags in the report say what failed.
    """
    d = space.dist
    n = space.n
    symmetric = bool(np.array_equal(d, d.T))
    off = ~np.eye(n, dtype=bool)
    separated = bool(np.all(np.diag(d) == 0) and np.all(d[off] > 0))
    finite = bool(np.all(np.isfinite(d)) and np.all(d >= 0))
    positive = bool(np.all(space.weight > 0) and np.all(np.isfinite(space.weight)))
    if strict:
        if not finite:
            raise ValidationError("distances must be finite and nonnegative")
        if not symmetric:
            i, j = np.argwhere(d != d.T)[0]
            raise ValidationError(f"asymmetric distance: d({i},{j}) != d({j},{i})")
        if not separated:
            bad = np.argwhere((d == 0) & off)
            if bad.size:
                i, j = bad[0]
                raise ValidationError(f"zero distance between distinct points {i} and {j}")
            raise ValidationError("nonzero self-distance")
        if not positive:
            i = int(np.argmax(~(space.weight > 0)))
            raise ValidationError(f"nonpositive weight at point {i}")
    if symmetric and separated and finite:
        a0, exact = quasi_metric_constant(d)
        note = "" if exact else f"A0 estimated from random triples (n={n} > {EXACT_A0_LIMIT})"
    else:
        a0, exact, note = math.inf, False, "axioms violated; A0 not computed"
    return ValidationReport(a0=a0, symmetric=symmetric, separated=separated,
                            positive_weights=positive, exact=exact, note=note)


@dataclass(frozen=True)
class DoublingProfile:
    c_mu: float
    omega: float
    per_scale: tuple[tuple[float, float], ...]
    witness: tuple[int, float] | None = None


def _candidate_radii(row: np.ndarray) -> np.ndarray:
    """Radii at which ``mu(B(x, r))`` or ``mu(B(x, 2r))`` changes."""
    pos = row[row > 0]
    return np.unique(np.concatenate([pos, pos / 2]))


def doubling_profile(space: FiniteHomSpace, *, min_radius: float = 0.0,
                     max_radius: float = math.inf, n_scales: int = 24) -> DoublingProfile:
    """Empirical doubling constant ``C_mu = sup mu(B(x, 2r)) / mu(B(x, r))``.

    The supremum is exact over the chosen radius window: on each interval
    between consecutive breakpoints ``{d, d/2}`` both balls are constant, so
    evaluating at the breakpoints themselves covers every ball.
    """
    cache = space.balls
    best, witness = 1.0, None
    for x in range(space.n):
        radii = _candidate_radii(space.dist[x])
        radii = radii[(radii >= min_radius) & (radii <= max_radius)]
        if radii.size == 0:
            continue
        ratio = cache.measure(x, 2 * radii) / cache.measure(x, radii)
        j = int(np.argmax(ratio))
        if ratio[j] > best:
            best, witness = float(ratio[j]), (x, float(radii[j]))

    per_scale = []
    if space.n > 1:
        lo = max(space.min_distance / 2, min_radius)
        hi = min(space.diameter, max_radius)
        if lo <= hi:
            for r in np.geomspace(lo, hi, n_scales) if hi > lo else [lo]:
                ratios = [float(cache.measure(x, 2 * r) / cache.measure(x, r))
                          for x in range(space.n)]
                per_scale.append((float(r), max(ratios)))
    return DoublingProfile(c_mu=best, omega=math.log2(best), per_scale=tuple(per_scale),
                           witness=witness)


@dataclass
class BallRatioCheck:
    violations: list
    checked: int
    skipped: int
    bound_form: str


def check_ball_ratio_bound(space: FiniteHomSpace, profile: DoublingProfile, *,
                           a0: float | None = None, tuples=None, n_samples: int = 200,
                           seed: int = 0, include_doubling_constant: bool = True,
                           tol: float = TOL) -> BallRatioCheck:
    """Test ``mu(B(x,r1)) / mu(B(y,r2)) <= K A0^w ((r1 + d(x,y)) / r2)^w``.

    ``K`` is ``C_mu`` by default, which is what the doubling inequality
    ``mu(lam B) <= C_mu lam^w mu(B)`` actually delivers.  With
    ``include_doubling_constant=False`` the factor is dropped (``K = 1``);
    that form can fail at knife-edge radii, where an arbitrarily small
    enlargement of a ball picks up a whole ring of atoms.

    Tuples violating ``r1 + d(x,y) >= r2`` are skipped and counted.
    """
    if a0 is None:
        a0 = validate_space(space).a0
    w = profile.omega
    if tuples is None:
        tuples = sample_ball_tuples(space, n_samples, seed)
    factor = profile.c_mu if include_doubling_constant else 1.0
    violations, checked, skipped = [], 0, 0
    for x, y, r1, r2 in tuples:
        dxy = float(space.dist[x, y])
        if r1 + dxy < r2:
            skipped += 1
            continue
        checked += 1
        ratio = ball_measure(space, x, r1) / ball_measure(space, y, r2)
        bound = factor * a0 ** w * ((r1 + dxy) / r2) ** w
        if ratio > bound * (1 + tol):
            violations.append({"x": int(x), "y": int(y), "r1": float(r1), "r2": float(r2),
                               "ratio": ratio, "bound": bound})
    return BallRatioCheck(violations, checked, skipped,
                          "C_mu*A0^w*((r1+d)/r2)^w" if include_doubling_constant
                          else "A0^w*((r1+d)/r2)^w")


def sample_ball_tuples(space: FiniteHomSpace, count: int, seed: int = 0) -> list:
    """Seeded ``(x, y, r1, r2)`` tuples; radii drawn from the candidate set."""
    rng = np.random.default_rng(seed)
    radii = space.distinct_distances
    if radii.size == 0:
        radii = np.array([1.0])
    radii = np.concatenate([radii, (radii[:-1] + radii[1:]) / 2])
    out = []
    for _ in range(count):
        x, y = (int(v) for v in rng.integers(0, space.n, 2))
        r1, r2 = (float(v) for v in rng.choice(radii, 2))
        out.append((x, y, r1, r2))
    return out


def volume_symmetry(space: FiniteHomSpace, profile: DoublingProfile,
                    a0: float) -> dict:
    """Largest ``V(x,y) / V(y,x)`` against the bound it must satisfy.

    ``B(x, d) ⊂ B(y, 2 A0 d)``, so the ratio is at most
    ``C_mu ** ceil(log2(2 A0))``; for ``A0 = 1`` this is ``2^w`` and for
    ``A0 = 2`` it is ``4^w``.
    """
    n = space.n
    if n == 1:
        return {"max_ratio": 1.0, "bound": 1.0, "ok": True, "witness": None}
    cache = space.balls
    vols = np.empty((n, n))
    for x in range(n):
        vols[x] = cache.measure(x, np.where(space.dist[x] > 0, space.dist[x], np.inf))
    off = ~np.eye(n, dtype=bool)
    ratio = np.where(off, vols / vols.T, 1.0)
    i, j = np.unravel_index(int(np.argmax(ratio)), ratio.shape)
    bound = profile.c_mu ** math.ceil(math.log2(2 * a0) - TOL)
    worst = float(ratio[i, j])
    return {"max_ratio": worst, "bound": bound, "ok": worst <= bound * (1 + TOL),
            "witness": [int(i), int(j)]}
