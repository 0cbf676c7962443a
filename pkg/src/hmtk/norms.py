"""Lipschitz, Carleson, Hölder and test-function norms, and the bound checks
built on them.

Ball suprema run over every centre and every distinct ball around it.  Radii
in ``(d_j, d_{j+1}]`` (consecutive distinct distances from the centre) all
give the same open ball, so one ball per gap suffices; the ``r <= 1`` branch
is reachable when ``d_j < 1`` and the ``r > 1`` branch when ``d_{j+1} > 1``.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .dyadic import DyadicTree
from .errors import PreconditionError
from .numerics import exact_sum, powm
from .space import FiniteHomSpace
from .wavelets import FATHER, CoefficientSet

OSC, SUP = "oscillation", "sup"


@dataclass(frozen=True)
class LipResult:
    value: float
    center: int
    radius: float
    branch: str

    @property
    def witness(self) -> dict:
        return {"center": self.center, "radius": self.radius, "branch": self.branch}


@dataclass(frozen=True)
class CarlesonResult:
    value: float
    level: int
    cube: int

    @property
    def witness(self) -> dict:
        return {"level": self.level, "cube": self.cube}


@dataclass
class NormReport:
    lip_norm: float
    lip_witness: dict
    carleson_norm: float
    carleson_witness: dict
    theta: float
    ratio: float = field(init=False)
    degenerate: bool = field(init=False)

    def __post_init__(self):
        self.degenerate = self.lip_norm == 0.0
        self.ratio = 0.0 if self.degenerate else self.carleson_norm / self.lip_norm

    def as_dict(self) -> dict:
        return {"lip": self.lip_norm, "carleson": self.carleson_norm, "ratio": self.ratio,
                "theta": self.theta, "degenerate": self.degenerate,
                "witnesses": {"lip": self.lip_witness, "carleson": self.carleson_witness}}


def _check_theta(theta: float) -> None:
    if not 0 < theta < 1:
        raise PreconditionError(f"theta must lie in (0, 1), got {theta}")


def _default_threads(threads: int | None) -> int:
    if threads is None:
        return min(8, os.cpu_count() or 1)
    return max(1, int(threads))


def _lip_rows(f, cache, mass_pow, rows) -> list:
    out = []
    for x in rows:
        order = cache.order[x]
        sd = cache.sorted_dist[x]
        ends = np.flatnonzero(cache.group_end[x])
        fo = f[order]
        osc = (np.maximum.accumulate(fo) - np.minimum.accumulate(fo))[ends]
        sup = np.maximum.accumulate(np.abs(fo))[ends]
        denom = mass_pow[x, ends]
        d_lo = sd[ends]
        d_hi = np.append(d_lo[1:], np.inf)
        m_osc = np.where(d_lo < 1.0, osc / denom, -np.inf)
        m_sup = np.where(d_hi > 1.0, sup / denom, -np.inf)
        j_osc = int(np.argmax(m_osc))
        j_sup = int(np.argmax(m_sup))
        if m_osc[j_osc] >= m_sup[j_sup]:
            out.append((float(m_osc[j_osc]), x, min(float(d_hi[j_osc]), 1.0), OSC))
        else:
            j = j_sup
            r = float(d_hi[j]) if j + 1 < ends.size else max(2.0 * float(d_lo[j]), 2.0)
            out.append((float(m_sup[j]), x, r, SUP))
    return out


def lip_norm(f, space: FiniteHomSpace, theta: float, *, threads: int | None = None) -> LipResult:
    """``sup_B M_theta^B(f)`` with a witness ball.

    Ties are broken towards the lowest centre and the smallest ball; the
    oscillation branch wins a tie with the sup branch at the same centre.
    """
    _check_theta(theta)
    f = np.asarray(f, dtype=float)
    cache = space.balls
    mass_pow = _mass_pow(space, theta)
    n = space.n
    threads = _default_threads(threads)
    chunks = [range(i, min(i + 64, n)) for i in range(0, n, 64)]
    if threads == 1 or len(chunks) == 1:
        parts = [_lip_rows(f, cache, mass_pow, c) for c in chunks]
    else:
        with ThreadPoolExecutor(threads) as ex:
            parts = list(ex.map(lambda c: _lip_rows(f, cache, mass_pow, c), chunks))
    best = None
    for part in parts:
        for row in part:
            if best is None or row[0] > best[0]:
                best = row
    return LipResult(*best)


_MASS_POW_CACHE: dict = {}


def _mass_pow(space: FiniteHomSpace, theta: float) -> np.ndarray:
    key = (id(space), theta)
    hit = _MASS_POW_CACHE.get(key)
    if hit is not None and hit[0] is space:
        return hit[1]
    arr = powm(space.balls.cum_mass, theta)
    if len(_MASS_POW_CACHE) > 16:
        _MASS_POW_CACHE.clear()
    _MASS_POW_CACHE[key] = (space, arr)
    return arr


def ball_functional(f, space: FiniteHomSpace, theta: float, center: int, radius: float) -> float:
    """``M_theta^B(f)`` for ``B = B(center, radius)``, evaluated from scratch."""
    _check_theta(theta)
    f = np.asarray(f, dtype=float)
    inside = np.flatnonzero(space.dist[center] < radius)
    mass = exact_sum(space.weight[inside])
    vals = f[inside]
    if radius <= 1.0:
        top = float(vals.max() - vals.min())
    else:
        top = float(np.abs(vals).max())
    return top / math.pow(mass, theta)


def _subtree_sums(coeffs: CoefficientSet, tree: DyadicTree) -> dict:
    """Exact ``sum of c^2`` per node over the node's subtree (levels >= 0)."""
    own = {}
    for key, c in zip(coeffs.keys, coeffs.values.tolist()):
        node = (0, key[2]) if key[0] == FATHER else (key[1], key[2])
        own[node] = own.get(node, Fraction(0)) + Fraction(c * c)
    sums = {}
    for k in range(tree.k_max, -1, -1):
        lev = tree.level(k)
        nxt = sums if k < tree.k_max else None
        for a in range(lev.size):
            total = own.get((k, a), Fraction(0))
            if nxt is not None:
                for b in tree.children(k, a).tolist():
                    total += sums[(k + 1, b)]
            sums[(k, a)] = total
    return sums


def _set_representative(tree: DyadicTree) -> dict:
    """Map each node at level >= 0 to its topmost ancestor (level >= 0) with
    the same point set."""
    rep = {}
    for k in range(0, tree.k_max + 1):
        lev = tree.level(k)
        for a in range(lev.size):
            if k > 0:
                p = int(lev.parent[a])
                if tree.level(k - 1).members[p].size == lev.members[a].size:
                    rep[(k, a)] = rep[(k - 1, p)]
                    continue
            rep[(k, a)] = (k, a)
    return rep


def carleson_norm(coeffs: CoefficientSet, tree: DyadicTree, theta: float) -> CarlesonResult:
    """``sup_Q [S(Q) / mu(Q)^{1+2 theta}]^{1/2}`` over cubes at levels ``k >= 0``.

    ``S(Q)`` sums the squared level-0 father coefficients and mother
    coefficients whose cubes are contained in ``Q`` as point sets.  Sums are
    exact, so the result equals a cube-by-cube recomputation bit for bit.
    """
    if not theta > 0:
        raise PreconditionError(f"theta must be positive, got {theta}")
    sums = _subtree_sums(coeffs, tree)
    rep = _set_representative(tree)
    best = None
    expo = 1.0 + 2.0 * theta
    for k in range(0, tree.k_max + 1):
        masses = tree.masses(k)
        for a in range(tree.level(k).size):
            s = float(sums[rep[(k, a)]])
            val = math.sqrt(s / math.pow(float(masses[a]), expo))
            if best is None or val > best[0]:
                best = (val, k, a)
    return CarlesonResult(*best)


def norm_report(f, coeffs: CoefficientSet, space: FiniteHomSpace, tree: DyadicTree,
                theta: float, *, threads: int | None = None) -> NormReport:
    lip = lip_norm(f, space, theta, threads=threads)
    car = carleson_norm(coeffs, tree, theta)
    return NormReport(lip.value, lip.witness, car.value, car.witness, theta)


def holder_norm(f, space: FiniteHomSpace, exponent: float) -> float:
    """``sup_{x != y} |f(x) - f(y)| / d(x, y)^e + max |f|``."""
    if not exponent > 0:
        raise PreconditionError(f"exponent must be positive, got {exponent}")
    f = np.asarray(f, dtype=float)
    n = space.n
    diff = np.abs(f[:, None] - f[None, :])
    denom = powm(space.dist, exponent)
    np.fill_diagonal(denom, 1.0)
    q = diff / denom
    np.fill_diagonal(q, 0.0)
    top = float(q.max()) if n > 1 else 0.0
    return top + float(np.abs(f).max())


# ---------------------------------------------------------------- kernels

@dataclass(frozen=True)
class KernelSpec:
    gamma: float = 1.0
    x0: int = 0
    r: float = 1.0
    nu: float = 1.0
    s: float = 1.0
    k: int = 0

    def validate(self) -> None:
        if not self.gamma > 0:
            raise PreconditionError(f"gamma must be positive, got {self.gamma}")
        if not self.r > 0:
            raise PreconditionError(f"r must be positive, got {self.r}")
        if not self.nu > 0:
            raise PreconditionError(f"nu must be positive, got {self.nu}")
        if not 0 < self.s <= 1:
            raise PreconditionError(f"s must lie in (0, 1], got {self.s}")


def kernel_P(space: FiniteHomSpace, x0: int, r: float, gamma: float) -> np.ndarray:
    """``P_gamma(x0, x; r)`` for every point ``x``; ``V(x0, x0) = 0``."""
    KernelSpec(gamma=gamma, x0=x0, r=r).validate()
    d = space.dist[x0]
    cache = space.balls
    v_r = float(cache.measure(x0, r))
    v_pair = np.where(d > 0, cache.measure(x0, np.where(d > 0, d, 1.0)), 0.0)
    return (1.0 / (v_r + v_pair)) * (r / (r + d)) ** gamma


def kernel_E(space: FiniteHomSpace, k: int, delta: float, nu: float, s: float = 1.0,
             r: float = 1.0) -> np.ndarray:
    """Matrix of ``E_k(x, y; r) = exp(-nu / r * (d(x, y) / delta^k)^s)``."""
    KernelSpec(nu=nu, s=s, r=r, k=k).validate()
    return np.exp(-(nu / r) * (space.dist / delta ** k) ** s)


def kernel_P_mass(space: FiniteHomSpace, r: float, gamma: float) -> tuple[float, int]:
    """``max_{x0} sum_x P_gamma(x0, x; r) mu_x`` and the maximising ``x0``."""
    best, arg = -1.0, 0
    for x0 in range(space.n):
        m = exact_sum(kernel_P(space, x0, r, gamma) * space.weight)
        if m > best:
            best, arg = m, x0
    return best, arg


def test_function_norm(f, x0: int, r: float, beta: float, gamma: float,
                       space: FiniteHomSpace, a0: float = 1.0) -> float:
    """Smallest ``C`` for the size and regularity conditions of a test
    function of type ``(x0, r, beta, gamma)``."""
    if not 0 < beta <= 1:
        raise PreconditionError(f"beta must lie in (0, 1], got {beta}")
    f = np.asarray(f, dtype=float)
    P = kernel_P(space, x0, r, gamma)
    size = float((np.abs(f) / P).max())
    d = space.dist
    scale = r + d[x0]                                   # r + d(x0, x), per row x
    ok = (d <= scale[:, None] / (2.0 * a0)) & (d > 0)
    diff = np.abs(f[:, None] - f[None, :])
    bound = (d / scale[:, None]) ** beta * P[:, None]
    reg = float((diff[ok] / bound[ok]).max()) if ok.any() else 0.0
    return max(size, reg)


# ---------------------------------------------------------------- bound checks

@dataclass
class PointwiseReport:
    C1: float
    C2: float
    lip: float
    ceiling: float | None
    flagged: bool
    witness: dict

    def as_dict(self) -> dict:
        return {"C1": self.C1, "C2": self.C2, "lip": self.lip, "ceiling": self.ceiling,
                "flagged": self.flagged, "witness": self.witness}


def check_pointwise_bounds(f, space: FiniteHomSpace, theta: float, *,
                           lip: float | None = None, radius: float = 2.0,
                           ceiling: float | None = None) -> PointwiseReport:
    """Empirical constants for ``|f(x)| <= C1 |f|_lip V_r(x)^theta`` (``r = 2``)
    and ``|f(x) - f(y)| <= C2 |f|_lip V(x, y)^theta``."""
    f = np.asarray(f, dtype=float)
    if lip is None:
        lip = lip_norm(f, space, theta).value
    if lip == 0.0:
        return PointwiseReport(0.0, 0.0, 0.0, ceiling, False, {})
    cache = space.balls
    n = space.n
    v_r = np.array([float(cache.measure(x, radius)) for x in range(n)])
    q1 = np.abs(f) / (lip * powm(v_r, theta))
    x1 = int(np.argmax(q1))
    # V(x, y) for every pair: position of y in x's sorted row, minus its group
    vpair = np.empty((n, n))
    for x in range(n):
        cnt = cache.count(x, space.dist[x])
        vpair[x] = np.where(cnt > 0, cache.cum_mass[x][np.maximum(cnt - 1, 0)], 0.0)
    diff = np.abs(f[:, None] - f[None, :])
    with np.errstate(divide="ignore", invalid="ignore"):
        q2 = diff / (lip * powm(vpair, theta))
    np.fill_diagonal(q2, 0.0)
    flat = int(np.argmax(q2))
    x2, y2 = divmod(flat, n)
    C1, C2 = float(q1[x1]), float(q2[x2, y2])
    flagged = ceiling is not None and max(C1, C2) > ceiling
    return PointwiseReport(C1, C2, lip, ceiling, flagged,
                           {"C1_point": x1, "C2_pair": [int(x2), int(y2)]})


@dataclass(frozen=True)
class TestFunction:
    """A function together with the test-function type it is measured in."""

    values: np.ndarray
    x0: int
    r: float
    beta: float
    gamma: float

    def norm(self, space: FiniteHomSpace, a0: float = 1.0) -> float:
        return test_function_norm(self.values, self.x0, self.r, self.beta, self.gamma, space, a0)


@dataclass
class RatioResult:
    ratio: float | None
    numerator: float
    denominator: float

    @property
    def omitted(self) -> bool:
        return self.ratio is None


def check_multiplier_bound(psi: TestFunction, f, space: FiniteHomSpace, theta: float,
                           omega: float, *, a0: float = 1.0) -> RatioResult:
    """``|psi f|_lip / (|psi|_G |f|_lip)``; ``None`` on a zero denominator."""
    _check_theta(theta)
    if omega > 0 and theta > 1.0 / omega * (1 + 1e-12):
        raise PreconditionError(f"theta={theta} exceeds 1/omega={1.0 / omega:.6g}")
    if not theta * omega * (1 - 1e-12) <= psi.beta <= 1:
        raise PreconditionError(
            f"beta={psi.beta} outside [theta*omega, 1] = [{theta * omega:.6g}, 1]")
    f = np.asarray(f, dtype=float)
    num = lip_norm(np.asarray(psi.values) * f, space, theta).value
    den = psi.norm(space, a0) * lip_norm(f, space, theta).value
    return RatioResult(num / den if den > 0 else None, num, den)


def check_pairing_bound(psi: TestFunction, f, space: FiniteHomSpace, theta: float,
                        omega: float, *, a0: float = 1.0) -> RatioResult:
    """``|<f, psi>| / (|psi|_G |f|_lip)``; needs ``gamma > theta * omega``."""
    _check_theta(theta)
    if not psi.gamma > theta * omega:
        raise PreconditionError(
            f"gamma={psi.gamma} must exceed theta*omega={theta * omega:.6g}")
    f = np.asarray(f, dtype=float)
    num = abs(exact_sum(f * np.asarray(psi.values) * space.weight))
    den = psi.norm(space, a0) * lip_norm(f, space, theta).value
    return RatioResult(num / den if den > 0 else None, num, den)


def ratio_summary(results) -> dict:
    kept = [r.ratio for r in results if r.ratio is not None]
    return {"max_ratio": max(kept, default=None), "count": len(kept),
            "omitted": sum(1 for r in results if r.ratio is None)}
