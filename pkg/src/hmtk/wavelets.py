"""Haar-type wavelet system on a dyadic tree.

Fathers at level 0 are normalised cube indicators.  Under every parent cube
with ``m`` children, ``m - 1`` mothers span the functions that are constant
on the children and orthogonal to the parent indicator.  They come from a
pivoted Gram-Schmidt pass in the child coordinates, new-centre children
first in ascending centre id, so mother ``j`` is keyed to the ``j``-th
new-centre child.

Coefficient vectors are computed with correctly rounded sums over each
function's support, so analysis is independent of BLAS threading.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dyadic import DyadicTree
from .errors import DegenerateCube, HmtkError
from .numerics import exact_dot, exact_sum, linear_fit

FATHER, MOTHER = "father", "mother"
ETA_GRID = (0.25, 0.5, 0.75, 1.0)


def pivoted_gram_schmidt(basis: np.ndarray, candidates: np.ndarray, count: int,
                         tol: float = 1e-12) -> np.ndarray:
    """Orthonormalise ``candidates`` (columns, already in pivot order) against
    the orthonormal columns of ``basis`` and each other.

    Modified Gram-Schmidt with one re-orthogonalisation pass.  Returns the
    first ``count`` new orthonormal columns; a candidate that has no
    component left raises :class:`DegenerateCube`.
    """
    q = [basis[:, i].copy() for i in range(basis.shape[1])]
    out = []
    for j in range(candidates.shape[1]):
        if len(out) == count:
            break
        v = candidates[:, j].astype(float).copy()
        norm0 = np.linalg.norm(v)
        for _ in range(2):
            for u in q:
                v -= (u @ v) * u
        norm = np.linalg.norm(v)
        if norm <= tol * max(norm0, 1.0):
            raise DegenerateCube(f"degenerate cube: pivot {j} is linearly dependent")
        v /= norm
        q.append(v)
        out.append(v)
    if len(out) < count:
        raise DegenerateCube("degenerate cube: not enough independent children")
    return np.column_stack(out) if out else np.zeros((candidates.shape[0], 0))


@dataclass
class DecayFit:
    nu_hat: float
    s: float
    C_hat: float
    C_by_level: dict
    holder: list = field(default_factory=list)   # [(eta, C_eta)]

    def as_dict(self) -> dict:
        return {"nu_hat": self.nu_hat, "s": self.s, "C_hat": self.C_hat,
                "C_by_level": {str(k): v for k, v in sorted(self.C_by_level.items())},
                "holder": [{"eta": e, "C": c} for e, c in self.holder]}


@dataclass
class WaveletBasis:
    """Level-0 fathers followed by all mothers, as columns of ``values``.

    ``keys[j]`` is ``("father", 0, alpha)`` or ``("mother", k + 1, beta)``
    where ``beta`` indexes the new-centre cube at level ``k + 1``.
    """

    tree: DyadicTree
    keys: list
    values: np.ndarray
    decay_fit: DecayFit | None = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        self._index = {key: j for j, key in enumerate(self.keys)}
        self.supports = [np.flatnonzero(self.values[:, j]) for j in range(len(self.keys))]

    @property
    def space(self):
        return self.tree.space

    @property
    def size(self) -> int:
        return len(self.keys)

    def index(self, key) -> int:
        try:
            return self._index[tuple(key)]
        except KeyError:
            raise HmtkError(f"unknown basis key {key!r}") from None

    def function(self, key) -> np.ndarray:
        return self.values[:, self.index(key)].copy()

    def center(self, key) -> int:
        _, k, a = key
        return self.tree.center(k, a)

    def mother_keys(self, level: int | None = None) -> list:
        return [key for key in self.keys if key[0] == MOTHER and (level is None or key[1] == level)]

    def father_keys(self) -> list:
        return [key for key in self.keys if key[0] == FATHER]

    @property
    def mother_levels(self) -> list:
        return sorted({key[1] for key in self.keys if key[0] == MOTHER})


def build_mra(space, tree: DyadicTree) -> WaveletBasis:
    n = space.n
    w = space.weight
    keys, cols = [], []
    lev0 = tree.level(0)
    for a, m in enumerate(lev0.members):
        col = np.zeros(n)
        col[m] = 1.0 / math.sqrt(exact_sum(w[m]))
        keys.append((FATHER, 0, a))
        cols.append(col)

    for k in range(0, tree.k_max):
        child_level = tree.level(k + 1)
        child_mass = tree.masses(k + 1)
        for a in range(tree.level(k).size):
            kids = tree.children(k, a)
            if kids.size < 2:
                continue
            new = [c for c in kids if child_level.new_center[c]]
            old = [c for c in kids if not child_level.new_center[c]]
            new.sort(key=lambda c: child_level.centers[c])
            order = new + old
            mu = child_mass[order]
            parent_dir = np.sqrt(mu) / math.sqrt(exact_sum(mu))
            vecs = pivoted_gram_schmidt(parent_dir[:, None], np.eye(len(order)), len(order) - 1)
            for j in range(vecs.shape[1]):
                col = np.zeros(n)
                for i, c in enumerate(order):
                    col[child_level.members[c]] = vecs[i, j] / math.sqrt(mu[i])
                keys.append((MOTHER, k + 1, int(order[j])))
                cols.append(col)
    values = np.column_stack(cols) if cols else np.zeros((n, 0))
    return WaveletBasis(tree, keys, values)


@dataclass
class CoefficientSet:
    keys: list
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        self._index = {key: j for j, key in enumerate(self.keys)}

    def __getitem__(self, key) -> float:
        return float(self.values[self._index[tuple(key)]])

    @property
    def father_coeffs(self) -> dict:
        return {key[2]: float(v) for key, v in zip(self.keys, self.values) if key[0] == FATHER}

    @property
    def mother_coeffs(self) -> dict:
        return {(key[1], key[2]): float(v) for key, v in zip(self.keys, self.values)
                if key[0] == MOTHER}

    def energy(self) -> float:
        return exact_sum(self.values * self.values)


def analyze(f, basis: WaveletBasis, space=None) -> CoefficientSet:
    """``<f, phi>`` and ``<f, psi>`` in ``L^2(mu)`` for every basis function."""
    space = basis.space if space is None else space
    f = np.asarray(f, dtype=float)
    if f.shape != (space.n,):
        raise HmtkError(f"function has {f.size} values, space has {space.n} points")
    fw = f * space.weight
    vals = np.array([exact_dot(fw[s], basis.values[s, j]) for j, s in enumerate(basis.supports)])
    return CoefficientSet(list(basis.keys), vals)


def synthesize(coeffs: CoefficientSet, basis: WaveletBasis, space=None) -> np.ndarray:
    space = basis.space if space is None else space
    out = np.zeros(space.n)
    for key, c in zip(coeffs.keys, coeffs.values):
        j = basis.index(key)
        if c != 0.0:
            s = basis.supports[j]
            out[s] += c * basis.values[s, j]
    return out


def partial_sum(f, basis: WaveletBasis, n: int, space=None) -> np.ndarray:
    """Fathers plus every mother ``psi^{k+1}`` with ``k <= n``."""
    if n < 0 or n > basis.tree.k_max:
        raise HmtkError(f"partial-sum level {n} outside 0..{basis.tree.k_max}")
    coeffs = analyze(f, basis, space)
    keep = np.array([key[0] == FATHER or key[1] - 1 <= n for key in coeffs.keys])
    return synthesize(CoefficientSet(coeffs.keys, np.where(keep, coeffs.values, 0.0)), basis, space)


def l2_norm(f, space) -> float:
    f = np.asarray(f, dtype=float)
    return math.sqrt(exact_sum(f * f * space.weight))


def gram_matrix(basis: WaveletBasis) -> np.ndarray:
    """Weighted Gram matrix, assembled with numpy's own loops (no BLAS) so the
    result does not depend on the BLAS thread count."""
    v = basis.values
    wv = v * basis.space.weight[:, None]
    return np.einsum("ij,ik->jk", wv, v, optimize=False)


def basis_checks(basis: WaveletBasis) -> dict:
    g = gram_matrix(basis)
    dev = float(np.abs(g - np.eye(basis.size)).max()) if basis.size else 0.0
    w = basis.space.weight
    means = [abs(exact_dot(basis.values[s, j], w[s]))
             for j, s in enumerate(basis.supports) if basis.keys[j][0] == MOTHER]
    n_leaves = basis.tree.level(basis.tree.k_max).size
    n_fathers = len(basis.father_keys())
    return {"gram_max_deviation": dev,
            "max_mother_mean": max(means, default=0.0),
            "n_fathers": n_fathers,
            "n_mothers": len(means),
            "dimension_ok": len(means) == n_leaves - n_fathers and basis.size == basis.space.n}


def fit_decay(basis: WaveletBasis, space=None, tree: DyadicTree | None = None,
              eta_grid=ETA_GRID) -> DecayFit:
    """Fit ``|psi(x)| sqrt(V_{delta^k}(y)) <= C exp(-nu d(x, y) / delta^k)``.

    ``nu`` comes from a pooled least-squares line through the log envelope of
    all mothers (``s`` is fixed to 1); ``C`` is then the tightest constant per
    mother, reported per level and overall.  The Hölder part records, for each
    ``eta``, the largest regularity quotient over pairs at distance at most
    ``delta^k``.
    """
    space = basis.space if space is None else space
    tree = basis.tree if tree is None else tree
    d = space.dist
    cache = space.balls
    delta = tree.delta
    rows = []
    for j, key in enumerate(basis.keys):
        if key[0] != MOTHER:
            continue
        k = key[1] - 1
        y = tree.center(key[1], key[2])
        scale = delta ** k
        vol = float(cache.measure(y, scale))
        psi = basis.values[:, j]
        rows.append((k, y, scale, vol, psi))
    if not rows:
        return DecayFit(0.0, 1.0, 0.0, {}, [])

    ts, logs = [], []
    for k, y, scale, vol, psi in rows:
        s = np.abs(psi) > 1e-14
        ts.append(d[y, s] / scale)
        logs.append(np.log(np.abs(psi[s]) * math.sqrt(vol)))
    t = np.concatenate(ts)
    g = np.concatenate(logs)
    slope, _ = linear_fit(t, g)
    nu = max(-slope, 1e-3)

    C_by_level = {}
    holder = {eta: 0.0 for eta in eta_grid}
    res = space.min_distance
    for k, y, scale, vol, psi in rows:
        env = np.abs(psi) * math.sqrt(vol) * np.exp(nu * d[y] / scale)
        C_by_level[k] = max(C_by_level.get(k, 0.0), float(env.max()))
        near = np.flatnonzero(d[np.flatnonzero(psi)].min(axis=0) <= scale)
        if near.size < 2:
            continue
        dd = d[np.ix_(near, near)]
        ok = (dd <= scale) & (dd >= res)
        if not ok.any():
            continue
        diff = np.abs(psi[near][:, None] - psi[near][None, :]) * math.sqrt(vol)
        ek = np.exp(-nu * d[y, near] / scale)[:, None]
        for eta in eta_grid:
            q = diff[ok] / (((dd / scale) ** eta) * ek)[ok]
            holder[eta] = max(holder[eta], float(q.max()))
    C_hat = max(C_by_level.values())
    return DecayFit(nu, 1.0, C_hat, C_by_level, sorted(holder.items()))
