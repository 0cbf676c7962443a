"""Nested nets and dyadic cubes.

Centres are chosen fine to coarse: the finest level keeps every point and
each coarser level is a greedy maximal ``c0 delta^k``-separated subset of the
level below it (lowest point id first), so ``X^k ⊂ X^{k+1}`` holds by
construction.

Cubes are built by parent pointers: every level-``k+1`` centre is attached
to its nearest level-``k`` centre (a centre already present at level ``k`` is
its own parent), and a cube is the set of points whose chain of ancestors
passes through it.  Partition and nesting hold by construction; the two ball
inclusions follow from ``12 A0^3 C0 delta <= c0`` and are verified
explicitly by :func:`verify_cube_axioms`.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import AxiomViolation, NetError
from .numerics import exact_sum
from .space import FiniteHomSpace, validate_space

log = logging.getLogger(__name__)

DEFAULT_DELTA = 1 / 8
DEFAULT_C0 = 1.0
# covering ratio C0 / (A0 c0); any value above 1 works for greedy nets, and
# 1.1 lets delta = 1/16 pass admissibility when A0 = 1
DEFAULT_COVER_RATIO = 1.1
MAX_LEVELS = 200


def default_parameters(a0: float, delta: float | None = None, c0: float | None = None,
                       C0: float | None = None) -> tuple[float, float, float]:
    """Fill in ``(delta, c0, C0)``; an unspecified ``delta`` is halved from 1/8
    until the admissibility inequality holds."""
    c0 = DEFAULT_C0 if c0 is None else c0
    C0 = DEFAULT_COVER_RATIO * a0 * c0 if C0 is None else C0
    if delta is None:
        delta = DEFAULT_DELTA
        while not admissible(a0, delta, c0, C0):
            delta /= 2
    return delta, c0, C0


def admissible(a0: float, delta: float, c0: float, C0: float) -> bool:
    return 12 * a0 ** 3 * C0 * delta <= c0


@dataclass
class NetHierarchy:
    delta: float
    c0: float
    C0: float
    a0: float
    k_min: int
    k_max: int
    centers: dict[int, np.ndarray]
    covering: dict[int, float] = field(default_factory=dict)

    @property
    def levels(self) -> range:
        return range(self.k_min, self.k_max + 1)


def _greedy_separated(dist: np.ndarray, candidates: np.ndarray, sep: float) -> np.ndarray:
    mind = np.full(candidates.size, np.inf)
    keep = []
    for i in range(candidates.size):
        if mind[i] >= sep:
            keep.append(candidates[i])
            np.minimum(mind, dist[candidates[i], candidates], out=mind)
    return np.array(keep, dtype=int)


def finest_level(space: FiniteHomSpace, delta: float, c0: float) -> int:
    """Smallest ``k >= 0`` whose separation ``c0 delta^k`` no longer exceeds the
    minimum distance, so every point is its own centre and leaves are atoms."""
    if space.n == 1:
        return 0
    k = max(0, math.ceil(math.log(space.min_distance / c0) / math.log(delta)))
    while k > 0 and c0 * delta ** (k - 1) <= space.min_distance:
        k -= 1
    while c0 * delta ** k > space.min_distance:
        k += 1
    return k


def build_nets(space: FiniteHomSpace, delta: float | None = None, c0: float | None = None,
               C0: float | None = None, *, a0: float | None = None) -> NetHierarchy:
    if a0 is None:
        a0 = validate_space(space).a0
    delta, c0, C0 = default_parameters(a0, delta, c0, C0)
    if not 0 < delta < 1:
        raise NetError(f"delta must lie in (0, 1), got {delta}")
    if not c0 < C0:
        raise NetError(f"need c0 < C0, got c0={c0}, C0={C0}")
    if not admissible(a0, delta, c0, C0):
        raise NetError(f"admissibility violated: 12*A0^3*C0*delta = "
                       f"{12 * a0 ** 3 * C0 * delta:.6g} > c0 = {c0:.6g}")
    k_max = finest_level(space, delta, c0)
    centers = {k_max: np.arange(space.n)}
    covering = {}
    k = k_max
    while True:
        cover = _covering_radius(space.dist, centers[k])
        covering[k] = cover
        if not cover < C0 * delta ** k:
            raise NetError(f"covering failed at level {k}: a point lies {cover:.6g} from every "
                           f"centre, limit C0*delta^k = {C0 * delta ** k:.6g}")
        if k <= 0 and centers[k].size == 1:
            break
        if k_max - k > MAX_LEVELS:
            raise NetError("net hierarchy did not collapse to a single centre")
        centers[k - 1] = _greedy_separated(space.dist, centers[k], c0 * delta ** (k - 1))
        k -= 1
    return NetHierarchy(delta, c0, C0, a0, k, k_max, centers, covering)


def _covering_radius(dist: np.ndarray, centers: np.ndarray) -> float:
    return float(dist[:, centers].min(axis=1).max())


@dataclass
class Level:
    k: int
    centers: np.ndarray            # point id of each cube's centre
    members: list                  # sorted point ids per cube
    parent: np.ndarray | None      # index of the enclosing cube one level up
    new_center: np.ndarray         # centre absent from the level above

    @property
    def size(self) -> int:
        return self.centers.size

    def labels(self, n: int) -> np.ndarray:
        lab = np.full(n, -1, dtype=int)
        for a, m in enumerate(self.members):
            lab[m] = a
        return lab


@dataclass
class DyadicTree:
    space: FiniteHomSpace
    delta: float
    c0: float
    C0: float
    a0: float
    levels: list

    @property
    def k_min(self) -> int:
        return self.levels[0].k

    @property
    def k_max(self) -> int:
        return self.levels[-1].k

    @property
    def c_sharp(self) -> float:
        return self.c0 / (3 * self.a0 ** 2)

    @property
    def C_sharp(self) -> float:
        return max(2 * self.a0 * self.C0, 1.0)

    def level(self, k: int) -> Level:
        return self.levels[k - self.k_min]

    def members(self, k: int, alpha: int) -> np.ndarray:
        return self.level(k).members[alpha]

    def center(self, k: int, alpha: int) -> int:
        return int(self.level(k).centers[alpha])

    def mass(self, k: int, alpha: int) -> float:
        return exact_sum(self.space.weight[self.members(k, alpha)])

    def masses(self, k: int) -> np.ndarray:
        return np.array([exact_sum(self.space.weight[m]) for m in self.level(k).members])

    def children(self, k: int, alpha: int) -> np.ndarray:
        if k >= self.k_max:
            return np.array([], dtype=int)
        return np.flatnonzero(self.level(k + 1).parent == alpha)

    def keys(self, min_level: int | None = None):
        for lev in self.levels:
            if min_level is not None and lev.k < min_level:
                continue
            for a in range(lev.size):
                yield lev.k, a

    def copy(self) -> "DyadicTree":
        levels = [Level(l.k, l.centers.copy(), [m.copy() for m in l.members],
                        None if l.parent is None else l.parent.copy(), l.new_center.copy())
                  for l in self.levels]
        return DyadicTree(self.space, self.delta, self.c0, self.C0, self.a0, levels)


def build_cubes(space: FiniteHomSpace, nets: NetHierarchy, *, verify: bool = True) -> DyadicTree:
    ks = list(nets.levels)
    parents = {}
    for k in ks[:-1]:
        fine, coarse = nets.centers[k + 1], nets.centers[k]
        parents[k + 1] = np.argmin(space.dist[np.ix_(fine, coarse)], axis=1)

    members = {nets.k_max: [np.array([c]) for c in nets.centers[nets.k_max]]}
    for k in reversed(ks[:-1]):
        groups = [[] for _ in range(nets.centers[k].size)]
        for child, p in enumerate(parents[k + 1]):
            groups[p].append(members[k + 1][child])
        members[k] = [np.sort(np.concatenate(g)) if g else np.array([], dtype=int)
                      for g in groups]

    levels = []
    for k in ks:
        cen = nets.centers[k]
        if k == nets.k_min:
            new = np.zeros(cen.size, dtype=bool)
        else:
            new = ~np.isin(cen, nets.centers[k - 1])
        levels.append(Level(k, cen, members[k], parents.get(k), new))
    tree = DyadicTree(space, nets.delta, nets.c0, nets.C0, nets.a0, levels)
    if verify:
        report = verify_cube_axioms(space, tree)
        if not report.ok:
            v = report.violations[0]
            raise AxiomViolation(f"axiom violation: {v['kind']} at level {v['level']} "
                                 f"cube {v['cube']} point {v['point']}", witness=v)
    return tree


def build_tree(space: FiniteHomSpace, delta: float | None = None, c0: float | None = None,
               C0: float | None = None, *, a0: float | None = None,
               max_retries: int = 4) -> DyadicTree:
    """Nets plus cubes; on an axiom violation retry with ``delta`` halved."""
    if a0 is None:
        a0 = validate_space(space).a0
    delta, c0, C0 = default_parameters(a0, delta, c0, C0)
    for attempt in range(max_retries + 1):
        nets = build_nets(space, delta, c0, C0, a0=a0)
        try:
            return build_cubes(space, nets)
        except AxiomViolation:
            if attempt == max_retries:
                raise
            log.info("cube axioms failed at delta=%g, retrying with delta/2", delta)
            delta /= 2
    raise AssertionError("unreachable")


@dataclass
class AxiomReport:
    violations: list
    checked: dict

    @property
    def ok(self) -> bool:
        return not self.violations

    def count(self, kind: str, level: int | None = None) -> int:
        return sum(1 for v in self.violations
                   if v["kind"] == kind and (level is None or v["level"] == level))


def verify_cube_axioms(space: FiniteHomSpace, tree: DyadicTree) -> AxiomReport:
    """Exhaustive check of partition, nesting, both ball inclusions, centre
    separation and covering, and the new-centre count under every parent."""
    n = space.n
    d = space.dist
    vio = []
    checked = {"partition": 0, "nesting": 0, "inner_ball": 0, "outer_ball": 0,
               "separation": 0, "covering": 0, "new_centers": 0}

    def add(kind, k, cube, point, detail=""):
        vio.append({"kind": kind, "level": int(k), "cube": None if cube is None else int(cube),
                    "point": None if point is None else int(point), "detail": detail})

    prev_labels = None
    prev = None
    for lev in tree.levels:
        k = lev.k
        counts = np.zeros(n, dtype=int)
        for m in lev.members:
            np.add.at(counts, m, 1)
        checked["partition"] += n
        for p in np.flatnonzero(counts != 1):
            owners = [a for a, m in enumerate(lev.members) if p in m]
            add("partition", k, owners[0] if owners else None, p,
                f"point lies in {counts[p]} cubes")
        labels = lev.labels(n)

        if prev is not None:
            for a, m in enumerate(lev.members):
                checked["nesting"] += m.size
                par = lev.parent[a] if lev.parent is not None else -1
                bad = m[prev_labels[m] != par]
                for p in bad:
                    add("nesting", k, a, p, f"parent cube {par} does not contain the point")
            cen_prev = set(prev.centers.tolist())
            if not cen_prev.issubset(set(lev.centers.tolist())):
                add("nesting", k, None, None, "centres of the coarser level are not kept")
            for a in range(prev.size):
                kids = np.flatnonzero(lev.parent == a)
                checked["new_centers"] += 1
                if kids.size and lev.new_center[kids].sum() != kids.size - 1:
                    add("new_centers", k, a, None,
                        f"{int(lev.new_center[kids].sum())} new centres among {kids.size} children")

        scale = tree.delta ** k
        inner, outer = tree.c_sharp * scale, tree.C_sharp * scale
        for a, m in enumerate(lev.members):
            x = lev.centers[a]
            row = d[x]
            if labels[x] != a:
                add("outer_ball", k, a, x, "cube does not contain its centre")
            ball = np.flatnonzero(row < inner)
            checked["inner_ball"] += ball.size
            for p in ball[labels[ball] != a]:
                add("inner_ball", k, a, p, f"d={row[p]:.6g} < c#delta^k={inner:.6g} but outside cube")
            checked["outer_ball"] += m.size
            for p in m[row[m] >= outer]:
                add("outer_ball", k, a, p, f"d={row[p]:.6g} >= C#delta^k={outer:.6g}")

        cen = lev.centers
        if cen.size > 1:
            sub = d[np.ix_(cen, cen)] + np.diag(np.full(cen.size, np.inf))
            checked["separation"] += cen.size
            sep = tree.c0 * scale
            for i in np.flatnonzero(sub.min(axis=1) < sep):
                add("separation", k, i, cen[i], f"centres closer than c0*delta^k={sep:.6g}")
        cover = d[:, cen].min(axis=1)
        checked["covering"] += n
        for p in np.flatnonzero(cover >= tree.C0 * scale):
            add("covering", k, None, p, f"no centre within C0*delta^k={tree.C0 * scale:.6g}")

        prev, prev_labels = lev, labels
    return AxiomReport(vio, checked)


def level_counts(tree: DyadicTree) -> dict[int, int]:
    return {lev.k: lev.size for lev in tree.levels}


def cube_diameter(space: FiniteHomSpace, members: np.ndarray) -> float:
    if members.size < 2:
        return 0.0
    return float(space.dist[np.ix_(members, members)].max())
