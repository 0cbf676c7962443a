"""Geometry classifiers and the end-to-end equivalence experiment."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dyadic import DyadicTree, build_tree, verify_cube_axioms
from .errors import HmtkError
from .norms import (TestFunction, carleson_norm, check_multiplier_bound, check_pairing_bound,
                    check_pointwise_bounds, holder_norm, kernel_P, lip_norm, ratio_summary)
from .numerics import exact_sum, linear_fit
from .space import FiniteHomSpace, doubling_profile, validate_space
from .wavelets import (CoefficientSet, WaveletBasis, analyze, basis_checks, build_mra,
                       l2_norm, partial_sum)

HYPOTHESIS_VIOLATED = "hypothesis violated"


@dataclass(frozen=True)
class GeometryConfig:
    lower_min: float = 0.5          # min unit-ball mass for the lower bound
    upper_max: float = 8.0          # max unit-ball mass for the upper bound
    reg_const_max: float = 8.0
    wavelet_spread_max: float = 10.0
    interior_slack: float = 0.05
    n_radii: int = 16


def unit_ball_masses(space: FiniteHomSpace) -> np.ndarray:
    """``mu(B(x, 1+))``: the limit of ``mu(B(x, r))`` as ``r`` decreases to 1,
    which is the mass of the closed unit ball."""
    cache = space.balls
    r = np.nextafter(1.0, math.inf)
    return np.array([float(cache.measure(x, r)) for x in range(space.n)])


def central_point(space: FiniteHomSpace) -> int:
    """Point of least eccentricity (lowest id on ties)."""
    return int(np.argmin(space.dist.max(axis=1)))


def upper_dimension(space: FiniteHomSpace) -> float:
    """``log2 C_mu`` over radii of at least four grid cells, where counting
    artefacts of the atoms no longer dominate the doubling ratio."""
    return doubling_profile(space, min_radius=4 * space.resolution, n_scales=2).omega


# ---------------------------------------------------------------- geometry

def geometry_lower(space: FiniteHomSpace, theta: float,
                   config: GeometryConfig = GeometryConfig()) -> dict:
    masses = unit_ball_masses(space)
    x = int(np.argmin(masses))
    m = float(masses[x])
    lip = lip_norm(np.ones(space.n), space, theta)
    upper = 1.0 / math.pow(m, theta)
    lower = 1.0 / math.pow(space.total_mass, theta)
    agree = lower * (1 - 1e-9) <= lip.value <= upper * (1 + 1e-9)
    return {"min_unit_mass": m, "witness_point": x, "threshold": config.lower_min,
            "lip_one": lip.value, "lip_one_witness": lip.witness,
            "lip_one_predicted": upper, "agreement": bool(agree),
            "pass": bool(m >= config.lower_min)}


def geometry_upper(space: FiniteHomSpace, basis: WaveletBasis, theta: float,
                   config: GeometryConfig = GeometryConfig(), *,
                   father_lip: bool = False) -> dict:
    """Measure side: largest unit-ball mass.  Wavelet side: for a level-0
    father, ``|phi|_inf / |phi|_*`` equals ``mu(Q)^theta`` (one coefficient,
    attained at its own cube), so the wavelet verdict bounds ``mu(Q^0)``."""
    masses = unit_ball_masses(space)
    x = int(np.argmax(masses))
    M = float(masses[x])
    tree = basis.tree
    q_mass = tree.masses(0)
    ratios = []
    lip_ratios = []
    for key in basis.father_keys():
        a = key[2]
        coeffs = CoefficientSet([key], [1.0])
        car = carleson_norm(coeffs, tree, theta).value
        phi = basis.function(key)
        sup = float(np.abs(phi).max())
        ratios.append(sup / car)
        if father_lip:
            lip_ratios.append(sup / lip_norm(phi, space, theta).value)
    a = int(np.argmax(q_mass))
    wave_max = float(q_mass[a])
    out = {"max_unit_mass": M, "witness_point": x, "threshold": config.upper_max,
           "pass": bool(M <= config.upper_max),
           "wavelet": {"max_father_mass": wave_max, "witness_cube": a,
                       "max_sup_over_carleson": max(ratios),
                       "pass": bool(wave_max <= config.upper_max)}}
    if father_lip:
        out["wavelet"]["max_sup_over_lip"] = max(lip_ratios)
    out["sides_agree"] = out["pass"] == out["wavelet"]["pass"]
    return out


def _ahlfors_radii(space: FiniteHomSpace, n_radii: int) -> np.ndarray:
    lo, hi = 4 * space.resolution, space.diameter / 4
    if not lo < hi:
        lo, hi = 2 * space.resolution, space.diameter / 2
    if not lo < hi:
        raise HmtkError("space too small for an Ahlfors fit: no scales between "
                        "resolution and diameter")
    # move each radius to the midpoint of its gap between distinct distances,
    # so no ball sits on a ring of atoms at its boundary
    dd = space.distinct_distances
    raw = np.geomspace(lo, hi, n_radii)
    i = np.clip(np.searchsorted(dd, raw, side="left"), 1, dd.size - 1)
    return np.unique((dd[i - 1] + dd[i]) / 2)


def ahlfors_test(space: FiniteHomSpace, tree: DyadicTree, theta: float,
                 config: GeometryConfig = GeometryConfig(), *, probes=None) -> dict:
    """Fit ``mu(B(x, r)) ~ r^w`` on interior samples and measure the spread.

    A sample ``(x, r)`` is interior when no ball of the same radius centred
    inside ``B(x, r)`` is heavier by more than ``interior_slack``; balls cut
    by the edge of the finite space fail this.  The regularity constant is
    ``exp(max residual - min residual)`` over all samples.
    """
    radii = _ahlfors_radii(space, config.n_radii)
    cache = space.balls
    n = space.n
    vol = np.empty((n, radii.size))
    for x in range(n):
        vol[x] = cache.measure(x, radii)
    interior = np.zeros_like(vol, dtype=bool)
    for i, r in enumerate(radii):
        inside = space.dist < r
        heaviest = np.where(inside, vol[:, i][None, :], 0.0).max(axis=1)
        interior[:, i] = vol[:, i] >= (1 - config.interior_slack) * heaviest
    logr = np.broadcast_to(np.log(radii), vol.shape)
    logv = np.log(vol)
    slope, icpt = linear_fit(logr[interior], logv[interior])
    resid = logv - (slope * logr + icpt)
    hi = np.unravel_index(int(np.argmax(resid)), resid.shape)
    lo = np.unravel_index(int(np.argmin(resid)), resid.shape)
    reg = math.exp(float(resid[hi] - resid[lo]))

    wave = _wavelet_spread(space, tree, slope)
    out = {"omega_hat": slope, "reg_const": reg, "threshold": config.reg_const_max,
           "radii": [float(radii[0]), float(radii[-1]), int(radii.size)],
           "n_samples": int(vol.size), "n_interior": int(interior.sum()),
           "witness": {"heavy": [int(hi[0]), float(radii[hi[1]])],
                       "light": [int(lo[0]), float(radii[lo[1]])]},
           "pass": bool(reg <= config.reg_const_max)}
    wave["pass"] = bool(wave["spread"] <= config.wavelet_spread_max)
    out["wavelet"] = wave
    out["sides_agree"] = out["pass"] == wave["pass"]
    if probes:
        rows = []
        for name, f in probes:
            lip = lip_norm(f, space, theta).value
            if lip > 0:
                rows.append({"name": name, "ratio": holder_norm(f, space, theta * slope) / lip})
        out["holder_vs_lip"] = rows
    return out


def _wavelet_spread(space: FiniteHomSpace, tree: DyadicTree, omega: float) -> dict:
    """Spread of ``mu(Q_b^{k+1}) / delta^{k w}`` over new-centre cubes whose
    parent level resolves the grid (``c_# delta^k`` above the atom spacing)."""
    vals, where = [], []
    for k in range(0, tree.k_max):
        if not tree.c_sharp * tree.delta ** k > space.min_distance:
            continue
        lev = tree.level(k + 1)
        masses = tree.masses(k + 1)
        norm = tree.delta ** (k * omega)
        for b in np.flatnonzero(lev.new_center):
            vals.append(masses[b] / norm)
            where.append((k + 1, int(b)))
    if not vals:
        return {"spread": 1.0, "levels": [], "count": 0, "note": "no resolved levels"}
    vals = np.array(vals)
    i, j = int(np.argmax(vals)), int(np.argmin(vals))
    return {"spread": float(vals[i] / vals[j]), "count": int(vals.size),
            "levels": sorted({w[0] for w in where}),
            "witness": {"heavy": list(where[i]), "light": list(where[j])}}


def geometry(space: FiniteHomSpace, tree: DyadicTree, basis: WaveletBasis, theta: float,
             config: GeometryConfig = GeometryConfig()) -> dict:
    return {"lower": geometry_lower(space, theta, config),
            "upper": geometry_upper(space, basis, theta, config),
            "ahlfors": ahlfors_test(space, tree, theta, config)}


# ---------------------------------------------------------------- probes

def default_probes(space: FiniteHomSpace, basis: WaveletBasis, theta: float,
                   omega: float, seed: int = 0) -> list[tuple[str, np.ndarray]]:
    """Constant, distance, distance power, three oscillations, single mothers
    at three levels, two polynomial-decay bumps and a seeded smooth random
    function."""
    x0 = 0
    d0 = space.dist[x0]
    xc = central_point(space)
    probes = [("one", np.ones(space.n)),
              ("dist", d0.copy()),
              ("dist_pow", d0 ** (theta * omega))]
    for m in (1, 2, 4):
        probes.append((f"sin{m}", np.sin(m * d0)))
    levels = basis.mother_levels
    if levels:
        picks = sorted({levels[0], levels[len(levels) // 2], levels[-1]})
        for lv in picks:
            keys = basis.mother_keys(lv)
            key = min(keys, key=lambda kk: (space.dist[xc, basis.center(kk)], kk[2]))
            probes.append((f"mother_L{lv}", basis.function(key)))
    for r in (1.0, 2.0):
        probes.append((f"bump_r{r:g}", kernel_P(space, xc, r, 2.0 * theta * omega + 1.0)))
    rng = np.random.default_rng(seed)
    amp = rng.normal(size=4)
    phase = rng.uniform(0, 2 * np.pi, size=4)
    dc = space.dist[xc]
    smooth = sum(amp[j] * np.cos((j + 1) * dc / 2 + phase[j]) / (j + 1) for j in range(4))
    probes.append(("random_smooth", smooth + 0.5 * np.cos(d0)))
    return probes


def _partial_sum_check(f, basis: WaveletBasis, space: FiniteHomSpace, theta: float,
                       lip_f: float, threads) -> dict:
    tree = basis.tree
    cubes0 = tree.level(0).members
    lips, errs, cube_errs = [], [], []
    for n in range(0, tree.k_max + 1):
        fn = partial_sum(f, basis, n)
        lips.append(lip_norm(fn, space, theta, threads=threads).value)
        r = f - fn
        errs.append(l2_norm(r, space))
        cube_errs.append([math.sqrt(exact_sum(r[m] * r[m] * space.weight[m])) for m in cubes0])
    mono = all(errs[i + 1] <= errs[i] * (1 + 1e-12) + 1e-15 for i in range(len(errs) - 1))
    mono_cubes = all(cube_errs[i + 1][a] <= cube_errs[i][a] * (1 + 1e-12) + 1e-15
                     for i in range(len(errs) - 1) for a in range(len(cubes0)))
    ratio = max(lips) / lip_f if lip_f > 0 else 0.0
    return {"lip": lips, "l2_error": errs, "max_lip_ratio": ratio,
            "monotone": bool(mono), "monotone_on_cubes": bool(mono_cubes)}


def equiv_experiment(space: FiniteHomSpace, theta: float, probes=None, *,
                     delta: float | None = None, c0: float | None = None,
                     C0: float | None = None, threads: int | None = None,
                     with_geometry: bool = True,
                     config: GeometryConfig = GeometryConfig(),
                     tree: DyadicTree | None = None,
                     basis: WaveletBasis | None = None) -> dict:
    """Nets, cubes, basis, coefficients and both norms for every probe.

    The envelope ``C* = max(max ratio, 1 / min ratio)`` is taken over the
    non-degenerate probes.  When the space fails the unit-ball lower bound
    the run is labelled ``hypothesis violated``.
    """
    report = validate_space(space)
    if tree is None:
        tree = build_tree(space, delta, c0, C0, a0=report.a0)
    axioms = verify_cube_axioms(space, tree)
    if basis is None:
        basis = build_mra(space, tree)
    checks = basis_checks(basis)
    omega = upper_dimension(space)
    if probes is None:
        probes = default_probes(space, basis, theta, omega)

    rows, ratios, degenerate = [], [], 0
    for name, f in probes:
        f = np.asarray(f, dtype=float)
        coeffs = analyze(f, basis)
        lip = lip_norm(f, space, theta, threads=threads)
        car = carleson_norm(coeffs, tree, theta)
        row = {"name": name, "lip": lip.value, "carleson": car.value,
               "witnesses": {"lip": lip.witness, "carleson": car.witness}}
        if lip.value == 0.0 and car.value == 0.0:
            row["ratio"] = None
            row["status"] = "excluded-degenerate"
            degenerate += 1
        elif lip.value == 0.0:
            row["ratio"] = None
            row["status"] = "zero lip, nonzero carleson"
        else:
            row["ratio"] = car.value / lip.value
            row["status"] = "ok"
            ratios.append(row["ratio"])
            row["partial_sums"] = _partial_sum_check(f, basis, space, theta, lip.value, threads)
        rows.append(row)

    envelope = max(max(ratios), 1.0 / min(ratios)) if ratios else None
    out = {"space": space.name,
           "params": {"theta": theta, "delta": tree.delta, "c0": tree.c0, "C0": tree.C0,
                      "a0": report.a0, "omega": omega, "k_min": tree.k_min,
                      "k_max": tree.k_max, "n": space.n},
           "axioms": {"ok": axioms.ok, "violations": axioms.violations[:20],
                      "checked": axioms.checked},
           "basis_checks": checks,
           "probes": rows,
           "degenerate_probes": degenerate,
           "envelope_C": envelope,
           "partial_sum_constant": max((r["partial_sums"]["max_lip_ratio"] for r in rows
                                        if "partial_sums" in r), default=None)}
    verdicts = {"axioms": axioms.ok,
                "basis": checks["gram_max_deviation"] <= 1e-10
                and checks["max_mother_mean"] <= 1e-10 and checks["dimension_ok"],
                "partial_sums_monotone": all(r["partial_sums"]["monotone"] for r in rows
                                             if "partial_sums" in r)}
    if with_geometry:
        geo = geometry(space, tree, basis, theta, config)
        out["geometry"] = geo
        verdicts.update({g: geo[g]["pass"] for g in ("lower", "upper", "ahlfors")})
        hypothesis = geo["lower"]["pass"]
    else:
        hypothesis = geometry_lower(space, theta, config)["pass"]
    out["hypothesis"] = "ok" if hypothesis else HYPOTHESIS_VIOLATED
    out["verdicts"] = verdicts
    return out


# ---------------------------------------------------------------- bound checks

def bounds_experiment(space: FiniteHomSpace, theta: float, *, omega: float | None = None,
                      a0: float | None = None) -> dict:
    """Empirical constants for the pointwise, multiplier and pairing bounds.

    Multiplier and pairing use ten (psi, f) pairs: two polynomial-decay bumps
    (``beta = 1``, ``gamma = 2 theta w + 1``) against five smooth functions.
    """
    if omega is None:
        omega = upper_dimension(space)
    if a0 is None:
        a0 = validate_space(space).a0
    x0 = 0
    d0 = space.dist[x0]
    xc = central_point(space)
    funcs = [("one", np.ones(space.n)), ("dist", d0.copy()), ("sin1", np.sin(d0)),
             ("sin2", np.sin(2 * d0)), ("dist_pow", d0 ** (theta * omega))]
    gamma = 2 * theta * omega + 1.0
    psis = [TestFunction(kernel_P(space, xc, r, gamma), xc, r, 1.0, gamma) for r in (1.0, 2.0)]

    pointwise = {}
    for name, f in funcs:
        rep = check_pointwise_bounds(f, space, theta)
        pointwise[name] = rep.as_dict()
    mult, pair = [], []
    rows = []
    for i, psi in enumerate(psis):
        for name, f in funcs:
            m = check_multiplier_bound(psi, f, space, theta, omega, a0=a0)
            p = check_pairing_bound(psi, f, space, theta, omega, a0=a0)
            mult.append(m)
            pair.append(p)
            rows.append({"psi": f"bump_r{psi.r:g}", "f": name,
                         "multiplier": m.ratio, "pairing": p.ratio})
    return {"space": space.name, "theta": theta, "omega": omega,
            "C1": max(v["C1"] for v in pointwise.values()),
            "C2": max(v["C2"] for v in pointwise.values()),
            "pointwise": pointwise,
            "multiplier": ratio_summary(mult),
            "pairing": ratio_summary(pair),
            "pairs": rows}
