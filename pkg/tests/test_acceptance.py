"""Acceptance criteria.

Each test prints one ``[PASS]``/``[FAIL]`` line (also collected in the
terminal summary) and then asserts the criterion with its pinned tolerance.
Run alone with ``pytest tests/test_acceptance.py -v -s``.
"""
import functools
import json
import math
import time

import numpy as np
import pytest

from hmtk.cli import main
from hmtk.diagnostics import bounds_experiment, default_probes, equiv_experiment, geometry, upper_dimension
from hmtk.dyadic import build_tree, verify_cube_axioms
from hmtk.generators import expected_verdicts, generate, planted_suite
from hmtk.norms import carleson_norm, lip_norm
from hmtk.wavelets import analyze, basis_checks, build_mra, l2_norm, synthesize

import oracles
from conftest import ACCEPTANCE_LINES, cached_basis, cached_space

DRIFT_MAX = 0.20
AXIOM_SECONDS = 10.0
EQUIV_SECONDS = 60.0
GRAM_TOL = 1e-10
MEAN_TOL = 1e-10
PARSEVAL_TOL = 1e-9
RECON_TOL = 1e-8
PARTIAL_SUM_FACTOR = 3.0

STRUCTURE_SPACES = [("grid1d", 256, None, None), ("grid2d", 32, None, None),
                    ("snowflake", 256, None, 0.5), ("power_metric", 128, None, 2.0)]


def record(number, name, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] {number:>2}. {name}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def drift(a, b):
    return abs(b - a) / abs(a)


def label(spec):
    return f"{spec[0]}(n={spec[1]})"


# ---------------------------------------------------------------- 1

def test_01_cube_axioms():
    details, ok = [], True
    for spec in STRUCTURE_SPACES:
        space = cached_space(*spec)
        t = time.perf_counter()
        tree = build_tree(space)
        rep = verify_cube_axioms(space, tree)
        dt = time.perf_counter() - t
        good = rep.ok and dt <= AXIOM_SECONDS
        ok &= good
        details.append(f"{label(spec)} {len(rep.violations)} violations {dt:.2f}s")
    record(1, "cube axioms", ok, "; ".join(details))
    assert ok


# ---------------------------------------------------------------- 2 and 3

def random_probes(n, count=10):
    return [oracles.rng_function(n, seed) for seed in range(count)]


def test_02_wavelet_system():
    details, ok = [], True
    for spec in STRUCTURE_SPACES:
        basis = cached_basis(*spec)
        space = basis.space
        chk = basis_checks(basis)
        worst = 0.0
        for f in random_probes(space.n):
            e = analyze(f, basis).energy()
            worst = max(worst, abs(e - l2_norm(f, space) ** 2) / l2_norm(f, space) ** 2)
        good = (chk["gram_max_deviation"] <= GRAM_TOL and chk["max_mother_mean"] <= MEAN_TOL
                and worst <= PARSEVAL_TOL and chk["dimension_ok"])
        ok &= good
        details.append(f"{label(spec)} gram {chk['gram_max_deviation']:.1e} "
                       f"mean {chk['max_mother_mean']:.1e} parseval {worst:.1e}")
    record(2, "wavelet orthonormality and Parseval", ok, "; ".join(details))
    assert ok


def test_03_reconstruction():
    details, ok = [], True
    for spec in STRUCTURE_SPACES:
        basis = cached_basis(*spec)
        space = basis.space
        omega = upper_dimension(space)
        probes = random_probes(space.n) + [f for _, f in default_probes(space, basis, 0.3, omega)]
        worst = 0.0
        for f in probes:
            back = synthesize(analyze(f, basis), basis)
            worst = max(worst, l2_norm(back - f, space) / l2_norm(f, space))
        ok &= worst <= RECON_TOL
        details.append(f"{label(spec)} {len(probes)} probes max rel err {worst:.1e}")
    record(3, "reconstruction at full depth", ok, "; ".join(details))
    assert ok


# ---------------------------------------------------------------- 4 and 5

def grid64_functions():
    g = cached_space("grid1d", 64)
    fs = [oracles.rng_function(64, s) for s in range(4)]
    fs += [g.coords[:, 0], np.ones(64), np.sin(4 * g.coords[:, 0])]
    return fs


def test_04_carleson_oracle():
    basis = cached_basis("grid1d", 64)
    checked, ok = 0, True
    for f in grid64_functions():
        c = analyze(f, basis)
        for theta in (0.1, 0.3, 0.7):
            ok &= carleson_norm(c, basis.tree, theta).value == oracles.carleson_brute(c, basis.tree, theta)
            checked += 1
    record(4, "Carleson oracle equality on grid1d(64)", ok, f"{checked} cases, exact equality")
    assert ok


def test_05_lip_oracle():
    g = cached_space("grid1d", 64)
    checked, ok = 0, True
    for f in grid64_functions():
        for theta in (0.1, 0.3, 0.7):
            ok &= lip_norm(f, g, theta).value == oracles.lip_brute(f, g.dist, g.weight, theta)
            checked += 1
    record(5, "Lipschitz oracle equality on grid1d(64)", ok, f"{checked} cases, exact equality")
    assert ok


# ---------------------------------------------------------------- 6 and 7

ENVELOPE_SPACES = [("grid1d", None), ("snowflake", 0.5)]


@functools.lru_cache(maxsize=None)
def equiv_run(kind, exponent, n, theta):
    space = cached_space(kind, n, None, exponent)
    t = time.perf_counter()
    rep = equiv_experiment(space, theta)
    return rep, time.perf_counter() - t


def test_06_equivalence_envelope():
    details, ok = [], True
    for kind, exp in ENVELOPE_SPACES:
        for theta in (0.1, 0.3):
            small, _ = equiv_run(kind, exp, 64, theta)
            large, dt = equiv_run(kind, exp, 256, theta)
            a, b = small["envelope_C"], large["envelope_C"]
            dr = drift(a, b)
            good = (a is not None and b is not None and math.isfinite(a) and math.isfinite(b)
                    and dr <= DRIFT_MAX and dt <= EQUIV_SECONDS)
            ok &= good
            details.append(f"{kind} theta={theta} C*={a:.3f}->{b:.3f} drift {100 * dr:.1f}% "
                           f"({dt:.1f}s at n=256)")
    record(6, "equivalence envelope refinement drift <= 20%", ok, "; ".join(details))
    assert ok


def test_07_partial_sum_stability():
    details, ok = [], True
    for kind, exp in ENVELOPE_SPACES:
        for theta in (0.1, 0.3):
            for n in (64, 256):
                rep, _ = equiv_run(kind, exp, n, theta)
                cstar = rep["envelope_C"]
                worst, mono = 0.0, True
                for row in rep["probes"]:
                    ps = row.get("partial_sums")
                    if ps is None:
                        continue
                    worst = max(worst, ps["max_lip_ratio"])
                    mono &= ps["monotone"] and ps["monotone_on_cubes"]
                good = worst <= PARTIAL_SUM_FACTOR * cstar and mono
                ok &= good
                details.append(f"{kind}(n={n}) theta={theta} max lip(f_n)/lip(f)={worst:.3f} "
                               f"<= {PARTIAL_SUM_FACTOR * cstar:.2f}, monotone={mono}")
    record(7, "partial-sum stability and L2 monotonicity", ok, "; ".join(details))
    assert ok


# ---------------------------------------------------------------- 8

@functools.lru_cache(maxsize=None)
def bounds_run(n, theta):
    return bounds_experiment(cached_space("grid1d", n), theta)


def test_08_pointwise_multiplier_pairing():
    details, ok = [], True
    for theta in (0.1, 0.3):
        a, b = bounds_run(64, theta), bounds_run(256, theta)
        vals = {"C1": (a["C1"], b["C1"]), "C2": (a["C2"], b["C2"]),
                "multiplier": (a["multiplier"]["max_ratio"], b["multiplier"]["max_ratio"]),
                "pairing": (a["pairing"]["max_ratio"], b["pairing"]["max_ratio"])}
        parts = []
        for name, (x, y) in vals.items():
            good = (x is not None and y is not None and math.isfinite(x) and math.isfinite(y)
                    and drift(x, y) <= DRIFT_MAX)
            ok &= good
            parts.append(f"{name} {x:.3g}->{y:.3g} ({100 * drift(x, y):.1f}%)")
        details.append(f"theta={theta}: " + ", ".join(parts))
    record(8, "pointwise/multiplier/pairing constants finite and stable", ok, "; ".join(details))
    assert ok


# ---------------------------------------------------------------- 9

OMEGA_TARGETS = {"grid1d": (1.0, 0.05), "snowflake": (2.0, 0.1), "grid2d": (2.0, 0.1)}


def test_09_geometry_classifiers():
    details, ok = [], True
    for name, spec in planted_suite().items():
        space = generate(spec)
        tree = build_tree(space)
        basis = build_mra(space, tree)
        geo = geometry(space, tree, basis, 0.3)
        want = expected_verdicts(name)
        got = {k: geo[k]["pass"] for k in want}
        good = got == want
        agree = geo["upper"]["sides_agree"] and geo["ahlfors"]["sides_agree"]
        good &= agree
        w = geo["ahlfors"]["omega_hat"]
        extra = ""
        if name in OMEGA_TARGETS:
            target, tol = OMEGA_TARGETS[name]
            good &= abs(w - target) <= tol
            extra = f" omega_hat={w:.4f} (target {target}+-{tol})"
        ok &= good
        details.append(f"{name} {got} sides agree={agree}{extra}")
    record(9, "geometry classifiers on the planted suite", ok, "; ".join(details))
    assert ok


# ---------------------------------------------------------------- 10

def test_10_cli_determinism(tmp_path):
    space = tmp_path / "s.json"
    assert main(["generate", "--kind", "grid1d", "--n", "256", "--out", str(space)]) == 0
    outs = []
    for threads in (1, 4):
        out = tmp_path / f"equiv_{threads}.json"
        assert main(["equiv", "--space", str(space), "--theta", "0.3",
                     "--threads", str(threads), "--out", str(out)]) == 0
        outs.append(out.read_bytes())
    ok = outs[0] == outs[1]
    json.loads(outs[0])
    record(10, "equiv report byte-identical across thread counts", ok,
           f"{len(outs[0])} bytes, threads 1 vs 4")
    assert ok
