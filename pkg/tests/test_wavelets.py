import math

import numpy as np
import pytest

from hmtk.dyadic import build_tree
from hmtk.errors import HmtkError
from hmtk.space import FiniteHomSpace
from hmtk.wavelets import (CoefficientSet, WaveletBasis, analyze, basis_checks, build_mra,
                           fit_decay, l2_norm, partial_sum, synthesize)

import oracles


def test_two_equal_children_mother():
    s = FiniteHomSpace(np.array([[0, 0.1], [0.1, 0.0]]), np.array([0.5, 0.5]))
    tree = build_tree(s, a0=1.0)
    basis = build_mra(s, tree)
    assert len(basis.father_keys()) == 1
    (key,) = basis.mother_keys()
    psi = basis.function(key)
    M = 1.0
    expected = np.array([1.0, -1.0]) / math.sqrt(M)
    assert np.allclose(psi, expected) or np.allclose(psi, -expected)


def test_unequal_children_mother_closed_form():
    # children of mass a and b: psi = (b 1_A - a 1_B) / sqrt(a b (a + b)) up to sign
    s = FiniteHomSpace(np.array([[0, 0.1], [0.1, 0.0]]), np.array([0.2, 0.6]))
    basis = build_mra(s, build_tree(s, a0=1.0))
    psi = basis.function(basis.mother_keys()[0])
    a, b = 0.2, 0.6
    expected = np.array([b, -a]) / math.sqrt(a * b * (a + b))
    assert np.allclose(np.abs(psi), np.abs(expected), rtol=1e-14)
    assert abs(psi @ s.weight) < 1e-16


def test_basis_checks_grid(basis64):
    chk = basis_checks(basis64)
    assert chk["gram_max_deviation"] <= 1e-10
    assert chk["max_mother_mean"] <= 1e-10
    assert chk["dimension_ok"]
    assert chk["n_fathers"] + chk["n_mothers"] == 64


def test_mother_keys_point_to_new_centre_cubes(basis64):
    tree = basis64.tree
    for _, lvl, beta in basis64.mother_keys():
        assert tree.level(lvl).new_center[beta]


def test_father_sup_norm(basis64):
    tree = basis64.tree
    for key in basis64.father_keys():
        phi = basis64.function(key)
        assert phi.max() == pytest.approx(tree.mass(0, key[2]) ** -0.5, rel=1e-15)


def test_constant_has_only_father_coefficients(basis64, grid64):
    c = analyze(np.full(64, 3.0), basis64)
    assert max(abs(v) for v in c.mother_coeffs.values()) < 1e-13
    for a, v in c.father_coeffs.items():
        assert v == pytest.approx(3.0 * math.sqrt(basis64.tree.mass(0, a)), rel=1e-14)


def test_father_probe_gives_unit_coefficient(basis64):
    key = basis64.father_keys()[1]
    c = analyze(basis64.function(key), basis64)
    for k, v in zip(c.keys, c.values):
        assert v == pytest.approx(1.0 if k == key else 0.0, abs=1e-14)


def test_parseval_distance_function(basis64, grid64):
    f = grid64.dist[0]
    c = analyze(f, basis64)
    assert c.energy() == pytest.approx(l2_norm(f, grid64) ** 2, rel=1e-9)
    assert l2_norm(f, grid64) == pytest.approx(oracles.weighted_l2(f, grid64.weight), rel=1e-15)


def test_reconstruction_random(basis64):
    f = oracles.rng_function(64, 4)
    back = synthesize(analyze(f, basis64), basis64)
    assert np.abs(back - f).max() <= 1e-8 * np.abs(f).max()


def test_zero_and_single_coefficient_synthesis(basis64):
    zero = CoefficientSet(list(basis64.keys), np.zeros(basis64.size))
    assert not synthesize(zero, basis64).any()
    key = basis64.mother_keys()[3]
    vals = np.array([1.0 if k == key else 0.0 for k in basis64.keys])
    assert np.array_equal(synthesize(CoefficientSet(list(basis64.keys), vals), basis64),
                          basis64.function(key))


def test_unknown_key_and_length_errors(basis64):
    with pytest.raises(HmtkError):
        analyze(np.zeros(10), basis64)
    with pytest.raises(HmtkError, match="unknown basis key"):
        synthesize(CoefficientSet([("mother", 99, 0)], np.ones(1)), basis64)


def test_partial_sums(basis256, grid256):
    x = grid256.coords[:, 0]
    f = np.sin(x)
    tree = basis256.tree
    assert np.allclose(partial_sum(f, basis256, tree.k_max), f, atol=1e-12)
    errs = [l2_norm(f - partial_sum(f, basis256, n), grid256) for n in range(tree.k_max + 1)]
    assert all(b <= a + 1e-15 for a, b in zip(errs, errs[1:]))
    with pytest.raises(HmtkError):
        partial_sum(f, basis256, tree.k_max + 1)


def test_partial_sum_drops_finer_mother(basis64):
    key = max(basis64.mother_keys(), key=lambda k: k[1])
    psi = basis64.function(key)
    for n in range(0, key[1] - 1):
        assert np.abs(partial_sum(psi, basis64, n)).max() < 1e-14


def test_fit_decay_uniform_over_levels(basis256, grid256):
    fit = fit_decay(basis256)
    assert fit.nu_hat > 0 and math.isfinite(fit.C_hat)
    cs = list(fit.C_by_level.values())
    assert max(cs) / min(cs) <= 10
    etas = [e for e, _ in fit.holder]
    assert etas == [0.25, 0.5, 0.75, 1.0]
    assert all(math.isfinite(c) for _, c in fit.holder)


def test_fit_decay_scales_with_mother(basis64, monkeypatch):
    fit = fit_decay(basis64)
    vals = basis64.values.copy()
    for key in basis64.mother_keys(1):
        vals[:, basis64.index(key)] *= 2
    mutated = WaveletBasis(basis64.tree, list(basis64.keys), vals)
    # freeze nu so the comparison isolates C
    monkeypatch.setattr("hmtk.wavelets.linear_fit", lambda t, g: (-fit.nu_hat, 0.0))
    before = fit_decay(basis64)
    after = fit_decay(mutated)
    assert after.C_by_level[0] == pytest.approx(2 * before.C_by_level[0], rel=1e-14)
