"""Randomised invariants on small random spaces."""
import numpy as np
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from hmtk.dyadic import build_tree, verify_cube_axioms
from hmtk.norms import carleson_norm, lip_norm
from hmtk.space import FiniteHomSpace, validate_space
from hmtk.wavelets import analyze, basis_checks, build_mra, synthesize

import oracles

SETTINGS = settings(max_examples=25, deadline=None,
                    suppress_health_check=[HealthCheck.too_slow])


@st.composite
def spaces(draw):
    n = draw(st.integers(min_value=3, max_value=18))
    seed = draw(st.integers(min_value=0, max_value=2 ** 31))
    power = draw(st.sampled_from([1.0, 0.5, 2.0]))
    rng = np.random.default_rng(seed)
    xs = np.sort(rng.uniform(0, 4, n))
    xs += np.arange(n) * 1e-3                       # keep points distinct
    d = np.abs(xs[:, None] - xs[None, :]) ** power
    w = rng.uniform(0.05, 1.0, n)
    f = rng.normal(size=n)
    return FiniteHomSpace(d, w, xs[:, None]), f


@SETTINGS
@given(spaces())
def test_tree_axioms_and_basis(sf):
    space, f = sf
    tree = build_tree(space)
    assert verify_cube_axioms(space, tree).ok
    basis = build_mra(space, tree)
    chk = basis_checks(basis)
    assert chk["dimension_ok"]
    assert chk["gram_max_deviation"] <= 1e-10
    assert chk["max_mother_mean"] <= 1e-10
    back = synthesize(analyze(f, basis), basis)
    assert np.abs(back - f).max() <= 1e-9 * max(1.0, np.abs(f).max())


@SETTINGS
@given(spaces(), st.sampled_from([0.1, 0.3, 0.6]))
def test_lip_equals_oracle(sf, theta):
    space, f = sf
    assert lip_norm(f, space, theta).value == oracles.lip_brute(f, space.dist, space.weight, theta)


@SETTINGS
@given(spaces(), st.sampled_from([0.1, 0.3]))
def test_carleson_equals_oracle(sf, theta):
    space, f = sf
    basis = build_mra(space, build_tree(space))
    c = analyze(f, basis)
    assert carleson_norm(c, basis.tree, theta).value == oracles.carleson_brute(c, basis.tree, theta)


@SETTINGS
@given(spaces())
def test_a0_equals_oracle(sf):
    space, _ = sf
    # collinear triples round a few ulps above 1; the package snaps those to 1
    brute = oracles.a0_brute(space.dist)
    assert abs(validate_space(space).a0 - brute) <= 64 * np.finfo(float).eps
