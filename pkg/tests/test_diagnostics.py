import math

import numpy as np
import pytest

from hmtk.diagnostics import (GeometryConfig, ahlfors_test, bounds_experiment, central_point,
                              default_probes, equiv_experiment, geometry_lower, geometry_upper,
                              unit_ball_masses, upper_dimension)
from hmtk.generators import unit_window_mass
from hmtk.space import FiniteHomSpace

from conftest import cached_basis, cached_space, cached_tree


def test_unit_ball_is_closed(grid64):
    # 1+ picks up the atoms at distance exactly 1 (16 cells on each side)
    m = unit_ball_masses(grid64)
    assert m[32] == pytest.approx(33 / 16)
    assert m[0] == pytest.approx(17 / 16)


def test_lower_two_point_space():
    s = FiniteHomSpace(np.array([[0, 10.0], [10.0, 0]]), np.ones(2))
    out = geometry_lower(s, 0.3)
    assert out["min_unit_mass"] == 1.0 and out["pass"] and out["agreement"]


def test_lower_grid_matches_window_mass(grid256):
    out = geometry_lower(grid256, 0.3)
    assert out["pass"] and out["agreement"]
    assert out["lip_one"] == out["lip_one_predicted"]
    # boundary point sees half a window; the continuum value there is 1 (+ one atom)
    assert out["min_unit_mass"] == pytest.approx(1 + 1 / 64)
    assert 2 * unit_window_mass(0.0, 2.0) == pytest.approx(4.0)


def test_lower_fails_on_decaying_weights():
    s = cached_space("weighted_grid", 256, 0.25, -0.5)
    out = geometry_lower(s, 0.3)
    assert not out["pass"]
    assert out["witness_point"] == 255
    assert out["lip_one"] == out["lip_one_predicted"]


def test_upper_fails_on_growing_weights():
    basis = cached_basis("weighted_grid", 256, 1 / 16, 2.0)
    out = geometry_upper(basis.space, basis, 0.3)
    assert not out["pass"] and not out["wavelet"]["pass"] and out["sides_agree"]
    # the heaviest closed unit ball is a full window near the heavy end
    assert out["witness_point"] == 255 - 16


def test_upper_wavelet_ratio_is_mass_power(basis64, grid64):
    out = geometry_upper(grid64, basis64, 0.3, father_lip=True)
    assert out["pass"] and out["sides_agree"]
    top = max(basis64.tree.masses(0))
    assert out["wavelet"]["max_sup_over_carleson"] == pytest.approx(top ** 0.3, rel=1e-14)
    assert math.isfinite(out["wavelet"]["max_sup_over_lip"])


def test_ahlfors_grid_and_snowflake():
    g = ahlfors_test(cached_space("grid1d", 256), cached_tree("grid1d", 256), 0.3)
    assert abs(g["omega_hat"] - 1) <= 0.05 and g["pass"] and g["sides_agree"]
    s = ahlfors_test(cached_space("snowflake", 256, None, 0.5),
                     cached_tree("snowflake", 256, None, 0.5), 0.3)
    assert abs(s["omega_hat"] - 2) <= 0.1 and s["pass"]


def test_ahlfors_fails_on_growing_weights():
    out = ahlfors_test(cached_space("weighted_grid", 256, 1 / 16, 2.0),
                       cached_tree("weighted_grid", 256, 1 / 16, 2.0), 0.3)
    assert not out["pass"] and out["reg_const"] > 8


def test_ahlfors_holder_probe_rows(grid64):
    tree = cached_tree("grid1d", 64)
    out = ahlfors_test(grid64, tree, 0.3, probes=[("x", grid64.coords[:, 0]), ("z", np.zeros(64))])
    assert [r["name"] for r in out["holder_vs_lip"]] == ["x"]


def test_upper_dimension_grid(grid256):
    assert 1.0 <= upper_dimension(grid256) <= 1.3


def test_default_probe_suite(basis64, grid64):
    probes = default_probes(grid64, basis64, 0.3, 1.0)
    names = [n for n, _ in probes]
    assert names[:6] == ["one", "dist", "dist_pow", "sin1", "sin2", "sin4"]
    assert sum(n.startswith("mother_") for n in names) == min(3, len(basis64.mother_levels))
    assert names[-3:] == ["bump_r1", "bump_r2", "random_smooth"]
    again = default_probes(grid64, basis64, 0.3, 1.0)
    assert all(np.array_equal(a[1], b[1]) for a, b in zip(probes, again))
    assert central_point(grid64) in (31, 32)


def test_equiv_experiment_degenerate_and_single_mother(basis64, grid64):
    mk = basis64.mother_keys()[-1]
    probes = [("zero", np.zeros(64)), ("psi", basis64.function(mk)),
              ("one", np.ones(64))]
    rep = equiv_experiment(grid64, 0.3, probes, with_geometry=False,
                           tree=basis64.tree, basis=basis64)
    rows = {r["name"]: r for r in rep["probes"]}
    assert rows["zero"]["status"] == "excluded-degenerate" and rep["degenerate_probes"] == 1
    mu = basis64.tree.mass(mk[1], mk[2])
    assert rows["psi"]["carleson"] == pytest.approx(mu ** -0.8, rel=1e-12)
    assert rep["envelope_C"] >= 1.0
    assert rep["axioms"]["ok"] and rep["verdicts"]["basis"]
    assert rep["hypothesis"] == "ok"


def test_equiv_labels_violated_hypothesis():
    s = cached_space("weighted_grid", 256, 0.25, -0.5)
    rep = equiv_experiment(s, 0.3, [("one", np.ones(256))], with_geometry=False)
    assert rep["hypothesis"] == "hypothesis violated"


def test_equiv_default_suite_runs(grid64):
    rep = equiv_experiment(grid64, 0.3)
    # one mother level on this tree, so 10 probes
    assert len(rep["probes"]) == 10
    assert math.isfinite(rep["envelope_C"])
    assert rep["verdicts"]["partial_sums_monotone"]
    assert all(rep["verdicts"][g] for g in ("lower", "upper", "ahlfors"))


def test_bounds_experiment_small():
    g = cached_space("grid1d", 64)
    out = bounds_experiment(g, 0.3)
    assert len(out["pairs"]) == 10
    assert all(math.isfinite(out[k]) for k in ("C1", "C2"))
    assert out["multiplier"]["omitted"] == 0 and out["pairing"]["omitted"] == 0


def test_thresholds_are_configuration(grid64, basis64):
    strict = GeometryConfig(lower_min=5.0)
    assert not geometry_lower(grid64, 0.3, strict)["pass"]
    assert geometry_upper(grid64, basis64, 0.3, GeometryConfig(upper_max=0.1))["pass"] is False
