import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from simstruct.errors import DegenerateProjection, DomainError
from simstruct.leaf_closure import (
    circular_max_gap,
    closure_analyze,
    orbit_points,
    projections_report,
    reduce_level,
    slice_metric,
    unstable_projections,
    write_orbit_csv,
)

GOLDEN = (1 + math.sqrt(5)) / 2


def test_mn_projection_ratio_is_golden(mn_split):
    rep = unstable_projections(mn_split, 100_000)
    assert rep.ratios[0] == pytest.approx(GOLDEN, rel=1e-12)
    assert rep.rational == [False]
    assert rep.max_gaps[0] < 1e-4
    assert rep.dense


def test_plastic_projections_are_independent(plastic_split):
    rep = unstable_projections(plastic_split, 100_000)
    assert len(rep.ratios) == 2
    assert not any(rep.rational)
    assert rep.dense and max(rep.max_gaps) < rep.threshold


def test_rational_fixture_is_not_dense():
    rep = projections_report([1.0, 2 / 3], 10_000)
    assert rep.rational == [True]
    assert not rep.dense


def test_degenerate_projection_raises():
    with pytest.raises(DegenerateProjection):
        projections_report([1.0, 1e-14])


def test_max_gap_brute_force(rng):
    v = rng.random(50)
    s = sorted(v)
    gaps = [b - a for a, b in zip(s, s[1:])] + [1 - s[-1] + s[0]]
    assert circular_max_gap(v) == pytest.approx(max(gaps), abs=1e-15)


@settings(max_examples=30, deadline=None)
@given(n=st.integers(2, 2000))
def test_golden_orbit_gap_is_three_distance_bounded(n):
    # Three-gap bound: the largest gap of the golden orbit is at most GOLDEN^2 / n.
    assert circular_max_gap(orbit_points(GOLDEN, n)) <= GOLDEN**2 / n + 1e-12


def test_reduce_level(mn):
    assert reduce_level(mn, 1.0) == 1.0
    assert reduce_level(mn, mn.lam) == pytest.approx(mn.lam)
    assert reduce_level(mn, 3.0) == pytest.approx(3.0 * mn.lam**2)
    assert mn.lam <= reduce_level(mn, 0.01) <= 1.0
    with pytest.raises(DomainError):
        reduce_level(mn, 0.0)


def test_closure_mn_at_one(mn):
    rep = closure_analyze(mn, [0.1, 0.2, 1.0], n_points=100_000)
    assert rep.d == 2 and rep.bounds_hold
    np.testing.assert_allclose(rep.induced_metric, np.eye(2), atol=1e-15)
    assert rep.metric_deviation < 1e-12 and rep.flat
    assert rep.equivariance_residual < 1e-12
    assert rep.covering_radius < rep.covering_threshold
    assert rep.needs_covering is False


def test_closure_mn_at_lambda(mn):
    rep = closure_analyze(mn, [0.0, 0.0, mn.lam], n_points=10_000)
    np.testing.assert_allclose(rep.induced_metric, np.diag([1.0, mn.lam**4]), rtol=1e-12)
    assert rep.flat


def test_closure_plastic(plastic):
    rep = closure_analyze(plastic, [0.0, 0.0, 0.0, 0.9], n_points=100_000)
    assert rep.d == 3 and rep.bounds_hold and rep.flat


def test_closure_slices_related_by_phi(mn_wavy):
    z0 = 0.8
    L = mn_wavy.deck.phi_map.linear[:2, :2]
    lhs = L.T @ slice_metric(mn_wavy, mn_wavy.lam * z0) @ L
    np.testing.assert_allclose(lhs, mn_wavy.lam**2 * slice_metric(mn_wavy, z0), rtol=1e-12)


def test_closure_rejects_non_mapping_torus(flat3):
    with pytest.raises(DomainError):
        closure_analyze(flat3, [0.1, 0.2, 0.3])


def test_orbit_csv(mn_split, tmp_path):
    path = tmp_path / "orbit.csv"
    write_orbit_csv(path, unstable_projections(mn_split, 1000), n_rows=10)
    lines = path.read_text().splitlines()
    assert lines[0] == "k,orbit_0" and len(lines) == 11
