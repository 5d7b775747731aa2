import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from simstruct.errors import DomainError
from simstruct.metric_core import (
    DeckElement,
    FlatTorus,
    MappingTorus,
    PhiProfile,
    christoffel_at,
    curvature_samples,
    deck_normal_form_residual,
    deck_pullback_residual,
    free_action_check,
    make_cone,
    metric_at,
    n_plane_curvature,
    phi_eval,
    riemann_at,
    riemann_orthonormal,
    sectional,
)


def _random_points(field, rng, n, zlo=0.05, zhi=5.0):
    xs = rng.uniform(-2, 2, (n, field.dim - 1))
    return np.column_stack([xs, rng.uniform(zlo, zhi, n)])


@pytest.mark.parametrize("z, order, expected", [(2.0, 0, 16.0), (1.0, 2, 12.0), (1.0, 1, 4.0), (3.0, 1, 108.0)])
def test_phi_z4(z, order, expected):
    prof = PhiProfile(1, 0.38, ())
    assert phi_eval(prof, z, order) == pytest.approx(expected, rel=1e-14)


@pytest.mark.parametrize("z", [0.0, -1.0])
def test_phi_rejects_nonpositive(z):
    with pytest.raises(DomainError):
        phi_eval(PhiProfile(1, 0.38), z)


def test_phi_functional_equation(mn_wavy, rng):
    prof = mn_wavy.profile
    z = rng.uniform(0.01, 10, 100)
    ratio = phi_eval(prof, mn_wavy.lam * z) / phi_eval(prof, z)
    np.testing.assert_allclose(ratio, mn_wavy.lam**4, rtol=1e-12)


def test_phi_derivatives_match_finite_differences(mn_wavy):
    prof, h = mn_wavy.profile, 1e-5
    for z in (0.3, 1.0, 2.7):
        d1 = (prof(z + h) - prof(z - h)) / (2 * h)
        d2 = (prof(z + h, 1) - prof(z - h, 1)) / (2 * h)
        assert prof(z, 1) == pytest.approx(d1, rel=1e-8)
        assert prof(z, 2) == pytest.approx(d2, rel=1e-8)


@settings(max_examples=30, deadline=None)
@given(
    a=st.floats(-0.3, 0.3),
    b=st.floats(-0.3, 0.3),
    z=st.floats(0.01, 50),
)
def test_functional_equation_property(a, b, z):
    lam = 0.868837
    prof = PhiProfile(2, lam, ((a, b),))
    assert prof(lam * z) == pytest.approx(lam**6 * prof(z), rel=1e-12)


def test_metric_examples(mn, cone1, flat3):
    np.testing.assert_array_equal(metric_at(mn, [0.3, -0.2, 1.0]), np.eye(3))
    circle = make_cone("circle", 1.0)
    np.testing.assert_allclose(metric_at(circle, [0.4, 3.0]), np.diag([9.0, 1.0]))
    np.testing.assert_array_equal(metric_at(flat3, [0.1, 0.2, 0.3]), np.eye(3))


@pytest.mark.parametrize("p", [[0.0, 0.0, 0.0], [0.0, 0.0, -1.0], [0.0, np.nan, 1.0], [0.0, 1.0]])
def test_metric_rejects_outside_chart(mn, p):
    with pytest.raises(DomainError):
        metric_at(mn, p)


def test_cone_rejects_pole(cone2):
    with pytest.raises(DomainError):
        metric_at(cone2, [0.0, 0.0, 1.0])


def test_metric_is_spd(mn_wavy, rng):
    for p in _random_points(mn_wavy, rng, 20):
        g = metric_at(mn_wavy, p)
        np.testing.assert_array_equal(g, g.T)
        assert np.linalg.eigvalsh(g).min() > 0


def test_phi_pullback(mn, mn_wavy, plastic, rng):
    for field in (mn, mn_wavy, plastic):
        pts = _random_points(field, rng, 200)
        res = max(deck_pullback_residual(field, field.deck.phi_map, p) for p in pts)
        assert res < 1e-10


def test_lattice_pullback_is_exact(mn, plastic, rng):
    for field in (mn, plastic):
        for t in field.deck.lattice:
            for p in _random_points(field, rng, 10):
                assert deck_pullback_residual(field, t, p) == 0.0


def test_perturbed_phi_is_detected(mn):
    L = mn.deck.phi_map.linear.copy()
    L[0, 0] *= 1.01
    L[2, 2] *= 1.01
    bad = DeckElement(L, np.zeros(3), mn.lam, 1)
    assert deck_pullback_residual(mn, bad, [0.0, 0.0, 1.0]) > 1e-3


def test_deck_normal_form(mn, plastic):
    assert deck_normal_form_residual(mn) < 1e-10
    assert deck_normal_form_residual(plastic) < 1e-10


def test_lattice_translations_match_integer_lattice(mn):
    # Adapted-coordinate shifts map back to the standard basis of Z^2.
    for k, t in enumerate(mn.deck.lattice):
        x, _ = mn.to_torus(t.shift)
        np.testing.assert_allclose(x, np.eye(2)[k], atol=1e-14)


def test_phi_map_is_A_in_torus_coordinates(mn, rng):
    A = np.array([[2, 1], [1, 1]], float)
    for _ in range(5):
        x, z = rng.normal(size=2), rng.uniform(0.5, 2)
        p = mn.to_adapted(x, z)
        x2, z2 = mn.to_torus(mn.deck.phi_map.apply(p))
        np.testing.assert_allclose(x2, A @ x, atol=1e-12)
        assert z2 == pytest.approx(mn.lam * z)


def test_deck_acts_freely(mn, rng):
    rep = free_action_check(mn, _random_points(mn, rng, 200))
    assert not rep.fixed_point_found
    assert rep.n_elements == 5 * 9 - 1


def test_christoffel_mn_at_z1(mn):
    G = christoffel_at(mn, [0.0, 0.0, 1.0])
    y, z = mn.y_index, mn.z_index
    assert G[y, y, z] == pytest.approx(2.0)
    assert G[y, z, y] == pytest.approx(2.0)
    assert G[z, y, y] == pytest.approx(-2.0)
    mask = np.ones_like(G, bool)
    mask[y, y, z] = mask[y, z, y] = mask[z, y, y] = False
    assert np.all(G[mask] == 0)


def test_christoffel_flat(flat3):
    assert np.all(christoffel_at(flat3, [0.1, 0.2, 0.3]) == 0)


def test_christoffel_closed_vs_fd(mn_wavy, cone2, rng):
    pts = _random_points(mn_wavy, rng, 50, 0.2, 3.0)
    diffs = [np.max(np.abs(christoffel_at(mn_wavy, p) - christoffel_at(mn_wavy, p, "fd"))) for p in pts]
    for _ in range(50):
        p = np.array([rng.uniform(0.3, 2.8), rng.uniform(0, 6), rng.uniform(0.5, 3)])
        diffs.append(np.max(np.abs(christoffel_at(cone2, p) - christoffel_at(cone2, p, "fd"))))
    assert max(diffs) < 1e-6


@pytest.mark.parametrize("z", [0.5, 1.0, 2.0])
@pytest.mark.parametrize("method", ["closed", "fd"])
def test_n_plane_curvature_z4(mn, z, method):
    K = sectional(mn, [0.0, 0.0, z], mn.y_index, mn.z_index, method)
    assert K == pytest.approx(-2 / z**2, rel=1e-6)


def test_curvature_formula_matches_tensor(mn_wavy, rng):
    for z in rng.uniform(0.2, 4, 10):
        K = sectional(mn_wavy, [0.0, 0.0, z], 1, 2)
        assert K == pytest.approx(n_plane_curvature(mn_wavy.profile, z), rel=1e-9)


def test_curvature_scaling_under_phi(mn_wavy, plastic, rng):
    for field in (mn_wavy, plastic):
        y, zi = field.y_index, field.z_index
        for z in rng.uniform(0.3, 3, 5):
            p = np.zeros(field.dim)
            p[zi] = z
            p2 = p.copy()
            p2[zi] = field.lam * z
            K, K2 = sectional(field, p, y, zi), sectional(field, p2, y, zi)
            assert K2 == pytest.approx(K / field.lam**2, rel=1e-8)


def test_euclidean_directions_are_flat(mn_wavy, plastic, rng):
    for field in (mn_wavy, plastic):
        p = np.zeros(field.dim)
        p[-1] = 1.3
        R = riemann_orthonormal(field, p)
        for s in range(field.q):
            for idx in range(4):
                sl = [slice(None)] * 4
                sl[idx] = s
                assert np.max(np.abs(R[tuple(sl)])) < 1e-8


def test_flat_fixtures_have_zero_curvature(flat3, cone1, rng):
    circle = make_cone("circle", 1.0)
    assert np.all(riemann_at(flat3, [0.1, 0.2, 0.3]) == 0)
    for t in (0.5, 1.0, 3.0):
        assert abs(sectional(circle, [0.2, t], 0, 1)) < 1e-12
        p = [rng.uniform(0.3, 2.8), rng.uniform(0, 6), t]
        assert np.max(np.abs(riemann_orthonormal(cone1, p))) < 1e-10


def test_cone_radius2_curvature(cone2):
    # Tangential plane: (1/r^2 - 1)/t^2; radial planes are flat.
    p = [1.0, 0.5, 1.5]
    assert sectional(cone2, p, 0, 1) == pytest.approx((0.25 - 1) / 1.5**2, rel=1e-10)
    assert abs(sectional(cone2, p, 0, 2)) < 1e-12
    assert sectional(cone2, p, 0, 1, "fd") == pytest.approx(-1 / 3, rel=1e-5)


def test_degenerate_plane_raises(mn):
    with pytest.raises(ValueError):
        sectional(mn, [0, 0, 1.0], 1, 1)


def test_curvature_samples_rows(mn):
    rows = curvature_samples(mn, [0.5, 1.0])
    assert [r["z"] for r in rows] == [0.5, 1.0]
    for r in rows:
        assert r["K"] == pytest.approx(r["K_closed_form"], rel=1e-10)


def test_mapping_torus_describe(plastic):
    d = plastic.describe()
    assert d["dim"] == 4 and d["q"] == 2 and d["coords"] == ["x1", "x2", "y", "z"]


def test_flat_torus_rejects_dimension_zero():
    with pytest.raises(ValueError):
        FlatTorus(0)


def test_mapping_torus_orthogonal_block(plastic):
    L = plastic.deck.phi_map.linear
    block = L[:2, :2] / plastic.lam
    np.testing.assert_allclose(block.T @ block, np.eye(2), atol=1e-12)
    assert isinstance(plastic, MappingTorus)
