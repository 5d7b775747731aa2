import math

import numpy as np
import pytest

from simstruct.errors import DomainError
from simstruct.metric_core import orthonormal_frame
from simstruct.transport import (
    BOUNDARY_ESCAPE,
    MAX_TIME,
    Lifetime,
    integrate_geodesic,
    lifetime,
    mixed_direction,
    mu_estimate,
    parallel_transport,
    sphere_directions,
    unit_vector,
)

ANGLES = [math.pi / 2, math.pi / 4, math.pi / 6, math.pi / 12]


def test_vertical_line_escapes_at_one(mn):
    rec = integrate_geodesic(mn, [0, 0, 1.0], [0, 0, -1.0], 5.0)
    assert rec.termination == BOUNDARY_ESCAPE
    assert rec.lifetime.value == pytest.approx(1.0, abs=1e-6)
    z = rec.points[:, 2]
    np.testing.assert_allclose(z, 1 - rec.times, atol=1e-9)
    assert np.all(np.diff(rec.times) > 0)


def test_vertical_line_from_half(mn):
    assert lifetime(mn, [0.3, -0.7, 0.5], [0, 0, -1.0]).value == pytest.approx(0.5, abs=1e-6)


def test_upward_line_reaches_horizon(mn):
    rec = integrate_geodesic(mn, [0, 0, 1.0], [0, 0, 1.0], 10.0)
    assert rec.termination == MAX_TIME
    assert rec.lifetime.censored and str(rec.lifetime) == ">10"
    assert rec.points[-1, 2] == pytest.approx(11.0, abs=1e-8)


def test_flat_torus_straight_line(flat3):
    v = unit_vector(flat3, [0, 0, 0], [1.0, 2.0, -0.5])
    rec = integrate_geodesic(flat3, [0, 0, 0], v, 7.0)
    assert rec.termination == MAX_TIME
    np.testing.assert_allclose(rec.points[-1], 7.0 * v, atol=1e-10)
    assert rec.lifetime.to_json() == ">7"


@pytest.mark.parametrize("t", ANGLES)
def test_lifetime_scaling_law(mn, t):
    x0 = np.array([0.0, 0.0, 1.0])
    E = orthonormal_frame(mn, x0)
    L = lifetime(mn, x0, E @ mixed_direction(mn, t))
    assert L.finite
    assert L.value * math.sin(t) == pytest.approx(1.0, abs=1e-4)


def test_lifetime_scaling_law_wavy(mn_wavy):
    x0 = np.array([0.0, 0.0, 1.0])
    E = orthonormal_frame(mn_wavy, x0)
    base = lifetime(mn_wavy, x0, E @ mixed_direction(mn_wavy, math.pi / 2)).value
    L = lifetime(mn_wavy, x0, E @ mixed_direction(mn_wavy, math.pi / 6)).value
    # The flat factor splits off for any profile.
    assert L * 0.5 == pytest.approx(base, rel=1e-4)


@pytest.mark.parametrize("field_name", ["mn", "mn_wavy"])
def test_similarity_equivariance(request, field_name):
    field = request.getfixturevalue(field_name)
    x0 = np.array([0.2, 0.1, 1.0])
    v0 = orthonormal_frame(field, x0) @ np.array([0.3, 0.5, -0.8])
    Phi = field.deck.phi_map
    L0 = lifetime(field, x0, v0).value
    L1 = lifetime(field, Phi.apply(x0), Phi.linear @ v0).value
    assert L1 == pytest.approx(field.lam * L0, rel=1e-6)


def test_energy_conservation(mn_wavy, plastic, rng):
    for field in (mn_wavy, plastic):
        x0 = np.zeros(field.dim)
        x0[-1] = 1.0
        for _ in range(4):
            v = unit_vector(field, x0, rng.normal(size=field.dim))
            rec = integrate_geodesic(field, x0, v, 10.0)
            assert rec.energy_drift < 1e-8


def test_reversibility(mn_wavy):
    x0 = np.array([0.1, 0.2, 1.0])
    v0 = unit_vector(mn_wavy, x0, [0.4, 0.3, 0.5])
    fwd = integrate_geodesic(mn_wavy, x0, v0, 2.0)
    back = integrate_geodesic(mn_wavy, fwd.points[-1], -fwd.velocities[-1], 2.0)
    np.testing.assert_allclose(back.points[-1], x0, atol=1e-6)
    np.testing.assert_allclose(-back.velocities[-1], v0, atol=1e-6)


def test_cone_radial_ray_escapes(cone2):
    # Radial rays t -> t0 - s are geodesics of any cone.
    assert lifetime(cone2, [1.0, 0.5, 0.75], [0, 0, -1.0]).value == pytest.approx(0.75, abs=1e-6)


def test_rejects_bad_inputs(mn):
    with pytest.raises(DomainError):
        integrate_geodesic(mn, [0, 0, -1.0], [0, 0, 1.0], 1.0)
    with pytest.raises(ValueError):
        integrate_geodesic(mn, [0, 0, 1.0], [0, 0, 0.0], 1.0)
    with pytest.raises(ValueError):
        integrate_geodesic(mn, [0, 0, 1.0], [0, 0, 1.0], 0.0)


def test_lifetime_json():
    assert Lifetime(2.5).to_json() == 2.5
    assert Lifetime(math.inf, True, 50.0).to_json() == ">50"
    assert not Lifetime(math.inf, True, 50.0).finite


def test_csv_dump(mn, tmp_path):
    rec = integrate_geodesic(mn, [0, 0, 1.0], [0, 0, -1.0], 5.0)
    path = tmp_path / "g.csv"
    rec.write_csv(path)
    header = path.read_text().splitlines()[0].split(",")
    assert header == ["t", "x0", "x1", "x2", "v0", "v1", "v2", "energy"]


@pytest.mark.parametrize("dim, n", [(2, 8), (3, 50), (4, 40)])
def test_sphere_directions_are_unit_and_seeded(dim, n):
    a = sphere_directions(dim, n, seed=3)
    np.testing.assert_allclose(np.linalg.norm(a, axis=1), 1.0, atol=1e-12)
    np.testing.assert_array_equal(a, sphere_directions(dim, n, seed=3))
    assert a.shape == (n, dim)


def test_mu_flat_is_zero(flat3):
    est = mu_estimate(flat3, [0, 0, 0], n_samples=8, t_max=5.0)
    assert est.value == 0.0
    assert est.censored == est.n_directions


def test_mu_mn_lower_bound(mn):
    est = mu_estimate(mn, [0, 0, 1.0], n_samples=16, t_max=20.0)
    assert est.value >= 1 / math.sin(math.pi / 18) - 1e-4
    assert est.censored > 0
    assert [r["index"] for r in est.table] == list(range(est.n_directions))


def test_mu_similarity_ratio(mn):
    x = np.array([0.0, 0.0, 1.0])
    a = mu_estimate(mn, x, n_samples=16, t_max=20.0)
    b = mu_estimate(mn, mn.deck.phi_map.apply(x), n_samples=16, t_max=20.0)
    assert b.value == pytest.approx(mn.lam * a.value, rel=1e-5)


def test_mu_threads_do_not_change_result(mn):
    a = mu_estimate(mn, [0, 0, 1.0], n_samples=8, t_max=10.0)
    b = mu_estimate(mn, [0, 0, 1.0], n_samples=8, t_max=10.0, threads=4)
    assert a.to_dict() == b.to_dict()


def test_transport_along_flat_axis_is_trivial(mn):
    F0 = orthonormal_frame(mn, [0, 0, 1.0])
    rec = parallel_transport(mn, [[0, 0, 1.0], [3.0, 0, 1.0]], F0)
    np.testing.assert_allclose(rec.frames[-1], F0, atol=1e-12)


def test_transport_flat_torus_loop(flat3):
    loop = [[0, 0, 0], [1, 0, 0], [1, 1, 0.5], [0, 0, 0]]
    rec = parallel_transport(flat3, loop, np.eye(3))
    np.testing.assert_allclose(rec.frames[-1], np.eye(3), atol=1e-14)


def _rectangle(center_z, side):
    h = side / 2
    return [
        [0, -h, center_z - h],
        [0, h, center_z - h],
        [0, h, center_z + h],
        [0, -h, center_z + h],
        [0, -h, center_z - h],
    ]


@pytest.mark.parametrize("field_name", ["mn", "mn_wavy"])
def test_rectangle_angle_matches_integrated_curvature(request, field_name):
    # Surface holonomy angle = integral of K dA = -side * [(sqrt phi)'] over the z-edges.
    field = request.getfixturevalue(field_name)
    side, zc = 0.1, 1.0
    path = _rectangle(zc, side)
    F0 = orthonormal_frame(field, path[0])
    rec = parallel_transport(field, path, F0)
    assert rec.gram_drift(field) < 1e-8
    R = np.linalg.solve(F0, rec.frames[-1])
    angle = abs(math.atan2(R[2, 1], R[1, 1]))

    def dsqrt(z):
        return field.phi(z, 1) / (2 * math.sqrt(field.phi(z)))

    expected = side * abs(dsqrt(zc + side / 2) - dsqrt(zc - side / 2))
    assert angle == pytest.approx(expected, rel=1e-7)
    if field_name == "mn":
        assert angle == pytest.approx(0.02, rel=1e-9)
    np.testing.assert_allclose(R[0], [1, 0, 0], atol=1e-12)


def test_transport_rejects_path_outside_chart(mn):
    with pytest.raises(DomainError):
        parallel_transport(mn, [[0, 0, 1.0], [0, 0, -0.5]], np.eye(3))
