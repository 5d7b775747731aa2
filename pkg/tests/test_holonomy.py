import math

import numpy as np
import pytest
from scipy.linalg import subspace_angles
from scipy.stats import special_ortho_group

from planted import FAMILIES, planted_family
from simstruct.errors import ToleranceAmbiguity
from simstruct.holonomy import (
    Loop,
    classify,
    default_base_points,
    invariant_split,
    loop_holonomy,
    make_loops,
    sample_holonomy,
)


def _rot(i, j, t, n=3):
    M = np.eye(n)
    c, s = math.cos(t), math.sin(t)
    M[i, i] = M[j, j] = c
    M[i, j], M[j, i] = -s, s
    return M


def _match(found, planted, tol=1e-6):
    """Every planted block equals exactly one found block (principal angles < tol)."""
    assert len(found) == len(planted)
    used = set()
    for P in planted:
        hits = [
            k
            for k, B in enumerate(found)
            if B.shape == P.shape and np.max(subspace_angles(B, P)) < tol
        ]
        assert len(hits) == 1 and hits[0] not in used
        used.add(hits[0])


def test_flat_torus_loop_is_identity(flat3):
    H, res = loop_holonomy(flat3, Loop((0.1, 0.2, 0.3), (0, 2), (0.3, 0.2)), [0.1, 0.2, 0.3])
    np.testing.assert_allclose(H, np.eye(3), atol=1e-10)
    assert res < 1e-10


def test_mn_flat_plane_loop_is_identity(mn):
    base = [0.0, 0.0, 1.0]
    H, _ = loop_holonomy(mn, Loop(tuple(base), (0, 2), (0.1, 0.1)), base)
    np.testing.assert_allclose(H, np.eye(3), atol=1e-8)


def test_mn_curved_plane_rotation(mn):
    base = [0.0, 0.0, 1.0]
    H, res = loop_holonomy(mn, Loop(tuple(base), (1, 2), (0.1, 0.1)), base)
    assert res < 1e-6
    assert abs(math.atan2(H[2, 1], H[1, 1])) == pytest.approx(0.02, rel=1e-8)
    np.testing.assert_allclose(H[0], [1, 0, 0], atol=1e-10)


def test_lasso_from_offset_base_is_orthogonal(mn_wavy):
    base = np.array([0.0, 0.0, 1.0])
    H, res = loop_holonomy(mn_wavy, Loop((0.1, 0.2, 1.2), (1, 2), (0.1, 0.08)), base)
    assert res < 1e-8
    assert np.linalg.det(H) == pytest.approx(1.0, abs=1e-8)


def test_make_loops_is_seeded(mn):
    a = make_loops(mn, [0, 0, 1.0], 3, (0.1, 0.05), seed=7)
    b = make_loops(mn, [0, 0, 1.0], 3, (0.1, 0.05), seed=7)
    assert a == b
    assert len(a) == 2 * 3 * 3
    assert a != make_loops(mn, [0, 0, 1.0], 3, (0.1, 0.05), seed=8)


def test_sample_flat_torus_all_identity(flat3):
    s = sample_holonomy(flat3, [0.5, 0.5, 0.5], 2, (0.1,))
    for H in s.matrices:
        np.testing.assert_allclose(H, np.eye(3), atol=1e-10)


def test_sample_mn_rotates_curved_plane_only(mn):
    s = sample_holonomy(mn, [0.0, 0.0, 1.0], 2, (0.1,))
    assert len(s.matrices) > len([lp for lp in s.loops if isinstance(lp, Loop)])
    split = invariant_split(s.matrices)
    assert split.fixed_dim == 1
    np.testing.assert_allclose(np.abs(split.fixed[:, 0]), [1, 0, 0], atol=1e-8)
    assert [b.dim for b in split.blocks] == [2]


def test_sample_threads_match_serial(mn):
    a = sample_holonomy(mn, [0.0, 0.0, 1.0], 2, (0.1,))
    b = sample_holonomy(mn, [0.0, 0.0, 1.0], 2, (0.1,), threads=3)
    for H, K in zip(a.matrices, b.matrices):
        np.testing.assert_array_equal(H, K)


def test_split_identity_is_all_fixed():
    s = invariant_split([np.eye(4)])
    assert s.fixed_dim == 4 and s.blocks == []


def test_split_plane_rotations():
    s = invariant_split([_rot(0, 1, 0.4), _rot(0, 1, 1.1)])
    assert s.fixed_dim == 1
    np.testing.assert_allclose(np.abs(s.fixed[:, 0]), [0, 0, 1], atol=1e-12)
    assert [b.dim for b in s.blocks] == [2]


def test_split_so3_is_irreducible():
    s = invariant_split([_rot(0, 1, 0.4), _rot(1, 2, 0.7)])
    assert s.fixed_dim == 0 and [b.dim for b in s.blocks] == [3]


@pytest.mark.parametrize("name", sorted(FAMILIES))
@pytest.mark.parametrize("seed", range(5))
def test_split_recovers_planted(name, seed):
    mats, fixed, blocks = planted_family(name, seed)
    s = invariant_split(mats, seed=seed)
    assert s.fixed_dim == fixed.shape[1]
    if fixed.shape[1]:
        assert np.max(subspace_angles(s.fixed, fixed)) < 1e-6
    _match([b.basis for b in s.blocks], blocks)


@pytest.mark.parametrize("name", sorted(FAMILIES))
def test_split_is_idempotent(name):
    mats, _, _ = planted_family(name, 11)
    s = invariant_split(mats)
    for blk in s.all_blocks():
        B = blk.basis
        again = invariant_split([B.T @ H @ B for H in mats])
        if blk.kind == "fixed":
            assert again.fixed_dim == blk.dim
        else:
            assert again.fixed_dim == 0 and [b.dim for b in again.blocks] == [blk.dim]


@pytest.mark.parametrize("name", sorted(FAMILIES))
def test_blocks_are_orthogonal_and_complete(name):
    mats, _, _ = planted_family(name, 3)
    B = np.hstack([b.basis for b in invariant_split(mats).all_blocks()])
    np.testing.assert_allclose(B.T @ B, np.eye(B.shape[1]), atol=1e-8)
    assert B.shape[1] == mats[0].shape[0]


@pytest.mark.parametrize("name", sorted(FAMILIES))
def test_conjugation_invariance(name, rng):
    mats, _, _ = planted_family(name, 5)
    n = mats[0].shape[0]
    Q = special_ortho_group.rvs(n, random_state=rng)
    a = invariant_split(mats)
    b = invariant_split([Q @ H @ Q.T for H in mats])
    _match([blk.basis for blk in b.all_blocks()], [Q @ blk.basis for blk in a.all_blocks()])


def test_split_is_deterministic():
    mats, _, _ = planted_family("2+2", 9)
    a, b = invariant_split(mats, seed=4), invariant_split(mats, seed=4)
    for x, y in zip(a.all_blocks(), b.all_blocks()):
        np.testing.assert_array_equal(x.basis, y.basis)


def test_gray_zone_withholds_verdict():
    # A 1e-5 tilt leaves one singular value of the fixed-space test near 1.7e-5.
    H = _rot(0, 1, 0.3) @ _rot(1, 2, 1e-5)
    with pytest.raises(ToleranceAmbiguity) as info:
        invariant_split([H, _rot(0, 1, 0.5)])
    assert info.value.values


def test_default_base_points_in_fundamental_domain(mn, cone2):
    for p in default_base_points(mn, 3):
        assert mn.lam <= p[2] <= 1
    for p in default_base_points(cone2, 3):
        assert cone2.ratio <= p[2] <= 1 and 0 < p[0] < math.pi


@pytest.mark.parametrize(
    "name, label",
    [
        ("flat3", "Flat"),
        ("mn", "EuclideanTimesIrreducible(1,2)"),
        ("cone2", "Irreducible(3)"),
        ("cone1", "Flat"),
    ],
)
def test_classify_examples(request, name, label):
    field = request.getfixturevalue(name)
    t = classify(field)
    assert t.label == label
    assert len(t.evidence["runs"]) == 6
    assert {r["verdict"] for r in t.evidence["runs"]} == {t.verdict}
    if t.flat_dim is not None:
        assert t.flat_dim + t.irreducible_dim == field.dim


@pytest.mark.slow
def test_classify_plastic(plastic):
    assert classify(plastic, scales=(0.1,)).label == "EuclideanTimesIrreducible(2,2)"


def test_classify_mn_stable_under_refinement(mn):
    t = classify(mn, scales=(0.1, 0.05, 0.025), base_points=default_base_points(mn, 1))
    assert t.label == "EuclideanTimesIrreducible(1,2)"


def test_classify_mn_evidence(mn):
    d = classify(mn).to_dict()
    curved = [b for b in d["blocks"] if b["kind"] == "irreducible"][0]
    flat = [b for b in d["blocks"] if b["kind"] == "fixed"][0]
    assert curved["curvature_indicator"] > 1.0
    assert flat["curvature_indicator"] < 1e-8
    ev = d["annotations"]["incompleteness_evidence"]
    assert ev["finite"]
