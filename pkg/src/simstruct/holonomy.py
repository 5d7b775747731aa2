"""Holonomy of small loops, invariant block splitting and the trichotomy verdict."""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field as dc_field

import numpy as np
from scipy.linalg import qr

from .errors import ToleranceAmbiguity
from .metric_core import (
    Cone,
    MappingTorus,
    MetricField,
    metric_at,
    orthonormal_frame,
    riemann_orthonormal,
)
from .transport import lifetime, parallel_transport

ORTHOGONALITY_TOL = 1e-6
NULLSPACE_TOL = 1e-5
FLATNESS_TOL = 1e-7
# Generators with |H - I| below this are integration noise, not rotation.
NOISE_FLOOR = 1e-8
EIGEN_CLUSTER_TOL = 1e-6


@dataclass(frozen=True)
class Loop:
    """Lasso: segment from the base to a rectangle corner, the rectangle, and back."""

    center: tuple
    plane: tuple
    sides: tuple

    def vertices(self, base):
        c = np.asarray(self.center, float)
        i, j = self.plane
        a, b = self.sides
        corner = c.copy()
        corner[i] -= a / 2
        corner[j] -= b / 2
        steps = [(0, 0), (a, 0), (a, b), (0, b), (0, 0)]
        rect = []
        for da, db in steps:
            p = corner.copy()
            p[i] += da
            p[j] += db
            rect.append(p)
        base = np.asarray(base, float)
        return np.array([base] + rect + [base])

    def to_dict(self):
        return {
            "center": [float(x) for x in self.center],
            "plane": list(self.plane),
            "sides": [float(s) for s in self.sides],
        }


def loop_holonomy(field: MetricField, loop: Loop, base):
    """Holonomy matrix of the loop in the g-orthonormal frame at base, and its residual."""
    base = field.check(base)
    E = orthonormal_frame(field, base)
    rec = parallel_transport(field, loop.vertices(base), E)
    H = np.linalg.solve(E, rec.frames[-1])
    return H, float(np.max(np.abs(H.T @ H - np.eye(field.dim))))


@dataclass
class HolonomySample:
    base: np.ndarray
    loops: list
    matrices: list
    residuals: list

    def to_dict(self):
        return {
            "base": [float(x) for x in self.base],
            "loops": [lp.to_dict() if isinstance(lp, Loop) else lp for lp in self.loops],
            "residuals": [float(r) for r in self.residuals],
        }


def _offset_center(field, base, rng, spread):
    h = field.diag(base)
    c = base.copy()
    for k in range(field.dim):
        u = rng.uniform(-1, 1)
        if k == field.boundary_index:
            c[k] = base[k] * math.exp(spread * u)
        else:
            c[k] = base[k] + spread * u / math.sqrt(h[k])
    return c


def make_loops(field: MetricField, base, n_loops=3, scales=(0.1,), seed=0, spread=0.25):
    """Centred plus seeded offset rectangles in every coordinate plane and scale.

    Side lengths are scale / sqrt(g_ii) so each rectangle has metric size ~scale.
    """
    base = field.check(base)
    rng = np.random.default_rng(seed)
    loops = []
    for scale in scales:
        for plane in itertools.combinations(range(field.dim), 2):
            for k in range(n_loops):
                center = base.copy() if k == 0 else _offset_center(field, base, rng, spread)
                field.check(center)
                h = field.diag(center)
                sides = tuple(float(scale / math.sqrt(h[i])) for i in plane)
                loops.append(Loop(tuple(float(x) for x in center), plane, sides))
    return loops


def sample_holonomy(field: MetricField, base, n_loops=3, scales=(0.1,), seed=0, threads=1):
    """Holonomies of :func:`make_loops` rectangles plus products of consecutive pairs."""
    base = field.check(base)
    loops = make_loops(field, base, n_loops, scales, seed)
    if threads and threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            out = list(ex.map(lambda lp: loop_holonomy(field, lp, base), loops))
    else:
        out = [loop_holonomy(field, lp, base) for lp in loops]
    mats = [H for H, _ in out]
    res = [r for _, r in out]
    all_loops = list(loops)
    m = len(mats)
    for k in range(m if m > 1 else 0):
        P = mats[k] @ mats[(k + 1) % m]
        mats.append(P)
        res.append(float(np.max(np.abs(P.T @ P - np.eye(field.dim)))))
        all_loops.append({"product": [k, (k + 1) % m]})
    return HolonomySample(base, all_loops, mats, res)


@dataclass
class Block:
    basis: np.ndarray
    kind: str

    @property
    def dim(self):
        return self.basis.shape[1]


@dataclass
class Split:
    fixed: np.ndarray
    blocks: list
    singular_values: list = dc_field(default_factory=list)

    @property
    def fixed_dim(self):
        return self.fixed.shape[1]

    def all_blocks(self):
        out = [Block(self.fixed, "fixed")] if self.fixed_dim else []
        return out + list(self.blocks)


def _generators(matrices):
    """(H - I)/|H - I| for every H whose deviation clears the noise floor."""
    gens = []
    for H in matrices:
        D = np.asarray(H) - np.eye(len(H))
        nrm = np.linalg.norm(D)
        if nrm > NOISE_FLOOR:
            gens.append(D / nrm)
    return gens


def _gray_check(sv, tol, what):
    gray = [float(s) for s in sv if tol <= s <= 10 * tol]
    if gray:
        raise ToleranceAmbiguity(f"{what}: singular values {gray} in [{tol:g}, {10 * tol:g}]", gray)


def _symmetric_basis(m):
    basis = []
    for i in range(m):
        for j in range(i, m):
            S = np.zeros((m, m))
            S[i, j] = S[j, i] = 1.0 if i == j else 1 / math.sqrt(2)
            basis.append(S)
    return basis


def _commutant(gens, m, tol):
    """Orthonormal basis (as matrices) of symmetric S with S G = G S for all G."""
    basis = _symmetric_basis(m)
    if not gens:
        return basis
    A = np.column_stack([np.concatenate([(S @ G - G @ S).ravel() for G in gens]) for S in basis])
    sv = np.linalg.svd(A, compute_uv=False)
    _gray_check(sv, tol, "commutant")
    N = _right_null(A, tol)
    return [sum(c * S for c, S in zip(col, basis)) for col in N.T]


def _right_null(A, tol):
    _, s, Vt = np.linalg.svd(A)
    s_full = np.zeros(Vt.shape[0])
    s_full[: len(s)] = s
    return Vt[s_full < tol].T


def _split_block(gens, W, tol, rng):
    """Recursively split span(W) (orthonormal columns) into irreducible pieces."""
    m = W.shape[1]
    if m == 1:
        return [W]
    local = [W.T @ G @ W for G in gens]
    comm = _commutant(local, m, tol)
    if len(comm) <= 1:
        return [W]
    coeffs = rng.standard_normal(len(comm))
    S = sum(c * C for c, C in zip(coeffs, comm))
    w, V = np.linalg.eigh(S)
    scale = max(1.0, float(np.max(np.abs(w))))
    groups, start = [], 0
    for k in range(1, m + 1):
        if k == m or w[k] - w[k - 1] > EIGEN_CLUSTER_TOL * scale:
            groups.append(V[:, start:k])
            start = k
    if len(groups) == 1:
        return [W]
    out = []
    for Vg in groups:
        out.extend(_split_block(gens, W @ Vg, tol, rng))
    return out


def invariant_split(matrices, tol=NULLSPACE_TOL, seed=0) -> Split:
    """Common fixed space plus an orthogonal split of its complement into irreducibles.

    Blocks are returned fixed first, then by increasing dimension; ties are
    broken by the position of the largest basis component.
    """
    mats = [np.asarray(H, float) for H in matrices]
    n = mats[0].shape[0]
    gens = _generators(mats)
    if not gens:
        return Split(np.eye(n), [], [0.0] * n)
    stack = np.vstack(gens)
    _, s, Vt = np.linalg.svd(stack)
    s_full = np.zeros(n)
    s_full[: len(s)] = s
    _gray_check(s_full, tol, "fixed space")
    fixed = Vt[s_full < tol].T
    comp = Vt[s_full >= tol].T
    rng = np.random.default_rng(seed)
    blocks = _split_block(gens, comp, tol, rng) if comp.shape[1] else []
    blocks = [_canonical(B) for B in blocks]
    blocks.sort(key=lambda B: (B.shape[1], int(np.argmax(np.abs(B).max(axis=1)))))
    return Split(_canonical(fixed) if fixed.shape[1] else fixed, [Block(B, "irreducible") for B in blocks], [float(x) for x in s_full])


def _canonical(B):
    """Deterministic orthonormal basis of span(B): pivoted QR of its projector."""
    k = B.shape[1]
    Q, R, _ = qr(B @ B.T, pivoting=True)
    Q = Q[:, :k] * np.sign(np.where(np.diag(R)[:k] == 0, 1, np.diag(R)[:k]))
    return Q


@dataclass
class Trichotomy:
    verdict: str
    flat_dim: int | None
    irreducible_dim: int | None
    blocks: list
    tolerances: dict
    evidence: dict = dc_field(default_factory=dict)
    annotations: dict = dc_field(default_factory=dict)

    @property
    def label(self):
        if self.verdict == "Irreducible":
            return f"Irreducible({self.irreducible_dim})"
        if self.verdict == "EuclideanTimesIrreducible":
            return f"EuclideanTimesIrreducible({self.flat_dim},{self.irreducible_dim})"
        return self.verdict

    def to_dict(self):
        return {
            "verdict": self.verdict,
            "label": self.label,
            "flat_dim": self.flat_dim,
            "irreducible_dim": self.irreducible_dim,
            "blocks": self.blocks,
            "tolerances": self.tolerances,
            "evidence": self.evidence,
            "annotations": self.annotations,
        }


def default_base_points(field: MetricField, k=3, seed=0):
    """k points of the fundamental domain, spread across its deck period."""
    rng = np.random.default_rng(seed)
    fr = (np.arange(k) + 0.5) / k
    pts = []
    for f in fr:
        if isinstance(field, MappingTorus):
            p = np.concatenate([rng.uniform(0, 1, field.q + 1), [field.lam**f]])
        elif isinstance(field, Cone):
            t = field.ratio**f
            ang = [np.pi / 3 + f * np.pi / 3] + ([rng.uniform(0, 2 * np.pi)] if field.dim == 3 else [])
            p = np.array(ang + [t])
        else:
            p = rng.uniform(0, 1, field.dim)
        pts.append(p)
    return pts


def _verdict(fixed_dim, irr_dims, indicators, max_curv, n):
    if not irr_dims:
        return ("Flat", n, 0) if max_curv < FLATNESS_TOL else ("Unclassified", None, None)
    if len(irr_dims) == 1:
        if fixed_dim == 0:
            return "Irreducible", 0, n
        if indicators[0] > FLATNESS_TOL:
            return "EuclideanTimesIrreducible", fixed_dim, irr_dims[0]
    return "Unclassified", None, None


def classify(
    field: MetricField,
    base_points=None,
    scales=(0.1, 0.05),
    n_loops=3,
    seed=0,
    tol=NULLSPACE_TOL,
    threads=1,
) -> Trichotomy:
    """Trichotomy verdict; every base point and loop scale must agree.

    Each (base, scale) pair gets its own holonomy sample and split; the
    per-block curvature indicator is the largest orthonormal-frame Riemann
    component with at least one index in the block.
    """
    if base_points is None:
        base_points = default_base_points(field, 3, seed)
    runs, verdicts = [], set()
    n = field.dim
    for bi, base in enumerate(base_points):
        base = field.check(base)
        Rh = riemann_orthonormal(field, base)
        max_curv = float(np.max(np.abs(Rh)))
        for si, scale in enumerate(scales):
            sample = sample_holonomy(field, base, n_loops, (scale,), seed + 1000 * bi + si, threads)
            orth = max(sample.residuals)
            split = invariant_split(sample.matrices, tol, seed)
            E = orthonormal_frame(field, base)
            blocks = []
            for blk in split.all_blocks():
                ind = float(np.max(np.abs(np.einsum("abcd,ax->xbcd", Rh, blk.basis))))
                coord_basis = E @ blk.basis
                blocks.append(
                    {
                        "kind": blk.kind,
                        "dim": blk.dim,
                        "basis": np.round(blk.basis, 12).tolist(),
                        "coordinate_basis": np.round(coord_basis, 12).tolist(),
                        "curvature_indicator": ind,
                    }
                )
            irr = [b for b in blocks if b["kind"] == "irreducible"]
            v = _verdict(
                split.fixed_dim,
                [b["dim"] for b in irr],
                [b["curvature_indicator"] for b in irr],
                max_curv,
                n,
            )
            if orth > ORTHOGONALITY_TOL:
                v = ("Unclassified", None, None)
            verdicts.add(v)
            runs.append(
                {
                    "base": [float(x) for x in base],
                    "scale": float(scale),
                    "verdict": v[0],
                    "flat_dim": v[1],
                    "irreducible_dim": v[2],
                    "n_matrices": len(sample.matrices),
                    "max_orthogonality_residual": orth,
                    "max_curvature": max_curv,
                    "blocks": blocks,
                }
            )
    tolerances = {
        "orthogonality": ORTHOGONALITY_TOL,
        "nullspace": tol,
        "flatness": FLATNESS_TOL,
        "noise_floor": NOISE_FLOOR,
    }
    if len(verdicts) == 1:
        verdict, fd, idim = verdicts.pop()
    else:
        verdict, fd, idim = "Unclassified", None, None
    result = Trichotomy(
        verdict, fd, idim, runs[0]["blocks"], tolerances, {"runs": runs}, {}
    )
    result.annotations = incompleteness_annotation(field, base_points[0], runs[0]["blocks"])
    return result


def incompleteness_annotation(field: MetricField, base, blocks, t_max=20.0):
    """Finite lifetime of a boundary-bound direction inside the curved block, if any.

    Completeness is not decidable from samples; this is evidence only.
    """
    b = field.boundary_index
    curved = [blk for blk in blocks if blk["kind"] == "irreducible"]
    if b is None or not curved:
        return {"incompleteness_evidence": None}
    base = field.check(base)
    B = np.asarray(curved[-1]["basis"])
    d = B @ B[b]  # projection of e_b onto the block, orthonormal frame
    if np.linalg.norm(d) < 1e-8:
        return {"incompleteness_evidence": None}
    u = -d / np.linalg.norm(d)
    v = orthonormal_frame(field, base) @ u
    L = lifetime(field, base, v, t_max)
    return {
        "incompleteness_evidence": {
            "direction": [float(x) for x in u],
            "lifetime": L.to_json(),
            "finite": L.finite,
        }
    }
