"""Leaf closures of the mapping-torus foliation: torus slices and orbit density."""

from __future__ import annotations

import csv
import itertools
import math
from dataclasses import asdict, dataclass
from fractions import Fraction

import numpy as np

from .errors import DegenerateProjection, DomainError
from .lattice_search import SpectralSplit
from .metric_core import MappingTorus, metric_at

DEGENERATE_TOL = 1e-12
RATIONAL_TOL = 1e-9
RATIONAL_MAX_DENOMINATOR = 1000
GAP_FACTOR = 10.0
CONSTANCY_TOL = 1e-12


def circular_max_gap(values):
    """Largest gap between points of [0, 1), including the wrap-around gap."""
    v = np.sort(np.mod(values, 1.0))
    gaps = np.diff(np.concatenate([v, [v[0] + 1.0]]))
    return float(gaps.max())


def orbit_points(ratio, n_points):
    """frac(k * ratio) for k = 0..n_points-1."""
    k = np.arange(n_points, dtype=float)
    return np.mod(k * ratio, 1.0)


@dataclass
class ProjectionReport:
    projections: list
    reference: int
    ratios: list
    rational: list
    max_gaps: list
    n_points: int
    threshold: float
    dense: bool

    def to_dict(self):
        return asdict(self)


def _is_rational(x):
    f = Fraction(x).limit_denominator(RATIONAL_MAX_DENOMINATOR)
    return abs(x - f.numerator / f.denominator) < RATIONAL_TOL


def projections_report(projections, n_points=100_000) -> ProjectionReport:
    """Density of the subgroup generated by reals, in R / (smallest |projection|)."""
    p = [float(x) for x in projections]
    if min(abs(x) for x in p) < DEGENERATE_TOL:
        raise DegenerateProjection(f"a generator projects to {min(p, key=abs):.3g}")
    ref = int(np.argmin(np.abs(p)))
    others = [k for k in range(len(p)) if k != ref]
    ratios = [p[k] / p[ref] for k in others]
    rational = [_is_rational(r) for r in ratios]
    gaps = [circular_max_gap(orbit_points(r, n_points)) for r in ratios]
    thr = GAP_FACTOR / n_points
    dense = any(not rat and g < thr for rat, g in zip(rational, gaps))
    return ProjectionReport(p, ref, ratios, rational, gaps, n_points, thr, bool(dense))


def unstable_projections(split: SpectralSplit, n_points=100_000) -> ProjectionReport:
    """E^u-coordinates of the standard lattice generators, projected along E^s."""
    basis_inv = np.linalg.inv(split.adapted_basis())
    return projections_report(basis_inv[split.q, :], n_points)


def write_orbit_csv(path, report: ProjectionReport, n_rows=1000):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["k"] + [f"orbit_{i}" for i in range(len(report.ratios))])
        cols = [orbit_points(r, n_rows) for r in report.ratios]
        for k in range(n_rows):
            w.writerow([k] + [float(c[k]) for c in cols])


@dataclass
class ClosureReport:
    base_point: list
    z0: float
    q: int
    n: int
    d: int
    bounds_hold: bool
    induced_metric: list
    metric_deviation: float
    flat: bool
    density: dict
    covering_radius: float
    covering_threshold: float
    equivariance_residual: float
    needs_covering: bool = False

    def to_dict(self):
        return asdict(self)


def reduce_level(field: MappingTorus, z):
    """Representative of z under z -> lam z in [lam, 1]."""
    if not z > 0:
        raise DomainError(f"z must be positive (got {z})")
    u = math.log(z) / math.log(field.lam)
    if 0 <= u <= 1:
        return float(z)
    return float(field.lam ** (u - math.floor(u)))


def slice_metric(field: MappingTorus, z0):
    """Induced metric diag(I_q, phi(z0)) on the slice, in adapted coordinates."""
    return np.diag(np.concatenate([np.ones(field.q), [field.phi(z0)]]))


def covering_radius(field: MappingTorus, z0, n_orbit=2000, n_probe=400, seed=0):
    """Max over probes of the torus distance to the nearest of n_orbit translates."""
    rng = np.random.default_rng(seed)
    m = field.q + 1
    Binv = field.basis_inv
    G = Binv.T @ slice_metric(field, z0) @ Binv  # slice metric in torus coordinates
    orbit = rng.random((n_orbit, m))
    probes = rng.random((n_probe, m))
    d = probes[:, None, :] - orbit[None, :, :]
    d -= np.rint(d)
    best = np.full(n_probe, np.inf)
    for off in itertools.product((-1, 0, 1), repeat=m):
        e = d + np.array(off, float)
        dist2 = np.einsum("pok,kl,pol->po", e, G, e)
        best = np.minimum(best, dist2.min(axis=1))
    return float(np.sqrt(best.max()))


def closure_analyze(field: MappingTorus, point, n_points=100_000, seed=0, chart_size=0.25) -> ClosureReport:
    """Closure of the leaf through point: the (q+1)-torus slice at its z-level."""
    if not isinstance(field, MappingTorus):
        raise DomainError(f"leaf closures need a mapping torus, got {field.kind}")
    p = field.check(point)
    z0 = reduce_level(field, p[field.z_index])
    density = unstable_projections(field.split, n_points)
    d = field.q + (1 if density.dense else 0)
    rng = np.random.default_rng(seed)
    samples = []
    m = field.q + 1
    for t in rng.random((32, m)):
        x = np.concatenate([field.basis_inv @ t, [z0]])
        samples.append(metric_at(field, x)[:m, :m])
    G0 = samples[0]
    dev = float(max(np.max(np.abs(S - G0)) for S in samples))
    L = field.deck.phi_map.linear[:m, :m]
    eq = float(np.max(np.abs(L.T @ slice_metric(field, field.lam * z0) @ L - field.lam**2 * slice_metric(field, z0))))
    cr = covering_radius(field, z0, seed=seed)
    return ClosureReport(
        base_point=[float(x) for x in p],
        z0=z0,
        q=field.q,
        n=2,
        d=d,
        bounds_hold=bool(field.q < d < field.q + 2),
        induced_metric=G0.tolist(),
        metric_deviation=dev,
        flat=bool(dev < CONSTANCY_TOL),
        density=density.to_dict(),
        covering_radius=cr,
        covering_threshold=float(chart_size),
        equivariance_residual=eq,
    )
