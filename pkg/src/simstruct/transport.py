"""Geodesics, lifetimes, the mu function and parallel transport."""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field as dc_field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.stats import norm, qmc

from .errors import DomainError
from .metric_core import MetricField, _diag_christoffel, _geodesic_accel, metric_at

DEFAULT_RTOL = 1e-10
DEFAULT_ATOL = 1e-12
MAX_TIME = "MaxTime"
BOUNDARY_ESCAPE = "BoundaryEscape"
STEP_UNDERFLOW = "StepUnderflow"


@dataclass(frozen=True)
class Lifetime:
    """Extended real: a finite value, or censored at ``horizon`` (printed '>horizon')."""

    value: float
    censored: bool = False
    horizon: float | None = None

    @property
    def finite(self):
        return not self.censored and math.isfinite(self.value)

    def __str__(self):
        return f">{self.horizon:g}" if self.censored else f"{self.value:.12g}"

    def to_json(self):
        return str(self) if self.censored else float(self.value)


@dataclass
class GeodesicRecord:
    times: np.ndarray
    points: np.ndarray
    velocities: np.ndarray
    termination: str
    lifetime: Lifetime
    energy: np.ndarray = dc_field(repr=False)

    @property
    def energy_drift(self):
        e0 = self.energy[0]
        return float(np.max(np.abs(self.energy - e0)) / abs(e0))

    def rows(self):
        for t, x, v, e in zip(self.times, self.points, self.velocities, self.energy):
            row = {"t": float(t)}
            row.update({f"x{i}": float(c) for i, c in enumerate(x)})
            row.update({f"v{i}": float(c) for i, c in enumerate(v)})
            row["energy"] = float(e)
            yield row

    def write_csv(self, path):
        rows = list(self.rows())
        with open(path, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=list(rows[0]))
            w.writeheader()
            w.writerows(rows)

    def summary(self):
        return {
            "termination": self.termination,
            "lifetime": self.lifetime.to_json(),
            "energy_drift": self.energy_drift,
            "n_samples": int(len(self.times)),
            "final_point": [float(c) for c in self.points[-1]],
        }


def _energy(field, points, velocities):
    return np.array([v @ (field.diag(p) * v) for p, v in zip(points, velocities)])


def boundary_cutoff(field: MetricField):
    return getattr(field, "z_min", 1e-4)


def integrate_geodesic(
    field: MetricField,
    x0,
    v0,
    t_max,
    rtol=DEFAULT_RTOL,
    atol=DEFAULT_ATOL,
    cutoff=None,
) -> GeodesicRecord:
    """Integrate x'' + Gamma(x', x') = 0 from (x0, v0) up to time t_max.

    Integration stops at t_max (MaxTime), when the boundary coordinate falls to
    the cutoff (BoundaryEscape), or when the solver fails (StepUnderflow).  The
    escape time is extrapolated linearly from the cutoffs c and 2c and combined
    by Richardson extrapolation, which removes the O(c^2) error of each estimate.
    """
    x0 = field.check(x0)
    v0 = np.asarray(v0, dtype=float)
    if v0.shape != x0.shape or not np.any(v0):
        raise ValueError("v0 must be a nonzero vector of the chart dimension")
    if not t_max > 0:
        raise ValueError("t_max must be positive")
    n = field.dim
    b = field.boundary_index
    c = boundary_cutoff(field) if cutoff is None else cutoff

    def rhs(_, y):
        if b is not None and not y[b] > 0:
            # Trial stage left the chart; NaN makes the solver reject and shrink the step.
            return np.full(2 * n, np.nan)
        return np.concatenate([y[n:], _geodesic_accel(field, y[:n], y[n:])])

    events = []
    if b is not None:

        def hit(_, y):
            return y[b] - c

        hit.terminal, hit.direction = True, -1

        def near(_, y):
            return y[b] - 2 * c

        near.terminal, near.direction = False, -1
        events = [hit, near]
    sol = solve_ivp(
        rhs,
        (0.0, float(t_max)),
        np.concatenate([x0, v0]),
        method="DOP853",
        rtol=rtol,
        atol=atol,
        events=events or None,
    )
    pts, vels = sol.y[:n].T, sol.y[n:].T
    if sol.status == 1:
        y_hit = sol.y_events[0][-1]
        t_hit = float(sol.t_events[0][-1])
        est_c = t_hit + y_hit[b] / abs(y_hit[n + b])
        if len(sol.t_events[1]):
            y2 = sol.y_events[1][-1]
            est_2c = float(sol.t_events[1][-1]) + y2[b] / abs(y2[n + b])
            escape = (4 * est_c - est_2c) / 3
        else:
            escape = est_c
        term, life = BOUNDARY_ESCAPE, Lifetime(float(escape))
    elif sol.status == 0:
        term, life = MAX_TIME, Lifetime(math.inf, True, float(t_max))
    else:
        # Solver gave up before t_max: the step size collapsed.
        term = STEP_UNDERFLOW
        life = Lifetime(float(sol.t[-1]), True, float(sol.t[-1]))
    return GeodesicRecord(sol.t, pts, vels, term, life, _energy(field, pts, vels))


def unit_vector(field: MetricField, x, v):
    """Rescale v to g-unit length at x."""
    x = field.check(x)
    v = np.asarray(v, dtype=float)
    return v / math.sqrt(v @ metric_at(field, x) @ v)


def lifetime(field: MetricField, x0, v0, t_max=50.0, **opts) -> Lifetime:
    """Lifetime of the half-geodesic tangent to the g-unit vector along v0."""
    return integrate_geodesic(field, x0, unit_vector(field, x0, v0), t_max, **opts).lifetime


def mixed_direction(field: MetricField, angle, euclidean_axis=0):
    """cos(angle) X + sin(angle) (-d/dz) in the orthonormal frame, X a unit flat axis."""
    u = np.zeros(field.dim)
    u[euclidean_axis] = math.cos(angle)
    u[field.boundary_index] = -math.sin(angle)
    return u


MIXED_ANGLES = (math.pi / 2, math.pi / 6, math.pi / 18)


def sphere_directions(dim, n_samples, seed=0):
    """Deterministic spread of n_samples unit vectors in R^dim."""
    rng = np.random.default_rng(seed)
    if dim == 1:
        return np.array([[1.0], [-1.0]])[: max(n_samples, 1)]
    if dim == 2:
        a = 2 * np.pi * (np.arange(n_samples) + rng.random()) / n_samples
        return np.column_stack([np.cos(a), np.sin(a)])
    if dim == 3:
        # Fibonacci spiral, rotated by a seeded random orthogonal matrix.
        k = np.arange(n_samples) + 0.5
        zc = 1 - 2 * k / n_samples
        r = np.sqrt(1 - zc * zc)
        golden = np.pi * (3 - math.sqrt(5))
        pts = np.column_stack([r * np.cos(golden * k), r * np.sin(golden * k), zc])
        Q, R = np.linalg.qr(rng.standard_normal((3, 3)))
        return pts @ (Q * np.sign(np.diag(R))).T
    u = qmc.Halton(d=dim, scramble=True, seed=seed).random(n_samples)
    g = norm.ppf(np.clip(u, 1e-12, 1 - 1e-12))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


@dataclass
class MuEstimate:
    value: float
    censored: int
    n_directions: int
    table: list

    def to_dict(self):
        return {
            "mu": self.value,
            "censored": self.censored,
            "n_directions": self.n_directions,
            "samples": self.table,
        }


def mu_estimate(field: MetricField, x, n_samples=64, t_max=50.0, seed=0, threads=1, **opts) -> MuEstimate:
    """sup of finite lifetimes over sampled g-unit directions at x (0 if none).

    Directions: a seeded low-discrepancy spread, the coordinate axes in both
    orientations, and (when a boundary coordinate exists) the mixed directions
    at angles pi/2, pi/6 and pi/18 against the first flat axis.
    """
    x = field.check(x)
    n = field.dim
    dirs = [d for d in sphere_directions(n, n_samples, seed)]
    eye = np.eye(n)
    dirs += [e for e in eye] + [-e for e in eye]
    labels = ["spread"] * n_samples + ["axis"] * (2 * n)
    if field.boundary_index is not None:
        for a in MIXED_ANGLES:
            dirs.append(mixed_direction(field, a))
            labels.append(f"mixed:{a:.12g}")
    E = np.diag(1.0 / np.sqrt(field.diag(x)))

    def one(u):
        return integrate_geodesic(field, x, E @ u, t_max, **opts).lifetime

    if threads and threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            lives = list(ex.map(one, dirs))
    else:
        lives = [one(u) for u in dirs]
    table = [
        {"index": i, "kind": lab, "direction": [float(c) for c in u], "lifetime": L.to_json()}
        for i, (lab, u, L) in enumerate(zip(labels, dirs, lives))
    ]
    finite = [L.value for L in lives if L.finite]
    return MuEstimate(
        max(finite) if finite else 0.0, sum(not L.finite for L in lives), len(dirs), table
    )


@dataclass
class FrameRecord:
    points: np.ndarray
    frames: np.ndarray

    def gram_drift(self, field: MetricField):
        grams = [F.T @ metric_at(field, p) @ F for p, F in zip(self.points, self.frames)]
        return float(max(np.max(np.abs(G - grams[0])) for G in grams))


def parallel_transport(field: MetricField, path, frame0, rtol=1e-12, atol=1e-14) -> FrameRecord:
    """Transport the columns of frame0 along the piecewise-linear path through vertices."""
    verts = np.asarray(path, dtype=float)
    for p in verts:
        field.check(p)
    n = field.dim
    F = np.array(frame0, dtype=float)
    pts, frames = [verts[0]], [F.copy()]
    for a, b in zip(verts[:-1], verts[1:]):
        d = b - a
        if not np.any(d):
            continue

        def rhs(s, y, a=a, d=d):
            x = a + s * d
            G = _diag_christoffel(field.diag(x), field.diag_d1(x))
            V = y.reshape(n, n)
            return -np.einsum("ijk,j,kc->ic", G, d, V).ravel()

        sol = solve_ivp(rhs, (0.0, 1.0), F.ravel(), method="DOP853", rtol=rtol, atol=atol)
        if sol.status != 0:
            raise DomainError(f"transport failed on segment {a} -> {b}: {sol.message}")
        F = sol.y[:, -1].reshape(n, n)
        pts.append(b)
        frames.append(F.copy())
    return FrameRecord(np.array(pts), np.array(frames))
