"""Metric fields: Anosov mapping tori, Riemannian cones and flat tori.

Every field here has a diagonal metric ``diag(h_1, ..., h_n)`` in its chart, with
the entries and their first and second partial derivatives known in closed
form.  Christoffel symbols and the Riemann tensor are assembled from those
closed forms; ``method="fd"`` recomputes them from :func:`metric_at` alone by
central differences, which keeps an independent route for cross-checks.
"""

from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .lattice_search import SpectralSplit

FD_STEP_CHRISTOFFEL = 1e-5
FD_STEP_CURVATURE = 1e-4
Z_MIN, Z_MAX = 1e-4, 1e4


@dataclass(frozen=True)
class PhiProfile:
    """Warp function phi(z) = z^(2q+2) exp(P(log z)), P of period |log lam|.

    ``fourier`` lists (cos, sin) coefficient pairs for harmonics k = 1, 2, ...
    Periodicity of P makes phi(lam z) = lam^(2q+2) phi(z) hold identically.
    """

    q: int
    lam: float
    fourier: tuple = ()

    def __post_init__(self):
        if not 0.0 < self.lam < 1.0:
            raise ValueError("lam must lie in (0, 1)")
        object.__setattr__(self, "fourier", tuple((float(a), float(b)) for a, b in self.fourier))

    @property
    def exponent(self):
        return 2 * self.q + 2

    @property
    def period(self):
        return abs(math.log(self.lam))

    def _log_derivs(self, s):
        """h(s) = log phi(e^s) and its first two derivatives."""
        h = self.exponent * s
        h1 = np.full_like(s, float(self.exponent))
        h2 = np.zeros_like(s)
        w = 2.0 * np.pi / self.period
        for k, (a, b) in enumerate(self.fourier, start=1):
            c, d = np.cos(k * w * s), np.sin(k * w * s)
            h = h + a * c + b * d
            h1 = h1 + k * w * (-a * d + b * c)
            h2 = h2 - (k * w) ** 2 * (a * c + b * d)
        return h, h1, h2

    def __call__(self, z, order=0):
        return phi_eval(self, z, order)


def phi_eval(profile: PhiProfile, z, order=0):
    """phi, phi' or phi'' at z > 0 by closed-form differentiation."""
    z_arr = np.asarray(z, dtype=float)
    if np.any(~(z_arr > 0)):
        raise DomainError(f"phi is defined for z > 0 only (got {z})")
    s = np.log(z_arr)
    h, h1, h2 = profile._log_derivs(s)
    phi = np.exp(h)
    if order == 0:
        out = phi
    elif order == 1:
        out = phi * h1 / z_arr
    elif order == 2:
        out = phi * (h1 * h1 + h2 - h1) / z_arr**2
    else:
        raise ValueError("order must be 0, 1 or 2")
    return float(out) if np.ndim(out) == 0 else out


def n_plane_curvature(profile: PhiProfile, z):
    """Gaussian curvature of phi(z) dy^2 + dz^2, i.e. -(sqrt phi)''/sqrt phi."""
    p0, p1, p2 = (phi_eval(profile, z, k) for k in range(3))
    return -p2 / (2 * p0) + p1 * p1 / (4 * p0 * p0)


@dataclass(frozen=True)
class DeckElement:
    """Affine map p -> linear @ p + shift acting as a similarity of given ratio."""

    linear: np.ndarray
    shift: np.ndarray
    ratio: float = 1.0
    power: int = 0

    def apply(self, p):
        p = np.asarray(p, dtype=float)
        return p @ self.linear.T + self.shift

    def compose(self, other: DeckElement) -> DeckElement:
        """self after other."""
        return DeckElement(
            self.linear @ other.linear,
            self.linear @ other.shift + self.shift,
            self.ratio * other.ratio,
            self.power + other.power,
        )

    def inverse(self) -> DeckElement:
        Li = np.linalg.inv(self.linear)
        return DeckElement(Li, -Li @ self.shift, 1.0 / self.ratio, -self.power)

    @staticmethod
    def identity(n):
        return DeckElement(np.eye(n), np.zeros(n), 1.0, 0)


@dataclass(frozen=True)
class DeckGroup:
    """Generators of the deck action: lattice translations and the similarity."""

    lattice: tuple
    phi_map: DeckElement | None = None

    def element(self, power=0, n=None):
        """tau_n o Phi^power for an integer vector n over the lattice generators."""
        dim = self.lattice[0].linear.shape[0] if self.lattice else self.phi_map.linear.shape[0]
        g = DeckElement.identity(dim)
        if power:
            base = self.phi_map if power > 0 else self.phi_map.inverse()
            for _ in range(abs(power)):
                g = base.compose(g)
        if n is not None:
            shift = sum((int(k) * t.shift for k, t in zip(n, self.lattice)), np.zeros(dim))
            g = DeckElement(g.linear, g.shift + shift, g.ratio, g.power)
        return g

    def generators(self):
        gens = list(self.lattice)
        if self.phi_map is not None:
            gens.append(self.phi_map)
        return gens


class MetricField:
    """Diagonal metric on a coordinate chart; subclasses supply the closed forms."""

    kind = "abstract"
    dim: int
    coords: tuple
    boundary_index: int | None = None
    deck: DeckGroup

    def check(self, p):
        p = np.asarray(p, dtype=float)
        if p.shape != (self.dim,):
            raise DomainError(f"expected a point of dimension {self.dim}, got shape {p.shape}")
        if not np.all(np.isfinite(p)):
            raise DomainError("point has non-finite coordinates")
        if self.boundary_index is not None and not p[self.boundary_index] > 0:
            raise DomainError(
                f"{self.coords[self.boundary_index]} must be positive (got {p[self.boundary_index]})"
            )
        return p

    def diag(self, p):
        raise NotImplementedError

    def diag_d1(self, p):
        """d1[k, i] = d h_i / d x_k."""
        raise NotImplementedError

    def diag_d2(self, p):
        """d2[k, l, i] = d^2 h_i / d x_k d x_l."""
        raise NotImplementedError

    @property
    def ratio(self):
        return 1.0 if self.deck.phi_map is None else self.deck.phi_map.ratio

    def describe(self):
        return {"kind": self.kind, "dim": self.dim, "coords": list(self.coords)}


class MappingTorus(MetricField):
    """Metric dx_1^2 + ... + dx_q^2 + phi(z) dy^2 + dz^2 in adapted coordinates.

    Coordinates are (x_1, ..., x_q, y, z) with y = x_{q+1} along E^u and z > 0.
    """

    kind = "mapping_torus"

    def __init__(self, split: SpectralSplit, fourier=()):
        self.split = split
        self.q = split.q
        self.dim = self.q + 2
        self.lam = float(split.lam)
        self.mu = float(split.mu)
        self.profile = PhiProfile(self.q, self.lam, tuple(fourier))
        self.coords = tuple(f"x{i + 1}" for i in range(self.q)) + ("y", "z")
        self.boundary_index = self.dim - 1
        self.y_index = self.q
        self.z_index = self.q + 1
        self.basis = split.adapted_basis()
        self.basis_inv = np.linalg.inv(self.basis)
        self.O = split.orthogonal_part()
        n = self.dim
        L = np.zeros((n, n))
        L[: self.q, : self.q] = self.lam * self.O
        L[self.q, self.q] = self.mu
        L[n - 1, n - 1] = self.lam
        phi_map = DeckElement(L, np.zeros(n), self.lam, 1)
        lattice = []
        for k in range(self.q + 1):
            shift = np.zeros(n)
            shift[: self.q + 1] = self.basis_inv[:, k]
            lattice.append(DeckElement(np.eye(n), shift, 1.0, 0))
        self.deck = DeckGroup(tuple(lattice), phi_map)

    def phi(self, z, order=0):
        return phi_eval(self.profile, z, order)

    def diag(self, p):
        h = np.ones(self.dim)
        h[self.y_index] = self.phi(p[self.z_index])
        return h

    def diag_d1(self, p):
        d = np.zeros((self.dim, self.dim))
        d[self.z_index, self.y_index] = self.phi(p[self.z_index], 1)
        return d

    def diag_d2(self, p):
        d = np.zeros((self.dim, self.dim, self.dim))
        d[self.z_index, self.z_index, self.y_index] = self.phi(p[self.z_index], 2)
        return d

    def to_adapted(self, x_torus, z):
        """Torus coordinates x in R^{q+1} plus z -> adapted chart point."""
        return np.concatenate([self.basis_inv @ np.asarray(x_torus, float), [z]])

    def to_torus(self, p):
        p = np.asarray(p, float)
        return self.basis @ p[: self.q + 1], p[-1]

    def describe(self):
        out = super().describe()
        out.update(
            q=self.q,
            matrix=self.split.matrix.tolist(),
            lam=self.lam,
            mu=self.mu,
            fourier=[list(c) for c in self.profile.fourier],
        )
        return out


class Cone(MetricField):
    """Riemannian cone t^2 g_base + dt^2 over a round circle or 2-sphere.

    Coordinates are (theta, t) over a circle and (theta, phi, t) over a sphere,
    with 0 < theta < pi in the sphere case.  ``ratio`` is the dilation t -> ratio t.
    """

    kind = "cone"

    def __init__(self, base="sphere", radius=1.0, ratio=0.5):
        if radius <= 0:
            raise ValueError("radius must be positive")
        if not 0 < ratio < 1:
            raise ValueError("ratio must lie in (0, 1)")
        if base not in ("circle", "sphere"):
            raise ValueError(f"unknown cone base {base!r}")
        self.base = base
        self.radius = float(radius)
        self.dim = 2 if base == "circle" else 3
        self.coords = ("theta", "t") if base == "circle" else ("theta", "phi", "t")
        self.boundary_index = self.dim - 1
        n = self.dim
        L = np.eye(n)
        L[-1, -1] = ratio
        lattice = []
        periodic = 0 if base == "circle" else 1
        shift = np.zeros(n)
        shift[periodic] = 2 * np.pi
        lattice.append(DeckElement(np.eye(n), shift, 1.0, 0))
        self.deck = DeckGroup(tuple(lattice), DeckElement(L, np.zeros(n), float(ratio), 1))

    def check(self, p):
        p = super().check(p)
        if self.base == "sphere" and not 0 < p[0] < np.pi:
            raise DomainError(f"theta must lie in (0, pi) (got {p[0]})")
        return p

    def diag(self, p):
        r2 = self.radius**2
        t = p[-1]
        if self.base == "circle":
            return np.array([r2 * t * t, 1.0])
        s = np.sin(p[0])
        return np.array([r2 * t * t, r2 * t * t * s * s, 1.0])

    def diag_d1(self, p):
        r2 = self.radius**2
        t = p[-1]
        d = np.zeros((self.dim, self.dim))
        if self.base == "circle":
            d[1, 0] = 2 * r2 * t
            return d
        th = p[0]
        d[2, 0] = 2 * r2 * t
        d[0, 1] = r2 * t * t * np.sin(2 * th)
        d[2, 1] = 2 * r2 * t * np.sin(th) ** 2
        return d

    def diag_d2(self, p):
        r2 = self.radius**2
        t = p[-1]
        d = np.zeros((self.dim, self.dim, self.dim))
        if self.base == "circle":
            d[1, 1, 0] = 2 * r2
            return d
        th = p[0]
        d[2, 2, 0] = 2 * r2
        d[0, 0, 1] = 2 * r2 * t * t * np.cos(2 * th)
        d[0, 2, 1] = d[2, 0, 1] = 2 * r2 * t * np.sin(2 * th)
        d[2, 2, 1] = 2 * r2 * np.sin(th) ** 2
        return d

    def describe(self):
        out = super().describe()
        out.update(base=self.base, radius=self.radius, ratio=self.ratio)
        return out


class FlatTorus(MetricField):
    """Euclidean metric on R^n / Z^n."""

    kind = "flat_torus"

    def __init__(self, dimension=3):
        if dimension < 1:
            raise ValueError("dimension must be positive")
        self.dim = int(dimension)
        self.coords = tuple(f"x{i + 1}" for i in range(self.dim))
        lattice = tuple(DeckElement(np.eye(self.dim), e, 1.0, 0) for e in np.eye(self.dim))
        self.deck = DeckGroup(lattice, None)

    def diag(self, p):
        return np.ones(self.dim)

    def diag_d1(self, p):
        return np.zeros((self.dim, self.dim))

    def diag_d2(self, p):
        return np.zeros((self.dim, self.dim, self.dim))


def make_cone(base="sphere", radius=1.0, ratio=0.5) -> Cone:
    """Cone over a circle or round 2-sphere; accepts ``("sphere", 2.0)`` as base."""
    if isinstance(base, (tuple, list)):
        base, radius = base
    return Cone(base, radius, ratio)


def metric_at(field: MetricField, point):
    p = field.check(point)
    return np.diag(field.diag(p))


def deck_pullback_residual(field: MetricField, element: DeckElement, point):
    """max |D^T g(g.p) D - ratio^2 g(p)| for a deck element g with Jacobian D."""
    p = field.check(point)
    gp = field.check(element.apply(p))
    D = element.linear
    lhs = D.T @ metric_at(field, gp) @ D
    return float(np.max(np.abs(lhs - element.ratio**2 * metric_at(field, p))))


def deck_normal_form_residual(field: MappingTorus):
    """| |y-factor of Phi| - lam^(-q) |; the y-factor is the unstable eigenvalue."""
    L = field.deck.phi_map.linear
    return abs(abs(L[field.y_index, field.y_index]) - field.lam ** (-field.q))


def _diag_christoffel(h, d1):
    n = len(h)
    eye = np.eye(n)
    # T[i, j, k] = delta_ik d_j h_i + delta_ij d_k h_i - delta_jk d_i h_j
    T = (
        np.einsum("ik,ji->ijk", eye, d1)
        + np.einsum("ij,ki->ijk", eye, d1)
        - np.einsum("jk,ij->ijk", eye, d1)
    )
    return 0.5 * T / h[:, None, None]


def _diag_christoffel_derivative(h, d1, d2):
    """D[l, i, j, k] = d_l Gamma^i_{jk}."""
    n = len(h)
    eye = np.eye(n)
    T = (
        np.einsum("ik,ji->ijk", eye, d1)
        + np.einsum("ij,ki->ijk", eye, d1)
        - np.einsum("jk,ij->ijk", eye, d1)
    )
    dT = (
        np.einsum("ik,lji->lijk", eye, d2)
        + np.einsum("ij,lki->lijk", eye, d2)
        - np.einsum("jk,lij->lijk", eye, d2)
    )
    return -0.5 * d1[:, :, None, None] * T[None] / (h**2)[None, :, None, None] + 0.5 * dT / h[
        None, :, None, None
    ]


def _christoffel_from_metric_fd(field, p, step):
    n = field.dim
    g = np.diag(field.diag(p))
    dg = np.empty((n, n, n))
    for k in range(n):
        e = np.zeros(n)
        e[k] = step
        dg[k] = (np.diag(field.diag(p + e)) - np.diag(field.diag(p - e))) / (2 * step)
    ginv = np.linalg.inv(g)
    # Gamma^i_{jk} = 1/2 g^{im} (d_j g_{mk} + d_k g_{mj} - d_m g_{jk})
    lower = np.einsum("jmk->mjk", dg) + np.einsum("kmj->mjk", dg) - dg
    return 0.5 * np.einsum("im,mjk->ijk", ginv, lower)


def christoffel_at(field: MetricField, point, method="closed"):
    """Gamma[i, j, k] = Gamma^i_{jk}; ``method`` is "closed" or "fd"."""
    p = field.check(point)
    if method == "closed":
        return _diag_christoffel(field.diag(p), field.diag_d1(p))
    if method == "fd":
        return _christoffel_from_metric_fd(field, p, FD_STEP_CHRISTOFFEL)
    raise ValueError(f"unknown method {method!r}")


def _geodesic_accel(field, p, v):
    """-Gamma^i_{jk} v^j v^k without chart checks (hot path of the integrators).

    For a diagonal metric this is -(2 v_i (d_v h_i) - sum_j d_i h_j v_j^2) / (2 h_i).
    """
    h, d1 = field.diag(p), field.diag_d1(p)
    return -(2.0 * v * (v @ d1) - d1 @ (v * v)) / (2.0 * h)


def riemann_at(field: MetricField, point, method="closed"):
    """R[i, j, k, l] = R^i_{jkl}, with R(d_k, d_l) d_j = R^i_{jkl} d_i."""
    p = field.check(point)
    if method == "closed":
        h, d1, d2 = field.diag(p), field.diag_d1(p), field.diag_d2(p)
        G = _diag_christoffel(h, d1)
        D = _diag_christoffel_derivative(h, d1, d2)
    elif method == "fd":
        n = field.dim
        G = _christoffel_from_metric_fd(field, p, FD_STEP_CHRISTOFFEL)
        D = np.empty((n, n, n, n))
        for l in range(n):
            e = np.zeros(n)
            e[l] = FD_STEP_CURVATURE
            D[l] = (
                _christoffel_from_metric_fd(field, p + e, FD_STEP_CHRISTOFFEL)
                - _christoffel_from_metric_fd(field, p - e, FD_STEP_CHRISTOFFEL)
            ) / (2 * FD_STEP_CURVATURE)
    else:
        raise ValueError(f"unknown method {method!r}")
    return (
        np.einsum("kilj->ijkl", D)
        - np.einsum("likj->ijkl", D)
        + np.einsum("ikm,mlj->ijkl", G, G)
        - np.einsum("ilm,mkj->ijkl", G, G)
    )


def _as_vector(field, u):
    if isinstance(u, (int, np.integer)):
        e = np.zeros(field.dim)
        e[int(u)] = 1.0
        return e
    return np.asarray(u, dtype=float)


def sectional(field: MetricField, point, u, v, method="closed"):
    """Sectional curvature of span(u, v); integers select coordinate directions."""
    p = field.check(point)
    u, v = _as_vector(field, u), _as_vector(field, v)
    R = riemann_at(field, p, method)
    g = metric_at(field, p)
    Ruvv = np.einsum("ijkl,j,k,l->i", R, v, u, v)
    num = u @ g @ Ruvv
    den = (u @ g @ u) * (v @ g @ v) - (u @ g @ v) ** 2
    if den <= 0:
        raise ValueError("u and v span a degenerate plane")
    return float(num / den)


def orthonormal_frame(field: MetricField, point):
    """Columns form a g-orthonormal frame at the point."""
    p = field.check(point)
    return np.diag(1.0 / np.sqrt(field.diag(p)))


def riemann_orthonormal(field: MetricField, point, method="closed"):
    """All-lower Riemann tensor R(e_a, e_b, e_c, e_d) in the orthonormal frame."""
    p = field.check(point)
    R = riemann_at(field, p, method)
    Rl = np.einsum("im,mjkl->ijkl", metric_at(field, p), R)
    E = orthonormal_frame(field, p)
    return np.einsum("ijkl,ia,jb,kc,ld->abcd", Rl, E, E, E, E)


def max_curvature(field: MetricField, point):
    return float(np.max(np.abs(riemann_orthonormal(field, point))))


def curvature_samples(field: MappingTorus, zs, x=None):
    """Rows {"z": z, "K": K} for the (y, z)-plane sectional curvature."""
    rows = []
    base = np.zeros(field.dim) if x is None else np.asarray(x, float).copy()
    for z in zs:
        p = base.copy()
        p[field.z_index] = z
        rows.append(
            {
                "z": float(z),
                "K": sectional(field, p, field.y_index, field.z_index),
                "K_closed_form": float(n_plane_curvature(field.profile, z)),
            }
        )
    return rows


def write_csv(path, rows):
    rows = list(rows)
    with open(path, "w", newline="") as fh:
        if not rows:
            return
        writer = csv.DictWriter(fh, fieldnames=list(rows[0]))
        writer.writeheader()
        writer.writerows(rows)


@dataclass
class FreeActionReport:
    min_displacement: float
    n_elements: int
    n_points: int
    fixed_point_found: bool = field(init=False)

    def __post_init__(self):
        self.fixed_point_found = self.min_displacement < 1e-12


def free_action_check(field: MetricField, points, max_power=2, max_shift=1):
    """Smallest displacement |g.p - p| over small nontrivial deck elements."""
    powers = range(-max_power, max_power + 1) if field.deck.phi_map is not None else [0]
    n_lat = len(field.deck.lattice)
    best, count = np.inf, 0
    pts = np.asarray(points, float)
    for k in powers:
        for n in itertools.product(range(-max_shift, max_shift + 1), repeat=n_lat):
            if k == 0 and not any(n):
                continue
            g = field.deck.element(k, n)
            d = np.linalg.norm(g.apply(pts) - pts, axis=1).min()
            best = min(best, float(d))
            count += 1
    return FreeActionReport(best, count, len(pts))
