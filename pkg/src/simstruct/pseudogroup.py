"""Holonomy pseudogroup of the mapping-torus foliation on its transversal.

Leaves are the x_s directions; the transversal is the (y, z) half-plane N with
metric phi(z) dy^2 + dz^2.  A chart is a coordinate box in adapted coordinates;
its transversal is the (y, z) face.  Transitions come from overlaps
U_i and g(U_j) for deck elements g, and act on transversals by
(y, z) -> (a y + b, lam^p z) with ratio lam^p.  Ratios are tracked as the
integer p.

Word length counts transitions (letters), so a word through p charts has
length p - 1.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass, field as dc_field

import numpy as np

from .errors import ConfigError, CurvatureVanishes, MarginViolation, NotVertical
from .metric_core import DeckElement, FlatTorus, MappingTorus, n_plane_curvature

GAUSS_NODES, GAUSS_WEIGHTS = np.polynomial.legendre.leggauss(16)
MARGIN_SAFETY = 0.99
VERTICAL_TOL = 1e-9
OVERLAP_EPS = 1e-9
DECK_SHIFT_RANGE = 3


@dataclass(frozen=True)
class TransversalMap:
    """(y, z) -> (a y + b, lam^power z)."""

    power: int
    a: float
    b: float
    lam: float = 1.0

    @property
    def z_scale(self):
        return self.lam**self.power

    @property
    def ratio(self):
        return self.lam**self.power

    def apply(self, pts):
        pts = np.asarray(pts, dtype=float)
        out = np.empty_like(pts)
        out[..., 0] = self.a * pts[..., 0] + self.b
        out[..., 1] = self.z_scale * pts[..., 1]
        return out

    def compose(self, other: TransversalMap) -> TransversalMap:
        """self after other."""
        return TransversalMap(self.power + other.power, self.a * other.a, self.a * other.b + self.b, self.lam)

    def inverse(self) -> TransversalMap:
        return TransversalMap(-self.power, 1.0 / self.a, -self.b / self.a, self.lam)

    def key(self):
        return (self.power, round(self.a, 9), round(self.b, 9))

    @staticmethod
    def identity(lam=1.0):
        return TransversalMap(0, 1.0, 0.0, lam)


@dataclass(frozen=True)
class Chart:
    index: int
    grid: tuple
    lo: np.ndarray
    hi: np.ndarray

    @property
    def transversal(self):
        return (self.lo[-2], self.hi[-2], self.lo[-1], self.hi[-1])


@dataclass(frozen=True)
class Transition:
    src: int
    dst: int
    deck: tuple  # (power k, lattice vector n) of g with U_src meeting g(U_dst)
    map: TransversalMap
    domain: tuple  # (y0, y1, z0, z1) in src transversal coordinates
    domain_m: float  # lower bound of sqrt(phi) over the domain


class ChartCover:
    """Boxes of side ``chart_size`` with 50% overlap over the fundamental domain."""

    def __init__(self, field, chart_size=0.25):
        if not chart_size > 0:
            raise ConfigError("must be positive", "chart_size")
        self.field = field
        self.s = float(chart_size)
        self.step = self.s / 2
        if isinstance(field, MappingTorus):
            self.q = field.q
            self.lam, self.mu = field.lam, field.mu
            self.profile = field.profile
            self.basis, self.basis_inv = field.basis, field.basis_inv
            corners = np.array(list(itertools.product([0, 1], repeat=self.q + 1)), float) @ self.basis_inv.T
            lo = np.concatenate([corners.min(0), [self.lam]])
            hi = np.concatenate([corners.max(0), [1.0]])
            self.deck_keys = [
                (k, n)
                for k in (-1, 0, 1)
                for n in itertools.product(range(-DECK_SHIFT_RANGE, DECK_SHIFT_RANGE + 1), repeat=self.q + 1)
            ]
        elif isinstance(field, FlatTorus):
            if field.dim < 3:
                raise ConfigError("flat torus needs dimension >= 3 for a 2-dimensional transversal", "dimension")
            self.q = field.dim - 2
            self.lam, self.mu, self.profile = 1.0, 1.0, None
            self.basis = self.basis_inv = np.eye(field.dim - 1)
            lo, hi = np.zeros(field.dim), np.ones(field.dim)
            self.deck_keys = [
                (0, n) for n in itertools.product(range(-1, 2), repeat=field.dim)
            ]
        else:
            raise ConfigError(f"pseudogroup needs a mapping torus or flat torus, got {field.kind}", "manifold.kind")
        self.n = field.dim
        self.fd_lo, self.fd_hi = lo, hi
        self.origin = lo - self.step
        counts = np.ceil((hi - lo) / self.step).astype(int) + 1
        if np.any((hi - lo) < self.s):
            raise ConfigError(
                f"chart size {self.s} leaves fewer than 2 charts along some direction", "chart_size"
            )
        self.counts = counts
        self._deck_cache = {}
        self._m_cache = {}
        self.charts = self._make_charts()
        self.grid_index = {c.grid: c.index for c in self.charts}
        self.transitions = self._make_transitions()
        self.m_min = min(self._sqrtphi_min(c.lo[-1], c.hi[-1]) for c in self.charts)
        self.epsilon0 = MARGIN_SAFETY * (self.s / 4) * min(1.0, self.m_min)

    # geometry on the transversal
    def phi(self, z):
        if self.profile is None:
            return np.ones_like(np.asarray(z, float))
        return self.profile(z)

    def curvature(self, z):
        if self.profile is None:
            return np.zeros_like(np.asarray(z, float))
        return n_plane_curvature(self.profile, z)

    def _sqrtphi_min(self, z0, z1):
        key = (float(z0), float(z1))
        if key not in self._m_cache:
            self._m_cache[key] = self._sqrtphi_min_uncached(*key)
        return self._m_cache[key]

    def _sqrtphi_min_uncached(self, z0, z1):
        if self.profile is None:
            return 1.0
        if not self.profile.fourier:
            return math.sqrt(self.profile(z0))  # phi is increasing when P = 0
        zs = np.linspace(z0, z1, 257)
        return 0.999 * float(np.sqrt(self.profile(zs)).min())

    def margin(self, pt, box, m=None):
        """Lower bound of the transversal g-distance from pt to the box boundary."""
        y, z = pt
        y0, y1, z0, z1 = box
        if m is None:
            m = self._sqrtphi_min(z0, z1)
        return min(z - z0, z1 - z, m * (y - y0), m * (y1 - y))

    def segment_length(self, p, pts):
        """g-length of straight transversal segments from p to each of pts."""
        pts = np.atleast_2d(pts)
        d = pts - p
        s = 0.5 * (GAUSS_NODES + 1)
        z = p[1] + np.outer(d[:, 1], s)
        speed = np.sqrt(self.phi(z) * d[:, :1] ** 2 + d[:, 1:] ** 2)
        return speed @ (0.5 * GAUSS_WEIGHTS)

    # deck elements
    def deck(self, k, n) -> DeckElement:
        key = (k, tuple(n))
        if key not in self._deck_cache:
            self._deck_cache[key] = self.field.deck.element(k, n)
        return self._deck_cache[key]

    def transversal_part(self, g: DeckElement) -> TransversalMap:
        a = float(g.linear[-2, -2])
        b = float(g.shift[-2])
        return TransversalMap(int(g.power), a, b, self.lam)

    # construction
    def _make_charts(self):
        charts = []
        ranges = [range(int(c)) for c in self.counts]
        for grid in itertools.product(*ranges):
            lo = self.origin + self.step * np.array(grid)
            hi = lo + self.s
            if self._meets_fundamental_domain(lo, hi):
                charts.append(Chart(len(charts), grid, lo, hi))
        return charts

    def _meets_fundamental_domain(self, lo, hi):
        if hi[-1] <= self.fd_lo[-1] or lo[-1] >= self.fd_hi[-1]:
            return False
        # Conservative test in torus coordinates: keep the box if its centre is
        # within half a diagonal (mapped by the basis) of the unit cube.
        c = 0.5 * (lo[:-1] + hi[:-1])
        t = self.basis @ c
        slack = np.abs(self.basis).sum(axis=1) * self.s / 2
        return bool(np.all(t > -slack) and np.all(t < 1 + slack))

    def _image_boxes(self, g: DeckElement, lo, hi):
        """Axis-aligned bounds of g(box) for boxes given as rows of lo/hi."""
        L, c = g.linear, g.shift
        P, N = np.clip(L, 0, None), np.clip(L, None, 0)
        return lo @ P.T + hi @ N.T + c, hi @ P.T + lo @ N.T + c

    def _x_overlap_exact(self, g, j, i):
        """Separating-axis test for the x parts when the leaf block rotates (q = 2)."""
        if self.q != 2:
            return True
        Ci, Cj = self.charts[i], self.charts[j]
        sq = np.array([[0, 0], [1, 0], [1, 1], [0, 1]], float)
        A = Ci.lo[:2] + sq * (Ci.hi[:2] - Ci.lo[:2])
        B = (Cj.lo[:2] + sq * (Cj.hi[:2] - Cj.lo[:2])) @ g.linear[:2, :2].T + g.shift[:2]
        R = g.linear[:2, :2] / abs(g.ratio)
        for ax in [np.array([1.0, 0.0]), np.array([0.0, 1.0]), R[:, 0], R[:, 1]]:
            pa, pb = A @ ax, B @ ax
            if pa.max() <= pb.min() + OVERLAP_EPS or pb.max() <= pa.min() + OVERLAP_EPS:
                return False
        return True

    def _make_transitions(self):
        lo = np.array([c.lo for c in self.charts])
        hi = np.array([c.hi for c in self.charts])
        all_lo, all_hi = lo.min(0), hi.max(0)
        pairs = {}
        for k, n in self.deck_keys:
            g = self.deck(k, n)
            blo, bhi = self._image_boxes(g, all_lo[None], all_hi[None])
            if np.any(blo[0] >= all_hi) or np.any(bhi[0] <= all_lo):
                continue
            ilo, ihi = self._image_boxes(g, lo, hi)
            # chart grid a overlaps [ilo, ihi] iff origin + a*step < ihi and origin + a*step + s > ilo
            amin = np.floor((ilo - self.s - self.origin) / self.step + OVERLAP_EPS).astype(int) + 1
            amax = np.ceil((ihi - self.origin) / self.step - OVERLAP_EPS).astype(int) - 1
            amin = np.maximum(amin, 0)
            amax = np.minimum(amax, self.counts - 1)
            ok = np.all(amax >= amin, axis=1)
            for j in np.nonzero(ok)[0]:
                for grid in itertools.product(*[range(a, b + 1) for a, b in zip(amin[j], amax[j])]):
                    i = self.grid_index.get(grid)
                    if i is None:
                        continue
                    ov_lo = np.maximum(lo[i], ilo[j])
                    ov_hi = np.minimum(hi[i], ihi[j])
                    if np.any(ov_hi - ov_lo <= OVERLAP_EPS):
                        continue
                    if not self._x_overlap_exact(g, int(j), i):
                        continue
                    identity = k == 0 and not any(n)
                    if identity and i == j:
                        continue
                    if i == j:
                        raise ConfigError(
                            f"chart {i} overlaps its own deck image (k={k}, n={n}); reduce it", "chart_size"
                        )
                    key = (i, int(j))
                    if key in pairs and pairs[key][0] != (k, n):
                        raise ConfigError(
                            f"charts {i} and {j} are glued by two deck elements; reduce it", "chart_size"
                        )
                    pairs[key] = ((k, n), g, ov_lo, ov_hi)
        transitions = {c.index: [] for c in self.charts}
        for (i, j), ((k, n), g, ov_lo, ov_hi) in sorted(pairs.items()):
            dom = (ov_lo[-2], ov_hi[-2], ov_lo[-1], ov_hi[-1])
            tmap = self.transversal_part(g).inverse()
            transitions[i].append(
                Transition(i, j, (k, n), tmap, tuple(float(x) for x in dom), self._sqrtphi_min(dom[2], dom[3]))
            )
        return transitions

    # locating points
    def reduce(self, p) -> DeckElement:
        """Deck element h with h(p) in the fundamental domain."""
        p = np.asarray(p, float)
        n = self.n
        if isinstance(self.field, MappingTorus):
            u = math.log(p[-1]) / math.log(self.lam)
            k = math.ceil(u) - 1
            h = self.field.deck.element(-k) if k else DeckElement.identity(n)
        else:
            h = DeckElement.identity(n)
        x = h.apply(p)
        t = self.basis @ x[: self.q + 1] if isinstance(self.field, MappingTorus) else x
        shift_n = -np.floor(t).astype(int)
        if isinstance(self.field, MappingTorus):
            tr = self.field.deck.element(0, shift_n)
        else:
            tr = DeckElement(np.eye(n), shift_n.astype(float), 1.0, 0)
        return tr.compose(h)

    def representations(self, p, max_shift=1):
        """(transversal margin, x margin, chart, h) for charts holding h(p), h near the reduction."""
        h0 = self.reduce(p)
        out = []
        for k, n in self.deck_keys:
            if max(map(abs, n), default=0) > max_shift:
                continue
            h = self.deck(k, n).compose(h0)
            c = h.apply(p)
            a = np.floor((c - self.origin) / self.step).astype(int)
            for grid in itertools.product(*[(x - 1, x) for x in a]):
                i = self.grid_index.get(grid)
                if i is None:
                    continue
                ch = self.charts[i]
                xm = float(np.min(np.concatenate([c[:-2] - ch.lo[:-2], ch.hi[:-2] - c[:-2]]))) if self.q else 1.0
                if xm <= 0:
                    continue
                tm = self.margin(c[-2:], ch.transversal)
                if tm > 0:
                    out.append((tm, xm, i, h))
        out.sort(key=lambda r: (-r[0], -r[1], r[2]))
        return out

    def charts_containing(self, c):
        """Indices of charts whose box holds the chart-coordinate point c."""
        c = np.asarray(c, float)
        a = np.floor((c - self.origin) / self.step).astype(int)
        out = []
        for grid in itertools.product(*[(x - 1, x) for x in a]):
            i = self.grid_index.get(grid)
            if i is not None and np.all(c > self.charts[i].lo) and np.all(c < self.charts[i].hi):
                out.append(i)
        return sorted(out)

    def best_chart(self, p):
        reps = self.representations(p)
        if not reps:
            raise ConfigError(f"point {p} is not covered", "chart_size")
        return reps[0]

    def find_transition(self, src, dst, g: DeckElement):
        for t in self.transitions[src]:
            if t.dst == dst:
                d = self.deck(*t.deck)
                if np.allclose(d.linear, g.linear, atol=1e-9) and np.allclose(d.shift, g.shift, atol=1e-9):
                    return t
        return None

    def epsilon_property(self, n_points=10_000, seed=0):
        """Fraction of random fundamental-domain points with a chart of margin > epsilon0."""
        rng = np.random.default_rng(seed)
        pts = sample_fundamental_domain(self, n_points, rng)
        ok = 0
        for p in pts:
            a = np.rint((p - self.origin - self.s / 2) / self.step).astype(int)
            i = self.grid_index.get(tuple(a))
            if i is None:
                continue
            ch = self.charts[i]
            if np.all(p > ch.lo) and np.all(p < ch.hi) and self.margin(p[-2:], ch.transversal) > self.epsilon0:
                ok += 1
        return ok / n_points

    def summary(self):
        ratios = sorted({t.map.power for ts in self.transitions.values() for t in ts})
        return {
            "n_charts": len(self.charts),
            "n_transitions": sum(len(v) for v in self.transitions.values()),
            "chart_size": self.s,
            "epsilon0": self.epsilon0,
            "transition_ratio_powers": ratios,
        }


def build_cover(field, chart_size=0.25) -> ChartCover:
    return ChartCover(field, chart_size)


def sample_fundamental_domain(cover: ChartCover, n, rng):
    if isinstance(cover.field, MappingTorus):
        t = rng.random((n, cover.q + 1))
        z = cover.lam ** (1 - rng.random(n))
        return np.column_stack([t @ cover.basis_inv.T, z])
    return rng.random((n, cover.n))


@dataclass
class GermWord:
    charts: tuple
    base: np.ndarray
    transitions: tuple
    epsilon0: float
    lam: float = 1.0

    @property
    def length(self):
        return len(self.transitions)

    @property
    def powers(self):
        return [t.map.power for t in self.transitions]

    @property
    def prefix_powers(self):
        """Ratio powers of the partial composites before each letter (r_1 = 1 first)."""
        out, k = [], 0
        for t in self.transitions:
            out.append(k)
            k += t.map.power
        return out

    @property
    def ratio_power(self):
        return sum(self.powers)

    @property
    def ratio(self):
        return self.lam**self.ratio_power

    @property
    def guaranteed_radius(self):
        pre = self.prefix_powers
        if not pre:
            return self.epsilon0
        return self.epsilon0 / max(self.lam**k for k in pre)

    def action(self) -> TransversalMap:
        g = TransversalMap.identity(self.lam)
        for t in self.transitions:
            g = t.map.compose(g)
        return g

    def to_dict(self):
        return {
            "charts": list(self.charts),
            "base": [float(x) for x in self.base],
            "ratio_powers": self.powers,
            "ratio_power": self.ratio_power,
            "guaranteed_radius": self.guaranteed_radius,
        }


def _check_star(cover, word: GermWord):
    """Raise MarginViolation unless every intermediate ball fits the next domain."""
    x = np.asarray(word.base, float)
    for l, t in enumerate(word.transitions):
        m = cover.margin(x, t.domain, t.domain_m)
        if not m > cover.epsilon0:
            raise MarginViolation(f"step {l}: margin {m:.3g} <= epsilon0 {cover.epsilon0:.3g}", l)
        x = t.map.apply(x)


def sample_ball(cover: ChartCover, center, radius, n, rng):
    """n points with straight-segment g-length < radius from center (a subset of the ball)."""
    c = np.asarray(center, float)
    zlo = max(c[1] - radius, 1e-12)
    ywid = radius / math.sqrt(float(cover.phi(zlo)))
    out = []
    while sum(len(o) for o in out) < n:
        cand = c + rng.uniform(-1, 1, (4 * n, 2)) * [ywid, radius]
        cand = cand[cand[:, 1] > 0]
        out.append(cand[cover.segment_length(c, cand) < radius])
    return np.concatenate(out)[:n]


@dataclass
class TrackedResult:
    ratio_power: int
    ratio: float
    guaranteed_radius: float
    n_samples: int
    violations: list = dc_field(default_factory=list)

    @property
    def ok(self):
        return not self.violations

    def to_dict(self):
        return {
            "ratio_power": self.ratio_power,
            "ratio": self.ratio,
            "guaranteed_radius": self.guaranteed_radius,
            "n_samples": self.n_samples,
            "violations": self.violations,
        }


def compose_tracked(cover: ChartCover, word: GermWord, n_samples=200, seed=0) -> TrackedResult:
    """Total ratio and guaranteed radius, with ball samples pushed through every step."""
    _check_star(cover, word)
    rho = word.guaranteed_radius
    pts = sample_ball(cover, word.base, rho, n_samples, np.random.default_rng(seed))
    viol = []
    for l, t in enumerate(word.transitions):
        y0, y1, z0, z1 = t.domain
        inside = (pts[:, 0] > y0) & (pts[:, 0] < y1) & (pts[:, 1] > z0) & (pts[:, 1] < z1)
        if not inside.all():
            viol.append({"step": l, "outside": int((~inside).sum())})
        pts = t.map.apply(pts)
    return TrackedResult(word.ratio_power, word.ratio, rho, len(pts), viol)


def enumerate_words(cover: ChartCover, max_length, base_points=None, n_base=4, seed=0):
    """Margin-valid words up to max_length letters from each base point (breadth first).

    Words are deduplicated per base point by (end chart, action, largest prefix
    ratio), which keeps the frontier finite.
    """
    if base_points is None:
        rng = np.random.default_rng(seed)
        base_points = sample_fundamental_domain(cover, n_base, rng)
    words = []
    eps = cover.epsilon0
    for p in base_points:
        _, _, i0, h = cover.best_chart(p)
        x0 = h.apply(p)[-2:]
        start = GermWord((i0,), x0, (), eps, cover.lam)
        words.append(start)
        frontier = [(start, TransversalMap.identity(cover.lam), 0, x0)]
        seen = {(i0, TransversalMap.identity(cover.lam).key(), 0)}
        for _ in range(max_length):
            nxt = []
            for w, act, kmin, x in frontier:
                kmin = min(kmin, act.power)
                for t in cover.transitions[w.charts[-1]]:
                    if not cover.margin(x, t.domain, t.domain_m) > eps:
                        continue
                    a2 = t.map.compose(act)
                    key = (t.dst, a2.key(), kmin)
                    if key in seen:
                        continue
                    seen.add(key)
                    w2 = GermWord(w.charts + (t.dst,), x0, w.transitions + (t,), eps, cover.lam)
                    nxt.append((w2, a2, kmin, t.map.apply(x)))
            words.extend(n[0] for n in nxt)
            frontier = nxt
    return words


def germ_from_path(cover: ChartCover, path, start_chart=None, end_chart=None) -> GermWord:
    """Germ word of a vertical path given as sampled points in adapted coordinates.

    The path stays in one chart while it can; at a switch the next chart is
    the one whose transition domain gives the point the largest margin.
    """
    pts = np.atleast_2d(np.asarray(path, float))
    drift = float(np.max(np.abs(pts[:, -2:] - pts[0, -2:])))
    if drift > VERTICAL_TOL:
        raise NotVertical(f"transversal coordinates drift by {drift:.3g}")
    reps = cover.representations(pts[0])
    if start_chart is not None:
        reps = [r for r in reps if r[2] == start_chart]
        if not reps:
            raise ConfigError(f"path does not start in chart {start_chart}", "start_chart")
    _, _, cur, h = reps[0]
    base = h.apply(pts[0])[-2:]
    charts, trans = [cur], []

    def inside(i, c):
        ch = cover.charts[i]
        return bool(np.all(c > ch.lo) and np.all(c < ch.hi))

    def switch(p_prev, p, target=None):
        best = None
        reps = cover.representations(p, 1 if target is None else DECK_SHIFT_RANGE)
        for _, xm, j, h2 in reps:
            if j == cur or (target is not None and j != target):
                continue
            if p_prev is not None and not inside(j, h2.apply(p_prev)):
                continue
            g = h.compose(h2.inverse())
            t = cover.find_transition(cur, j, g)
            if t is None:
                continue
            m = cover.margin(h.apply(p)[-2:], t.domain, t.domain_m)
            if best is None or m > best[0]:
                best = (m, t, h2)
        if best is None:
            raise NotVertical("no chart continues the path; sample it more densely")
        return best

    for prev, p in zip(pts[:-1], pts[1:]):
        if inside(cur, h.apply(p)):
            continue
        _, t, h = switch(prev, p)
        trans.append(t)
        cur = t.dst
        charts.append(cur)
    if end_chart is not None and end_chart != cur:
        _, t, h = switch(None, pts[-1], end_chart)
        trans.append(t)
        charts.append(t.dst)
    return GermWord(tuple(charts), base, tuple(trans), cover.epsilon0, cover.lam)


def weighted_metric(cover: ChartCover, pts):
    """Diagonal of |K| g_N at each point; |R|_g = |K| in dimension 2 (constant 1)."""
    pts = np.atleast_2d(pts)
    K = np.abs(cover.curvature(pts[:, 1]))
    return np.column_stack([K * cover.phi(pts[:, 1]), K])


def invariant_metric_ratio(cover: ChartCover, gamma: TransversalMap, points, curvature_tol=1e-12):
    """max |ratio - 1| of gamma with respect to |K| g_N over the points."""
    pts = np.atleast_2d(np.asarray(points, float))
    K = np.abs(cover.curvature(pts[:, 1]))
    if np.any(K < curvature_tol):
        raise CurvatureVanishes(f"|K| < {curvature_tol:g} at some sample points")
    W0 = weighted_metric(cover, pts)
    W1 = weighted_metric(cover, gamma.apply(pts))
    jac = np.array([gamma.a, gamma.z_scale])
    ratio = np.sqrt(W1 * jac**2 / W0)
    return float(np.max(np.abs(ratio - 1)))


def transition_deviations(cover: ChartCover, n_probe=3):
    """Weighted-metric isometry defects of every transition at points of its domain."""
    ts = [t for v in cover.transitions.values() for t in v]
    dom = np.array([t.domain for t in ts])
    a = np.array([t.map.a for t in ts])
    b = np.array([t.map.b for t in ts])
    zs = np.array([t.map.z_scale for t in ts])
    out = []
    for f in np.linspace(0.25, 0.75, n_probe):
        y = dom[:, 0] + f * (dom[:, 1] - dom[:, 0])
        z = dom[:, 2] + (1 - f) * (dom[:, 3] - dom[:, 2])
        pts = np.column_stack([y, z])
        W0 = weighted_metric(cover, pts)
        W1 = weighted_metric(cover, np.column_stack([a * y + b, zs * z]))
        ratio = np.sqrt(W1 * np.column_stack([a, zs]) ** 2 / W0)
        out.append(np.abs(ratio - 1).max(axis=1))
    return list(np.max(out, axis=0))


def deck_words(cover: ChartCover, max_length):
    """Distinct transversal actions of deck words up to max_length generator letters."""
    gens = []
    if cover.field.deck.phi_map is not None:
        P = cover.transversal_part(cover.field.deck.phi_map)
        gens += [P, P.inverse()]
    for t in cover.field.deck.lattice:
        T = cover.transversal_part(t)
        if T.b != 0:
            gens += [T, T.inverse()]
    layers = [[TransversalMap.identity(cover.lam)]]
    seen = {layers[0][0].key()}
    for _ in range(max_length):
        nxt = []
        for w in layers[-1]:
            for g in gens:
                w2 = g.compose(w)
                if w2.key() not in seen:
                    seen.add(w2.key())
                    nxt.append(w2)
        layers.append(nxt)
    return layers


def _ratio_block(maps_by_length, lam, m, deviations):
    hist = {}
    powers = []
    for L, maps in enumerate(maps_by_length):
        c = Counter(g.power for g in maps)
        hist[str(L)] = {str(k): v for k, v in sorted(c.items())}
        powers += list(c)
    ratios = [lam**k for k in powers] or [1.0]
    dev = max(deviations) if deviations else None
    return {
        "histogram": hist,
        "raw": {
            "min_ratio": min(ratios),
            "max_ratio": max(ratios),
            "min_power": min(powers, default=0),
            "max_power": max(powers, default=0),
            "equicontinuous": bool(min(ratios) >= 1 / m and max(ratios) <= m),
        },
        "weighted": {
            "max_deviation": dev,
            "equicontinuous": None if dev is None else bool(dev < 1e-6),
        },
    }


def equicontinuity_report(cover: ChartCover, word_length=5, m=10.0, seed=0, n_base=4):
    """Ratio ranges for cover words and for deck words, raw and curvature-weighted.

    Cover words are compositions of transitions of the finite cover; deck
    words act on the whole transversal N.  Weighted deviations are skipped
    where the curvature vanishes.
    """
    words = enumerate_words(cover, word_length, n_base=n_base, seed=seed)
    by_len = [[] for _ in range(word_length + 1)]
    devs = []
    weighted_ok = cover.profile is not None
    for w in words:
        g = w.action()
        by_len[w.length].append(g)
        if weighted_ok:
            devs.append(invariant_metric_ratio(cover, g, [w.base]))
    layers = deck_words(cover, word_length)
    deck_devs = []
    if weighted_ok:
        probes = np.array([[0.3, 0.5], [-0.2, 0.8], [0.1, 1.0]])
        deck_devs = [invariant_metric_ratio(cover, g, probes) for layer in layers for g in layer]
    trans_devs = transition_deviations(cover) if weighted_ok else []
    return {
        "epsilon0": cover.epsilon0,
        "word_length": word_length,
        "m": m,
        "lam": cover.lam,
        "weight_normalization": "|R|_g = |K| (2-dimensional transversal, constant 1)",
        "n_cover_words": len(words),
        "transitions_max_weighted_deviation": max(trans_devs) if trans_devs else None,
        "cover_words": _ratio_block(by_len, cover.lam, m, devs),
        "deck_words": _ratio_block(layers, cover.lam, m, deck_devs),
    }
