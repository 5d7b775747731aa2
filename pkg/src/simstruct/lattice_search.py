"""Unimodular integer matrices with a one-dimensional unstable direction.

A matrix ``A`` in GL_{q+1}(Z) is admissible when its characteristic polynomial
has one real root ``mu`` with ``|mu| > 1`` and ``q`` roots of a common modulus
``lam < 1``, and when ``A`` restricted to the stable subspace is ``lam`` times
an orthogonal map for some positive definite form ``b``.  The mapping tori
built in :mod:`simstruct.metric_core` start from such a matrix.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import IllConditioned, NotSimilarity, RejectedSpectrum

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1
MODULUS_RTOL = 1e-9


@dataclass(frozen=True)
class IntegerMatrix:
    """Square matrix of exact Python integers with determinant +-1."""

    entries: tuple

    def __post_init__(self):
        rows = tuple(tuple(int(x) for x in row) for row in self.entries)
        n = len(rows)
        if n == 0 or any(len(r) != n for r in rows):
            raise ValueError("IntegerMatrix needs a non-empty square array")
        for row, raw in zip(rows, self.entries):
            for x, y in zip(row, raw):
                if x != y:
                    raise ValueError(f"non-integer entry {y!r}")
        object.__setattr__(self, "entries", rows)
        d = integer_det(rows)
        if abs(d) != 1:
            raise ValueError(f"matrix is not unimodular (det = {d})")

    @property
    def n(self):
        return len(self.entries)

    @property
    def det(self):
        return integer_det(self.entries)

    def to_array(self):
        return np.array(self.entries, dtype=float)

    def tolist(self):
        return [list(r) for r in self.entries]


def as_integer_matrix(A) -> IntegerMatrix:
    if isinstance(A, IntegerMatrix):
        return A
    arr = np.asarray(A)
    if arr.dtype.kind == "f" and not np.all(arr == np.round(arr)):
        raise ValueError("matrix has non-integer entries")
    return IntegerMatrix(tuple(tuple(int(x) for x in row) for row in arr.tolist()))


def integer_det(rows) -> int:
    """Exact determinant by fraction-free Bareiss elimination."""
    m = [list(r) for r in rows]
    n = len(m)
    sign, prev = 1, 1
    for k in range(n - 1):
        if m[k][k] == 0:
            swap = next((i for i in range(k + 1, n) if m[i][k] != 0), None)
            if swap is None:
                return 0
            m[k], m[swap] = m[swap], m[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                m[i][j] = (m[i][j] * m[k][k] - m[i][k] * m[k][j]) // prev
        prev = m[k][k]
    return sign * m[n - 1][n - 1]


def charpoly(M: IntegerMatrix) -> list[int]:
    """Exact characteristic polynomial, highest degree first (Faddeev-LeVerrier)."""
    n = M.n
    A = [list(r) for r in M.entries]
    coeffs = [1]
    Mk = [[0] * n for _ in range(n)]
    c_prev = 1
    for k in range(1, n + 1):
        # Mk <- A Mk + c_prev I
        prod = [[sum(A[i][t] * Mk[t][j] for t in range(n)) for j in range(n)] for i in range(n)]
        for i in range(n):
            prod[i][i] += c_prev
        Mk = prod
        AM_trace = sum(sum(A[i][t] * Mk[t][i] for t in range(n)) for i in range(n))
        c = -AM_trace // k
        coeffs.append(c)
        c_prev = c
    return coeffs


def companion(coeffs) -> IntegerMatrix:
    """Frobenius companion matrix of the monic polynomial ``coeffs`` (high to low)."""
    coeffs = [int(c) for c in coeffs]
    if coeffs[0] != 1:
        raise ValueError("polynomial must be monic")
    n = len(coeffs) - 1
    C = [[0] * n for _ in range(n)]
    for i in range(1, n):
        C[i][i - 1] = 1
    for i in range(n):
        C[i][n - 1] = -coeffs[n - i]
    return IntegerMatrix(tuple(tuple(r) for r in C))


def _polished_roots(coeffs, iterations=3):
    p = np.asarray(coeffs, dtype=float)
    dp = np.polyder(p)
    roots = np.roots(p).astype(complex)
    for _ in range(iterations):
        d = np.polyval(dp, roots)
        ok = np.abs(d) > 1e-300
        roots[ok] = roots[ok] - np.polyval(p, roots[ok]) / d[ok]
    return roots


def _null_space(M, k):
    """Last ``k`` right singular vectors and the relative size of their singular values."""
    _, s, vt = np.linalg.svd(M)
    scale = max(s[0], 1.0)
    return vt[-k:].T, s[-k:].max() / scale, (s[-k - 1] / scale if k < len(s) else np.inf)


@dataclass
class SpectralSplit:
    """Certified invariant splitting R^{q+1} = E^s + E^u of an integer matrix.

    ``stable_basis`` holds q row vectors spanning E^s and ``b`` is the similarity
    form written in that basis, so ``S.T @ b @ S == lam**2 * b`` where ``S`` is
    the restriction of ``A`` in the same basis.
    """

    matrix: IntegerMatrix
    lam: float
    mu: float
    stable_basis: np.ndarray
    unstable_basis: np.ndarray
    b: np.ndarray

    @property
    def n(self):
        return self.matrix.n

    @property
    def q(self):
        return self.matrix.n - 1

    @property
    def restriction(self):
        """Matrix of A|E^s in the stable basis."""
        Q = self.stable_basis.T
        S, *_ = np.linalg.lstsq(Q, self.matrix.to_array() @ Q, rcond=None)
        return S

    def stable_frame(self):
        """Columns e_1..e_q of E^s, orthonormal for ``b``."""
        L = np.linalg.cholesky(self.b)
        C = np.linalg.inv(L).T
        return self.stable_basis.T @ C

    def adapted_basis(self):
        """Columns (e_1, ..., e_q, e_{q+1}) of the adapted coordinate frame."""
        u = self.unstable_basis.reshape(-1)
        return np.column_stack([self.stable_frame(), u / np.linalg.norm(u)])

    def orthogonal_part(self):
        """O = A|E^s / lam in the b-orthonormal frame (an orthogonal q x q matrix)."""
        B = self.adapted_basis()
        D = np.linalg.solve(B, self.matrix.to_array() @ B)
        return D[: self.q, : self.q] / self.lam

    def to_dict(self):
        return {
            "version": SCHEMA_VERSION,
            "matrix": self.matrix.tolist(),
            "lambda": float(self.lam),
            "mu": float(self.mu),
            "stable_basis": np.asarray(self.stable_basis, float).tolist(),
            "unstable_basis": np.asarray(self.unstable_basis, float).reshape(1, -1).tolist(),
            "b": np.asarray(self.b, float).tolist(),
        }

    @classmethod
    def from_dict(cls, data):
        if data.get("version") != SCHEMA_VERSION:
            raise ValueError(f"unsupported SpectralSplit schema version {data.get('version')!r}")
        return cls(
            matrix=as_integer_matrix(data["matrix"]),
            lam=float(data["lambda"]),
            mu=float(data["mu"]),
            stable_basis=np.array(data["stable_basis"], dtype=float),
            unstable_basis=np.array(data["unstable_basis"], dtype=float),
            b=np.array(data["b"], dtype=float),
        )


def _sym_basis(q):
    out = []
    for i in range(q):
        for j in range(i, q):
            E = np.zeros((q, q))
            E[i, j] = E[j, i] = 1.0
            out.append(E)
    return out


def similarity_form(S, lam, tol=1e-9):
    """Positive definite ``b`` with ``S.T b S = lam^2 b``, normalised to det 1.

    Solves the linear fixed-point problem ``b = S.T b S / lam^2`` on symmetric
    matrices and looks for a definite element of its solution space.
    """
    S = np.atleast_2d(np.asarray(S, dtype=float))
    q = S.shape[0]
    if q == 1:
        return np.ones((1, 1))
    basis = _sym_basis(q)
    L = np.column_stack([(S.T @ E @ S / lam**2 - E).reshape(-1) for E in basis])
    _, s, vt = np.linalg.svd(L)
    s_full = np.zeros(len(basis))
    s_full[: len(s)] = s
    null = [vt[k] for k in range(len(basis)) if s_full[k] < tol * max(1.0, s_full[0])]
    if not null:
        raise NotSimilarity("no invariant symmetric form: restriction is not lam * orthogonal")
    forms = [sum(c * E for c, E in zip(v, basis)) for v in null]
    if len(forms) == 1:
        candidate = forms[0]
    else:
        # several invariant forms: pick the one closest to the eigenvector-induced form
        w, V = np.linalg.eig(S)
        if np.linalg.cond(V) > 1.0 / tol:
            raise NotSimilarity("restriction is not diagonalisable")
        Vi = np.linalg.inv(V)
        target = np.real(Vi.conj().T @ Vi)
        F = np.stack([f.reshape(-1) for f in forms], axis=1)
        coef, *_ = np.linalg.lstsq(F, target.reshape(-1), rcond=None)
        candidate = (F @ coef).reshape(q, q)
    candidate = 0.5 * (candidate + candidate.T)
    if np.trace(candidate) < 0:
        candidate = -candidate
    ev = np.linalg.eigvalsh(candidate)
    if ev[0] <= tol * max(abs(ev[-1]), 1e-300):
        raise NotSimilarity(f"invariant forms are degenerate (eigenvalues {ev.tolist()})")
    return candidate / np.linalg.det(candidate) ** (1.0 / q)


def spectral_split(A, tol=1e-9) -> SpectralSplit:
    """Certified stable/unstable splitting of an integer matrix.

    Raises :class:`RejectedSpectrum` unless the roots are one real unstable root
    and q stable roots of equal modulus, and :class:`IllConditioned` when the
    invariant subspaces cannot be resolved to ``tol``.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    M = as_integer_matrix(A)
    n = M.n
    q = n - 1
    if q < 1:
        raise RejectedSpectrum("need dimension at least 2")
    roots = _polished_roots(charpoly(M))
    moduli = np.abs(roots)
    unstable = np.flatnonzero(moduli > 1.0 + tol)
    if len(unstable) != 1:
        raise RejectedSpectrum(
            f"expected exactly one root of modulus > 1, found {len(unstable)}", moduli
        )
    r_u = roots[unstable[0]]
    if abs(r_u.imag) > tol * abs(r_u):
        raise RejectedSpectrum("unstable root is not real", moduli)
    stable = np.delete(roots, unstable[0])
    smod = np.abs(stable)
    if np.any(smod >= 1.0 - tol):
        raise RejectedSpectrum("a remaining root lies on the unit circle", moduli)
    lam = float(smod.mean())
    if np.any(np.abs(smod - lam) > max(MODULUS_RTOL, tol) * lam):
        raise RejectedSpectrum("stable roots have different moduli", moduli)
    mu = float(r_u.real)

    Af = M.to_array()
    norm_a = np.linalg.norm(Af, 2)
    u, res_u, _ = _null_space(Af - mu * np.eye(n), 1)
    if res_u > tol:
        raise IllConditioned(f"unstable eigenvector residual {res_u:.3e}")
    u = u[:, 0]
    u = u * np.sign(u[np.argmax(np.abs(u))])

    p_s = np.real(np.poly(stable))
    P = np.zeros((n, n))
    for c in p_s:
        P = P @ Af + c * np.eye(n)
    Q, res_s, gap = _null_space(P, q)
    if res_s > tol or gap < 1e3 * res_s:
        raise IllConditioned(f"stable subspace residual {res_s:.3e} (gap {gap:.3e})")
    S = Q.T @ Af @ Q
    inv_res = np.linalg.norm(Af @ Q - Q @ S, 2) / norm_a
    if inv_res > tol:
        raise IllConditioned(f"stable subspace not invariant (residual {inv_res:.3e})")
    b = similarity_form(S, lam, tol)
    return SpectralSplit(M, lam, mu, Q.T.copy(), u.reshape(1, -1), b)


@dataclass
class CertificationReport:
    subspace_residual: float
    unstable_residual: float
    similarity_residual: float
    unimodularity_residual: float
    b_min_eigenvalue: float
    b_symmetry_residual: float
    tol: float
    flags: dict = field(default_factory=dict)

    @property
    def passed(self):
        return all(self.flags.values())

    def to_dict(self):
        return {
            "subspace_residual": self.subspace_residual,
            "unstable_residual": self.unstable_residual,
            "similarity_residual": self.similarity_residual,
            "unimodularity_residual": self.unimodularity_residual,
            "b_min_eigenvalue": self.b_min_eigenvalue,
            "b_symmetry_residual": self.b_symmetry_residual,
            "tol": self.tol,
            "flags": dict(self.flags),
            "passed": self.passed,
        }


def certify(split: SpectralSplit, tol=1e-8) -> CertificationReport:
    """Residuals of every defining identity of a split; never raises."""
    A = split.matrix.to_array()
    norm_a = np.linalg.norm(A, 2)
    Q, _ = np.linalg.qr(split.stable_basis.T)
    sub = np.linalg.norm(A @ Q - Q @ (Q.T @ A @ Q), 2) / norm_a
    u = split.unstable_basis.reshape(-1)
    u = u / np.linalg.norm(u)
    unst = np.linalg.norm(A @ u - split.mu * u) / norm_a
    S = split.restriction
    b = np.asarray(split.b, float)
    sim = np.linalg.norm(S.T @ b @ S - split.lam**2 * b) / np.linalg.norm(b)
    uni = abs(abs(split.mu) * split.lam**split.q - 1.0)
    sym = np.linalg.norm(b - b.T) / np.linalg.norm(b)
    bmin = float(np.linalg.eigvalsh(0.5 * (b + b.T))[0])
    flags = {
        "subspace": bool(sub < tol),
        "unstable": bool(unst < tol),
        "similarity": bool(sim < tol),
        "unimodularity": bool(uni < tol),
        "b_positive": bool(bmin > 0),
        "b_symmetric": bool(sym < tol),
        "lambda_range": bool(0.0 < split.lam < 1.0),
    }
    vals = [float(v) for v in (sub, unst, sim, uni, bmin, sym)]
    return CertificationReport(*vals, tol, flags)


def _candidates(q, coeff_bound):
    n = q + 1
    seen = set()
    out = []
    for inner in itertools.product(range(-coeff_bound, coeff_bound + 1), repeat=n - 1):
        for c0 in (-1, 1):
            coeffs = (1, *inner, c0)
            M = companion(coeffs)
            if M.entries not in seen:
                seen.add(M.entries)
                out.append(M)
    if q == 1:
        rng = range(-coeff_bound, coeff_bound + 1)
        for a, b, c, d in itertools.product(rng, repeat=4):
            if abs(a * d - b * c) == 1:
                ent = ((a, b), (c, d))
                if ent not in seen:
                    seen.add(ent)
                    out.append(IntegerMatrix(ent))
    return out


def search_anosov(q, coeff_bound, tol=1e-9, certify_tol=1e-8) -> list[SpectralSplit]:
    """Every certified split among companion matrices (and, for q=1, all 2x2 matrices).

    Companions run over monic degree-(q+1) polynomials with constant term +-1 and
    remaining coefficients in ``[-coeff_bound, coeff_bound]``.  Output is sorted
    lexicographically on the flattened matrix entries.
    """
    if q < 1 or coeff_bound < 1:
        raise ValueError("need q >= 1 and coeff_bound >= 1")
    found = []
    for M in _candidates(q, coeff_bound):
        try:
            split = spectral_split(M, tol)
        except (RejectedSpectrum, NotSimilarity):
            continue
        except IllConditioned as exc:
            log.info("skipping %s: %s", M.entries, exc)
            continue
        if certify(split, certify_tol).passed:
            found.append(split)
    found.sort(key=lambda s: tuple(itertools.chain.from_iterable(s.matrix.entries)))
    return found
