"""Named example manifolds and construction from a ManifoldSpec."""

from __future__ import annotations

from .config import ManifoldSpec
from .errors import ConfigError, SimStructError
from .lattice_search import companion, search_anosov, spectral_split
from .metric_core import FlatTorus, MappingTorus, make_cone

# q = 1, A = [[2, 1], [1, 1]], phi = z^4.
MN_MATRIX = [[2, 1], [1, 1]]
# Companion of z^3 - z - 1; unstable eigenvalue is the plastic number.
PLASTIC_POLY = [1, 0, -1, -1]

PRESET_NAMES = ("mn-q1", "plastic-q2", "flat-torus-3", "cone-sphere-r")


def preset_spec(name, radius=1.0) -> ManifoldSpec:
    """ManifoldSpec for a preset; ``cone-sphere-<r>`` sets the radius, e.g. cone-sphere-2.

    Plain ``cone-sphere`` or ``cone-sphere-r`` takes ``radius`` instead.
    """
    if name == "mn-q1":
        return ManifoldSpec(preset=name, kind="mapping_torus", matrix=MN_MATRIX)
    if name == "plastic-q2":
        return ManifoldSpec(preset=name, kind="mapping_torus", matrix=companion(PLASTIC_POLY).tolist())
    if name == "flat-torus-3":
        return ManifoldSpec(preset=name, kind="flat_torus", dimension=3)
    if name.startswith("cone-sphere") or name.startswith("cone-circle"):
        base = "sphere" if name.startswith("cone-sphere") else "circle"
        tail = name[len("cone-sphere"):].lstrip("-")
        try:
            radius = float(tail) if tail not in ("", "r") else float(radius)
        except ValueError:
            raise ConfigError(f"cannot read a radius from {name!r}", "manifold.preset") from None
        return ManifoldSpec(preset=name, kind="cone", base=base, radius=radius)
    raise ConfigError(f"unknown preset {name!r} (known: {', '.join(PRESET_NAMES)})", "manifold.preset")


def resolve_spec(spec: ManifoldSpec) -> ManifoldSpec:
    """Fill a spec from its preset; explicit Fourier coefficients are kept."""
    if spec.preset is None:
        return spec
    base = preset_spec(spec.preset, spec.radius)
    if spec.fourier:
        base.fourier = [list(p) for p in spec.fourier]
    base.ratio = spec.ratio
    return base


def build_field(spec: ManifoldSpec, tol=1e-9):
    spec = resolve_spec(spec)
    if spec.kind == "mapping_torus":
        if spec.matrix is not None:
            split = spectral_split(spec.matrix, tol)
        elif spec.q is not None and spec.search_bound is not None:
            found = search_anosov(spec.q, spec.search_bound, tol)
            if not found:
                raise SimStructError(f"search(q={spec.q}, bound={spec.search_bound}) found no matrix")
            split = found[0]
        else:
            raise ConfigError("mapping_torus needs a matrix, or q with search_bound", "manifold.matrix")
        return MappingTorus(split, [tuple(p) for p in spec.fourier])
    if spec.kind == "cone":
        return make_cone(spec.base, spec.radius, spec.ratio)
    if spec.kind == "flat_torus":
        return FlatTorus(spec.dimension)
    raise ConfigError(f"unknown kind {spec.kind!r}", "manifold.kind")


def field_from_preset(name, **overrides):
    spec = preset_spec(name)
    for k, v in overrides.items():
        setattr(spec, k, v)
    return build_field(spec)
