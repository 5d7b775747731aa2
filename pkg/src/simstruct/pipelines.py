"""Experiment pipelines shared by the CLI, the scripts and the acceptance tests."""

from __future__ import annotations

import datetime as _dt
import json
import math
from pathlib import Path

import numpy as np

from . import __version__
from .config import ExperimentConfig
from .holonomy import classify, default_base_points, invariant_split, sample_holonomy
from .lattice_search import certify, search_anosov
from .leaf_closure import closure_analyze, write_orbit_csv, unstable_projections
from .metric_core import (
    MappingTorus,
    curvature_samples,
    deck_normal_form_residual,
    deck_pullback_residual,
    free_action_check,
    sectional,
    write_csv,
)
from .presets import build_field
from .pseudogroup import build_cover, compose_tracked, enumerate_words, equicontinuity_report
from .transport import integrate_geodesic, lifetime, mixed_direction, mu_estimate, unit_vector

OUTPUT_VERSION = 1


def jsonable(obj):
    """Plain-JSON copy: numpy scalars and arrays unwrapped, non-finite floats as strings."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else str(x)
    return obj


def dumps(obj):
    return json.dumps(jsonable(obj), indent=2, sort_keys=True)


def envelope(cfg: ExperimentConfig, result):
    return {
        "version": OUTPUT_VERSION,
        "package_version": __version__,
        "command": cfg.operation.name,
        "seed": cfg.numeric.seed,
        "config": cfg.to_dict(),
        "config_hash": cfg.digest(),
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(),
        "result": result,
    }


def strip_timestamp(doc):
    return {k: v for k, v in doc.items() if k != "timestamp"}


def _point(cfg, field):
    if cfg.operation.point is not None:
        return np.asarray(cfg.operation.point, float)
    if isinstance(field, MappingTorus):
        return np.concatenate([np.zeros(field.q + 1), [1.0]])
    return default_base_points(field, 1, cfg.numeric.seed)[0]


def run_search(cfg, out_dir=None):
    op, nu = cfg.operation, cfg.numeric
    found = search_anosov(op.q, op.bound, nu.tol, nu.certify_tol)
    rows = [
        {
            "matrix": s.matrix.tolist(),
            "lam": s.lam,
            "mu": s.mu,
            "certificate": certify(s, nu.certify_tol).to_dict(),
        }
        for s in found
    ]
    return {"q": op.q, "bound": op.bound, "count": len(rows), "results": rows}


def run_build(cfg, out_dir=None):
    field = build_field(cfg.manifold, cfg.numeric.tol)
    rng = np.random.default_rng(cfg.numeric.seed)
    out = {"field": field.describe()}
    if isinstance(field, MappingTorus):
        pts = np.column_stack([rng.uniform(-2, 2, (1000, field.q + 1)), rng.uniform(0.05, 5, 1000)])
        res = [deck_pullback_residual(field, field.deck.phi_map, p) for p in pts]
        lat = [deck_pullback_residual(field, t, p) for t in field.deck.lattice for p in pts[:100]]
        out.update(
            split=field.split.to_dict(),
            certificate=certify(field.split, cfg.numeric.certify_tol).to_dict(),
            pullback_residual_max=max(res),
            lattice_pullback_residual_max=max(lat),
            deck_normal_form_residual=deck_normal_form_residual(field),
            free_action=free_action_check(field, pts[:200]).__dict__,
        )
    return out


def run_curvature(cfg, out_dir=None):
    field = build_field(cfg.manifold, cfg.numeric.tol)
    zs = cfg.operation.z
    if isinstance(field, MappingTorus):
        rows = curvature_samples(field, zs)
    else:
        base = _point(cfg, field)
        b = field.boundary_index if field.boundary_index is not None else field.dim - 1
        rows = []
        for z in zs:
            p = base.copy()
            p[b] = z
            row = {"z": float(z), "K": sectional(field, p, 0, 1)}
            if b != 1:
                row["K_radial"] = sectional(field, p, 0, b)
            rows.append(row)
    if out_dir:
        write_csv(Path(out_dir) / "curvature.csv", rows)
    return {"rows": rows}


def run_geodesic(cfg, out_dir=None):
    field = build_field(cfg.manifold, cfg.numeric.tol)
    x = _point(cfg, field)
    if cfg.operation.direction is not None:
        v = np.asarray(cfg.operation.direction, float)
    else:
        v = np.zeros(field.dim)
        v[field.boundary_index if field.boundary_index is not None else 0] = -1.0
    v = unit_vector(field, x, v)
    rec = integrate_geodesic(field, x, v, cfg.numeric.t_max, cfg.numeric.rtol, cfg.numeric.atol)
    if out_dir:
        rec.write_csv(Path(out_dir) / "geodesic.csv")
    return {"point": x, "direction": v, **rec.summary()}


def run_lifetime(cfg, out_dir=None):
    field = build_field(cfg.manifold, cfg.numeric.tol)
    x = _point(cfg, field)
    angles = cfg.operation.angles or [math.pi / 2, math.pi / 4, math.pi / 6, math.pi / 12]
    E = np.diag(1 / np.sqrt(field.diag(x)))
    rows = []
    for a in angles:
        L = lifetime(field, x, E @ mixed_direction(field, a), cfg.numeric.t_max, rtol=cfg.numeric.rtol, atol=cfg.numeric.atol)
        rows.append(
            {
                "angle": float(a),
                "lifetime": L.to_json(),
                "lifetime_times_sin": (L.value * math.sin(a)) if L.finite else None,
            }
        )
    if out_dir:
        write_csv(Path(out_dir) / "lifetimes.csv", rows)
    return {"point": x, "rows": rows}


def run_mu(cfg, out_dir=None):
    field = build_field(cfg.manifold, cfg.numeric.tol)
    x = _point(cfg, field)
    nu = cfg.numeric
    est = mu_estimate(field, x, nu.n_samples, nu.t_max, nu.seed, nu.threads, rtol=nu.rtol, atol=nu.atol)
    return {"point": x, **est.to_dict()}


def run_holonomy(cfg, out_dir=None):
    field = build_field(cfg.manifold, cfg.numeric.tol)
    x = _point(cfg, field)
    nu = cfg.numeric
    sample = sample_holonomy(field, x, nu.n_loops, tuple(nu.scales), nu.seed, nu.threads)
    split = invariant_split(sample.matrices, nu.holonomy_tol, nu.seed)
    return {
        **sample.to_dict(),
        "matrices": [np.round(H, 14) for H in sample.matrices],
        "blocks": [{"kind": b.kind, "dim": b.dim, "basis": np.round(b.basis, 12)} for b in split.all_blocks()],
    }


def run_classify(cfg, out_dir=None):
    field = build_field(cfg.manifold, cfg.numeric.tol)
    nu = cfg.numeric
    pts = [np.asarray(cfg.operation.point, float)] if cfg.operation.point is not None else None
    return classify(field, pts, tuple(nu.scales), nu.n_loops, nu.seed, nu.holonomy_tol, nu.threads).to_dict()


def run_pseudogroup(cfg, out_dir=None):
    field = build_field(cfg.manifold, cfg.numeric.tol)
    nu = cfg.numeric
    cover = build_cover(field, nu.chart_size)
    report = equicontinuity_report(cover, nu.word_length, nu.m, nu.seed)
    words = enumerate_words(cover, nu.word_length, seed=nu.seed)
    viol = 0
    for k, w in enumerate(words):
        viol += not compose_tracked(cover, w, 200, seed=nu.seed + k).ok
    return {
        "cover": cover.summary(),
        "epsilon_property": cover.epsilon_property(10_000, nu.seed),
        "domain_check": {"words": len(words), "words_with_violations": viol},
        "equicontinuity": report,
    }


def run_closures(cfg, out_dir=None):
    field = build_field(cfg.manifold, cfg.numeric.tol)
    x = _point(cfg, field)
    rep = closure_analyze(field, x, cfg.numeric.n_points, cfg.numeric.seed, cfg.numeric.chart_size)
    if out_dir:
        write_orbit_csv(Path(out_dir) / "orbit.csv", unstable_projections(field.split, cfg.numeric.n_points))
    return rep.to_dict()


PIPELINES = {
    "search": run_search,
    "build": run_build,
    "curvature": run_curvature,
    "geodesic": run_geodesic,
    "lifetime": run_lifetime,
    "mu": run_mu,
    "holonomy": run_holonomy,
    "classify": run_classify,
    "pseudogroup": run_pseudogroup,
    "closures": run_closures,
}


def run(cfg: ExperimentConfig, out_dir=None):
    """Run the configured pipeline; returns the output envelope (a plain dict)."""
    if out_dir:
        Path(out_dir).mkdir(parents=True, exist_ok=True)
    result = PIPELINES[cfg.operation.name](cfg, out_dir)
    return jsonable(envelope(cfg, result))
