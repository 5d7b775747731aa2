"""Experiment configuration: dataclasses, YAML/JSON loading and validation."""

from __future__ import annotations

import dataclasses
import hashlib
import json
import re
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .errors import ConfigError

OPERATIONS = (
    "search",
    "build",
    "curvature",
    "geodesic",
    "lifetime",
    "mu",
    "holonomy",
    "classify",
    "pseudogroup",
    "closures",
)
ALIASES = {"curvature-grid": "curvature", "lifetimes": "lifetime", "pseudogroup-report": "pseudogroup"}
KINDS = ("mapping_torus", "cone", "flat_torus")


class _Loader(yaml.SafeLoader):
    """SafeLoader that also reads exponent floats without a dot, such as 1e-9."""


_Loader.add_implicit_resolver(
    "tag:yaml.org,2002:float",
    re.compile(
        r"""^(?:[-+]?(?:[0-9][0-9_]*)\.[0-9_]*(?:[eE][-+]?[0-9]+)?
        |[-+]?(?:[0-9][0-9_]*)(?:[eE][-+]?[0-9]+)
        |\.[0-9_]+(?:[eE][-+]?[0-9]+)?
        |[-+]?\.(?:inf|Inf|INF)
        |\.(?:nan|NaN|NAN))$""",
        re.X,
    ),
    list("-+0123456789."),
)


@dataclass
class ManifoldSpec:
    preset: str | None = None
    kind: str = "mapping_torus"
    matrix: list | None = None
    # Source of lam when no matrix is given: first certified result of search(q, search_bound).
    q: int | None = None
    search_bound: int | None = None
    fourier: list = field(default_factory=list)
    base: str = "sphere"
    radius: float = 1.0
    ratio: float = 0.5
    dimension: int = 3


@dataclass
class OperationSpec:
    name: str = "classify"
    q: int = 1
    bound: int = 3
    z: list = field(default_factory=lambda: [0.5, 1.0, 2.0])
    point: list | None = None
    direction: list | None = None
    angles: list = field(default_factory=list)


@dataclass
class NumericOptions:
    seed: int = 0
    tol: float = 1e-9
    certify_tol: float = 1e-8
    holonomy_tol: float = 1e-5
    rtol: float = 1e-10
    atol: float = 1e-12
    t_max: float = 50.0
    n_samples: int = 64
    n_loops: int = 3
    scales: list = field(default_factory=lambda: [0.1, 0.05])
    chart_size: float = 0.25
    word_length: int = 5
    m: float = 10.0
    n_points: int = 100_000
    threads: int = 1


@dataclass
class OutputSpec:
    dir: str | None = None
    json: bool = False


@dataclass
class ExperimentConfig:
    manifold: ManifoldSpec = field(default_factory=ManifoldSpec)
    operation: OperationSpec = field(default_factory=OperationSpec)
    numeric: NumericOptions = field(default_factory=NumericOptions)
    output: OutputSpec = field(default_factory=OutputSpec)

    def to_dict(self):
        return dataclasses.asdict(self)

    def digest(self):
        """sha256 of the canonical JSON of the resolved config."""
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    def dump(self, path):
        path = Path(path)
        data = self.to_dict()
        with open(path, "w") as fh:
            if path.suffix == ".json":
                json.dump(data, fh, indent=2, sort_keys=True)
            else:
                yaml.safe_dump(data, fh, sort_keys=True)


SECTIONS = {
    "manifold": ManifoldSpec,
    "operation": OperationSpec,
    "numeric": NumericOptions,
    "output": OutputSpec,
}


def _line_map(text):
    """Map dotted key paths to 1-based line numbers of a YAML (or JSON) document."""
    lines = {}
    try:
        root = yaml.compose(text, Loader=_Loader)
    except yaml.YAMLError:
        return lines

    def walk(node, prefix):
        if isinstance(node, yaml.MappingNode):
            for k, v in node.value:
                key = f"{prefix}{k.value}"
                lines[key] = k.start_mark.line + 1
                walk(v, key + ".")

    walk(root, "")
    return lines


def _err(msg, path, lines):
    where = f"{path} (line {lines[path]})" if path in lines else path
    return ConfigError(msg, where)


def from_dict(data, lines=None) -> ExperimentConfig:
    lines = lines or {}
    if not isinstance(data, dict):
        raise ConfigError("top level must be a mapping", "<root>")
    kwargs = {}
    for key, value in data.items():
        if key not in SECTIONS:
            raise _err(f"unknown key (expected one of {sorted(SECTIONS)})", key, lines)
        cls = SECTIONS[key]
        if value is None:
            value = {}
        if not isinstance(value, dict):
            raise _err("must be a mapping", key, lines)
        names = {f.name for f in dataclasses.fields(cls)}
        for k in value:
            if k not in names:
                raise _err("unknown key", f"{key}.{k}", lines)
        kwargs[key] = cls(**value)
    cfg = ExperimentConfig(**kwargs)
    validate(cfg, lines)
    return cfg


def _positive(cfg_section, name, section, lines, integer=False):
    v = getattr(cfg_section, name)
    path = f"{section}.{name}"
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise _err(f"must be a number (got {v!r})", path, lines)
    if integer and int(v) != v:
        raise _err(f"must be an integer (got {v!r})", path, lines)
    if not v > 0:
        raise _err(f"must be positive (got {v!r})", path, lines)


def validate(cfg: ExperimentConfig, lines=None):
    lines = lines or {}
    op = cfg.operation
    op.name = ALIASES.get(op.name, op.name)
    if op.name not in OPERATIONS:
        raise _err(f"unknown operation {op.name!r}", "operation.name", lines)
    for name in ("tol", "certify_tol", "holonomy_tol", "rtol", "atol", "t_max", "chart_size", "m"):
        _positive(cfg.numeric, name, "numeric", lines)
    for name in ("n_samples", "n_loops", "word_length", "n_points", "threads"):
        _positive(cfg.numeric, name, "numeric", lines, integer=True)
    if not cfg.numeric.scales or any(not s > 0 for s in cfg.numeric.scales):
        raise _err("must be a nonempty list of positive numbers", "numeric.scales", lines)
    if isinstance(cfg.numeric.seed, bool) or not isinstance(cfg.numeric.seed, int) or cfg.numeric.seed < 0:
        raise _err("must be a nonnegative integer", "numeric.seed", lines)
    if cfg.numeric.m <= 1:
        raise _err("must exceed 1", "numeric.m", lines)
    man = cfg.manifold
    if man.kind not in KINDS:
        raise _err(f"unknown kind {man.kind!r} (expected one of {KINDS})", "manifold.kind", lines)
    if man.matrix is not None:
        if not isinstance(man.matrix, list) or not all(isinstance(r, list) for r in man.matrix):
            raise _err("must be a list of integer rows", "manifold.matrix", lines)
        if any(isinstance(x, bool) or int(x) != x for r in man.matrix for x in r):
            raise _err("entries must be integers", "manifold.matrix", lines)
    for pair in man.fourier:
        if not isinstance(pair, (list, tuple)) or len(pair) != 2:
            raise _err("must be a list of [cos, sin] pairs", "manifold.fourier", lines)
    _positive(man, "radius", "manifold", lines)
    if not 0 < man.ratio < 1:
        raise _err("must lie in (0, 1)", "manifold.ratio", lines)
    if op.q < 1 or op.bound < 1:
        raise _err("q and bound must be >= 1", "operation.q", lines)
    return cfg


def load_config(path) -> ExperimentConfig:
    """Load YAML or JSON (JSON is valid YAML); errors name the field and line."""
    text = Path(path).read_text()
    try:
        data = yaml.load(text, Loader=_Loader)
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse: {exc}", str(path)) from exc
    return from_dict(data if data is not None else {}, _line_map(text))
