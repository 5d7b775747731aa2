"""Command-line entry point: ``simstruct <command> [options]``."""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path

from .config import OPERATIONS, ExperimentConfig, from_dict, load_config, validate
from .errors import SimStructError, ToleranceAmbiguity
from .pipelines import dumps, run

log = logging.getLogger("simstruct")

EXIT_OK, EXIT_ERROR, EXIT_AMBIGUOUS = 0, 1, 2


def _floats(text):
    return [float(x) for x in text.split(",") if x.strip()]


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML or JSON experiment config")
    common.add_argument("--out", help="directory for JSON/CSV outputs")
    common.add_argument("--seed", type=int)
    common.add_argument("--json", action="store_true", help="print the result JSON on stdout")
    common.add_argument("--threads", type=int, help="cap on worker threads")
    common.add_argument("--example", help="preset: mn-q1, plastic-q2, flat-torus-3, cone-sphere-<r>")
    common.add_argument("--fourier", type=json.loads, help='JSON list of [cos, sin] pairs, e.g. "[[0.1, 0]]"')
    common.add_argument("--point", type=_floats, help="comma-separated chart coordinates")
    common.add_argument("--t-max", type=float, dest="t_max")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="simstruct", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    cmds = {name: sub.add_parser(name, parents=[common]) for name in OPERATIONS}
    cmds["search"].add_argument("--q", type=int)
    cmds["search"].add_argument("--bound", type=int)
    cmds["curvature"].add_argument("--z", type=_floats, help="comma-separated z values")
    cmds["geodesic"].add_argument("--direction", type=_floats)
    cmds["lifetime"].add_argument("--angles", type=_floats)
    cmds["mu"].add_argument("--n-samples", type=int, dest="n_samples")
    for name in ("holonomy", "classify"):
        cmds[name].add_argument("--scales", type=_floats)
        cmds[name].add_argument("--n-loops", type=int, dest="n_loops")
    cmds["pseudogroup"].add_argument("--chart-size", type=float, dest="chart_size")
    cmds["pseudogroup"].add_argument("--word-length", type=int, dest="word_length")
    cmds["pseudogroup"].add_argument("--m", type=float)
    cmds["closures"].add_argument("--n-points", type=int, dest="n_points")
    return parser


def config_from_args(args) -> ExperimentConfig:
    """Config file first, then explicit flags on top; the result is validated."""
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    data = cfg.to_dict()
    data["operation"]["name"] = args.command
    if args.example:
        data["manifold"] = dataclasses.asdict(type(cfg.manifold)(preset=args.example))
    elif data["manifold"]["preset"] is None and data["manifold"]["matrix"] is None and data["manifold"]["kind"] == "mapping_torus" and data["manifold"]["search_bound"] is None:
        data["manifold"]["preset"] = "mn-q1"
    a = vars(args)
    if a.get("fourier") is not None:
        data["manifold"]["fourier"] = a["fourier"]
    for key in ("q", "bound", "z", "point", "direction", "angles"):
        if a.get(key) is not None:
            data["operation"][key] = a[key]
    for key in ("seed", "threads", "t_max", "n_samples", "scales", "n_loops", "chart_size", "word_length", "m", "n_points"):
        if a.get(key) is not None:
            data["numeric"][key] = a[key]
    if args.out:
        data["output"]["dir"] = args.out
    if args.json:
        data["output"]["json"] = True
    cfg = from_dict(data)
    return validate(cfg)


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = config_from_args(args)
        log.info("config %s seed %d", cfg.digest()[:12], cfg.numeric.seed)
        doc = run(cfg, cfg.output.dir)
    except ToleranceAmbiguity as exc:
        print(f"verdict withheld: {exc}", file=sys.stderr)
        return EXIT_AMBIGUOUS
    except (SimStructError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    text = dumps(doc)
    if cfg.output.dir:
        path = Path(cfg.output.dir) / f"{cfg.operation.name}.json"
        path.write_text(text + "\n")
        log.info("wrote %s", path)
    if cfg.output.json or not cfg.output.dir:
        print(text)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
