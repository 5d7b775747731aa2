"""Run every pipeline on the built-in presets and write JSON/CSV outputs.

    python scripts/run_experiments.py --out results --seed 0
"""

import argparse
import logging
import time
from pathlib import Path

from simstruct.config import from_dict
from simstruct.pipelines import dumps, run

log = logging.getLogger("run_experiments")

EXPERIMENTS = {
    "search-q1": {"operation": {"name": "search", "q": 1, "bound": 3}},
    "search-q2": {"operation": {"name": "search", "q": 2, "bound": 2}},
    "search-q3": {"operation": {"name": "search", "q": 3, "bound": 5}},
    "build-mn": {"manifold": {"preset": "mn-q1"}, "operation": {"name": "build"}},
    "curvature-mn": {
        "manifold": {"preset": "mn-q1"},
        "operation": {"name": "curvature", "z": [0.25, 0.5, 1.0, 2.0, 4.0]},
    },
    "curvature-cone2": {
        "manifold": {"preset": "cone-sphere-2"},
        "operation": {"name": "curvature", "z": [0.5, 1.0, 1.5]},
    },
    "lifetime-mn": {"manifold": {"preset": "mn-q1"}, "operation": {"name": "lifetime"}},
    "mu-mn": {"manifold": {"preset": "mn-q1"}, "operation": {"name": "mu"}, "numeric": {"t_max": 30}},
    "classify-flat": {"manifold": {"preset": "flat-torus-3"}, "operation": {"name": "classify"}},
    "classify-mn": {"manifold": {"preset": "mn-q1"}, "operation": {"name": "classify"}},
    "classify-plastic": {"manifold": {"preset": "plastic-q2"}, "operation": {"name": "classify"}},
    "classify-cone1": {"manifold": {"preset": "cone-sphere-1"}, "operation": {"name": "classify"}},
    "classify-cone2": {"manifold": {"preset": "cone-sphere-2"}, "operation": {"name": "classify"}},
    "pseudogroup-mn": {
        "manifold": {"preset": "mn-q1"},
        "operation": {"name": "pseudogroup"},
        "numeric": {"word_length": 6},
    },
    "closures-mn": {"manifold": {"preset": "mn-q1"}, "operation": {"name": "closures"}},
    "closures-plastic": {"manifold": {"preset": "plastic-q2"}, "operation": {"name": "closures"}},
}


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--out", default="results")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--only", nargs="*", choices=sorted(EXPERIMENTS), help="subset to run")
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(message)s")
    for name in args.only or EXPERIMENTS:
        data = {k: dict(v) for k, v in EXPERIMENTS[name].items()}
        data.setdefault("numeric", {})["seed"] = args.seed
        out = Path(args.out) / name
        t0 = time.perf_counter()
        doc = run(from_dict(data), out)
        (out / f"{doc['command']}.json").write_text(dumps(doc) + "\n")
        log.info("%-18s %6.1f s  -> %s", name, time.perf_counter() - t0, out)


if __name__ == "__main__":
    main()
