"""(y, z)-plane curvature of a mapping torus on a log-spaced z grid, as CSV.

Compares the Riemann-tensor value with the closed form -(sqrt phi)''/sqrt phi.

    python scripts/curvature_profile.py --fourier "[[0.15, -0.05]]" > curvature.csv
"""

import argparse
import json
import sys

import numpy as np

from simstruct.metric_core import curvature_samples
from simstruct.presets import field_from_preset


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--example", default="mn-q1", choices=["mn-q1", "plastic-q2"])
    ap.add_argument("--fourier", type=json.loads, default=[])
    ap.add_argument("--zmin", type=float, default=0.1)
    ap.add_argument("--zmax", type=float, default=10.0)
    ap.add_argument("--n", type=int, default=41)
    args = ap.parse_args(argv)
    field = field_from_preset(args.example, fourier=args.fourier)
    zs = np.geomspace(args.zmin, args.zmax, args.n)
    rows = curvature_samples(field, zs)
    sys.stdout.write("z,K,K_closed_form,z2K\n")
    for r in rows:
        sys.stdout.write(f"{r['z']!r},{r['K']!r},{r['K_closed_form']!r},{r['z'] ** 2 * r['K']!r}\n")


if __name__ == "__main__":
    main()
