"""Lifetime of mixed directions cos(t) X + sin(t) (-d/dz) against t, as CSV.

The scaling law predicts lifetime * sin(t) = z0 for every t.

    python scripts/lifetime_table.py --z0 1.0 --n 12 > lifetimes.csv
"""

import argparse
import csv
import math
import sys

import numpy as np

from simstruct.metric_core import orthonormal_frame
from simstruct.presets import field_from_preset
from simstruct.transport import lifetime, mixed_direction


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--example", default="mn-q1")
    ap.add_argument("--z0", type=float, default=1.0)
    ap.add_argument("--n", type=int, default=12, help="angles pi/2 / k for k = 1..n")
    ap.add_argument("--t-max", type=float, default=100.0)
    args = ap.parse_args(argv)
    field = field_from_preset(args.example)
    x0 = np.zeros(field.dim)
    x0[field.boundary_index] = args.z0
    E = orthonormal_frame(field, x0)
    w = csv.writer(sys.stdout)
    w.writerow(["angle", "lifetime", "lifetime_times_sin"])
    for k in range(1, args.n + 1):
        t = math.pi / (2 * k)
        L = lifetime(field, x0, E @ mixed_direction(field, t), args.t_max)
        w.writerow([t, L.to_json(), L.value * math.sin(t) if L.finite else ""])


if __name__ == "__main__":
    main()
