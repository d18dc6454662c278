"""Mesh-refinement sweep of the extension route against the exact multiplier.

    python3 scripts/convergence_sweep.py --gamma 0.1 0.25 0.4 --kmag 1 2 3 --out results/sweep.csv
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from fraclap import make_params
from fraclap.extension import convergence_csv, convergence_study


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--gamma", type=float, nargs="+", default=[0.1, 0.25, 0.4])
    ap.add_argument("--n", type=int, default=1)
    ap.add_argument("--kmag", type=float, nargs="+", default=[1.0, 2.0, 3.0])
    ap.add_argument("--nodes", type=int, nargs="+", default=[512, 1024, 2048, 4096, 8192])
    ap.add_argument("--far-field", type=float, default=8.0)
    ap.add_argument("--grading", type=float, default=None)
    ap.add_argument("--out", type=Path, default=None, help="CSV path (stdout if omitted)")
    args = ap.parse_args(argv)

    rows = []
    for g in args.gamma:
        params = make_params(args.n, g)
        for k in args.kmag:
            rows += convergence_study(params, k, args.nodes, args.far_field, args.grading)
    text = convergence_csv(sorted(rows, key=lambda r: (r.gamma, r.kmag, r.N)))
    if args.out is None:
        sys.stdout.write(text)
    else:
        args.out.parent.mkdir(parents=True, exist_ok=True)
        args.out.write_text(text)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
