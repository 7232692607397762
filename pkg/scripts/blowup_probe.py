"""Run the corner blow-up probe on the critical line and print the report.

The default horizon is short; pass --t-end to go further (the step size is
pinned near 2e-6 by the drift CFL bound, so t = 10 takes hours at 128x128).
"""
import argparse
import logging
import sys
import time

from chemotax.cli import format_report
from chemotax.grid import DomainSpec
from chemotax.model import (ModelParams, build_gaussian_bump, build_symmetric_copy,
                            derive_params, initial_state)
from chemotax.regimes import check_b4
from chemotax.solver import SolverConfig, run


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--mass", type=float, default=13.0)
    ap.add_argument("--n", type=int, default=128)
    ap.add_argument("--width", type=float, default=0.05)
    ap.add_argument("--t-end", type=float, default=0.01)
    ap.add_argument("--every", type=int, default=200)
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(message)s")

    dom = DomainSpec(1.0, 1.0, args.n, args.n)
    p = ModelParams(1.0, 1.0)
    u0 = build_gaussian_bump(dom, args.mass, (0.0, 0.0), args.width)
    w0, _ = build_symmetric_copy(u0, u0, p)
    s0 = initial_state(u0, w0, dom, p)
    on_line, blowup = check_b4(p, args.mass, args.mass, derive_params(u0, w0, p, dom))
    print(f"on blow-up line: {on_line}, supercritical mass: {blowup}")
    print(f"L-infinity ceiling m/h^2 = {args.mass / (dom.hx * dom.hy):.4g}, "
          f"initial peak {u0.max():.4g}")

    cfg = SolverConfig(t_end=args.t_end, dt_init=1e-5, dt_min=1e-9, dt_max=1e-3)
    start = time.perf_counter()
    res = run(s0, p, dom, cfg, args.every)
    print(format_report(res.report))
    print(f"growth factor {res.report.peak_linf_u / u0.max():.4g}, "
          f"wall time {time.perf_counter() - start:.1f} s")
    return 0 if res.report.status != "solver_failure" else 1


if __name__ == "__main__":
    sys.exit(main())
