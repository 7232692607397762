"""Compare fitted decay rates of G (tau = 0) and H (tau > 0) with the closed forms."""
import argparse
import sys

from chemotax.constants import OptConfig, estimate_k
from chemotax.functionals import above_floor, fit_exponential_rate, rate_report
from chemotax.grid import DomainSpec
from chemotax.model import (ModelParams, build_cosine_perturbation, build_gaussian_bump,
                            derive_params, initial_state)
from chemotax.solver import SolverConfig, run


def fitted(rows, attr):
    t, y = above_floor([r.t for r in rows], [getattr(r, attr) for r in rows])
    return fit_exponential_rate(t, y)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=64)
    ap.add_argument("--t-end", type=float, default=20.0)
    args = ap.parse_args(argv)
    dom = DomainSpec(1.0, 1.0, args.n, args.n)
    k = estimate_k(dom, OptConfig(max_iter=300)).value
    print(f"k estimate (lower bound): {k:.6g}")

    pe = ModelParams(1.0, 1.0, 0.3)
    u0 = build_gaussian_bump(dom, 1.0, (0.3, 0.4), 0.15)
    w0 = build_cosine_perturbation(dom, 1.0, 0.5, ((1, 1),))
    dp = derive_params(u0, w0, pe, dom).with_constants(k=k, source="estimate")
    res = run(initial_state(u0, w0, dom, pe), pe, dom,
              SolverConfig(t_end=args.t_end, dt_max=4e-3), 10, dp=dp)
    rate, r2 = fitted(res.rows, "G")
    print(f"tau=0: mu = {rate_report(dp, pe).mu:.4g}, fitted G rate {rate:.4g} (R^2 {r2:.4f})")

    pp = ModelParams(1.0, 1.0, 0.0, 1.0, 1.0)
    u0 = build_cosine_perturbation(dom, 0.5, 0.5, ((1, 0),))
    w0 = build_cosine_perturbation(dom, 0.5, 0.5, ((0, 1),))
    dp = derive_params(u0, w0, pp, dom).with_constants(k=k, source="estimate")
    res = run(initial_state(u0, w0, dom, pp), pp, dom,
              SolverConfig(t_end=args.t_end, dt_max=1e-2), 2, dp=dp)
    rate, r2 = fitted(res.rows, "H")
    print(f"tau=1: delta = {rate_report(dp, pp).delta:.4g}, fitted H rate {rate:.4g} "
          f"(R^2 {r2:.4f})")
    return 0


if __name__ == "__main__":
    sys.exit(main())
