"""Command-line entry point: ``chemotax <subcommand> ...``.

Exit codes: 0 completed, 2 blow-up indicated, 1 solver failure,
64 configuration error, 65 missing data columns.
"""
from __future__ import annotations

import argparse
import csv
import io
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import fields
from pathlib import Path

import numpy as np

from .config import RunConfig, load_config
from .constants import (estimate_cgn, estimate_k, k_convex_lower_reference, neumann_lambda1,
                        pistar, poincare_l2_oracle)
from .errors import ConfigError, FitUndefined
from .functionals import DiagnosticsRow, above_floor, fit_exponential_rate
from .model import derive_params
from .regimes import classify, format_verdict
from .snapshot import write_snapshot
from .solver import BlowupReport, RunResult, run

EXIT_OK, EXIT_FAIL, EXIT_BLOWUP, EXIT_CONFIG, EXIT_DATA = 0, 1, 2, 64, 65
STATUS_EXIT = {"completed": EXIT_OK, "blowup_indicated": EXIT_BLOWUP, "solver_failure": EXIT_FAIL}


def fmt(x) -> str:
    """Locale-independent shortest round-trip float text; empty for absent."""
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def write_rows(rows: list[DiagnosticsRow], out) -> None:
    w = csv.writer(out, lineterminator="\n")
    w.writerow(DiagnosticsRow.columns())
    for r in rows:
        w.writerow([fmt(v) for v in r.values()])


def format_report(rep: BlowupReport) -> str:
    lines = ["[BlowupReport]"]
    for f in fields(rep):
        val = getattr(rep, f.name)
        lines.append(f"{f.name} = {val if isinstance(val, str) else fmt(val)}")
    return "\n".join(lines)


def derived_for(cfg: RunConfig, state):
    """Derived parameters with user constants, topped up by estimates if asked."""
    dp = derive_params(state.u, state.w, cfg.params, cfg.domain)
    dp = dp.with_constants(k=cfg.k, cgn=cfg.cgn, source="user")
    if cfg.estimate_constants:
        k = None if cfg.k is not None else estimate_k(cfg.domain, cfg.opt).value
        cgn = None if cfg.cgn is not None else estimate_cgn(cfg.domain, cfg.opt).value ** 0.25
        dp = dp.with_constants(k=k, cgn=cgn, source="estimate")
    return dp


def simulate(cfg: RunConfig) -> RunResult:
    state0 = cfg.initial_state()
    dp = derived_for(cfg, state0)
    return run(state0, cfg.params, cfg.domain, cfg.solver, cfg.diagnostics_every, dp=dp)


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    res = simulate(cfg)
    if cfg.csv_path is not None:
        with open(cfg.csv_path, "w", newline="") as fh:
            write_rows(res.rows, fh)
    else:
        write_rows(res.rows, sys.stdout)
    if cfg.snapshot_path is not None:
        write_snapshot(cfg.snapshot_path, res.state, cfg.domain.hx, cfg.domain.hy, cfg.params)
    report = format_report(res.report)
    if cfg.report_path is not None:
        Path(cfg.report_path).write_text(report + "\n")
    print(report, file=sys.stdout if cfg.csv_path is not None else sys.stderr)
    return STATUS_EXIT[res.report.status]


def cmd_probe(args) -> int:
    cfg = load_config(args.config)
    res = simulate(cfg)
    print(format_report(res.report))
    return STATUS_EXIT[res.report.status]


def cmd_classify(args) -> int:
    cfg = load_config(args.config)
    state0 = cfg.initial_state()
    v = classify(cfg.params, derived_for(cfg, state0))
    print(format_verdict(v))
    print("record " + " ".join(f"{k}={fmt(x) if not isinstance(x, str) else x}"
                               for k, x in v.as_record().items()))
    return EXIT_OK


def cmd_constants(args) -> int:
    cfg = load_config(args.config)
    dom, opt = cfg.domain, cfg.opt
    k = estimate_k(dom, opt)
    g = estimate_cgn(dom, opt)
    lam = poincare_l2_oracle(dom, opt)
    rows = [
        ("pi*", pistar(dom), "exact", "4*pi (non-ball domain)"),
        ("k", k.value, k.bound_direction, f"4 d^2/pi^2 = {fmt(k_convex_lower_reference(dom))}"),
        ("C_GN", g.value ** 0.25, g.bound_direction, ""),
        ("lambda1 (L2 Poincare)", lam, "upper", f"pi^2/max(Lx,Ly)^2 = {fmt(neumann_lambda1(dom))}"),
    ]
    print(f"{'constant':<24}{'estimate':>24}  {'bound':<7}reference")
    for name, val, bound, ref in rows:
        print(f"{name:<24}{fmt(val):>24}  {bound:<7}{ref}")
    return EXIT_OK


def parse_grid(spec: str) -> dict[str, np.ndarray]:
    out = {}
    for part in spec.split(","):
        name, _, rng = part.partition("=")
        name = name.strip()
        if name not in ("m1", "m2"):
            raise ConfigError(f"--grid: unknown axis {name!r}")
        try:
            a, b, n = rng.split(":")
            n = int(n)
            if n < 1:
                raise ValueError
            out[name] = np.linspace(float(a), float(b), n)
        except ValueError:
            raise ConfigError(f"--grid: cannot parse {part!r}, expected name=a:b:n") from None
    return out


def point_seed(base: int, index: int) -> int:
    return int(np.random.SeedSequence([base, index]).generate_state(1)[0])


def _sweep_point(job):
    cfg, index, m1, m2, base_seed = job
    rec = {"m1": m1, "m2": m2, "predicted_b1": None, "predicted_b3": None,
           "predicted_b4": None, "observed_status": "error", "fitted_rate": None}
    try:
        pcfg = cfg.with_masses(m1, m2, seed_offset=point_seed(base_seed, index) % (2**31))
        state0 = pcfg.initial_state()
        dp = derived_for(pcfg, state0)
        v = classify(pcfg.params, dp)
        rec.update(predicted_b1=v.b1_bounded, predicted_b3=v.b3_converges,
                   predicted_b4=v.b4_blowup_mass)
        res = run(state0, pcfg.params, pcfg.domain, pcfg.solver, pcfg.diagnostics_every, dp=dp)
        rec["observed_status"] = res.report.status
        t = [r.t for r in res.rows]
        y = [r.l1_U_minus_1 + r.l1_W_minus_1 for r in res.rows]
        try:
            tt, yy = above_floor(t, y)
            rec["fitted_rate"] = fit_exponential_rate(tt, yy)[0]
        except (ValueError, FitUndefined):
            pass
    except Exception as exc:            # per-point failures are recorded, the sweep goes on
        rec["observed_status"] = f"error: {type(exc).__name__}"
    return rec


SWEEP_COLUMNS = ["m1", "m2", "predicted_b1", "predicted_b3", "predicted_b4",
                 "observed_status", "fitted_rate"]


def sweep(cfg: RunConfig, grid: dict[str, np.ndarray], jobs: int = 1, base_seed: int = 0) -> str:
    m1s = grid.get("m1", np.array([cfg.init_u.mass]))
    m2s = grid.get("m2", np.array([cfg.init_w.mass if cfg.init_w.mass is not None else cfg.init_u.mass]))
    points = [(float(a), float(b)) for a in m1s for b in m2s]
    work = [(cfg, i, a, b, base_seed) for i, (a, b) in enumerate(points)]
    if jobs > 1 and len(work) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            recs = list(ex.map(_sweep_point, work))     # map keeps input order
    else:
        recs = [_sweep_point(w) for w in work]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SWEEP_COLUMNS)
    for r in recs:
        w.writerow([r[c] if isinstance(r[c], str) else fmt(r[c]) for c in SWEEP_COLUMNS])
    return buf.getvalue()


def cmd_sweep(args) -> int:
    cfg = load_config(args.config)
    grid = parse_grid(args.grid)
    jobs = args.jobs
    env = os.environ.get("CHEMOTAX_JOBS")
    if env:
        try:
            jobs = int(env)
        except ValueError:
            raise ConfigError(f"CHEMOTAX_JOBS={env!r} is not an integer") from None
    text = sweep(cfg, grid, max(1, jobs), args.seed)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_plot(args) -> int:
    path = Path(args.csv)
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        print(f"cannot read {path}: {exc.strerror}", file=sys.stderr)
        return EXIT_DATA
    if not rows:
        print("empty csv", file=sys.stderr)
        return EXIT_DATA
    header = rows[0]
    xcol = args.x
    wanted = args.columns.split(",") if args.columns else [c for c in header if c != xcol]
    missing = [c for c in [xcol, *wanted] if c not in header]
    if missing:
        print(f"missing columns: {', '.join(missing)}", file=sys.stderr)
        return EXIT_DATA
    outdir = Path(args.outdir) if args.outdir else path.parent
    outdir.mkdir(parents=True, exist_ok=True)
    xi = header.index(xcol)
    for col in wanted:
        ci = header.index(col)
        with open(outdir / f"{path.stem}_{col}.dat", "w") as out:
            out.write(f"# {xcol} {col}\n")
            for r in rows[1:]:
                if r[ci] != "":
                    out.write(f"{r[xi]} {r[ci]}\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="chemotax")
    sub = ap.add_subparsers(dest="cmd", required=True)
    for name, fn in (("run", cmd_run), ("classify", cmd_classify),
                     ("constants", cmd_constants), ("probe-blowup", cmd_probe)):
        p = sub.add_parser(name)
        p.add_argument("config")
        p.set_defaults(func=fn)
    p = sub.add_parser("sweep")
    p.add_argument("config")
    p.add_argument("--grid", required=True, help="m1=a:b:n,m2=c:d:n")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--seed", type=int, default=0, help="base seed for per-point seeds")
    p.add_argument("--out")
    p.set_defaults(func=cmd_sweep)
    p = sub.add_parser("plot")
    p.add_argument("csv")
    p.add_argument("--columns", help="comma-separated subset")
    p.add_argument("--x", default="t")
    p.add_argument("--outdir")
    p.set_defaults(func=cmd_plot)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
