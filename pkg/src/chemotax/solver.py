"""Time integration: implicit signals, IMEX finite-volume densities, adaptive dt.

One step of size ``dt``:

1. signals -- ``(I - Lap) v = w`` (tau = 0) or one implicit Euler step of
   ``tau v_t = Lap v - v + w`` (tau > 0); likewise ``z`` driven by ``u``;
2. densities -- ``rho_t = div(grad rho - rho grad psi)`` with ``psi = chi1 v`` for
   ``u`` and ``psi = chi2 z + chi3 v`` for ``w``.  The face flux is split into the
   plain diffusive flux, taken implicitly through a Helmholtz solve, and the
   remainder (Scharfetter-Gummel minus diffusion, or first-order upwind drift),
   taken explicitly.  Every piece is in flux form, so mass telescopes exactly.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import InvalidField, SolveFailure, StepRejected
from .functionals import (DiagnosticsRow, diagnostics_row, entropy, rate_params_pp)
from .grid import DomainSpec, solve_helmholtz
from .model import DerivedParams, ModelParams, SimState, derive_params

log = logging.getLogger(__name__)

POSITIVITY_MODES = ("scharfetter_gummel", "upwind")


@dataclass(frozen=True)
class SolverConfig:
    t_end: float = 1.0
    dt_init: float = 1e-3
    dt_min: float = 1e-9
    dt_max: float = 1e-2
    cfl_safety: float = 0.2
    blowup_linf_factor: float = 1e4
    blowup_entropy_factor: float = 1e3
    positivity_mode: str = "scharfetter_gummel"
    helmholtz_backend: str = "dct"
    max_steps: int = 50_000_000

    def __post_init__(self):
        if not (0 < self.dt_min <= self.dt_init <= self.dt_max):
            raise ValueError("need 0 < dt_min <= dt_init <= dt_max")
        if self.t_end < 0:
            raise ValueError("t_end must be non-negative")
        if not 0 < self.cfl_safety <= 1:
            raise ValueError("cfl_safety must lie in (0, 1]")
        if self.positivity_mode not in POSITIVITY_MODES:
            raise ValueError(f"positivity_mode must be one of {POSITIVITY_MODES}")


@dataclass
class BlowupReport:
    status: str                 # completed | blowup_indicated | solver_failure
    t_stop: float
    peak_linf_u: float
    peak_linf_w: float
    entropy_peak: float
    dt_at_stop: float
    n_steps: int = 0
    n_rejected: int = 0
    linf_trigger: bool = False
    dt_trigger: bool = False
    entropy_trigger: bool = False
    message: str = ""


@dataclass
class RunResult:
    rows: list[DiagnosticsRow]
    state: SimState
    report: BlowupReport
    dp: DerivedParams = field(repr=False, default=None)


# ---------------------------------------------------------------------------
# face fluxes


def bernoulli(x: np.ndarray) -> np.ndarray:
    """``B(x) = x / (exp(x) - 1)`` with ``B(0) = 1``."""
    x = np.asarray(x, float)
    small = np.abs(x) < 1e-10
    with np.errstate(invalid="ignore", divide="ignore", over="ignore"):
        out = x / np.expm1(x)
    out = np.where(small, 1.0 - 0.5 * x, out)
    # exp overflow for large positive x: B -> x exp(-x) -> 0
    return np.where(np.isfinite(out), out, 0.0)


def _remainder_flux_1d(rho, psi, h, axis, mode):
    """Explicit part of the face flux along ``axis`` (positive direction)."""
    r_lo = np.take(rho, np.arange(rho.shape[axis] - 1), axis=axis)
    r_hi = np.take(rho, np.arange(1, rho.shape[axis]), axis=axis)
    dpsi = np.diff(psi, axis=axis)
    if mode == "scharfetter_gummel":
        # full SG flux: (B(-dpsi) r_lo - B(dpsi) r_hi) / h, minus (r_lo - r_hi) / h
        return ((bernoulli(-dpsi) - 1.0) * r_lo - (bernoulli(dpsi) - 1.0) * r_hi) / h
    a = dpsi / h
    return np.maximum(a, 0.0) * r_lo - np.maximum(-a, 0.0) * r_hi


def flux_divergence(rho: np.ndarray, psi: np.ndarray, dom: DomainSpec, mode: str) -> np.ndarray:
    """Divergence of the explicit flux; boundary faces carry zero flux."""
    jx = _remainder_flux_1d(rho, psi, dom.hx, 0, mode)
    jy = _remainder_flux_1d(rho, psi, dom.hy, 1, mode)
    jx = np.pad(jx, ((1, 1), (0, 0)))
    jy = np.pad(jy, ((0, 0), (1, 1)))
    return np.diff(jx, axis=0) / dom.hx + np.diff(jy, axis=1) / dom.hy


def drift_speed(psi: np.ndarray, dom: DomainSpec) -> float:
    """Largest face drift velocity ``|d psi / h|``."""
    sx = np.max(np.abs(np.diff(psi, axis=0))) / dom.hx
    sy = np.max(np.abs(np.diff(psi, axis=1))) / dom.hy
    return float(max(sx, sy))


def potentials(state: SimState, params: ModelParams):
    return params.chi1 * state.v, params.chi2 * state.z + params.chi3 * state.v


def cfl_dt(state: SimState, params: ModelParams, dom: DomainSpec, cfg: SolverConfig) -> float:
    psi_u, psi_w = potentials(state, params)
    speed = max(drift_speed(psi_u, dom), drift_speed(psi_w, dom))
    if speed == 0:
        return math.inf
    return cfg.cfl_safety * min(dom.hx, dom.hy) / speed


# ---------------------------------------------------------------------------
# stepping


def update_signals(state: SimState, params: ModelParams, dom: DomainSpec, dt: float,
                   backend: str = "dct"):
    if params.parabolic_elliptic:
        v = solve_helmholtz(state.w, dom, 1.0, 1.0, backend)
        z = solve_helmholtz(state.u, dom, 1.0, 1.0, backend)
    else:
        r1, r2 = params.tau1 / dt, params.tau2 / dt
        v = solve_helmholtz(r1 * state.v + state.w, dom, r1 + 1.0, 1.0, backend)
        z = solve_helmholtz(r2 * state.z + state.u, dom, r2 + 1.0, 1.0, backend)
    return v, z


def _density_step(rho, psi, dom, dt, mode, backend):
    rhs = rho - dt * flux_divergence(rho, psi, dom, mode)
    return solve_helmholtz(rhs, dom, 1.0, dt, backend)


def step(state: SimState, params: ModelParams, dom: DomainSpec, cfg: SolverConfig,
         dt: float, enforce_bounds: bool = True) -> SimState:
    """Advance one step of size ``dt``.

    Raises :class:`StepRejected` if the drift CFL bound is violated or a
    density loses strict positivity; the caller is expected to retry with a
    smaller step.
    """
    if enforce_bounds and not (cfg.dt_min <= dt <= cfg.dt_max):
        raise ValueError(f"dt={dt} outside [{cfg.dt_min}, {cfg.dt_max}]")
    v, z = update_signals(state, params, dom, dt, cfg.helmholtz_backend)
    psi_u = params.chi1 * v
    psi_w = params.chi2 * z + params.chi3 * v
    speed = max(drift_speed(psi_u, dom), drift_speed(psi_w, dom))
    if speed * dt > cfg.cfl_safety * min(dom.hx, dom.hy) * (1 + 1e-12):
        raise StepRejected(f"drift CFL violated: dt={dt:.3e}, speed={speed:.3e}")
    mode, backend = cfg.positivity_mode, cfg.helmholtz_backend
    u = _density_step(state.u, psi_u, dom, dt, mode, backend)
    w = _density_step(state.w, psi_w, dom, dt, mode, backend)
    if not (np.all(np.isfinite(u)) and np.all(np.isfinite(w))):
        raise StepRejected("non-finite density after step")
    if u.min() <= 0 or w.min() <= 0:
        raise StepRejected(f"positivity lost: min u={u.min():.3e}, min w={w.min():.3e}")
    if params.parabolic_elliptic:
        # keep the stored signals slaved to the new densities
        v = solve_helmholtz(w, dom, 1.0, 1.0, backend)
        z = solve_helmholtz(u, dom, 1.0, 1.0, backend)
    return SimState(state.t + dt, u, v, w, z)


def run(state0: SimState, params: ModelParams, dom: DomainSpec, cfg: SolverConfig,
        diagnostics_every: int = 10, dp: DerivedParams | None = None,
        on_sample: Callable[[SimState], None] | None = None) -> RunResult:
    """Integrate to ``cfg.t_end`` with adaptive steps and blow-up monitoring.

    The step halves on rejection and grows by at most 1.2x on acceptance,
    clamped to ``[dt_min, dt_max]`` and to the drift CFL bound.  The run stops
    early with ``blowup_indicated`` only when the L-infinity growth factor and
    the step-size collapse fire together.
    """
    if diagnostics_every < 1:
        raise ValueError("diagnostics_every must be >= 1")
    state = state0.copy().validate(dom)
    if dp is None:
        dp = derive_params(state.u, state.w, params, dom)
    rp = None
    if params.fully_parabolic and dp.k is not None:
        rp = rate_params_pp(dp, params)

    rows = [diagnostics_row(state, params, dp, dom, rp, None)]
    if on_sample is not None:
        on_sample(state)
    linf0_u, linf0_w = float(state.u.max()), float(state.w.max())
    ent0 = max(1.0, abs(entropy(state.u, dom)) + abs(entropy(state.w, dom)))
    peak_u, peak_w, ent_peak = linf0_u, linf0_w, rows[0].entropy_u + rows[0].entropy_w

    dt = cfg.dt_init
    n_steps = n_rej = 0
    status, msg = "completed", ""
    linf_trig = dt_trig = ent_trig = False
    last_dt = dt
    eps_t = 1e-12 * max(1.0, cfg.t_end)

    while state.t < cfg.t_end - eps_t:
        if n_steps >= cfg.max_steps:
            status, msg = "solver_failure", "step budget exhausted"
            break
        remaining = cfg.t_end - state.t
        dt = min(dt, cfg.dt_max, cfl_dt(state, params, dom, cfg))
        dt = max(dt, cfg.dt_min)
        final = remaining <= dt * (1 + 1e-12)
        dt_try = remaining if final else dt
        try:
            new = step(state, params, dom, cfg, dt_try, enforce_bounds=not final)
        except StepRejected as exc:
            n_rej += 1
            if dt_try <= cfg.dt_min * (1 + 1e-12):
                dt_trig = True
                last_dt = dt_try
                if linf_trig:
                    status, msg = "blowup_indicated", f"rejected at dt_min: {exc}"
                else:
                    status, msg = "solver_failure", f"rejected at dt_min: {exc}"
                break
            dt = max(dt_try / 2.0, cfg.dt_min)
            continue
        except SolveFailure as exc:
            status, msg = "solver_failure", str(exc)
            break

        state = new
        n_steps += 1
        last_dt = dt_try
        peak_u = max(peak_u, float(state.u.max()))
        peak_w = max(peak_w, float(state.w.max()))
        ent = entropy(state.u, dom) + entropy(state.w, dom)
        ent_peak = max(ent_peak, ent)
        linf_trig = (peak_u >= cfg.blowup_linf_factor * linf0_u
                     or peak_w >= cfg.blowup_linf_factor * linf0_w)
        ent_trig = ent >= cfg.blowup_entropy_factor * ent0
        if dt_try <= cfg.dt_min * (1 + 1e-12) and not final:
            dt_trig = True

        done = state.t >= cfg.t_end - eps_t
        stop = linf_trig and dt_trig
        if n_steps % diagnostics_every == 0 or done or stop:
            rows.append(diagnostics_row(state, params, dp, dom, rp, dt_try))
            if on_sample is not None:
                on_sample(state)
        if stop:
            status = "blowup_indicated"
            msg = "L-infinity growth and step collapse"
            break
        dt = min(dt_try * 1.2, cfg.dt_max) if not final else dt

    if status == "blowup_indicated":
        log.info("blow-up indicated at t=%.6g after %d steps", state.t, n_steps)
    report = BlowupReport(status=status, t_stop=state.t, peak_linf_u=peak_u, peak_linf_w=peak_w,
                          entropy_peak=ent_peak, dt_at_stop=last_dt, n_steps=n_steps,
                          n_rejected=n_rej, linf_trigger=linf_trig, dt_trigger=dt_trig,
                          entropy_trigger=ent_trig, message=msg)
    return RunResult(rows, state, report, dp)
