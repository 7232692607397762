"""Scalar diagnostics: entropies, Lyapunov functionals, decay rates, fits."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields

import numpy as np

from .errors import FitUndefined, InvalidField, PreconditionViolation
from .grid import (DomainSpec, check_field, grad_faces, grad_inner, gradient_sq_norm,
                   integrate, mean)
from .model import DerivedParams, ModelParams, NormalizedState, SimState, normalize

SQRT2 = math.sqrt(2.0)
PP_LOWER = (2.0 - math.sqrt(22.0)) / 3.0


def entropy(f: np.ndarray, dom: DomainSpec) -> float:
    """Midpoint quadrature of ``f ln f`` for a strictly positive field."""
    f = check_field(f, dom)
    if f.min() <= 0:
        raise InvalidField("entropy needs a strictly positive field")
    return float(np.sum(f * np.log(f)) * dom.cell_volume)


def l2_sq(f: np.ndarray, dom: DomainSpec) -> float:
    return float(np.sum(f * f) * dom.cell_volume)


def h1_sq(f: np.ndarray, dom: DomainSpec) -> float:
    return l2_sq(f, dom) + gradient_sq_norm(f, dom)


def w1inf_distance(f: np.ndarray, target: float, dom: DomainSpec) -> float:
    """Discrete ``||f - target||_{W^{1,inf}}``: max deviation plus max face slope."""
    gx, gy = grad_faces(f, dom)
    return float(np.max(np.abs(f - target)) + max(np.max(np.abs(gx)), np.max(np.abs(gy))))


def wkinf_distance(f: np.ndarray, target: float, order: int, dom: DomainSpec) -> float:
    """``W^{k,inf}`` distance built from repeated one-sided differences.

    Mixed derivatives are skipped.  Third differences are dominated by
    discretisation noise at desk resolution, so this is reported, not asserted.
    """
    f = check_field(f, dom)
    total = float(np.max(np.abs(f - target)))
    dx, dy = f, f
    for _ in range(order):
        dx = np.diff(dx, axis=0) / dom.hx
        dy = np.diff(dy, axis=1) / dom.hy
        total += max(float(np.max(np.abs(dx))), float(np.max(np.abs(dy))))
    return total


# ---------------------------------------------------------------------------
# Lyapunov functional of the original system


def lyapunov_F(state: SimState, params: ModelParams, dom: DomainSpec) -> float:
    c1, c2, c3 = params.chi1, params.chi2, params.chi3
    u, v, w, z = state.u, state.v, state.w, state.z
    vol = dom.cell_volume
    val = c2 * entropy(u, dom) + c1 * entropy(w, dom)
    val -= c1 * c2 * float(np.sum(u * v + w * z)) * vol
    val -= c1 * c3 * float(np.sum(w * v)) * vol
    val += c1 * c2 * (float(np.sum(v * z)) * vol + grad_inner(v, z, dom))
    val += 0.5 * c1 * c3 * h1_sq(v, dom)
    return val


def _log_mean(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    la, lb = np.log(a), np.log(b)
    d = la - lb
    with np.errstate(invalid="ignore", divide="ignore"):
        out = (a - b) / d
    close = np.abs(d) < 1e-8
    return np.where(close, 0.5 * (a + b), out)


def _weighted_dirichlet(rho: np.ndarray, phi: np.ndarray, dom: DomainSpec) -> float:
    """Discrete ``int rho |grad phi|^2`` with log-mean face weights."""
    gx, gy = grad_faces(phi, dom)
    wx = _log_mean(rho[1:, :], rho[:-1, :])
    wy = _log_mean(rho[:, 1:], rho[:, :-1])
    return float((np.sum(wx * gx**2) + np.sum(wy * gy**2)) * dom.cell_volume)


def lyapunov_F_dissipation(curr: SimState, nxt: SimState, params: ModelParams,
                           dom: DomainSpec, dt: float) -> tuple[float, float]:
    """Difference quotient of F against the dissipation integrals at ``curr``.

    Returns ``(lhs, rhs)``; no tolerance is applied here.
    """
    lhs = (lyapunov_F(nxt, params, dom) - lyapunov_F(curr, params, dom)) / dt
    c1, c2, c3 = params.chi1, params.chi2, params.chi3
    vt = (nxt.v - curr.v) / dt
    zt = (nxt.z - curr.z) / dt
    vol = dom.cell_volume
    rhs = 0.0
    if params.tau1 + params.tau2 > 0:
        rhs -= (params.tau1 + params.tau2) * c1 * c2 * float(np.sum(vt * zt)) * vol
        rhs -= params.tau1 * c1 * c3 * float(np.sum(vt * vt)) * vol
    rhs -= c2 * _weighted_dirichlet(curr.u, np.log(curr.u) - c1 * curr.v, dom)
    rhs -= c1 * _weighted_dirichlet(curr.w, np.log(curr.w) - c2 * curr.z - c3 * curr.v, dom)
    return lhs, rhs


# ---------------------------------------------------------------------------
# functionals of the normalised system


def lyapunov_G(ns: NormalizedState, dp: DerivedParams, dom: DomainSpec) -> float:
    return dp.eta2 / dp.eta1 * entropy(ns.U, dom) + entropy(ns.W, dom)


@dataclass(frozen=True)
class RateParamsPP:
    alpha: float
    beta: float
    gamma1: float
    gamma2: float
    A1: float
    A2: float
    A3: float
    A4: float

    def all_positive(self) -> bool:
        return all(x > 0 for x in asdict(self).values())


def _require_k(dp: DerivedParams) -> float:
    if dp.k is None:
        raise PreconditionViolation("the Poincare-type constant k has not been provided")
    return dp.k


def lyapunov_H(ns: NormalizedState, dp: DerivedParams, rp: RateParamsPP, params: ModelParams,
               dom: DomainSpec) -> float:
    if not params.fully_parabolic:
        raise PreconditionViolation("H is only defined for tau1, tau2 > 0")
    k = _require_k(dp)
    t1, t2 = params.tau1, params.tau2
    a, b = rp.alpha, rp.beta
    val = a / k * entropy(ns.U, dom)
    val += 0.5 * t1 * a * gradient_sq_norm(ns.V, dom)
    val += 0.5 * t1 * a * (1 + 2 * b + rp.gamma1 / (k * dp.eta1)) * l2_sq(ns.V, dom)
    val += entropy(ns.W, dom) / k
    val += 0.5 * t2 * gradient_sq_norm(ns.Z, dom)
    val += 0.5 * t2 * (1 + 2 * b + rp.gamma2 / (k * dp.eta2)) * l2_sq(ns.Z, dom)
    return val


# ---------------------------------------------------------------------------
# closed-form decay rates


def pe_condition(dp: DerivedParams) -> tuple[float, float]:
    """``(k^2 eta1 eta2 + k eta1 chi^+, 4)``: the parabolic-elliptic smallness pair."""
    k = _require_k(dp)
    return k * k * dp.eta1 * dp.eta2 + k * dp.eta1 * max(dp.chi, 0.0), 4.0


def rate_mu(dp: DerivedParams) -> float | None:
    """Decay rate of G in the parabolic-elliptic case; ``None`` if the condition fails."""
    if dp.k is None:
        return None
    k = dp.k
    lhs, rhs = pe_condition(dp)
    if not lhs < rhs:
        return None
    gap = 4.0 - lhs
    prod = k * k * dp.eta1 * dp.eta2
    return gap / (2 * k * k) * min(k, 4.0 / (prod + 2 * gap))


def pp_admissible(dp: DerivedParams) -> bool:
    k = _require_k(dp)
    s = k * dp.eta1 * dp.chi                      # signed chi
    prod = k * k * dp.eta1 * dp.eta2
    return (PP_LOWER < s < SQRT2) and prod < (2 * SQRT2 / 3) * min(1.0, 1.5 + s)


def rate_params_pp(dp: DerivedParams, params: ModelParams) -> RateParamsPP | None:
    """Weights alpha, beta, gamma_i and coefficients A_1..A_4 for the functional H.

    Sign conventions, occurrence by occurrence:
    alpha uses chi^2 (sign-free) and chi^- = max(-chi, 0) in ``3 - 2 k eta1 chi^-``;
    gamma1 uses the signed chi; A2 uses the signed chi; A3 uses chi^2.
    Returns ``None`` outside the admissible window.
    """
    if not params.fully_parabolic:
        raise PreconditionViolation("rate parameters need tau1, tau2 > 0")
    if dp.k is None or not pp_admissible(dp):
        return None
    k, e1, e2, chi = dp.k, dp.eta1, dp.eta2, dp.chi
    chi_minus = max(-chi, 0.0)
    alpha = 0.5 * (max(chi * chi / 2, e2 / (SQRT2 * e1))
                   + (3 - 2 * k * e1 * chi_minus) / (3 * k * k * e1 * e1))
    beta = (1 - k * k * e1 * e1 * alpha) / (k * k * e1 * e1 * alpha)
    gamma1 = (k * e1 * chi + 1) / (k * e1 * alpha)
    gamma2 = alpha / (k * e2)
    A1 = -((1 + beta) * e2 * e2 - 2 * alpha / (k * k))
    A2 = -0.5 * ((1 - 2 * beta) * alpha + (gamma1 * alpha - chi) ** 2 - 2 * gamma1 * alpha / (k * e1))
    A3 = -0.5 * (2 * (1 + beta) * alpha * e1 * e1 - 4 / (k * k) + chi * chi / (k * k * alpha))
    A4 = -0.5 * (1 - 2 * beta + gamma2 * gamma2 / alpha - 2 * gamma2 / (k * e2))
    rp = RateParamsPP(alpha, beta, gamma1, gamma2, A1, A2, A3, A4)
    if not rp.all_positive():
        raise ArithmeticError(f"transcription alarm: non-positive rate parameter in {rp}")
    return rp


def rate_delta(rp: RateParamsPP | None, dp: DerivedParams, params: ModelParams) -> float | None:
    if not params.fully_parabolic:
        raise PreconditionViolation("delta needs tau1, tau2 > 0")
    if rp is None:
        return None
    k, e1, e2 = dp.k, dp.eta1, dp.eta2
    t1, t2 = params.tau1, params.tau2
    a, b, g1, g2 = rp.alpha, rp.beta, rp.gamma1, rp.gamma2
    return min(
        rp.A1 * k / a,
        2 * rp.A2 / (a * t1 * (1 + 2 * b + g1 / (k * e1))),
        rp.A3 * k,
        2 * rp.A4 / (t2 * (1 + 2 * b + g2 / (k * e2))),
        2 * (g1 / (k * e1 * t1) + 2 * b / t1),
        2 * (g2 / (k * e2 * t2) + 2 * b / t2),
    )


@dataclass(frozen=True)
class RateReport:
    mu: float | None = None
    delta: float | None = None
    sigma: float | None = None
    zeta1: float | None = None
    zeta2: float | None = None
    zeta: float | None = None
    rate_u_w: float | None = None
    rate_vz_ee: float | None = None
    rate_vz_pp: float | None = None


def rate_report(dp: DerivedParams, params: ModelParams) -> RateReport:
    if dp.k is None:
        return RateReport()
    if params.parabolic_elliptic:
        mu = rate_mu(dp)
        if mu is None:
            return RateReport()
        return RateReport(mu=mu, sigma=mu, rate_u_w=mu / 14, rate_vz_ee=mu / 44)
    delta = rate_delta(rate_params_pp(dp, params), dp, params)
    if delta is None:
        return RateReport()
    t1, t2 = params.tau1, params.tau2
    zeta = min(1 / t1, 1 / t2, delta / 2)
    return RateReport(delta=delta, sigma=delta,
                      zeta1=min(1 / t1, delta / 2), zeta2=min(1 / t2, delta / 2),
                      zeta=zeta, rate_u_w=delta / 14, rate_vz_pp=zeta / 15)


# ---------------------------------------------------------------------------
# functional inequalities


def ckp_gap(ns: NormalizedState, dom: DomainSpec):
    """Both sides of the Csiszar-Kullback-Pinsker bound for U and W.

    ``||U - 1||_{L1}^2 <= 2 ||U||_{L1} int U ln U``; with mean(U) = 1 the factor
    ``||U||_{L1}`` is the area, which drops out on unit-area domains.
    """
    out = []
    for F in (ns.U, ns.W):
        lhs = (float(np.sum(np.abs(F - 1.0))) * dom.cell_volume) ** 2
        rhs = 2.0 * integrate(F, dom) * entropy(F, dom)
        out.append((lhs, rhs))
    return tuple(out)


def sqrt_dirichlet(F: np.ndarray, dom: DomainSpec) -> float:
    """``||grad F^{1/2}||_{L2}^2`` from face differences of the pointwise root."""
    if F.min() < 0:
        raise InvalidField("square root of a negative field")
    return gradient_sq_norm(np.sqrt(F), dom)


def poincare_gap(ns: NormalizedState, k: float, dom: DomainSpec):
    """``(||U-1||^2, k ||grad U^{1/2}||^2)`` for U and W."""
    return tuple((l2_sq(F - 1.0, dom), k * sqrt_dirichlet(F, dom)) for F in (ns.U, ns.W))


# ---------------------------------------------------------------------------
# exponential fits


def fit_exponential_rate(t, y, tail_fraction: float = 0.5, min_samples: int = 8):
    """Least-squares decay rate of ``y ~ C exp(-rate t)`` over the tail window.

    Returns ``(rate, r_squared)``.  Raises :class:`FitUndefined` if any sample
    in the window is non-positive.
    """
    t = np.asarray(t, float)
    y = np.asarray(y, float)
    if t.size < min_samples or t.size != y.size:
        raise ValueError(f"need at least {min_samples} paired samples, got {t.size}")
    start = int(np.floor((1.0 - tail_fraction) * t.size))
    start = min(start, t.size - 2)
    tw, yw = t[start:], y[start:]
    if np.any(~np.isfinite(yw)) or np.any(yw <= 0):
        raise FitUndefined("non-positive sample in the fit window")
    ly = np.log(yw)
    slope, intercept = np.polyfit(tw, ly, 1)
    resid = ly - (slope * tw + intercept)
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    ss_res = float(np.sum(resid**2))
    if ss_tot <= 1e-28 * max(1.0, float(np.sum(ly**2))):
        r2 = 1.0
    else:
        r2 = 1.0 - ss_res / ss_tot
    rate = -float(slope)
    if abs(rate) < 1e-14:
        rate = 0.0
    return rate, r2


def above_floor(t, y, rel_floor: float = 1e-9):
    """Truncate a decaying series at the first sample below ``rel_floor * max(y)``.

    Keeps fits away from the round-off plateau that every decaying diagnostic
    reaches in finite precision.
    """
    t = np.asarray(t, float)
    y = np.asarray(y, float)
    thresh = rel_floor * np.max(y)
    bad = np.nonzero(~(y > thresh))[0]
    end = bad[0] if bad.size else y.size
    return t[:end], y[:end]


# ---------------------------------------------------------------------------
# per-sample diagnostics


@dataclass
class DiagnosticsRow:
    t: float
    mass_u: float
    mass_w: float
    mass_v: float
    mass_z: float
    entropy_u: float
    entropy_w: float
    linf_u: float
    linf_w: float
    h1_v: float
    h1_z: float
    F: float
    G: float | None
    H: float | None
    l1_U_minus_1: float
    l1_W_minus_1: float
    w1inf_dist_u: float
    w1inf_dist_w: float
    dt: float | None

    @classmethod
    def columns(cls) -> list[str]:
        return [f.name for f in fields(cls)]

    def values(self) -> list:
        return [getattr(self, c) for c in self.columns()]


def diagnostics_row(state: SimState, params: ModelParams, dp: DerivedParams, dom: DomainSpec,
                    rp: RateParamsPP | None = None, dt: float | None = None) -> DiagnosticsRow:
    ns = normalize(state, dp, dom)
    H = None
    if params.fully_parabolic and rp is not None and dp.k is not None:
        H = lyapunov_H(ns, dp, rp, params, dom)
    vol = dom.cell_volume
    return DiagnosticsRow(
        t=state.t,
        mass_u=integrate(state.u, dom),
        mass_w=integrate(state.w, dom),
        mass_v=integrate(state.v, dom),
        mass_z=integrate(state.z, dom),
        entropy_u=entropy(state.u, dom),
        entropy_w=entropy(state.w, dom),
        linf_u=float(np.max(np.abs(state.u))),
        linf_w=float(np.max(np.abs(state.w))),
        h1_v=h1_sq(state.v, dom),
        h1_z=h1_sq(state.z, dom),
        F=lyapunov_F(state, params, dom),
        G=lyapunov_G(ns, dp, dom),
        H=H,
        l1_U_minus_1=float(np.sum(np.abs(ns.U - 1.0))) * vol,
        l1_W_minus_1=float(np.sum(np.abs(ns.W - 1.0))) * vol,
        w1inf_dist_u=w1inf_distance(state.u, dp.u0bar, dom),
        w1inf_dist_w=w1inf_distance(state.w, dp.w0bar, dom),
        dt=dt,
    )
