"""Variational lower bounds for the domain constants k and C_GN.

Both constants are extremal values of scale-invariant ratios over grid
functions.  Any admissible candidate certifies a one-sided bound, so the
estimators return the best certificate seen over all evaluations and label it
a lower bound; they never claim convergence to the true inf/sup.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import EstimateFailure
from .grid import DomainSpec, grad_faces, laplacian
from .model import PISTAR_RECTANGLE

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class OptConfig:
    n_random_starts: int = 8
    max_iter: int = 10_000
    rel_tol: float = 1e-10
    seed: int = 0
    smoothing: int = 4          # passes of a 5-point average applied to random starts
    max_halvings: int = 60


@dataclass
class ConstantEstimate:
    name: str
    value: float
    bound_direction: str        # lower | upper
    iterations: int
    best_test_function: np.ndarray = field(repr=False)
    residual_history: list = field(repr=False, default_factory=list)
    best_ratio: float = math.nan
    start_index: int = 0


def pistar(dom: DomainSpec) -> float:
    """Trudinger-Moser constant of a non-ball domain; rectangles are never balls."""
    return PISTAR_RECTANGLE


def k_convex_lower_reference(dom: DomainSpec) -> float:
    """Analytic lower bound ``4 d^2 / pi^2`` for k on convex domains."""
    return 4.0 * dom.diameter**2 / math.pi**2


def neumann_lambda1(dom: DomainSpec) -> float:
    """First nonzero Neumann eigenvalue ``pi^2 / max(Lx, Ly)^2`` of the rectangle."""
    return math.pi**2 / max(dom.Lx, dom.Ly) ** 2


# ---------------------------------------------------------------------------
# ratios and their (sub)gradients


def _grad_adjoint(gx: np.ndarray, gy: np.ndarray, dom: DomainSpec) -> np.ndarray:
    """Adjoint of :func:`grad_faces` (a negative discrete divergence)."""
    px = np.pad(gx, ((1, 1), (0, 0)))
    py = np.pad(gy, ((0, 0), (1, 1)))
    return -(np.diff(px, axis=0) / dom.hx + np.diff(py, axis=1) / dom.hy)


def _center(psi):
    return psi - psi.mean()


def k_ratio(phi: np.ndarray, dom: DomainSpec) -> float:
    """``||grad phi||_{L1}^2 / ||phi - mean phi||_{L2}^2`` (mean is 1 for admissible phi)."""
    psi = _center(phi)
    gx, gy = grad_faces(psi, dom)
    vol = dom.cell_volume
    n1 = (np.abs(gx).sum() + np.abs(gy).sum()) * vol
    d = float(np.sum(psi * psi)) * vol
    return float(n1 * n1 / d) if d > 0 else math.inf


def _k_ratio_grad(psi, dom):
    vol = dom.cell_volume
    gx, gy = grad_faces(psi, dom)
    n1 = (np.abs(gx).sum() + np.abs(gy).sum()) * vol
    d = float(np.sum(psi * psi)) * vol
    # subgradient of the L1 term: sign with 0 at ties
    dn = vol * _grad_adjoint(np.sign(gx), np.sign(gy), dom)
    dd = 2.0 * vol * psi
    val = n1 * n1 / d
    g = 2.0 * n1 * dn / d - val * dd / d
    return val, _center(g)


def l2_poincare_ratio(phi: np.ndarray, dom: DomainSpec) -> float:
    """``||grad phi||_{L2}^2 / ||phi - mean phi||_{L2}^2``."""
    psi = _center(phi)
    gx, gy = grad_faces(psi, dom)
    vol = dom.cell_volume
    num = (np.sum(gx * gx) + np.sum(gy * gy)) * vol
    d = float(np.sum(psi * psi)) * vol
    return float(num / d) if d > 0 else math.inf


def _l2_ratio_grad(psi, dom):
    vol = dom.cell_volume
    num = -vol * float(np.sum(psi * laplacian(psi, dom)))
    d = float(np.sum(psi * psi)) * vol
    val = num / d
    g = (-2.0 * vol * laplacian(psi, dom) - val * 2.0 * vol * psi) / d
    return val, _center(g)


def gn_ratio(psi: np.ndarray, dom: DomainSpec) -> float:
    """``||psi||_4^4 / (8 (||psi||_2^2 ||grad psi||_2^2 + ||psi||_2^4))``.

    Homogeneous of degree zero; the supremum over psi is the smallest
    admissible ``C_GN^4``.
    """
    vol = dom.cell_volume
    p4 = float(np.sum(psi**4)) * vol
    a = float(np.sum(psi * psi)) * vol
    gx, gy = grad_faces(psi, dom)
    b = float(np.sum(gx * gx) + np.sum(gy * gy)) * vol
    den = 8.0 * (a * b + a * a)
    return p4 / den if den > 0 else 0.0


def _gn_ratio_grad(psi, dom):
    vol = dom.cell_volume
    p4 = float(np.sum(psi**4)) * vol
    a = float(np.sum(psi * psi)) * vol
    lap = laplacian(psi, dom)
    b = -vol * float(np.sum(psi * lap))
    den = 8.0 * (a * b + a * a)
    val = p4 / den
    dp4 = 4.0 * vol * psi**3
    da = 2.0 * vol * psi
    db = -2.0 * vol * lap
    dden = 8.0 * (da * b + a * db + 2.0 * a * da)
    return val, (dp4 - val * dden) / den


# ---------------------------------------------------------------------------
# descent driver


def _normalize(psi):
    n = math.sqrt(float(np.sum(psi * psi)))
    return psi / n if n > 0 else psi


def _descend(psi0, value_grad, dom, cfg: OptConfig, sign: float, history: list,
             best: dict, start_index: int, project=_center):
    """Backtracking (sub)gradient descent on ``sign * ratio`` from one start.

    ``best`` collects the extremal certificate over every evaluated candidate.
    """
    psi = _normalize(project(psi0))
    if not np.any(psi):
        return 0
    val, g = value_grad(psi, dom)
    _record(best, sign, val, psi, start_index)
    history.append(val)
    it = 0
    last_step = 1.0
    for it in range(1, cfg.max_iter + 1):
        gn = math.sqrt(float(np.sum(g * g)))
        if gn == 0 or not math.isfinite(val):
            break
        direction = -sign * g / gn
        # backtracking from 1.0, warm-started near the last accepted step
        step = min(1.0, 4.0 * last_step)
        accepted = False
        for _ in range(cfg.max_halvings):
            cand = _normalize(project(psi + step * direction))
            if np.any(cand):
                cval, cg = value_grad(cand, dom)
                _record(best, sign, cval, cand, start_index)
                if sign * cval < sign * val:
                    accepted = True
                    break
            step *= 0.5
        if not accepted:
            break
        last_step = step
        improvement = abs(cval - val) / max(abs(val), 1e-300)
        psi, val, g = cand, cval, cg
        history.append(val)
        if improvement < cfg.rel_tol:
            break
    return it


def _record(best, sign, val, psi, start_index):
    if not math.isfinite(val):
        return
    if best.get("value") is None or sign * val < sign * best["value"]:
        best.update(value=val, psi=psi.copy(), start=start_index)


def _random_starts(dom, cfg: OptConfig):
    rng = np.random.default_rng(cfg.seed)
    for _ in range(cfg.n_random_starts):
        f = rng.standard_normal(dom.shape)
        for _ in range(cfg.smoothing):
            p = np.pad(f, 1, mode="edge")
            f = (p[2:, 1:-1] + p[:-2, 1:-1] + p[1:-1, 2:] + p[1:-1, :-2] + 4 * f) / 8.0
        yield f


def lowest_cosine_mode(dom: DomainSpec) -> np.ndarray:
    X, Y = dom.centers()
    if dom.Lx >= dom.Ly:
        return np.cos(np.pi * X / dom.Lx)
    return np.cos(np.pi * Y / dom.Ly)


def level_set_candidates(psi: np.ndarray, n_levels: int = 64):
    """Indicator functions of super-level sets of ``psi``, centred.

    Thresholding is the natural polish for ratios with an L1 gradient term;
    each candidate is admissible and so a valid certificate on its own.
    """
    qs = np.quantile(psi, np.linspace(0.0, 1.0, n_levels + 2)[1:-1])
    for q in np.unique(qs):
        ind = (psi > q).astype(float)
        if 0 < ind.sum() < ind.size:
            yield ind - ind.mean()


def _identity(psi):
    return psi


def _multistart(starts, value_grad, dom, cfg, sign, name, project=_center):
    best: dict = {}
    total_iters = 0
    best_hist: list = []
    for idx, s in enumerate(starts):
        hist: list = []
        total_iters += _descend(s, value_grad, dom, cfg, sign, hist, best, idx, project)
        if best.get("start") == idx:
            best_hist = hist
    if best.get("value") is None:
        raise EstimateFailure(f"{name}: every start collapsed to a constant")
    return best, total_iters, best_hist


def estimate_k(dom: DomainSpec, cfg: OptConfig = OptConfig()) -> ConstantEstimate:
    """Lower bound ``4 |Omega| / min ratio`` for the Poincare-type constant k.

    Any admissible phi certifies ``k >= 4 |Omega| / ratio(phi)``.
    """
    starts = [lowest_cosine_mode(dom)] + list(_random_starts(dom, cfg))
    best, iters, hist = _multistart(starts, _k_ratio_grad, dom, cfg, +1.0, "estimate_k")
    for cand in level_set_candidates(best["psi"]):
        cand = _normalize(cand)
        _record(best, +1.0, k_ratio(cand, dom), cand, best["start"])
    ratio = best["value"]
    if not (ratio > 0 and math.isfinite(ratio)):
        raise EstimateFailure("estimate_k: degenerate ratio")
    phi = 1.0 + best["psi"]
    k_hat = 4.0 * dom.area / ratio
    if k_hat > 100.0 * k_convex_lower_reference(dom):
        log.warning("k estimate %.4g is implausibly large for this rectangle; "
                    "suspect the discretisation", k_hat)
    return ConstantEstimate("k", k_hat, "lower", iters, phi, hist,
                            best_ratio=ratio, start_index=best["start"])


def estimate_cgn(dom: DomainSpec, cfg: OptConfig = OptConfig()) -> ConstantEstimate:
    """Lower bound for ``C_GN^4`` as the largest Gagliardo-Nirenberg ratio found.

    ``value`` is the fourth power ``C_GN^4``; take ``value ** 0.25`` for C_GN.
    """
    X, Y = dom.centers()
    h = max(dom.hx, dom.hy)
    corner = np.exp(-(X**2 + Y**2) / (2 * (4 * h) ** 2))
    starts = [np.ones(dom.shape), corner] + list(_random_starts(dom, cfg))
    best, iters, hist = _multistart(starts, _gn_ratio_grad, dom, cfg, -1.0, "estimate_cgn",
                                    project=_identity)
    return ConstantEstimate("C_GN^4", best["value"], "lower", iters, best["psi"], hist,
                            best_ratio=best["value"], start_index=best["start"])


def poincare_l2_oracle(dom: DomainSpec, cfg: OptConfig = OptConfig()) -> float:
    """Minimum of the L2 Poincare ratio found by the same descent machinery.

    Exists to validate the optimiser against the exact first Neumann
    eigenvalue of the rectangle.
    """
    starts = [lowest_cosine_mode(dom)] + list(_random_starts(dom, cfg))
    best, _, _ = _multistart(starts, _l2_ratio_grad, dom, cfg, +1.0, "poincare_l2_oracle")
    return float(best["value"])
