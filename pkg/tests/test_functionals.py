import math

import numpy as np
import pytest

from chemotax.errors import FitUndefined, InvalidField, PreconditionViolation
from chemotax.functionals import (PP_LOWER, SQRT2, ckp_gap, entropy, fit_exponential_rate,
                                  lyapunov_F, lyapunov_F_dissipation, lyapunov_G, lyapunov_H,
                                  poincare_gap, rate_delta, rate_mu, rate_params_pp,
                                  rate_report)
from chemotax.grid import DomainSpec
from chemotax.model import DerivedParams, ModelParams, NormalizedState, SimState


def dparams(eta1, eta2, chi=0.0, k=1.0, area=1.0):
    """DerivedParams with the requested normalised groups (chi1 = chi2 = 1)."""
    return DerivedParams(m1=eta2 * area, m2=eta1 * area, area=area, chi1=1.0, chi2=1.0,
                         chi3=chi, k=k)


def split_field(dom, hi, lo):
    f = np.full(dom.shape, lo)
    f[: dom.nx // 2, :] = hi
    return f


@pytest.fixture
def unit8():
    return DomainSpec(1.0, 1.0, 8, 8)


# -- entropy ---------------------------------------------------------------

def test_entropy_examples(unit8):
    assert entropy(np.ones(unit8.shape), unit8) == 0.0
    assert entropy(np.full(unit8.shape, math.e), unit8) == pytest.approx(math.e, rel=1e-14)
    d = DomainSpec(2.0, 1.0, 4, 4)
    f = split_field(d, 2.0, 0.5)
    v = d.area / 2
    assert entropy(f, d) == pytest.approx(v * (2 * math.log(2) + 0.5 * math.log(0.5)), rel=1e-14)


def test_entropy_rejects_nonpositive(unit8):
    f = np.ones(unit8.shape)
    f[0, 0] = 0.0
    with pytest.raises(InvalidField):
        entropy(f, unit8)


# -- F ---------------------------------------------------------------------

def naive_F(s, p, d):
    """Loop-by-loop re-evaluation of the six terms."""
    vol = d.hx * d.hy
    c1, c2, c3 = p.chi1, p.chi2, p.chi3
    acc = 0.0
    for i in range(d.nx):
        for j in range(d.ny):
            u, v, w, z = s.u[i, j], s.v[i, j], s.w[i, j], s.z[i, j]
            acc += vol * (c2 * u * math.log(u) + c1 * w * math.log(w)
                          - c1 * c2 * (u * v + w * z) - c1 * c3 * w * v
                          + c1 * c2 * v * z + 0.5 * c1 * c3 * v * v)
    for i in range(d.nx - 1):
        for j in range(d.ny):
            dv = (s.v[i + 1, j] - s.v[i, j]) / d.hx
            dz = (s.z[i + 1, j] - s.z[i, j]) / d.hx
            acc += vol * (c1 * c2 * dv * dz + 0.5 * c1 * c3 * dv * dv)
    for i in range(d.nx):
        for j in range(d.ny - 1):
            dv = (s.v[i, j + 1] - s.v[i, j]) / d.hy
            dz = (s.z[i, j + 1] - s.z[i, j]) / d.hy
            acc += vol * (c1 * c2 * dv * dz + 0.5 * c1 * c3 * dv * dv)
    return acc


def test_F_on_constants(unit8):
    one = np.ones(unit8.shape)
    s = SimState(0.0, one, one, one, one)
    assert lyapunov_F(s, ModelParams(1.0, 1.0, 0.0), unit8) == pytest.approx(-1.0, rel=1e-14)


def test_F_chi3_term_alone(unit8):
    one = np.ones(unit8.shape)
    s = SimState(0.0, one, one, one, np.zeros(unit8.shape))
    # with z = 0 the chi2 couplings vanish on these constants: only the chi3 terms remain
    p = ModelParams(2.0, 1.0, 0.5)
    u_term = p.chi1 * p.chi2 * 1.0
    assert lyapunov_F(s, p, unit8) + u_term == pytest.approx(-0.5 * p.chi1 * p.chi3, rel=1e-14)


def test_F_matches_naive_oracle(rng):
    d = DomainSpec(1.3, 0.8, 9, 7)
    s = SimState(0.0, *(rng.random(d.shape) + 0.2 for _ in range(4)))
    p = ModelParams(0.7, 1.9, -0.6)
    assert lyapunov_F(s, p, d) == pytest.approx(naive_F(s, p, d), rel=1e-12)


def test_F_dissipation_at_equilibrium(unit8):
    one = np.ones(unit8.shape)
    s = SimState(0.0, one, one, one, one)
    lhs, rhs = lyapunov_F_dissipation(s, s, ModelParams(1, 1, 0.3, 1.0, 1.0), unit8, 1e-3)
    assert lhs == 0.0 and abs(rhs) < 1e-14


# -- G and H ---------------------------------------------------------------

def ns_from(U, W, V=None, Z=None):
    zero = np.zeros(U.shape)
    return NormalizedState(0.0, U, zero if V is None else V, W, zero if Z is None else Z)


def test_G_examples(unit8):
    one = np.ones(unit8.shape)
    assert lyapunov_G(ns_from(one, one), dparams(0.5, 0.5), unit8) == 0.0
    U = split_field(unit8, 1.5, 0.5)
    assert lyapunov_G(ns_from(U, U), dparams(0.5, 0.5), unit8) == pytest.approx(
        2 * entropy(U, unit8), rel=1e-14)
    expected = 2 * (0.75 * math.log(1.5) + 0.25 * math.log(0.5))
    assert lyapunov_G(ns_from(U, one), dparams(0.5, 1.0), unit8) == pytest.approx(expected,
                                                                                  rel=1e-14)


def naive_H(ns, dp, rp, p, d):
    vol = d.hx * d.hy
    k, a, b = dp.k, rp.alpha, rp.beta
    cv = 0.5 * p.tau1 * a * (1 + 2 * b + rp.gamma1 / (k * dp.eta1))
    cz = 0.5 * p.tau2 * (1 + 2 * b + rp.gamma2 / (k * dp.eta2))
    acc = 0.0
    for i in range(d.nx):
        for j in range(d.ny):
            U, W = ns.U[i, j], ns.W[i, j]
            acc += vol * (a / k * U * math.log(U) + W * math.log(W) / k
                          + cv * ns.V[i, j] ** 2 + cz * ns.Z[i, j] ** 2)
            if i + 1 < d.nx:
                acc += vol * 0.5 * (p.tau1 * a * ((ns.V[i + 1, j] - ns.V[i, j]) / d.hx) ** 2
                                    + p.tau2 * ((ns.Z[i + 1, j] - ns.Z[i, j]) / d.hx) ** 2)
            if j + 1 < d.ny:
                acc += vol * 0.5 * (p.tau1 * a * ((ns.V[i, j + 1] - ns.V[i, j]) / d.hy) ** 2
                                    + p.tau2 * ((ns.Z[i, j + 1] - ns.Z[i, j]) / d.hy) ** 2)
    return acc


def test_H_examples_and_oracle(unit8, rng):
    p = ModelParams(1.0, 1.0, 0.0, 1.0, 2.0)
    dp = dparams(0.5, 0.5)
    rp = rate_params_pp(dp, p)
    one = np.ones(unit8.shape)
    zero = np.zeros(unit8.shape)
    assert lyapunov_H(ns_from(one, one), dp, rp, p, unit8) == 0.0
    V = rng.standard_normal(unit8.shape)
    only_v = lyapunov_H(ns_from(one, one, V=V), dp, rp, p, unit8)
    assert only_v == pytest.approx(naive_H(ns_from(one, one, V=V, Z=zero), dp, rp, p, unit8),
                                   rel=1e-12)
    assert only_v > 0
    U, W = rng.random(unit8.shape) + 0.5, rng.random(unit8.shape) + 0.5
    ns = ns_from(U / U.mean(), W / W.mean(), rng.standard_normal(unit8.shape),
                 rng.standard_normal(unit8.shape))
    assert lyapunov_H(ns, dp, rp, p, unit8) == pytest.approx(naive_H(ns, dp, rp, p, unit8),
                                                             rel=1e-12)


def test_H_requires_parabolic(unit8):
    one = np.ones(unit8.shape)
    rp = rate_params_pp(dparams(0.5, 0.5), ModelParams(1, 1, 0, 1.0, 1.0))
    with pytest.raises(PreconditionViolation):
        lyapunov_H(ns_from(one, one), dparams(0.5, 0.5), rp, ModelParams(1, 1), unit8)


# -- rates -----------------------------------------------------------------

def test_rate_mu_examples():
    assert rate_mu(dparams(1.0, 1.0, k=1.0)) == pytest.approx(6 / 7, rel=1e-14)
    assert rate_mu(dparams(1e-300, 1e-300, k=2.0)) == pytest.approx(0.25, rel=1e-14)
    # k^2 eta1 eta2 + k eta1 chi+ = 4 exactly: 1*2*1 + 1*2*1 = 4
    assert rate_mu(dparams(2.0, 1.0, chi=1.0, k=1.0)) is None
    assert rate_mu(dparams(1.0, 1.0, k=None)) is None


def test_rate_params_pp_example():
    p = ModelParams(1.0, 1.0, 0.0, 1.0, 1.0)
    dp = dparams(0.5, 0.5)
    rp = rate_params_pp(dp, p)
    # independent evaluation of the closed forms
    k, e1, e2, chi = 1.0, 0.5, 0.5, 0.0
    alpha = 0.5 * (max(chi**2 / 2, e2 / (math.sqrt(2) * e1)) + 3 / (3 * k**2 * e1**2))
    beta = (1 - k**2 * e1**2 * alpha) / (k**2 * e1**2 * alpha)
    assert rp.alpha == pytest.approx(alpha, rel=1e-14)
    assert rp.beta == pytest.approx(beta, rel=1e-14)
    assert rp.gamma1 == pytest.approx(1 / (k * e1 * alpha), rel=1e-14)
    assert rp.gamma2 == pytest.approx(alpha / (k * e2), rel=1e-14)
    assert rp.A1 == pytest.approx(-((1 + beta) * e2**2 - 2 * alpha / k**2), rel=1e-14)
    assert rp.all_positive()
    assert rate_delta(rp, dp, p) > 0


def test_rate_params_pp_boundary_and_tau():
    # k eta1 chi = sqrt(2) exactly
    dp = dparams(1.0, 0.1, chi=SQRT2)
    assert rate_params_pp(dp, ModelParams(1, 1, 0.0, 1.0, 1.0)) is None
    dp_low = dparams(1.0, 0.1, chi=PP_LOWER)
    assert rate_params_pp(dp_low, ModelParams(1, 1, 0.0, 1.0, 1.0)) is None
    with pytest.raises(PreconditionViolation):
        rate_params_pp(dparams(0.5, 0.5), ModelParams(1, 1))


def test_delta_tau_scaling_only_moves_tau_branches():
    dp = dparams(0.5, 0.5, chi=0.3)
    p1 = ModelParams(1.0, 1.0, 0.0, 1.0, 1.0)
    p2 = ModelParams(1.0, 1.0, 0.0, 2.0, 2.0)
    rp = rate_params_pp(dp, p1)
    assert rp == rate_params_pp(dp, p2)
    k = dp.k
    tau_free = min(rp.A1 * k / rp.alpha, rp.A3 * k)
    d1, d2 = rate_delta(rp, dp, p1), rate_delta(rp, dp, p2)
    assert d2 <= d1
    if d1 < tau_free:
        assert d2 == pytest.approx(d1 / 2, rel=1e-14) or d2 == pytest.approx(tau_free)


def test_rate_report_regimes():
    pe = rate_report(dparams(1.0, 1.0), ModelParams(1, 1))
    assert pe.sigma == pe.mu == pytest.approx(6 / 7)
    assert pe.zeta is None and pe.rate_vz_ee == pytest.approx(pe.mu / 44)
    pp = rate_report(dparams(0.5, 0.5), ModelParams(1, 1, 0, 10.0, 10.0))
    assert pp.sigma == pp.delta
    assert pp.zeta == pytest.approx(min(0.1, pp.delta / 2))
    assert pp.rate_vz_pp == pytest.approx(pp.zeta / 15)
    assert pp.rate_u_w == pytest.approx(pp.delta / 14)
    none_pe = rate_report(dparams(5.0, 5.0), ModelParams(1, 1))
    none_pp = rate_report(dparams(5.0, 5.0), ModelParams(1, 1, 0, 1.0, 1.0))
    for r in (none_pe, none_pp):
        assert all(getattr(r, f) is None for f in ("mu", "delta", "sigma", "zeta", "rate_u_w"))


def test_zeta_hand_min(monkeypatch):
    import chemotax.functionals as fn
    monkeypatch.setattr(fn, "rate_delta", lambda rp, dp, params: 1.0)
    pp = fn.rate_report(dparams(0.5, 0.5), ModelParams(1, 1, 0, 10.0, 10.0))
    assert pp.delta == 1.0 and pp.zeta == pytest.approx(0.1, rel=1e-15)


# -- inequalities ----------------------------------------------------------

def test_ckp_examples(unit8):
    one = np.ones(unit8.shape)
    assert ckp_gap(ns_from(one, one), unit8) == ((0.0, 0.0), (0.0, 0.0))
    U = split_field(unit8, 1.5, 0.5)
    (lhs, rhs), _ = ckp_gap(ns_from(U, one), unit8)
    assert lhs == pytest.approx(0.25, rel=1e-14)
    assert rhs == pytest.approx(2 * (0.75 * math.log(1.5) + 0.25 * math.log(0.5)), rel=1e-14)
    assert lhs < rhs


def test_poincare_gap_amplitude_scaling():
    d = DomainSpec(1.0, 1.0, 64, 64)
    X, _ = d.centers()
    one = np.ones(d.shape)
    assert poincare_gap(ns_from(one, one), 1.0, d)[0] == (0.0, 0.0)
    (l1, r1), _ = poincare_gap(ns_from(1 + 0.01 * np.cos(np.pi * X), one), 1.0, d)
    (l2, r2), _ = poincare_gap(ns_from(1 + 0.02 * np.cos(np.pi * X), one), 1.0, d)
    assert l2 / l1 == pytest.approx(4.0, rel=1e-12)
    assert r2 / r1 == pytest.approx(4.0, rel=1e-3)


# -- fits ------------------------------------------------------------------

def test_fit_examples():
    t = np.linspace(0, 5, 40)
    rate, r2 = fit_exponential_rate(t, 3 * np.exp(-2 * t))
    assert rate == pytest.approx(2.0, abs=1e-10) and r2 == pytest.approx(1.0)
    assert fit_exponential_rate(t, np.full(t.size, 7.0))[0] == 0.0
    rate, _ = fit_exponential_rate(t, np.exp(-t) * (1 + 0.01 * np.sin(t)))
    assert abs(rate - 1) < 0.02


def test_fit_errors():
    t = np.linspace(0, 1, 10)
    y = np.exp(-t)
    y[-1] = 0.0
    with pytest.raises(FitUndefined):
        fit_exponential_rate(t, y)
    with pytest.raises(ValueError):
        fit_exponential_rate(t[:5], y[:5])
