import math

import numpy as np
import pytest

from chemotax.constants import (OptConfig, estimate_cgn, estimate_k, gn_ratio, k_ratio,
                                k_convex_lower_reference, l2_poincare_ratio, neumann_lambda1,
                                pistar, poincare_l2_oracle)
from chemotax.grid import DomainSpec

FAST = OptConfig(n_random_starts=2, max_iter=200)


def test_pistar_rectangles():
    assert pistar(DomainSpec(1, 1, 8, 8)) == pytest.approx(12.566370614, abs=1e-9)
    assert pistar(DomainSpec(3, 0.5, 8, 8)) == 4 * math.pi


def test_gn_ratio_of_constant():
    d = DomainSpec(2.0, 1.5, 16, 16)
    assert gn_ratio(np.ones(d.shape), d) == pytest.approx(1 / (8 * d.area), rel=1e-14)


def test_gn_ratio_scale_invariant(rng):
    d = DomainSpec(1, 1, 16, 16)
    for _ in range(20):
        psi = rng.standard_normal(d.shape)
        lam = rng.uniform(-50, 50)
        assert gn_ratio(lam * psi, d) == pytest.approx(gn_ratio(psi, d), rel=1e-12)


def test_k_ratio_warm_start_independent_of_amplitude():
    d = DomainSpec(1, 1, 64, 64)
    X, _ = d.centers()
    mode = np.cos(np.pi * X)
    r1 = k_ratio(1 + 1e-2 * mode, d)
    r2 = k_ratio(1 + 1e-3 * mode, d)
    assert r1 == pytest.approx(r2, rel=1e-10)


def test_estimate_k_is_lower_bound_consistent():
    d = DomainSpec(1, 1, 32, 32)
    est = estimate_k(d, FAST)
    assert est.bound_direction == "lower"
    ref = k_convex_lower_reference(d)
    assert est.value >= 0.5 * ref
    assert est.value <= 100 * ref
    assert est.value == pytest.approx(4 * d.area / k_ratio(est.best_test_function, d), rel=1e-12)


def test_estimate_k_history_monotone_and_deterministic():
    d = DomainSpec(1, 1, 32, 32)
    a = estimate_k(d, FAST)
    b = estimate_k(d, FAST)
    assert a.value == b.value
    h = a.residual_history
    assert all(x >= y for x, y in zip(h, h[1:]))


def test_estimate_cgn_lower_bound():
    d = DomainSpec(1, 1, 32, 32)
    est = estimate_cgn(d, FAST)
    assert est.bound_direction == "lower"
    assert est.value >= 1 / (8 * d.area)
    assert est.value == pytest.approx(gn_ratio(est.best_test_function, d), rel=1e-12)


def test_l2_oracle_refinement_improves():
    errs = []
    for n in (16, 32, 64):
        d = DomainSpec(2.0, 1.0, 2 * n, n)
        val = poincare_l2_oracle(d, FAST)
        errs.append(abs(val - neumann_lambda1(d)) / neumann_lambda1(d))
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] < 0.02


def test_l2_ratio_of_lowest_mode():
    d = DomainSpec(1, 1, 64, 64)
    X, _ = d.centers()
    assert l2_poincare_ratio(1 + np.cos(np.pi * X), d) == pytest.approx(math.pi**2, rel=1e-3)
