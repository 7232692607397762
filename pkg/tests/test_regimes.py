import math

import numpy as np
import pytest

from chemotax.model import DerivedParams, ModelParams
from chemotax.regimes import (check_b1, check_b3, check_b4, classify, format_verdict)

PI4 = 4 * math.pi


def dp_for(p: ModelParams, m1, m2, k=1.0, cgn=None, area=1.0):
    return DerivedParams(m1, m2, area, p.chi1, p.chi2, p.chi3, k=k, cgn=cgn,
                         k_source="user" if k is not None else "absent",
                         cgn_source="user" if cgn is not None else "absent")


def test_b1_parabolic_elliptic():
    p = ModelParams(1.0, 1.0, 0.0)
    ok, margin = check_b1(p, 10.0, 10.0, dp_for(p, 10, 10))
    assert ok and margin == pytest.approx(16 * math.pi**2 - 100)
    ok, margin = check_b1(p, PI4, PI4, dp_for(p, PI4, PI4))
    assert not ok and margin == pytest.approx(0.0, abs=1e-12)


def test_b1_fully_parabolic():
    p = ModelParams(1.0, 1.0, 0.0, 1.0, 1.0)
    ok, margin = check_b1(p, 0.2, 1.0, dp_for(p, 0.2, 1.0, cgn=1.0))
    assert ok and margin == pytest.approx(0.25 - 0.2)
    ok, _ = check_b1(p, 0.2, 1.0, dp_for(p, 0.2, 1.0, cgn=None))
    assert not ok
    q = ModelParams(1.0, 1.0, 1.0, 1.0, 1.0)
    ok, margin = check_b1(q, 0.1, 1.0, dp_for(q, 0.1, 1.0, cgn=1.0))
    assert not ok and math.isnan(margin)


def test_b3_examples():
    p = ModelParams(1.0, 1.0, 0.0)
    assert check_b3(p, 3.9, 1.0, dp_for(p, 3.9, 1.0))
    assert not check_b3(p, 4.1, 1.0, dp_for(p, 4.1, 1.0))
    assert not check_b3(p, 1.0, 1.0, dp_for(p, 1.0, 1.0, k=None))
    # repulsion drops out
    r = ModelParams(1.0, 1.0, -5.0)
    assert check_b3(r, 3.9, 1.0, dp_for(r, 3.9, 1.0))
    q = ModelParams(1.0, 1.0, math.sqrt(2), 1.0, 1.0)
    assert not check_b3(q, 0.1, 1.0, dp_for(q, 0.1, 1.0))


def test_b4_examples():
    p = ModelParams(1.0, 1.0, 0.0)
    assert check_b4(p, 13, 13, dp_for(p, 13, 13)) == (True, True)
    assert check_b4(p, 12, 12, dp_for(p, 12, 12)) == (True, False)
    q = ModelParams(1.0, 1.0, 0.1)
    assert check_b4(q, 13, 13, dp_for(q, 13, 13)) == (False, False)
    off = ModelParams(1.0, 1.0, 0.0, 1.0, 2.0)
    assert check_b4(off, 13, 13, dp_for(off, 13, 13))[0] is False


def test_classify_regimes_and_rates():
    p = ModelParams(1.0, 1.0, 0.0)
    v = classify(p, dp_for(p, 13, 13))
    assert v.regime == "blowup" and not v.b1_bounded
    assert "b4 blowup_mass=true" in format_verdict(v)
    v = classify(p, dp_for(p, 1, 1))
    assert v.regime == "converges" and v.rates.sigma > 0
    assert v.as_record()["rates.mu"] == v.rates.mu
    v = classify(p, dp_for(p, 10, 10))
    assert v.regime == "bounded" and v.rates.sigma is None
    # on the line B1 and B4 share one threshold, so the silent band lies off it
    v = classify(p, dp_for(p, 12.7, 12.7))
    assert v.regime == "blowup"
    v = classify(p, dp_for(p, 20.0, 9.0))
    assert v.regime == "theory-silent"


def test_forms_agree_on_random_draws():
    rng = np.random.default_rng(2024)
    for _ in range(1000):
        chi1, chi2 = rng.uniform(0.05, 3, 2)
        chi3 = rng.uniform(-3, 3)
        tau = float(rng.choice([0.0, 1.0]))
        p = ModelParams(chi1, chi2, chi3, tau, tau)
        m1, m2 = rng.uniform(0.01, 6, 2)
        area = rng.uniform(0.5, 3)
        k = rng.uniform(0.2, 3)
        check_b3(p, m1, m2, dp_for(p, m1, m2, k=k, area=area))   # raises on disagreement


def test_b1_and_blowup_disjoint_on_line():
    rng = np.random.default_rng(5)
    for _ in range(500):
        chi1, chi2 = rng.uniform(0.1, 3, 2)
        m1 = rng.uniform(0.1, 30)
        m2 = m1 * chi2 / chi1
        p = ModelParams(chi1, chi2, 0.0)
        dp = dp_for(p, m1, m2)
        b1, _ = check_b1(p, m1, m2, dp)
        on_line, blowup = check_b4(p, m1, m2, dp)
        assert on_line and not (b1 and blowup)
        assert blowup <= on_line
