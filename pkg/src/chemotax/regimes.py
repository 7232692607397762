"""Arithmetic classifier for the boundedness, convergence and blow-up hypotheses.

Everything here is a pure function of the parameters, the masses and the
domain constants carried by :class:`DerivedParams`.  When a constant came out
of an estimator it is a lower bound, which makes the smallness conditions
easier to satisfy than the true ones; the verdict records that provenance.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

from .functionals import PP_LOWER, RateReport, pe_condition, pp_admissible, rate_report
from .model import DerivedParams, ModelParams

SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class Condition:
    name: str
    lhs: float
    rhs: float
    holds: bool
    note: str = ""


@dataclass
class RegimeVerdict:
    b1_bounded: bool
    b1_margin: float
    b3_converges: bool
    b4_on_blowup_line: bool
    b4_blowup_mass: bool
    applicable_conditions: list[Condition] = field(default_factory=list)
    rates: RateReport = field(default_factory=RateReport)
    regime: str = "theory-silent"
    k_source: str = "absent"
    cgn_source: str = "absent"

    def as_record(self) -> dict:
        """Flat machine-readable record."""
        rec = {
            "regime": self.regime,
            "b1_bounded": self.b1_bounded,
            "b1_margin": self.b1_margin,
            "b3_converges": self.b3_converges,
            "b4_on_blowup_line": self.b4_on_blowup_line,
            "b4_blowup_mass": self.b4_blowup_mass,
            "k_source": self.k_source,
            "cgn_source": self.cgn_source,
        }
        for name in ("mu", "delta", "sigma", "zeta", "rate_u_w", "rate_vz_ee", "rate_vz_pp"):
            rec[f"rates.{name}"] = getattr(self.rates, name)
        return rec


def b1_condition(params: ModelParams, m1: float, m2: float, dp: DerivedParams) -> Condition:
    prod = m1 * m2 * params.chi1 * params.chi2
    if params.parabolic_elliptic:
        ps = dp.pistar
        rhs = (ps - m2 * params.chi3) * ps
        return Condition("B1 (tau=0)", prod, rhs, prod < rhs)
    if dp.cgn is None:
        return Condition("B1 (tau>0)", prod, math.nan, False, "C_GN unavailable")
    c4 = dp.cgn**4
    radicand = 1.0 - 4.0 * m2 * params.chi3 * c4
    if radicand < 0:
        return Condition("B1 (tau>0)", prod, math.nan, False,
                         "threshold undefined: 1 - 4 m2 chi3 C_GN^4 < 0")
    rhs = math.sqrt(radicand) / (4.0 * c4 * c4)
    return Condition("B1 (tau>0)", prod, rhs, prod < rhs)


def check_b1(params: ModelParams, m1: float, m2: float, dp: DerivedParams) -> tuple[bool, float]:
    c = b1_condition(params, m1, m2, dp)
    return c.holds, c.rhs - c.lhs


def _b3_mass_form(params: ModelParams, m1, m2, dp: DerivedParams) -> list[Condition]:
    k, area = dp.k, dp.area
    prod = k * k * m1 * m2 * params.chi1 * params.chi2
    if params.parabolic_elliptic:
        lhs = prod + k * m2 * area * max(params.chi3, 0.0)
        rhs = 4.0 * area * area
        return [Condition("B3 (tau=0)", lhs, rhs, lhs < rhs)]
    s = k * m2 * params.chi3 / area
    rhs = (2.0 * SQRT2 / 3.0) * area * area * min(1.0, 1.5 + s)
    return [
        Condition("B3 (tau>0) lower", PP_LOWER, s, PP_LOWER < s),
        Condition("B3 (tau>0) upper", s, SQRT2, s < SQRT2),
        Condition("B3 (tau>0) product", prod, rhs, prod < rhs),
    ]


def check_b3(params: ModelParams, m1: float, m2: float, dp: DerivedParams) -> bool:
    """Convergence hypothesis; ``False`` when no k is available.

    The mass form and the normalised eta form are evaluated independently and
    must agree; a disagreement means a transcription error and raises.
    """
    if dp.k is None:
        return False
    mass_form = all(c.holds for c in _b3_mass_form(params, m1, m2, dp))
    if params.parabolic_elliptic:
        lhs, rhs = pe_condition(dp)
        eta_form = lhs < rhs
    else:
        eta_form = pp_admissible(dp)
    if mass_form != eta_form and not _near_boundary(params, m1, m2, dp):
        raise ArithmeticError("B3 mass form and eta form disagree")
    return eta_form


def _near_boundary(params, m1, m2, dp, rel=1e-12) -> bool:
    # the two forms differ only by rounding when a quantity sits on a threshold
    for c in _b3_mass_form(params, m1, m2, dp):
        if abs(c.lhs - c.rhs) <= rel * max(abs(c.lhs), abs(c.rhs), 1.0):
            return True
    return False


def check_b4(params: ModelParams, m1: float, m2: float, dp: DerivedParams,
             line_tol: float = 1e-12) -> tuple[bool, bool]:
    a, b = m1 * params.chi2, m2 * params.chi1
    on_line = (params.tau1 == params.tau2 and params.chi3 == 0
               and abs(a - b) <= line_tol * max(a, b))
    blowup = on_line and m1 * m2 * params.chi1 * params.chi2 > dp.pistar**2
    return on_line, blowup


def classify(params: ModelParams, dp: DerivedParams) -> RegimeVerdict:
    m1, m2 = dp.m1, dp.m2
    b1c = b1_condition(params, m1, m2, dp)
    conds = [b1c]
    b3 = check_b3(params, m1, m2, dp)
    if dp.k is not None:
        conds.extend(_b3_mass_form(params, m1, m2, dp))
    on_line, blowup = check_b4(params, m1, m2, dp)
    conds.append(Condition("B4 line", m1 * params.chi2, m2 * params.chi1, on_line))
    conds.append(Condition("B4 mass", m1 * m2 * params.chi1 * params.chi2, dp.pistar**2, blowup))
    if blowup:
        regime = "blowup"
    elif b3:
        regime = "converges"
    elif b1c.holds:
        regime = "bounded"
    else:
        regime = "theory-silent"
    return RegimeVerdict(
        b1_bounded=b1c.holds,
        b1_margin=b1c.rhs - b1c.lhs,
        b3_converges=b3,
        b4_on_blowup_line=on_line,
        b4_blowup_mass=blowup,
        applicable_conditions=conds,
        rates=rate_report(dp, params) if b3 else RateReport(),
        regime=regime,
        k_source=dp.k_source,
        cgn_source=dp.cgn_source,
    )


def format_verdict(v: RegimeVerdict) -> str:
    lines = [f"{'condition':<22}{'lhs':>16}{'rhs':>16}  holds  note"]
    for c in v.applicable_conditions:
        lines.append(f"{c.name:<22}{c.lhs:>16.8g}{c.rhs:>16.8g}  {str(c.holds):<5}  {c.note}")
    lines.append(f"regime={v.regime} b1_bounded={v.b1_bounded} b3_converges={v.b3_converges} "
                 f"b4_on_line={v.b4_on_blowup_line} b4 blowup_mass={str(v.b4_blowup_mass).lower()}")
    lines.append(f"constants: k from {v.k_source}, C_GN from {v.cgn_source}")
    return "\n".join(lines)
