"""Model parameters, initial data and the normalising change of variables.

The system evolved here is

    u_t = div(grad u - chi1 u grad v),      tau1 v_t = Lap v - v + w,
    w_t = div(grad w - chi2 w grad z - chi3 w grad v),
    tau2 z_t = Lap z - z + u,

with homogeneous Neumann data.  The normalised variables are
U = u / mean(u0), W = w / mean(w0), V = chi1 (v - mean v), Z = chi2 (z - mean z).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import InvalidData, InvalidField, PreconditionViolation
from .grid import DomainSpec, check_field, integrate, mean, solve_helmholtz

PISTAR_RECTANGLE = 4.0 * math.pi


@dataclass(frozen=True)
class ModelParams:
    chi1: float
    chi2: float
    chi3: float = 0.0
    tau1: float = 0.0
    tau2: float = 0.0

    def __post_init__(self):
        if not (self.chi1 > 0 and self.chi2 > 0):
            raise PreconditionViolation(f"chi1, chi2 must be positive, got {self.chi1}, {self.chi2}")
        if self.tau1 < 0 or self.tau2 < 0:
            raise PreconditionViolation("relaxation times must be non-negative")
        if (self.tau1 == 0) != (self.tau2 == 0):
            raise PreconditionViolation(
                "mixed relaxation (one tau zero, the other positive) is not supported")

    @property
    def parabolic_elliptic(self) -> bool:
        return self.tau1 == 0 and self.tau2 == 0

    @property
    def fully_parabolic(self) -> bool:
        return self.tau1 > 0 and self.tau2 > 0


@dataclass(frozen=True)
class DerivedParams:
    """Masses, means and the scalar groups entering the decay conditions.

    ``k`` and ``cgn`` are the domain constants; ``k_source`` / ``cgn_source`` say
    whether they were supplied by the user or came out of an estimator (in
    which case they are lower bounds, see :mod:`chemotax.constants`).
    """
    m1: float
    m2: float
    area: float
    chi1: float
    chi2: float
    chi3: float
    k: float | None = None
    cgn: float | None = None
    k_source: str = "absent"
    cgn_source: str = "absent"
    pistar: float = PISTAR_RECTANGLE

    @property
    def u0bar(self) -> float:
        return self.m1 / self.area

    @property
    def w0bar(self) -> float:
        return self.m2 / self.area

    @property
    def eta1(self) -> float:
        return self.chi1 * self.w0bar

    @property
    def eta2(self) -> float:
        return self.chi2 * self.u0bar

    @property
    def chi(self) -> float:
        return self.chi3 / self.chi1

    def with_constants(self, k=None, cgn=None, source="user") -> "DerivedParams":
        upd = {}
        if k is not None:
            upd.update(k=float(k), k_source=source)
        if cgn is not None:
            upd.update(cgn=float(cgn), cgn_source=source)
        return replace(self, **upd)


def derive_params(u0, w0, params: ModelParams, dom: DomainSpec, k=None, cgn=None,
                  source: str = "user") -> DerivedParams:
    m1 = integrate(u0, dom)
    m2 = integrate(w0, dom)
    if not (m1 > 0 and m2 > 0):
        raise InvalidData(f"masses must be positive, got m1={m1}, m2={m2}")
    dp = DerivedParams(m1, m2, dom.area, params.chi1, params.chi2, params.chi3)
    return dp.with_constants(k=k, cgn=cgn, source=source)


@dataclass
class SimState:
    t: float
    u: np.ndarray
    v: np.ndarray
    w: np.ndarray
    z: np.ndarray

    def copy(self) -> "SimState":
        return SimState(self.t, self.u.copy(), self.v.copy(), self.w.copy(), self.z.copy())

    def validate(self, dom: DomainSpec) -> "SimState":
        for name in ("u", "v", "w", "z"):
            check_field(getattr(self, name), dom, name)
        if self.u.min() <= 0 or self.w.min() <= 0:
            raise InvalidField("densities u and w must be strictly positive")
        return self


@dataclass
class NormalizedState:
    t: float
    U: np.ndarray
    V: np.ndarray
    W: np.ndarray
    Z: np.ndarray
    # means of v and z removed by the transform, kept for the inverse map
    vbar: float = 0.0
    zbar: float = 0.0


# ---------------------------------------------------------------------------
# initial data


def default_floor(mass: float, dom: DomainSpec) -> float:
    return 1e-8 * mass / dom.area


def _rescale_with_floor(profile: np.ndarray, mass: float, floor: float, dom: DomainSpec) -> np.ndarray:
    if floor <= 0:
        raise InvalidData("floor must be strictly positive")
    excess = mass - floor * dom.area
    if excess <= 0:
        raise InvalidData(f"mass {mass} does not exceed floor*area = {floor * dom.area}")
    p_int = integrate(profile, dom)
    if p_int <= 0:
        return np.full(dom.shape, mass / dom.area)
    return floor + profile * (excess / p_int)


def build_constant(dom: DomainSpec, value: float) -> np.ndarray:
    return np.full(dom.shape, float(value))


def build_gaussian_bump(dom: DomainSpec, mass: float, center=(0.5, 0.5), width: float = 0.1,
                        floor: float | None = None) -> np.ndarray:
    """Strictly positive Gaussian bump plus floor, rescaled to carry ``mass`` exactly.

    A very large ``width`` degenerates to the flat field ``mass / area``.
    """
    if mass <= 0:
        raise InvalidData("mass must be positive")
    if width <= 0:
        raise InvalidData("width must be positive")
    cx, cy = center
    if not (0 <= cx <= dom.Lx and 0 <= cy <= dom.Ly):
        raise InvalidData(f"center {center} lies outside the closed domain")
    floor = default_floor(mass, dom) if floor is None else floor
    X, Y = dom.centers()
    r2 = (X - cx) ** 2 + (Y - cy) ** 2
    profile = np.exp(-r2 / (2.0 * width**2))
    return _rescale_with_floor(profile, mass, floor, dom)


def build_cosine_perturbation(dom: DomainSpec, mass: float, amplitude: float = 0.5,
                              modes=((1, 0),)) -> np.ndarray:
    """``mean * (1 + amplitude * sum cos(p pi x/Lx) cos(q pi y/Ly))`` over ``modes``."""
    X, Y = dom.centers()
    shape = np.zeros(dom.shape)
    for p, q in modes:
        shape += np.cos(p * np.pi * X / dom.Lx) * np.cos(q * np.pi * Y / dom.Ly)
    f = (mass / dom.area) * (1.0 + amplitude * shape)
    if f.min() <= 0:
        raise InvalidData("perturbation amplitude too large, field not positive")
    # cosines at cell centres sum to zero, but rescale so the mass is exact
    return f * (mass / integrate(f, dom))


def build_random_perturbation(dom: DomainSpec, mass: float, amplitude: float, seed: int,
                              smoothing: int = 2) -> np.ndarray:
    """Seeded smooth random positive field with prescribed mass."""
    if not 0 <= amplitude < 1:
        raise InvalidData("amplitude must lie in [0, 1)")
    rng = np.random.default_rng(seed)
    noise = rng.standard_normal(dom.shape)
    for _ in range(smoothing):
        p = np.pad(noise, 1, mode="edge")
        noise = (p[2:, 1:-1] + p[:-2, 1:-1] + p[1:-1, 2:] + p[1:-1, :-2] + 4 * noise) / 8.0
    noise -= noise.mean()
    peak = np.max(np.abs(noise))
    if peak > 0:
        noise /= peak
    f = 1.0 + amplitude * noise
    return f * (mass / integrate(f, dom))


def build_symmetric_copy(u0: np.ndarray, v0: np.ndarray, params: ModelParams):
    """Initial data ``(w0, z0) = ((chi2/chi1) u0, (chi1/chi2) v0)``.

    With ``tau1 == tau2`` and ``chi3 == 0`` the full system then reduces to one
    copy of the minimal Keller-Segel model, and the masses lie on the line
    ``m1 chi2 == m2 chi1``.
    """
    if params.tau1 != params.tau2:
        raise PreconditionViolation("symmetric reduction requires tau1 == tau2")
    return (params.chi2 / params.chi1) * u0, (params.chi1 / params.chi2) * v0


def steady_signals(u: np.ndarray, w: np.ndarray, dom: DomainSpec, backend: str = "dct"):
    """Signals solving ``(I - Lap) v = w`` and ``(I - Lap) z = u``."""
    return solve_helmholtz(w, dom, backend=backend), solve_helmholtz(u, dom, backend=backend)


def initial_state(u0, w0, dom: DomainSpec, params: ModelParams, v0=None, z0=None,
                  backend: str = "dct") -> SimState:
    """Assemble a :class:`SimState` at ``t = 0``.

    In the parabolic-elliptic case the signals are slaved to the densities and
    any supplied ``v0``/``z0`` are ignored.
    """
    u0 = check_field(u0, dom, "u0")
    w0 = check_field(w0, dom, "w0")
    if params.parabolic_elliptic or v0 is None or z0 is None:
        vs, zs = steady_signals(u0, w0, dom, backend)
        if params.parabolic_elliptic:
            v0, z0 = vs, zs
        else:
            v0 = vs if v0 is None else v0
            z0 = zs if z0 is None else z0
    state = SimState(0.0, u0.copy(), np.array(v0, float), w0.copy(), np.array(z0, float))
    return state.validate(dom)


def normalize(state: SimState, dp: DerivedParams, dom: DomainSpec) -> NormalizedState:
    if not (dp.m1 > 0 and dp.m2 > 0):
        raise InvalidData("zero mass cannot be normalised")
    vbar = mean(state.v, dom)
    zbar = mean(state.z, dom)
    return NormalizedState(
        t=state.t,
        U=state.u / dp.u0bar,
        V=dp.chi1 * (state.v - vbar),
        W=state.w / dp.w0bar,
        Z=dp.chi2 * (state.z - zbar),
        vbar=vbar,
        zbar=zbar,
    )


def denormalize(ns: NormalizedState, dp: DerivedParams) -> SimState:
    return SimState(
        t=ns.t,
        u=ns.U * dp.u0bar,
        v=ns.V / dp.chi1 + ns.vbar,
        w=ns.W * dp.w0bar,
        z=ns.Z / dp.chi2 + ns.zbar,
    )
