"""INI run configurations.

Sections and keys (all optional unless noted)::

    [domain]      Lx, Ly, nx, ny
    [model]       chi1, chi2 (required), chi3, tau1, tau2
    [initial_u]   builder = constant | gaussian | cosine | random, mass (required),
                  value, center_x, center_y, width, floor, amplitude, modes, seed, smoothing
    [initial_w]   same keys, or builder = symmetric_copy
    [signals]     v_scale, z_scale   (multiply the steady signals, tau > 0 only)
    [solver]      every SolverConfig field
    [diagnostics] every
    [constants]   k, cgn, estimate (bool), max_iter, n_random_starts, seed
    [output]      csv, snapshot, report   (relative to the config file)
"""
from __future__ import annotations

import configparser
import dataclasses
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .constants import OptConfig
from .errors import ConfigError
from .grid import DomainSpec
from .model import (ModelParams, build_constant, build_cosine_perturbation,
                    build_gaussian_bump, build_random_perturbation, build_symmetric_copy,
                    initial_state, SimState)
from .solver import SolverConfig

BUILDERS = ("constant", "gaussian", "cosine", "random")
_RANDOM_BUILDERS = ("random",)


@dataclass(frozen=True)
class InitialRecipe:
    builder: str
    mass: float | None = None
    value: float | None = None
    center: tuple[float, float] = (0.5, 0.5)
    width: float = 0.1
    floor: float | None = None
    amplitude: float = 0.5
    modes: tuple[tuple[int, int], ...] = ((1, 0),)
    seed: int | None = None
    smoothing: int = 2

    def build(self, dom: DomainSpec, seed_offset: int = 0) -> np.ndarray:
        b = self.builder
        if b == "constant":
            value = self.value if self.value is not None else self.mass / dom.area
            return build_constant(dom, value)
        if b == "gaussian":
            return build_gaussian_bump(dom, self.mass, self.center, self.width, self.floor)
        if b == "cosine":
            return build_cosine_perturbation(dom, self.mass, self.amplitude, self.modes)
        if b == "random":
            return build_random_perturbation(dom, self.mass, self.amplitude,
                                             self.seed + seed_offset, self.smoothing)
        raise ValueError(f"no builder {b!r}")


@dataclass(frozen=True)
class RunConfig:
    domain: DomainSpec
    params: ModelParams
    init_u: InitialRecipe
    init_w: InitialRecipe
    solver: SolverConfig
    diagnostics_every: int = 10
    v_scale: float = 1.0
    z_scale: float = 1.0
    k: float | None = None
    cgn: float | None = None
    estimate_constants: bool = False
    opt: OptConfig = field(default_factory=OptConfig)
    csv_path: Path | None = None
    snapshot_path: Path | None = None
    report_path: Path | None = None

    def with_masses(self, m1: float, m2: float, seed_offset: int = 0) -> "RunConfig":
        """Copy with new masses; randomized recipes get ``seed_offset`` added."""
        def upd(r: InitialRecipe, m):
            if r.builder == "symmetric_copy":
                return r
            kw = {"mass": m, "value": None}
            if r.seed is not None:
                kw["seed"] = r.seed + seed_offset
            return dataclasses.replace(r, **kw)
        return dataclasses.replace(self, init_u=upd(self.init_u, m1), init_w=upd(self.init_w, m2))

    def initial_state(self) -> SimState:
        dom, p = self.domain, self.params
        u0 = self.init_u.build(dom)
        if self.init_w.builder == "symmetric_copy":
            w0, _ = build_symmetric_copy(u0, u0, p)
        else:
            w0 = self.init_w.build(dom)
        s = initial_state(u0, w0, dom, p, backend=self.solver.helmholtz_backend)
        if p.fully_parabolic and (self.v_scale != 1.0 or self.z_scale != 1.0):
            s = SimState(0.0, s.u, self.v_scale * s.v, s.w, self.z_scale * s.z).validate(dom)
        return s


class _Locator:
    """Maps (section, key) to the line and value column in the raw text."""

    _sec = re.compile(r"^\s*\[([^\]]+)\]")
    _key = re.compile(r"^\s*([^=:\s][^=:]*?)\s*[=:]\s*")

    def __init__(self, text: str):
        self.pos: dict[tuple[str, str], tuple[int, int]] = {}
        self.sections: dict[str, int] = {}
        sec = None
        for ln, line in enumerate(text.splitlines(), 1):
            m = self._sec.match(line)
            if m:
                sec = m.group(1).strip()
                self.sections.setdefault(sec, ln)
                continue
            m = self._key.match(line)
            if m and sec is not None:
                self.pos.setdefault((sec, m.group(1).strip().lower()), (ln, m.end() + 1))

    def at(self, section, key=None):
        if key is not None and (section, key) in self.pos:
            return self.pos[(section, key)]
        return self.sections.get(section, 1), 1


_KNOWN = {
    "domain": {"lx", "ly", "nx", "ny"},
    "model": {"chi1", "chi2", "chi3", "tau1", "tau2"},
    "initial_u": {"builder", "mass", "value", "center_x", "center_y", "width", "floor",
                  "amplitude", "modes", "seed", "smoothing"},
    "signals": {"v_scale", "z_scale"},
    "solver": {f.name for f in dataclasses.fields(SolverConfig)},
    "diagnostics": {"every"},
    "constants": {"k", "cgn", "estimate", "max_iter", "n_random_starts", "seed"},
    "output": {"csv", "snapshot", "report"},
}
_KNOWN["initial_w"] = _KNOWN["initial_u"]


class _Reader:
    def __init__(self, cp: configparser.ConfigParser, loc: _Locator):
        self.cp, self.loc = cp, loc

    def fail(self, msg, section, key=None):
        line, col = self.loc.at(section, key)
        raise ConfigError(msg, line, col)

    def get(self, section, key, conv, default=None, required=False):
        if not self.cp.has_option(section, key):
            if required:
                self.fail(f"missing required key [{section}] {key}", section)
            return default
        raw = self.cp.get(section, key).strip()
        try:
            return conv(raw)
        except (ValueError, TypeError) as exc:
            self.fail(f"[{section}] {key}: cannot parse {raw!r} ({exc})", section, key)


def _bool(s):
    low = s.lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError("expected a boolean")


def _modes(s):
    out = []
    for part in s.split(";"):
        p, q = part.split(",")
        out.append((int(p), int(q)))
    return tuple(out)


def _recipe(r: _Reader, section: str, allow_symmetric: bool) -> InitialRecipe:
    if not r.cp.has_section(section):
        r.fail(f"missing section [{section}]", section)
    builder = r.get(section, "builder", str, required=True)
    choices = BUILDERS + (("symmetric_copy",) if allow_symmetric else ())
    if builder not in choices:
        r.fail(f"unknown builder {builder!r}; expected one of {', '.join(choices)}", section, "builder")
    if builder == "symmetric_copy":
        return InitialRecipe(builder)
    mass = r.get(section, "mass", float, required=builder != "constant" or
                 not r.cp.has_option(section, "value"))
    seed = r.get(section, "seed", int)
    if builder in _RANDOM_BUILDERS and seed is None:
        r.fail(f"builder {builder!r} needs a seed", section, "builder")
    return InitialRecipe(
        builder=builder,
        mass=mass,
        value=r.get(section, "value", float),
        center=(r.get(section, "center_x", float, 0.5), r.get(section, "center_y", float, 0.5)),
        width=r.get(section, "width", float, 0.1),
        floor=r.get(section, "floor", float),
        amplitude=r.get(section, "amplitude", float, 0.5),
        modes=r.get(section, "modes", _modes, ((1, 0),)),
        seed=seed,
        smoothing=r.get(section, "smoothing", int, 2),
    )


def parse_config(text: str, base_dir: Path | str = ".") -> RunConfig:
    """Parse INI text; every failure is a :class:`ConfigError` with a location."""
    cp = configparser.ConfigParser(interpolation=None)
    try:
        cp.read_string(text)
    except configparser.MissingSectionHeaderError as exc:
        raise ConfigError("key outside any section", exc.lineno, 1) from None
    except configparser.DuplicateOptionError as exc:
        raise ConfigError(f"duplicate key {exc.option!r} in [{exc.section}]", exc.lineno, 1) from None
    except configparser.DuplicateSectionError as exc:
        raise ConfigError(f"duplicate section [{exc.section}]", exc.lineno, 1) from None
    except configparser.ParsingError as exc:
        lineno = exc.errors[0][0] if exc.errors else None
        raise ConfigError("malformed line", lineno, 1) from None
    loc = _Locator(text)
    r = _Reader(cp, loc)

    for sec in cp.sections():
        if sec not in _KNOWN:
            r.fail(f"unknown section [{sec}]", sec)
        for key in cp.options(sec):
            if key not in _KNOWN[sec]:
                line, _ = loc.at(sec, key)
                raise ConfigError(f"unknown key {key!r} in [{sec}]", line, 1)

    base = Path(base_dir)
    dims = (r.get("domain", "lx", float, 1.0), r.get("domain", "ly", float, 1.0),
            r.get("domain", "nx", int, 64), r.get("domain", "ny", int, 64))
    try:
        dom = DomainSpec(*dims)
    except ValueError as exc:
        r.fail(str(exc), "domain")
    if not cp.has_section("model"):
        r.fail("missing section [model]", "model")
    coeffs = (r.get("model", "chi1", float, required=True),
              r.get("model", "chi2", float, required=True),
              r.get("model", "chi3", float, 0.0),
              r.get("model", "tau1", float, 0.0),
              r.get("model", "tau2", float, 0.0))
    try:
        params = ModelParams(*coeffs)
    except ValueError as exc:
        r.fail(str(exc), "model")

    init_u = _recipe(r, "initial_u", allow_symmetric=False)
    init_w = _recipe(r, "initial_w", allow_symmetric=True)
    if init_w.builder == "symmetric_copy" and params.tau1 != params.tau2:
        r.fail("symmetric_copy needs tau1 == tau2", "initial_w", "builder")

    kw = {}
    for f in dataclasses.fields(SolverConfig):
        conv = {int: int, float: float, str: str}.get(type(f.default), str)
        val = r.get("solver", f.name, conv)
        if val is not None:
            kw[f.name] = val
    try:
        solver = SolverConfig(**kw)
    except ValueError as exc:
        r.fail(str(exc), "solver")

    every = r.get("diagnostics", "every", int, 10)
    if every < 1:
        r.fail("every must be >= 1", "diagnostics", "every")

    def path(key):
        p = r.get("output", key, str)
        return None if p is None else base / p

    opt = OptConfig(n_random_starts=r.get("constants", "n_random_starts", int, 8),
                    max_iter=r.get("constants", "max_iter", int, 2000),
                    seed=r.get("constants", "seed", int, 0))
    return RunConfig(
        domain=dom, params=params, init_u=init_u, init_w=init_w, solver=solver,
        diagnostics_every=every,
        v_scale=r.get("signals", "v_scale", float, 1.0),
        z_scale=r.get("signals", "z_scale", float, 1.0),
        k=r.get("constants", "k", float), cgn=r.get("constants", "cgn", float),
        estimate_constants=r.get("constants", "estimate", _bool, False),
        opt=opt,
        csv_path=path("csv"), snapshot_path=path("snapshot"), report_path=path("report"),
    )


def load_config(path) -> RunConfig:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {p}: {exc.strerror}") from None
    return parse_config(text, p.parent)
