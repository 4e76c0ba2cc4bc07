"""Run configuration read from TOML.

Example::

    seed = 0

    [polytope]
    preset = "square"            # or a list of [[polytope.facets]] tables

    [deformation]
    kind = "polynomial"          # zero | constant (re/im scalar or matrix_re/matrix_im) | polynomial
    [[deformation.terms]]
    exponent = [2, 0]
    re = 0.05
    im = 0.0

    [spectral]
    name = "hyperkahler"         # linear | quadratic | hyperkahler | polynomial

    [affine]
    mode = "extremal"            # or "explicit" with coeffs = [a0, a1, ...]

    [solver]
    degree = 6
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

try:  # Python >= 3.11
    import tomllib
except ModuleNotFoundError:  # pragma: no cover
    import tomli as tomllib

from .basis import Polynomial
from .errors import ConfigError, PolytopeError, UnknownSpectralFunction
from .operator import DeformationHessian
from .polytope import PRESETS, DelzantPolytope, Facet, polygon_from_facets
from .solver import DEFAULT_SCHEDULE
from .spectral import SpectralFunction, builtin_spectral, polynomial_spectral
from .stability import extremal_affine


@dataclass
class RunConfig:
    polytope: dict = field(default_factory=lambda: {"preset": "interval"})
    deformation: dict = field(default_factory=lambda: {"kind": "constant", "re": 0.1, "im": 0.0})
    spectral: dict = field(default_factory=lambda: {"name": "quadratic"})
    affine: dict = field(default_factory=lambda: {"mode": "extremal"})
    degree: int = 8
    quad_order: int | None = None
    tol: float = 1e-9
    t_schedule: list = field(default_factory=lambda: list(DEFAULT_SCHEDULE))
    max_newton: int = 50
    seed: int = 0
    threads: int = 1
    out: str = "out"
    csv_points: int = 21
    n_probes: int = 1000
    siegel_n: int = 2
    siegel_trials: int = 1000
    oracle_mesh: int = 200
    verify: dict = field(default_factory=dict)

    # ------------------------------------------------------------ building

    def build_polytope(self) -> DelzantPolytope:
        spec = self.polytope
        try:
            if "preset" in spec:
                if spec["preset"] not in PRESETS:
                    raise ConfigError(f"unknown polytope preset {spec['preset']!r}")
                return PRESETS[spec["preset"]]()
            facets = spec.get("facets")
            if not facets:
                raise ConfigError("polytope needs 'preset' or 'facets'")
            return polygon_from_facets([Facet(tuple(f["normal"]), f["offset"]) for f in facets])
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"bad polytope spec: {exc}") from exc
        except PolytopeError as exc:
            raise ConfigError(f"invalid polytope: {exc}") from exc

    def build_deformation(self, dim: int) -> DeformationHessian:
        spec = self.deformation
        kind = spec.get("kind", "zero")
        try:
            if kind == "zero":
                return DeformationHessian.zero(dim)
            if kind == "constant":
                if "matrix_re" in spec or "matrix_im" in spec:
                    re = np.asarray(spec.get("matrix_re", np.zeros((dim, dim))), dtype=float)
                    im = np.asarray(spec.get("matrix_im", np.zeros((dim, dim))), dtype=float)
                    return DeformationHessian(dim, constant=re + 1j * im)
                # a scalar constant means h times the identity
                h = complex(spec.get("re", 0.0), spec.get("im", 0.0))
                return DeformationHessian(dim, constant=h * np.eye(dim))
            if kind == "polynomial":
                terms = spec.get("terms", [])
                exps = [list(t["exponent"]) for t in terms]
                if any(len(e) != dim for e in exps):
                    raise ConfigError("exponent length must equal the polytope dimension")
                coeffs = [complex(t.get("re", 0.0), t.get("im", 0.0)) for t in terms]
                if not terms:
                    return DeformationHessian.zero(dim)
                return DeformationHessian.from_potential(Polynomial(exps, np.array(coeffs)))
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"bad deformation spec: {exc}") from exc
        raise ConfigError(f"unknown deformation kind {kind!r}")

    def build_spectral(self) -> SpectralFunction:
        name = self.spectral.get("name", "quadratic")
        if name == "polynomial":
            coeffs = self.spectral.get("coeffs")
            if not coeffs:
                raise ConfigError("polynomial spectral function needs coeffs")
            return polynomial_spectral(coeffs)
        try:
            return builtin_spectral(name)
        except UnknownSpectralFunction as exc:
            raise ConfigError(f"unknown spectral function {name!r}") from exc

    def build_affine(self, P: DelzantPolytope) -> np.ndarray:
        mode = self.affine.get("mode", "extremal")
        if mode == "extremal":
            return extremal_affine(P)
        if mode == "explicit":
            A = np.asarray(self.affine.get("coeffs", []), dtype=float)
            if A.shape != (P.dim + 1,):
                raise ConfigError(f"explicit A needs {P.dim + 1} coefficients")
            return A
        raise ConfigError(f"unknown affine mode {mode!r}")

    def validate(self):
        if self.degree < 2:
            raise ConfigError("degree must be >= 2")
        if self.quad_order is not None and self.quad_order < 2 * self.degree:
            raise ConfigError("quad_order must be >= 2 * degree")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")
        sched = sorted(float(t) for t in self.t_schedule)
        if not sched or sched[0] < 0 or sched[-1] > 1:
            raise ConfigError("t_schedule must lie in [0, 1]")
        P = self.build_polytope()
        self.build_deformation(P.dim)
        self.build_spectral()
        self.build_affine(P)
        return self

    def to_dict(self):
        return dataclasses.asdict(self)


_SECTIONS = {
    "solver": ("degree", "quad_order", "tol", "t_schedule", "max_newton"),
    "output": ("out", "csv_points"),
    "stability": ("n_probes",),
    "oracle": ("oracle_mesh",),
}


def config_from_dict(data: dict) -> RunConfig:
    cfg = RunConfig()
    data = dict(data)
    for key in ("polytope", "deformation", "spectral", "affine", "verify"):
        if key in data:
            val = data.pop(key)
            if not isinstance(val, dict):
                raise ConfigError(f"[{key}] must be a table")
            setattr(cfg, key, val)
    for section, keys in _SECTIONS.items():
        sub = data.pop(section, {})
        for k, v in sub.items():
            if k not in keys:
                raise ConfigError(f"unknown key {section}.{k}")
            setattr(cfg, k, v)
    sieg = data.pop("siegel", {})
    for k, v in sieg.items():
        if k not in ("n", "trials"):
            raise ConfigError(f"unknown key siegel.{k}")
        setattr(cfg, f"siegel_{k}", v)
    for k in ("seed", "threads"):
        if k in data:
            setattr(cfg, k, data.pop(k))
    if data:
        raise ConfigError(f"unknown top-level keys: {sorted(data)}")
    return cfg


def load_config(path) -> RunConfig:
    try:
        with open(Path(path), "rb") as fh:
            data = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"config is not valid TOML: {exc}") from exc
    return config_from_dict(data)
