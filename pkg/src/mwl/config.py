"""Experiment configuration: one versioned JSON document drives the pipeline.

Structural problems (missing blocks, wrong types, unknown keys) raise
:class:`ParseError`; numeric constraints of the downstream modules raise
:class:`PreconditionError`. Both are checked before any computation starts.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

from . import jsonio
from .chernoff import BoundParams
from .errors import ParseError, PreconditionError, StorageError
from .manifold import Sphere
from .spectral import GAP_CONVENTIONS
from .tensor import PolynomialSpec, TensorShape
from .walk import OBSERVABLE_KINDS

CONFIG_VERSION = 1
SAMPLING_METHODS = ("epsilon_net", "uniform", "lattice")


@dataclass(frozen=True)
class ManifoldBlock:
    family: str = "sphere"
    dim: int = 1
    radius: float = 1.0
    scale_by_radius: bool = False


@dataclass(frozen=True)
class SamplingBlock:
    method: str = "epsilon_net"
    epsilon: float | None = None
    n_points: int | None = None
    mc_points: int = 200_000
    seed: int = 0
    probes: int = 100_000


@dataclass(frozen=True)
class GraphBlock:
    kappa: float | None = None
    kappa_factor: float = 4.0
    include_self_weight: bool = False


@dataclass(frozen=True)
class WalkBlock:
    K: int = 4
    trials: int = 10_000
    observable: str = "random"
    r: float = 1.0
    seed: int = 0
    shape: tuple = (2, 2)
    center: bool = False


@dataclass(frozen=True)
class PolynomialBlock:
    coeffs: tuple = (0.0, 1.0)
    s: int = 1


@dataclass(frozen=True)
class ThetaGrid:
    n: int = 50
    stretch: float = 1.0
    values: tuple | None = None


@dataclass(frozen=True)
class BoundBlock:
    C_env: float = 1.0
    sigma: float = 1.0
    ky_fan_k: int = 1
    theta: ThetaGrid = field(default_factory=ThetaGrid)
    t_max: float = 10.0
    tol: float = 1e-9
    gap_convention: str = "absolute_second"
    envelope_C_const: float = 1.0
    c_omega: float = 1.0


@dataclass(frozen=True)
class ExperimentConfig:
    manifold: ManifoldBlock = field(default_factory=ManifoldBlock)
    sampling: SamplingBlock = field(default_factory=SamplingBlock)
    graph: GraphBlock = field(default_factory=GraphBlock)
    walk: WalkBlock = field(default_factory=WalkBlock)
    polynomial: PolynomialBlock = field(default_factory=PolynomialBlock)
    bound: BoundBlock = field(default_factory=BoundBlock)
    version: int = CONFIG_VERSION

    @property
    def sphere(self):
        return Sphere(self.manifold.dim, self.manifold.radius)

    @property
    def poly(self):
        return PolynomialSpec(self.polynomial.coeffs, self.polynomial.s)

    @property
    def shape(self):
        return TensorShape(self.walk.shape)

    def bound_params(self, theta=1.0):
        b = self.bound
        return BoundParams(self.walk.K, self.walk.r, self.poly, b.C_env, b.sigma, self.shape,
                           b.ky_fan_k, theta)

    def to_dict(self):
        doc = asdict(self)
        doc["walk"]["shape"] = list(self.walk.shape)
        doc["polynomial"]["coeffs"] = list(self.polynomial.coeffs)
        theta = doc["bound"].pop("theta")
        if theta["values"] is None:
            del theta["values"]
        else:
            theta["values"] = list(theta["values"])
        doc["bound"]["theta"] = theta
        doc["bound"]["envelope"] = {"C_const": doc["bound"].pop("envelope_C_const")}
        return {"version": doc.pop("version"), **doc}

    def to_json(self):
        return jsonio.dumps(self.to_dict(), indent=1) + "\n"


_NUM = (int, float)


def _typed(block, key, kinds, where, default):
    if key not in block:
        return default
    val = block[key]
    if val is None and default is None:
        return None
    if isinstance(val, bool) and bool not in kinds:
        raise ParseError(f"{where}.{key}: expected {'/'.join(k.__name__ for k in kinds)}, got bool")
    if not isinstance(val, kinds):
        raise ParseError(f"{where}.{key}: expected {'/'.join(k.__name__ for k in kinds)}, "
                         f"got {type(val).__name__}")
    return val


def _block(doc, name, allowed):
    blk = doc.get(name, {})
    if not isinstance(blk, dict):
        raise ParseError(f"{name}: expected an object")
    extra = sorted(set(blk) - set(allowed))
    if extra:
        raise ParseError(f"{name}: unknown field(s) {', '.join(extra)}")
    return blk


def _int_list(val, where):
    if not isinstance(val, list) or not all(isinstance(v, int) and not isinstance(v, bool) for v in val):
        raise ParseError(f"{where}: expected a list of integers")
    return tuple(val)


def _num_list(val, where):
    if not isinstance(val, list) or not all(isinstance(v, _NUM) and not isinstance(v, bool) for v in val):
        raise ParseError(f"{where}: expected a list of numbers")
    return tuple(float(v) for v in val)


def config_from_dict(doc, source="<config>"):
    """Parse and validate a config document."""
    if not isinstance(doc, dict):
        raise ParseError(f"{source}: top level must be an object")
    top = {"version", "manifold", "sampling", "graph", "walk", "polynomial", "bound"}
    extra = sorted(set(doc) - top)
    if extra:
        raise ParseError(f"{source}: unknown block(s) {', '.join(extra)}")
    if doc.get("version") != CONFIG_VERSION:
        raise ParseError(f"{source}: config version must be {CONFIG_VERSION}")

    m = _block(doc, "manifold", ("family", "dim", "radius", "scale_by_radius"))
    manifold = ManifoldBlock(
        _typed(m, "family", (str,), "manifold", "sphere"),
        _typed(m, "dim", (int,), "manifold", 1),
        float(_typed(m, "radius", _NUM, "manifold", 1.0)),
        _typed(m, "scale_by_radius", (bool,), "manifold", False),
    )
    s = _block(doc, "sampling", ("method", "epsilon", "n_points", "mc_points", "seed", "probes"))
    eps = _typed(s, "epsilon", _NUM, "sampling", None)
    sampling = SamplingBlock(
        _typed(s, "method", (str,), "sampling", "epsilon_net"),
        None if eps is None else float(eps),
        _typed(s, "n_points", (int,), "sampling", None),
        _typed(s, "mc_points", (int,), "sampling", 200_000),
        _typed(s, "seed", (int,), "sampling", 0),
        _typed(s, "probes", (int,), "sampling", 100_000),
    )
    g = _block(doc, "graph", ("kappa", "kappa_factor", "include_self_weight"))
    kappa = _typed(g, "kappa", _NUM, "graph", None)
    graph = GraphBlock(
        None if kappa is None else float(kappa),
        float(_typed(g, "kappa_factor", _NUM, "graph", 4.0)),
        _typed(g, "include_self_weight", (bool,), "graph", False),
    )
    w = _block(doc, "walk", ("K", "trials", "observable", "r", "seed", "shape", "center"))
    walk = WalkBlock(
        _typed(w, "K", (int,), "walk", 4),
        _typed(w, "trials", (int,), "walk", 10_000),
        _typed(w, "observable", (str,), "walk", "random"),
        float(_typed(w, "r", _NUM, "walk", 1.0)),
        _typed(w, "seed", (int,), "walk", 0),
        _int_list(w["shape"], "walk.shape") if "shape" in w else (2, 2),
        _typed(w, "center", (bool,), "walk", False),
    )
    p = _block(doc, "polynomial", ("coeffs", "s"))
    polynomial = PolynomialBlock(
        _num_list(p["coeffs"], "polynomial.coeffs") if "coeffs" in p else (0.0, 1.0),
        _typed(p, "s", (int,), "polynomial", 1),
    )
    b = _block(doc, "bound", ("C_env", "sigma", "ky_fan_k", "theta", "t_max", "tol",
                              "gap_convention", "envelope", "c_omega"))
    th = b.get("theta", {})
    if not isinstance(th, dict):
        raise ParseError("bound.theta: expected an object")
    extra = sorted(set(th) - {"n", "stretch", "values"})
    if extra:
        raise ParseError(f"bound.theta: unknown field(s) {', '.join(extra)}")
    theta = ThetaGrid(
        _typed(th, "n", (int,), "bound.theta", 50),
        float(_typed(th, "stretch", _NUM, "bound.theta", 1.0)),
        _num_list(th["values"], "bound.theta.values") if "values" in th else None,
    )
    env = b.get("envelope", {})
    if not isinstance(env, dict) or set(env) - {"C_const"}:
        raise ParseError("bound.envelope: expected an object with optional field C_const")
    bound = BoundBlock(
        float(_typed(b, "C_env", _NUM, "bound", 1.0)),
        float(_typed(b, "sigma", _NUM, "bound", 1.0)),
        _typed(b, "ky_fan_k", (int,), "bound", 1),
        theta,
        float(_typed(b, "t_max", _NUM, "bound", 10.0)),
        float(_typed(b, "tol", _NUM, "bound", 1e-9)),
        _typed(b, "gap_convention", (str,), "bound", "absolute_second"),
        float(_typed(env, "C_const", _NUM, "bound.envelope", 1.0)),
        float(_typed(b, "c_omega", _NUM, "bound", 1.0)),
    )
    cfg = ExperimentConfig(manifold, sampling, graph, walk, polynomial, bound)
    validate(cfg)
    return cfg


def _positive(name, v):
    if not (math.isfinite(v) and v > 0):
        raise PreconditionError(f"{name} must be finite and positive, got {v}")


def validate(cfg):
    """Check every numeric constraint the pipeline stages will rely on."""
    if cfg.manifold.family != "sphere":
        raise PreconditionError(f"unsupported manifold family {cfg.manifold.family!r}")
    d = cfg.sphere
    s = cfg.sampling
    if s.method not in SAMPLING_METHODS:
        raise PreconditionError(f"sampling.method must be one of {SAMPLING_METHODS}")
    if s.method == "epsilon_net":
        if s.epsilon is None:
            raise PreconditionError("sampling.epsilon is required for method epsilon_net")
        if not 0 < s.epsilon <= d.diameter:
            raise PreconditionError(f"sampling.epsilon must lie in (0, {d.diameter}]")
    else:
        if s.n_points is None or s.n_points < 2:
            raise PreconditionError(f"sampling.n_points >= 2 is required for method {s.method}")
        if s.method == "lattice" and d.dim != 1:
            raise PreconditionError("the lattice method is only defined on the circle")
    if s.mc_points < 1 or s.probes < 1:
        raise PreconditionError("sampling.mc_points and sampling.probes must be positive")
    if s.seed < 0 or cfg.walk.seed < 0:
        raise PreconditionError("seeds must be nonnegative")
    if cfg.graph.kappa is not None:
        _positive("graph.kappa", cfg.graph.kappa)
    _positive("graph.kappa_factor", cfg.graph.kappa_factor)
    w = cfg.walk
    if w.observable not in OBSERVABLE_KINDS:
        raise PreconditionError(f"walk.observable must be one of {OBSERVABLE_KINDS}")
    if w.trials < 100:
        raise PreconditionError("walk.trials must be >= 100")
    _positive("walk.r", w.r)
    b = cfg.bound
    if b.gap_convention not in GAP_CONVENTIONS:
        raise PreconditionError(f"bound.gap_convention must be one of {GAP_CONVENTIONS}")
    for name in ("t_max", "tol", "c_omega", "C_env", "sigma"):
        _positive(f"bound.{name}", getattr(b, name))
    if b.envelope_C_const < 0:
        raise PreconditionError("bound.envelope.C_const must be nonnegative")
    if b.theta.values is None:
        if b.theta.n < 2:
            raise PreconditionError("bound.theta.n must be >= 2")
        _positive("bound.theta.stretch", b.theta.stretch)
    elif not b.theta.values or any(y < x for x, y in zip(b.theta.values, b.theta.values[1:])):
        raise PreconditionError("bound.theta.values must be a nonempty ascending list")
    # Shape, polynomial and K <= I checks live in the constructors.
    cfg.bound_params()
    if not 1 <= b.ky_fan_k <= cfg.shape.total:
        raise PreconditionError(f"bound.ky_fan_k must lie in [1, {cfg.shape.total}]")


def load_config(path):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise StorageError(f"cannot read config {path}: {exc.strerror}") from exc
    return config_from_dict(jsonio.loads(text, str(path)), str(path))
