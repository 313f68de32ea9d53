"""Tail bounds for the tensor walk statistic.

The bound on ``Pr(||f(sum_t g(v_t))||_(k) >= theta)`` is the minimum over
``t > 0`` of

    (deg+1)^(s-1) e^(-theta t) [ a_0 K + C (K + sqrt((I-K)/K))
        sum_{l>=1} a_l exp(8 K gap + 2 (K + 8 gap) l s r t
                           + 2 (sigma (K + 8 gap) l s r)^2 t^2) ]

where ``gap`` is one minus the second transition eigenvalue and ``I`` is the
unfolded tensor size. Everything is evaluated in log space; a bound whose log
exceeds 700 is reported as ``inf`` with an overflow flag.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .errors import PreconditionError
from .manifold import Sphere, laplace_beltrami_eigenvalue
from .spectral import ABSOLUTE, ALGEBRAIC, phi_lower, phi_upper, second_eigenvalue
from .tensor import PolynomialSpec, as_shape

LOG_OVERFLOW = 700.0
GRID_POINTS = 2000
_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class BoundParams:
    K: int
    r: float
    poly: PolynomialSpec
    C_env: float = 1.0
    sigma: float = 1.0
    shape: object = (2, 2)
    ky_fan_k: int = 1
    theta: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "shape", as_shape(self.shape))
        if int(self.K) != self.K or self.K < 1:
            raise PreconditionError("K must be an integer >= 1")
        for name in ("r", "C_env", "sigma", "theta"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise PreconditionError(f"{name} must be finite and positive, got {v}")
        if self.shape.total < self.K:
            raise PreconditionError(
                f"walk length K={self.K} exceeds tensor size I={self.shape.total}; "
                "the factor sqrt((I-K)/K) is undefined"
            )
        if not 1 <= self.ky_fan_k <= self.shape.total:
            raise PreconditionError(f"ky_fan_k must lie in [1, {self.shape.total}]")

    def with_theta(self, theta):
        return BoundParams(self.K, self.r, self.poly, self.C_env, self.sigma, self.shape,
                           self.ky_fan_k, theta)


def scalar_expander_bound(K, theta, lambda2, c_omega):
    """``2 exp(-c (1 - lambda2) K theta^2)``; ``c_omega`` stands in for the hidden constant."""
    if not 0 <= lambda2 <= 1:
        raise PreconditionError("lambda2 must lie in [0, 1]")
    return 2.0 * math.exp(-c_omega * (1.0 - lambda2) * K * theta**2)


def _quadratic_terms(p, gap):
    """Coefficients ``(c0, c1, c2)`` with ``log(summand) = c0 + c1 t + c2 t^2``."""
    a = p.poly.coeffs
    s = p.poly.power
    K = p.K
    kk = K + 8.0 * gap
    log_amp = math.log(p.C_env * (K + math.sqrt((p.shape.total - K) / K)))
    terms = []
    if a[0] > 0:
        terms.append((math.log(a[0] * K), 0.0, 0.0))
    for ell in range(1, len(a)):
        if a[ell] == 0:
            continue
        lsr = ell * s * p.r
        terms.append((log_amp + math.log(a[ell]) + 8.0 * K * gap,
                      2.0 * kk * lsr,
                      2.0 * (p.sigma * kk * lsr) ** 2))
    return np.array(terms).reshape(-1, 3)


def _log_integrand_fn(p, gap):
    """Vectorized ``t -> log bound_integrand(t)`` for fixed parameters."""
    coef = _quadratic_terms(p, gap)
    pre = (p.poly.power - 1) * math.log(p.poly.degree + 1)

    def fn(t):
        t = np.asarray(t, dtype=np.float64)
        logs = coef[:, 0, None] + coef[:, 1, None] * t.ravel() + coef[:, 2, None] * t.ravel() ** 2
        out = pre - p.theta * t.ravel() + logsumexp(logs, axis=0)
        return out.reshape(t.shape)

    return fn


def log_bound_integrand(t, p, gap):
    """Natural log of the bracketed bound at ``t`` (scalar or array)."""
    if not np.all(np.asarray(t) > 0):
        raise PreconditionError("t must be positive")
    out = _log_integrand_fn(p, gap)(t)
    return float(out) if out.ndim == 0 else out


def bound_integrand(t, p, gap):
    lv = log_bound_integrand(t, p, gap)
    return math.inf if lv > LOG_OVERFLOW else math.exp(lv)


def _golden(fun, lo, hi, tol):
    a, b = lo, hi
    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    fc, fd = fun(c), fun(d)
    while b - a > tol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _INV_PHI * (b - a)
            fc = fun(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_PHI * (b - a)
            fd = fun(d)
    cands = [(fun(a), a), (fc, c), (fd, d), (fun(b), b)]
    val, arg = min(cands)
    return arg, val


def grid_minimize(fun, lo, hi, points=GRID_POINTS, rounds=4):
    """Zoomed grid search: ``points`` equispaced samples, then refine around the best cell.

    ``fun`` must accept an array of ``t`` values.
    """
    best_t, best_v = lo, math.inf
    for _ in range(rounds):
        ts = np.linspace(lo, hi, points)
        vals = np.asarray(fun(ts), dtype=np.float64)
        i = int(np.argmin(vals))
        if vals[i] < best_v:
            best_t, best_v = float(ts[i]), float(vals[i])
        lo, hi = float(ts[max(i - 1, 0)]), float(ts[min(i + 1, points - 1)])
    return best_t, best_v


@dataclass(frozen=True)
class BoundMinimum:
    t_star: float
    log_value: float
    at_lower_boundary: bool
    at_upper_boundary: bool
    grid_t: float
    grid_log_value: float

    @property
    def overflow(self):
        return self.log_value > LOG_OVERFLOW

    @property
    def value(self):
        return math.inf if self.overflow else math.exp(self.log_value)

    @property
    def capped(self):
        return min(self.value, 1.0)

    @property
    def grid_rel_diff(self):
        return abs(math.expm1(self.grid_log_value - self.log_value))

    @property
    def boundary(self):
        return self.at_lower_boundary or self.at_upper_boundary


def minimize_bound(p, gap, t_max=10.0, tol=1e-9):
    """Minimize the bound over ``t`` in ``[tol, t_max]`` by golden-section search.

    The log of the integrand is a log-sum-exp of functions that are quadratic
    in ``t`` with nonnegative leading coefficient, hence convex, so a
    bracketing search converges to the global minimum. A 2000-point zoomed grid
    is evaluated alongside as a cross-check. Minima within ``1000 * tol`` of
    either end are flagged as boundary minima.
    """
    if not t_max > tol > 0:
        raise PreconditionError("need t_max > tol > 0")

    fun = _log_integrand_fn(p, gap)
    t_star, lv = _golden(lambda t: float(fun(t)), tol, t_max, tol)
    gt, gv = grid_minimize(fun, tol, t_max)
    edge = 1000.0 * tol
    return BoundMinimum(t_star, lv, t_star <= tol + edge, t_star >= t_max - edge, gt, gv)


@dataclass(frozen=True)
class GapSource:
    kind: str
    gap_value: float
    metadata: dict = field(default_factory=dict)

    KINDS = ("exact_spectrum", "eq7_formula", "envelope_lower", "envelope_upper")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise PreconditionError(f"unknown gap source {self.kind!r}")
        if not math.isfinite(self.gap_value):
            raise PreconditionError("gap value must be finite")

    @property
    def label(self):
        conv = self.metadata.get("convention")
        return f"{self.kind}:{conv}" if conv else self.kind


@dataclass(frozen=True)
class BoundReport:
    source: GapSource
    theta: float
    minimum: BoundMinimum

    @property
    def t_star(self):
        return self.minimum.t_star

    @property
    def bound_raw(self):
        return self.minimum.value

    @property
    def bound_capped(self):
        return self.minimum.capped

    def csv_row(self):
        return (self.theta, self.source.label, self.source.gap_value, self.t_star,
                self.bound_raw, self.bound_capped)


def bound_for_gap(p, source, t_max=10.0, tol=1e-9):
    return BoundReport(source, p.theta, minimize_bound(p, source.gap_value, t_max, tol))


def theorem1_bound(p, summary, convention=None, t_max=10.0, tol=1e-9):
    """Bound at the exact spectral gap of the graph.

    ``convention`` defaults to the one recorded in ``summary``. The gap can
    exceed 1 under ``algebraic_second`` when the second eigenvalue is negative;
    the formula is used as-is in that case.
    """
    conv = convention or summary.gap_convention
    lam2 = second_eigenvalue(summary.transition_eigs, conv)
    note = "gap > 1 (negative second eigenvalue)" if 1.0 - lam2 > 1.0 else ""
    src = GapSource("exact_spectrum", 1.0 - lam2,
                    {"convention": conv, "second_eigenvalue": lam2, "note": note})
    return bound_for_gap(p, src, t_max, tol)


def eq7_gap_source(summary, index=1):
    """Gap from ``lambda_L / d`` at rank ``index`` (0-based; 1 is the first nonzero)."""
    lam = float(summary.laplacian_eigs[index])
    deg = float(summary.degrees[index])
    return GapSource("eq7_formula", lam / deg, {"lambda_L": lam, "degree": deg, "index": index})


@dataclass(frozen=True)
class MonotonicityCheck:
    increasing: bool
    min_derivative: float

    def __bool__(self):
        return self.increasing


def check_monotonicity(p, lambda_L_range, degree_sum, t):
    """Sign check of d/d(lambda_L) of each exponent on ``lambda_L_range``.

    With ``gap = lambda_L / degree_sum`` the derivative of the ``l``-th exponent
    is ``(8K + 16 l s r t + 32 sigma^2 (K + 8 gap) (l s r)^2 t^2) / degree_sum``,
    affine in the gap, so its minimum over the interval sits at an endpoint.
    """
    lo, hi = lambda_L_range
    if lo > hi:
        raise PreconditionError("empty lambda_L range")
    if not degree_sum > 0:
        raise PreconditionError("degree_sum must be positive")
    if t < 0:
        raise PreconditionError("t must be nonnegative")
    worst = math.inf
    s = p.poly.power
    for ell in range(1, len(p.poly.coeffs)):
        if p.poly.coeffs[ell] == 0:
            continue
        lsr = ell * s * p.r
        for lam in (lo, hi):
            gap = lam / degree_sum
            der = (8 * p.K + 16 * lsr * t + 32 * p.sigma**2 * (p.K + 8 * gap) * lsr**2 * t**2) / degree_sum
            worst = min(worst, der)
    if worst == math.inf:
        worst = 0.0
    return MonotonicityCheck(worst >= 0, worst)


@dataclass(frozen=True)
class CorollaryBounds:
    lower: BoundReport
    upper: BoundReport
    phi_lower: float
    phi_upper: float
    lower_clamped: bool
    monotonicity: MonotonicityCheck

    @property
    def lower_value(self):
        return self.lower.bound_raw

    @property
    def upper_value(self):
        return self.upper.bound_raw


def corollary_bounds(p, lambda_M, env, degree_sum, t_max=10.0, tol=1e-9):
    """The bound evaluated at the envelope gaps ``Phi_L/degree_sum`` and ``Phi_U/degree_sum``.

    Both numbers are upper-bound expressions; the one at ``Phi_L`` is the
    smallest value the bound can take for any eigenvalue inside the envelope,
    not a lower bound on the probability. A negative ``Phi_L`` is clamped to 0
    and flagged.
    """
    if not degree_sum > 0:
        raise PreconditionError("degree_sum must be positive")
    lo, hi = phi_lower(lambda_M, env), phi_upper(lambda_M, env)
    clamped = lo < 0
    lo_c = max(lo, 0.0)
    mono = check_monotonicity(p, (lo_c, hi), degree_sum, t_max)
    if not mono:
        raise PreconditionError("bound is not monotone in lambda_L on the envelope range")
    meta = {"lambda_M": lambda_M, "degree_sum": degree_sum, "C_const": env.C_const,
            "epsilon": env.epsilon, "kappa": env.kappa}
    lower = bound_for_gap(p, GapSource("envelope_lower", lo_c / degree_sum, dict(meta, phi=lo)), t_max, tol)
    upper = bound_for_gap(p, GapSource("envelope_upper", hi / degree_sum, dict(meta, phi=hi)), t_max, tol)
    if lower.minimum.log_value > upper.minimum.log_value + 1e-12 * max(1.0, abs(upper.minimum.log_value)):
        raise RuntimeError("envelope bounds out of order")
    return CorollaryBounds(lower, upper, lo, hi, clamped, mono)


def sphere_example_bounds(p, i, d, env, degree_sum, t_max=10.0, tol=1e-9):
    """:func:`corollary_bounds` at the ``i``-th sphere eigenvalue ``(i-1)(i+n-2)``."""
    if not isinstance(d, Sphere):
        raise PreconditionError("sphere_example_bounds needs a sphere")
    if not math.isclose(env.curvature_bound, d.curvature_bound, rel_tol=1e-12):
        raise PreconditionError("envelope curvature bound must equal 1/R^2 for the sphere")
    return corollary_bounds(p, laplace_beltrami_eigenvalue(i, d), env, degree_sum, t_max, tol)


__all__ = [
    "ABSOLUTE", "ALGEBRAIC", "BoundParams", "BoundMinimum", "BoundReport", "CorollaryBounds",
    "GapSource", "MonotonicityCheck", "bound_for_gap", "bound_integrand", "check_monotonicity",
    "corollary_bounds", "eq7_gap_source", "grid_minimize", "log_bound_integrand", "minimize_bound",
    "scalar_expander_bound", "sphere_example_bounds", "theorem1_bound",
]
