"""Spectra of the graph Laplacian and transition matrix, spectral gap and envelopes.

Two Laplacian spectra are exposed:

* :func:`laplacian_spectrum`: eigenvalues of ``L = D - W`` itself, which are
  the ones tied to the transition matrix through ``1 - lambda_L / d_i``.
* :func:`measure_laplacian_spectrum`: eigenvalues of ``diag(mu)^{-1} L``
  (the generalized problem ``L x = lambda diag(mu) x``). This is the graph
  operator that converges to the Laplace-Beltrami operator, and it is the
  one to hold against the sphere eigenvalues and the ``Phi_L``/``Phi_U``
  envelopes. ``D - W`` alone scales with the cell measure and tends to zero
  under refinement.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import MWLError, PreconditionError
from .manifold import laplace_beltrami_eigenvalue

ABSOLUTE = "absolute_second"
ALGEBRAIC = "algebraic_second"
GAP_CONVENTIONS = (ABSOLUTE, ALGEBRAIC)


class SpectralError(MWLError):
    exit_code = 1


def _eigvalsh(a, what):
    try:
        return np.linalg.eigvalsh(a)
    except np.linalg.LinAlgError as exc:
        cond = np.linalg.cond(a) if np.all(np.isfinite(a)) else float("inf")
        raise SpectralError(f"{what}: eigensolver did not converge (condition number {cond:.3e})") from exc


def laplacian_spectrum(m, check_residual=False):
    """Eigenvalues of ``D - W``, ascending."""
    lap = m.laplacian
    if not np.array_equal(lap, lap.T):
        raise PreconditionError("Laplacian must be symmetric")
    if not check_residual:
        return _eigvalsh(lap, "laplacian")
    vals, vecs = np.linalg.eigh(lap)
    scale = max(np.linalg.norm(lap, 2), 1e-300)
    res = np.linalg.norm(lap @ vecs - vecs * vals, axis=0)
    if res.max() > 1e-8 * scale:
        raise SpectralError(f"eigenpair residual {res.max():.3e} exceeds 1e-8 * ||L||")
    return vals


def _sym_transition(m):
    if np.any(m.degrees <= 0):
        raise PreconditionError("all degrees must be positive")
    r = 1.0 / np.sqrt(m.degrees)
    s = m.weights * r[:, None] * r[None, :]
    return 0.5 * (s + s.T)


def transition_spectrum(m):
    """Eigenvalues of ``P = D^{-1} W``, descending, via ``D^{-1/2} W D^{-1/2}``."""
    return _eigvalsh(_sym_transition(m), "transition")[::-1].copy()


def measure_laplacian_spectrum(m):
    """Eigenvalues of ``diag(mu)^{-1} (D - W)``, ascending."""
    mu = np.asarray(m.measures, dtype=np.float64)
    if np.any(mu <= 0):
        raise PreconditionError("measure-normalized spectrum needs positive measures")
    try:
        return scipy.linalg.eigh(m.laplacian, np.diag(mu), eigvals_only=True)
    except np.linalg.LinAlgError as exc:
        raise SpectralError(f"generalized eigensolver failed: {exc}") from exc


def eq7_map(lambda_L, degree):
    """Transition eigenvalue implied by a Laplacian eigenvalue: ``1 - lambda_L / degree``."""
    if not degree > 0:
        raise PreconditionError("degree must be positive")
    return 1.0 - lambda_L / degree


def eq7_residuals(m, laplacian_eigs=None, transition_eigs=None):
    """``|lambda_P,i - (1 - lambda_L,i / d_i)|`` with both spectra paired by rank.

    ``d_i`` is the degree of vertex ``i``. The map is exact when all degrees
    are equal; otherwise the residual measures how far off it is.
    """
    lam_l = laplacian_spectrum(m) if laplacian_eigs is None else laplacian_eigs
    lam_p = transition_spectrum(m) if transition_eigs is None else transition_eigs
    return np.abs(lam_p - (1.0 - lam_l / m.degrees))


def second_eigenvalue(transition_eigs, convention=ABSOLUTE):
    """The eigenvalue that sets the gap.

    ``algebraic_second`` is the second largest eigenvalue of ``P``;
    ``absolute_second`` is the largest modulus among the non-Perron eigenvalues.
    """
    eigs = np.asarray(transition_eigs)
    if len(eigs) < 2:
        raise PreconditionError("need at least two eigenvalues")
    if convention == ALGEBRAIC:
        return float(eigs[1])
    if convention == ABSOLUTE:
        return float(np.max(np.abs(eigs[1:])))
    raise PreconditionError(f"unknown gap convention {convention!r}")


def spectral_gap(transition_eigs, convention=ABSOLUTE):
    return 1.0 - second_eigenvalue(transition_eigs, convention)


@dataclass(frozen=True, eq=False)
class SpectralSummary:
    laplacian_eigs: np.ndarray
    transition_eigs: np.ndarray
    second_largest: float
    gap: float
    eq7_residuals: np.ndarray
    gap_convention: str
    measure_laplacian_eigs: np.ndarray | None = None
    degrees: np.ndarray | None = None

    @property
    def gap_algebraic(self):
        return spectral_gap(self.transition_eigs, ALGEBRAIC)

    @property
    def gap_absolute(self):
        return spectral_gap(self.transition_eigs, ABSOLUTE)

    @property
    def eq7_max_residual(self):
        return float(np.max(self.eq7_residuals))

    def with_convention(self, convention):
        lam2 = second_eigenvalue(self.transition_eigs, convention)
        return SpectralSummary(self.laplacian_eigs, self.transition_eigs, lam2, 1.0 - lam2,
                               self.eq7_residuals, convention, self.measure_laplacian_eigs,
                               self.degrees)

    def report(self):
        out = {
            "laplacian_eigs": self.laplacian_eigs,
            "transition_eigs": self.transition_eigs,
            "gap_algebraic": self.gap_algebraic,
            "gap_absolute": self.gap_absolute,
            "eq7_max_residual": self.eq7_max_residual,
        }
        if self.measure_laplacian_eigs is not None:
            out["measure_laplacian_eigs"] = self.measure_laplacian_eigs
        return out


def summarize(m, convention=ABSOLUTE):
    lam_l = laplacian_spectrum(m)
    lam_p = transition_spectrum(m)
    lam2 = second_eigenvalue(lam_p, convention)
    res = eq7_residuals(m, lam_l, lam_p)
    mu_eigs = measure_laplacian_spectrum(m) if np.all(m.measures > 0) else None
    return SpectralSummary(lam_l, lam_p, lam2, 1.0 - lam2, res, convention, mu_eigs, m.degrees.copy())


@dataclass(frozen=True)
class EnvelopeParams:
    C_const: float
    epsilon: float
    kappa: float
    curvature_bound: float

    def __post_init__(self):
        vals = (self.C_const, self.epsilon, self.kappa, self.curvature_bound)
        if not all(math.isfinite(v) for v in vals):
            raise PreconditionError("envelope parameters must be finite")
        if self.epsilon <= 0 or self.kappa <= 0:
            raise PreconditionError("epsilon and kappa must be positive")
        if self.C_const < 0 or self.curvature_bound < 0:
            raise PreconditionError("C_const and curvature_bound must be nonnegative")
        if self.epsilon / self.kappa >= 1:
            warnings.warn(f"epsilon/kappa = {self.epsilon / self.kappa:.3g} >= 1; envelope is loose",
                          stacklevel=2)


def bracket_term(lambda_M, p):
    """``(eps/kappa + K kappa^2) lambda + kappa lambda^{3/2}``."""
    if lambda_M < 0:
        raise PreconditionError("lambda_M must be nonnegative")
    return (p.epsilon / p.kappa + p.curvature_bound * p.kappa**2) * lambda_M + p.kappa * lambda_M**1.5


def phi_lower(lambda_M, p):
    return lambda_M - p.C_const * bracket_term(lambda_M, p)


def phi_upper(lambda_M, p):
    return lambda_M + p.C_const * bracket_term(lambda_M, p)


def sphere_phi(i, d, p, which, scale_by_radius=False):
    """Envelope of the ``i``-th sphere eigenvalue; ``which`` is ``"lower"`` or ``"upper"``."""
    lam = laplace_beltrami_eigenvalue(i, d, scale_by_radius)
    if which == "lower":
        return phi_lower(lam, p)
    if which == "upper":
        return phi_upper(lam, p)
    raise PreconditionError(f"which must be 'lower' or 'upper', got {which!r}")


@dataclass(frozen=True)
class EnvelopeFit:
    C_const: float
    degenerate: bool
    n_points: int
    rms_residual: float
    note: str = "empirical least-squares estimate"


def fit_envelope_constant(levels):
    """Least-squares ``C >= 0`` for ``|lambda_G,i - lambda_M,i| ~ C * bracket_i``.

    ``levels`` holds, for each refinement level, a tuple
    ``(graph_eigs, manifold_eigs, epsilon, kappa, curvature_bound)``.
    The fit is flagged degenerate (with a warning) when fewer than two
    distinct levels are supplied or every bracket term vanishes.
    """
    xs, ys, keys = [], [], set()
    for graph_eigs, manifold_eigs, eps, kappa, curv in levels:
        p = EnvelopeParams(0.0, eps, kappa, curv)
        g = np.asarray(graph_eigs, float)
        lm = np.asarray(manifold_eigs, float)
        xs.extend(bracket_term(x, p) for x in lm)
        ys.extend(np.abs(g - lm))
        keys.add((round(eps, 15), round(kappa, 15), tuple(np.round(g, 12))))
    x = np.asarray(xs)
    y = np.asarray(ys)
    sxx = float(x @ x)
    degenerate = len(keys) < 2 or sxx == 0.0
    c = max(0.0, float(x @ y) / sxx) if sxx > 0 else 0.0
    if degenerate:
        warnings.warn("envelope fit is degenerate: need at least two distinct refinement levels",
                      stacklevel=2)
    rms = float(np.sqrt(np.mean((y - c * x) ** 2))) if len(x) else float("nan")
    return EnvelopeFit(c, degenerate, len(x), rms)


def multiplicity_pattern(eigs, pattern=(1, 2, 2, 2), split_tol=0.1, zero_tol=1e-8):
    """Check that the leading eigenvalues group as ``pattern`` (zero mode, then pairs).

    A group passes when its spread is at most ``split_tol`` times its mean.
    Returns ``(ok, splits)`` with one relative split per nonzero group.
    """
    eigs = np.asarray(eigs)
    pos = 0
    splits = []
    ok = True
    for size in pattern:
        grp = eigs[pos:pos + size]
        if len(grp) < size:
            return False, splits
        if pos == 0:
            ok &= bool(abs(grp[0]) <= zero_tol * max(1.0, abs(eigs[-1])))
        else:
            split = float((grp.max() - grp.min()) / grp.mean())
            splits.append(split)
            ok &= split <= split_tol
        pos += size
    if pos < len(eigs):
        # The next eigenvalue must not belong to the last group.
        last = eigs[pos - pattern[-1]:pos]
        ok &= bool((eigs[pos] - last.mean()) / last.mean() > split_tol)
    return bool(ok), splits
