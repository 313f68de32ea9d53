"""Square tensors under the Einstein product.

A tensor of shape ``(I_1..I_M; I_1..I_M)`` is stored as a complex array with
``2M`` axes. Its unfolding is the ``I x I`` matrix (``I = prod I_m``) whose row
index is the mixed-radix code of ``(i_1..i_M)`` with ``i_1`` most significant,
which is plain C-order reshaping. The Einstein product contracts the trailing
``M`` axes of the left factor with the leading ``M`` axes of the right one and
unfolds to the matrix product.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import PreconditionError
from .rng import substream

HERMITIAN_ATOL = 1e-10
MAX_TOTAL = 64


class NonHermitianError(PreconditionError):
    pass


@dataclass(frozen=True)
class TensorShape:
    mode_dims: tuple

    def __post_init__(self):
        dims = tuple(int(x) for x in self.mode_dims)
        if not dims or any(x < 1 for x in dims):
            raise PreconditionError(f"mode dimensions must be positive integers, got {self.mode_dims}")
        object.__setattr__(self, "mode_dims", dims)

    @property
    def order(self):
        return len(self.mode_dims)

    @property
    def total(self):
        return math.prod(self.mode_dims)

    @property
    def full(self):
        return self.mode_dims + self.mode_dims

    def __str__(self):
        d = ",".join(map(str, self.mode_dims))
        return f"({d};{d})"


def as_shape(shape):
    return shape if isinstance(shape, TensorShape) else TensorShape(tuple(shape))


class SquareTensor:
    """An order-``2M`` complex tensor with matching row and column modes."""

    def __init__(self, entries, shape=None):
        entries = np.asarray(entries, dtype=np.complex128)
        if shape is None:
            if entries.ndim % 2 or entries.shape[: entries.ndim // 2] != entries.shape[entries.ndim // 2:]:
                raise PreconditionError(f"entries of shape {entries.shape} are not square")
            shape = entries.shape[: entries.ndim // 2]
        self.shape = as_shape(shape)
        if entries.shape != self.shape.full:
            raise PreconditionError(f"entries shape {entries.shape} does not match {self.shape}")
        self.entries = entries

    def unfold(self):
        n = self.shape.total
        return self.entries.reshape(n, n)

    def __repr__(self):
        return f"{type(self).__name__}{self.shape}"


class HermitianTensor(SquareTensor):
    """Square tensor whose unfolding is Hermitian.

    Entries within ``1e-10`` of Hermitian are symmetrized as ``(T + T^H)/2``;
    larger asymmetry raises :class:`NonHermitianError`.
    """

    def __init__(self, entries, shape=None):
        super().__init__(entries, shape)
        m = self.unfold()
        asym = np.max(np.abs(m - m.conj().T)) if m.size else 0.0
        if asym > HERMITIAN_ATOL * max(1.0, float(np.max(np.abs(m)))):
            raise NonHermitianError(f"tensor is not Hermitian (asymmetry {asym:.3e})")
        n = self.shape.total
        self.entries = (0.5 * (m + m.conj().T)).reshape(self.shape.full)
        if n > MAX_TOTAL:
            raise PreconditionError(f"unfolded size {n} exceeds the dense limit {MAX_TOTAL}")


def unfold(t):
    return t.unfold()


def refold(m, shape, hermitian=True):
    shape = as_shape(shape)
    m = np.asarray(m)
    n = shape.total
    if m.shape != (n, n):
        raise PreconditionError(f"matrix of shape {m.shape} cannot refold to {shape}")
    cls = HermitianTensor if hermitian else SquareTensor
    return cls(m.reshape(shape.full), shape)


def identity(shape):
    shape = as_shape(shape)
    return refold(np.eye(shape.total), shape)


def diagonal(shape, values):
    shape = as_shape(shape)
    values = np.asarray(values, dtype=np.float64)
    if values.shape != (shape.total,):
        raise PreconditionError(f"need {shape.total} diagonal values")
    return refold(np.diag(values), shape)


def einstein_product(a, b):
    """``(a * b)_{i..,j..} = sum_{k..} a_{i..,k..} b_{k..,j..}``."""
    if a.shape != b.shape:
        raise PreconditionError(f"shape mismatch: {a.shape} vs {b.shape}")
    m = a.shape.order
    out = np.tensordot(a.entries, b.entries, axes=(list(range(m, 2 * m)), list(range(m))))
    return SquareTensor(out, a.shape)


def as_hermitian(t):
    return t if isinstance(t, HermitianTensor) else HermitianTensor(t.entries, t.shape)


def _require_hermitian(t):
    if not isinstance(t, HermitianTensor):
        return as_hermitian(t)
    return t


def eigenvalues(t):
    """Real eigenvalues of the unfolding, descending."""
    t = _require_hermitian(t)
    return np.linalg.eigvalsh(t.unfold())[::-1].copy()


def spectral_norm(t):
    return float(np.max(np.abs(eigenvalues(t))))


def ky_fan_norm(t, k, variant="singular"):
    """Sum of the ``k`` largest singular values of the unfolding.

    ``variant="eigen"`` sums the ``k`` largest signed eigenvalues instead;
    that quantity is not a norm for indefinite tensors.
    """
    n = t.shape.total
    if int(k) != k or not 1 <= k <= n:
        raise PreconditionError(f"k must be an integer in [1, {n}], got {k}")
    if variant == "singular":
        sv = np.linalg.svd(t.unfold(), compute_uv=False)
        return float(np.sum(np.sort(sv)[::-1][:k]))
    if variant == "eigen":
        return float(np.sum(eigenvalues(t)[:k]))
    raise PreconditionError(f"unknown Ky Fan variant {variant!r}")


@dataclass(frozen=True)
class PolynomialSpec:
    """``f(x) = (a_0 + a_1 x + ... + a_deg x^deg) ** s`` with ``a_l >= 0``."""

    coeffs: tuple
    power: int = 1

    def __post_init__(self):
        coeffs = tuple(float(a) for a in self.coeffs)
        if not coeffs or any(a < 0 or not math.isfinite(a) for a in coeffs):
            raise PreconditionError("polynomial coefficients must be finite and nonnegative")
        if not any(a > 0 for a in coeffs):
            raise PreconditionError("at least one coefficient must be positive")
        if int(self.power) != self.power or self.power < 1:
            raise PreconditionError(f"power s must be an integer >= 1, got {self.power}")
        object.__setattr__(self, "coeffs", coeffs)
        object.__setattr__(self, "power", int(self.power))

    @property
    def degree(self):
        return len(self.coeffs) - 1

    def __call__(self, x):
        x = np.asarray(x, dtype=np.float64)
        acc = np.zeros_like(x)
        for a in reversed(self.coeffs):
            acc = acc * x + a
        return acc**self.power

    @property
    def scale(self):
        """``f(1)``."""
        return float(self(1.0))


IDENTITY_POLY = PolynomialSpec((0.0, 1.0), 1)


def apply_polynomial(t, p):
    """``f(T)`` through the spectral decomposition of the unfolding."""
    t = _require_hermitian(t)
    vals, vecs = np.linalg.eigh(t.unfold())
    m = (vecs * p(vals)) @ vecs.conj().T
    return refold(m, t.shape)


def apply_polynomial_direct(t, p):
    """``f(T)`` by Einstein-product powers, without diagonalizing."""
    eye = identity(t.shape)
    inner = SquareTensor(np.zeros(t.shape.full, dtype=np.complex128), t.shape)
    power = SquareTensor(eye.entries, t.shape)
    for ell, a in enumerate(p.coeffs):
        if ell:
            power = einstein_product(power, t)
        inner = SquareTensor(inner.entries + a * power.entries, t.shape)
    out = SquareTensor(eye.entries, t.shape)
    for _ in range(p.power):
        out = einstein_product(out, inner)
    return as_hermitian(out)


def random_hermitian(shape, r, seed):
    """Gaussian Hermitian tensor rescaled to spectral norm exactly ``r``.

    ``seed`` is an int (named substream) or a ``numpy.random.Generator``.
    """
    if not r > 0:
        raise PreconditionError("r must be positive")
    shape = as_shape(shape)
    rng = seed if isinstance(seed, np.random.Generator) else substream(seed, "random-hermitian")
    n = shape.total
    g = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    h = 0.5 * (g + g.conj().T)
    h *= r / np.max(np.abs(np.linalg.eigvalsh(h)))
    return refold(h, shape)


def to_literal(t):
    flat = t.unfold().ravel()
    return {"shape": list(t.shape.mode_dims), "re": flat.real.tolist(), "im": flat.imag.tolist()}


def from_literal(doc):
    try:
        shape = TensorShape(tuple(doc["shape"]))
        re = np.asarray(doc["re"], dtype=np.float64)
        im = np.asarray(doc["im"], dtype=np.float64)
    except (KeyError, TypeError, ValueError) as exc:
        raise PreconditionError(f"malformed tensor literal: {exc}") from exc
    n = shape.total
    if re.shape != (n * n,) or im.shape != (n * n,):
        raise PreconditionError(f"tensor literal needs {n * n} entries in 're' and 'im'")
    return refold((re + 1j * im).reshape(n, n), shape)
