"""Fourier-Galerkin representation of periodic vector fields.

A field with ``n`` components on a period-``L`` domain is stored as the dense
block of Fourier coefficients ``u_hat[k] in C^n`` for ``|k| <= N`` (row ``j``
holds mode ``k = j - N``).  With the mode counts used here (N <= a few
hundred, n <= ~16) direct DFT summation is cheap, so no transform library is
involved.  The underlying basis is ``exp(i * 2*pi*k*x / L)`` and the L2 norm
follows Parseval for that basis: ``|u|^2 = L * sum_k |u_hat[k]|^2``.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "SpectralField",
    "project",
    "zero_field",
    "field_inner_product",
    "to_coefficient_csv",
    "to_physical_csv",
]

_SYMMETRY_RTOL = 1e-12


def _check_conjugate_symmetry(coeffs: np.ndarray) -> None:
    scale = float(np.abs(coeffs).max()) if coeffs.size else 0.0
    mirror = np.conj(coeffs[::-1])
    residual = float(np.abs(coeffs - mirror).max())
    if residual > _SYMMETRY_RTOL * max(scale, 1.0):
        raise ValueError(
            f"conjugate-symmetry residual {residual:.3e} too large for a real-valued field"
        )


@dataclass(frozen=True)
class SpectralField:
    """Immutable truncated Fourier series of an ``n``-component periodic field.

    Attributes
    ----------
    coeffs : complex array of shape (2N+1, n)
        Mode ``k`` lives in row ``k + N``.
    domain_length : float
        Spatial period ``L``.
    real_valued : bool
        Marks fields with conjugate symmetry ``u_hat[-k] = conj(u_hat[k])``;
        the symmetry is asserted on construction (debug builds only).
    """

    coeffs: np.ndarray
    domain_length: float
    real_valued: bool = True

    def __post_init__(self):
        arr = np.asarray(self.coeffs, dtype=complex)
        if arr.ndim == 1:
            arr = arr[:, np.newaxis]
        if arr.ndim != 2 or arr.shape[0] % 2 != 1:
            raise ValueError(f"coeffs must have shape (2N+1, n), got {arr.shape}")
        if not np.isfinite(arr).all():
            raise ValueError("coefficients contain non-finite entries")
        if not self.domain_length > 0.0:
            raise ValueError("domain_length must be positive")
        if self.real_valued and __debug__:
            _check_conjugate_symmetry(arr)
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "coeffs", arr)

    # -- basic geometry ---------------------------------------------------

    @property
    def n(self) -> int:
        return self.coeffs.shape[1]

    @property
    def cutoff(self) -> int:
        """Largest retained mode index N."""
        return (self.coeffs.shape[0] - 1) // 2

    @property
    def mode_numbers(self) -> np.ndarray:
        cutoff = self.cutoff
        return np.arange(-cutoff, cutoff + 1)

    @property
    def wavenumbers(self) -> np.ndarray:
        """Physical wavenumbers ``2*pi*k/L`` for each stored mode."""
        return 2.0 * np.pi * self.mode_numbers / self.domain_length

    def mode(self, k: int) -> np.ndarray:
        return self.coeffs[k + self.cutoff]

    def same_layout(self, other: "SpectralField") -> bool:
        return (
            self.coeffs.shape == other.coeffs.shape
            and abs(self.domain_length - other.domain_length)
            <= 1e-14 * max(self.domain_length, other.domain_length)
        )

    # -- calculus ----------------------------------------------------------

    def differentiate(self) -> "SpectralField":
        """Spatial derivative: multiply mode ``k`` by ``i * 2*pi*k/L``."""
        deriv = self.coeffs * (1j * self.wavenumbers)[:, np.newaxis]
        return SpectralField(deriv, self.domain_length, self.real_valued)

    def l2_norm(self, components: Sequence[int] | slice | None = None) -> float:
        """Parseval L2 norm, optionally restricted to selected components."""
        block = self.coeffs if components is None else self.coeffs[:, components]
        return float(np.sqrt(self.domain_length * np.sum(np.abs(block) ** 2)))

    def evaluate(self, x) -> np.ndarray:
        """Synthesize the field at point(s) ``x``; real output for real fields."""
        points = np.atleast_1d(np.asarray(x, dtype=float))
        phases = np.exp(1j * np.outer(points, self.wavenumbers))
        values = phases @ self.coeffs
        if self.real_valued:
            values = values.real
        return values[0] if np.isscalar(x) or np.ndim(x) == 0 else values

    def apply_matrix(self, matrix) -> "SpectralField":
        """Apply a constant component-mixing matrix to every mode."""
        mat = np.asarray(matrix)
        if mat.shape[1] != self.n:
            raise ValueError(f"matrix of shape {mat.shape} cannot act on {self.n} components")
        mixed = self.coeffs @ mat.T
        stays_real = self.real_valued and mat.dtype.kind != "c"
        return SpectralField(mixed, self.domain_length, stays_real)

    # -- linear-space arithmetic -------------------------------------------

    def _binary(self, other: "SpectralField", op) -> "SpectralField":
        if not isinstance(other, SpectralField) or not self.same_layout(other):
            raise ValueError("fields must share (n, N, L) for arithmetic")
        return SpectralField(
            op(self.coeffs, other.coeffs),
            self.domain_length,
            self.real_valued and other.real_valued,
        )

    def __add__(self, other):
        return self._binary(other, np.add)

    def __sub__(self, other):
        return self._binary(other, np.subtract)

    def __mul__(self, scalar):
        scalar = complex(scalar)
        stays_real = self.real_valued and scalar.imag == 0.0
        return SpectralField(self.coeffs * scalar, self.domain_length, stays_real)

    __rmul__ = __mul__

    def __neg__(self):
        return self * (-1.0)

    def with_coeffs(self, coeffs, real_valued: bool | None = None) -> "SpectralField":
        return SpectralField(
            coeffs,
            self.domain_length,
            self.real_valued if real_valued is None else real_valued,
        )


def zero_field(n: int, cutoff: int, domain_length: float) -> SpectralField:
    return SpectralField(np.zeros((2 * cutoff + 1, n), dtype=complex), domain_length)


def project(
    sampler: Callable[[float], Sequence[float]],
    n: int,
    cutoff: int,
    domain_length: float,
) -> SpectralField:
    """Project a periodic sampler onto modes ``|k| <= cutoff``.

    Uses the trapezoidal DFT on ``2*(2N+1)`` uniform samples, which recovers
    the coefficients of band-limited inputs exactly (to roundoff).  The field
    is flagged real when all samples are real.
    """
    m = 2 * (2 * cutoff + 1)
    points = np.arange(m) * (domain_length / m)
    samples = np.empty((m, n), dtype=complex)
    for j, x in enumerate(points):
        value = np.atleast_1d(np.asarray(sampler(float(x))))
        if value.shape != (n,):
            raise ValueError(f"sampler returned shape {value.shape}, expected ({n},)")
        samples[j] = value
    modes = np.arange(-cutoff, cutoff + 1)
    dft = np.exp(-2j * np.pi * np.outer(modes, np.arange(m)) / m)
    coeffs = dft @ samples / m
    real = bool(np.abs(samples.imag).max() == 0.0)
    return SpectralField(coeffs, domain_length, real)


def field_inner_product(u: SpectralField, v: SpectralField, weight=None) -> float:
    """Integral of ``u^T W v`` over the period, via Parseval.

    ``weight`` is an optional constant SPD matrix; identity when omitted.
    For real-valued fields the result is the exact (real) weighted L2 inner
    product.
    """
    if not u.same_layout(v) or u.n != v.n:
        raise ValueError("fields must share (n, N, L)")
    if weight is None:
        pairing = np.sum(np.conj(u.coeffs) * v.coeffs)
    else:
        w = np.asarray(weight, dtype=float)
        pairing = np.sum(np.conj(u.coeffs) * (v.coeffs @ w.T))
    return float(u.domain_length * pairing.real)


def to_coefficient_csv(field: SpectralField) -> str:
    """Dump coefficients as CSV rows ``k,component,re,im``."""
    out = io.StringIO()
    out.write("k,component,re,im\n")
    cutoff = field.cutoff
    for row, k in enumerate(range(-cutoff, cutoff + 1)):
        for comp in range(field.n):
            value = field.coeffs[row, comp]
            out.write(f"{k},{comp + 1},{float(value.real)!r},{float(value.imag)!r}\n")
    return out.getvalue()


def to_physical_csv(field: SpectralField) -> str:
    """Dump physical-space samples on ``2*(2N+1)`` uniform points."""
    m = 2 * (2 * field.cutoff + 1)
    points = np.arange(m) * (field.domain_length / m)
    values = field.evaluate(points)
    if field.real_valued:
        columns = [f"u_{c + 1}" for c in range(field.n)]
        rows = values
    else:
        columns = []
        for c in range(field.n):
            columns.extend([f"re_u_{c + 1}", f"im_u_{c + 1}"])
        rows = np.empty((m, 2 * field.n))
        rows[:, 0::2] = values.real
        rows[:, 1::2] = values.imag
    out = io.StringIO()
    out.write("x," + ",".join(columns) + "\n")
    for x, row in zip(points, np.atleast_2d(rows)):
        out.write(f"{float(x)!r}," + ",".join(repr(float(v)) for v in row) + "\n")
    return out.getvalue()
