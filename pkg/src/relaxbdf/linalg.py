"""Dense linear algebra kernels for small matrices.

Everything downstream (implicit solves, stability certificates, per-mode
propagators) works with constant matrices of size n <= ~16, so this module
implements the few factorizations it needs directly instead of pulling in a
LAPACK wrapper: partial-pivoting LU, a pivoted Cholesky probe, a cyclic
Jacobi eigensolver and a scaling-and-squaring matrix exponential.  All
routines are deterministic and operate on plain ``numpy`` arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "SingularMatrixError",
    "NotSymmetricError",
    "ExponentialOverflowError",
    "DefinitenessReport",
    "LUFactorization",
    "validate_matrix",
    "lu_factor",
    "lu_solve",
    "inverse",
    "matrix_exponential",
    "is_spd",
    "is_negative_semidefinite",
    "jacobi_eigh",
]

# Pivots smaller than this (relative to the largest input entry) are treated
# as singular.
PIVOT_RTOL = 1e-14

# Squaring depth above which the exponential is reported rather than computed.
MAX_SQUARINGS = 64


class SingularMatrixError(ArithmeticError):
    """A pivot fell below the singularity threshold during factorization."""


class NotSymmetricError(ValueError):
    """An operation that requires a symmetric matrix received an asymmetric one."""


class ExponentialOverflowError(OverflowError):
    """The matrix exponential left the representable floating-point range."""


def validate_matrix(entries, *, square: bool = True, name: str = "matrix") -> np.ndarray:
    """Coerce ``entries`` to a 2-D float/complex array and reject non-finite data."""
    arr = np.array(entries, copy=True)
    if arr.dtype.kind in "iub":
        arr = arr.astype(float)
    if arr.dtype.kind not in "fc":
        raise TypeError(f"{name} must be numeric, got dtype {arr.dtype}")
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"{name} must be a 2-D matrix, got shape {arr.shape}")
    if square and arr.shape[0] != arr.shape[1]:
        raise ValueError(f"{name} must be square, got shape {arr.shape}")
    if not np.isfinite(arr).all():
        raise ValueError(f"{name} contains non-finite entries")
    return arr


@dataclass(frozen=True)
class LUFactorization:
    """Packed LU factors of a row-permuted square matrix.

    ``packed`` holds the unit-lower factor strictly below the diagonal and the
    upper factor on and above it; ``row_order`` is the permutation ``p`` such
    that ``A[p] = L @ U``; ``sign`` is the parity of that permutation.
    """

    packed: np.ndarray
    row_order: np.ndarray
    sign: int

    @property
    def size(self) -> int:
        return self.packed.shape[0]

    def lower(self) -> np.ndarray:
        ident = np.eye(self.size, dtype=self.packed.dtype)
        return np.tril(self.packed, -1) + ident

    def upper(self) -> np.ndarray:
        return np.triu(self.packed)

    def permutation_matrix(self) -> np.ndarray:
        perm = np.zeros((self.size, self.size))
        perm[np.arange(self.size), self.row_order] = 1.0
        return perm

    def solve(self, rhs) -> np.ndarray:
        """Solve ``A x = rhs`` for one right-hand side or a matrix of them."""
        b = np.asarray(rhs)
        vector_input = b.ndim == 1
        if vector_input:
            b = b[:, np.newaxis]
        if b.shape[0] != self.size:
            raise ValueError(f"rhs has {b.shape[0]} rows, expected {self.size}")
        lu = self.packed
        dtype = np.result_type(lu.dtype, b.dtype)
        x = b[self.row_order].astype(dtype)
        for i in range(1, self.size):
            x[i] -= lu[i, :i] @ x[:i]
        for i in range(self.size - 1, -1, -1):
            if i < self.size - 1:
                x[i] -= lu[i, i + 1:] @ x[i + 1:]
            x[i] /= lu[i, i]
        return x[:, 0] if vector_input else x


def lu_factor(matrix) -> LUFactorization:
    """Partial-pivoting LU factorization; raises ``SingularMatrixError``."""
    a = validate_matrix(matrix, name="lu_factor input")
    n = a.shape[0]
    threshold = PIVOT_RTOL * max(np.abs(a).max(), np.finfo(float).tiny)
    order = np.arange(n)
    sign = 1
    for col in range(n):
        pivot_row = col + int(np.argmax(np.abs(a[col:, col])))
        if abs(a[pivot_row, col]) <= threshold:
            raise SingularMatrixError(
                f"pivot {abs(a[pivot_row, col]):.3e} in column {col} below threshold {threshold:.3e}"
            )
        if pivot_row != col:
            a[[col, pivot_row]] = a[[pivot_row, col]]
            order[[col, pivot_row]] = order[[pivot_row, col]]
            sign = -sign
        a[col + 1:, col] /= a[col, col]
        a[col + 1:, col + 1:] -= np.outer(a[col + 1:, col], a[col, col + 1:])
    return LUFactorization(packed=a, row_order=order, sign=sign)


def lu_solve(matrix, rhs) -> np.ndarray:
    """Solve a dense square system ``matrix @ x = rhs``."""
    return lu_factor(matrix).solve(rhs)


def inverse(matrix) -> np.ndarray:
    """Matrix inverse via LU; intended for tiny, well-conditioned matrices."""
    fac = lu_factor(matrix)
    return fac.solve(np.eye(fac.size, dtype=fac.packed.dtype))


# Pade(13,13) numerator coefficients for the exponential kernel.
_PADE13 = (
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
)


def _pade13(a: np.ndarray) -> np.ndarray:
    b = _PADE13
    ident = np.eye(a.shape[0], dtype=a.dtype)
    a2 = a @ a
    a4 = a2 @ a2
    a6 = a2 @ a4
    u = a @ (a6 @ (b[13] * a6 + b[11] * a4 + b[9] * a2)
             + b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * ident)
    v = (a6 @ (b[12] * a6 + b[10] * a4 + b[8] * a2)
         + b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * ident)
    return lu_factor(v - u).solve(v + u)


# Above this squaring depth the chain runs in extended precision (when the
# platform provides one): every squaring can lose a bit, and stiff mode
# generators routinely need 20+ squarings.
_EXTENDED_PRECISION_DEPTH = 10

_LONGDOUBLE_HELPS = np.finfo(np.longdouble).eps < np.finfo(np.float64).eps


def matrix_exponential(matrix, t: float = 1.0) -> np.ndarray:
    """Compute ``exp(t * matrix)`` by scaling and squaring.

    The scaled matrix is brought to 1-norm <= 1 with ``ceil(log2(|t M|_1))``
    squarings and exponentiated with a degree-13 Pade kernel, so a single code
    path stays accurate from the non-stiff regime up to ``|t M|`` of order
    1/epsilon.  Deep chains switch to extended precision to keep the roundoff
    floor below the accuracy of the solutions compared against this oracle.
    Squaring depth is capped at ``MAX_SQUARINGS`` and non-finite intermediates
    raise ``ExponentialOverflowError``.
    """
    a = validate_matrix(matrix, name="matrix_exponential input")
    if not math.isfinite(t):
        raise ValueError("t must be finite")
    scaled = t * a
    norm1 = float(np.abs(scaled).sum(axis=0).max()) if scaled.size else 0.0
    if norm1 == 0.0:
        return np.eye(a.shape[0], dtype=a.dtype)
    squarings = max(0, math.ceil(math.log2(norm1)))
    if squarings > MAX_SQUARINGS:
        raise ExponentialOverflowError(
            f"|t*matrix|_1 = {norm1:.3e} needs {squarings} squarings (cap {MAX_SQUARINGS})"
        )
    work_dtype = None
    if squarings > _EXTENDED_PRECISION_DEPTH and _LONGDOUBLE_HELPS:
        work_dtype = np.clongdouble if scaled.dtype.kind == "c" else np.longdouble
        scaled = scaled.astype(work_dtype)
    result = _pade13(scaled / 2.0 ** squarings)
    for _ in range(squarings):
        result = result @ result
    if work_dtype is not None:
        result = result.astype(complex if result.dtype.kind == "c" else float)
    if not np.isfinite(result).all():
        raise ExponentialOverflowError("matrix exponential overflowed during squaring")
    return result


@dataclass(frozen=True)
class DefinitenessReport:
    """Boolean verdict plus the witness that justifies a ``False``."""

    passed: bool
    detail: str
    pivot_index: int | None = None  # 1-based index of the failing pivot, if any
    value: float | None = None

    def __bool__(self) -> bool:
        return self.passed


def symmetry_residual(matrix) -> float:
    a = np.asarray(matrix)
    return float(np.abs(a - a.T).max())


def is_spd(matrix, tol: float = 1e-10) -> DefinitenessReport:
    """Check symmetric positive-definiteness via pivoted Cholesky.

    Total function: asymmetry or a non-positive pivot yields a failing report
    carrying the offending residual or pivot instead of raising.
    """
    a = validate_matrix(matrix, name="is_spd input")
    if a.dtype.kind == "c":
        if np.abs(a.imag).max() > tol:
            return DefinitenessReport(False, "matrix has a non-real part", value=float(np.abs(a.imag).max()))
        a = a.real.copy()
    residual = symmetry_residual(a)
    if residual > tol:
        return DefinitenessReport(False, f"asymmetry {residual:.3e} exceeds tol", value=residual)
    n = a.shape[0]
    chol = np.zeros_like(a)
    for j in range(n):
        pivot = a[j, j] - chol[j, :j] @ chol[j, :j]
        if pivot <= tol:
            return DefinitenessReport(
                False, f"Cholesky pivot {j + 1} is {pivot:.3e}", pivot_index=j + 1, value=float(pivot)
            )
        chol[j, j] = math.sqrt(pivot)
        for i in range(j + 1, n):
            chol[i, j] = (a[i, j] - chol[i, :j] @ chol[j, :j]) / chol[j, j]
    return DefinitenessReport(True, "symmetric positive-definite")


def jacobi_eigh(matrix, *, off_tol: float = 1e-13, max_sweeps: int = 60):
    """Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.

    Returns ``(w, V)`` with eigenvalues ascending and ``V[:, i]`` the matching
    orthonormal eigenvectors.  Sweeps stop once the off-diagonal Frobenius
    norm falls below ``off_tol`` relative to the matrix scale.
    """
    a = validate_matrix(matrix, name="jacobi_eigh input")
    if a.dtype.kind == "c":
        a = a.real.copy()
    a = 0.5 * (a + a.T)
    n = a.shape[0]
    vecs = np.eye(n)
    scale = max(float(np.sqrt((a * a).sum())), np.finfo(float).tiny)
    for _ in range(max_sweeps):
        off_diagonal = a - np.diag(np.diag(a))
        off = math.sqrt(float((off_diagonal * off_diagonal).sum()))
        if off <= off_tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= 1e-3 * off_tol * scale / max(n, 1):
                    continue
                tau = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = math.copysign(1.0, tau) / (abs(tau) + math.hypot(1.0, tau))
                c = 1.0 / math.hypot(1.0, t)
                s = t * c
                rot_p = c * a[:, p] - s * a[:, q]
                rot_q = s * a[:, p] + c * a[:, q]
                a[:, p], a[:, q] = rot_p, rot_q
                rot_p = c * a[p, :] - s * a[q, :]
                rot_q = s * a[p, :] + c * a[q, :]
                a[p, :], a[q, :] = rot_p, rot_q
                rot_p = c * vecs[:, p] - s * vecs[:, q]
                rot_q = s * vecs[:, p] + c * vecs[:, q]
                vecs[:, p], vecs[:, q] = rot_p, rot_q
    eigenvalues = np.diag(a).copy()
    order = np.argsort(eigenvalues, kind="stable")
    return eigenvalues[order], vecs[:, order]


def is_negative_semidefinite(matrix, tol: float = 1e-10) -> DefinitenessReport:
    """Check ``matrix <= 0`` (as a quadratic form) via Jacobi eigenvalues.

    Raises ``NotSymmetricError`` when the symmetry residual exceeds ``tol``.
    """
    a = validate_matrix(matrix, name="is_negative_semidefinite input")
    if a.dtype.kind == "c":
        a = a.real.copy()
    residual = symmetry_residual(a)
    if residual > tol:
        raise NotSymmetricError(f"asymmetry {residual:.3e} exceeds tol {tol:.3e}")
    eigenvalues, _ = jacobi_eigh(a)
    largest = float(eigenvalues[-1])
    if largest <= tol:
        return DefinitenessReport(True, f"max eigenvalue {largest:.3e}", value=largest)
    return DefinitenessReport(False, f"max eigenvalue {largest:.3e} exceeds tol", value=largest)
