"""Relaxation-system data model and the structural stability certificate.

A system is the constant-coefficient PDE ``U_t + A U_x = Q U / epsilon`` on a
periodic domain.  Systems handled by the solvers are kept in *normal form*:
the source matrix vanishes outside its bottom-right ``r x r`` block, and that
block (the stiff block) is invertible.  The certificate checks the three
structural stability conditions for a candidate witness ``(P, A0)``:

  (i)   ``P Q P^-1`` is in normal form with an invertible stiff block,
  (ii)  ``A0`` is SPD and ``A0 A`` is symmetric,
  (iii) ``A0 Q + Q^T A0 + P^T diag(0, I_r) P`` is negative semidefinite,

plus the extra requirement that the transformed symmetrizer is block
diagonal with ``A02 * S_hat`` symmetric negative-definite.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Mapping

import numpy as np

from .linalg import (
    DefinitenessReport,
    NotSymmetricError,
    SingularMatrixError,
    inverse,
    is_negative_semidefinite,
    is_spd,
    jacobi_eigh,
    lu_factor,
    symmetry_residual,
    validate_matrix,
)

__all__ = [
    "DimensionMismatchError",
    "SingularTransformError",
    "NotNormalFormError",
    "SymmetrizerNotFoundError",
    "RelaxationSystem",
    "StabilityWitness",
    "ConditionCheck",
    "CertificateReport",
    "check_structural_stability",
    "transform_to_normal_form",
    "find_transform",
    "find_symmetrizer",
    "system_to_json",
    "system_from_json",
]

_NORMAL_FORM_TOL = 1e-12


class DimensionMismatchError(ValueError):
    """Matrix/witness shapes are inconsistent."""


class SingularTransformError(ValueError):
    """The supplied transform matrix is singular."""


class NotNormalFormError(ValueError):
    """The transform does not block-diagonalize the source matrix."""


class SymmetrizerNotFoundError(RuntimeError):
    """The symmetrizer search exhausted its budget without a valid witness."""


def _stiff_projector(n: int, r: int) -> np.ndarray:
    proj = np.zeros((n, n))
    proj[n - r:, n - r:] = np.eye(r)
    return proj


def _off_block_residual(source: np.ndarray, r: int) -> float:
    n = source.shape[0]
    bulk = n - r
    masked = source.copy()
    masked[bulk:, bulk:] = 0.0
    return float(np.abs(masked).max()) if masked.size else 0.0


@dataclass(frozen=True)
class RelaxationSystem:
    """Normal-form system ``U_t + A U_x = diag(0, S_hat) U / epsilon``."""

    convection: np.ndarray
    source: np.ndarray
    stiff_size: int
    epsilon: float
    domain_length: float

    def __post_init__(self):
        conv = validate_matrix(self.convection, name="convection")
        src = validate_matrix(self.source, name="source")
        if conv.shape != src.shape:
            raise DimensionMismatchError(
                f"convection {conv.shape} and source {src.shape} differ"
            )
        n = conv.shape[0]
        if not 0 < self.stiff_size <= n:
            raise ValueError(f"stiff_size must be in (0, {n}], got {self.stiff_size}")
        if not self.epsilon > 0.0:
            raise ValueError("epsilon must be positive")
        if not self.domain_length > 0.0:
            raise ValueError("domain_length must be positive")
        scale = max(float(np.abs(src).max()), 1.0)
        residual = _off_block_residual(src, self.stiff_size)
        if residual > _NORMAL_FORM_TOL * scale:
            raise NotNormalFormError(
                f"source has off-block residual {residual:.3e}; not in normal form"
            )
        # Snap the structural zeros exactly so conserved components stay exact.
        bulk = n - self.stiff_size
        cleaned = np.zeros_like(src)
        cleaned[bulk:, bulk:] = src[bulk:, bulk:]
        try:
            lu_factor(cleaned[bulk:, bulk:])
        except SingularMatrixError as exc:
            raise NotNormalFormError(f"stiff block is singular: {exc}") from exc
        conv.setflags(write=False)
        cleaned.setflags(write=False)
        object.__setattr__(self, "convection", conv)
        object.__setattr__(self, "source", cleaned)

    @property
    def dimension(self) -> int:
        return self.convection.shape[0]

    @property
    def bulk_size(self) -> int:
        """Number of non-stiff (conserved-at-k=0) components."""
        return self.dimension - self.stiff_size

    @property
    def stiff_block(self) -> np.ndarray:
        b = self.bulk_size
        return self.source[b:, b:]

    def with_epsilon(self, epsilon: float) -> "RelaxationSystem":
        return replace(self, epsilon=epsilon)


@dataclass(frozen=True)
class StabilityWitness:
    """Candidate certificate ``(P, A0)`` for the structural stability condition."""

    transform: np.ndarray
    symmetrizer: np.ndarray
    stiff_size: int

    def __post_init__(self):
        p = validate_matrix(self.transform, name="transform")
        a0 = validate_matrix(self.symmetrizer, name="symmetrizer")
        if p.shape != a0.shape:
            raise DimensionMismatchError(f"transform {p.shape} vs symmetrizer {a0.shape}")
        if not 0 < self.stiff_size <= p.shape[0]:
            raise ValueError(f"stiff_size out of range for dimension {p.shape[0]}")
        try:
            lu_factor(p)
        except SingularMatrixError as exc:
            raise SingularTransformError(f"transform is singular: {exc}") from exc
        p.setflags(write=False)
        a0.setflags(write=False)
        object.__setattr__(self, "transform", p)
        object.__setattr__(self, "symmetrizer", a0)

    @property
    def dimension(self) -> int:
        return self.transform.shape[0]

    def normal_form_symmetrizer(self) -> np.ndarray:
        """The symmetrizer seen by the transformed system: ``P^-T A0 P^-1``."""
        p_inv = inverse(self.transform)
        return p_inv.T @ self.symmetrizer @ p_inv


@dataclass(frozen=True)
class ConditionCheck:
    passed: bool
    residual: float
    detail: str

    def __bool__(self) -> bool:
        return self.passed


@dataclass(frozen=True)
class CertificateReport:
    """Per-condition outcome of a structural stability check."""

    normal_form: ConditionCheck
    symmetrizer_spd: ConditionCheck
    convection_symmetry: ConditionCheck
    dissipation: ConditionCheck
    block_structure: ConditionCheck
    stiff_coupling: ConditionCheck
    tol: float

    @property
    def passed(self) -> bool:
        return all(
            (
                self.normal_form.passed,
                self.symmetrizer_spd.passed,
                self.convection_symmetry.passed,
                self.dissipation.passed,
                self.block_structure.passed,
                self.stiff_coupling.passed,
            )
        )

    def summary(self) -> str:
        lines = [f"structural stability certificate (tol={self.tol:.1e})"]
        labels = [
            ("(i) source normal form / stiff block invertible", self.normal_form),
            ("(ii) symmetrizer SPD", self.symmetrizer_spd),
            ("(ii) A0*A symmetry", self.convection_symmetry),
            ("(iii) dissipation inequality", self.dissipation),
            ("transformed symmetrizer block-diagonal", self.block_structure),
            ("A02*S_hat symmetric negative-definite", self.stiff_coupling),
        ]
        for label, check in labels:
            status = "PASS" if check.passed else "FAIL"
            lines.append(f"  [{status}] {label}: residual {check.residual:.3e} ({check.detail})")
        lines.append("  overall: " + ("PASS" if self.passed else "FAIL"))
        return "\n".join(lines)


def _system_matrices(system) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(system, RelaxationSystem):
        return np.asarray(system.convection), np.asarray(system.source)
    conv, src = system
    return (
        validate_matrix(conv, name="convection"),
        validate_matrix(src, name="source"),
    )


def check_structural_stability(system, witness: StabilityWitness, tol: float = 1e-10) -> CertificateReport:
    """Evaluate conditions (i)-(iii) plus the stiff-coupling assumption.

    ``system`` may be a :class:`RelaxationSystem` or a raw ``(convection,
    source)`` pair; the latter lets a witness with a nontrivial transform be
    certified against the untransformed matrices.
    """
    conv, src = _system_matrices(system)
    n = conv.shape[0]
    r = witness.stiff_size
    if witness.dimension != n:
        raise DimensionMismatchError(
            f"witness dimension {witness.dimension} does not match system dimension {n}"
        )
    if isinstance(system, RelaxationSystem) and system.stiff_size != r:
        raise DimensionMismatchError(
            f"witness stiff size {r} does not match system stiff size {system.stiff_size}"
        )
    bulk = n - r
    transform = np.asarray(witness.transform)
    symmetrizer = np.asarray(witness.symmetrizer)

    # (i): P Q P^-1 in normal form with invertible stiff block.  Invertibility
    # is judged against the certificate tolerance, not just machine scale.
    transformed_source = transform @ src @ inverse(transform)
    off_residual = _off_block_residual(transformed_source, r)
    stiff_block = transformed_source[bulk:, bulk:]
    try:
        pivots = np.abs(np.diag(lu_factor(stiff_block).packed))
        stiff_ok = bool(pivots.min() > tol * max(1.0, float(np.abs(src).max())))
        stiff_detail = (
            "stiff block invertible" if stiff_ok else f"smallest pivot {pivots.min():.3e}"
        )
    except SingularMatrixError as exc:
        stiff_ok = False
        stiff_detail = f"stiff block singular: {exc}"
    normal_form = ConditionCheck(
        passed=off_residual <= tol and stiff_ok,
        residual=off_residual,
        detail=stiff_detail,
    )

    # (ii): A0 SPD and A0*A symmetric.
    spd_report: DefinitenessReport = is_spd(symmetrizer, tol)
    symmetrizer_spd = ConditionCheck(
        passed=spd_report.passed,
        residual=0.0 if spd_report.value is None else float(spd_report.value),
        detail=spd_report.detail,
    )
    sym_residual = symmetry_residual(symmetrizer @ conv)
    convection_symmetry = ConditionCheck(
        passed=sym_residual <= tol,
        residual=sym_residual,
        detail="A0*A symmetry residual",
    )

    # (iii): A0 Q + Q^T A0 + P^T diag(0, I_r) P <= 0.
    coupling = symmetrizer @ src + src.T @ symmetrizer + transform.T @ _stiff_projector(n, r) @ transform
    try:
        nsd_report = is_negative_semidefinite(coupling, max(tol, 1e-12))
        dissipation = ConditionCheck(
            passed=nsd_report.passed,
            residual=0.0 if nsd_report.value is None else float(nsd_report.value),
            detail="max eigenvalue of the dissipation matrix",
        )
    except NotSymmetricError as exc:
        dissipation = ConditionCheck(False, float("inf"), str(exc))

    # Transformed symmetrizer must be block diagonal; its stiff block couples
    # with the stiff source block symmetrically and negative-definitely.
    normal_symmetrizer = witness.normal_form_symmetrizer()
    cross = normal_symmetrizer[:bulk, bulk:]
    cross_residual = float(np.abs(cross).max()) if cross.size else 0.0
    block_structure = ConditionCheck(
        passed=cross_residual <= tol,
        residual=cross_residual,
        detail="off-block magnitude of P^-T A0 P^-1",
    )
    product = normal_symmetrizer[bulk:, bulk:] @ stiff_block
    product_sym = symmetry_residual(product)
    if product_sym <= max(tol, 1e-10):
        eigenvalues, _ = jacobi_eigh(0.5 * (product + product.T))
        largest = float(eigenvalues[-1])
        stiff_coupling = ConditionCheck(
            passed=largest <= -tol,
            residual=largest,
            detail="max eigenvalue of A02*S_hat",
        )
    else:
        stiff_coupling = ConditionCheck(False, product_sym, "A02*S_hat asymmetric")

    return CertificateReport(
        normal_form=normal_form,
        symmetrizer_spd=symmetrizer_spd,
        convection_symmetry=convection_symmetry,
        dissipation=dissipation,
        block_structure=block_structure,
        stiff_coupling=stiff_coupling,
        tol=tol,
    )


class TransformedSystem(tuple):
    """Named triple ``(convection, source, stiff_size)`` in normal form."""

    __slots__ = ()

    def __new__(cls, convection, source, stiff_size):
        return super().__new__(cls, (convection, source, stiff_size))

    @property
    def convection(self):
        return self[0]

    @property
    def source(self):
        return self[1]

    @property
    def stiff_size(self):
        return self[2]


def _infer_stiff_size(source: np.ndarray, tol: float) -> int:
    """Largest r such that rows/columns outside the trailing r-block vanish."""
    n = source.shape[0]
    scale = max(float(np.abs(source).max()), 1.0)
    bulk = 0
    while bulk < n:
        row_clear = np.abs(source[bulk, :]).max() <= tol * scale
        col_clear = np.abs(source[:, bulk]).max() <= tol * scale
        if not (row_clear and col_clear):
            break
        bulk += 1
    return n - bulk


def transform_to_normal_form(convection, source, transform) -> TransformedSystem:
    """Change variables by ``P``: returns ``(P A P^-1, P Q P^-1, r)``.

    Raises ``SingularTransformError`` if ``P`` is singular and
    ``NotNormalFormError`` if the transformed source is not block diagonal
    with an invertible stiff block (within 1e-12 of the matrix scale).
    """
    conv = validate_matrix(convection, name="convection")
    src = validate_matrix(source, name="source")
    p = validate_matrix(transform, name="transform")
    if conv.shape != src.shape or conv.shape != p.shape:
        raise DimensionMismatchError("convection, source and transform must share shape")
    try:
        p_inv = inverse(p)
    except SingularMatrixError as exc:
        raise SingularTransformError(f"transform is singular: {exc}") from exc
    new_conv = p @ conv @ p_inv
    new_src = p @ src @ p_inv
    r = _infer_stiff_size(new_src, _NORMAL_FORM_TOL)
    scale = max(float(np.abs(new_src).max()), 1.0)
    if r == 0:
        raise NotNormalFormError("transformed source vanishes; no stiff block")
    residual = _off_block_residual(new_src, r)
    if residual > _NORMAL_FORM_TOL * scale:
        raise NotNormalFormError(
            f"transform leaves off-block residual {residual:.3e}"
        )
    n = conv.shape[0]
    bulk = n - r
    cleaned = np.zeros_like(new_src)
    cleaned[bulk:, bulk:] = new_src[bulk:, bulk:]
    try:
        lu_factor(cleaned[bulk:, bulk:])
    except SingularMatrixError as exc:
        raise NotNormalFormError(f"stiff block singular after transform: {exc}") from exc
    return TransformedSystem(new_conv, cleaned, r)


def find_transform(source, tol: float = 1e-10) -> np.ndarray:
    """Build a transform bringing ``source`` into normal form.

    The top rows span the left null space of the source (eigenvectors of
    ``Q Q^T`` at eigenvalue 0) and the bottom rows span its row space
    (eigenvectors of ``Q^T Q`` at nonzero eigenvalues).  Each row is rescaled
    by its largest-magnitude entry for readability.  Fails with
    ``NotNormalFormError`` when the source has a nilpotent part.
    """
    src = validate_matrix(source, name="source")
    n = src.shape[0]
    left_gram = src @ src.T
    right_gram = src.T @ src
    w_left, v_left = jacobi_eigh(left_gram)
    w_right, v_right = jacobi_eigh(right_gram)
    scale = max(float(w_right[-1]), np.finfo(float).tiny)
    null_rows = [v_left[:, i] for i in range(n) if w_left[i] <= tol * scale]
    range_rows = [v_right[:, i] for i in range(n) if w_right[i] > tol * scale]
    if not range_rows:
        raise NotNormalFormError("source is (numerically) zero")
    if len(null_rows) + len(range_rows) != n:
        raise NotNormalFormError("rank mismatch between left and right null spaces")
    rows = []
    for vec in null_rows + range_rows:
        anchor = vec[np.argmax(np.abs(vec))]
        rows.append(vec / anchor)
    p = np.array(rows)
    # A nilpotent part makes the null and range rows overlap or leaves the
    # transformed source off the block form; verify now.
    try:
        transform_to_normal_form(np.zeros_like(src), src, p)
    except SingularTransformError as exc:
        raise NotNormalFormError(
            f"source has a nilpotent part; no similarity to a block form: {exc}"
        ) from exc
    return p


# -- symmetrizer search -----------------------------------------------------


def _block_diag_basis(n: int, r: int) -> list[np.ndarray]:
    """Symmetric block-diagonal basis matrices with blocks of sizes (n-r, r)."""
    basis = []
    bulk = n - r
    for block_start, block_stop in ((0, bulk), (bulk, n)):
        for i in range(block_start, block_stop):
            for j in range(i, block_stop):
                mat = np.zeros((n, n))
                mat[i, j] = 1.0
                mat[j, i] = 1.0
                basis.append(mat)
    return basis


def _symmetrizer_solution_space(system: RelaxationSystem, tol: float = 1e-10) -> list[np.ndarray]:
    """Basis of symmetric block-diagonal A0 with ``A0 A`` symmetric."""
    n = system.dimension
    conv = np.asarray(system.convection)
    basis = _block_diag_basis(n, system.stiff_size)
    rows = []
    for mat in basis:
        asym = mat @ conv - conv.T @ mat
        rows.append(asym[np.triu_indices(n, k=1)])
    constraint = np.array(rows).T  # (n(n-1)/2, d)
    if constraint.size == 0 or np.abs(constraint).max() == 0.0:
        null_vectors = [np.eye(len(basis))[:, i] for i in range(len(basis))]
    else:
        gram = constraint.T @ constraint
        eigenvalues, vectors = jacobi_eigh(gram)
        cutoff = tol * max(float(eigenvalues[-1]), 1.0)
        null_vectors = [vectors[:, i] for i in range(len(basis)) if eigenvalues[i] <= cutoff]
    space = []
    for vec in null_vectors:
        candidate = sum(c * mat for c, mat in zip(vec, basis))
        candidate /= max(np.abs(candidate).max(), np.finfo(float).tiny)
        space.append(candidate)
    return space


def _integer_like_rescale(system: RelaxationSystem, witness_matrix: np.ndarray, tol: float):
    """Try small scalings that turn the symmetrizer into integer entries."""
    peak = np.abs(witness_matrix).max()
    for target in range(1, 17):
        candidate = witness_matrix * (target / peak)
        rounded = np.round(candidate)
        if np.abs(candidate - rounded).max() > 1e-9 * target:
            continue
        witness = StabilityWitness(
            np.eye(system.dimension), rounded, stiff_size=system.stiff_size
        )
        if check_structural_stability(system, witness, tol).passed:
            return witness
    return None


def find_symmetrizer(
    system: RelaxationSystem,
    tol: float = 1e-10,
    *,
    grid_limit: float = 2.0,
    grid_step: float = 0.25,
    max_candidates: int = 200_000,
) -> StabilityWitness:
    """Search for a block-diagonal symmetrizer certifying a normal-form system.

    The symmetric block-diagonal candidates satisfying the linear constraint
    ``A0 A = A^T A0`` form a subspace; its basis is found by a least-squares
    (Gram-matrix) null-space computation.  Candidate coefficient combinations
    are scanned on a coarse grid, with a golden-section refinement of the
    dissipation eigenvalue along the best direction if the grid fails.  The
    first passing candidate is rescaled to the smallest integer-like scale.

    Raises ``SymmetrizerNotFoundError`` with the best residual seen when the
    budget is exhausted.
    """
    space = _symmetrizer_solution_space(system)
    if not space:
        raise SymmetrizerNotFoundError("constraint A0*A = A^T*A0 admits only A0 = 0")
    if len(space) > 6:
        raise SymmetrizerNotFoundError(
            f"solution space dimension {len(space)} exceeds the search budget"
        )

    ident = np.eye(system.dimension)

    def evaluate(matrix: np.ndarray):
        peak = np.abs(matrix).max()
        if peak <= 1e-12:
            return None
        witness = StabilityWitness(ident, matrix, stiff_size=system.stiff_size)
        return check_structural_stability(system, witness, tol)

    dim = len(space)
    ticks = np.arange(-grid_limit, grid_limit + 0.5 * grid_step, grid_step)
    best = (np.inf, None)
    evaluated = 0
    for raw in itertools.product(ticks, repeat=dim):
        if evaluated >= max_candidates:
            break
        combo = np.array(raw)
        if np.abs(combo).max() == 0.0:
            continue
        candidate = sum(c * mat for c, mat in zip(combo, space))
        report = evaluate(candidate)
        evaluated += 1
        if report is None:
            continue
        if report.passed:
            rescaled = _integer_like_rescale(system, candidate, tol)
            if rescaled is not None:
                return rescaled
            return StabilityWitness(ident, candidate, stiff_size=system.stiff_size)
        score = max(report.dissipation.residual, 0.0) + (0.0 if report.symmetrizer_spd else 1.0)
        if score < best[0]:
            best = (score, combo.copy())

    if best[1] is not None:
        refined = _golden_refine(system, space, best[1], tol, evaluate)
        if refined is not None:
            return refined
    raise SymmetrizerNotFoundError(
        f"no witness after {evaluated} candidates; best dissipation residual {best[0]:.3e}"
    )


def _golden_refine(system, space, combo, tol, evaluate):
    """Golden-section sweep of each coefficient against the dissipation eigenvalue."""
    golden = (np.sqrt(5.0) - 1.0) / 2.0
    combo = combo.astype(float)

    def objective(c):
        candidate = sum(x * mat for x, mat in zip(c, space))
        report = evaluate(candidate)
        if report is None:
            return np.inf, None
        penalty = 0.0 if report.symmetrizer_spd else 1e3
        return report.dissipation.residual + penalty, report

    for axis in range(len(combo)):
        low, high = combo[axis] - 0.5, combo[axis] + 0.5
        for _ in range(40):
            mid1 = high - golden * (high - low)
            mid2 = low + golden * (high - low)
            trial1, trial2 = combo.copy(), combo.copy()
            trial1[axis], trial2[axis] = mid1, mid2
            if objective(trial1)[0] <= objective(trial2)[0]:
                high = mid2
            else:
                low = mid1
        combo[axis] = 0.5 * (low + high)
        score, report = objective(combo)
        if report is not None and report.passed:
            candidate = sum(x * mat for x, mat in zip(combo, space))
            rescaled = _integer_like_rescale(system, candidate, tol)
            if rescaled is not None:
                return rescaled
            return StabilityWitness(
                np.eye(system.dimension), candidate, stiff_size=system.stiff_size
            )
    return None


# -- JSON interchange ---------------------------------------------------------


def _parse_entry(value) -> float:
    if isinstance(value, str):
        return float(Fraction(value))
    return float(value)


def _parse_matrix(doc, n: int, name: str) -> np.ndarray:
    flat = np.asarray(doc, dtype=object).ravel()
    if flat.size != n * n:
        raise ValueError(f"{name} must have {n * n} entries, got {flat.size}")
    return np.array([_parse_entry(v) for v in flat], dtype=float).reshape(n, n)


def system_to_json(system: RelaxationSystem, witness: StabilityWitness | None = None) -> str:
    doc = {
        "n": system.dimension,
        "r": system.stiff_size,
        "epsilon": system.epsilon,
        "domain_length": system.domain_length,
        "A": [float(v) for v in np.asarray(system.convection).ravel()],
        "Q": [float(v) for v in np.asarray(system.source).ravel()],
    }
    if witness is not None:
        doc["witness"] = {
            "P": [float(v) for v in np.asarray(witness.transform).ravel()],
            "A0": [float(v) for v in np.asarray(witness.symmetrizer).ravel()],
        }
    return json.dumps(doc, indent=2)


def system_from_json(text: str | Mapping) -> tuple[RelaxationSystem, StabilityWitness | None]:
    doc = json.loads(text) if isinstance(text, str) else dict(text)
    n = int(doc["n"])
    system = RelaxationSystem(
        convection=_parse_matrix(doc["A"], n, "A"),
        source=_parse_matrix(doc["Q"], n, "Q"),
        stiff_size=int(doc["r"]),
        epsilon=_parse_entry(doc["epsilon"]),
        domain_length=_parse_entry(doc["domain_length"]),
    )
    witness = None
    if "witness" in doc and doc["witness"] is not None:
        witness = StabilityWitness(
            transform=_parse_matrix(doc["witness"]["P"], n, "P"),
            symmetrizer=_parse_matrix(doc["witness"]["A0"], n, "A0"),
            stiff_size=system.stiff_size,
        )
    return system, witness
