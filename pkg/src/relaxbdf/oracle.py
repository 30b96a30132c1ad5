"""Exact reference solutions of the Fourier-Galerkin semi-discretization.

For a constant-coefficient linear system the spectral modes decouple: mode k
evolves by ``u_hat_k' = M_k u_hat_k`` with ``M_k = -i*kappa_k*A + Q/eps``, so
the semi-discrete solution is a matrix exponential per mode.  For band-limited
initial data this is also the exact PDE solution, which makes it the
reference of choice for convergence studies; a conventional fine-step
reference is provided as a cross-check.
"""

from __future__ import annotations

import numpy as np

from .linalg import matrix_exponential
from .spectral import SpectralField
from .system import RelaxationSystem

__all__ = ["mode_matrix", "exact_evolve", "fine_step_reference"]


def mode_matrix(system: RelaxationSystem, k: int) -> np.ndarray:
    """Generator ``M_k = -i*kappa_k*A + Q/eps`` of the k-th spectral mode."""
    kappa = 2.0 * np.pi * k / system.domain_length
    return (-1j * kappa) * np.asarray(system.convection) + np.asarray(system.source) / system.epsilon


def exact_evolve(u0: SpectralField, system: RelaxationSystem, t: float) -> SpectralField:
    """Propagate a field exactly by time ``t >= 0``.

    Modes ``k`` and ``-k`` have complex-conjugate generators, so only the
    non-negative half is exponentiated; the mirrored propagator is the
    entrywise conjugate, which also preserves real-valuedness exactly.
    """
    if u0.n != system.dimension:
        raise ValueError("field does not match the system dimension")
    if t < 0.0:
        raise ValueError("t must be non-negative")
    cutoff = u0.cutoff
    center = cutoff
    out = np.empty_like(np.asarray(u0.coeffs))
    for k in range(cutoff + 1):
        propagator = matrix_exponential(mode_matrix(system, k), t)
        out[center + k] = propagator @ u0.coeffs[center + k]
        if k > 0:
            out[center - k] = np.conj(propagator) @ u0.coeffs[center - k]
    return SpectralField(out, u0.domain_length, u0.real_valued)


def fine_step_reference(
    u0: SpectralField,
    system: RelaxationSystem,
    q: int,
    dt_ref: float,
    t_final: float,
    *,
    t_start: float = 0.0,
    startup: str = "exact",
) -> SpectralField:
    """Reference by brute force: the IMEX-BDF integrator at a much finer step.

    Exists to cross-validate :func:`exact_evolve`; ``dt_ref`` must divide the
    interval.
    """
    from .integrator import run

    return run(
        u0,
        system,
        q,
        dt_ref,
        t_final,
        t_start=t_start,
        startup=startup,
    )
