"""Built-in relaxation systems: traffic flow, discrete-velocity gas, moments.

Three linearized models ship with the library:

* ``arz`` - the Aw-Rascle-Zhang traffic model linearized about a uniform
  state, a 2x2 system on [0, 1];
* ``broadwell`` - the three-velocity Broadwell gas linearized about its
  Maxwellian, a 3x3 system on [-pi, pi];
* ``grad`` - the linearized Grad moment hierarchy with M+1 scaled moment
  variables on [-pi, pi].

Each model records its raw matrices, the change of variables bringing the
source to normal form, a verified stability witness, and the standard initial
profiles, including the epsilon-dependent corrections that make the data
well prepared for the higher-order schemes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .integrator import UnsupportedOrderError
from .linalg import inverse
from .spectral import SpectralField, project
from .system import (
    RelaxationSystem,
    StabilityWitness,
    find_symmetrizer,
    find_transform,
    transform_to_normal_form,
)

__all__ = [
    "InvalidParameterError",
    "ModelSpec",
    "make_arz",
    "make_broadwell",
    "make_grad",
    "build_model",
    "initial_data",
    "MODEL_BUILDERS",
]


class InvalidParameterError(ValueError):
    """A model parameter is outside its admissible range."""


@dataclass(frozen=True)
class ModelSpec:
    """A concrete model: normal-form system plus provenance of the transform."""

    name: str
    parameters: Mapping[str, float]
    system: RelaxationSystem
    witness: StabilityWitness
    domain_length: float
    raw_convection: np.ndarray
    raw_source: np.ndarray
    transform: np.ndarray
    raw_witness: StabilityWitness | None
    data_cutoff: int  # largest mode carried by the initial profiles

    def system_at(self, epsilon: float) -> RelaxationSystem:
        return self.system.with_epsilon(epsilon)


def make_arz(
    epsilon: float = 1.0,
    c0: float = 1.5,
    gamma: float = 1.0,
    rho_m: float = 8.0,
    v_f: float = 4.0,
    rho_star: float = 1.0,
    v_star: float = 1.0,
) -> ModelSpec:
    """Linearized Aw-Rascle-Zhang traffic model on [0, 1].

    Density/velocity dynamics about the uniform state ``(rho*, v*)`` with
    pressure ``p = c0 rho^gamma`` and Greenshields equilibrium speed
    ``V(rho) = v_f (1 - rho/rho_m)``; the velocity relaxes toward
    ``V'(rho*) rho`` on the timescale epsilon.
    """
    pressure_slope = c0 * gamma * rho_star ** (gamma - 1.0)
    relax_slope = -v_f / rho_m
    convection = np.array([
        [v_star, rho_star],
        [0.0, v_star - rho_star * pressure_slope],
    ])
    source = np.array([
        [0.0, 0.0],
        [relax_slope, -1.0],
    ])
    # Left eigenvector of the source at its nonzero eigenvalue gives the
    # second row of the normal-form transform.
    transform = np.array([
        [1.0, 0.0],
        [-relax_slope, 1.0],
    ])
    normal = transform_to_normal_form(convection, source, transform)
    system = RelaxationSystem(
        convection=normal.convection,
        source=normal.source,
        stiff_size=normal.stiff_size,
        epsilon=epsilon,
        domain_length=1.0,
    )
    defaults = (c0, gamma, rho_m, v_f, rho_star, v_star) == (1.5, 1.0, 8.0, 4.0, 1.0, 1.0)
    if defaults:
        raw_symmetrizer = np.array([[3.0, 2.0], [2.0, 4.0]])
        raw_witness = StabilityWitness(transform, raw_symmetrizer, stiff_size=1)
        p_inv = inverse(transform)
        witness = StabilityWitness(
            np.eye(2), p_inv.T @ raw_symmetrizer @ p_inv, stiff_size=1
        )
    else:
        raw_witness = None
        witness = find_symmetrizer(system)
    return ModelSpec(
        name="arz",
        parameters={
            "c0": c0,
            "gamma": gamma,
            "rho_m": rho_m,
            "v_f": v_f,
            "rho_star": rho_star,
            "v_star": v_star,
        },
        system=system,
        witness=witness,
        domain_length=1.0,
        raw_convection=convection,
        raw_source=source,
        transform=transform,
        raw_witness=raw_witness,
        data_cutoff=1,
    )


def make_broadwell(epsilon: float = 1.0) -> ModelSpec:
    """Linearized Broadwell gas in (density, momentum, energy-flux) variables.

    Linearization point is the Maxwellian with ``rho* = 2, m* = 0, z* = 1``.
    The source is not block diagonal in these variables; the normal-form
    transform is built from the source's eigenstructure and the witness from
    the symmetrizer search (then verified).
    """
    convection = np.array([
        [0.0, 1.0, 0.0],
        [0.0, 0.0, 1.0],
        [0.0, 1.0, 0.0],
    ])
    source = np.array([
        [0.0, 0.0, 0.0],
        [0.0, 0.0, 0.0],
        [1.0, 0.0, -2.0],
    ])
    transform = find_transform(source)
    normal = transform_to_normal_form(convection, source, transform)
    system = RelaxationSystem(
        convection=normal.convection,
        source=normal.source,
        stiff_size=normal.stiff_size,
        epsilon=epsilon,
        domain_length=2.0 * math.pi,
    )
    witness = find_symmetrizer(system)
    return ModelSpec(
        name="broadwell",
        parameters={
            "rho_star": 2.0,
            "m_star": 0.0,
            "z_star": 1.0,
            "a_rho": 0.3,
            "a_u": 0.1,
        },
        system=system,
        witness=witness,
        domain_length=2.0 * math.pi,
        raw_convection=convection,
        raw_source=source,
        transform=transform,
        raw_witness=None,
        data_cutoff=4,
    )


def make_grad(moments: int = 5, epsilon: float = 1.0) -> ModelSpec:
    """Linearized Grad moment system with moments up to order ``moments``.

    The (M+1)-dimensional state stacks density, velocity, scaled temperature
    and the scaled higher moments; convection is the symmetric tridiagonal
    matrix with off-diagonal entries sqrt(1..M), and the source damps every
    moment beyond the conserved first three.  Identity transform and identity
    symmetrizer certify the stability condition.
    """
    if moments < 3:
        raise InvalidParameterError(f"moment count must be >= 3, got {moments}")
    n = moments + 1
    off_diagonal = np.sqrt(np.arange(1.0, moments + 1.0))
    convection = np.diag(off_diagonal, 1) + np.diag(off_diagonal, -1)
    source = -np.diag([0.0, 0.0, 0.0] + [1.0] * (moments - 2))
    system = RelaxationSystem(
        convection=convection,
        source=source,
        stiff_size=moments - 2,
        epsilon=epsilon,
        domain_length=2.0 * math.pi,
    )
    witness = StabilityWitness(np.eye(n), np.eye(n), stiff_size=moments - 2)
    return ModelSpec(
        name="grad",
        parameters={"moments": float(moments)},
        system=system,
        witness=witness,
        domain_length=2.0 * math.pi,
        raw_convection=convection,
        raw_source=source,
        transform=np.eye(n),
        raw_witness=witness,
        data_cutoff=2,
    )


MODEL_BUILDERS = {
    "arz": make_arz,
    "broadwell": make_broadwell,
    "grad": make_grad,
}


def build_model(name: str, epsilon: float = 1.0, **overrides) -> ModelSpec:
    """Construct a model by name with optional parameter overrides."""
    try:
        builder = MODEL_BUILDERS[name]
    except KeyError as exc:
        raise InvalidParameterError(
            f"unknown model {name!r}; available: {sorted(MODEL_BUILDERS)}"
        ) from exc
    return builder(epsilon=epsilon, **overrides)


def _arz_profile(model: ModelSpec, q: int, cutoff: int, epsilon: float) -> np.ndarray:
    base = project(lambda x: [math.sin(2.0 * math.pi * x) + 1.1], 1, cutoff, 1.0)
    rho = base.coeffs[:, 0]
    ikappa = 1j * base.wavenumbers
    velocity = -0.5 * rho
    if q >= 3:
        velocity = velocity - 0.5 * epsilon * ikappa * rho
    if q >= 4:
        velocity = velocity - 0.25 * epsilon ** 2 * ikappa ** 2 * rho
    return np.stack([rho, velocity], axis=1)


def _broadwell_profile(model: ModelSpec, q: int, cutoff: int, epsilon: float) -> np.ndarray:
    a_rho = model.parameters["a_rho"]
    a_u = model.parameters["a_u"]

    def sampler(x: float):
        rho = 1.0 + a_rho * math.sin(2.0 * x)
        momentum = rho * (0.5 + a_u * math.cos(2.0 * x))
        return [rho, momentum]

    base = project(sampler, 2, cutoff, model.domain_length)
    rho = base.coeffs[:, 0]
    momentum = base.coeffs[:, 1]
    ikappa = 1j * base.wavenumbers
    flux = 0.5 * rho
    if q >= 3:
        flux = flux - 0.25 * epsilon * ikappa * momentum
    if q >= 4:
        flux = flux - epsilon ** 2 / 16.0 * ikappa ** 2 * rho
    return np.stack([rho, momentum, flux], axis=1)


def _grad_profile(model: ModelSpec, q: int, cutoff: int, epsilon: float) -> np.ndarray:
    n = model.system.dimension

    def sampler(x: float):
        values = [0.0] * n
        values[0] = math.sin(2.0 * x) + 1.1
        values[1] = 0.0
        values[2] = 1.0  # temperature sqrt(2), scaled by 1/sqrt(2) in the state
        return values

    return np.array(project(sampler, n, cutoff, model.domain_length).coeffs)


def initial_data(model: ModelSpec, q: int, cutoff: int, epsilon: float) -> SpectralField:
    """The model's initial profile as a spectral field in normal-form variables.

    The higher-order corrections are built by spectral differentiation of the
    base profile, then the physical variables are mapped through the model's
    normal-form transform.  All shipped profiles are band-limited: they are
    projected at their own cutoff and zero-padded, so every mode beyond
    ``model.data_cutoff`` is exactly zero (roundoff there would otherwise seed
    modes the large-step table runs cannot damp).
    """
    if cutoff < model.data_cutoff:
        raise ValueError(
            f"cutoff {cutoff} cannot represent data with modes up to {model.data_cutoff}"
        )
    if epsilon <= 0.0:
        raise ValueError("epsilon must be positive")
    if model.name == "grad":
        if q < 1:
            raise UnsupportedOrderError(f"order must be >= 1, got {q}")
        raw = _grad_profile(model, q, model.data_cutoff, epsilon)
    elif model.name == "arz":
        if q not in (2, 3, 4):
            raise UnsupportedOrderError(f"arz data is defined for orders 2..4, got {q}")
        raw = _arz_profile(model, q, model.data_cutoff, epsilon)
    elif model.name == "broadwell":
        if q not in (2, 3, 4):
            raise UnsupportedOrderError(
                f"broadwell data is defined for orders 2..4, got {q}"
            )
        raw = _broadwell_profile(model, q, model.data_cutoff, epsilon)
    else:
        raise InvalidParameterError(f"unknown model {model.name!r}")
    transformed = raw @ np.asarray(model.transform).T
    padded = np.zeros((2 * cutoff + 1, transformed.shape[1]), dtype=complex)
    pad = cutoff - model.data_cutoff
    padded[pad:pad + transformed.shape[0]] = transformed
    return SpectralField(padded, model.domain_length, real_valued=True)
