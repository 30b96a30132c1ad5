import math

import numpy as np
import pytest

from relaxbdf.harness import compute_error
from relaxbdf.integrator import run
from relaxbdf.models import build_model, initial_data
from relaxbdf.oracle import exact_evolve, fine_step_reference, mode_matrix
from relaxbdf.spectral import field_inner_product, project
from relaxbdf.system import RelaxationSystem
from relaxbdf.theory import fit_order

TWO_PI = 2.0 * math.pi


def near_transport_system(speed=0.7):
    # n=1 with a negligible source: transport plus an O(1e-12) decay, used to
    # exercise the pure-advection behaviour within the normal-form contract.
    return RelaxationSystem(
        convection=np.array([[speed]]),
        source=np.array([[-1.0]]),
        stiff_size=1,
        epsilon=1e12,
        domain_length=TWO_PI,
    )


class TestExactEvolve:
    def test_time_zero_is_identity(self):
        model = build_model("broadwell")
        system = model.system_at(1e-3)
        u0 = initial_data(model, 3, 12, 1e-3)
        evolved = exact_evolve(u0, system, 0.0)
        np.testing.assert_array_equal(evolved.coeffs, u0.coeffs)

    def test_mode_matrix_conjugate_pairing(self):
        model = build_model("grad")
        system = model.system_at(1e-2)
        np.testing.assert_allclose(
            mode_matrix(system, -3), np.conj(mode_matrix(system, 3)), atol=0
        )

    def test_scalar_advection_translates(self):
        system = near_transport_system(speed=0.7)
        profile = lambda x: [math.sin(x) + 0.3 * math.cos(2 * x)]
        u0 = project(profile, 1, 8, TWO_PI)
        t = 1.3
        evolved = exact_evolve(u0, system, t)
        xs = np.linspace(0.0, TWO_PI, 23)
        shifted = np.array([profile(x - 0.7 * t)[0] for x in xs])
        np.testing.assert_allclose(evolved.evaluate(xs)[:, 0], shifted, atol=1e-9)

    def test_preserves_real_valuedness(self):
        model = build_model("arz")
        system = model.system_at(1e-6)
        u0 = initial_data(model, 3, 16, 1e-6)
        evolved = exact_evolve(u0, system, 1.0)
        mirror = np.conj(np.asarray(evolved.coeffs)[::-1])
        assert np.abs(evolved.coeffs - mirror).max() < 1e-11

    @pytest.mark.parametrize("epsilon", [1.0, 1e-4, 1e-8])
    def test_semigroup(self, epsilon):
        model = build_model("broadwell")
        system = model.system_at(epsilon)
        u0 = initial_data(model, 3, 12, epsilon)
        direct = exact_evolve(u0, system, 0.9)
        composed = exact_evolve(exact_evolve(u0, system, 0.5), system, 0.4)
        scale = max(direct.l2_norm(), 1.0)
        assert compute_error(direct, composed) / scale < 1e-9

    @pytest.mark.parametrize("name", ["arz", "broadwell", "grad"])
    def test_weighted_energy_non_increasing(self, name):
        model = build_model(name)
        system = model.system_at(1e-2)
        u0 = initial_data(model, 3, 12, 1e-2)
        weight = np.asarray(model.witness.symmetrizer)
        energies = []
        for t in np.linspace(0.0, 2.0, 9):
            evolved = exact_evolve(u0, system, float(t))
            energies.append(field_inner_product(evolved, evolved, weight))
        for earlier, later in zip(energies, energies[1:]):
            assert later <= earlier * (1.0 + 1e-9)

    def test_negative_time_rejected(self):
        model = build_model("arz")
        with pytest.raises(ValueError):
            exact_evolve(initial_data(model, 2, 4, 1.0), model.system_at(1.0), -0.1)


class TestFineStepReference:
    def test_degenerate_step_equals_run(self):
        model = build_model("grad")
        system = model.system_at(1e-2)
        u0 = initial_data(model, 2, 8, 1e-2)
        direct = run(u0, system, 2, 1e-2, 0.5)
        reference = fine_step_reference(u0, system, 2, 1e-2, 0.5)
        assert np.array_equal(direct.coeffs, reference.coeffs)

    def test_agrees_with_exact_oracle_at_tiny_step(self):
        model = build_model("arz")
        system = model.system_at(1.0)
        u0 = initial_data(model, 3, 8, 1.0)
        reference = fine_step_reference(u0, system, 3, 1e-6, 0.01)
        exact = exact_evolve(u0, system, 0.01)
        assert compute_error(reference, exact) < 1e-10

    def test_stiff_long_horizon_self_consistency(self):
        # A third-order run at a very fine step over the full horizon lands on
        # the closed-form solution: cross-validation of both routes.
        model = build_model("broadwell")
        system = model.system_at(1e-2)
        u0 = initial_data(model, 3, 8, 1e-2)
        reference = fine_step_reference(u0, system, 3, 2e-5, 2.0)
        exact = exact_evolve(u0, system, 2.0)
        assert compute_error(reference, exact) < 1e-9

    def test_converges_to_exact_at_scheme_order(self):
        model = build_model("broadwell")
        system = model.system_at(1.0)
        u0 = initial_data(model, 2, 8, 1.0)
        exact = exact_evolve(u0, system, 0.5)
        dts = [1 / 100, 1 / 200, 1 / 400]
        errors = [
            compute_error(fine_step_reference(u0, system, 2, dt, 0.5), exact)
            for dt in dts
        ]
        assert fit_order(dts, errors) == pytest.approx(2.0, abs=0.15)
