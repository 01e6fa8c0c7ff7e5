"""Tests for the sparse-grid DG transport operator."""
import math

import numpy as np
import pytest
from pydantic import ValidationError

from sparse_dg.errors import FluxError
from sparse_dg.models.run_config import FluxType
from sparse_dg.services.basis1d import hierarchical_size
from sparse_dg.services.benchmarks import CENTERED, deformational_field, rotation_field
from sparse_dg.services.projection import project, project_1d
from sparse_dg.services.sparse_space import Domain, SparseGridFunction, get_space
from sparse_dg.services.transport_operator import (
    AnalyticFactor,
    BoundarySpec,
    FieldKind,
    FluxSpec,
    ProjectedFactor,
    SeparableTerm,
    TransportOperator,
    VelocityField,
    apply_rhs,
    compute_alpha,
    project_field,
    scalar_flux,
)

from .oracles import LocalRkdg1d, full_grid_operator_2d, jump_energy_2d

UPWIND = FluxSpec(type=FluxType.UPWIND)
LF = FluxSpec(type=FluxType.LF)


def random_function(rng, N, k, d, domain=None):
    space = get_space(N, k, d)
    return SparseGridFunction(space, domain or Domain.unit(d), rng.standard_normal(space.size))


def rotation_velocity(points):
    return np.stack([0.5 - points[:, 1], points[:, 0] - 0.5], axis=-1)


class TestScalarFlux:
    def test_upwind_selects_the_upwind_trace(self):
        assert scalar_flux(2.0, 3.0, 1.0, UPWIND) == pytest.approx(6.0)
        assert scalar_flux(-2.0, 3.0, 1.0, UPWIND) == pytest.approx(-2.0)

    @pytest.mark.parametrize("spec", [UPWIND, LF])
    def test_consistency(self, spec):
        assert scalar_flux(1.5, 4.0, 4.0, spec, alpha_n=2.0) == pytest.approx(6.0)
        assert scalar_flux(-0.5, 4.0, 4.0, spec, alpha_n=2.0) == pytest.approx(-2.0)

    def test_lax_friedrichs_dissipation(self):
        assert scalar_flux(1.0, 3.0, 1.0, LF, alpha_n=3.0) == pytest.approx(2.0 + 3.0)

    def test_negative_speed(self):
        with pytest.raises(FluxError):
            scalar_flux(1.0, 3.0, 1.0, LF, alpha_n=-1.0)

    def test_spec_rejects_negative_alpha(self):
        with pytest.raises(ValidationError):
            FluxSpec(type=FluxType.LF, alpha=[1.0, -1.0])


class TestOperatorProperties:
    @pytest.mark.parametrize("spec", [UPWIND, LF])
    def test_constants_are_steady(self, spec):
        u = project(lambda p: np.full(p.shape[0], 3.0), 4, 2, d=2)
        R = apply_rhs(u, VelocityField.constant([1.0, -0.5]), spec)
        np.testing.assert_allclose(R.values, 0.0, atol=1e-12)

    @pytest.mark.parametrize(
        "field,spec",
        [
            (VelocityField.constant([1.0, 2.0]), UPWIND),
            (rotation_field(2), UPWIND),
            (rotation_field(2), LF),
            (deformational_field(1.5), LF),
        ],
    )
    def test_mass_is_conserved(self, rng, field, spec):
        u = random_function(rng, 4, 2, 2)
        R = apply_rhs(u, field, spec, t=0.3)
        assert abs(R.values[0]) < 1e-12

    def test_mass_is_conserved_in_three_dimensions(self, rng):
        u = random_function(rng, 3, 1, 3)
        R = apply_rhs(u, rotation_field(3), LF)
        assert abs(R.values[0]) < 1e-12

    @pytest.mark.parametrize("spec", [UPWIND, LF])
    def test_constant_advection_is_dissipative(self, rng, spec):
        u = random_function(rng, 4, 1, 2)
        R = apply_rhs(u, VelocityField.constant([1.0, 0.5]), spec)
        assert R.inner(u) <= 1e-12

    @pytest.mark.parametrize("spec", [UPWIND, LF])
    def test_rotation_is_dissipative(self, rng, spec):
        u = random_function(rng, 4, 2, 2)
        R = apply_rhs(u, rotation_field(2), spec)
        assert R.inner(u) <= 1e-12

    def test_upwind_dissipation_equals_jump_energy(self):
        # u = x on the unit interval jumps only at the periodic face
        u = project(lambda p: p[:, 0], 3, 1, d=1)
        R = apply_rhs(u, VelocityField.constant([2.0]), UPWIND)
        assert R.inner(u) == pytest.approx(-0.5 * 2.0 * 1.0, abs=1e-12)

    @pytest.mark.parametrize("velocity,field", [
        (lambda p: np.tile([1.0, 0.5], (p.shape[0], 1)), VelocityField.constant([1.0, 0.5])),
        (rotation_velocity, rotation_field(2)),
    ])
    def test_upwind_energy_identity(self, rng, velocity, field):
        N, k = 3, 2
        operator = TransportOperator(get_space(N, k, 2), Domain.unit(2), field, UPWIND)
        for _ in range(50):
            u = random_function(rng, N, k, 2)
            expected = -jump_energy_2d(u.to_full_tensor(), N, k, velocity)
            assert operator(u, 0.0).inner(u) == pytest.approx(expected, rel=1e-10, abs=1e-10)

    def test_linearity(self, rng):
        u = random_function(rng, 3, 2, 2)
        v = random_function(rng, 3, 2, 2)
        operator = TransportOperator(u.space, u.domain, rotation_field(2), LF)
        np.testing.assert_allclose(
            operator(2.0 * u - v, 0.0).values,
            2.0 * operator(u, 0.0).values - operator(v, 0.0).values,
            atol=1e-11,
        )

    def test_field_and_space_dimensions_must_agree(self):
        with pytest.raises(FluxError):
            TransportOperator(get_space(3, 1, 2), Domain.unit(2), rotation_field(3))

    def test_upwind_rejects_multi_term_components(self, rng):
        u = random_function(rng, 2, 1, 3)
        with pytest.raises(FluxError):
            apply_rhs(u, rotation_field(3), UPWIND)

    def test_upwind_rejects_fields_varying_along_the_flux_direction(self, rng):
        u = random_function(rng, 2, 1, 2)
        with pytest.raises(FluxError):
            apply_rhs(u, deformational_field(1.5), UPWIND)

    def test_fixed_speeds_need_one_entry_per_dimension(self, rng):
        u = random_function(rng, 2, 1, 2)
        with pytest.raises(FluxError):
            apply_rhs(u, rotation_field(2), FluxSpec(type=FluxType.LF, alpha=[1.0]))

    def test_time_factor_scales_the_operator(self, rng):
        u = random_function(rng, 3, 1, 2)
        field = deformational_field(1.5)
        operator = TransportOperator(u.space, u.domain, field, LF)
        np.testing.assert_allclose(operator(u, 0.75).values, 0.0, atol=1e-12)
        scale = math.cos(math.pi * 0.5 / 1.5)
        np.testing.assert_allclose(operator(u, 0.5).values, scale * operator(u, 0.0).values, atol=1e-11)

    def test_box_domain_scales_with_width(self, rng):
        space = get_space(3, 1, 2)
        values = rng.standard_normal(space.size)
        unit = SparseGridFunction(space, Domain.unit(2), values)
        wide = SparseGridFunction(space, Domain((0.0, 0.0), (2.0, 4.0)), values)
        field_unit = VelocityField.constant([1.0, 1.0])
        field_wide = VelocityField.constant([2.0, 4.0])
        np.testing.assert_allclose(apply_rhs(wide, field_wide).values, apply_rhs(unit, field_unit).values, atol=1e-12)


class TestFullGridEquivalence:
    @pytest.mark.parametrize("N", [1, 2, 3, 4])
    @pytest.mark.parametrize("k", [1, 2])
    @pytest.mark.parametrize("flux", ["upwind", "lf"])
    def test_constant_field(self, rng, N, k, flux):
        u = random_function(rng, N, k, 2)
        n = hierarchical_size(N, k)
        G = full_grid_operator_2d(N, k, lambda p: np.tile([1.0, -0.5], (p.shape[0], 1)), flux=flux, alpha=(1.0, 0.5))
        expected = u.space.restrict((G @ u.to_full_tensor().ravel()).reshape(n, n))
        R = apply_rhs(u, VelocityField.constant([1.0, -0.5]), UPWIND if flux == "upwind" else LF)
        np.testing.assert_allclose(R.values, expected, atol=1e-10)

    @pytest.mark.parametrize("N", [3, 4])
    @pytest.mark.parametrize("k", [1, 2])
    @pytest.mark.parametrize("flux", ["upwind", "lf"])
    def test_rotation_field(self, rng, N, k, flux):
        u = random_function(rng, N, k, 2)
        n = hierarchical_size(N, k)
        G = full_grid_operator_2d(N, k, rotation_velocity, flux=flux, alpha=(0.5, 0.5))
        expected = u.space.restrict((G @ u.to_full_tensor().ravel()).reshape(n, n))
        spec = UPWIND if flux == "upwind" else FluxSpec(type=FluxType.LF, alpha=[0.5, 0.5])
        R = apply_rhs(u, rotation_field(2), spec)
        np.testing.assert_allclose(R.values, expected, atol=1e-10)

    def test_projected_rotation_field_matches_analytic(self, rng):
        u = random_function(rng, 3, 2, 2)
        field = rotation_field(2)
        projected = project_field(field, 3, 2, u.domain)
        np.testing.assert_allclose(apply_rhs(u, projected, LF).values, apply_rhs(u, field, LF).values, atol=1e-11)


@pytest.mark.parametrize("k", [1, 2, 3])
def test_one_dimensional_scheme_matches_local_rkdg(k):
    N, steps, dt = 4, 10, 0.005
    u = project(lambda p: np.sin(2 * np.pi * p[:, 0]) + 0.5 * (p[:, 0] > 0.3), N, k, d=1)
    local = LocalRkdg1d(N, k)
    w = local.from_hierarchical(u.values)

    R = lambda v: apply_rhs(v, VelocityField.constant([1.0]), UPWIND)
    for _ in range(steps):
        u1 = u + dt * R(u)
        u2 = 0.75 * u + 0.25 * (u1 + dt * R(u1))
        u = u / 3.0 + (2.0 / 3.0) * (u2 + dt * R(u2))
        w = local.step(w, dt)

    np.testing.assert_allclose(local.from_hierarchical(u.values), w, atol=1e-12)


class TestFieldHelpers:
    def test_constant_speeds(self):
        alpha = compute_alpha(VelocityField.constant([1.0, 1.0]), 0.0, 3, 1, Domain.unit(2))
        np.testing.assert_allclose(alpha, [1.0, 1.0])

    def test_rotation_speeds(self):
        alpha = compute_alpha(rotation_field(2), 0.0, 3, 1, Domain.unit(2))
        np.testing.assert_allclose(alpha, [0.5, 0.5])

    def test_deformational_speeds_vanish_at_half_period(self):
        alpha = compute_alpha(deformational_field(1.5), 0.75, 4, 2, Domain.unit(2))
        np.testing.assert_allclose(alpha, [0.0, 0.0], atol=1e-15)
        assert compute_alpha(deformational_field(1.5), 0.0, 4, 2, Domain.unit(2))[0] == pytest.approx(1.0, abs=1e-3)

    def test_projected_speeds(self):
        field = project_field(rotation_field(2), 4, 1, Domain.unit(2))
        np.testing.assert_allclose(compute_alpha(field, 0.0, 4, 1, Domain.unit(2)), [0.5, 0.5], atol=1e-12)

    def test_constant_field_is_unchanged_by_projection(self):
        field = VelocityField.constant([1.0, -2.0])
        projected = project_field(field, 3, 1, Domain.unit(2))
        assert projected.kind == FieldKind.CONSTANT
        points = np.random.default_rng(3).uniform(0.0, 1.0, (10, 2))
        np.testing.assert_allclose(projected.evaluate(points), field.evaluate(points))

    def test_linear_factors_are_projected_exactly(self):
        field = project_field(rotation_field(2), 3, 1, Domain.unit(2))
        assert field.kind == FieldKind.PROJECTED
        points = np.random.default_rng(4).uniform(0.0, 1.0, (25, 2))
        np.testing.assert_allclose(field.evaluate(points), rotation_velocity(points), atol=1e-13)

    def test_smooth_factor_projection_error(self):
        N, k = 6, 2
        factor = AnalyticFactor(lambda x: np.sin(np.pi * x) ** 2)
        projected = ProjectedFactor(project_1d(factor.func, N, k, order=2 * k + 2), N, k, Domain.unit(1))
        x = np.linspace(0.0, 1.0, 1001)
        assert np.max(np.abs(projected(x) - factor(x))) < 10 * 2.0 ** (-N * (k + 1))

    def test_projected_factor_on_wrong_resolution(self, rng):
        u = random_function(rng, 3, 1, 2)
        coarse = ProjectedFactor(project_1d(CENTERED.func, 2, 1), 2, 1, Domain.unit(1))
        field = VelocityField([[SeparableTerm(1.0, [None, coarse])], []])
        with pytest.raises(FluxError):
            apply_rhs(u, field, LF)

    def test_zero_boundary_loses_outflow(self):
        u = project(lambda p: np.ones(p.shape[0]), 3, 1, d=1)
        R = apply_rhs(u, VelocityField.constant([1.0]), UPWIND, BoundarySpec.zero(1))
        # d/dt int u = -(outflow at 1) + (zero inflow at 0)
        assert R.values[0] == pytest.approx(-1.0, abs=1e-12)
