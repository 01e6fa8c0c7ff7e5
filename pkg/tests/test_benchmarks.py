"""Tests for the benchmark catalogue."""
import math

import numpy as np
import pytest

from sparse_dg.errors import ConfigError
from sparse_dg.models.run_config import FluxType, Problem, RunConfig
from sparse_dg.services.benchmarks import (
    ROTATION_AXES,
    ROTATION_BELLS,
    deformational_field,
    kinetic_benchmark,
    rotate,
    rotation_field,
    transport_benchmark,
)
from sparse_dg.services.projection import l2_error


def sample(rng, d, n=200):
    return rng.uniform(0.0, 1.0, size=(n, d))


class TestFields:
    def test_rotation_in_the_plane(self):
        a = rotation_field(2).evaluate(np.array([[0.75, 0.5], [0.5, 0.25]]))
        np.testing.assert_allclose(a, [[0.0, 0.25], [0.25, 0.0]], atol=1e-15)

    def test_rotation_about_the_tilted_axis(self, rng):
        points = sample(rng, 3)
        expected = np.cross(ROTATION_AXES[3], points - 0.5)
        np.testing.assert_allclose(rotation_field(3).evaluate(points), expected, atol=1e-14)

    def test_rotation_needs_two_or_three_dimensions(self):
        with pytest.raises(ConfigError):
            rotation_field(4)

    def test_deformational_field_reverses(self, rng):
        field = deformational_field(1.5)
        points = sample(rng, 2)
        np.testing.assert_allclose(field.evaluate(points, 0.75), 0.0, atol=1e-15)
        np.testing.assert_allclose(field.evaluate(points, 1.5), -field.evaluate(points, 0.0), atol=1e-14)

    def test_deformational_field_is_divergence_free(self, rng):
        field = deformational_field(1.5)
        points = sample(rng, 2, 20)
        eps = 1e-6
        divergence = np.zeros(points.shape[0])
        for m in range(2):
            shift = np.zeros(2)
            shift[m] = eps
            divergence += (field.evaluate(points + shift)[:, m] - field.evaluate(points - shift)[:, m]) / (2 * eps)
        np.testing.assert_allclose(divergence, 0.0, atol=1e-7)


class TestRotate:
    @pytest.mark.parametrize("d", [2, 3])
    def test_full_turn_is_the_identity(self, d):
        point = np.array(ROTATION_BELLS[d]["center"])
        np.testing.assert_allclose(rotate(point, ROTATION_AXES[d], 2 * math.pi), point, atol=1e-14)

    def test_quarter_turn_in_the_plane(self):
        rotated = rotate(np.array([0.75, 0.5]), ROTATION_AXES[2], 0.5 * math.pi)
        np.testing.assert_allclose(rotated, [0.5, 0.75], atol=1e-15)

    def test_points_on_the_axis_are_fixed(self):
        point = 0.5 + 0.2 * ROTATION_AXES[3]
        np.testing.assert_allclose(rotate(point, ROTATION_AXES[3], 1.234), point, atol=1e-15)


class TestTransportBenchmark:
    def test_advection_defaults(self, rng):
        bench = transport_benchmark(RunConfig(problem=Problem.ADVECT_CONST))
        assert bench.d == 2
        assert bench.flux.type == FluxType.UPWIND
        assert bench.speeds(4, 1) == pytest.approx([1.0, 1.0])
        points = sample(rng, 2)
        np.testing.assert_allclose(bench.exact(1.0)(points), bench.initial(points), atol=1e-12)

    def test_advection_reference_moves_the_data(self, rng):
        bench = transport_benchmark(RunConfig(problem=Problem.ADVECT_CONST, d=1))
        points = sample(rng, 1)
        shifted = np.mod(points - 0.25, 1.0)
        np.testing.assert_allclose(bench.exact(0.25)(points), bench.initial(shifted), atol=1e-12)

    @pytest.mark.parametrize("d", [2, 3])
    def test_rotation_returns_after_a_period(self, rng, d):
        bench = transport_benchmark(RunConfig(problem=Problem.SOLID_ROTATION, d=d))
        assert bench.flux.type == FluxType.LF
        points = sample(rng, d)
        np.testing.assert_allclose(bench.exact(2 * math.pi)(points), bench.initial(points), atol=1e-12)

    def test_rotation_reference_at_a_quarter_turn(self):
        bench = transport_benchmark(RunConfig(problem=Problem.SOLID_ROTATION))
        radius = ROTATION_BELLS[2]["radius"]
        assert bench.exact(0.5 * math.pi)(np.array([[0.5, 0.75]]))[0] == pytest.approx(radius)

    def test_deformational_reference_only_at_the_period(self):
        bench = transport_benchmark(RunConfig(problem=Problem.DEFORMATIONAL))
        assert bench.exact(1.5) is bench.initial
        assert bench.exact(0.7) is None
        assert bench.speeds(4, 2) == pytest.approx([1.0, 1.0], rel=1e-2)

    def test_initial_projection(self):
        bench = transport_benchmark(RunConfig(problem=Problem.ADVECT_CONST))
        u0 = bench.project_initial(5, 2)
        assert l2_error(u0, bench.initial) < 5e-3

    def test_kinetic_problem_is_rejected(self):
        with pytest.raises(ConfigError):
            transport_benchmark(RunConfig(problem=Problem.VLASOV_LANDAU))


class TestKineticBenchmark:
    def test_landau(self):
        bench = kinetic_benchmark(RunConfig(problem=Problem.VLASOV_LANDAU))
        assert bench.is_vlasov
        assert bench.layout.d == 2
        assert bench.layout.x_upper == pytest.approx(4 * math.pi)
        assert bench.k_wave == 0.5
        assert bench.flux.type == FluxType.UPWIND

    def test_two_stream_amplitude(self):
        bench = kinetic_benchmark(RunConfig(problem=Problem.VLASOV_TWOSTREAM, amplitude=0.0))
        f0 = bench.project_initial(3, 1)
        assert f0.d == 2

    def test_relaxation(self):
        bench = kinetic_benchmark(RunConfig(problem=Problem.RELAX_2D2V, tau=0.5))
        assert not bench.is_vlasov
        assert bench.layout.d == 4
        assert bench.relaxation.tau == 0.5
        assert bench.relaxation.theta == 1.0

    def test_transport_problem_is_rejected(self):
        with pytest.raises(ConfigError):
            kinetic_benchmark(RunConfig(problem=Problem.SOLID_ROTATION))
