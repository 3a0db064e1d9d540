import numpy as np
import pytest
from hypothesis import given, strategies as st

from nordvlasov.errors import InputError
from nordvlasov.kernels_3d import (
    KernelInput, kernel_input, momentum_inequalities, phi_t_kernels, phi_tt_kernel, phi_tt_kernel_fd,
    phi_x_kernels, property_sweep, random_inputs, sphere_average, sphere_rule, vm_kernels,
)

E1, E2, E3 = np.eye(3)
unit = st.tuples(st.floats(-1, 1), st.floats(-1, 1), st.floats(-1, 1)).filter(
    lambda v: np.linalg.norm(v) > 0.1).map(lambda v: np.array(v) / np.linalg.norm(v))
momentum = st.tuples(*[st.floats(-1e3, 1e3)] * 3).map(np.array)


def inp(omega, p):
    return kernel_input(np.asarray(omega, float), np.asarray(p, float))


class TestInput:
    def test_non_unit_rejected(self):
        with pytest.raises(InputError):
            kernel_input([1.0, 1.0, 0.0], [0.0, 0.0, 0.0])

    def test_shape_rejected(self):
        with pytest.raises(InputError):
            kernel_input([1.0, 0.0], [0.0, 0.0])


class TestVM:
    def test_rest_momentum(self):
        k = vm_kernels(inp(E2, np.zeros(3)))
        np.testing.assert_array_equal(k.aE, E2)
        np.testing.assert_array_equal(k.aE_tilde, E2)
        np.testing.assert_array_equal(k.aB, 0.0)
        np.testing.assert_array_equal(k.aB_tilde, 0.0)

    def test_parallel_has_no_magnetic_part(self):
        k = vm_kernels(inp(E3, 2.5 * E3))
        np.testing.assert_array_equal(k.aB, 0.0)
        np.testing.assert_array_equal(k.aB_tilde, 0.0)

    def test_perpendicular_example(self):
        k = vm_kernels(inp(E1, np.sqrt(3) * E2))
        np.testing.assert_allclose(k.aE, (E1 + np.sqrt(3) / 2 * E2) / 4, rtol=1e-15)


class TestPhiT:
    def test_rest_momentum(self):
        k = phi_t_kernels(inp(E1, np.zeros(3)))
        assert k.a == 0.0 and k.b == 1.0
        np.testing.assert_array_equal(k.c, E1)

    def test_parallel_example(self):
        k = phi_t_kernels(inp(E1, E1))
        assert k.a == pytest.approx(-1 / (2 + np.sqrt(2)), rel=1e-15)

    @given(unit, momentum)
    def test_identity_and_bounds(self, omega, p):
        k = phi_t_kernels(inp(omega, p))
        p2 = p @ p
        assert abs(k.a) <= 4 * (1 + p2)
        assert abs(k.b) <= 4 * np.sqrt(1 + p2)
        assert np.linalg.norm(k.c) <= 4


class TestPhiX:
    def test_rest_momentum(self):
        k = phi_x_kernels(inp(E3, np.zeros(3)))
        np.testing.assert_array_equal(k.a, E3)
        np.testing.assert_array_equal(k.b, E3)
        np.testing.assert_array_equal(k.c, np.outer(E3, E3))

    def test_cross_product_componentwise(self):
        omega, p = E1, np.array([0.0, 1.2, -0.7])
        g = np.sqrt(1 + p @ p)
        ph = p / g
        vm = vm_kernels(inp(omega, p))
        aB = vm.aB
        cross = np.array([ph[1] * aB[2] - ph[2] * aB[1], ph[2] * aB[0] - ph[0] * aB[2],
                          ph[0] * aB[1] - ph[1] * aB[0]])
        np.testing.assert_allclose(phi_x_kernels(inp(omega, p)).a, g * (vm.aE - cross), rtol=1e-14)

    def test_closed_form(self):
        omega, p = np.array([0.6, 0.0, 0.8]), np.array([0.3, -1.0, 2.0])
        g = np.sqrt(1 + p @ p)
        s = omega @ p / g
        expect = (omega / (1 + p @ p) + (1 + s) * p / g) / (g * (1 + s) ** 2)
        np.testing.assert_allclose(phi_x_kernels(inp(omega, p)).a, expect, rtol=1e-14)


class TestPhiTT:
    def test_zero_momentum(self):
        assert phi_tt_kernel(inp(E1, np.zeros(3))) == 0.0

    def test_matches_finite_differences_at_rate_two(self):
        rng = np.random.default_rng(7)
        k = random_inputs(rng, 50, p_max=5.0, antipodal_fraction=0.0)
        exact = phi_tt_kernel(k)
        errs = []
        for h in (1e-2, 5e-3, 2.5e-3):
            errs.append(np.max(np.abs(phi_tt_kernel_fd(k.omega, k.p, h) - exact) / (1 + np.abs(exact))))
        rates = np.log2(np.array(errs[:-1]) / errs[1:])
        assert np.all(rates > 1.8)

    @pytest.mark.parametrize("p", [0.5 * E1, 2.0 * E3, np.ones(3), np.array([1.0, 0.5, -0.25])])
    def test_zero_sphere_average(self, p):
        val, err = sphere_average(lambda om, pp: phi_tt_kernel(KernelInput(om, pp)), p, 64)
        assert abs(val) <= 1e-8


class TestInequalities:
    def test_rest(self):
        r = momentum_inequalities(inp(E1, np.zeros(3)))
        assert (r.lhs1, r.rhs1, r.lhs2, r.rhs2, r.both_hold) == (1.0, 0.5, 1.0, 2.0, True)

    def test_perpendicular_unit(self):
        r = momentum_inequalities(inp(E1, E2))
        assert r.lhs1 == 1.0 and r.rhs1 == pytest.approx(0.5)

    def test_antipodal_large_momentum(self):
        p = 1e3 * E3
        r = momentum_inequalities(inp(-E3, p))
        assert r.both_hold and r.lhs1 < 1e-6

    @given(unit, momentum)
    def test_property(self, omega, p):
        assert momentum_inequalities(inp(omega, p)).both_hold


class TestSphere:
    def test_constant(self):
        val, _ = sphere_average(lambda om, p: np.ones(len(om)), np.zeros(3), 16)
        assert abs(val - 4 * np.pi) <= 1e-12

    def test_odd(self):
        val, _ = sphere_average(lambda om, p: om[:, 2], np.zeros(3), 16)
        assert abs(val) <= 1e-12

    def test_quadratic_exact(self):
        val, err = sphere_average(lambda om, p: om[:, 0] ** 2, np.zeros(3), 8)
        assert val == pytest.approx(4 * np.pi / 3, rel=1e-14) and err < 1e-13

    def test_rule_is_on_sphere(self):
        om, w = sphere_rule(10)
        np.testing.assert_allclose(np.linalg.norm(om, axis=1), 1.0, rtol=1e-15)
        assert w.sum() == pytest.approx(4 * np.pi, rel=1e-14)


class TestSweep:
    def test_small_sweep_deterministic(self):
        a = property_sweep(seed=3, samples=20_000, chunk=7_000)
        b = property_sweep(seed=3, samples=20_000, chunk=7_000)
        assert a == b
        assert a["ineq1_violations"] == a["ineq2_violations"] == 0
        assert max(a[k] for k in a if k.startswith("ident")) <= 1e-13
