import dataclasses

import numpy as np
import pytest
from numpy.testing import assert_allclose

from cotangent_kahler import adapted_frame as af
from cotangent_kahler import space_form as sf
from cotangent_kahler import tensor_calculus as tc
from cotangent_kahler.adapted_frame import CotangentPoint
from cotangent_kahler.exceptions import DomainViolation
from cotangent_kahler.space_form import SpaceFormModel


def random_point(rng, n, radius=0.6, pmax=1.5):
    return CotangentPoint(rng.uniform(-radius, radius, n), rng.uniform(-pmax, pmax, n))


def fd_brackets(model, pt, step=1e-5):
    """Frame components of [E_a, E_b] from differenced frame values."""
    def frame_at(z):
        n = model.n
        return af.adapted_frame(model, CotangentPoint(z[:n], z[n:])).frame

    E = frame_at(pt.coords)
    dE = tc.fd_gradient(frame_at, pt.coords, step)  # [a, mu, nu] = d_nu E_a^mu
    w = np.einsum("an,bmn->abm", E, dE) - np.einsum("bn,amn->abm", E, dE)
    return np.einsum("abm,em->abe", w, af.adapted_frame(model, pt).coframe)


class TestEnergyDensity:
    def test_zero_momentum(self):
        assert af.energy_density(SpaceFormModel(2, 1.0), CotangentPoint([0.3, 0.1], [0, 0])) == 0

    def test_flat(self):
        assert af.energy_density(SpaceFormModel(2, 0.0), CotangentPoint([5, 6], [3, 4])) == pytest.approx(12.5)

    def test_hyperbolic(self):
        t = af.energy_density(SpaceFormModel(2, -1.0), CotangentPoint([1, 0], [1, 0]))
        assert t == pytest.approx(0.5 * 9 / 16)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            af.energy_density(SpaceFormModel(3, 1.0), CotangentPoint([0, 0], [1, 1]))

    def test_outside_chart(self):
        with pytest.raises(DomainViolation):
            af.energy_density(SpaceFormModel(2, -1.0), CotangentPoint([3, 0], [1, 1]))


class TestAdaptedFrame:
    def test_zero_momentum_gives_coordinate_vectors(self):
        fr = af.adapted_frame(SpaceFormModel(2, -1.0), CotangentPoint([0.3, 0.4], [0, 0]))
        assert_allclose(fr.frame, np.eye(4), atol=0)

    def test_flat_frame_is_coordinate_frame(self):
        fr = af.adapted_frame(SpaceFormModel(3, 0.0), CotangentPoint([1, 2, 3], [4, 5, 6]))
        assert_allclose(fr.frame, np.eye(6), atol=0)

    def test_gamma0_recomposed(self):
        m = SpaceFormModel(2, -1.0)
        pt = CotangentPoint([0.3, 0], [1, 2])
        gam = sf.christoffel(m, [0.3, 0]).components
        expected = np.einsum("k,kih->ih", np.array([1.0, 2.0]), gam)
        fr = af.adapted_frame(m, pt)
        assert_allclose(fr.gamma0, expected, atol=1e-12)
        # horizontal vector i carries Gamma0_ih along d/dp_h
        assert_allclose(fr.frame[:2, 2:], expected, atol=1e-12)

    def test_coframe_inverts_frame(self):
        m = SpaceFormModel(3, 1.0)
        pt = random_point(np.random.default_rng(0), 3)
        assert af.coframe_residual(m, pt) < 1e-14


class TestDirectionalDerivative:
    m = SpaceFormModel(2, -1.0)
    pt = CotangentPoint([0.2, -0.5], [0.7, 1.3])

    def energy(self, z):
        q, p = z[:2], z[2:]
        f = self.m.conformal_factor(q)
        return 0.5 * (p[0] * p[0] + p[1] * p[1]) / f

    @pytest.mark.parametrize("i", [0, 1])
    def test_energy_constant_along_horizontal(self, i):
        assert abs(af.frame_directional_derivative(self.m, self.pt, self.energy, i)) < 1e-10

    @pytest.mark.parametrize("i", [0, 1])
    def test_energy_along_vertical(self, i):
        ginv = np.linalg.inv(self.m.metric_field(np.array(self.pt.q)))
        expected = ginv[i] @ np.array(self.pt.p)
        assert af.frame_directional_derivative(self.m, self.pt, self.energy, 2 + i) == pytest.approx(expected)

    @pytest.mark.parametrize("i", [0, 1])
    @pytest.mark.parametrize("j", [0, 1])
    def test_coordinate_along_horizontal(self, i, j):
        d = af.frame_directional_derivative(self.m, self.pt, lambda z: z[j], i)
        assert d == pytest.approx(float(i == j))

    def test_index_range(self):
        with pytest.raises(IndexError):
            af.frame_directional_derivative(self.m, self.pt, lambda z: z[0], 4)


class TestBrackets:
    def test_flat_vanishes(self):
        m = SpaceFormModel(2, 0.0)
        pt = CotangentPoint([1, 2], [3, 4])
        assert np.all(af.bracket_coefficients(m, pt, "numeric") == 0)
        assert af.bracket_residual(m, pt) == 0

    def test_horizontal_bracket_vanishes_on_zero_section(self):
        m = SpaceFormModel(3, -1.0)
        f = af.bracket_coefficients(m, CotangentPoint([0.1, 0.2, -0.3], [0, 0, 0]), "numeric")
        assert_allclose(f[:3, :3], 0, atol=1e-14)

    @pytest.mark.parametrize("c", [-1.0, 1.0])
    @pytest.mark.parametrize("n", [2, 3])
    def test_residual_random(self, c, n):
        m = SpaceFormModel(n, c)
        rng = np.random.default_rng(11)
        for _ in range(10):
            assert af.bracket_residual(m, random_point(rng, n)) < 1e-8

    def test_closed_form_against_differenced_frame(self):
        m = SpaceFormModel(2, 1.0)
        pt = CotangentPoint([0.4, -0.2], [1.1, -0.6])
        assert_allclose(af.bracket_coefficients(m, pt), fd_brackets(m, pt), atol=1e-8)

    def test_vertical_horizontal_family(self):
        m = SpaceFormModel(2, -1.0)
        pt = CotangentPoint([0.3, 0.1], [0.5, 0.2])
        f = af.bracket_coefficients(m, pt)
        gam = sf.christoffel(m, pt.q).components
        # [d/dp_i, delta_j] = Gamma^i_jk d/dp_k
        assert_allclose(f[2:, :2, 2:], gam, atol=1e-14)
        assert_allclose(f[2:, :2, :2], 0, atol=0)

    def test_horizontal_family_uses_curvature(self):
        m = SpaceFormModel(2, 1.0)
        pt = CotangentPoint([0.3, 0.1], [0.5, 0.2])
        f = af.bracket_coefficients(m, pt)
        R = sf.riemann(m, pt.q).components
        r0 = np.einsum("h,hkij->kij", np.array(pt.p), R)
        assert_allclose(f[:2, :2, 2:], np.einsum("kij->ijk", r0), atol=1e-14)

    def test_wrong_sign_frame_is_detected(self):
        # a frame built with -Gamma0 must fail the bracket identity
        m = SpaceFormModel(2, -1.0)
        pt = CotangentPoint([0.3, 0.2], [1.0, -0.5])
        fj = af.frame_jets(m, pt)
        eye, zero = np.eye(2), np.zeros((2, 2))
        bad = dataclasses.replace(
            fj,
            frame=tc.block([[eye, -fj.gamma0], [zero, eye]]),
            coframe=tc.block([[eye, zero], [fj.gamma0, eye]]),
        )
        resid = np.max(np.abs(af.numeric_structure(bad).value - bad.structure().value))
        assert resid > 1e-2

    def test_method_validation(self):
        with pytest.raises(ValueError):
            af.bracket_coefficients(SpaceFormModel(2, 0.0), CotangentPoint([0, 0], [0, 0]), "other")
