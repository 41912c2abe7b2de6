import numpy as np
import pytest
from numpy.testing import assert_allclose

from cotangent_kahler import space_form as sf
from cotangent_kahler import tensor_calculus as tc
from cotangent_kahler.exceptions import DomainViolation
from cotangent_kahler.space_form import SpaceFormModel


def fd_christoffel(model, x, step=1e-5):
    """Levi-Civita symbols from differenced metric values only."""
    n = model.n
    dg = tc.fd_gradient(model.metric_field, x, step)  # [i, j, l] = d_l g_ij
    ginv = np.linalg.inv(model.metric_field(np.asarray(x)))
    lower = 0.5 * (np.einsum("jli->lij", dg) + np.einsum("ilj->lij", dg) - np.einsum("ijl->lij", dg))
    return np.einsum("kl,lij->kij", ginv, lower).reshape(n, n, n)


def conformal_christoffel(c, x):
    # g = e^{2 phi} delta with phi = -log(1 + c|x|^2/4)
    x = np.asarray(x, dtype=float)
    n = len(x)
    dphi = -(c * x / 2) / (1 + c * x @ x / 4)
    d = np.eye(n)
    return np.einsum("ki,j->kij", d, dphi) + np.einsum("kj,i->kij", d, dphi) - np.einsum("ij,k->kij", d, dphi)


class TestChartMetric:
    def test_flat_is_identity(self):
        g = sf.chart_metric(SpaceFormModel(3, 0.0), [0.7, -2.0, 5.0])
        assert_allclose(g.components, np.eye(3))
        assert g.rank == (0, 2)

    @pytest.mark.parametrize("c", [-1.0, 0.5, 1.0])
    def test_identity_at_origin(self, c):
        assert_allclose(sf.chart_metric(SpaceFormModel(2, c), [0, 0]).components, np.eye(2))

    def test_hyperbolic_value(self):
        g = sf.chart_metric(SpaceFormModel(2, -1.0), [1.0, 0.0])
        assert_allclose(g.components, np.diag([16 / 9, 16 / 9]))

    def test_outside_ball_rejected(self):
        with pytest.raises(DomainViolation):
            sf.chart_metric(SpaceFormModel(2, -1.0), [2.0, 0.0])

    def test_sphere_chart_is_global(self):
        m = SpaceFormModel(2, 1.0)
        assert m.contains(np.array([50.0, -30.0]))

    def test_dimension_limits(self):
        with pytest.raises(ValueError):
            SpaceFormModel(5, 1.0)


class TestChristoffel:
    def test_flat_zero(self):
        assert np.all(sf.christoffel(SpaceFormModel(2, 0.0), [1.0, 2.0]).components == 0)

    @pytest.mark.parametrize("c", [-1.0, 1.0])
    def test_zero_at_origin(self, c):
        assert_allclose(sf.christoffel(SpaceFormModel(3, c), np.zeros(3)).components, 0, atol=1e-15)

    def test_against_differenced_metric(self):
        m = SpaceFormModel(2, -1.0)
        x = [0.3, 0.0]
        assert_allclose(sf.christoffel(m, x).components, fd_christoffel(m, x), atol=1e-6)

    @pytest.mark.parametrize("n,c", [(2, -1.0), (3, 1.0), (4, -0.3), (3, 2.5)])
    def test_against_conformal_formula(self, n, c):
        rng = np.random.default_rng(n)
        m = SpaceFormModel(n, c)
        for _ in range(10):
            x = rng.uniform(-0.5, 0.5, n)
            assert_allclose(sf.christoffel(m, x).components, conformal_christoffel(c, x), atol=1e-13)

    def test_symmetric_lower_indices(self):
        G = sf.christoffel(SpaceFormModel(3, 1.0), [0.2, -0.4, 0.9]).components
        assert_allclose(G, G.transpose(0, 2, 1), atol=0)


class TestRiemann:
    def test_flat_zero(self):
        assert np.all(sf.riemann(SpaceFormModel(3, 0.0), [0.1, 0.2, 0.3]).components == 0)

    def test_hyperbolic_component_at_origin(self):
        R = sf.riemann(SpaceFormModel(2, -1.0), [0, 0]).components
        # R^1_212 in 1-based labels
        assert R[0, 1, 0, 1] == pytest.approx(-1)

    def test_sphere_random_points(self):
        m = SpaceFormModel(3, 1.0)
        rng = np.random.default_rng(7)
        for _ in range(10):
            x = rng.uniform(-2, 2, 3)
            R = sf.riemann(m, x).components
            assert np.max(np.abs(R - sf.space_form_riemann(1.0, m.metric_field(x)))) < 1e-8

    @pytest.mark.parametrize("n,c", [(2, -1.0), (2, 1.0), (3, -1.0), (4, 1.0)])
    def test_residuals(self, n, c):
        m = SpaceFormModel(n, c)
        x = np.linspace(-0.4, 0.5, n)
        assert sf.space_form_residual(m, x) < 1e-12
        assert sf.bianchi_residual(m, x) < 1e-12
        assert sf.metric_compatibility_residual(m, x) < 1e-12

    def test_wrong_curvature_sign_detected(self):
        # a c=+1 tensor does not satisfy the c=-1 identity
        m = SpaceFormModel(2, 1.0)
        x = np.array([0.3, 0.2])
        R = sf.riemann(m, x).components
        assert np.max(np.abs(R - sf.space_form_riemann(-1.0, m.metric_field(x)))) > 0.1

    def test_sectional_curvature(self):
        m = SpaceFormModel(3, -1.0)
        x = np.array([0.2, 0.1, -0.3])
        R = sf.riemann(m, x).components
        g = m.metric_field(x)
        Rlow = np.einsum("hl,lkij->hkij", g, R)
        u, w = np.array([1.0, 0.5, 0.0]), np.array([0.0, 1.0, 2.0])
        # K(u, w) = R(u, w, w, u) / (|u|^2|w|^2 - <u,w>^2) with R^h_kij u^i w^j w^k u_h
        num = np.einsum("hkij,h,k,i,j->", Rlow, u, w, u, w)
        den = (u @ g @ u) * (w @ g @ w) - (u @ g @ w) ** 2
        assert num / den == pytest.approx(-1.0, abs=1e-12)
