"""Jets against hand-computed derivatives and central differences."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from cotangent_kahler import tensor_calculus as tc
from cotangent_kahler.exceptions import DomainViolation, FrameMismatchError
from cotangent_kahler.tensor_calculus import FrameTensor, Jet


def conformal(c):
    return lambda x: (1 + c * (x[0] * x[0] + x[1] * x[1]) / 4) ** -2


class TestJetEval:
    def test_square(self):
        j = tc.jet_eval(lambda x: x[0] ** 2, [3.0], 1)
        assert j.value == 9
        assert_allclose(j.derivs[0], [6.0])

    def test_geometric_series(self):
        j = tc.jet_eval(lambda x: 1 / (1 + x[0]), [0.0], 2)
        assert j.value == pytest.approx(1)
        assert_allclose(j.derivs[0], [-1.0])
        assert_allclose(j.derivs[1], [[2.0]])

    def test_third_order_of_reciprocal(self):
        j = tc.jet_eval(lambda x: 1 / (1 + x[0]), [1.0], 3)
        # d^3/dx^3 (1+x)^-1 = -6 (1+x)^-4
        assert j.derivs[2][0, 0, 0] == pytest.approx(-6 / 16)

    def test_conformal_factor_at_center(self):
        j = tc.jet_eval(conformal(-1.0), [0.0, 0.0], 2)
        assert j.value == pytest.approx(1)
        assert_allclose(j.derivs[0], 0, atol=0)

    def test_mixed_partials_exactly_symmetric(self):
        f = lambda x: x[0] ** 3 * x[1] / (1 + x[2] * x[0]) + x[1] ** 2 * x[2]
        j = tc.jet_eval(f, [0.3, -0.7, 1.1], 3)
        h, t = j.derivs[1], j.derivs[2]
        assert np.array_equal(h, h.T)
        for perm in [(1, 0, 2), (2, 1, 0), (0, 2, 1), (1, 2, 0)]:
            assert np.array_equal(t, t.transpose(perm))

    def test_matches_known_hessian(self):
        # f = x y^2 + x^3 ; Hessian = [[6x, 2y], [2y, 2x]]
        j = tc.jet_eval(lambda z: z[0] * z[1] ** 2 + z[0] ** 3, [2.0, 5.0], 2)
        assert_allclose(j.derivs[1], [[12.0, 10.0], [10.0, 4.0]])

    def test_sqrt_and_power(self):
        j = tc.jet_eval(lambda x: (x[0] ** 2 + 1).sqrt(), [np.sqrt(3)], 2)
        assert j.value == pytest.approx(2)
        assert j.derivs[0][0] == pytest.approx(np.sqrt(3) / 2)
        assert j.derivs[1][0, 0] == pytest.approx(1 / 8)

    def test_zero_reciprocal_raises(self):
        with pytest.raises(DomainViolation):
            tc.jet_eval(lambda x: 1 / x[0], [0.0], 1)

    def test_fractional_power_of_negative(self):
        with pytest.raises(DomainViolation):
            tc.jet_eval(lambda x: x[0] ** 0.5, [-1.0], 1)


class TestFdGradient:
    def test_square(self):
        g = tc.fd_gradient(lambda x: x[0] ** 2, [3.0], 1e-4)
        assert g[0] == pytest.approx(6, abs=1e-7)

    def test_constant_is_exactly_zero(self):
        g = tc.fd_gradient(lambda x: 4.2, [1.0, 2.0], 1e-3)
        assert np.array_equal(g, np.zeros(2))

    def test_conformal_factor_against_jet(self):
        f = conformal(-1.0)
        fd = tc.fd_gradient(f, [0.3, 0.0], 1e-5)
        jet = tc.jet_eval(f, [0.3, 0.0], 1).derivs[0]
        assert_allclose(fd, jet, atol=1e-8)


# random rational fields r(x) = P(x) / (1 + Q(x)^2), P and Q of degree <= 2
@st.composite
def rational_fields(draw, bound=1.0):
    coef = st.floats(-bound, bound, allow_nan=False)
    n = draw(st.integers(1, 3))
    a = np.array(draw(st.lists(coef, min_size=n * n + n + 1, max_size=n * n + n + 1)))
    b = np.array(draw(st.lists(coef, min_size=n + 1, max_size=n + 1)))
    x0 = np.array(draw(st.lists(st.floats(-1, 1, allow_nan=False), min_size=n, max_size=n)))
    M, lin, c0 = a[: n * n].reshape(n, n), a[n * n: n * n + n], a[-1]

    def f(x):
        quad = sum(M[i, j] * x[i] * x[j] for i in range(n) for j in range(n))
        num = quad + sum(lin[i] * x[i] for i in range(n)) + c0
        den = sum(b[i] * x[i] for i in range(n)) + b[-1]
        return num / (1 + den * den)

    return f, x0


@settings(max_examples=1000, deadline=None)
@given(rational_fields())
def test_first_partials_match_central_differences(case):
    f, x0 = case
    step = 1e-4
    jet = tc.jet_eval(f, x0, 1).derivs[0]
    fd = tc.fd_gradient(f, x0, step)
    # truncation error is |f'''| h^2 / 6, rounding stays near 1e-11 at this step
    assert np.max(np.abs(jet - fd)) < 10 * step ** 2


@settings(max_examples=300, deadline=None)
@given(rational_fields(bound=2.0))
def test_first_partials_match_extrapolated_differences(case):
    # steeper fields: cancel the h^2 term by Richardson extrapolation
    f, x0 = case
    h = 1e-3
    fd = (4 * tc.fd_gradient(f, x0, h / 2) - tc.fd_gradient(f, x0, h)) / 3
    assert_allclose(tc.jet_eval(f, x0, 1).derivs[0], fd, atol=1e-7)


@settings(max_examples=200, deadline=None)
@given(rational_fields())
def test_second_partials_match_differenced_gradient(case):
    f, x0 = case
    step = 1e-4
    hess = tc.jet_eval(f, x0, 2).derivs[1]
    fd = tc.fd_gradient(lambda x: tc.jet_eval(f, x, 1).derivs[0], x0, step)
    assert_allclose(hess, fd, atol=1e-5)


class TestJetAlgebra:
    def test_inverse_derivatives_against_differences(self):
        def m(z):
            off = z[0] * z[1]
            return tc.stack([tc.stack([2 + z[0] ** 2, off]), tc.stack([off, 3 + z[1]])])

        x0 = np.array([0.4, -0.3])
        a, b = x0
        expected = np.linalg.inv([[2 + a * a, a * b], [a * b, 3 + b]])
        for spd in (False, True):
            j = tc.jet_eval(lambda z: tc.inv(m(z), spd=spd), x0, 3)
            assert_allclose(j.value, expected)
            # difference the order k-1 tensor to get order k
            for k in range(1, 4):
                def lower(x, k=k):
                    jk = tc.jet_eval(lambda z: tc.inv(m(z)), x, max(k - 1, 1))
                    return jk.value if k == 1 else jk.derivs[k - 2]

                fd = tc.fd_gradient(lower, x0, 1e-5)
                assert_allclose(np.moveaxis(fd, -1, 0), j.derivs[k - 1], atol=1e-6)

    def test_einsum_matches_numpy_on_values(self):
        rng = np.random.default_rng(1)
        a = Jet.variables(rng.standard_normal(4), 2).reshape(2, 2)
        b = rng.standard_normal((2, 3))
        out = tc.einsum("ij,jk->ik", a, b)
        assert_allclose(out.value, a.value @ b)
        # d/dz_m of (A B)_ik where A_ij = z_{2i+j}
        assert_allclose(out.derivs[0][1], np.array([[b[1, 0], b[1, 1], b[1, 2]], [0, 0, 0]]))

    def test_spd_inverse_rejects_indefinite(self):
        with pytest.raises(DomainViolation):
            tc.inv(Jet.constant(np.diag([1.0, -1.0]), 1, 1), spd=True)


class TestFrameTensor:
    def test_invert_diag(self):
        out = tc.invert_spd(FrameTensor((0, 2), np.diag([2.0, 1.0])))
        assert out.rank == (2, 0)
        assert_allclose(out.components, np.diag([0.5, 1.0]))

    def test_invert_identity(self):
        out = tc.invert_spd(FrameTensor((0, 2), np.eye(3)))
        assert_allclose(out.components, np.eye(3))

    def test_invert_rejects_wrong_rank(self):
        with pytest.raises(ValueError):
            tc.invert_spd(FrameTensor((1, 1), np.eye(2)))

    def test_invert_rejects_indefinite(self):
        with pytest.raises(DomainViolation):
            tc.invert_spd(FrameTensor((0, 2), np.diag([1.0, -2.0])))

    def test_mixing_frames_raises(self):
        a = FrameTensor((0, 2), np.eye(2), "coordinate")
        b = FrameTensor((0, 2), np.eye(2), "adapted")
        with pytest.raises(FrameMismatchError):
            a + b

    def test_shape_validation(self):
        with pytest.raises(ValueError):
            FrameTensor((1, 1), np.zeros((2, 3)))

    def test_positive_definite(self):
        assert tc.check_positive_definite(np.eye(3))
        assert not tc.check_positive_definite(np.diag([1.0, -1.0]))
        assert not tc.check_positive_definite(np.zeros((2, 2)))

    @pytest.mark.parametrize("frac,expected", [(0.6, True), (1.1, False)])
    def test_positive_definite_across_tube(self, frac, expected):
        # horizontal block A g + v p p at g = delta, v = -c/A, 2t = |p|^2
        A, c = 1.0, 1.0
        p = np.array([np.sqrt(2 * frac * A * A / (2 * c)), 0.0])
        G = A * np.eye(2) - (c / A) * np.outer(p, p)
        assert tc.check_positive_definite(G) is expected
