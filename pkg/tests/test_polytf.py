"""Polynomial algebra, transfer functions, realization and simulation."""

import numpy as np
import pytest

from soptdpid.polytf import (
    DegenerateLoopError,
    ImproperSystemError,
    Polynomial,
    PolytfError,
    RationalTF,
    StateSpace,
    UnstableIntegrationError,
    cluster_roots,
    feedback_unity,
    freq_response,
    poly_from_roots,
    poly_mul,
    realize,
    roots,
    simulate,
)


class TestPolynomial:
    def test_trailing_zeros_trimmed(self):
        p = Polynomial([1.0, 2.0, 0.0, 0.0])
        assert p.degree == 1
        assert np.array_equal(p.coeffs, [1.0, 2.0])

    def test_zero_polynomial(self):
        z = Polynomial([0.0, 0.0])
        assert z.is_zero
        assert Polynomial(()).is_zero

    def test_evaluation(self):
        p = Polynomial([1.0, -3.0, 2.0])  # 2s^2 - 3s + 1 = (2s-1)(s-1)
        assert p(1.0) == 0.0
        assert p(0.5) == 0.0
        assert p(0.0) == 1.0

    def test_evaluation_complex_vectorized(self):
        p = Polynomial([1.0, 0.0, 1.0])  # s^2 + 1
        vals = p(np.array([1j, -1j, 2.0]))
        assert abs(vals[0]) < 1e-15 and abs(vals[1]) < 1e-15
        assert vals[2] == 5.0

    def test_arithmetic(self):
        a = Polynomial([1.0, 1.0])
        b = Polynomial([-1.0, 1.0])
        assert poly_mul(a, b) == Polynomial([-1.0, 0.0, 1.0])
        assert a + b == Polynomial([0.0, 2.0])
        assert a - a == Polynomial(())
        assert 3.0 * a == Polynomial([3.0, 3.0])

    def test_mul_by_zero(self):
        assert poly_mul(Polynomial([1.0, 2.0]), Polynomial(())).is_zero

    def test_scaled_monic(self):
        p = Polynomial([2.0, 4.0]).scaled_monic()
        assert np.allclose(p.coeffs, [0.5, 1.0])
        with pytest.raises(PolytfError):
            Polynomial(()).scaled_monic()

    def test_immutability(self):
        p = Polynomial([1.0, 2.0])
        with pytest.raises((AttributeError, ValueError)):
            p.coeffs = np.array([3.0])
        with pytest.raises(ValueError):
            p.coeffs[0] = 9.0


class TestRoots:
    def test_known_roots_roundtrip(self):
        target = [-1.0, -2.0, -3.0 + 4.0j, -3.0 - 4.0j]
        p = poly_from_roots(target)
        got = roots(p)
        assert np.allclose(sorted(z.real for z in got), sorted(z.real for z in target))
        assert np.allclose(sorted(z.imag for z in got), sorted(z.imag for z in target))

    def test_roots_rejects_constants(self):
        with pytest.raises(PolytfError):
            roots(Polynomial([5.0]))
        with pytest.raises(PolytfError):
            roots(Polynomial(()))

    def test_cluster_roots_groups_multiplicity(self):
        rts = [-1.0, -1.0 + 1e-12, -5.0]
        clusters = cluster_roots(rts)
        counts = sorted(c for _, c in clusters)
        assert counts == [1, 2]


class TestRationalTF:
    def test_zero_denominator_rejected(self):
        with pytest.raises(PolytfError):
            RationalTF(Polynomial([1.0]), Polynomial(()))

    def test_relative_degree_and_mul(self):
        g = RationalTF(Polynomial([1.0]), Polynomial([1.0, 1.0]))
        assert g.relative_degree == 1
        gg = g * g
        assert gg.den == Polynomial([1.0, 2.0, 1.0])
        assert gg.relative_degree == 2

    def test_feedback_unity(self):
        # 1/s under unity feedback -> 1/(s+1)
        fwd = RationalTF(Polynomial([1.0]), Polynomial([0.0, 1.0]))
        cl = feedback_unity(fwd)
        assert cl.num == Polynomial([1.0])
        assert cl.den == Polynomial([1.0, 1.0])

    def test_feedback_degenerate(self):
        fwd = RationalTF(Polynomial([-1.0, -1.0]), Polynomial([1.0, 1.0]))
        with pytest.raises(DegenerateLoopError):
            feedback_unity(fwd)

    def test_freq_response_exact_delay(self):
        g = RationalTF(Polynomial([1.0]), Polynomial([1.0, 1.0]))
        w = np.array([0.5, 1.0, 2.0])
        resp = freq_response(g, 0.7, w)
        expected = 1.0 / (1j * w + 1.0) * np.exp(-1j * w * 0.7)
        assert np.allclose(resp, expected, rtol=1e-14)

    def test_freq_response_negative_delay_rejected(self):
        g = RationalTF(Polynomial([1.0]), Polynomial([1.0, 1.0]))
        with pytest.raises(PolytfError):
            freq_response(g, -1.0, [1.0])


class TestRealize:
    def test_first_order(self):
        ss = realize(RationalTF(Polynomial([1.0]), Polynomial([1.0, 1.0])))
        assert ss.order == 1
        assert ss.A[0, 0] == -1.0
        assert ss.D == 0.0

    def test_biproper_splits_feedthrough(self):
        # (s+2)/(s+1) = 1 + 1/(s+1)
        ss = realize(RationalTF(Polynomial([2.0, 1.0]), Polynomial([1.0, 1.0])))
        assert ss.D == 1.0
        assert np.allclose(ss.C, [[1.0]])

    def test_improper_rejected(self):
        with pytest.raises(ImproperSystemError):
            realize(RationalTF(Polynomial([0.0, 0.0, 1.0]), Polynomial([1.0, 1.0])))

    def test_transfer_matches_frequency_response(self):
        g = RationalTF(Polynomial([1.0, 2.0]), Polynomial([2.0, 3.0, 1.0]))
        ss = realize(g)
        for s in (1j, 2j, 1.0 + 1j):
            h = ss.C @ np.linalg.solve(s * np.eye(ss.order) - ss.A, ss.B) + ss.D
            assert abs(h[0, 0] - g(s)) < 1e-12


class TestSimulate:
    def test_first_order_step(self):
        ss = realize(RationalTF(Polynomial([1.0]), Polynomial([1.0, 1.0])))
        t, y = simulate(ss, "step", 0.01, 5.0)
        assert np.allclose(y, 1.0 - np.exp(-t), atol=1e-8)

    def test_first_order_impulse(self):
        ss = realize(RationalTF(Polynomial([1.0]), Polynomial([1.0, 1.0])))
        t, y = simulate(ss, "impulse", 0.01, 5.0)
        assert np.allclose(y, np.exp(-t), atol=1e-8)

    def test_second_order_step_final_value(self):
        # dc gain 2.5: final value theorem
        g = RationalTF(Polynomial([5.0]), Polynomial([2.0, 2.0, 1.0]))
        _, y = simulate(realize(g), "step", 0.01, 40.0)
        assert abs(y[-1] - 2.5) < 1e-6

    def test_step_size_guard(self):
        ss = realize(RationalTF(Polynomial([1.0]), Polynomial([100.0, 1.0])))
        with pytest.raises(UnstableIntegrationError):
            simulate(ss, "step", 1.0, 10.0)

    def test_bad_arguments(self):
        ss = realize(RationalTF(Polynomial([1.0]), Polynomial([1.0, 1.0])))
        with pytest.raises(PolytfError):
            simulate(ss, "ramp", 0.01, 1.0)
        with pytest.raises(PolytfError):
            simulate(ss, "step", -0.1, 1.0)

    def test_static_system(self):
        ss = StateSpace(A=np.zeros((0, 0)), B=np.zeros((0, 1)), C=np.zeros((1, 0)), D=2.0)
        _, y = simulate(ss, "step", 0.1, 1.0)
        assert np.all(y == 2.0)
