"""Closed-form transient curves checked against direct matrix evaluation.

Every fast curve in the library is recomputed here the slow way: explicit
matrix powers, explicit covariance recursions, explicit Frobenius norms.
Agreement to near machine precision is the main correctness argument.
"""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from gspest import (
    BandBasis,
    TheoryCurve,
    lms_steady_state,
    lms_theory_exact,
    lms_theory_paper,
    rls_gain_matrix,
    rls_steady_state,
    rls_theory_exact,
    rls_theory_paper,
    solve_lms_lyapunov,
    stable_step_range,
)
from gspest.sampling import SamplingSet, sampled_gram


def model_parts(setup):
    m = setup.model
    return m.band, setup.sampling, m.s_f, m.noise.c_w


def injected_covariance(band, sampling, c_w, mu):
    sel = list(sampling.indices)
    u_s = band.u_f[sel, :]
    return (mu**2) * (u_s.T @ (u_s * np.asarray(c_w, dtype=float)[sel, None]))


def naive_lms_paper(band, sampling, s_f, c_w, mu, t_max):
    """Literal transient expression via matrix powers: decaying bias, cross
    term with the substituted noise vector, squared frozen-noise response."""
    gram = sampled_gram(band, sampling)
    a_mat = np.eye(band.f) - mu * gram
    gram_inv = np.linalg.inv(gram)
    d_s = np.diag(sampling.indicator())
    root = np.sqrt(np.asarray(c_w, dtype=float))
    out = np.empty(t_max)
    for t in range(1, t_max + 1):
        a_pow = np.linalg.matrix_power(a_mat, t - 1)
        bias = a_pow @ s_f
        resp = gram_inv @ (a_pow - np.eye(band.f)) @ band.u_f.T @ d_s
        cross = 2.0 * float(bias @ (resp @ root))
        quad = float(np.sum((resp * root[None, :]) ** 2))  # Frobenius norm
        out[t - 1] = float(bias @ bias) + cross + quad
    return out


def naive_lms_exact(band, sampling, s_f, c_w, mu, t_max):
    """Error covariance recursion with dense matrices."""
    gram = sampled_gram(band, sampling)
    a_mat = np.eye(band.f) - mu * gram
    q_mat = injected_covariance(band, sampling, c_w, mu)
    p_mat = np.outer(s_f, s_f)
    out = np.empty(t_max)
    for t in range(t_max):
        out[t] = float(np.trace(p_mat))
        p_mat = a_mat @ p_mat @ a_mat.T + q_mat
    return out


def naive_rls_paper(band, sampling, s_f, c_w, lam, t_max):
    """Literal transient expression with the gain matrix built by inversion
    and the response term as an explicit Frobenius norm."""
    c_w = np.asarray(c_w, dtype=float)
    sel = list(sampling.indices)
    u_s = band.u_f[sel, :]
    m_mat = np.linalg.inv(u_s.T @ (u_s / c_w[sel, None]))
    resp = m_mat @ u_s.T @ np.diag(1.0 / np.sqrt(c_w[sel]))
    cross = float(s_f @ (resp @ np.ones(len(sel))))
    quad = float(np.sum(resp**2))
    energy = float(s_f @ s_f)
    out = np.empty(t_max)
    for t in range(1, t_max + 1):
        lp = lam ** (t - 1)
        out[t - 1] = lp**2 * energy + 2 * (lp - 1) * lp * cross + (lp - 1) ** 2 * quad
    return out


def naive_rls_exact(band, sampling, s_f, c_w, lam, t_max):
    m_mat = rls_gain_matrix(band, sampling, np.asarray(c_w, dtype=float))
    trace = float(np.trace(m_mat))
    val = float(s_f @ s_f)
    out = np.empty(t_max)
    for t in range(t_max):
        out[t] = val
        val = lam**2 * val + (1 - lam) ** 2 * trace
    return out


class TestCurveStart:
    def test_all_modes_start_at_signal_energy(self, setup10):
        band, sampling, s_f, c_w = model_parts(setup10)
        energy = float(s_f @ s_f)
        for curve in (
            lms_theory_paper(band, sampling, s_f, c_w, 0.5, 10),
            lms_theory_exact(band, sampling, s_f, c_w, 0.5, 10),
            rls_theory_paper(band, sampling, s_f, c_w, 0.7, 10),
            rls_theory_exact(band, sampling, s_f, c_w, 0.7, 10),
        ):
            assert_allclose(curve.values[0], energy, rtol=1e-10)
            assert curve.values.shape == (10,)

    def test_curve_validation(self):
        with pytest.raises(ValueError):
            TheoryCurve(algorithm="lms", mode="nope", values=np.ones(3), params={})
        with pytest.raises(ValueError):
            TheoryCurve(algorithm="gd", mode="paper", values=np.ones(3), params={})
        with pytest.raises(ValueError):
            TheoryCurve(algorithm="lms", mode="paper", values=np.empty(0), params={})


class TestLmsCurves:
    def test_paper_matches_matrix_evaluation(self, setup10):
        band, sampling, s_f, c_w = model_parts(setup10)
        for mu in (0.3, 0.5, 1.2):
            fast = lms_theory_paper(band, sampling, s_f, c_w, mu, 60).values
            slow = naive_lms_paper(band, sampling, s_f, c_w, mu, 60)
            assert_allclose(fast, slow, rtol=1e-9, atol=1e-12)

    def test_exact_matches_covariance_recursion(self, setup10):
        band, sampling, s_f, c_w = model_parts(setup10)
        for mu in (0.3, 0.5, 1.2):
            fast = lms_theory_exact(band, sampling, s_f, c_w, mu, 60).values
            slow = naive_lms_exact(band, sampling, s_f, c_w, mu, 60)
            assert_allclose(fast, slow, rtol=1e-10)

    def test_noise_free_modes_coincide(self, setup10):
        band, sampling, s_f, _ = model_parts(setup10)
        zero = np.zeros(band.n)
        paper = lms_theory_paper(band, sampling, s_f, zero, 0.5, 40).values
        exact = lms_theory_exact(band, sampling, s_f, zero, 0.5, 40).values
        assert_allclose(paper, exact, rtol=1e-12)

    def test_mu_zero_is_constant(self, setup10):
        band, sampling, s_f, c_w = model_parts(setup10)
        energy = float(s_f @ s_f)
        assert_allclose(lms_theory_paper(band, sampling, s_f, c_w, 0.0, 20).values,
                        energy, rtol=1e-12)
        assert_allclose(lms_theory_exact(band, sampling, s_f, c_w, 0.0, 20).values,
                        energy, rtol=1e-12)

    def test_rejects_nonrecoverable_sampling(self, setup10):
        band, _, s_f, c_w = model_parts(setup10)
        bad = SamplingSet(indices=(0, 1), n=band.n)
        with pytest.raises(ValueError):
            lms_theory_paper(band, bad, s_f, c_w, 0.5, 10)

    def test_unstable_step_is_allowed_and_grows(self, setup10):
        band, sampling, s_f, c_w = model_parts(setup10)
        _, mu_max = stable_step_range(band, sampling)
        curve = lms_theory_exact(band, sampling, s_f, c_w, 1.05 * mu_max, 400).values
        assert curve[-1] > 1e3 * curve[0]

    def test_exact_converges_monotonically_near_tail(self, setup10):
        band, sampling, s_f, c_w = model_parts(setup10)
        steady = lms_steady_state(band, sampling, c_w, 0.5, "exact")
        curve = lms_theory_exact(band, sampling, s_f, c_w, 0.5, 300).values
        gap = np.abs(curve - steady)
        assert np.all(np.diff(gap[50:]) <= 1e-12 * steady)


class TestLmsSteadyState:
    def test_exact_matches_lyapunov_trace(self, setup10):
        band, sampling, _, c_w = model_parts(setup10)
        p_inf = solve_lms_lyapunov(band, sampling, c_w, 0.5)
        assert_allclose(lms_steady_state(band, sampling, c_w, 0.5, "exact"),
                        np.trace(p_inf), rtol=1e-12)

    def test_lyapunov_residual(self, setup10):
        band, sampling, _, c_w = model_parts(setup10)
        mu = 0.5
        p_inf = solve_lms_lyapunov(band, sampling, c_w, mu)
        gram = sampled_gram(band, sampling)
        a_mat = np.eye(band.f) - mu * gram
        q_mat = injected_covariance(band, sampling, c_w, mu)
        resid = p_inf - (a_mat @ p_inf @ a_mat.T + q_mat)
        rel = np.linalg.norm(resid, "fro") / np.linalg.norm(p_inf, "fro")
        assert rel < 1e-12

    def test_lyapunov_rejects_unstable_step(self, setup10):
        band, sampling, _, c_w = model_parts(setup10)
        _, mu_max = stable_step_range(band, sampling)
        with pytest.raises(ValueError):
            solve_lms_lyapunov(band, sampling, c_w, 1.01 * mu_max)

    def test_exact_matches_curve_tail(self, setup10):
        band, sampling, s_f, c_w = model_parts(setup10)
        steady = lms_steady_state(band, sampling, c_w, 0.5, "exact")
        curve = lms_theory_exact(band, sampling, s_f, c_w, 0.5, 4000).values
        assert_allclose(curve[-1], steady, rtol=1e-9)

    def test_paper_mode_matches_curve_tail(self, setup10):
        band, sampling, s_f, c_w = model_parts(setup10)
        steady = lms_steady_state(band, sampling, c_w, 0.5, "paper")
        curve = lms_theory_paper(band, sampling, s_f, c_w, 0.5, 4000).values
        assert_allclose(curve[-1], steady, rtol=1e-9)

    def test_paper_mode_equals_weighted_trace(self, setup10):
        # the frozen-noise limit is the reconstruction operator applied to
        # the covariance, computable by direct matrix algebra
        band, sampling, _, c_w = model_parts(setup10)
        gram_inv = np.linalg.inv(sampled_gram(band, sampling))
        d_s = np.diag(sampling.indicator())
        mid = band.u_f.T @ d_s @ np.diag(c_w) @ d_s @ band.u_f
        want = float(np.trace(gram_inv @ mid @ gram_inv))
        got = lms_steady_state(band, sampling, c_w, 0.5, "paper")
        assert_allclose(got, want, rtol=1e-10)

    def test_flat_spectrum_closed_form(self):
        # full sampling and uniform variance decouple the modes: the limit is
        # f * mu * sigma^2 / (2 - mu)
        rng = np.random.default_rng(31)
        q, _ = np.linalg.qr(rng.standard_normal((6, 2)))
        band = BandBasis(f=2, u_f=q)
        sampling = SamplingSet(indices=tuple(range(6)), n=6)
        sigma_sq, mu = 0.3, 0.7
        got = lms_steady_state(band, sampling, np.full(6, sigma_sq), mu, "exact")
        assert_allclose(got, 2 * mu * sigma_sq / (2 - mu), rtol=1e-12)

    def test_zero_noise_limit_is_zero(self, setup10):
        band, sampling, _, _ = model_parts(setup10)
        assert lms_steady_state(band, sampling, np.zeros(band.n), 0.5, "exact") == 0.0
        assert lms_steady_state(band, sampling, np.zeros(band.n), 0.5, "paper") == 0.0

    def test_mode_validation(self, setup10):
        band, sampling, _, c_w = model_parts(setup10)
        with pytest.raises(ValueError):
            lms_steady_state(band, sampling, c_w, 0.5, "average")

    def test_unstable_step_rejected(self, setup10):
        band, sampling, _, c_w = model_parts(setup10)
        _, mu_max = stable_step_range(band, sampling)
        with pytest.raises(ValueError):
            lms_steady_state(band, sampling, c_w, 1.01 * mu_max, "exact")


class TestRlsCurves:
    def test_paper_matches_matrix_evaluation(self, setup10):
        band, sampling, s_f, c_w = model_parts(setup10)
        for lam in (0.55, 0.7, 0.9):
            fast = rls_theory_paper(band, sampling, s_f, c_w, lam, 60).values
            slow = naive_rls_paper(band, sampling, s_f, c_w, lam, 60)
            assert_allclose(fast, slow, rtol=1e-9, atol=1e-12)

    def test_paper_frobenius_term_equals_gain_trace(self, setup10):
        # identity used by the fast path: the squared response norm collapses
        # to the trace of the gain matrix
        band, sampling, _, c_w = model_parts(setup10)
        sel = list(sampling.indices)
        u_s = band.u_f[sel, :]
        m_mat = rls_gain_matrix(band, sampling, c_w)
        resp = m_mat @ u_s.T @ np.diag(1.0 / np.sqrt(c_w[sel]))
        assert_allclose(np.sum(resp**2), np.trace(m_mat), rtol=1e-11)

    def test_exact_matches_recursion(self, setup10):
        band, sampling, s_f, c_w = model_parts(setup10)
        for lam in (0.55, 0.7, 0.9):
            fast = rls_theory_exact(band, sampling, s_f, c_w, lam, 120).values
            slow = naive_rls_exact(band, sampling, s_f, c_w, lam, 120)
            assert_allclose(fast, slow, rtol=1e-11)

    def test_lambda_one_is_constant(self, setup10):
        band, sampling, s_f, c_w = model_parts(setup10)
        energy = float(s_f @ s_f)
        assert_allclose(rls_theory_paper(band, sampling, s_f, c_w, 1.0, 30).values,
                        energy, rtol=1e-12)
        assert_allclose(rls_theory_exact(band, sampling, s_f, c_w, 1.0, 30).values,
                        energy, rtol=1e-12)

    def test_rejects_zero_variance(self, setup10):
        band, sampling, s_f, _ = model_parts(setup10)
        with pytest.raises(ValueError):
            rls_theory_paper(band, sampling, s_f, np.zeros(band.n), 0.7, 10)
        with pytest.raises(ValueError):
            rls_theory_exact(band, sampling, s_f, np.zeros(band.n), 0.7, 10)

    def test_rejects_bad_lambda(self, setup10):
        band, sampling, s_f, c_w = model_parts(setup10)
        with pytest.raises(ValueError):
            rls_theory_exact(band, sampling, s_f, c_w, 0.0, 10)
        with pytest.raises(ValueError):
            rls_theory_exact(band, sampling, s_f, c_w, 1.5, 10)


class TestRlsSteadyState:
    def test_paper_mode_is_lambda_invariant(self, setup10):
        band, sampling, _, c_w = model_parts(setup10)
        vals = [rls_steady_state(band, sampling, c_w, lam, "paper")
                for lam in (0.3, 0.6, 0.9)]
        assert vals[0] == vals[1] == vals[2]
        m_mat = rls_gain_matrix(band, sampling, c_w)
        assert_allclose(vals[0], np.trace(m_mat), rtol=1e-12)

    def test_exact_mode_formula(self, setup10):
        band, sampling, _, c_w = model_parts(setup10)
        m_mat = rls_gain_matrix(band, sampling, c_w)
        for lam in (0.55, 0.85):
            want = (1 - lam) / (1 + lam) * float(np.trace(m_mat))
            assert_allclose(rls_steady_state(band, sampling, c_w, lam, "exact"),
                            want, rtol=1e-12)

    def test_exact_mode_matches_recursion_fixed_point(self, setup10):
        band, sampling, s_f, c_w = model_parts(setup10)
        lam = 0.7
        tail = naive_rls_exact(band, sampling, s_f, c_w, lam, 400)[-1]
        assert_allclose(rls_steady_state(band, sampling, c_w, lam, "exact"),
                        tail, rtol=1e-10)

    def test_lambda_one_rejected(self, setup10):
        band, sampling, _, c_w = model_parts(setup10)
        with pytest.raises(ValueError):
            rls_steady_state(band, sampling, c_w, 1.0, "exact")
