import numpy as np
import pytest

from chandiff.denoiser import NetworkSpec, init_params
from chandiff.entropy import (
    ENTROPY_CONST,
    MonteCarloReport,
    build_report,
    conditional_entropy_step,
    f_tau,
    mc_moments,
    recommend_tmax,
    u_tau,
)
from chandiff.rng import stream
from chandiff.schedule import build_schedule, default_schedule, step_coefficients
from chandiff.sources import make_source


class ZeroSource:
    def __init__(self, k):
        self.k = k

    def sample_batch(self, rng, n):
        return np.zeros((n, 2 * self.k))


def oracle_for_zero_source(schedule):
    """With x0 = 0 and identity weights, x_t = sqrt(1-ab_t) eps, so the true
    noise is recoverable from the state alone."""

    def predict(x_t, h_r, t):
        ab = schedule.alpha_bar_at(np.atleast_1d(t))
        return x_t / np.sqrt(1.0 - ab)[:, None]

    return predict


def test_f_tau_domain_error_at_t1():
    with pytest.raises(ValueError):
        f_tau(1, 0.3, default_schedule())


def test_f_tau_tau_zero_drops_second_term():
    sch = default_schedule()
    for t in (2, 50, 400):
        beta, _, gamma_prev = step_coefficients(t, sch)
        denom = gamma_prev**2 - beta * gamma_prev
        expected = (1 - sch.alpha_bar_at(t) - beta * gamma_prev) / denom
        assert f_tau(t, 0.0, sch) == pytest.approx(expected, rel=1e-14)


def test_f_tau_slope_sign_checked_per_step():
    """slope dfd/dtau = -(beta^2 - beta*gamma)/(gamma^2 - beta*gamma); the
    numerator is positive (beta > gamma_prev) and the denominator negative,
    so the slope evaluates positive at every step."""
    sch = default_schedule()
    for t in (2, 10, 93, 500, 1000):
        beta, _, gamma_prev = step_coefficients(t, sch)
        assert beta > gamma_prev
        assert gamma_prev**2 - beta * gamma_prev < 0
        slope = -(beta**2 - beta * gamma_prev) / (gamma_prev**2 - beta * gamma_prev)
        assert slope > 0
        assert f_tau(t, 0.4, sch) - f_tau(t, 0.1, sch) == pytest.approx(0.3 * slope, rel=1e-9)


def test_f_tau_dual_path_agreement():
    """Scalar coefficient path vs the report's vectorized alpha-bar path."""
    sch = default_schedule()
    steps = np.arange(2, 160)
    ab = sch.alpha_bar_at(steps)
    gamma_prev = np.sqrt(1 - sch.alpha_bar_before(steps))
    beta = np.sqrt(1 - ab) / np.sqrt(sch.alpha_at(steps))
    denom = gamma_prev**2 - beta * gamma_prev
    tau = 0.3
    vectorized = ((1 - ab) - beta * gamma_prev) / denom - (beta**2 - beta * gamma_prev) / denom * tau
    scalar = np.array([f_tau(int(t), tau, sch) for t in steps])
    np.testing.assert_allclose(scalar, vectorized, atol=1e-10)


def test_u_tau_boundary_equality():
    # E[eps_hat^2] = f_tau(t) puts the bound exactly on the step-t entropy
    sch = default_schedule()
    for t in (2, 30, 93):
        for w in (1.0, 0.5):
            e_boundary = f_tau(t, 0.3, sch)
            u = u_tau(t, 0.3, e_boundary, w, sch)
            h = conditional_entropy_step(t, w, sch)
            assert u == pytest.approx(h, abs=1e-12)


def test_u_tau_direction():
    # exceeding the threshold pushes the bound strictly below the entropy
    sch = default_schedule()
    for t in (2, 30, 93):
        e_boundary = f_tau(t, 0.3, sch)
        assert u_tau(t, 0.3, e_boundary + 0.05, 1.0, sch) < conditional_entropy_step(t, 1.0, sch)
        assert u_tau(t, 0.3, max(e_boundary - 0.05, 0.0), 1.0, sch) > conditional_entropy_step(
            t, 1.0, sch
        ) or e_boundary < 0.05


def test_u_tau_rejects_nonpositive_argument():
    sch = default_schedule()
    with pytest.raises(ValueError, match="log argument"):
        u_tau(2, 0.0, 1e9, 1.0, sch)


def test_conditional_entropy_ordering_and_scaling():
    sch = default_schedule()
    assert conditional_entropy_step(10, 1.0, sch) < conditional_entropy_step(200, 1.0, sch)
    c = 3.0
    base = conditional_entropy_step(50, 1.0, sch)
    assert conditional_entropy_step(50, c, sch) == pytest.approx(base + np.log(c), rel=1e-12)
    with pytest.raises(ValueError):
        conditional_entropy_step(50, 0.0, sch)


def test_conditional_entropy_zero_point():
    # 1 - alpha_bar_1 = 1/(2 pi e) makes H(1) = 0 with the chosen constant
    a1 = 1.0 - 1.0 / (2 * np.pi * np.e)
    sch = build_schedule(2, a1, a1 - 0.01)
    assert conditional_entropy_step(1, 1.0, sch) == pytest.approx(0.0, abs=1e-12)


def test_mc_moments_zero_net_exact_zeros():
    sch = build_schedule(60, 0.999, 0.95)
    params = init_params(NetworkSpec(k=3, hidden=16, blocks=1, embed_dim=8), stream(121))
    mom = mc_moments(params, make_source("gaussian_mixture", 3), sch, 10, 500, stream(122))
    assert mom.mean_eps == 0.0
    assert mom.mean_eps_sq == 0.0
    np.testing.assert_array_equal(mom.mean_eps_per_coord, 0.0)


def test_mc_moments_oracle_predictor():
    sch = build_schedule(60, 0.999, 0.95)
    n = 4000
    mom = mc_moments(
        oracle_for_zero_source(sch), ZeroSource(4), sch, 25, n, stream(123)
    )
    # E[eps^2] = 1 within 3 std errs of a chi-square mean over n*2k entries
    se = np.sqrt(2.0 / (n * 8))
    assert abs(mom.mean_eps_sq - 1.0) < 3 * se
    assert mom.tau_hat < 1e-20
    assert abs(mom.mean_eps) < 3 / np.sqrt(n * 8)


def test_report_internal_consistency_and_csv(tmp_path):
    sch = default_schedule()
    report = build_report(
        oracle_for_zero_source(sch), ZeroSource(4), sch, range(2, 40, 2), 800, stream(124)
    )
    # margin column is exactly H - u everywhere
    np.testing.assert_allclose(report.entropy_margin, report.entropy - report.u_tau, atol=1e-14)
    # second moment >= squared mean (validated in the constructor too)
    assert np.all(report.mean_eps_sq + 1e-12 >= report.mean_eps**2)
    path = tmp_path / "report.csv"
    report.write_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "t,mean_eps,mean_eps_sq,tau_hat,f_tau,H,u_tau,margin"
    assert len(lines) == 1 + len(report.steps)


def test_report_dual_path_u_tau():
    sch = default_schedule()
    report = build_report(
        oracle_for_zero_source(sch), ZeroSource(4), sch, range(2, 100, 3), 400, stream(125)
    )
    for i, t in enumerate(report.steps):
        scalar_u = u_tau(int(t), report.tau_hat[i], report.mean_eps_sq[i], report.w_n_i, sch)
        assert abs(scalar_u - report.u_tau[i]) < 1e-10
        scalar_f = f_tau(int(t), report.tau_hat[i], sch)
        assert abs(scalar_f - report.f_tau[i]) < 1e-10


def test_theorem_direction_on_report():
    """Wherever the estimated second moment clears f_tau, the computed bound
    sits at or below the step-t entropy."""
    sch = default_schedule()
    report = build_report(
        oracle_for_zero_source(sch), ZeroSource(4), sch, range(2, 120, 2), 500, stream(126)
    )
    holds = report.mean_eps_sq >= report.f_tau
    assert np.any(holds)
    assert np.all(report.u_tau[holds] <= report.entropy[holds] + 1e-12)


def test_recommend_tmax_oracle_small_window():
    # oracle moments satisfy the condition everywhere; within a small window
    # the margin still moves, so the recommendation is the window maximum
    sch = default_schedule()
    report = build_report(
        oracle_for_zero_source(sch), ZeroSource(4), sch, range(2, 40), 500, stream(127)
    )
    assert np.all(report.mean_eps_sq >= report.f_tau)
    assert recommend_tmax(report, window=(10, 20)) == 20


def test_recommend_tmax_zero_net_warns():
    sch = default_schedule()
    params = init_params(NetworkSpec(k=3, hidden=16, blocks=1, embed_dim=8), stream(128))
    report = build_report(
        params, make_source("gaussian_mixture", 3), sch, range(2, 60, 2), 300, stream(129)
    )
    assert np.all(report.mean_eps_sq < report.f_tau)  # E = 0 < f everywhere
    with pytest.warns(UserWarning, match="falling back"):
        assert recommend_tmax(report, window=(10, 50)) == 10


def test_recommend_tmax_clamps_to_paper_band():
    sch = default_schedule()
    report = build_report(
        oracle_for_zero_source(sch), ZeroSource(4), sch, range(2, 14), 400, stream(130)
    )
    # window below the clamp band: result is pulled up to 10
    assert recommend_tmax(report, window=(3, 8)) == 10


def test_margin_curve_shape_oracle():
    """Sharp early decline, then flattening: every late slope is a small
    fraction of the first, and the curve is nonincreasing past step 5."""
    sch = default_schedule()
    report = build_report(
        oracle_for_zero_source(sch), ZeroSource(4), sch, range(2, 120), 2000, stream(131)
    )
    margins = report.entropy_margin
    diffs = np.diff(margins)
    after5 = report.steps[:-1] >= 5
    assert np.all(diffs[after5] <= 1e-4)
    assert abs(diffs[-1]) < 0.02 * abs(diffs[0])


def test_report_alignment_validation():
    with pytest.raises(ValueError, match="aligned"):
        MonteCarloReport(
            steps=np.arange(2, 5), mean_eps=np.zeros(3), mean_eps_sq=np.zeros(3),
            tau_hat=np.zeros(3), f_tau=np.zeros(2), entropy=np.zeros(3),
            u_tau=np.zeros(3), entropy_margin=np.zeros(3), samples_per_step=10,
            sigma=0.1, channel_mode="awgn", w_n_i=1.0, tau_percentile=95.0,
        )
