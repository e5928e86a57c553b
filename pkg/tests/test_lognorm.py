"""Log norm, spectral abscissa, induced norm, envelope, pseudospectra."""

import math

import numpy as np
import pytest
import scipy.linalg as sla

from lognormgrid.errors import CrossCheckError, NonFiniteMatrixError
from lognormgrid.lognorm import (
    StabilityReport,
    default_h_sequence,
    exp_envelope,
    log_norm,
    log_norm_limit,
    matrix_two_norm,
    pseudospectral_abscissa_lower_bound,
    spectral_abscissa,
    stability_report,
    stiffness_ratio,
)

TRANSIENT = np.array([[-1.0, 4.0], [0.0, -1.0]])


def test_log_norm_zero_matrix():
    assert log_norm(np.zeros((3, 3))) == 0.0


def test_log_norm_skew_matrix():
    skew = np.array([[0.0, 1.0], [-1.0, 0.0]])
    assert abs(log_norm(skew)) < 1e-14
    assert abs(spectral_abscissa(skew)) < 1e-14
    env = exp_envelope(skew, np.linspace(0.0, 3.0, 7))
    assert np.allclose(env.exp_norm, 1.0, atol=1e-12)


def test_log_norm_transient_witness():
    # symmetric part [[-1, 2], [2, -1]] has eigenvalues -1 +/- 2 by hand
    assert abs(log_norm(TRANSIENT) - 1.0) < 1e-12
    assert abs(spectral_abscissa(TRANSIENT) - (-1.0)) < 1e-12


def test_log_norm_rejects_nonfinite():
    with pytest.raises(NonFiniteMatrixError):
        log_norm(np.array([[np.inf, 0.0], [0.0, 1.0]]))


def test_limit_scalar_decay():
    estimates = log_norm_limit(np.array([[-2.0]]))
    # (|1 - 2h| - 1)/h = -2 exactly for h < 1/2, up to roundoff
    assert np.all(estimates >= -2.0 - 1e-8)
    assert abs(estimates[-1] - (-2.0)) < 1e-8


def test_limit_converges_from_above():
    estimates = log_norm_limit(TRANSIENT)
    assert np.all(np.diff(estimates) <= 1e-12)  # decreasing toward the limit
    assert np.all(estimates >= 1.0 - 1e-10)
    assert abs(estimates[-1] - 1.0) < 1e-5 * (1.0 + matrix_two_norm(TRANSIENT))


def test_limit_matches_eigensolve_random(rng):
    for _ in range(10):
        b = rng.standard_normal((10, 10))
        estimates = log_norm_limit(b)  # cross-check built in
        assert abs(estimates[-1] - log_norm(b)) <= 1e-5 * (1.0 + matrix_two_norm(b))


def test_limit_cross_check_fires_on_bad_sequence():
    # a single huge h is far from the limit; the built-in check must fire
    with pytest.raises(CrossCheckError):
        log_norm_limit(TRANSIENT, h_sequence=[10.0, 5.0])


def test_default_h_sequence_shape():
    h = default_h_sequence()
    assert h.shape == (21,)
    assert h[0] == 0.1 and np.all(np.diff(h) < 0)


def test_limit_rejects_bad_sequences():
    with pytest.raises(ValueError):
        log_norm_limit(TRANSIENT, h_sequence=[])
    with pytest.raises(ValueError):
        log_norm_limit(TRANSIENT, h_sequence=[0.1, -0.2])
    with pytest.raises(ValueError):
        log_norm_limit(TRANSIENT, h_sequence=[0.1, 0.1])


def test_spectral_abscissa_examples():
    assert spectral_abscissa(np.diag([-1.0, -3.0])) == -1.0
    assert abs(spectral_abscissa(np.array([[0.0, 1.0], [-1.0, 0.0]]))) < 1e-14


def test_two_node_closed_loop_alpha_below_mu():
    from lognormgrid.assembly import (
        DroopConfig, RoleAssignment, assemble_closed_loop,
    )
    from conftest import make_two_node_graph

    droop = DroopConfig(
        gain=np.array([-1.0, -1.0]), load_power=np.array([0.0, 0.0]), v_ref=1.0
    )
    system = assemble_closed_loop(
        make_two_node_graph(), RoleAssignment.from_producers(2, [0]), droop
    )
    alpha = spectral_abscissa(system.b)
    mu = log_norm(system.b)
    assert alpha < 0.0
    assert alpha <= mu


def test_two_norm_examples():
    assert abs(matrix_two_norm(np.eye(4)) - 1.0) < 1e-14
    assert abs(matrix_two_norm(np.diag([3.0, -5.0])) - 5.0) < 1e-14


def test_two_norm_monte_carlo_oracle_2x2(rng):
    # in dimension 2, 1e4 random directions get within ~1e-8 of the norm
    for _ in range(5):
        b = rng.standard_normal((2, 2))
        directions = rng.standard_normal((10_000, 2))
        directions /= np.linalg.norm(directions, axis=1)[:, None]
        sampled = float(np.max(np.linalg.norm(directions @ b.T, axis=1)))
        value = matrix_two_norm(b)
        assert sampled <= value * (1.0 + 1e-12)
        assert value <= sampled * (1.0 + 1e-6)


def test_two_norm_monte_carlo_power_refined(rng):
    # larger dimensions: refine the best sampled direction by power iteration
    # (matvec-only, independent of the Jacobi route)
    for _ in range(5):
        n = int(rng.integers(3, 12))
        b = rng.standard_normal((n, n))
        directions = rng.standard_normal((10_000, n))
        directions /= np.linalg.norm(directions, axis=1)[:, None]
        best = directions[int(np.argmax(np.linalg.norm(directions @ b.T, axis=1)))]
        gram = b.T @ b
        x = best
        for _ in range(200):
            x = gram @ x
            x /= np.linalg.norm(x)
        sampled = float(np.linalg.norm(b @ x))
        value = matrix_two_norm(b)
        assert sampled <= value * (1.0 + 1e-9)
        assert value <= sampled * (1.0 + 1e-6)


def test_envelope_zero_matrix():
    env = exp_envelope(np.zeros((2, 2)), [0.0, 1.0, 2.0])
    assert np.array_equal(env.exp_norm, np.ones(3))
    assert np.array_equal(env.lower_bound, np.ones(3))
    assert np.array_equal(env.upper_bound, np.ones(3))


def test_envelope_transient_closed_form():
    env = exp_envelope(TRANSIENT, [1.0])
    # e^B = e^-1 [[1, 4], [0, 1]], whose norm is e^-1 (2 + sqrt 5)
    closed_form = math.exp(-1.0) * (2.0 + math.sqrt(5.0))
    assert abs(env.exp_norm[0] - closed_form) < 1e-12
    assert env.lower_bound[0] < env.exp_norm[0] < env.upper_bound[0]
    assert env.exp_norm[0] > math.exp(-1.0)  # observed transient growth


def test_envelope_tight_for_symmetric(rng):
    m = rng.standard_normal((5, 5))
    sym = 0.5 * (m + m.T)
    env = exp_envelope(sym, np.linspace(0.0, 2.0, 11))
    assert np.allclose(env.exp_norm, env.upper_bound, rtol=1e-9)


def test_envelope_bounds_hold_random(rng):
    for _ in range(10):
        n = int(rng.integers(2, 12))
        b = rng.standard_normal((n, n))
        env = exp_envelope(b, np.arange(0.0, 2.01, 0.1))
        assert np.all(env.exp_norm >= env.lower_bound * (1.0 - 1e-7))
        assert np.all(env.exp_norm <= env.upper_bound * (1.0 + 1e-7))


def test_envelope_overflow_flag():
    env = exp_envelope(np.array([[400.0]]), [0.0, 1.0, 2.0])
    assert env.overflow.tolist() == [False, False, True]
    assert env.upper_bound[2] == math.inf


def test_envelope_csv_format():
    env = exp_envelope(TRANSIENT, [0.0, 0.5])
    lines = env.to_csv().splitlines()
    assert lines[0] == "t,exp_norm,lower_bound,upper_bound"
    assert len(lines) == 3
    assert lines[1].startswith("0,1,")


def test_pseudospectral_bound_zero_epsilon():
    assert pseudospectral_abscissa_lower_bound(TRANSIENT, 0.0) == spectral_abscissa(
        TRANSIENT
    )


def test_pseudospectral_bound_normal_matrix():
    b = np.diag([-1.0, -1.0])
    eps = 1e-3
    estimate = pseudospectral_abscissa_lower_bound(b, eps, samples=64, rng_seed=3)
    assert estimate <= -1.0 + eps + 1e-12
    assert estimate >= -1.0  # contains the spectrum


def test_pseudospectral_bound_nonnormal_blowup():
    b = np.array([[-1.0, 100.0], [0.0, -1.0]])
    eps = 1e-2
    estimate = pseudospectral_abscissa_lower_bound(b, eps, samples=64, rng_seed=5)
    assert estimate > spectral_abscissa(b) + eps


def test_pseudospectral_bound_deterministic():
    a = pseudospectral_abscissa_lower_bound(TRANSIENT, 0.1, samples=16, rng_seed=9)
    b = pseudospectral_abscissa_lower_bound(TRANSIENT, 0.1, samples=16, rng_seed=9)
    assert a == b


def test_mu_translation_homogeneity_subadditivity(rng):
    for _ in range(20):
        n = int(rng.integers(2, 15))
        b = rng.standard_normal((n, n))
        c = float(rng.standard_normal())
        scale_tol = 1e-10 * (1.0 + matrix_two_norm(b))
        assert abs(log_norm(b + c * np.eye(n)) - (log_norm(b) + c)) < scale_tol
        s = float(rng.random() * 3.0)
        assert abs(log_norm(s * b) - s * log_norm(b)) < scale_tol
        b2 = rng.standard_normal((n, n))
        assert log_norm(b + b2) <= log_norm(b) + log_norm(b2) + 1e-10


def test_alpha_mu_sandwich(rng):
    for _ in range(20):
        n = int(rng.integers(2, 15))
        b = rng.standard_normal((n, n))
        alpha = spectral_abscissa(b)
        assert -log_norm(-b) - 1e-10 <= alpha <= log_norm(b) + 1e-10


def test_pseudospectral_relation_sampled(rng):
    # for each epsilon: sampled alpha_eps - eps never exceeds mu
    for _ in range(5):
        n = int(rng.integers(2, 8))
        b = rng.standard_normal((n, n))
        mu = log_norm(b)
        for eps in (1e-3, 1e-2, 1e-1):
            alpha_eps = pseudospectral_abscissa_lower_bound(
                b, eps, samples=24, rng_seed=11
            )
            assert alpha_eps - eps <= mu + 1e-7


def test_stability_report_fields_and_json():
    report = stability_report(TRANSIENT, t_grid=np.linspace(0.0, 2.0, 5))
    assert report.mu == pytest.approx(1.0, abs=1e-12)
    assert report.alpha == pytest.approx(-1.0, abs=1e-12)
    assert not report.stable
    doc = report.to_json_dict()
    assert set(doc) == {"mu", "alpha", "two_norm", "stable", "envelope"}
    assert len(doc["envelope"]["t"]) == 5

    stable_report = stability_report(np.diag([-2.0, -1.0]))
    assert stable_report.stable and stable_report.envelope is None


def test_stability_report_rejects_inconsistent_values():
    with pytest.raises(CrossCheckError):
        StabilityReport(mu=-1.0, alpha=0.5, two_norm=2.0, stable=True)
    with pytest.raises(CrossCheckError):
        StabilityReport(mu=-5.0, alpha=-6.0, two_norm=1.0, stable=True)


def test_stiffness_ratio():
    assert stiffness_ratio(np.diag([-1.0, -10.0])) == pytest.approx(10.0)
    assert stiffness_ratio(np.array([[0.0, 1.0], [0.0, 0.0]])) == math.inf


def test_oracle_expm_agreement(rng):
    # the envelope norm against scipy's independent exponential
    for _ in range(5):
        n = int(rng.integers(2, 9))
        b = rng.standard_normal((n, n))
        t = float(rng.random() * 2.0)
        env = exp_envelope(b, [t])
        ref = np.linalg.norm(sla.expm(t * b), 2)
        assert env.exp_norm[0] == pytest.approx(ref, rel=1e-9)
