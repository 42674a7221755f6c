import io
import math

import numpy as np
import pytest

from kolmotk import (
    DriftField,
    DriftTerm,
    OperatorSpec,
    PathGrid,
    deterministic_flow,
    gramian,
    matrix_exp,
    sample_ou_endpoints,
    simulate_bundle,
    simulate_endpoints,
    variation_flow_along_path,
    write_path_csv,
)

SPEC_OU = OperatorSpec(n=2, p_tilde=1, Q0=[[1.0]], A=[[0.0, 0.0], [1.0, 1.0]],
                       F=DriftField())
DRIFT = DriftField([DriftTerm(1, 0.8, [1.0, 0.5], 0.1)])
SPEC_NL = OperatorSpec(n=2, p_tilde=1, Q0=[[1.0]], A=[[0.0, 0.0], [1.0, 1.0]],
                       F=DRIFT)


def test_path_grid():
    g = PathGrid(1.0, 4)
    assert g.dt == 0.25
    assert np.allclose(g.times, [0.0, 0.25, 0.5, 0.75, 1.0])
    with pytest.raises(ValueError):
        PathGrid(1.0, 0)


def test_exact_sampler_matches_gramian_moments():
    t = 0.5
    x = np.array([0.3, -0.2])
    rng = np.random.default_rng(8)
    Z = sample_ou_endpoints(SPEC_OU, x, t, 200000, rng)
    mean_exact = matrix_exp(SPEC_OU.A, t) @ x
    cov_exact = gramian(SPEC_OU, t).matrix
    assert np.allclose(Z.mean(axis=0), mean_exact, atol=4e-3)
    assert np.allclose(np.cov(Z.T), cov_exact, atol=8e-3)


def test_zero_drift_paths_coincide_and_weight_is_one():
    Z, X, logphi = simulate_endpoints(SPEC_OU, np.zeros(2), 0.4, 64, 3, 500)
    assert np.array_equal(Z, X)
    assert np.all(logphi == 0.0)


def test_thread_count_does_not_change_results():
    args = (SPEC_NL, np.zeros(2), 0.3, 32, 5, 9000)
    a = simulate_endpoints(*args, threads=1)
    b = simulate_endpoints(*args, threads=8)
    for u, v in zip(a, b):
        assert np.array_equal(u, v)


def test_path_offset_gives_disjoint_streams():
    a = simulate_endpoints(SPEC_OU, np.zeros(2), 0.3, 32, 5, 100)
    b = simulate_endpoints(SPEC_OU, np.zeros(2), 0.3, 32, 5, 100, path_offset=100)
    assert not np.allclose(a[0], b[0])
    # offsetting by 0..99 then 100..199 equals one run of 200
    c = simulate_endpoints(SPEC_OU, np.zeros(2), 0.3, 32, 5, 200)
    assert np.array_equal(np.concatenate([a[0], b[0]], axis=1), c[0])


def test_exponential_euler_endpoint_distribution():
    """With F == 0 the integrator samples the exact OU law at every step
    count, because the linear flow and the increment covariance are exact."""
    t = 0.5
    _, X, _ = simulate_endpoints(SPEC_OU, np.zeros(2), t, 8, 9, 200000)
    cov = np.cov(X[0].T)
    # each step adds e^{dtA} Q^{1/2} dW, so the discrete covariance is the
    # left-endpoint Riemann sum of the Gramian integrand
    dt = t / 8
    expected = sum(
        dt * matrix_exp(SPEC_OU.A, (k + 1) * dt) @ SPEC_OU.Q @ matrix_exp(SPEC_OU.A, (k + 1) * dt).T
        for k in range(8)
    )
    assert np.allclose(cov, expected, atol=8e-3)


def test_girsanov_weight_has_unit_mean():
    _, _, logphi = simulate_endpoints(SPEC_NL, np.zeros(2), 0.5, 128, 17, 40000)
    w = np.exp(logphi[0])
    assert abs(w.mean() - 1.0) < 4.0 * w.std() / math.sqrt(w.size)


def test_bundle_consistent_with_endpoints():
    grid = PathGrid(0.3, 32)
    b = simulate_bundle(SPEC_NL, np.zeros(2), grid, 5, path_id=2)
    Z, X, logphi = simulate_endpoints(SPEC_NL, np.zeros(2), 0.3, 32, 5, 1, path_offset=2)
    assert np.allclose(b.Z[-1], Z[0, 0], atol=1e-12)
    assert np.allclose(b.X[-1], X[0, 0], atol=1e-12)
    assert np.isclose(b.log_phi[-1], logphi[0, 0], atol=1e-12)


def test_deterministic_flow_zero_drift_is_matrix_exp():
    t = 0.7
    x = np.array([0.4, -0.3])
    fl = deterministic_flow(SPEC_OU, x, t, 200)
    assert np.allclose(fl.Y, matrix_exp(SPEC_OU.A, t) @ x, atol=1e-10)
    assert np.allclose(fl.eta1, matrix_exp(SPEC_OU.A, t), atol=1e-10)


def test_variation_flows_match_finite_differences():
    x = np.array([0.3, -0.2])
    t, steps, eps = 0.5, 400, 1e-5
    fl = deterministic_flow(SPEC_NL, x, t, steps, order=3)

    def flow(y, order=1):
        return deterministic_flow(SPEC_NL, y, t, steps, order=order)

    for j, e in enumerate(np.eye(2)):
        fd = (flow(x + eps * e).Y - flow(x - eps * e).Y) / (2 * eps)
        assert np.allclose(fl.eta1[:, j], fd, atol=1e-7)
        fd2 = (flow(x + eps * e).eta1 - flow(x - eps * e).eta1) / (2 * eps)
        assert np.allclose(fl.eta2[:, :, j], fd2, atol=1e-6)
        fd3 = (flow(x + eps * e, 2).eta2 - flow(x - eps * e, 2).eta2) / (2 * eps)
        assert np.allclose(fl.eta3[:, :, :, j], fd3, atol=1e-5)


def test_variation_gronwall_bound():
    """sup_x |eta1| <= exp((|A| + sup|DF|) t) for the stochastic flow."""
    t, steps = 0.5, 128
    bound = math.exp((np.linalg.norm(SPEC_NL.A, 2) + SPEC_NL.F.grad_bound) * t)
    _, _, _, eta = simulate_endpoints(
        SPEC_NL, np.zeros(2), t, steps, 21, 2000, with_variation=True
    )
    norms = np.linalg.norm(eta[0], ord=2, axis=(1, 2))
    assert norms.max() <= bound * (1.0 + 1e-9)


def test_variation_along_path_matches_endpoint_variation():
    grid = PathGrid(0.4, 64)
    b = simulate_bundle(SPEC_NL, np.array([0.1, 0.2]), grid, 13, path_id=0)
    eta_b = variation_flow_along_path(SPEC_NL, b)
    _, _, _, eta = simulate_endpoints(
        SPEC_NL, np.array([0.1, 0.2]), 0.4, 64, 13, 1, with_variation=True
    )
    assert np.allclose(eta_b, eta[0, 0], atol=1e-12)


def test_plain_euler_propagates_mean_only_approximately():
    """The exponential update carries the linear flow exactly; the plain
    Euler reference discretizes it.  With (numerically) silent noise the
    endpoint means expose the difference."""
    quiet = OperatorSpec(n=2, p_tilde=1, Q0=[[1e-18]],
                         A=[[0.0, 0.0], [1.0, 1.0]], F=DriftField())
    t, steps = 1.0, 8
    x = np.array([1.0, 0.5])
    _, Xe, _ = simulate_endpoints(quiet, x, t, steps, 31, 4)
    _, Xp, _ = simulate_endpoints(quiet, x, t, steps, 31, 4, plain_euler=True)
    exact = matrix_exp(quiet.A, t) @ x
    euler = np.linalg.matrix_power(np.eye(2) + (t / steps) * np.asarray(quiet.A), steps) @ x
    assert np.allclose(Xe[0], exact, atol=1e-6)
    assert np.allclose(Xp[0], euler, atol=1e-6)
    assert np.abs(euler - exact).max() > 0.05


def test_write_path_csv_format():
    grid = PathGrid(0.1, 2)
    b = simulate_bundle(SPEC_OU, np.zeros(2), grid, 1, path_id=0)
    buf = io.StringIO()
    write_path_csv([b], buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "path_id,k,t,Z_1,Z_2,X_1,X_2,logPhi"
    assert len(lines) == 1 + 3  # header + steps + 1 rows
    first = lines[1].split(",")
    assert first[:3] == ["0", "0", "0.0"]
    # round-trip float formatting
    assert float(lines[2].split(",")[3]) == b.Z[1, 0]
