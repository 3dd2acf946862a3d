import numpy as np
import pytest

from localflow import (DirectedGraph, EdgeCost, FlowProblem, ObjectiveBundle,
                       PerturbationSpec, SensitivityError,
                       boundary_sensitivity_check, build_incidence,
                       directional_derivative, gaussian_identity_check,
                       generate, generic_sensitivity_matrix,
                       integrate_sensitivity, pseudoinverse,
                       sensitivity_operator, solve_exact)
from conftest import (logcosh_bundle, path, quadratic_problem,
                      random_balanced, random_connected_graph, triangle)


def test_flow_problem_rejects_unbalanced():
    g = path(2)
    bundle = ObjectiveBundle.uniform_quadratic(1)
    with pytest.raises(SensitivityError, match="not balanced"):
        FlowProblem(g, bundle, np.array([1.0, 0.0]))


def test_perturbation_support_and_balance():
    g = triangle()
    pert = PerturbationSpec(g, np.array([1.0, -1.0, 0.0]))
    assert pert.support == {0, 1}
    with pytest.raises(SensitivityError, match="not balanced"):
        PerturbationSpec(g, np.array([1.0, 0.0, 0.0]))
    # zero perturbation is the degenerate no-op
    assert PerturbationSpec(g, np.zeros(3)).support == frozenset()


def test_solve_exact_forced_edge():
    g = path(2)
    problem = quadratic_problem(g, np.array([1.0, -1.0]))
    assert solve_exact(problem) == pytest.approx([1.0])


def test_solve_exact_triangle_least_norm():
    problem = quadratic_problem(triangle(), np.array([1.0, -1.0, 0.0]))
    x = solve_exact(problem)
    assert np.allclose(x, [2.0 / 3, -1.0 / 3, -1.0 / 3], atol=1e-12)
    # cross-check against the independent least-norm formula
    A = problem.A
    oracle = A.T @ (pseudoinverse(A @ A.T) @ problem.b)
    assert np.allclose(x, oracle, atol=1e-12)


def test_solve_exact_zero_b():
    g = triangle()
    problem = quadratic_problem(g, np.zeros(3))
    assert np.abs(solve_exact(problem)).max() < 1e-12


def test_solve_exact_quadratic_with_linear_terms(rng):
    g = random_connected_graph(rng, 12, extra_edges=6)
    costs = [EdgeCost("quadratic", a=float(rng.uniform(0.5, 2.0)),
                      c=float(rng.uniform(-1, 1))) for _ in range(g.n_edges)]
    problem = FlowProblem(g, ObjectiveBundle(costs),
                          random_balanced(rng, g.n_vertices))
    x = solve_exact(problem)
    assert np.abs(problem.A @ x - problem.b).max() < 1e-9
    grad = problem.bundle.gradient(x)
    assert np.abs(problem.project_gradient(grad)).max() < 1e-8


def test_solve_exact_logcosh_kkt(rng):
    g = random_connected_graph(rng, 15, extra_edges=8)
    problem = FlowProblem(g, logcosh_bundle(rng, g.n_edges),
                          random_balanced(rng, g.n_vertices, scale=2.0))
    x = solve_exact(problem)
    assert np.abs(problem.A @ x - problem.b).max() < 1e-9
    assert np.abs(problem.project_gradient(
        problem.bundle.gradient(x))).max() < 1e-8


def test_operator_quadratic_is_unweighted_pinv_form():
    problem = quadratic_problem(triangle(), np.array([1.0, -1.0, 0.0]))
    op = sensitivity_operator(problem)
    A = problem.A
    expected = A.T @ pseudoinverse(A @ A.T)
    assert np.allclose(op.matrix, expected, atol=1e-10)


def test_operator_derivative_is_feasible(rng):
    g = random_connected_graph(rng, 20, extra_edges=10)
    problem = FlowProblem(g, logcosh_bundle(rng, g.n_edges),
                          random_balanced(rng, g.n_vertices))
    op = sensitivity_operator(problem)
    for _ in range(5):
        p = random_balanced(rng, g.n_vertices)
        d = op.apply(p)
        assert np.abs(problem.A @ d - p).max() < 1e-8


def test_operator_matches_central_difference(rng):
    g = random_connected_graph(rng, 10, extra_edges=5)
    problem = FlowProblem(g, logcosh_bundle(rng, g.n_edges),
                          random_balanced(rng, g.n_vertices))
    p = random_balanced(rng, g.n_vertices)
    d = sensitivity_operator(problem).apply(p)
    h = 1e-5
    plus = solve_exact(problem.with_b(problem.b + h * p), tol=1e-13)
    minus = solve_exact(problem.with_b(problem.b - h * p), tol=1e-13)
    fd = (plus - minus) / (2 * h)
    assert np.abs(d - fd).max() <= 1e-4 * max(1.0, np.abs(d).max())


def test_directional_derivative_forced_edge():
    g = path(2)
    problem = quadratic_problem(g, np.array([0.5, -0.5]))
    pert = PerturbationSpec(g, np.array([1.0, -1.0]))
    for eps in (0.0, 0.3):
        d = directional_derivative(problem, pert, eps)
        assert d == pytest.approx([1.0])


def test_directional_derivative_triangle_linearity():
    problem = quadratic_problem(triangle(), np.array([0.0, 0.0, 0.0]))
    pert = PerturbationSpec(problem.graph, np.array([1.0, -1.0, 0.0]))
    d = directional_derivative(problem, pert)
    assert np.allclose(d, [2.0 / 3, -1.0 / 3, -1.0 / 3], atol=1e-10)


def test_quadratic_derivative_independent_of_eps(rng):
    g = random_connected_graph(rng, 10, extra_edges=4)
    problem = quadratic_problem(g, random_balanced(rng, g.n_vertices), a=1.5)
    pert = PerturbationSpec(g, random_balanced(rng, g.n_vertices))
    d0 = directional_derivative(problem, pert, 0.0)
    d1 = directional_derivative(problem, pert, 0.7)
    assert np.allclose(d0, d1, atol=1e-10)


def test_laplacian_vs_series_form(rng):
    count = 0
    while count < 5:
        g = random_connected_graph(rng, 14, extra_edges=10)
        problem = FlowProblem(g, logcosh_bundle(rng, g.n_edges),
                              random_balanced(rng, g.n_vertices))
        op = sensitivity_operator(problem)
        if not op.walk.is_aperiodic():
            continue
        count += 1
        p = random_balanced(rng, g.n_vertices)
        assert np.abs(op.apply(p) - op.apply_series(p)).max() < 1e-8


def test_integrate_sensitivity_quadratic_exact(rng):
    g = random_connected_graph(rng, 12, extra_edges=6)
    problem = quadratic_problem(g, random_balanced(rng, g.n_vertices), a=2.0)
    b_to = random_balanced(rng, g.n_vertices)
    integral = integrate_sensitivity(problem, problem.b, b_to, n_steps=1)
    diff = solve_exact(problem.with_b(b_to)) - solve_exact(problem)
    assert np.allclose(integral, diff, atol=1e-9)


def test_integrate_sensitivity_same_endpoints():
    problem = quadratic_problem(triangle(), np.array([1.0, -1.0, 0.0]))
    out = integrate_sensitivity(problem, problem.b, problem.b)
    assert np.abs(out).max() == 0.0


def test_integrate_sensitivity_logcosh_triangle():
    g = triangle()
    rng = np.random.default_rng(21)
    problem = FlowProblem(g, logcosh_bundle(rng, 3),
                          np.array([1.0, -0.4, -0.6]))
    b_to = np.array([-0.5, 1.2, -0.7])
    integral = integrate_sensitivity(problem, problem.b, b_to, n_steps=16)
    diff = solve_exact(problem.with_b(b_to)) - solve_exact(problem)
    rel = np.abs(integral - diff).max() / max(1.0, np.abs(diff).max())
    assert rel < 1e-6


def test_generic_sensitivity_full_rank():
    A = np.array([[1.0, 1.0]])
    D = generic_sensitivity_matrix([1.0, 1.0], A)
    assert np.allclose(D, [[0.5], [0.5]], atol=1e-12)


def test_gaussian_identity_simple_and_random(rng):
    assert gaussian_identity_check(np.eye(2), np.array([[1.0, 1.0]])) < 1e-12
    assert gaussian_identity_check(np.eye(3), np.eye(3)) < 1e-12
    for _ in range(5):
        M = rng.standard_normal((6, 6))
        Sigma = M @ M.T + 6 * np.eye(6)
        A = rng.standard_normal((4, 6))
        assert gaussian_identity_check(Sigma, A) < 1e-10


def test_gaussian_identity_rejects_rank_deficient():
    A = np.array([[1.0, 1.0], [2.0, 2.0]])
    with pytest.raises(SensitivityError, match="full row rank"):
        gaussian_identity_check(np.eye(2), A)


def test_boundary_sensitivity_two_by_two():
    H = np.array([[2.0, 1.0], [1.0, 2.0]])
    block_dev, fd_dev = boundary_sensitivity_check(H, [0], [1])
    assert block_dev < 1e-12
    assert fd_dev < 1e-5
    Sigma = np.linalg.inv(H)
    value = Sigma[0, 1] / Sigma[1, 1]
    assert value == pytest.approx(-0.5, abs=1e-12)


def test_boundary_sensitivity_diagonal_decouples():
    H = np.diag([1.0, 2.0, 3.0, 4.0])
    Sigma = np.linalg.inv(H)
    lhs = Sigma[np.ix_([0, 1], [2, 3])] @ np.linalg.inv(
        Sigma[np.ix_([2, 3], [2, 3])])
    assert np.abs(lhs).max() == 0.0
    block_dev, _ = boundary_sensitivity_check(H, [0, 1], [2, 3])
    assert block_dev < 1e-12


def test_boundary_sensitivity_random(rng):
    for _ in range(5):
        M = rng.standard_normal((6, 6))
        H = M @ M.T + 6 * np.eye(6)
        block_dev, fd_dev = boundary_sensitivity_check(H, [0, 2, 4], [1, 3, 5])
        assert block_dev < 1e-10
        assert fd_dev < 1e-5


def test_boundary_sensitivity_rejects_bad_partition():
    with pytest.raises(SensitivityError, match="partition"):
        boundary_sensitivity_check(np.eye(3), [0], [1])


def test_operator_dense_matrix_guard():
    g = generate("random-k-regular", n=600, k=3, seed=3)
    problem = quadratic_problem(g, np.zeros(g.n_vertices))
    op = sensitivity_operator(problem, x_star=np.zeros(g.n_edges))
    with pytest.raises(SensitivityError, match="dense operator disabled"):
        op.matrix
