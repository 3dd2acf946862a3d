"""Projected gradient descent and its localized, frozen-boundary variant.

The localized map updates only the flows inside a subgraph; the flows on
complement edges act as boundary conditions and must already satisfy the
conservation constraints outside the subgraph.
"""

from dataclasses import dataclass

import numpy as np

from .laplacian import pseudoinverse
from .sensitivity import FlowProblem, SensitivityError, solve_exact

FEAS_TOL = 1e-9


class SolverError(RuntimeError):
    """Infeasible input or inconsistent boundary data."""


@dataclass
class PgdConfig:
    eta: float = None          # defaults to 1/beta of the problem's bundle
    max_iter: int = 10_000
    tol: float = 1e-10
    trace: bool = False

    def __post_init__(self):
        if self.eta is not None and self.eta <= 0:
            raise SolverError("step size must be positive")
        if self.tol <= 0:
            raise SolverError("tolerance must be positive")


class Projector:
    """Orthogonal projection onto {u : Au = b}; the pieces depending only
    on A are computed once and reused for every b."""

    def __init__(self, A):
        self.A = A
        self.AAt_pinv = pseudoinverse(A @ A.T)
        self.lift = A.T @ self.AAt_pinv      # A^T (A A^T)^+

    def project(self, v, b):
        return v - self.lift @ (self.A @ v - b)

    def null_component(self, v):
        return v - self.lift @ (self.A @ v)


def _projector(problem):
    # cached on the graph: the projector depends only on the incidence
    # matrix, which the immutable graph determines
    proj = getattr(problem.graph, "_flow_projector", None)
    if proj is None:
        proj = Projector(problem.A)
        problem.graph._flow_projector = proj
    return proj


def pgd_step(problem, x, eta=None):
    """One projected-gradient iteration at a feasible point."""
    if eta is None:
        eta = 1.0 / problem.bundle.beta
    feas = float(np.abs(problem.A @ x - problem.b).max())
    if feas > FEAS_TOL:
        raise SolverError("infeasible iterate: |Ax-b| = %.3e" % feas)
    v = x - eta * problem.bundle.gradient(x)
    return _projector(problem).project(v, problem.b)


def pgd_run(problem, x0, config=None):
    """Iterate the projected gradient map until the projected gradient is
    small or the iteration cap is hit. Returns (x, trace)."""
    config = config or PgdConfig()
    eta = config.eta or 1.0 / problem.bundle.beta
    x = np.asarray(x0, dtype=float).copy()
    trace = []
    for _ in range(config.max_iter):
        grad = problem.bundle.gradient(x)
        pg = _projector(problem).null_component(grad)
        if config.trace:
            trace.append(float(np.linalg.norm(pg)))
        if np.abs(pg).max() <= config.tol:
            break
        x = pgd_step(problem, x, eta)
    return x, trace


class LocalizedSolver:
    """Frozen-boundary projected gradient descent on a subgraph.

    Projection matrices for the restricted incidence matrix are computed
    once per (problem, subgraph) pair and reused across iterations.
    """

    def __init__(self, problem, sub):
        if sub.graph is not problem.graph:
            raise SolverError("subgraph does not belong to the problem graph")
        self.problem = problem
        self.sub = sub
        self.v_in = sub.sorted_vertices()
        self.e_in = sub.sorted_edges()
        self.e_out = sub.sorted_edge_complement()
        self.v_out = sorted(sub.vertex_complement)
        if not self.e_in:
            raise SolverError("subgraph has no edges to update")
        A = problem.A
        self.A_sub = A[np.ix_(self.v_in, self.e_in)]
        self.A_cross = A[np.ix_(self.v_in, self.e_out)]
        self.A_out = A[np.ix_(self.v_out, self.e_out)]
        pinv = pseudoinverse(self.A_sub @ self.A_sub.T)
        self.lift = self.A_sub.T @ pinv
        self.Pi = np.eye(len(self.e_in)) - self.lift @ self.A_sub

    def check_boundary(self, x, b_target):
        """Frozen components must satisfy the complement constraints."""
        if not self.v_out:
            return
        res = self.A_out @ x[self.e_out] - b_target[self.v_out]
        worst = float(np.abs(res).max())
        if worst > FEAS_TOL:
            raise SolverError(
                "boundary flows violate constraints: max residual %.3e"
                % worst)

    def restricted_b(self, x, b_target):
        b_in = b_target[self.v_in].copy()
        if self.e_out:
            b_in -= self.A_cross @ x[self.e_out]
        return b_in

    def step(self, x, b_target, eta=None):
        """One localized iteration; complement components pass through."""
        if eta is None:
            eta = 1.0 / self.problem.bundle.beta
        self.check_boundary(x, b_target)
        grads = self.problem.bundle.gradient(x)[self.e_in]
        xi = x[self.e_in]
        b_in = self.restricted_b(x, b_target)
        new_in = self.Pi @ (xi - eta * grads) + self.lift @ b_in
        out = x.copy()
        out[self.e_in] = new_in
        return out

    def run(self, x, b_target, t, eta=None, collect=None):
        for _ in range(int(t)):
            x = self.step(x, b_target, eta)
            if collect is not None:
                collect(x)
        return x

    def restricted_problem(self, x, b_target):
        """Exact restricted instance whose optimum is the localized
        fixed point: subgraph costs with the boundary inflow folded
        into b."""
        from .graph import DirectedGraph
        from .objective import ObjectiveBundle
        g = self.problem.graph
        verts = [g.vertices[v] for v in self.v_in]
        edges = [g.edges[e] for e in self.e_in]
        sub_graph = DirectedGraph(verts, edges)
        sub_bundle = ObjectiveBundle(
            [self.problem.bundle.costs[e] for e in self.e_in])
        b_in = self.restricted_b(x, b_target)
        return FlowProblem(sub_graph, sub_bundle, b_in)

    def restricted_optimum(self, x, b_target):
        """Limit of the localized iteration, via an exact restricted
        solve; complement components stay frozen."""
        sub_prob = self.restricted_problem(x, b_target)
        x_sub = solve_exact(sub_prob)
        out = x.copy()
        out[self.e_in] = x_sub
        return out


def localized_pgd_step(problem, sub, x, b_target=None, eta=None):
    if b_target is None:
        b_target = problem.b
    return LocalizedSolver(problem, sub).step(np.asarray(x, dtype=float),
                                              b_target, eta)


def warm_start_reoptimize(problem, pert, sub, t, x_star=None, eta=None,
                          collect=None):
    """Run t localized iterations toward x*(b + p) from the warm start
    x*(b), freezing the complement flows as boundary conditions."""
    if not pert.support <= sub.vertex_set:
        raise SolverError("perturbation support not inside the subgraph")
    if x_star is None:
        x_star = solve_exact(problem)
    try:
        local = LocalizedSolver(problem, sub)
    except SolverError:
        if np.any(pert.p):
            raise
        return np.asarray(x_star, dtype=float).copy()
    b_target = problem.b + pert.p
    return local.run(np.asarray(x_star, dtype=float).copy(), b_target, t,
                     eta, collect)
