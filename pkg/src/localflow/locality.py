"""Decay-of-correlation measurements and bounds, spectral interlacing,
the bias/variance decomposition of localized reoptimization, and the
radius/time tuner.

Constants that involve a supremum over all admissible external flows are
exact for quadratic costs (the weights do not depend on b) and otherwise
replaced by sound envelopes built from the curvature bounds, with the
provenance labeled on every report.
"""

import math
from dataclasses import dataclass

import numpy as np

from .graph import geodesic_distance, induced_vertex_set
from .sensitivity import sensitivity_operator, solve_exact
from .solver import LocalizedSolver, SolverError


class LocalityError(RuntimeError):
    """Bound hypotheses violated (lambda >= 1 or rho >= 1)."""


def adjacency_slem(graph):
    """Second largest eigenvalue in magnitude of the unweighted
    vertex-vertex adjacency matrix."""
    n = graph.n_vertices
    B = np.zeros((n, n))
    B[graph.tails, graph.heads] = 1.0
    B[graph.heads, graph.tails] = 1.0
    vals = np.linalg.eigvalsh(B)
    return float(max(abs(vals[-2]), abs(vals[0]))) if n > 1 else 0.0


def _max_sqrt_inner_degree(graph, U):
    """max over v in U of sqrt(2 |N(v) ∩ U|)."""
    best = 0
    for v in U:
        best = max(best, sum(1 for w in graph.neighbors[v] if w in U))
    return math.sqrt(2.0 * best)


def _decay_constants(problem, walk, U, mode):
    """(c, lam) of the set-to-point bound for vertex set U.

    exact mode reads the weights of the supplied walk; envelope mode uses
    the curvature interval [1/beta, 1/alpha] and the interlacing bound for
    lam.
    """
    g = problem.graph
    maxsq = _max_sqrt_inner_degree(g, U)
    if mode == "exact":
        min_d = min(walk.d[v] for v in U)
        max_w = 0.0
        for k in range(g.n_edges):
            u, v = int(g.tails[k]), int(g.heads[k])
            if u in U and v in U:
                max_w = max(max_w, walk.weights[k])
        c = maxsq / min_d * max_w
        lam = walk.spectrum().lam
    else:
        bundle = problem.bundle
        min_deg = min(g.degree(v) for v in U)
        c = maxsq * bundle.Q / min_deg
        lam = envelope_lambda(problem)
    if lam >= 1.0:
        raise LocalityError(
            "decay rate bound is %.4f >= 1; use an instance with a larger "
            "spectral gap" % lam)
    return c, lam


def envelope_lambda(problem):
    """Interlacing-based upper bound on the walk's second eigenvalue in
    magnitude, uniform over b."""
    degs = problem.graph.degrees()
    k_plus, k_minus = int(degs.max()), int(degs.min())
    mu = adjacency_slem(problem.graph)
    Q = problem.bundle.Q
    return Q * k_plus / k_minus - 1.0 + Q * mu / k_minus


def _constants_mode(problem):
    return "exact" if problem.bundle.all_quadratic else "envelope"


@dataclass
class DecayRow:
    edge_ids: tuple
    distance: int
    measured: float
    bound: float
    c: float


@dataclass
class DecayReport:
    rows: list
    lam: float
    constants_mode: str
    p_norm_Z: float


def measure_decay(problem, pert, F_sets):
    """Measured correlation norm and spectral bound for each edge set F.

    The measured value is the localized l2-norm of the optimal-flow
    derivative for the perturbation; the bound is c * lam^d / (1 - lam)
    times the perturbation norm on its support.
    """
    mode = _constants_mode(problem)
    op = sensitivity_operator(problem)
    deriv = op.apply(pert.p)
    Z = sorted(pert.support)
    p_norm = float(np.linalg.norm(pert.p[Z])) if Z else 0.0
    g = problem.graph
    rows = []
    lam_out = None
    for F in F_sets:
        idx = [g.edge_index[e] if isinstance(e, str) else int(e) for e in F]
        if not idx:
            raise LocalityError("empty edge set in decay sweep")
        U = induced_vertex_set(g, idx)
        dist = geodesic_distance(g, U, Z) if Z else 0
        c, lam = _decay_constants(problem, op.walk, U, mode)
        lam_out = lam
        measured = float(np.linalg.norm(deriv[idx]))
        bound = c * lam ** dist / (1.0 - lam) * p_norm
        rows.append(DecayRow(tuple(g.edges[k][0] for k in idx),
                             dist, measured, bound, c))
    return DecayReport(rows, lam_out, mode, p_norm)


def _edge_perturbation(problem, e):
    g = problem.graph
    k = g.edge_index[e] if isinstance(e, str) else int(e)
    p = np.zeros(g.n_vertices)
    p[g.tails[k]] = 1.0
    p[g.heads[k]] = -1.0
    return k, p


def set_to_point(problem, e, F):
    """Effect of a single edge perturbation on an edge set F: measured
    norm and the cardinality-free bound sqrt(2) c lam^d / (1 - lam)."""
    mode = _constants_mode(problem)
    g = problem.graph
    k, p = _edge_perturbation(problem, e)
    op = sensitivity_operator(problem)
    deriv = op.apply(p)
    idx = [g.edge_index[f] if isinstance(f, str) else int(f) for f in F]
    U = induced_vertex_set(g, idx)
    dist = geodesic_distance(g, U, {int(g.tails[k]), int(g.heads[k])})
    c, lam = _decay_constants(problem, op.walk, U, mode)
    measured = float(np.linalg.norm(deriv[idx]))
    bound = math.sqrt(2.0) * c * lam ** dist / (1.0 - lam)
    return measured, bound


def point_to_set(problem, f, F):
    """Aggregate effect of perturbations along every edge in F on the
    single edge f, with the symmetric bound."""
    mode = _constants_mode(problem)
    g = problem.graph
    kf, _ = _edge_perturbation(problem, f)
    w_idx, z_idx = int(g.tails[kf]), int(g.heads[kf])
    op = sensitivity_operator(problem)
    # derivative at edge f under the perturbation of edge e equals
    # W_wz (e_u - e_v)^T L^+ (e_w - e_z), symmetric in the L^+ kernel
    pot = op.walk.pinv() @ (np.eye(g.n_vertices)[w_idx]
                            - np.eye(g.n_vertices)[z_idx])
    w_f = op.walk.weights[kf]
    idx = [g.edge_index[e] if isinstance(e, str) else int(e) for e in F]
    vals = np.array([w_f * (pot[g.tails[k]] - pot[g.heads[k]]) for k in idx])
    measured = float(np.linalg.norm(vals))

    U = induced_vertex_set(g, idx)
    maxsq = _max_sqrt_inner_degree(g, U)
    if mode == "exact":
        c_prime = (w_f * maxsq
                   / math.sqrt(min(op.walk.d[w_idx], op.walk.d[z_idx]))
                   / math.sqrt(min(op.walk.d[v] for v in U)))
        lam = op.walk.spectrum().lam
    else:
        Q = problem.bundle.Q
        min_deg_f = min(g.degree(w_idx), g.degree(z_idx))
        min_deg_U = min(g.degree(v) for v in U)
        c_prime = Q * maxsq / math.sqrt(min_deg_f * min_deg_U)
        lam = envelope_lambda(problem)
    if lam >= 1.0:
        raise LocalityError("decay rate bound is >= 1")
    dist = geodesic_distance(g, U, {w_idx, z_idx})
    bound = math.sqrt(2.0) * c_prime * lam ** dist / (1.0 - lam)
    return measured, bound


def interlacing_bound(graph, sub_walk, w_minus, w_plus):
    """Second eigenvalue in magnitude of a weighted subgraph walk and its
    interlacing bound from the unweighted full-graph adjacency."""
    if w_minus <= 0 or w_plus < w_minus:
        raise LocalityError("need 0 < w_minus <= w_plus")
    wts = sub_walk.weights
    if np.any(wts < w_minus - 1e-12) or np.any(wts > w_plus + 1e-12):
        raise LocalityError("subgraph weight outside [w_minus, w_plus]")
    degs = graph.degrees()
    k_plus, k_minus = int(degs.max()), int(degs.min())
    mu = adjacency_slem(graph)
    lam_prime = sub_walk.spectrum().lam
    bound = (w_plus * k_plus) / (w_minus * k_minus) - 1.0 \
        + w_plus / (w_minus * k_minus) * mu
    # the negative-end estimate behind the bound needs the subgraph to
    # keep weighted degrees at least w_minus * k_minus; a subgraph that
    # thins a vertex down (say a near-bipartite tree-like ball) can push
    # an eigenvalue toward -1 and break the inequality
    if lam_prime > bound + 1e-10:
        min_wdeg = float(sub_walk.d.min())
        raise LocalityError(
            "interlacing bound %.6f violated by lambda' = %.6f; the bound "
            "requires min weighted subgraph degree >= w_minus*k_minus = "
            "%.6f but it is %.6f"
            % (bound, lam_prime, w_minus * k_minus, min_wdeg))
    return lam_prime, bound


@dataclass
class ErrorBudget:
    """Constants of the localized-algorithm error bounds."""
    k_plus: int
    k_minus: int
    mu: float
    Q: float
    rho: float
    c: float
    gamma: float
    constants_mode: str

    @property
    def valid(self):
        return self.rho < 1.0

    def bias_bound(self, p_norm, dist, whole_graph):
        if whole_graph:
            return 0.0
        if not self.valid:
            return math.inf
        return p_norm * self.gamma * self.rho ** dist / (1.0 - self.rho) ** 2

    def variance_bound(self, p_norm, t):
        if not self.valid:
            return math.inf
        return p_norm * self.c * math.exp(-t / (2.0 * self.Q)) \
            / (1.0 - self.rho)


def budget_for(problem):
    degs = problem.graph.degrees()
    k_plus, k_minus = int(degs.max()), int(degs.min())
    mu = adjacency_slem(problem.graph)
    Q = problem.bundle.Q
    rho = Q * k_plus / k_minus - 1.0 + Q * mu / k_minus
    c = math.sqrt(2.0 * k_plus) * Q / k_minus
    gamma = c * (1.0 + c * math.sqrt(max(k_plus - 1, 0)))
    return ErrorBudget(k_plus, k_minus, mu, Q, rho, c, gamma,
                       _constants_mode(problem))


@dataclass
class BiasVarianceResult:
    bias: np.ndarray
    variance: np.ndarray
    error: np.ndarray
    boundary_distance: int
    bias_bound: float
    variance_bound: float
    budget: ErrorBudget


def bias_variance(problem, pert, sub, t, x_star_base=None):
    """Exact bias/variance split of the localized warm-start error.

    Bias compares the full perturbed optimum with the localized fixed
    point (restricted exact solve); variance is the remaining iteration
    error after t localized steps.
    """
    if not pert.support <= sub.vertex_set:
        raise LocalityError("perturbation support not inside the subgraph")
    if x_star_base is None:
        x_star_base = solve_exact(problem)
    x_pert = solve_exact(problem.with_b(problem.b + pert.p))
    budget = budget_for(problem)
    p_norm = float(np.linalg.norm(pert.p))

    if not np.any(pert.p):
        zeros = np.zeros(problem.graph.n_edges)
        return BiasVarianceResult(zeros, zeros.copy(), zeros.copy(), 0,
                                  0.0, budget.variance_bound(0.0, t), budget)

    b_target = problem.b + pert.p
    try:
        local = LocalizedSolver(problem, sub)
    except SolverError:
        raise LocalityError("subgraph has no edges to update")
    limit = local.restricted_optimum(x_star_base, b_target)
    iterate = local.run(x_star_base.copy(), b_target, t)
    bias = x_pert - limit
    variance = limit - iterate
    error = bias + variance

    if sub.boundary and pert.support:
        dist = geodesic_distance(problem.graph, sub.boundary, pert.support)
    else:
        dist = 0
    return BiasVarianceResult(
        bias, variance, error, dist,
        budget.bias_bound(p_norm, dist, sub.is_whole_graph),
        budget.variance_bound(p_norm, t), budget)


@dataclass
class TunerFamily:
    """Regular-expander family parameters driving the radius/time tuner."""
    Q: float
    k: int
    mu: float
    z: int = 1
    p_norm: float = 1.0
    omega: float = 3.0


@dataclass
class TuneResult:
    r: int
    t: int
    predicted_cost: float
    rho: float
    nu_bias: float
    xi_bias: float
    nu_var: float
    xi_var: float
    ball_size_bound: float


def tune(family, eps):
    """Minimal radius and iteration count meeting an eps/2 budget split.

    r and t come from the closed-form ceilings of the exponential bias and
    variance envelopes; both are floored at 1. The predicted cost uses the
    k^r bound on the ball size with a configurable exponent.
    """
    if eps <= 0:
        raise LocalityError("accuracy target must be positive")
    Q, k, mu, z = family.Q, family.k, family.mu, family.z
    rho = Q - 1.0 + Q * mu / k
    if rho >= 1.0:
        raise LocalityError("budget invalid: rho = %.4f >= 1" % rho)
    c = math.sqrt(2.0) * Q / math.sqrt(k)
    gamma = c * (1.0 + c * math.sqrt(max(k - 1, 0)))
    nu_bias = family.p_norm * gamma / ((1.0 - rho) ** 2 * rho ** z)
    xi_bias = math.log(1.0 / rho)
    nu_var = family.p_norm * c / (1.0 - rho)
    xi_var = 1.0 / (2.0 * Q)
    r = max(1, math.ceil(math.log(2.0 * nu_bias / eps) / xi_bias))
    t = max(1, math.ceil(2.0 * Q * math.log(2.0 * nu_var / eps)))
    try:
        ball = float(k) ** r
        cost = ball ** family.omega * t
    except OverflowError:
        ball = math.inf
        cost = math.inf
    return TuneResult(r, t, cost, rho, nu_bias, xi_bias, nu_var, xi_var, ball)
