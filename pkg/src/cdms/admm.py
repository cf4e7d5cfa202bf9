"""ADMM solver for multi-level transfer subspace learning.

Each layer ``l`` carries source/target deep-NMF factors and a coefficient
matrix ``Z[l]`` (n_s x n) that reconstructs ``[H_s, H_t]`` from the source
codes ``H_s``. Splitting variables: ``J[l]`` (copy of ``Z[l]``) and ``E[l]``
(column-sparse reconstruction error), with constraints

    [H_s, H_t] - H_s J - E = 0        (multiplier Lam1)
    Z - J = 0                         (multiplier Lam2)

``J`` carries the reconstruction constraint; ``Z`` carries the simplex
constraint, the HSIC diversity penalty and the temporal Laplacian.
"""

import logging
import time
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from cdms.exceptions import DivergenceError
from cdms.hsic import diversity_kernel
from cdms.pretrain import EPS_DENOM, LayerStack, pretrain_stack
from cdms.prox import project_columns_simplex, prox_l21
from cdms.temporal_graph import TemporalGraph, build_weight_matrix, laplacian_quadratic
from cdms.tensor_io import SolverConfig

log = logging.getLogger(__name__)


@dataclass
class TransferProblem:
    X_s: np.ndarray
    X_t: np.ndarray
    source_labels: np.ndarray
    graph: TemporalGraph
    config: SolverConfig

    @property
    def n_s(self):
        return self.X_s.shape[1]

    @property
    def n_t(self):
        return self.X_t.shape[1]


def make_problem(X_s, X_t, source_labels, config):
    """Validate inputs and build the temporal graph."""
    X_s = np.asarray(X_s, dtype=np.float64)
    X_t = np.asarray(X_t, dtype=np.float64)
    if X_s.shape[0] != X_t.shape[0]:
        raise ValueError(
            f"source and target feature dimensions differ: {X_s.shape[0]} vs {X_t.shape[0]}"
        )
    for name, X in (("source", X_s), ("target", X_t)):
        if not np.all(np.isfinite(X)):
            raise ValueError(f"{name} features contain non-finite values")
        if np.any(X < 0):
            raise ValueError(f"{name} features contain negative values")
    d = X_s.shape[0]
    n_min = min(X_s.shape[1], X_t.shape[1])
    if config.layer_dims[0] > min(d, n_min):
        raise ValueError(
            f"first layer dimension {config.layer_dims[0]} exceeds min(d, n) = {min(d, n_min)}"
        )
    labels = np.asarray(source_labels, dtype=np.int64)
    graph = build_weight_matrix(X_s.shape[1], X_t.shape[1], labels, config.tau)
    return TransferProblem(X_s, X_t, labels, graph, config)


@dataclass
class SolverState:
    src: LayerStack
    tgt: LayerStack
    Z: list
    J: list
    E: list
    Lam1: list
    Lam2: list
    mu: float
    iter: int = 0

    def H_all(self, l):
        return np.hstack([self.src.H[l], self.tgt.H[l]])


@dataclass
class SolverOutput:
    Z: list
    residual_log: list = field(default_factory=list)
    converged: bool = False
    iters_run: int = 0
    state: SolverState = None
    wall_time: float = 0.0

    @property
    def objective(self):
        return self.residual_log[-1][3] if self.residual_log else float("nan")


def balance_scales(stack):
    """Give every basis column unit norm, moving the scale into the codes.

    Products ``D[0] ... D[l] H[l]`` are unchanged; codes at every depth stay at
    the data's magnitude instead of shrinking layer by layer.
    """
    carry = np.ones(stack.D[0].shape[0])
    for l in range(stack.n_layers):
        D = stack.D[l] * carry[:, None]
        norms = np.linalg.norm(D, axis=0)
        norms[norms == 0] = 1.0
        stack.D[l] = D / norms
        stack.H[l] = stack.H[l] * norms[:, None]
        carry = norms
    return stack


def init_state(problem: TransferProblem) -> SolverState:
    cfg = problem.config
    src = pretrain_stack(problem.X_s, cfg.layer_dims, cfg.pretrain_iters, cfg.seed)
    tgt = pretrain_stack(problem.X_t, cfg.layer_dims, cfg.pretrain_iters, cfg.seed)
    balance_scales(src)
    balance_scales(tgt)
    n_s, n = problem.n_s, problem.n_s + problem.n_t
    Z, J, E, Lam1, Lam2 = [], [], [], [], []
    for dl in cfg.layer_dims:
        z = np.full((n_s, n), 1.0 / n_s)
        Z.append(z)
        J.append(z.copy())
        E.append(np.zeros((dl, n)))
        Lam1.append(np.zeros((dl, n)))
        Lam2.append(np.zeros((n_s, n)))
    return SolverState(src, tgt, Z, J, E, Lam1, Lam2, mu=cfg.mu0)


def prefix_product(D, l):
    """``D[0] @ ... @ D[l-1]``; identity (size rows of ``D[0]``) for ``l = 0``."""
    out = np.eye(D[0].shape[0])
    for Dm in D[:l]:
        out = out @ Dm
    return out


def suffix_product(D, l):
    """``D[l+1] @ ... @ D[-1]``; identity (size cols of ``D[l]``) for the last layer."""
    out = np.eye(D[l].shape[1])
    for Dm in D[l + 1 :]:
        out = out @ Dm
    return out


def _ratio(numer, denom):
    return np.maximum(numer, 0.0) / np.maximum(denom, EPS_DENOM)


def update_basis(state, problem, domain, l):
    """Multiplicative update of ``D^(l)`` for one domain.

    The consistency penalty ``alpha ||D_s - D_t||^2`` pulls each domain's
    basis towards the other's current value.
    """
    if domain == "source":
        stack, other, X = state.src, state.tgt, problem.X_s
    elif domain == "target":
        stack, other, X = state.tgt, state.src, problem.X_t
    else:
        raise ValueError(f"unknown domain {domain!r}")
    alpha = problem.config.alpha
    D = stack.D[l]
    theta = prefix_product(stack.D, l)
    omega = suffix_product(stack.D, l)
    HL = stack.H[-1]
    B = omega @ HL  # d_l x n
    numer = theta.T @ (X @ B.T) + alpha * other.D[l]
    denom = (theta.T @ theta) @ D @ (B @ B.T) + alpha * D
    return D * _ratio(numer, denom)


def _split(M):
    return np.maximum(M, 0.0), np.maximum(-M, 0.0)


def update_representation_source(state, problem, l):
    """Multiplicative update of ``H_s^(l)`` from the source block of constraint 1.

    Mixed-sign terms of the gradient are split into positive and negative
    parts (``L_s = C_s - S_s`` included) so numerator and denominator stay
    nonnegative; the stationary points are those of the unsplit rule.
    """
    cfg = problem.config
    n_s = problem.n_s
    mu = state.mu
    H = state.src.H[l]
    theta = prefix_product(state.src.D, l + 1)
    I_minus_J = np.eye(n_s) - state.J[l][:, :n_s]
    E_s = state.E[l][:, :n_s]
    Lam_s = state.Lam1[l][:, :n_s]
    Q_pos, Q_neg = _split((E_s - Lam_s / mu) @ I_minus_J.T)
    P_pos, P_neg = _split(I_minus_J @ I_minus_J.T)
    g = problem.graph
    S_s = g.S[:n_s, :n_s]
    deg_s = np.diag(g.C)[:n_s]
    numer = 2.0 * theta.T @ problem.X_s + mu * (Q_pos + H @ P_neg) + 2.0 * cfg.gamma * H @ S_s
    denom = (
        2.0 * (theta.T @ theta) @ H
        + mu * (Q_neg + H @ P_pos)
        + 2.0 * cfg.gamma * H * deg_s[None, :]
    )
    return H * _ratio(numer, denom)


def update_representation_target(state, problem, l):
    """Multiplicative update of ``H_t^(l)`` from the target block of constraint 1."""
    n_s = problem.n_s
    mu = state.mu
    H = state.tgt.H[l]
    theta = prefix_product(state.tgt.D, l + 1)
    J_t = state.J[l][:, n_s:]
    E_t = state.E[l][:, n_s:]
    Lam_t = state.Lam1[l][:, n_s:]
    R_pos, R_neg = _split(state.src.H[l] @ J_t + E_t - Lam_t / mu)
    numer = 2.0 * theta.T @ problem.X_t + mu * R_pos
    denom = 2.0 * (theta.T @ theta) @ H + mu * (H + R_neg)
    return H * _ratio(numer, denom)


def update_auxiliary_j(state, problem, l):
    """Exact minimizer of the J-subproblem via an SPD solve.

    ``(H_s^T H_s + I) J = H_s^T A + Z + Lam2/mu`` with
    ``A = [H_s, H_t] - E + Lam1/mu``.
    """
    mu = state.mu
    Hs = state.src.H[l]
    A = state.H_all(l) - state.E[l] + state.Lam1[l] / mu
    G = Hs.T @ Hs
    G[np.diag_indices_from(G)] += 1.0
    rhs = Hs.T @ A + state.Z[l] + state.Lam2[l] / mu
    return linalg.solve(G, rhs, assume_a="pos")


def z_system(state, problem, l):
    """Matrix ``2 beta K + 2 gamma L + mu I`` and right-hand side ``mu J - Lam2``."""
    cfg = problem.config
    mu = state.mu
    n = problem.n_s + problem.n_t
    Q = 2.0 * cfg.gamma * problem.graph.L
    if cfg.beta != 0 and len(state.Z) > 1:
        Q = Q + 2.0 * cfg.beta * diversity_kernel(l, state.Z)
    Q[np.diag_indices(n)] += mu
    rhs = mu * state.J[l] - state.Lam2[l]
    return Q, rhs


def unconstrained_z(state, problem, l):
    Q, rhs = z_system(state, problem, l)
    # Z Q = rhs with Q symmetric  <=>  Q Z^T = rhs^T
    return linalg.solve(Q, rhs.T, assume_a="pos").T


def update_coefficients_z(state, problem, l):
    """Minimize the Z-subproblem without constraints, then project onto the simplex."""
    return project_columns_simplex(unconstrained_z(state, problem, l))


def update_error_e(state, problem, l):
    mu = state.mu
    G = state.H_all(l) - state.src.H[l] @ state.J[l] + state.Lam1[l] / mu
    return prox_l21(G, 1.0 / mu).value


def constraint_residuals(state, l):
    R1 = state.H_all(l) - state.src.H[l] @ state.J[l] - state.E[l]
    R2 = state.Z[l] - state.J[l]
    return R1, R2


def update_multipliers(state, problem):
    """Dual ascent on both constraints, then ``mu <- min(rho mu, mu_max)``.

    Returns ``(Lam1, Lam2, mu)`` without touching ``state``.
    """
    cfg = problem.config
    mu = state.mu
    Lam1, Lam2 = [], []
    for l in range(len(state.Z)):
        R1, R2 = constraint_residuals(state, l)
        Lam1.append(state.Lam1[l] + mu * R1)
        Lam2.append(state.Lam2[l] + mu * R2)
    return Lam1, Lam2, min(cfg.rho * mu, cfg.mu_max)


def _l21(M):
    return float(np.sum(np.sqrt(np.sum(M * M, axis=0))))


def objective(state, problem):
    """Value of the full regularized model (logging only).

    The diversity term uses unscaled traces ``tr(Z_l M K_m M Z_l^T)``, the same
    quantity the Z-update penalizes.
    """
    cfg = problem.config
    graph = problem.graph
    src, tgt = state.src, state.tgt
    Rs = problem.X_s - src.reconstruct()
    Rt = problem.X_t - tgt.reconstruct()
    val = float(np.sum(Rs * Rs) + np.sum(Rt * Rt))
    L = len(state.Z)
    for l in range(L):
        Z = state.Z[l]
        val += _l21(state.H_all(l) - src.H[l] @ Z)
        dD = src.D[l] - tgt.D[l]
        val += cfg.alpha * float(np.sum(dD * dD))
        if L > 1:
            K = diversity_kernel(l, state.Z)
            val += cfg.beta * laplacian_quadratic(Z, K)
        val += cfg.gamma * (
            laplacian_quadratic(Z, graph.L) + laplacian_quadratic(src.H[l], graph.L_s)
        )
    return val


def _assign(state, name, l, value):
    if name == "D_s":
        state.src.D[l] = value
    elif name == "D_t":
        state.tgt.D[l] = value
    elif name == "H_s":
        state.src.H[l] = value
    elif name == "H_t":
        state.tgt.H[l] = value
    else:
        getattr(state, name)[l] = value


_SWEEP = (
    ("D_s", lambda s, p, l: update_basis(s, p, "source", l)),
    ("D_t", lambda s, p, l: update_basis(s, p, "target", l)),
    ("H_s", update_representation_source),
    ("H_t", update_representation_target),
    ("J", update_auxiliary_j),
    ("Z", update_coefficients_z),
    ("E", update_error_e),
)


def step(state, problem):
    """One full Gauss-Seidel sweep over layers followed by the dual update."""
    it = state.iter + 1
    for l in range(len(state.Z)):
        for name, update in _SWEEP:
            try:
                value = update(state, problem, l)
            except (ValueError, np.linalg.LinAlgError):
                # the linear solves reject non-finite or singular input
                raise DivergenceError(it, l, name) from None
            if not np.all(np.isfinite(value)):
                raise DivergenceError(it, l, name)
            _assign(state, name, l, value)
    mu_used = state.mu
    state.Lam1, state.Lam2, state.mu = update_multipliers(state, problem)
    for l in range(len(state.Z)):
        if not (np.all(np.isfinite(state.Lam1[l])) and np.all(np.isfinite(state.Lam2[l]))):
            raise DivergenceError(it, l, "multipliers")
    state.iter = it
    r1 = r2 = 0.0
    for l in range(len(state.Z)):
        R1, R2 = constraint_residuals(state, l)
        r1 = max(r1, float(np.max(np.abs(R1))))
        r2 = max(r2, float(np.max(np.abs(R2))))
    return r1, r2, mu_used


def solve(problem: TransferProblem, state=None) -> SolverOutput:
    """Run ADMM until both residuals drop below ``eps`` or ``max_iters`` is hit.

    Each log row is ``(iter, r1, r2, objective, mu)`` where ``mu`` is the
    penalty used during that iteration.
    """
    cfg = problem.config
    t0 = time.perf_counter()
    if state is None:
        state = init_state(problem)
    out = SolverOutput(Z=state.Z, state=state)
    for _ in range(cfg.max_iters):
        r1, r2, mu = step(state, problem)
        obj = objective(state, problem)
        out.residual_log.append((state.iter, r1, r2, obj, mu))
        log.debug("iter %d r1=%.3e r2=%.3e obj=%.6g mu=%.3g", state.iter, r1, r2, obj, mu)
        if r1 < cfg.eps and r2 < cfg.eps:
            out.converged = True
            break
    out.iters_run = state.iter
    out.Z = [z.copy() for z in state.Z]
    out.wall_time = time.perf_counter() - t0
    return out


def write_residual_log(path, residual_log):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("iter,r1,r2,objective,mu\n")
        for it, r1, r2, obj, mu in residual_log:
            fh.write(f"{it},{r1:.17g},{r2:.17g},{obj:.17g},{mu:.17g}\n")
