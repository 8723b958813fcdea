"""
poisoncert/certcore/mdp.py
Finite-state surrogate of the poisoning game, used to check weak duality.
"""

import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy import sparse
from scipy.optimize import linprog
from scipy.spatial import cKDTree
from scipy.stats import norm

from poisoncert.certcore.dynamics import deterministic_update
from poisoncert.certcore.types import (
    AdversarialObjective,
    ContaminatedStream,
    EmpiricalSource,
    GaussianSource,
    HingeRule,
    LearningRule,
    MeanRule,
)
from poisoncert.utils.exceptions import ContractViolation, ConvergenceError

logger = logging.getLogger(__name__)

DEFAULT_MIXING = 1e-6
APERIODICITY = 0.5


@dataclass(eq=False)
class DiscretizedMDP:
    """States are grid points for θ, actions are grid points of the adversarial set."""
    theta_grid: np.ndarray
    action_grid: np.ndarray
    transition: np.ndarray
    reward: np.ndarray

    def __post_init__(self):
        self.theta_grid = np.asarray(self.theta_grid, dtype=float).reshape(len(self.theta_grid), -1)
        self.action_grid = np.asarray(self.action_grid, dtype=float).reshape(len(self.action_grid), -1)
        self.transition = np.asarray(self.transition, dtype=float)
        self.reward = np.asarray(self.reward, dtype=float)
        n_states, n_actions = len(self.theta_grid), len(self.action_grid)

        if self.transition.shape != (n_states, n_actions, n_states):
            raise ContractViolation(
                f"transition has shape {self.transition.shape}, expected {(n_states, n_actions, n_states)}"
            )
        if self.reward.shape != (n_states,) or not np.all(np.isfinite(self.reward)):
            raise ContractViolation("reward must be finite on every state")
        if np.any(self.transition < 0.0) or np.max(np.abs(self.transition.sum(axis=2) - 1.0)) > 1e-9:
            raise ContractViolation("transition rows must be probability vectors")

    @property
    def n_states(self) -> int:
        return self.theta_grid.shape[0]

    @property
    def n_actions(self) -> int:
        return self.action_grid.shape[0]


def _cell_masses(grid: np.ndarray, mean: np.ndarray, std: float) -> np.ndarray:
    """Gaussian mass of each nearest-point cell of a sorted 1-d grid, for many means."""
    if std <= 0.0:
        masses = np.zeros((mean.size, grid.size))
        masses[np.arange(mean.size), np.abs(mean[:, None] - grid[None, :]).argmin(axis=1)] = 1.0
        return masses
    edges = np.concatenate([[-np.inf], 0.5 * (grid[1:] + grid[:-1]), [np.inf]])
    cdf = norm.cdf((edges[None, :] - mean[:, None]) / std)
    return np.diff(cdf, axis=1)


def _exact_gaussian_transitions(rule: MeanRule, stream: ContaminatedStream, grid: np.ndarray,
                                actions: np.ndarray) -> np.ndarray:
    eta, eps = rule.eta, stream.epsilon
    theta = grid[:, 0]
    S = float(rule.S[0, 0])
    Sigma = float(stream.benign.Sigma[0, 0])
    mu = float(stream.benign.mu[0])

    adv_mean = ((1.0 - eta) * theta[:, None] + eta * actions[None, :, 0]).ravel()
    adv = _cell_masses(theta, adv_mean, eta * np.sqrt(S)).reshape(theta.size, actions.shape[0], theta.size)
    benign = _cell_masses(theta, (1.0 - eta) * theta + eta * mu, eta * np.sqrt(S + Sigma))
    return eps * adv + (1.0 - eps) * benign[:, None, :]


def _snapped_histogram(tree: cKDTree, points: np.ndarray, weights: np.ndarray, n_states: int) -> np.ndarray:
    _, idx = tree.query(points)
    return np.bincount(idx, weights=weights, minlength=n_states)


def build_discretized_mdp(rule: LearningRule, stream: ContaminatedStream, obj: AdversarialObjective,
                          theta_grid: np.ndarray, action_grid: np.ndarray, samples: int = 2000,
                          seed: int = 0, mixing: float = DEFAULT_MIXING) -> DiscretizedMDP:
    """Snap F(θ, z) outputs to the nearest grid point and mix in a little uniform mass.

    One-dimensional Gaussian mean instances are integrated exactly; other noisy
    transitions use a fixed seeded sample of the benign draw and defense noise.
    """
    grid = np.asarray(theta_grid, dtype=float)
    grid = grid.reshape(len(grid), -1)
    actions = np.asarray(action_grid, dtype=float).reshape(len(action_grid), -1)
    n_states, n_actions = grid.shape[0], actions.shape[0]
    eps = stream.epsilon

    if isinstance(rule, MeanRule) and isinstance(stream.benign, GaussianSource) and grid.shape[1] == 1:
        order = np.argsort(grid[:, 0])
        grid = grid[order]
        P = _exact_gaussian_transitions(rule, stream, grid, actions)
    else:
        rng = np.random.default_rng(seed)
        tree = cKDTree(grid)
        noisy = isinstance(rule, MeanRule) and np.any(rule.S)

        if isinstance(stream.benign, EmpiricalSource) and not noisy:
            benign_points = stream.benign.points
        else:
            benign_points = stream.benign.sample(rng, samples)
        benign_weights = np.full(len(benign_points), 1.0 / len(benign_points))
        adv_draws = samples if noisy else 1
        adv_noise = rng.standard_normal((adv_draws, grid.shape[1])) if noisy else None
        benign_noise = rng.standard_normal(benign_points.shape) if noisy else None

        P = np.zeros((n_states, n_actions, n_states))
        for s in range(n_states):
            theta = grid[s]
            benign_next = deterministic_update(rule, theta[None, :], benign_points)
            adv_next = deterministic_update(rule, theta[None, None, :], actions[:, None, :])
            adv_next = np.broadcast_to(adv_next, (n_actions, adv_draws, grid.shape[1]))
            if noisy:
                benign_next = benign_next + rule.eta * benign_noise @ rule.B.T
                adv_next = adv_next + rule.eta * adv_noise @ rule.B.T

            benign_row = _snapped_histogram(tree, benign_next, benign_weights, n_states)
            _, idx = tree.query(adv_next.reshape(-1, grid.shape[1]))
            idx = idx.reshape(n_actions, adv_draws)
            adv_rows = np.zeros((n_actions, n_states))
            np.add.at(adv_rows, (np.repeat(np.arange(n_actions), adv_draws), idx.ravel()), 1.0 / adv_draws)
            P[s] = eps * adv_rows + (1.0 - eps) * benign_row[None, :]

    P = (1.0 - mixing) * P + mixing / n_states
    P /= P.sum(axis=2, keepdims=True)
    return DiscretizedMDP(grid, actions, P, obj(grid))


def relative_value_iteration(mdp: DiscretizedMDP, tol: float = 1e-9, max_sweeps: int = 200000,
                             tau: float = APERIODICITY) -> Tuple[float, np.ndarray, Tuple[float, float]]:
    """Optimal gain, relative values and final bracket of the average-reward MDP.

    The chain is run through P̃ = τP + (1 − τ)I, which keeps every gain but
    removes periodicity; the span bounds min/max(Th − h) bracket the gain.
    The bracket only closes when the optimal gain is the same from every state.
    """
    P = tau * mdp.transition + (1.0 - tau) * np.eye(mdp.n_states)[:, None, :]
    h = np.zeros(mdp.n_states)
    bracket = (-np.inf, np.inf)
    for sweep in range(max_sweeps):
        Th = mdp.reward + np.max(P @ h, axis=1)
        delta = Th - h
        bracket = (float(delta.min()), float(delta.max()))
        if bracket[1] - bracket[0] <= tol:
            logger.debug("relative value iteration converged after %d sweeps", sweep + 1)
            return 0.5 * (bracket[0] + bracket[1]), h, bracket
        h = Th - Th[0]
    raise ConvergenceError("relative value iteration did not converge", bracket)


def state_gains(mdp: DiscretizedMDP) -> np.ndarray:
    """Optimal gain from every start state, by the multichain average-reward linear program.

    minimize Σ g  s.t.  g(s) ≥ Σ P(s'|s,a) g(s')  and  g(s) + h(s) ≥ r(s) + Σ P(s'|s,a) h(s').
    """
    n, m = mdp.n_states, mdp.n_actions
    P = sparse.csr_matrix(mdp.transition.reshape(n * m, n))
    at_state = sparse.csr_matrix(np.repeat(np.eye(n), m, axis=0))
    A_ub = sparse.bmat([[P - at_state, None], [-at_state, P - at_state]], format="csr")
    b_ub = np.concatenate([np.zeros(n * m), -np.repeat(mdp.reward, m)])
    cost = np.concatenate([np.ones(n), np.zeros(n)])
    result = linprog(cost, A_ub=A_ub, b_ub=b_ub, bounds=[(None, None)] * (2 * n), method="highs")
    if result.status != 0:
        raise ConvergenceError(f"average-reward program failed: {result.message}", (-np.inf, np.inf))
    return result.x[:n]


def solve_discretized_mdp(mdp: DiscretizedMDP, tol: float = 1e-9, max_sweeps: int = 20000) -> float:
    """Optimal average reward of the discretized game from its worst start state.

    Relative value iteration is tried first; a bracket that stays open (several
    recurrent classes, or mixing too weak to close it in `max_sweeps`) falls
    back to the linear program.
    """
    try:
        gain, _, _ = relative_value_iteration(mdp, tol=tol, max_sweeps=max_sweeps)
        return gain
    except ConvergenceError as e:
        logger.info("falling back to the average-reward linear program: %s", e)
    return float(state_gains(mdp).max())


def discrete_dual_bound(mdp: DiscretizedMDP, values: np.ndarray) -> float:
    """max over (s, a) of r(s) + Σ P(s'|s,a) λ(s') − λ(s); dominates the optimal gain for any λ."""
    values = np.asarray(values, dtype=float)
    if values.shape != (mdp.n_states,):
        raise ContractViolation("one multiplier value per state is required")
    slack = mdp.reward[:, None] + mdp.transition @ values - values[:, None]
    return float(slack.max())


def weak_duality_gap(verified: float, mdp: DiscretizedMDP, values: Optional[np.ndarray] = None,
                     tol: float = 1e-9) -> dict:
    """Compare a verified certificate with the discretized game's gain."""
    gain = solve_discretized_mdp(mdp, tol=tol)
    report = {"gain": gain, "verified": float(verified), "slack": float(verified) - gain}
    if values is not None:
        report["discrete_bound"] = discrete_dual_bound(mdp, values)
    return report
