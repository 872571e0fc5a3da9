"""Maximum-likelihood inference of activity patterns and user strategies.

Each user ``m`` generates a trace by drawing the first state from ``iota``
and then, at every step, picking pattern ``k`` with probability
``theta_m(k)`` and moving according to ``P_k``. Because the pattern is
redrawn at every step, EM works with one responsibility vector per observed
transition rather than per trace.
"""
import math
from bisect import bisect_right
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np
from joblib import Parallel, delayed
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .exceptions import ModelError, ZeroProbabilityError
from .model import PatternMixture, StateSpace, Trace, UserStrategy
from .validation import check_positive_int, check_rng, normalize_rows


@dataclass(frozen=True)
class EmConfig:
    K: int = 2
    max_iters: int = 500
    tol: float = 1e-8
    restarts: int = 10
    seed: Optional[int] = None
    smoothing: float = 1e-6
    n_jobs: Optional[int] = None

    def __post_init__(self):
        check_positive_int(self.K, "K")
        check_positive_int(self.restarts, "restarts")
        check_positive_int(self.max_iters, "max_iters")
        if not self.tol > 0:
            raise ModelError(f"tol must be > 0, got {self.tol}")
        if not self.smoothing >= 0:
            raise ModelError(f"smoothing must be >= 0, got {self.smoothing}")


@dataclass
class FitResult:
    mixture: PatternMixture
    strategies: List[UserStrategy]
    loglik: float
    iters_per_restart: List[int]
    chosen_restart: int
    trajectories: List[List[float]] = field(default_factory=list, repr=False)

    @property
    def thetas(self):
        return np.array([s.theta for s in self.strategies])


class _Transitions:
    """Flattened view of a list of traces: one row per observed transition."""

    def __init__(self, traces: Sequence[Trace], n):
        if not traces:
            raise ModelError("need at least one trace")
        for tr in traces:
            tr.check_space(n)
        self.n = n
        self.user_ids = [tr.user_id for tr in traces]
        self.first = np.array([tr.events[0] - 1 for tr in traces])
        seqs = [np.asarray(tr.events) - 1 for tr in traces]
        self.src = np.concatenate([s[:-1] for s in seqs]).astype(int)
        self.dst = np.concatenate([s[1:] for s in seqs]).astype(int)
        self.user = np.concatenate([np.full(len(s) - 1, m) for m, s in enumerate(seqs)]).astype(int)
        self.offsets = np.cumsum([0] + [len(s) - 1 for s in seqs])

    @property
    def M(self):
        return len(self.user_ids)

    def split(self, rows):
        return [rows[a:b] for a, b in zip(self.offsets[:-1], self.offsets[1:])]

    def locate(self, row):
        m = int(np.searchsorted(self.offsets, row, side="right") - 1)
        return self.user_ids[m], int(row - self.offsets[m])


def _as_theta_matrix(strategies, M, K):
    if len(strategies) and isinstance(strategies[0], UserStrategy):
        thetas = np.array([s.theta for s in strategies])
    else:
        thetas = np.atleast_2d(np.asarray(strategies, dtype=float))
    if thetas.shape != (M, K):
        raise ModelError(f"expected {M} strategies of length {K}, got shape {thetas.shape}")
    return thetas


def _emission(data, patterns, thetas):
    """Per-transition joint weights ``theta_m(k) P_k(s, t)``, shape (T, K)."""
    return thetas[data.user] * patterns[:, data.src, data.dst].T


def log_likelihood(traces, mixture: PatternMixture, strategies) -> float:
    """Log-probability of ``traces`` under the mixture and per-user strategies.

    Returns ``-inf`` when some observed event has probability zero.
    """
    data = _Transitions(traces, mixture.n)
    thetas = _as_theta_matrix(strategies, data.M, mixture.K)
    with np.errstate(divide="ignore"):
        first = np.log(mixture.iota[data.first])
        steps = np.log(_emission(data, mixture.patterns, thetas).sum(axis=1))
    return math.fsum(first.tolist()) + math.fsum(steps.tolist())


def _responsibilities(data, patterns, thetas):
    joint = _emission(data, patterns, thetas)
    total = joint.sum(axis=1)
    zero = np.flatnonzero(total <= 0)
    if zero.size:
        row = int(zero[0])
        user, pos = data.locate(row)
        raise ZeroProbabilityError(user, pos, int(data.src[row]) + 1, int(data.dst[row]) + 1)
    return joint / total[:, None], total


def e_step(traces, mixture: PatternMixture, strategies):
    """Responsibilities of each pattern for every observed transition.

    Returns one ``(len(trace) - 1, K)`` array per trace; row ``t`` is the
    posterior over the pattern that produced transition ``t``.
    """
    data = _Transitions(traces, mixture.n)
    thetas = _as_theta_matrix(strategies, data.M, mixture.K)
    gamma, _ = _responsibilities(data, mixture.patterns, thetas)
    return data.split(gamma)


def _reestimate(data, gamma, K, eps):
    n = data.n
    flat = data.src * n + data.dst
    counts = np.stack([np.bincount(flat, weights=gamma[:, k], minlength=n * n) for k in range(K)])
    patterns = normalize_rows(counts.reshape(K, n, n) + eps)
    per_user = np.stack([np.bincount(data.user, weights=gamma[:, k], minlength=data.M) for k in range(K)], axis=1)
    thetas = normalize_rows(per_user + eps)
    return patterns, thetas


def _initial_distribution(data, eps):
    return normalize_rows(np.bincount(data.first, minlength=data.n) + eps)


def m_step(traces, responsibilities, config: EmConfig, space: StateSpace):
    """Closed-form re-estimation from responsibilities.

    Returns ``(mixture, strategies)``. Smoothing adds ``config.smoothing``
    pseudo-counts to every cell before normalizing; rows that still carry
    no mass become uniform.
    """
    data = _Transitions(traces, space.n_states)
    gamma = np.concatenate(responsibilities) if len(data.src) else np.zeros((0, config.K))
    if gamma.shape != (len(data.src), config.K):
        raise ModelError(f"responsibilities have shape {gamma.shape}, expected {(len(data.src), config.K)}")
    patterns, thetas = _reestimate(data, gamma, config.K, config.smoothing)
    iota = _initial_distribution(data, config.smoothing)
    mixture = PatternMixture(space, patterns, iota)
    strategies = [UserStrategy(u, t) for u, t in zip(data.user_ids, thetas)]
    return mixture, strategies


def _run(data, patterns, thetas, iota, eps, max_iters, tol, fit_patterns=True):
    """Iterate E/M steps from the given start; returns final params and trajectory."""
    log_first = math.fsum(np.log(iota[data.first]).tolist())
    trajectory = []
    K = patterns.shape[0]
    for _ in range(max_iters + 1):
        gamma, total = _responsibilities(data, patterns, thetas)
        ll = log_first + math.fsum(np.log(total).tolist())
        if trajectory and ll - trajectory[-1] < tol:
            trajectory.append(ll)
            break
        trajectory.append(ll)
        if len(trajectory) > max_iters:
            break
        new_patterns, thetas = _reestimate(data, gamma, K, eps)
        if fit_patterns:
            patterns = new_patterns
    return patterns, thetas, trajectory


def em_run(traces, config: EmConfig, space: StateSpace, init_patterns, init_thetas=None):
    """One EM run from an explicit starting point (no restarts, no reordering).

    Returns ``(mixture, thetas, trajectory)`` where ``trajectory`` holds the
    log-likelihood of every visited parameter set.
    """
    data = _Transitions(traces, space.n_states)
    K = config.K
    patterns = np.asarray(init_patterns, dtype=float)
    if patterns.shape != (K, data.n, data.n):
        raise ModelError(f"initial patterns must have shape {(K, data.n, data.n)}")
    thetas = np.full((data.M, K), 1.0 / K) if init_thetas is None else _as_theta_matrix(init_thetas, data.M, K)
    iota = _initial_distribution(data, config.smoothing)
    patterns, thetas, traj = _run(data, patterns, thetas, iota, config.smoothing, config.max_iters, config.tol)
    return PatternMixture(space, patterns, iota), thetas, traj


def _random_patterns(rng, K, n):
    return rng.dirichlet(np.ones(n), size=(K, n))


def _one_restart(traces, config, space, seed_seq):
    rng = np.random.default_rng(seed_seq)
    init = _random_patterns(rng, config.K, space.n_states)
    return em_run(traces, config, space, init)


def em_fit(traces, config: EmConfig, space: Optional[StateSpace] = None) -> FitResult:
    """Fit patterns and strategies by EM with ``config.restarts`` random starts.

    Components of the best run are ordered by decreasing total strategy
    weight over users.
    """
    traces = list(traces)
    if not traces:
        raise ModelError("need at least one trace")
    if space is None:
        n = max(max(tr.events) for tr in traces)
        space = StateSpace.from_names([f"s{i}" for i in range(1, n + 1)])
    seeds = np.random.SeedSequence(config.seed).spawn(config.restarts)
    if config.n_jobs in (None, 1):
        runs = [_one_restart(traces, config, space, s) for s in seeds]
    else:
        runs = Parallel(n_jobs=config.n_jobs)(delayed(_one_restart)(traces, config, space, s) for s in seeds)

    finals = [traj[-1] for _, _, traj in runs]
    best = int(np.argmax(finals))
    mixture, thetas, _ = runs[best]
    order = np.argsort(-thetas.sum(axis=0), kind="stable")
    mixture = mixture.permuted(order)
    thetas = thetas[:, order]
    strategies = [UserStrategy(tr.user_id, t) for tr, t in zip(traces, thetas)]
    return FitResult(
        mixture=mixture,
        strategies=strategies,
        loglik=finals[best],
        iters_per_restart=[len(traj) - 1 for _, _, traj in runs],
        chosen_restart=best,
        trajectories=[traj for _, _, traj in runs],
    )


def simulate(mixture: PatternMixture, theta, length, rng=None, user_id="u0") -> Trace:
    """Sample one trace of ``length`` events from the generative process."""
    length = check_positive_int(length, "length")
    theta = mixture.check_theta(theta)
    rng = check_rng(rng)
    u = rng.random((length, 2))
    last = mixture.n - 1
    # per-step pattern draws are independent of the state, so take them all at once
    ks = np.minimum(np.searchsorted(np.cumsum(theta), u[1:, 0], side="right"), mixture.K - 1)
    cum_pat = np.cumsum(mixture.patterns, axis=2).tolist()
    s = min(int(np.searchsorted(np.cumsum(mixture.iota), u[0, 0], side="right")), last)
    events = [s]
    for k, v in zip(ks.tolist(), u[1:, 1].tolist()):
        s = min(bisect_right(cum_pat[k][s], v), last)
        events.append(s)
    return Trace(user_id, [e + 1 for e in events])


def simulate_population(mixture, thetas, length, seed=None):
    """One trace per row of ``thetas`` (user ids ``u1``, ``u2``, ...)."""
    rng = check_rng(seed)
    return [simulate(mixture, th, length, rng, user_id=f"u{m + 1}") for m, th in enumerate(thetas)]


def check_traces(X):
    """Accept ``Trace`` objects or plain state sequences (1-based)."""
    out = []
    for i, item in enumerate(X):
        out.append(item if isinstance(item, Trace) else Trace(f"u{i + 1}", item))
    if not out:
        raise ModelError("need at least one trace")
    return out


class MixtureOfMarkovChains(BaseEstimator):
    """Mixture of ``n_components`` Markov chains with per-user mixing weights.

    Parameters
    ----------
    n_components : int
        Number of activity patterns ``K``.
    max_iter : int
        Maximum EM iterations per restart.
    tol : float
        Stop when the log-likelihood improves by less than this.
    n_restarts : int
        Independent random initializations; the best one is kept.
    smoothing : float
        Pseudo-count added to every transition, strategy and start cell.
    state_names : list of str, optional
        Names of action states ``1..n``. Defaults to ``s1..sn`` with ``n``
        the largest state seen in ``fit``.
    random_state : int or None
    n_jobs : int or None
        Restarts to run in parallel (joblib).

    Attributes
    ----------
    mixture_ : PatternMixture
    strategies_ : list of UserStrategy
    thetas_ : ndarray of shape (n_users, n_components)
    loglik_ : float
    fit_result_ : FitResult
    """

    def __init__(
        self,
        n_components=2,
        max_iter=500,
        tol=1e-8,
        n_restarts=10,
        smoothing=1e-6,
        state_names=None,
        random_state=None,
        n_jobs=None,
    ):
        self.n_components = n_components
        self.max_iter = max_iter
        self.tol = tol
        self.n_restarts = n_restarts
        self.smoothing = smoothing
        self.state_names = state_names
        self.random_state = random_state
        self.n_jobs = n_jobs

    def _config(self):
        return EmConfig(
            K=self.n_components,
            max_iters=self.max_iter,
            tol=self.tol,
            restarts=self.n_restarts,
            seed=self.random_state,
            smoothing=self.smoothing,
            n_jobs=self.n_jobs,
        )

    def fit(self, X, y=None):
        traces = check_traces(X)
        if self.state_names is not None:
            space = StateSpace.from_names(list(self.state_names))
        else:
            n = max(max(tr.events) for tr in traces)
            space = StateSpace.from_names([f"s{i}" for i in range(1, n + 1)])
        result = em_fit(traces, self._config(), space)
        self.fit_result_ = result
        self.mixture_ = result.mixture
        self.strategies_ = result.strategies
        self.thetas_ = result.thetas
        self.loglik_ = result.loglik
        self.n_iter_ = result.iters_per_restart[result.chosen_restart]
        return self

    def transform(self, X):
        """Strategy vectors of the users in ``X`` with the patterns held fixed."""
        check_is_fitted(self, "mixture_")
        traces = check_traces(X)
        data = _Transitions(traces, self.mixture_.n)
        K = self.mixture_.K
        thetas = np.full((data.M, K), 1.0 / K)
        _, thetas, _ = _run(
            data,
            np.asarray(self.mixture_.patterns),
            thetas,
            np.asarray(self.mixture_.iota),
            self.smoothing,
            self.max_iter,
            self.tol,
            fit_patterns=False,
        )
        return thetas

    def fit_transform(self, X, y=None):
        return self.fit(X).thetas_

    def score(self, X, y=None):
        """Total log-likelihood of ``X`` with strategies from ``transform``."""
        traces = check_traces(X)
        return log_likelihood(traces, self.mixture_, self.transform(traces))

    def sample(self, thetas, length, random_state=None):
        check_is_fitted(self, "mixture_")
        return simulate_population(self.mixture_, np.atleast_2d(thetas), length, random_state)
