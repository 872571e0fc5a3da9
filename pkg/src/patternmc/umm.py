"""User metamodels: the product chain of all patterns under one strategy."""
from dataclasses import dataclass

import numpy as np

from .exceptions import EmptyFilterError, FormulaError, ModelError
from .model import DUMMY_STATE, INIT_LABEL, Dtmc, PatternMixture, StateSpace, UserStrategy


def alpha_label(k):
    """Proposition name marking states that belong to pattern ``k``."""
    return f"alpha={k}"


@dataclass(frozen=True, eq=False)
class Umm:
    """A user metamodel.

    State ``(s, k)`` lives at flat index ``(k - 1) * n + s``; the dummy
    initial state ``(0, 0)`` is index 0.
    """

    dtmc: Dtmc
    n: int
    K: int
    theta: np.ndarray

    def index(self, s, k):
        if not (1 <= s <= self.n and 1 <= k <= self.K):
            raise ModelError(f"no metamodel state ({s}, {k})")
        return (k - 1) * self.n + s

    def pair(self, index):
        """Back-map a flat index to its ``(s, k)`` pair."""
        if index == DUMMY_STATE:
            return (0, 0)
        if not 1 <= index <= self.n * self.K:
            raise ModelError(f"no metamodel state with index {index}")
        k, s = divmod(index - 1, self.n)
        return (s + 1, k + 1)

    @property
    def backmap(self):
        return [self.pair(i) for i in range(self.n * self.K + 1)]

    @property
    def space(self):
        return self.dtmc.space


def build_umm(mixture: PatternMixture, theta) -> Umm:
    """Combine the patterns of ``mixture`` under strategy ``theta``.

    The probability of moving from ``(s, k)`` to ``(t, j)`` is
    ``theta[j] * P_j(s, t)`` regardless of ``k``; the dummy state moves to
    ``(s, k)`` with probability ``theta[k] * iota(s)``.
    """
    if isinstance(theta, UserStrategy):
        theta = theta.theta
    theta = mixture.check_theta(theta)
    n, K = mixture.n, mixture.K
    size = n * K + 1

    # (s, j, t) -> theta[j] * P_j(s, t), then flatten the target axis as (j, t)
    block = np.einsum("j,jst->sjt", theta, mixture.patterns).reshape(n, K * n)
    trans = np.zeros((size, size))
    trans[1:, 1:] = np.tile(block, (K, 1))
    trans[0, 1:] = np.outer(theta, mixture.iota).ravel()
    init = np.zeros(size)
    init[0] = 1.0

    base = mixture.space.labels
    labels = {DUMMY_STATE: {INIT_LABEL}}
    for k in range(1, K + 1):
        for s in range(1, n + 1):
            labels[(k - 1) * n + s] = set(base[s]) | {alpha_label(k)}
    space = StateSpace(tuple(range(size)), labels, has_dummy_init=True)
    return Umm(Dtmc(space, init, trans), n, K, theta)


def restrict(model, phi) -> Dtmc:
    """The sub-chain on states satisfying the propositional formula ``phi``.

    Transitions into removed states are dropped, so rows of the result may
    be substochastic and the result is flagged ``restricted``. The initial
    distribution is restricted the same way. ``phi`` may be a formula object
    or formula text.
    """
    from .checker.formula import is_propositional
    from .checker.engine import sat
    from .checker.parser import parse_state

    d = model.dtmc if isinstance(model, Umm) else model
    if isinstance(phi, str):
        phi = parse_state(phi)
    if not is_propositional(phi):
        raise FormulaError("restriction formula must be propositional")
    mask = sat(d, phi)
    if not mask.any():
        raise EmptyFilterError(f"no state satisfies {phi}")
    if mask.all():
        return d
    keep = np.flatnonzero(mask)
    space = d.space.subspace(d.space.states[i] for i in keep)
    return Dtmc(space, d.init[keep], d.trans[np.ix_(keep, keep)], restricted=True)
