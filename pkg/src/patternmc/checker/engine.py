"""Numerical evaluation of PCTL formulas over explicit DTMCs."""
import math

import numpy as np

from ..exceptions import EmptyFilterError, FormulaError, ModelError, UnknownPropositionError
from ..model import DUMMY_STATE
from ..validation import check_rng
from .formula import (
    Alpha,
    And,
    Atomic,
    Filter,
    FilterOp,
    Next,
    Not,
    Prob,
    StateFormula,
    TrueF,
    Until,
    is_propositional,
)
from .parser import parse, parse_path, parse_state

#: Max-norm change below which unbounded value iteration stops.
UNBOUNDED_TOL = 1e-12
UNBOUNDED_MAX_ITERS = 10**6
ENUMERATION_GUARD = 10**7


def _dtmc(model):
    return getattr(model, "dtmc", model)


def _as_state(phi):
    return parse_state(phi) if isinstance(phi, str) else phi


def _as_path(psi):
    return parse_path(psi) if isinstance(psi, str) else psi


def matvec(trans, x):
    """``trans @ x`` with exactly rounded row sums."""
    return np.array([math.fsum(row) for row in (trans * x).tolist()])


def sat(model, phi) -> np.ndarray:
    """Boolean vector: which states (in space order) satisfy ``phi``."""
    d = _dtmc(model)
    phi = _as_state(phi)
    if isinstance(phi, TrueF):
        return np.ones(d.n, dtype=bool)
    if isinstance(phi, (Atomic, Alpha)):
        name = phi.label if isinstance(phi, Alpha) else phi.name
        if name not in d.space.propositions:
            raise UnknownPropositionError(name)
        return d.sat_prop(name)
    if isinstance(phi, Not):
        return ~sat(d, phi.operand)
    if isinstance(phi, And):
        return sat(d, phi.left) & sat(d, phi.right)
    if isinstance(phi, Prob):
        if phi.is_query:
            raise FormulaError(f"{phi} is a numeric query, not a truth value")
        probs = prob_vector(d, phi.path)
        return np.array([phi.holds(p) for p in probs])
    raise FormulaError(f"not a state formula: {phi!r}")


def _reach_candidates(trans, left, right):
    """States that can reach ``right`` along ``left`` states (graph search)."""
    can = right.copy()
    frontier = list(np.flatnonzero(right))
    preds = [np.flatnonzero(trans[:, j] > 0) for j in range(len(right))]
    while frontier:
        j = frontier.pop()
        for i in preds[j]:
            if not can[i] and left[i]:
                can[i] = True
                frontier.append(i)
    return can


def _until_vector(d, left, right, bound):
    trans = d.trans
    if bound is not None:
        x = right.astype(float)
        active = left & ~right
        for _ in range(bound):
            step = np.zeros(d.n)
            if active.any():
                step[active] = matvec(trans[active], x)
            x = np.where(right, 1.0, step)
        return x

    maybe = _reach_candidates(trans, left, right) & ~right
    x = right.astype(float)
    if not maybe.any():
        return x
    sub = trans[maybe]
    for _ in range(UNBOUNDED_MAX_ITERS):
        new = x.copy()
        new[maybe] = matvec(sub, x)
        delta = np.max(np.abs(new - x))
        x = new
        if delta < UNBOUNDED_TOL:
            break
    return np.clip(x, 0.0, 1.0)


def prob_vector(model, psi) -> np.ndarray:
    """Probability of the path formula ``psi`` from every state."""
    d = _dtmc(model)
    psi = _as_path(psi)
    if isinstance(psi, Until):
        return _until_vector(d, sat(d, psi.left), sat(d, psi.right), psi.bound)
    if isinstance(psi, Next):
        if isinstance(psi.operand, Until):
            target = prob_vector(d, psi.operand)
        elif isinstance(psi.operand, StateFormula):
            target = sat(d, psi.operand).astype(float)
        else:
            raise FormulaError(f"unsupported operand of X: {psi.operand!r}")
        return matvec(d.trans, target)
    raise FormulaError(f"not a path formula: {psi!r}")


def prob_path(model, state, psi) -> float:
    """Probability that a path from ``state`` satisfies ``psi``."""
    d = _dtmc(model)
    return float(prob_vector(d, psi)[d.space.position(state)])


def prob_from_init(model, psi) -> float:
    """Probability of ``psi`` from the dummy initial state."""
    d = _dtmc(model)
    if not d.space.has_dummy_init:
        raise ModelError("model has no dummy init state")
    return prob_path(d, DUMMY_STATE, psi)


def filtered_prob(model, op, phi, psi) -> float:
    """Aggregate (min/max/avg) the probability of ``psi`` over states of ``phi``."""
    d = _dtmc(model)
    op = FilterOp(op)
    phi = _as_state(phi)
    if not is_propositional(phi):
        raise FormulaError("filter states must be a propositional formula")
    mask = sat(d, phi)
    if not mask.any():
        raise EmptyFilterError(f"no state satisfies {phi}")
    values = prob_vector(d, psi)[mask]
    if op is FilterOp.MIN:
        return float(values.min())
    if op is FilterOp.MAX:
        return float(values.max())
    return math.fsum(values.tolist()) / len(values)


def evaluate(model, query):
    """Evaluate parsed or textual query text from the initial state.

    ``P=?`` queries and filters give a float; boolean state formulas give
    their truth value at the initial state.
    """
    d = _dtmc(model)
    if isinstance(query, str):
        query = parse(query)
    if isinstance(query, Filter):
        return filtered_prob(d, query.op, query.states, query.query.path)
    if isinstance(query, Prob) and query.is_query:
        return prob_from_init(d, query.path)
    if isinstance(query, StateFormula):
        if not d.space.has_dummy_init:
            raise ModelError("model has no dummy init state")
        return bool(sat(d, query)[d.space.position(DUMMY_STATE)])
    raise FormulaError(f"cannot evaluate {query!r}")


# -- oracles -------------------------------------------------------------


def _path_shape(d, psi):
    """Flatten ``psi`` into (offset, left, right, horizon) for prefix checks."""
    if isinstance(psi, Next) and isinstance(psi.operand, Until):
        inner = psi.operand
        return 1, sat(d, inner.left), sat(d, inner.right), inner.bound
    if isinstance(psi, Next):
        none = np.zeros(d.n, dtype=bool)
        return 1, none, sat(d, psi.operand), 0
    if isinstance(psi, Until):
        return 0, sat(d, psi.left), sat(d, psi.right), psi.bound
    raise FormulaError(f"not a path formula: {psi!r}")


def _decide(prefix, offset, left, right, bound):
    """True/False once the prefix settles the formula, else None."""
    for step, s in enumerate(prefix[offset:]):
        if right[s]:
            return True
        if not left[s] or step == bound:
            return False
    return None


def enumerate_oracle(model, state, psi, guard=ENUMERATION_GUARD) -> float:
    """Probability of a bounded ``psi`` by explicit expansion of all paths."""
    d = _dtmc(model)
    psi = _as_path(psi)
    offset, left, right, bound = _path_shape(d, psi)
    if bound is None:
        raise FormulaError("the enumeration oracle needs a finite step bound")
    horizon = offset + bound
    if d.n ** horizon > guard:
        raise ValueError(f"{d.n}^{horizon} paths exceed the enumeration guard {guard}")
    succ = [[(j, p) for j, p in enumerate(row) if p > 0] for row in d.trans.tolist()]

    total = []
    stack = [([d.space.position(state)], 1.0)]
    while stack:
        prefix, p = stack.pop()
        verdict = _decide(prefix, offset, left, right, bound)
        if verdict is True:
            total.append(p)
        elif verdict is None:
            for j, q in succ[prefix[-1]]:
                stack.append((prefix + [j], p * q))
    return math.fsum(total)


def monte_carlo(model, state, psi, n_samples, seed=None):
    """Estimate a bounded path probability by sampling ``n_samples`` paths.

    Returns ``(estimate, standard_error)``. Missing row mass (restricted
    chains) kills the path, which then counts as a failure.
    """
    d = _dtmc(model)
    psi = _as_path(psi)
    rng = check_rng(seed)
    offset, left, right, bound = _path_shape(d, psi)
    if bound is None:
        raise FormulaError("Monte-Carlo estimation needs a finite step bound")
    cum = np.cumsum(d.trans, axis=1)
    if not d.restricted:
        cum[:, -1] = np.inf
    cur = np.full(n_samples, d.space.position(state))
    alive = np.ones(n_samples, dtype=bool)
    undecided = np.ones(n_samples, dtype=bool)
    success = np.zeros(n_samples, dtype=bool)

    def settle(step):
        nonlocal undecided
        if step < offset:
            return
        hit = undecided & alive & right[cur]
        success[hit] = True
        fail = undecided & (~alive | (~hit & ~left[cur]) | (step - offset == bound))
        undecided = undecided & ~hit & ~fail

    for step in range(offset + bound + 1):
        settle(step)
        if not undecided.any() or step == offset + bound:
            break
        u = rng.random(n_samples)
        idx = np.flatnonzero(undecided)
        rows = cum[cur[idx]]
        nxt = (u[idx, None] >= rows).sum(axis=1)
        died = nxt >= d.n
        alive[idx[died]] = False
        cur[idx[~died]] = nxt[~died]
    est = success.mean()
    return float(est), float(math.sqrt(max(est * (1 - est), 0.0) / n_samples))
