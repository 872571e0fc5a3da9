import numpy as np

from patternmc.checker.formula import And, Atomic, Next, Not, TrueF, Until
from patternmc.model import Dtmc, PatternMixture, StateSpace

PROPS = ("a", "b", "c")


def random_stochastic(rng, n, sparsity=0.3):
    mat = rng.random((n, n)) * (rng.random((n, n)) > sparsity)
    for row in mat:
        if row.sum() == 0:
            row[rng.integers(n)] = 1.0
    return mat / mat.sum(axis=1, keepdims=True)


def random_dtmc(rng, n=None, dummy=True):
    n = n or int(rng.integers(2, 7))
    labels = {s: {p for p in PROPS if rng.random() < 0.4} for s in range(n)}
    for p in PROPS:  # every proposition labels something
        labels[int(rng.integers(n))].add(p)
    if dummy:
        labels[0] = labels[0] | {"init"}
    space = StateSpace(tuple(range(n)), labels, has_dummy_init=dummy)
    init = np.zeros(n)
    init[0] = 1.0
    return Dtmc(space, init, random_stochastic(rng, n))


def random_prop(rng, depth=2):
    r = rng.random()
    if depth == 0 or r < 0.4:
        return Atomic(PROPS[rng.integers(len(PROPS))]) if rng.random() < 0.85 else TrueF()
    if r < 0.6:
        return Not(random_prop(rng, depth - 1))
    return And(random_prop(rng, depth - 1), random_prop(rng, depth - 1))


def random_path(rng, max_n=6):
    kind = rng.random()
    n = int(rng.integers(0, max_n + 1))
    if kind < 0.2:
        return Next(random_prop(rng))
    if kind < 0.35:
        return Next(Until(random_prop(rng), random_prop(rng), max(n - 1, 0)))
    if kind < 0.55:
        return Until(TrueF(), random_prop(rng), n)
    return Until(random_prop(rng), random_prop(rng), n)


def random_mixture(rng, n=None, K=None, names=None):
    n = n or int(rng.integers(1, 7))
    K = K or int(rng.integers(1, 4))
    names = names or [f"s{i}" for i in range(1, n + 1)]
    space = StateSpace.from_names(names)
    pats = np.stack([random_stochastic(rng, n) for _ in range(K)])
    iota = rng.dirichlet(np.ones(n))
    return PatternMixture(space, pats, iota)
