"""Composed probability queries over user metamodels.

Properties that chain several until-events (feed five times in a row, pick
a basket then feed it, switch pattern then feed) are evaluated as products
of single-until probabilities. Each factor is computed either on the full
metamodel from the initial state, or on the metamodel restricted to one
pattern from the states satisfying a filter formula (aggregated with
``min``).
"""
import csv
import itertools
import json
import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence, Tuple

from .checker import engine
from .checker.formula import Alpha, And, Atomic, FilterOp, Next, Not, StateFormula, TrueF, Until
from .exceptions import EmptyFilterError, ModelError, PatternMCError
from .umm import Umm, restrict

log = logging.getLogger(__name__)

FEED, PICK, SEE_Y, SEE_P = Atomic("feed"), Atomic("pick"), Atomic("seeY"), Atomic("seeP")
ENTRY_LABELS = ("feed", "pick", "seeY", "seeP")


@dataclass(frozen=True)
class Term:
    """One factor of a composed query.

    ``restrict_to`` selects the sub-model (``None`` for the full model);
    ``start`` is ``None`` to start from the dummy initial state or a
    propositional formula whose states are aggregated with ``filter_op``.
    The factor is raised to ``power`` by repeated multiplication.
    """

    path: object
    restrict_to: Optional[StateFormula] = None
    start: Optional[StateFormula] = None
    filter_op: FilterOp = FilterOp.MIN
    power: int = 1


@dataclass(frozen=True)
class ComposedQuery:
    """Product of terms. ``compose`` also accepts a sequence of these (summed)."""

    terms: Tuple[Term, ...]

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))
        if not self.terms:
            raise ModelError("a composed query needs at least one term")


class _RestrictionCache:
    def __init__(self, umm):
        self.umm = umm
        self._cache = {}

    def model(self, phi):
        if phi is None:
            return self.umm.dtmc
        if phi not in self._cache:
            self._cache[phi] = restrict(self.umm, phi)
        return self._cache[phi]


def _term_value(cache, term):
    d = cache.model(term.restrict_to)
    if term.start is None:
        value = engine.prob_from_init(d, term.path)
    else:
        value = engine.filtered_prob(d, term.filter_op, term.start, term.path)
    out = 1.0
    for _ in range(term.power):
        out *= value
    return out


def _product(cache, query):
    out = 1.0
    for idx, term in enumerate(query.terms):
        try:
            out *= _term_value(cache, term)
        except PatternMCError as exc:
            raise type(exc)(f"term {idx}: {exc}") from exc
    return out


def compose(umm: Umm, query) -> float:
    """Evaluate a ``ComposedQuery`` (or a sequence of them, summed)."""
    cache = _RestrictionCache(umm)
    if isinstance(query, ComposedQuery):
        return _product(cache, query)
    queries = list(query)
    if not queries:
        raise ModelError("empty sum of composed queries")
    total = 0.0
    for q in queries:
        total += _product(cache, q)
    return total


def _check_pattern(umm, i):
    if not 1 <= i <= umm.K:
        raise ModelError(f"pattern index {i} outside 1..{umm.K}")


def _bound(N):
    return None if N is None or N == math.inf else int(N)


def _in(i, phi):
    return And(Alpha(i), phi)


def _repeat_path(target, avoid):
    """X((!avoid & !target) U target): come back to ``target`` without ``avoid``."""
    return Next(Until(And(Not(avoid), Not(target)), target))


# -- query encodings ------------------------------------------------------


def q1_query(i, N):
    return ComposedQuery((Term(Until(Not(FEED), _in(i, FEED), _bound(N))),))


def q2_query(i, N):
    return ComposedQuery(
        (
            Term(Until(TrueF(), _in(i, FEED), _bound(N))),
            Term(_repeat_path(FEED, PICK), restrict_to=Alpha(i), start=FEED, power=4),
        )
    )


def q3_query(i, N):
    only_i = Alpha(i)
    return ComposedQuery(
        (
            Term(Until(Not(PICK), _in(i, PICK), _bound(N))),
            Term(_repeat_path(PICK, FEED), restrict_to=only_i, start=PICK, power=4),
            Term(Until(Not(FEED), FEED), restrict_to=only_i, start=PICK),
            Term(_repeat_path(FEED, PICK), restrict_to=only_i, start=FEED, power=4),
        )
    )


def q4_query(i, N, N2):
    stay = And(Not(Alpha(i)), Not(FEED))
    return [
        ComposedQuery(
            (
                Term(Until(stay, _in(i, Atomic(label)), _bound(N))),
                Term(Until(Not(FEED), FEED, _bound(N2)), restrict_to=Alpha(i), start=Atomic(label)),
            )
        )
        for label in ENTRY_LABELS
    ]


# -- dedicated evaluations ------------------------------------------------


def q1(umm: Umm, i, N) -> float:
    """First feed within ``N`` taps, and it happens under pattern ``i``."""
    _check_pattern(umm, i)
    return engine.prob_from_init(umm, Until(Not(FEED), _in(i, FEED), _bound(N)))


def _restricted(umm, i):
    try:
        return restrict(umm, Alpha(i))
    except EmptyFilterError as exc:
        raise EmptyFilterError(f"pattern {i} has no states: {exc}") from exc


def _pow(value, times):
    out = 1.0
    for _ in range(times):
        out *= value
    return out


def _repeat_feed(sub):
    return _pow(engine.filtered_prob(sub, FilterOp.MIN, FEED, _repeat_path(FEED, PICK)), 4)


def q2(umm: Umm, i, N) -> float:
    """Reach a pattern-``i`` feed within ``N``, then feed four more times without picking."""
    _check_pattern(umm, i)
    sub = _restricted(umm, i)
    reach = engine.prob_from_init(umm, Until(TrueF(), _in(i, FEED), _bound(N)))
    return 1.0 * reach * _repeat_feed(sub)


def q3(umm: Umm, i, N) -> float:
    """Pick five times without feeding, then feed five times without picking."""
    _check_pattern(umm, i)
    sub = _restricted(umm, i)
    reach = engine.prob_from_init(umm, Until(Not(PICK), _in(i, PICK), _bound(N)))
    picks = _pow(engine.filtered_prob(sub, FilterOp.MIN, PICK, _repeat_path(PICK, FEED)), 4)
    to_feed = engine.filtered_prob(sub, FilterOp.MIN, PICK, Until(Not(FEED), FEED))
    return 1.0 * reach * picks * to_feed * _repeat_feed(sub)


def q4(umm: Umm, i, N, N2) -> float:
    """Stay outside pattern ``i`` without feeding, switch into it, then feed within ``N2``.

    The addends over entry labels are summed as written; a sum above 1 is
    reported with a warning since the entry events need not be disjoint.
    """
    _check_pattern(umm, i)
    sub = _restricted(umm, i)
    stay = And(Not(Alpha(i)), Not(FEED))
    total = 0.0
    for label in ENTRY_LABELS:
        entry = engine.prob_from_init(umm, Until(stay, _in(i, Atomic(label)), _bound(N)))
        then = engine.filtered_prob(sub, FilterOp.MIN, Atomic(label), Until(Not(FEED), FEED, _bound(N2)))
        total += 1.0 * entry * then
    if total > 1.0:
        warnings.warn(f"q4 addends sum to {total} > 1", RuntimeWarning, stacklevel=2)
    return total


QUESTIONS = {
    "q1": (q1, q1_query, ("i", "N")),
    "q2": (q2, q2_query, ("i", "N")),
    "q3": (q3, q3_query, ("i", "N")),
    "q4": (q4, q4_query, ("i", "N", "N2")),
}


def question(umm, qid, **params):
    try:
        func, _, names = QUESTIONS[qid]
    except KeyError:
        raise ModelError(f"unknown question {qid!r}; expected one of {sorted(QUESTIONS)}") from None
    missing = [p for p in names if p not in params]
    if missing:
        raise ModelError(f"{qid} needs parameters {missing}")
    return func(umm, *(params[p] for p in names))


# -- sweeps ---------------------------------------------------------------


def _parse_grid_value(value):
    if isinstance(value, str):
        if value.lower() in ("inf", "infinity", "unbounded"):
            return math.inf
        if ".." in value:
            lo, hi = value.split("..")
            return list(range(int(lo), int(hi) + 1))
        return int(value)
    return value


@dataclass(frozen=True)
class SweepSpec:
    """A question id and a grid of integer parameters (``inf`` allowed for N2)."""

    question: str
    grid: Dict[str, Sequence]
    theta: Optional[Sequence[float]] = None
    user: Optional[str] = None

    def __post_init__(self):
        if self.question not in QUESTIONS:
            raise ModelError(f"unknown question {self.question!r}")
        grid = {}
        for name, values in self.grid.items():
            values = _parse_grid_value(values)
            values = list(values) if isinstance(values, (list, tuple, range)) else [values]
            values = [_parse_grid_value(v) for v in values]
            if not values:
                raise ModelError(f"empty grid for parameter {name!r}")
            grid[name] = values
        needed = QUESTIONS[self.question][2]
        missing = [p for p in needed if p not in grid]
        extra = [p for p in grid if p not in needed]
        if missing or extra:
            raise ModelError(f"{self.question} grid must bind exactly {list(needed)}")
        object.__setattr__(self, "grid", {p: grid[p] for p in needed})

    @classmethod
    def from_dict(cls, doc):
        return cls(doc["question"], doc["grid"], doc.get("theta"), doc.get("user"))

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def cells(self):
        names = list(self.grid)
        for combo in itertools.product(*self.grid.values()):
            yield dict(zip(names, combo))


@dataclass
class SweepTable:
    columns: Tuple[str, ...]
    rows: list = field(default_factory=list)

    def values(self):
        return [r[-1] for r in self.rows]

    def write(self, stream, delimiter="\t"):
        writer = csv.writer(stream, delimiter=delimiter, lineterminator="\n")
        writer.writerow(self.columns)
        for row in self.rows:
            writer.writerow([_fmt_cell(v) for v in row])


def _fmt_cell(v):
    if isinstance(v, float):
        if math.isinf(v):
            return "inf"
        return format(v, ".12g")
    return str(v)


def sweep(umm: Umm, spec: SweepSpec, n_jobs=None) -> SweepTable:
    """Evaluate the question at every grid point, in grid order.

    Failing cells hold an ``error: ...`` string; the sweep continues.
    """
    func = QUESTIONS[spec.question][0]
    cells = list(spec.cells())

    def run(params):
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", RuntimeWarning)
                return func(umm, *params.values())
        except PatternMCError as exc:
            log.warning("sweep cell %s failed: %s", params, exc)
            return f"error: {exc}"

    if n_jobs in (None, 1):
        results = [run(p) for p in cells]
    else:
        from joblib import Parallel, delayed

        results = Parallel(n_jobs=n_jobs, prefer="threads")(delayed(run)(p) for p in cells)
    table = SweepTable(tuple(spec.grid) + ("probability",))
    for params, value in zip(cells, results):
        table.rows.append(tuple(params.values()) + (value,))
    return table


def conjoin_restriction(path, phi):
    """Rewrite a path formula so that leaving ``phi`` counts as failure.

    Evaluated on the full model from a state satisfying ``phi``, the result
    equals the original formula evaluated on the model restricted to ``phi``.
    """
    if isinstance(path, Until):
        return Until(And(phi, path.left), And(phi, path.right), path.bound)
    if isinstance(path, Next):
        inner = path.operand
        if isinstance(inner, Until):
            return Next(conjoin_restriction(inner, phi))
        return Next(And(phi, inner))
    raise ModelError(f"cannot restrict {path!r}")
