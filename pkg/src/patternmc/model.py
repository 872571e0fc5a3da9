"""Core model types: state spaces, DTMCs, pattern mixtures, strategies, traces.

State identifiers are integers. A state space built for activity patterns
numbers its action states ``1..n`` and, when it carries a dummy initial
state, reserves ``0`` for it (labelled ``init``). Matrices are always stored
in the order of ``StateSpace.states``; for pattern matrices (which never
contain the dummy) row/column ``i`` is action state ``i + 1``.
"""
import csv
import io
from dataclasses import dataclass, field
from datetime import datetime
from types import MappingProxyType
from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np

from .exceptions import ModelError, TraceFormatError, UnmappedEventError
from .validation import (
    PROB_TOL,
    check_probability_vector,
    check_stochastic_matrix,
    exact_row_sums,
)

INIT_LABEL = "init"
DUMMY_STATE = 0


def _frozen(arr):
    arr = np.array(arr, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class StateSpace:
    """An ordered set of states with their atomic-proposition labels."""

    states: tuple
    labels: Mapping[int, frozenset] = field(repr=False)
    has_dummy_init: bool = False
    # propositions known to formulas even if no state here carries them
    # (sub-spaces keep the universe of the space they were cut from)
    inherited: frozenset = field(default=frozenset(), repr=False)

    def __post_init__(self):
        states = tuple(int(s) for s in self.states)
        if len(set(states)) != len(states):
            raise ModelError("duplicate state identifiers")
        if not states:
            raise ModelError("a state space needs at least one state")
        if self.has_dummy_init and DUMMY_STATE not in states:
            raise ModelError("dummy init state 0 missing from state list")
        unknown = set(self.labels) - set(states)
        if unknown:
            raise ModelError(f"labels given for unknown states {sorted(unknown)}")
        labels = {s: frozenset(self.labels.get(s, ())) for s in states}
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "labels", MappingProxyType(labels))
        object.__setattr__(self, "_pos", {s: i for i, s in enumerate(states)})
        object.__setattr__(self, "inherited", frozenset(self.inherited))

    @classmethod
    def from_names(cls, names: Sequence[str], dummy_init=True, extra_labels=None):
        """Action states ``1..n`` each labelled by its name, plus the dummy.

        >>> StateSpace.from_names(["seeY", "feed"]).label_of(2)
        frozenset({'feed'})
        """
        labels = {i + 1: {name} for i, name in enumerate(names)}
        for s, extra in (extra_labels or {}).items():
            labels.setdefault(s, set()).update(extra)
        states = list(range(1, len(names) + 1))
        if dummy_init:
            labels[DUMMY_STATE] = {INIT_LABEL}
            states.insert(0, DUMMY_STATE)
        return cls(tuple(states), labels, has_dummy_init=dummy_init)

    def __len__(self):
        return len(self.states)

    @property
    def n_states(self):
        """Number of action (non-dummy) states."""
        return len(self.states) - int(self.has_dummy_init)

    @property
    def action_states(self):
        return tuple(s for s in self.states if not (self.has_dummy_init and s == DUMMY_STATE))

    @property
    def propositions(self):
        return frozenset().union(self.inherited, *self.labels.values())

    def position(self, state):
        try:
            return self._pos[state]
        except KeyError:
            raise ModelError(f"state {state!r} is not in this state space") from None

    def label_of(self, state):
        self.position(state)
        return self.labels[state]

    def state_names(self):
        """Name of each action state: its single non-``alpha`` label if unique."""
        names = {}
        for s in self.action_states:
            own = sorted(lab for lab in self.labels[s] if not lab.startswith("alpha="))
            names[s] = own[0] if len(own) == 1 else str(s)
        return names

    def subspace(self, keep: Iterable[int]):
        keep = set(keep)
        states = tuple(s for s in self.states if s in keep)
        return StateSpace(
            states,
            {s: self.labels[s] for s in states},
            has_dummy_init=self.has_dummy_init and DUMMY_STATE in keep,
            inherited=self.propositions,
        )


class Violation(NamedTuple):
    kind: str  # "row", "init" or "range"
    index: int
    deviation: float


@dataclass(frozen=True, eq=False)
class Dtmc:
    """A discrete-time Markov chain over a ``StateSpace``.

    ``restricted`` marks chains obtained by deleting states; their rows
    may be substochastic (the missing mass is the probability of leaving).
    """

    space: StateSpace
    init: np.ndarray
    trans: np.ndarray
    restricted: bool = False
    validate: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self):
        size = len(self.space)
        init = _frozen(self.init)
        trans = _frozen(self.trans)
        if init.shape != (size,) or trans.shape != (size, size):
            raise ModelError(
                f"expected init of shape ({size},) and trans ({size}, {size}); "
                f"got {init.shape} and {trans.shape}"
            )
        object.__setattr__(self, "init", init)
        object.__setattr__(self, "trans", trans)
        if self.validate:
            problems = validate_dtmc(self)
            if problems:
                raise ModelError(f"invalid DTMC: {problems[0]}")

    @property
    def n(self):
        return len(self.space)

    def sat_prop(self, name):
        return np.array([name in self.space.labels[s] for s in self.space.states])


def validate_dtmc(d: Dtmc):
    """Report stochasticity violations of ``d`` without raising.

    Returns a list of ``Violation`` tuples; an empty list means ``d`` is
    well formed. Restricted chains may have rows summing to less than one.
    """
    report = []
    trans = np.asarray(d.trans, dtype=float)
    init = np.asarray(d.init, dtype=float)
    bad = np.argwhere((trans < 0) | (trans > 1) | ~np.isfinite(trans))
    for i, j in bad:
        report.append(Violation("range", int(i), float(trans[i, j])))
    for i, total in enumerate(np.atleast_1d(exact_row_sums(trans))):
        dev = float(total - 1.0)
        if dev > PROB_TOL or (not d.restricted and dev < -PROB_TOL):
            report.append(Violation("row", i, abs(dev)))
    if np.any((init < 0) | (init > 1)):
        report.append(Violation("range", -1, float(init.min())))
    dev = float(exact_row_sums(init) - 1.0)
    if abs(dev) > PROB_TOL and not (d.restricted and dev < 0):
        report.append(Violation("init", -1, abs(dev)))
    return report


@dataclass(frozen=True, eq=False)
class PatternMixture:
    """``K`` activity patterns sharing one state space and initial distribution.

    ``patterns[k - 1, s - 1, t - 1]`` is ``P_k(s, t)`` and ``iota[s - 1]`` is
    the probability of starting in action state ``s``.
    """

    space: StateSpace
    patterns: np.ndarray
    iota: np.ndarray

    def __post_init__(self):
        n = self.space.n_states
        patterns = np.array(self.patterns, dtype=float)
        if patterns.ndim == 2:
            patterns = patterns[None]
        if patterns.ndim != 3 or patterns.shape[0] < 1:
            raise ModelError("patterns must be a (K, n, n) array with K >= 1")
        for k, mat in enumerate(patterns, start=1):
            check_stochastic_matrix(mat, name=f"pattern {k}", size=n)
        iota = check_probability_vector(self.iota, name="iota", length=n)
        object.__setattr__(self, "patterns", _frozen(patterns))
        object.__setattr__(self, "iota", _frozen(iota))

    @property
    def K(self):
        return self.patterns.shape[0]

    @property
    def n(self):
        return self.space.n_states

    def check_theta(self, theta):
        return check_probability_vector(theta, name="theta", length=self.K)

    def averaged(self, theta):
        """The mixture-averaged transition matrix ``sum_k theta(k) P_k``."""
        theta = self.check_theta(theta)
        return np.einsum("k,kst->st", theta, self.patterns)

    def permuted(self, order):
        """Reorder components: new component ``j`` is old ``order[j]``."""
        return PatternMixture(self.space, self.patterns[list(order)], self.iota)


@dataclass(frozen=True)
class UserStrategy:
    user_id: str
    theta: np.ndarray = field(compare=False)

    def __post_init__(self):
        object.__setattr__(self, "theta", _frozen(check_probability_vector(self.theta, name="theta")))


@dataclass(frozen=True)
class Trace:
    user_id: str
    events: tuple

    def __post_init__(self):
        events = tuple(int(e) for e in self.events)
        if not events:
            raise ModelError(f"trace for user {self.user_id!r} is empty")
        if min(events) < 1:
            raise ModelError(f"trace for user {self.user_id!r} contains a non-action state")
        object.__setattr__(self, "events", events)

    def __len__(self):
        return len(self.events)

    def check_space(self, n):
        if max(self.events) > n:
            raise ModelError(f"trace for user {self.user_id!r} uses state {max(self.events)} > {n}")


TRACE_HEADER = ("user_id", "event", "timestamp")
_DELIMITERS = {"tsv": "\t", "csv": ","}


def _read_rows(source, fmt):
    """Yield ``(lineno, user_id, event)`` for every data line of a log."""
    if fmt not in _DELIMITERS:
        raise ValueError(f"unknown log format {fmt!r}; expected one of {sorted(_DELIMITERS)}")
    if isinstance(source, (bytes, bytearray)):
        source = io.BytesIO(source)
    if hasattr(source, "read"):
        data = source.read()
        if isinstance(data, bytes):
            data = data.decode("utf-8")
        lines = data.splitlines()
    else:
        lines = list(source)

    reader = csv.reader(lines, delimiter=_DELIMITERS[fmt])
    for row in reader:
        lineno = reader.line_num
        if not row or all(not cell.strip() for cell in row):
            continue
        row = [cell.strip() for cell in row]
        if lineno == 1 and row[0] == "user_id":
            continue
        if len(row) not in (2, 3) or not row[0] or not row[1]:
            raise TraceFormatError(f"expected 2 or 3 fields, got {len(row)}", lineno)
        if len(row) == 3 and row[2]:
            try:
                datetime.fromisoformat(row[2])
            except ValueError:
                raise TraceFormatError(f"bad timestamp {row[2]!r}", lineno) from None
        yield lineno, row[0], row[1]


def scan_event_names(source, fmt="tsv"):
    """Distinct event names of a log, sorted."""
    return sorted({event for _, _, event in _read_rows(source, fmt)})


def ingest_traces(source, mapping: Mapping[str, int], fmt="tsv", policy="strict"):
    """Read a line-oriented event log into one ``Trace`` per user.

    Each line holds ``user_id``, ``event_name`` and an optional ISO-8601
    timestamp separated by a tab (``fmt="tsv"``) or comma (``fmt="csv"``).
    A leading header line starting with ``user_id`` and blank lines are
    ignored. Users appear in order of first occurrence and each user's
    events keep their input order. With ``policy="skip"`` unmapped events
    are dropped; with ``"strict"`` they raise ``UnmappedEventError``.
    """
    if policy not in ("strict", "skip"):
        raise ValueError(f"unknown unmapped-event policy {policy!r}")
    per_user = {}
    for lineno, user, event in _read_rows(source, fmt):
        if event not in mapping:
            if policy == "strict":
                raise UnmappedEventError(event, lineno)
            continue
        per_user.setdefault(user, []).append(mapping[event])
    return [Trace(user, events) for user, events in per_user.items() if events]


def write_traces(traces: Iterable[Trace], names: Mapping[int, str], stream):
    """Write traces in the tab-separated log format (with header)."""
    stream.write("\t".join(TRACE_HEADER[:2]) + "\n")
    for tr in traces:
        for e in tr.events:
            stream.write(f"{tr.user_id}\t{names[e]}\n")
