"""Formula AST for PCTL state/path formulas and filtered queries.

Formulas render to PRISM property syntax through ``str()``, so a formula
printed by this module parses back to an equal formula.
"""
import enum
import math
from dataclasses import dataclass
from typing import Optional, Union

from ..exceptions import FormulaError


class StateFormula:
    __slots__ = ()

    def __and__(self, other):
        return And(self, other)

    def __or__(self, other):
        return or_(self, other)

    def __invert__(self):
        return Not(self)


@dataclass(frozen=True)
class TrueF(StateFormula):
    def __str__(self):
        return "true"


@dataclass(frozen=True)
class Atomic(StateFormula):
    name: str

    def __str__(self):
        return f'"{self.name}"'


@dataclass(frozen=True)
class Alpha(StateFormula):
    """Holds in metamodel states that belong to pattern ``k``."""

    k: int

    def __post_init__(self):
        if self.k < 1:
            raise FormulaError(f"pattern index must be >= 1, got {self.k}")

    @property
    def label(self):
        return f"alpha={self.k}"

    def __str__(self):
        return f"(alpha={self.k})"


@dataclass(frozen=True)
class Not(StateFormula):
    operand: StateFormula

    def __str__(self):
        return f"(!{self.operand})"


@dataclass(frozen=True)
class And(StateFormula):
    left: StateFormula
    right: StateFormula

    def __str__(self):
        return f"({self.left}&{self.right})"


COMPARISONS = ("<=", "<", ">=", ">")


@dataclass(frozen=True)
class Prob(StateFormula):
    """``P~p [path]``; with ``op="=?"`` it is a numeric query."""

    path: "PathFormula"
    op: str = "=?"
    bound: Optional[float] = None

    def __post_init__(self):
        if self.op == "=?":
            if self.bound is not None:
                raise FormulaError("a P=? query takes no bound")
        elif self.op in COMPARISONS:
            if self.bound is None or not 0.0 <= self.bound <= 1.0:
                raise FormulaError(f"probability bound must lie in [0, 1], got {self.bound}")
        else:
            raise FormulaError(f"unknown comparison {self.op!r}")

    @property
    def is_query(self):
        return self.op == "=?"

    def holds(self, p):
        return {
            "<=": p <= self.bound,
            "<": p < self.bound,
            ">=": p >= self.bound,
            ">": p > self.bound,
        }[self.op]

    def __str__(self):
        head = "P=?" if self.is_query else f"P{self.op}{self.bound!r}"
        return f"{head}[{self.path}]"


class PathFormula:
    __slots__ = ()


@dataclass(frozen=True)
class Until(PathFormula):
    """``left U<=bound right``; ``bound=None`` means unbounded."""

    left: StateFormula
    right: StateFormula
    bound: Optional[int] = None

    def __post_init__(self):
        if self.bound is not None and (isinstance(self.bound, bool) or int(self.bound) != self.bound or self.bound < 0):
            raise FormulaError(f"step bound must be a non-negative integer, got {self.bound!r}")

    @property
    def horizon(self):
        return math.inf if self.bound is None else self.bound

    def __str__(self):
        op = "U" if self.bound is None else f"U<={self.bound}"
        if isinstance(self.left, TrueF):
            # printed as F; parses back to the same node
            return f"F{'' if self.bound is None else f'<={self.bound}'} {self.right}"
        return f"{self.left} {op} {self.right}"


@dataclass(frozen=True)
class Next(PathFormula):
    """``X operand``; the operand may itself be an until formula."""

    operand: Union[StateFormula, Until]

    @property
    def horizon(self):
        if isinstance(self.operand, Until):
            return 1 + self.operand.horizon
        return 1

    def __str__(self):
        if isinstance(self.operand, Until):
            return f"X({self.operand})"
        return f"X {self.operand}"


class FilterOp(str, enum.Enum):
    MIN = "min"
    MAX = "max"
    AVG = "avg"


@dataclass(frozen=True)
class Filter:
    """``filter(op, P=?[path], states)``: aggregate over a set of states."""

    op: FilterOp
    query: Prob
    states: StateFormula

    def __post_init__(self):
        object.__setattr__(self, "op", FilterOp(self.op))
        if not self.query.is_query:
            raise FormulaError("filter needs a P=? query")
        if not is_propositional(self.states):
            raise FormulaError("filter states must be a propositional formula")

    def __str__(self):
        return f"filter({self.op.value},{self.query},{self.states})"


def false():
    return Not(TrueF())


def or_(left, right):
    return Not(And(Not(left), Not(right)))


def implies(left, right):
    return Not(And(left, Not(right)))


def conj(*parts):
    """Left-nested conjunction; ``true`` for no arguments."""
    if not parts:
        return TrueF()
    out = parts[0]
    for p in parts[1:]:
        out = And(out, p)
    return out


def eventually(target, bound=None):
    return Until(TrueF(), target, bound)


def is_propositional(phi):
    if isinstance(phi, (TrueF, Atomic, Alpha)):
        return True
    if isinstance(phi, Not):
        return is_propositional(phi.operand)
    if isinstance(phi, And):
        return is_propositional(phi.left) and is_propositional(phi.right)
    return False
