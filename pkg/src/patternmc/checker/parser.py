"""Recursive-descent parser for PRISM-style property text.

Grammar (whitespace insignificant)::

    query   := filter | state
    filter  := 'filter' '(' ('min'|'max'|'avg') ',' prob ',' state ')'
    state   := conj ('|' conj)*
    conj    := unary ('&' unary)*
    unary   := '!' unary | atom
    atom    := 'true' | 'false' | STRING | 'alpha' '=' INT | 'k' '=' INT
             | NAME | '(' state ')' | prob
    prob    := 'P' ('=?' | CMP NUMBER) '[' path ']'
    path    := 'X' (state | '(' until ')') | until
    until   := 'F' bound? state | state 'U' bound? state
    bound   := '<=' INT | '<' INT
"""
import re

from ..exceptions import FormulaError
from .formula import (
    COMPARISONS,
    Alpha,
    And,
    Atomic,
    Filter,
    Next,
    Not,
    Prob,
    StateFormula,
    TrueF,
    Until,
    false,
    or_,
)

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<string>"[^"]*")
  | (?P<number>\d+(?:\.\d*)?(?:[eE][-+]?\d+)?|\.\d+(?:[eE][-+]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op><=|>=|=\?|<|>|=|!|&|\||\(|\)|\[|\]|,)
    """,
    re.VERBOSE,
)

_RESERVED = {"true", "false", "P", "X", "U", "F", "filter"}


def tokenize(text):
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise FormulaError(f"unexpected character {text[pos]!r}", pos)
        kind = m.lastgroup
        if kind != "ws":
            value = m.group()
            if kind == "string":
                value = value[1:-1]
            tokens.append((kind, value, pos))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text):
        self.text = text
        self.tokens = tokenize(text)
        self.i = 0

    # -- token helpers -------------------------------------------------
    def peek(self, offset=0):
        return self.tokens[min(self.i + offset, len(self.tokens) - 1)]

    def at(self, value, kind=None):
        k, v, _ = self.peek()
        return v == value and kind in (None, k) and k != "string"

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value):
        kind, v, pos = self.peek()
        if v != value or kind == "string":
            raise FormulaError(f"expected {value!r}, found {v or 'end of input'!r}", pos)
        return self.take()

    def error(self, message):
        raise FormulaError(message, self.peek()[2])

    def integer(self):
        kind, v, pos = self.take()
        if kind != "number" or not v.isdigit():
            raise FormulaError(f"expected a non-negative integer, found {v!r}", pos)
        return int(v)

    # -- grammar -------------------------------------------------------
    def query(self):
        if self.at("filter", "name"):
            return self.filter()
        return self.state()

    def filter(self):
        self.expect("filter")
        self.expect("(")
        kind, op, pos = self.take()
        if op not in ("min", "max", "avg"):
            raise FormulaError(f"unknown filter operator {op!r}", pos)
        self.expect(",")
        start = self.peek()[2]
        query = self.state()
        if not isinstance(query, Prob) or not query.is_query:
            raise FormulaError("filter expects a P=? query", start)
        self.expect(",")
        states = self.state()
        self.expect(")")
        return Filter(op, query, states)

    def state(self):
        left = self.conj()
        while self.at("|"):
            self.take()
            left = or_(left, self.conj())
        return left

    def conj(self):
        left = self.unary()
        while self.at("&"):
            self.take()
            left = And(left, self.unary())
        return left

    def unary(self):
        if self.at("!"):
            self.take()
            return Not(self.unary())
        return self.atom()

    def atom(self):
        kind, v, pos = self.peek()
        if kind == "string":
            self.take()
            return Atomic(v)
        if kind == "name":
            if v == "true":
                self.take()
                return TrueF()
            if v == "false":
                self.take()
                return false()
            if v == "P":
                return self.prob()
            if v in ("alpha", "k") and self.peek(1)[1] == "=":
                self.take()
                self.take()
                return Alpha(self.integer())
            if v in _RESERVED:
                self.error(f"unexpected keyword {v!r}")
            self.take()
            return Atomic(v)
        if v == "(":
            self.take()
            inner = self.state()
            self.expect(")")
            return inner
        self.error(f"unexpected {v or 'end of input'!r}")

    def prob(self):
        self.expect("P")
        kind, v, pos = self.take()
        if v == "=?":
            op, bound = "=?", None
        elif v in COMPARISONS:
            kind, num, npos = self.take()
            if kind != "number":
                raise FormulaError(f"expected a probability bound, found {num!r}", npos)
            op, bound = v, float(num)
        else:
            raise FormulaError(f"expected '=?' or a comparison after P, found {v!r}", pos)
        self.expect("[")
        path = self.path()
        self.expect("]")
        return Prob(path, op, bound)

    def bound(self):
        if self.at("<="):
            self.take()
            return self.integer()
        if self.at("<"):
            _, _, pos = self.take()
            n = self.integer()
            if n < 1:
                raise FormulaError("strict step bound must be >= 1", pos)
            return n - 1
        return None

    def path(self):
        if self.at("X", "name"):
            self.take()
            return Next(self.next_operand())
        return self.until()

    def until(self):
        if self.at("F", "name"):
            self.take()
            n = self.bound()
            return Until(TrueF(), self.state(), n)
        left = self.state()
        if not self.at("U", "name"):
            self.error("expected 'U' in path formula")
        self.take()
        n = self.bound()
        return Until(left, self.state(), n)

    def next_operand(self):
        # X( a U b ) is an until nested under next; anything else is a state formula
        if self.at("("):
            saved = self.i
            self.take()
            try:
                inner = self.until()
                self.expect(")")
                return inner
            except FormulaError:
                self.i = saved
        return self.state()

    def finish(self, result):
        kind, v, pos = self.peek()
        if kind != "end":
            raise FormulaError(f"unexpected trailing input {v!r}", pos)
        return result


def parse(text):
    """Parse a query: a state formula (possibly ``P=?[...]``) or a filter."""
    p = _Parser(text)
    return p.finish(p.query())


def parse_state(text) -> StateFormula:
    p = _Parser(text)
    return p.finish(p.state())


def parse_path(text):
    p = _Parser(text)
    return p.finish(p.path())
