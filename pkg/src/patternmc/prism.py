"""PRISM-language export of user metamodels and question properties.

The model file has one module with two variables, ``s`` (action state,
0 for the dummy start) and ``k`` (active pattern, 0 at the start), and one
command per value of ``s``. A ``formula alpha = k;`` line lets property
files use ``(alpha=i)`` directly.
"""
import math
import re

import numpy as np

from .checker.formula import And, Prob
from .exceptions import ModelError, PrismParseError
from .model import PatternMixture, UserStrategy
from .questions import QUESTIONS, ComposedQuery, conjoin_restriction

PROB_FORMAT = ".17g"


def _ident(text):
    out = re.sub(r"\W", "_", str(text))
    return out if out and not out[0].isdigit() else f"_{out}"


def _fmt(p):
    return format(float(p), PROB_FORMAT)


def export_prism(mixture: PatternMixture, theta, names=None, user="m"):
    """PRISM model text for the metamodel of ``mixture`` under ``theta``.

    ``names`` maps action states to label names (defaults to the state
    names of the mixture's space). Zero-probability updates are omitted;
    updates are ordered by target pattern, then target state.
    """
    if isinstance(theta, UserStrategy):
        user, theta = theta.user_id, theta.theta
    theta = mixture.check_theta(theta)
    n, K = mixture.n, mixture.K
    if names is None:
        names = mixture.space.state_names()
    missing = [s for s in range(1, n + 1) if s not in names]
    if missing:
        raise ModelError(f"no label name for states {missing}")

    lines = ["dtmc", "", "formula alpha = k;", "", f"module UserMetamodel_{_ident(user)}"]
    lines.append(f"  s : [0..{n}] init 0;")
    lines.append(f"  k : [0..{K}] init 0;")
    lines.append("")

    def command(guard, weights):
        updates = [
            f"{_fmt(p)} : (s'={t})&(k'={j})"
            for j in range(1, K + 1)
            for t in range(1, n + 1)
            if (p := weights[j - 1, t - 1]) > 0
        ]
        return f"  [] (s={guard}) -> " + " + ".join(updates) + ";"

    lines.append(command(0, np.outer(theta, mixture.iota)))
    for s in range(1, n + 1):
        lines.append(command(s, theta[:, None] * mixture.patterns[:, s - 1, :]))
    lines.append("endmodule")
    lines.append("")

    by_label = {}
    for s in range(1, n + 1):
        by_label.setdefault(names[s], []).append(s)
    for label, states in by_label.items():
        lines.append(f'label "{label}" = ' + "|".join(f"s={s}" for s in states) + ";")
    for j in range(1, K + 1):
        lines.append(f'label "alpha_{j}" = k={j};')
    return "\n".join(lines) + "\n"


_DECL = re.compile(r"^(s|k)\s*:\s*\[0\.\.(\d+)\]\s*init\s+0;$")
_CMD = re.compile(r"^\[\]\s*\(s=(\d+)\)\s*->\s*(.+);$")
_UPD = re.compile(r"^([-+0-9.eE]+)\s*:\s*\(s'=(\d+)\)\s*&\s*\(k'=(\d+)\)$")
_LABEL = re.compile(r'^label\s+"[^"]+"\s*=\s*.+;$')


def reparse(text):
    """Rebuild the metamodel transition matrix from ``export_prism`` output.

    Returns ``(trans, n, K)`` with ``trans`` in the flat index layout of
    ``build_umm``. Only the subset of PRISM emitted by ``export_prism`` is
    understood.
    """
    n = K = None
    rows = {}
    in_module = done = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("//") or line in ("dtmc", "formula alpha = k;"):
            continue
        if line.startswith("module "):
            if in_module or done:
                raise PrismParseError("unexpected second module", lineno)
            in_module = True
            continue
        if line == "endmodule":
            if not in_module:
                raise PrismParseError("endmodule outside a module", lineno)
            in_module, done = False, True
            continue
        if in_module and (m := _DECL.match(line)):
            if m.group(1) == "s":
                n = int(m.group(2))
            else:
                K = int(m.group(2))
            continue
        if in_module and (m := _CMD.match(line)):
            if n is None or K is None:
                raise PrismParseError("command before variable declarations", lineno)
            src = int(m.group(1))
            if src in rows or src > n:
                raise PrismParseError(f"duplicate or out-of-range command for s={src}", lineno)
            row = np.zeros(n * K + 1)
            for part in m.group(2).split(" + "):
                um = _UPD.match(part.strip())
                if um is None:
                    raise PrismParseError(f"cannot parse update {part.strip()!r}", lineno)
                p, t, j = float(um.group(1)), int(um.group(2)), int(um.group(3))
                if not (1 <= t <= n and 1 <= j <= K):
                    raise PrismParseError(f"update target ({t}, {j}) out of range", lineno)
                row[(j - 1) * n + t] += p
            rows[src] = row
            continue
        if not in_module and _LABEL.match(line):
            continue
        raise PrismParseError(f"unrecognized syntax: {line!r}", lineno)

    if not done:
        raise PrismParseError("no complete module found")
    if sorted(rows) != list(range(n + 1)):
        raise PrismParseError(f"expected commands for s=0..{n}, got {sorted(rows)}")
    trans = np.zeros((n * K + 1, n * K + 1))
    trans[0] = rows[0]
    for k in range(1, K + 1):
        for s in range(1, n + 1):
            trans[(k - 1) * n + s] = rows[s]
    return trans, n, K


# -- properties -------------------------------------------------------------


def _term_text(term):
    if term.restrict_to is None:
        path = term.path
    else:
        path = conjoin_restriction(term.path, term.restrict_to)
    text = str(Prob(path))
    if term.start is not None:
        states = term.start if term.restrict_to is None else And(term.restrict_to, term.start)
        text = f"filter({term.filter_op.value},{text},{states})"
    if term.power != 1:
        text = f"pow({text},{term.power})"
    return text


def property_terms(qid, **params):
    """Per-product list of factor texts for question ``qid``."""
    try:
        _, encode, names = QUESTIONS[qid]
    except KeyError:
        raise ModelError(f"unknown question {qid!r}") from None
    missing = [p for p in names if p not in params]
    if missing:
        raise ModelError(f"{qid} needs parameters {missing}")
    i = params["i"]
    if isinstance(i, bool) or not isinstance(i, int) or i < 1:
        raise ModelError(f"pattern index must be a positive integer, got {i!r}")
    values = [params[p] for p in names]
    query = encode(*values)
    products = [query] if isinstance(query, ComposedQuery) else list(query)
    return [[_term_text(t) for t in q.terms] for q in products]


def export_properties(qid, **params):
    """PRISM property text for one question with parameters substituted."""
    header = " ".join(f"{k}={'inf' if v == math.inf else v}" for k, v in params.items())
    body = "+".join("*".join(factors) for factors in property_terms(qid, **params))
    return f"// {qid} {header}\n{body}\n"
