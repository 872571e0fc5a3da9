"""Command-line interface.

Exit status: 0 success, 2 usage error, 3 parse error (formula, trace log,
PRISM text), 4 model/config error, 5 every sweep cell failed.
"""
import functools
import json
import math
import sys

import click
import numpy as np

from . import data as bundled
from .checker import evaluate
from .documents import dump_fit_result, dump_umm, load_model, write_diagnostics
from .exceptions import FormulaError, ModelError, PatternMCError, PrismParseError, TraceFormatError
from .inference import EmConfig, em_fit, simulate_population
from .model import StateSpace, ingest_traces, scan_event_names, write_traces
from .prism import export_prism, export_properties
from .questions import SweepSpec, question, sweep
from .umm import build_umm

EXIT_PARSE = 3
EXIT_MODEL = 4
EXIT_SWEEP = 5


def _fail(code, message):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def handle_errors(func):
    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except (FormulaError, TraceFormatError, PrismParseError) as exc:
            _fail(EXIT_PARSE, exc)
        except (PatternMCError, ValueError, OSError, KeyError) as exc:
            _fail(EXIT_MODEL, exc)

    return wrapper


def _load(model):
    if model == bundled.YOSHI:
        return bundled.load_yoshi()
    return load_model(model)


def _theta(mixture, strategies, theta, user):
    if theta:
        return mixture.check_theta([float(x) for x in theta.split(",")]), "m"
    if user is not None:
        for st in strategies:
            if st.user_id == user:
                return mixture.check_theta(st.theta), user
        raise ModelError(f"user {user!r} not found in model document")
    if len(strategies) == 1:
        return mixture.check_theta(strategies[0].theta), strategies[0].user_id
    raise ModelError("pass --theta or --user to select a strategy")


def _params(pairs):
    out = {}
    for pair in pairs:
        name, _, value = pair.partition("=")
        if not value:
            raise click.BadParameter(f"expected NAME=VALUE, got {pair!r}")
        out[name] = math.inf if value.lower() in ("inf", "infinity") else int(value)
    return out


model_option = click.option(
    "--model", "-m", required=True, help=f"Model document (JSON), or '{bundled.YOSHI}' for the bundled example."
)
theta_option = click.option("--theta", help="Comma-separated strategy vector, e.g. 0.7,0.3.")
user_option = click.option("--user", help="Take the strategy of this user from the model document.")


class _ConfigGroup(click.Group):
    def make_context(self, info_name, args, parent=None, **extra):
        # --config must be known before sub-command defaults are resolved
        if "--config" in args:
            idx = args.index("--config")
            with open(args[idx + 1]) as fh:
                extra["default_map"] = json.load(fh)
        return super().make_context(info_name, args, parent=parent, **extra)


@click.group(cls=_ConfigGroup)
@click.option("--config", type=click.Path(exists=True), help="JSON file of per-command defaults; flags override it.")
def main(config):
    """Infer activity patterns from logs and model-check user metamodels."""


@main.command("simulate")
@model_option
@theta_option
@user_option
@click.option("--users", "-M", "n_users", type=int, default=100, show_default=True)
@click.option("--length", "-T", type=int, default=100, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--output", "-o", type=click.Path(), required=True)
@handle_errors
def simulate_cmd(model, theta, user, n_users, length, seed, output):
    """Sample traces from a model and write them as a tab-separated log."""
    mixture, strategies = _load(model)
    th, _ = _theta(mixture, strategies, theta, user)
    traces = simulate_population(mixture, np.tile(th, (n_users, 1)), length, seed) if n_users else []
    with open(output, "w") as fh:
        write_traces(traces, mixture.space.state_names(), fh)


@main.command("fit")
@click.option("--traces", "-t", type=click.Path(exists=True), required=True)
@click.option("--states", help="Comma-separated event names for states 1..n (default: sorted names in the log).")
@click.option("--format", "fmt", type=click.Choice(["tsv", "csv"]), default="tsv", show_default=True)
@click.option("--policy", type=click.Choice(["strict", "skip"]), default="strict", show_default=True)
@click.option("-K", "--components", "K", type=int, default=2, show_default=True)
@click.option("--restarts", type=int, default=10, show_default=True)
@click.option("--max-iters", type=int, default=500, show_default=True)
@click.option("--tol", type=float, default=1e-8, show_default=True)
@click.option("--smoothing", type=float, default=1e-6, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--jobs", type=int, default=None)
@click.option("--output", "-o", type=click.Path(), required=True)
@click.option("--diagnostics", type=click.Path(), help="Write per-restart log-likelihood trajectories here.")
@handle_errors
def fit_cmd(traces, states, fmt, policy, K, restarts, max_iters, tol, smoothing, seed, jobs, output, diagnostics):
    """Fit K activity patterns and per-user strategies by EM."""
    with open(traces, "rb") as fh:
        raw = fh.read()
    if states:
        names = [s.strip() for s in states.split(",")]
    else:
        names = scan_event_names(raw, fmt)
    mapping = {name: i for i, name in enumerate(names, start=1)}
    data = ingest_traces(raw, mapping, fmt=fmt, policy=policy)
    config = EmConfig(K, max_iters, tol, restarts, seed, smoothing, jobs)
    result = em_fit(data, config, StateSpace.from_names(names))
    dump_fit_result(output, result)
    if diagnostics:
        with open(diagnostics, "w") as fh:
            write_diagnostics(fh, result)
    click.echo(f"loglik {result.loglik!r} (restart {result.chosen_restart})")


@main.command("build-umm")
@model_option
@theta_option
@user_option
@click.option("--output", "-o", type=click.Path(), required=True)
@handle_errors
def build_umm_cmd(model, theta, user, output):
    """Write the user metamodel (states, back-map, matrix) as JSON."""
    mixture, strategies = _load(model)
    th, _ = _theta(mixture, strategies, theta, user)
    dump_umm(output, build_umm(mixture, th))


@main.command("check")
@model_option
@theta_option
@user_option
@click.option("--formula", "-f", help='Property text, e.g. \'P=?[ F<=5 "feed" ]\'.')
@click.option("--question", "-q", "qid", type=click.Choice(["q1", "q2", "q3", "q4"]))
@click.option("--param", "-p", "params", multiple=True, help="Question parameter NAME=VALUE (repeatable).")
@handle_errors
def check_cmd(model, theta, user, formula, qid, params):
    """Evaluate a formula or question on a user metamodel and print the result."""
    if (formula is None) == (qid is None):
        raise click.UsageError("give exactly one of --formula or --question")
    mixture, strategies = _load(model)
    th, _ = _theta(mixture, strategies, theta, user)
    umm = build_umm(mixture, th)
    if formula is not None:
        value = evaluate(umm, formula)
    else:
        value = question(umm, qid, **_params(params))
    click.echo(repr(value) if isinstance(value, float) else str(value).lower())


@main.command("sweep")
@click.option("--spec", "-s", "spec_path", type=click.Path(exists=True), required=True)
@click.option("--model", "-m", help="Overrides the model named in the spec file.")
@click.option("--jobs", type=int, default=None)
@click.option("--output", "-o", type=click.Path(), required=True)
@handle_errors
def sweep_cmd(spec_path, model, jobs, output):
    """Evaluate a question over a parameter grid and write a table."""
    with open(spec_path) as fh:
        doc = json.load(fh)
    spec = SweepSpec.from_dict(doc)
    model = model or doc.get("model")
    if model is None:
        raise ModelError("no model given (--model or 'model' in the spec file)")
    mixture, strategies = _load(model)
    th, _ = _theta(mixture, strategies, ",".join(map(str, spec.theta)) if spec.theta else None, spec.user)
    table = sweep(build_umm(mixture, th), spec, n_jobs=jobs)
    with open(output, "w") as fh:
        table.write(fh)
    if table.rows and all(isinstance(v, str) for v in table.values()):
        _fail(EXIT_SWEEP, "every sweep cell failed")


@main.command("export-prism")
@model_option
@theta_option
@user_option
@click.option("--output", "-o", type=click.Path(), required=True, help="PRISM model file (.pm).")
@click.option("--question", "-q", "qid", type=click.Choice(["q1", "q2", "q3", "q4"]))
@click.option("--param", "-p", "params", multiple=True)
@click.option("--properties", type=click.Path(), help="Property file to write for --question.")
@handle_errors
def export_prism_cmd(model, theta, user, output, qid, params, properties):
    """Write the metamodel as a PRISM model (and optionally a property file)."""
    mixture, strategies = _load(model)
    th, uid = _theta(mixture, strategies, theta, user)
    with open(output, "w") as fh:
        fh.write(export_prism(mixture, th, user=uid))
    if qid:
        text = export_properties(qid, **_params(params))
        if properties:
            with open(properties, "w") as fh:
                fh.write(text)
        else:
            click.echo(text, nl=False)


if __name__ == "__main__":
    main()
