"""Activity patterns from event logs, and model checking of user metamodels.

Typical pipeline: ``ingest_traces`` -> ``MixtureOfMarkovChains.fit`` (or
``em_fit``) -> ``build_umm`` -> ``evaluate`` / the q1..q4 questions ->
``export_prism``.
"""
from .checker import evaluate, parse
from .documents import dump_model, load_model
from .inference import EmConfig, MixtureOfMarkovChains, em_fit, simulate
from .model import Dtmc, PatternMixture, StateSpace, Trace, UserStrategy, ingest_traces
from .prism import export_prism, export_properties
from .questions import compose, q1, q2, q3, q4, sweep
from .umm import build_umm, restrict

__version__ = "0.1.0"

__all__ = [
    "Dtmc",
    "EmConfig",
    "MixtureOfMarkovChains",
    "PatternMixture",
    "StateSpace",
    "Trace",
    "UserStrategy",
    "build_umm",
    "compose",
    "dump_model",
    "em_fit",
    "evaluate",
    "export_prism",
    "export_properties",
    "ingest_traces",
    "load_model",
    "parse",
    "q1",
    "q2",
    "q3",
    "q4",
    "restrict",
    "simulate",
    "sweep",
]
