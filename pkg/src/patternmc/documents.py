"""JSON documents for mixtures, fit results and metamodels.

Floats are written with Python's shortest round-trip representation, so
loading a document reproduces every probability bit for bit.
"""
import json
from pathlib import Path

import numpy as np

from .exceptions import ModelError
from .model import PatternMixture, StateSpace, UserStrategy

MODEL_FORMAT = "patternmc-model"
UMM_FORMAT = "patternmc-umm"
VERSION = 1


def _dump(path, doc):
    text = json.dumps(doc, indent=1) + "\n"
    if path is None:
        return text
    Path(path).write_text(text)
    return text


def model_to_dict(mixture: PatternMixture, strategies=(), fit=None):
    space = mixture.space
    names = space.state_names()
    doc = {
        "format": MODEL_FORMAT,
        "version": VERSION,
        "n": mixture.n,
        "K": mixture.K,
        "states": [names[s] for s in space.action_states],
        "labels": {str(s): sorted(space.labels[s]) for s in space.action_states},
        "iota": mixture.iota.tolist(),
        "patterns": mixture.patterns.tolist(),
        "strategies": [{"user_id": st.user_id, "theta": st.theta.tolist()} for st in strategies],
    }
    if fit is not None:
        doc["fit"] = fit
    return doc


def dump_model(path, mixture, strategies=(), fit=None):
    """Write a model document; returns the text. ``path=None`` only returns it."""
    return _dump(path, model_to_dict(mixture, strategies, fit))


def model_from_dict(doc):
    if doc.get("format") != MODEL_FORMAT:
        raise ModelError(f"not a {MODEL_FORMAT} document")
    names = doc["states"]
    if len(names) != doc["n"]:
        raise ModelError("state list length does not match n")
    extra = {int(s): set(labs) for s, labs in doc.get("labels", {}).items()}
    space = StateSpace.from_names(names, extra_labels=extra)
    mixture = PatternMixture(space, np.array(doc["patterns"]), np.array(doc["iota"]))
    if mixture.K != doc["K"]:
        raise ModelError("number of patterns does not match K")
    strategies = [UserStrategy(str(s["user_id"]), s["theta"]) for s in doc.get("strategies", [])]
    for st in strategies:
        mixture.check_theta(st.theta)
    return mixture, strategies


def load_model(path):
    """Read a model document: returns ``(mixture, strategies)``."""
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ModelError(f"{path}: not valid JSON ({exc})") from None
    return model_from_dict(doc)


def fit_result_to_dict(result):
    fit = {
        "loglik": result.loglik,
        "chosen_restart": result.chosen_restart,
        "iters_per_restart": list(result.iters_per_restart),
    }
    return model_to_dict(result.mixture, result.strategies, fit)


def dump_fit_result(path, result):
    return _dump(path, fit_result_to_dict(result))


def write_diagnostics(stream, result):
    """Per-restart log-likelihood trajectories as ``restart iter loglik`` rows."""
    stream.write("restart\titer\tloglik\n")
    for r, traj in enumerate(result.trajectories):
        for it, ll in enumerate(traj):
            stream.write(f"{r}\t{it}\t{ll!r}\n")


def umm_to_dict(umm):
    space = umm.dtmc.space
    return {
        "format": UMM_FORMAT,
        "version": VERSION,
        "n": umm.n,
        "K": umm.K,
        "theta": umm.theta.tolist(),
        "states": [
            {"index": i, "s": s, "k": k, "labels": sorted(space.labels[i])}
            for i, (s, k) in enumerate(umm.backmap)
        ],
        "init": umm.dtmc.init.tolist(),
        "trans": umm.dtmc.trans.tolist(),
    }


def dump_umm(path, umm):
    return _dump(path, umm_to_dict(umm))


def load_umm_matrix(path):
    """Transition matrix and back-map of a metamodel document."""
    doc = json.loads(Path(path).read_text())
    if doc.get("format") != UMM_FORMAT:
        raise ModelError(f"not a {UMM_FORMAT} document")
    return np.array(doc["trans"]), [(st["s"], st["k"]) for st in doc["states"]]
