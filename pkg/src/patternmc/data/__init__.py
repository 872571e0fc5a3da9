"""Bundled example model: two Yoshi-shaped activity patterns.

``yoshi.json`` holds states ``seeY, feed, seeP, pick`` (1..4), a pair of
patterns whose weights fall in three bands (heavy > 0.1, light in
[0.01, 0.1], absent = 0) and the example strategy ``(0.7, 0.3)``. The
weights were tuned with ``scripts/calibrate_fixtures.py``; they are not
measured from any real log.
"""
from importlib import resources

from ..documents import model_from_dict

YOSHI = "yoshi"
THETA = (0.7, 0.3)


def yoshi_path():
    return resources.files(__name__).joinpath("yoshi.json")


def load_yoshi():
    """``(mixture, strategies)`` of the bundled example."""
    import json

    return model_from_dict(json.loads(yoshi_path().read_text()))
