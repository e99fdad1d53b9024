"""Multispectral document binarization with band-triple expert ensembles.

Configuration arguments accept dicts with the same keys as the JSON config
files of the ``msbin`` tool.
"""

import json as _json

from . import _msbin
from ._msbin import (
    ConfigError,
    Error,
    LoadError,
    MetricUndefined,
    MsImage,
    cvs_measure,
    holdout_sizes,
    load_binary,
    load_ms,
    ranking_scores,
    save_binary,
    set_threads,
)

__all__ = [
    "ConfigError",
    "Error",
    "LoadError",
    "MetricUndefined",
    "MsImage",
    "binarize",
    "combine",
    "cvs_measure",
    "evaluate",
    "generate",
    "generate_dataset",
    "holdout_sizes",
    "load_binary",
    "load_ms",
    "rank_bands",
    "ranking_scores",
    "run_cli",
    "save_binary",
    "select_experts",
    "set_threads",
]


def _text(cfg):
    if cfg is None:
        return ""
    if isinstance(cfg, str):
        return cfg
    return _json.dumps(cfg)


def generate(config=None, name="synth"):
    """Returns (MsImage, gt) where gt is a bool array, True for ink."""
    return _msbin.generate(_text(config), name)


def generate_dataset(n, seed, out_dir, config=None):
    """Writes a synthetic dataset; returns the path of its dataset.json."""
    return _msbin.generate_dataset(n, seed, _text(config), str(out_dir))


def binarize(image, triple, pipeline=None):
    return _msbin.binarize(image, tuple(triple), _text(pipeline))


def evaluate(pred, gt):
    return _msbin.evaluate(pred, gt)


def rank_bands(image, gt, pipeline=None, optimizer=None):
    return [(tuple(t), fm) for t, fm in _msbin.rank_bands(image, gt, _text(pipeline), _text(optimizer))]


def select_experts(rankings, max_frequent=5):
    return [tuple(t) for t in _msbin.select_experts([[tuple(t) for t in r] for r in rankings], max_frequent)]


def combine(image, model):
    """`model` is an ensemble dict as written by ``msbin train`` or its JSON text."""
    return _msbin.combine(image, _text(model))


def run_cli(*args):
    return _msbin.run_cli([str(a) for a in args])
