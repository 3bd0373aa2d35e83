"""Feature shift localization and correction for tabular data."""

import json

import numpy as np

from . import _core
from ._core import (
    enforce_nonincreasing,
    feature_removal_policy,
    find_knee,
    henze_penrose,
    num_threads,
    savitzky_golay,
    set_num_threads,
    symmetric_kl,
    wasserstein2,
)

__all__ = [
    "corrupt",
    "correct",
    "enforce_nonincreasing",
    "estimate_tv",
    "f1_localization",
    "feature_removal_policy",
    "find_knee",
    "henze_penrose",
    "locate",
    "mc_tv_oracle",
    "num_threads",
    "savitzky_golay",
    "set_num_threads",
    "simulate",
    "symmetric_kl",
    "wasserstein2",
]


def _matrix(a):
    return np.ascontiguousarray(a, dtype=np.float64)


def estimate_tv(reference, query, model="forest", folds=5, seed=0):
    """Cross-validated total variation estimate.

    Returns a dict with the fold mean, the per-fold values and (forest
    only) the averaged feature importances.
    """
    mean, per_fold, importances = _core.estimate_tv(
        _matrix(reference), _matrix(query), model, folds, seed
    )
    return {"mean": mean, "per_fold": list(per_fold), "importances": list(importances)}


def locate(reference, query, kinds=None, seed=0, tau=0.1, epsilon=0.02, folds=5,
           n_trees=100, refine=True):
    """Runs shift localization and returns the report as a dict."""
    report = _core.locate(_matrix(reference), _matrix(query), kinds, seed, tau, epsilon,
                          folds, n_trees, refine)
    return json.loads(report)


def correct(reference, query, mask, kinds=None, seed=0, epsilon=0.1, epochs=2):
    """Corrects the masked columns of `query`. Returns (corrected, report)."""
    values, report = _core.correct(_matrix(reference), _matrix(query), list(mask), kinds,
                                   seed, epsilon, epochs)
    return values, json.loads(report)


def simulate(id, features=100, corrupted=20, rows=2000, seed=0):
    """Samples a simulated pair. Returns (reference, query, mask, kinds)."""
    reference, query, mask, kinds = _core.simulate(id, features, corrupted, rows, seed)
    return reference, query, list(mask), list(kinds)


def mc_tv_oracle(id, features=100, corrupted=20, n_mc=100000, seed=0):
    """Monte-Carlo total variation of a simulated pair: (value, std_error)."""
    return _core.mc_tv_oracle(id, features, corrupted, n_mc, seed)


def corrupt(query, type, fraction=0.1, kinds=None, reference=None, alpha=None, rho=None,
            seed=0):
    """Applies a manipulation. Returns (corrupted, mask)."""
    ref = None if reference is None else _matrix(reference)
    values, mask = _core.corrupt(_matrix(query), str(type), fraction, kinds, ref, alpha, rho,
                                 seed)
    return values, list(mask)


def f1_localization(predicted, truth):
    """Precision, recall and F-1 of a predicted set of shifted columns."""
    precision, recall, f1 = _core.f1_localization(list(predicted), list(truth))
    return {"precision": precision, "recall": recall, "f1": f1}
