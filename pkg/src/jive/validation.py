"""Input checks for the estimator interface."""

import numpy as np
from sklearn.utils import check_array

from .exceptions import InputError


def check_blocks(Xs, n_samples=None):
    """Validate a list of ``(n_samples, n_features_i)`` arrays.

    Returns float64 arrays. All views must share the number of rows and
    contain only finite values.
    """
    if isinstance(Xs, np.ndarray) and Xs.ndim == 2:
        Xs = [Xs]
    try:
        Xs = list(Xs)
    except TypeError as exc:
        raise InputError("Xs must be a list of 2-d arrays") from exc
    if not Xs:
        raise InputError("Xs must contain at least one block")
    try:
        arrays = [check_array(X, dtype=np.float64, ensure_all_finite=True,
                              ensure_min_samples=1) for X in Xs]
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    rows = {a.shape[0] for a in arrays}
    if len(rows) != 1:
        raise InputError(f"blocks disagree on the number of samples: {sorted(rows)}")
    if n_samples is not None and arrays[0].shape[0] != n_samples:
        raise InputError(f"expected {n_samples} samples, got {arrays[0].shape[0]}")
    return arrays


def check_feature_counts(arrays, expected):
    got = [a.shape[1] for a in arrays]
    if len(got) != len(expected) or any(g != e for g, e in zip(got, expected)):
        raise InputError(f"expected blocks with {list(expected)} features, got {got}")
