"""Hot numeric loops, each in a numba flavour and a vectorised numpy flavour.

The public names (``logistic_gd``, ``counterfactual_shift``,
``grouped_confusion``) are bound to one flavour at import time according to
``FAIRAUDIT_NUMBA``.  Both flavours are importable under ``*_numba`` /
``*_numpy`` for the equivalence tests and the benchmark.
"""
from __future__ import annotations

import math

import numpy as np

from ._accel import NUMBA_ENABLED, njit

__all__ = [
    "logistic_gd",
    "counterfactual_shift",
    "grouped_confusion",
]


# --------------------------------------------------------------------------
# Logistic regression by full-batch gradient descent
# --------------------------------------------------------------------------

def _sigmoid_numpy(z):
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def logistic_gd_numpy(X, y, step, iterations, l2=0.0):
    """Return ``(weights, bias)`` after ``iterations`` plain GD steps from zero.

    Loss is mean logistic loss plus ``0.5 * l2 * ||w||^2`` (bias unpenalised).
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    n, d = X.shape
    w = np.zeros(d)
    b = 0.0
    for _ in range(iterations):
        g = _sigmoid_numpy(X @ w + b) - y
        grad_w = X.T @ g / n + l2 * w
        grad_b = g.sum() / n
        w = w - step * grad_w
        b = b - step * grad_b
    return w, b


@njit
def logistic_gd_numba(X, y, step, iterations, l2=0.0):
    n, d = X.shape
    w = np.zeros(d)
    b = 0.0
    gw = np.zeros(d)
    for _ in range(iterations):
        gw[:] = 0.0
        gb = 0.0
        for i in range(n):
            z = b
            for j in range(d):
                z += X[i, j] * w[j]
            if z >= 0:
                p = 1.0 / (1.0 + math.exp(-z))
            else:
                ez = math.exp(z)
                p = ez / (1.0 + ez)
            r = p - y[i]
            gb += r
            for j in range(d):
                gw[j] += r * X[i, j]
        for j in range(d):
            w[j] -= step * (gw[j] / n + l2 * w[j])
        b -= step * (gb / n)
    return w, b


# --------------------------------------------------------------------------
# Counterfactual move along the mutable axis
# --------------------------------------------------------------------------

_MAX_ULP_STEPS = 64


def counterfactual_shift_numpy(x_imm, x_mut, w_imm, w_mut, bias, margin, budget):
    """Move every negatively scored agent along the mutable axis.

    Returns ``(new_x_mut, moved, flagged)``.  Agents with score >= 0 are left
    alone.  The required displacement is ``(margin - score) / w_mut``; if its
    magnitude exceeds ``budget`` the agent moves ``budget`` in the right
    direction and is flagged.  ``w_mut == 0`` flags every negative agent
    without moving it.
    """
    x_imm = np.asarray(x_imm, dtype=np.float64)
    x_mut = np.asarray(x_mut, dtype=np.float64)
    score = w_imm * x_imm + w_mut * x_mut + bias
    neg = score < 0.0
    new = x_mut.copy()
    moved = np.zeros(x_mut.shape[0], dtype=np.bool_)
    flagged = np.zeros(x_mut.shape[0], dtype=np.bool_)
    if w_mut == 0.0:
        flagged[neg] = True
        return new, moved, flagged
    need = np.abs((margin - score) / w_mut)
    direction = 1.0 if w_mut > 0 else -1.0
    fits = neg & (need <= budget)
    capped = neg & ~fits
    # solve for the landing point directly; rounding can still leave it an ulp short
    new[fits] = (margin - w_imm * x_imm[fits] - bias) / w_mut
    target = direction * np.inf
    for _ in range(_MAX_ULP_STEPS):
        short = fits & (w_imm * x_imm + w_mut * new + bias < 0.0)
        if not short.any():
            break
        new[short] = np.nextafter(new[short], target)
    if budget > 0.0:
        new[capped] = x_mut[capped] + direction * budget
        moved[capped] = True
    moved[fits] = True
    flagged[capped] = True
    return new, moved, flagged


@njit
def counterfactual_shift_numba(x_imm, x_mut, w_imm, w_mut, bias, margin, budget):
    n = x_mut.shape[0]
    new = x_mut.copy()
    moved = np.zeros(n, dtype=np.bool_)
    flagged = np.zeros(n, dtype=np.bool_)
    direction = 1.0 if w_mut > 0 else -1.0
    for i in range(n):
        score = w_imm * x_imm[i] + w_mut * x_mut[i] + bias
        if score >= 0.0:
            continue
        if w_mut == 0.0:
            flagged[i] = True
            continue
        need = abs((margin - score) / w_mut)
        if need <= budget:
            x = (margin - w_imm * x_imm[i] - bias) / w_mut
            for _ in range(_MAX_ULP_STEPS):
                if w_imm * x_imm[i] + w_mut * x + bias >= 0.0:
                    break
                x = np.nextafter(x, direction * np.inf)
            new[i] = x
            moved[i] = True
        else:
            if budget > 0.0:
                new[i] = x_mut[i] + direction * budget
                moved[i] = True
            flagged[i] = True
    return new, moved, flagged


# --------------------------------------------------------------------------
# Weighted confusion counts per group code
# --------------------------------------------------------------------------

def grouped_confusion_numpy(codes, n_groups, truth, pred, weight):
    """``(n_groups, 4)`` array of weighted ``tp, fp, fn, tn`` per group code."""
    codes = np.asarray(codes, dtype=np.int64)
    cell = np.where(truth, np.where(pred, 0, 2), np.where(pred, 1, 3))
    flat = np.bincount(codes * 4 + cell, weights=weight, minlength=n_groups * 4)
    return flat.reshape(n_groups, 4)


@njit
def grouped_confusion_numba(codes, n_groups, truth, pred, weight):
    out = np.zeros((n_groups, 4))
    for i in range(codes.shape[0]):
        if truth[i]:
            c = 0 if pred[i] else 2
        else:
            c = 1 if pred[i] else 3
        out[codes[i], c] += weight[i]
    return out


if NUMBA_ENABLED:
    logistic_gd = logistic_gd_numba
    counterfactual_shift = counterfactual_shift_numba
    grouped_confusion = grouped_confusion_numba
else:
    logistic_gd = logistic_gd_numpy
    counterfactual_shift = counterfactual_shift_numpy
    grouped_confusion = grouped_confusion_numpy
