"""Pure numpy versions of the compiled kernels (same signatures)."""

import math

import numpy as np

VALUE_TOL = 0
MAX_ITERS = 1
ZERO_SUBGRADIENT = 2


def sample_value_and_subgradient(A, B, y, w, x):
    aw = A @ w
    bx = B @ x
    r = aw * bx - y
    m = y.shape[0]
    s = np.sign(r)
    return float(np.abs(r).sum()) / m, A.T @ (s * bx / m), B.T @ (s * aw / m)


def _rel_err_expansion(w, x, wbar, xbar, ref_sq):
    sq = (w @ w) * (x @ x) - 2.0 * (w @ wbar) * (x @ xbar) + ref_sq
    return math.sqrt(max(sq, 0.0) / ref_sq)


def polyak_loop(A, B, y, w, x, wbar, xbar, max_iters, f_stop, min_value, trace_every):
    m = y.shape[0]
    ref_sq = float(wbar @ wbar) * float(xbar @ xbar)
    rows = []
    k = 0
    last_traced = -1
    while True:
        aw = A @ w
        bx = B @ x
        r = aw * bx - y
        f = float(np.abs(r).sum()) / m
        if trace_every > 0 and k % trace_every == 0:
            rows.append((k, f, _rel_err_expansion(w, x, wbar, xbar, ref_sq)))
            last_traced = k
        if f < f_stop:
            code = VALUE_TOL
            break
        if k >= max_iters:
            code = MAX_ITERS
            break
        s = np.sign(r)
        gw = (A.T @ (s * bx)) / m
        gx = (B.T @ (s * aw)) / m
        g2 = float(gw @ gw) + float(gx @ gx)
        if g2 == 0.0:
            code = ZERO_SUBGRADIENT
            break
        t = (f - min_value) / g2
        w -= t * gw
        x -= t * gx
        k += 1
    if trace_every > 0 and last_traced != k:
        rows.append((k, f, _rel_err_expansion(w, x, wbar, xbar, ref_sq)))
    return k, f, code, np.array(rows, dtype=float).reshape(-1, 3)
