"""Polyak's subgradient method on the sample objective."""

from __future__ import annotations

import csv
import enum
from dataclasses import dataclass, field

import numpy as np

from . import _backend
from .linalg import SignalPair, rank_two_decompose
from .sample import MeasurementEnsemble


@dataclass(frozen=True)
class PolyakConfig:
    max_iters: int = 100_000
    f_stop: float = 1e-10
    min_value: float = 0.0
    success_rel_err: float = 1e-6
    trace_every: int = 0

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if self.f_stop < 0:
            raise ValueError("f_stop must be nonnegative")
        if self.success_rel_err <= 0:
            raise ValueError("success_rel_err must be positive")
        if self.trace_every < 0:
            raise ValueError("trace_every must be nonnegative")


class Termination(str, enum.Enum):
    VALUE_TOL = "ValueTol"
    MAX_ITERS = "MaxIters"
    ZERO_SUBGRADIENT = "ZeroSubgradient"


_CODES = {0: Termination.VALUE_TOL, 1: Termination.MAX_ITERS, 2: Termination.ZERO_SUBGRADIENT}


@dataclass(frozen=True)
class SolveResult:
    final: SignalPair
    iterations: int
    final_value: float
    relative_error: float
    success: bool
    termination: Termination
    trace: list = field(default_factory=list)

    def summary(self) -> dict:
        return {
            "iterations": self.iterations,
            "final_value": self.final_value,
            "relative_error": self.relative_error,
            "success": self.success,
            "termination": self.termination.value,
        }


def polyak_step(p: SignalPair, f_val: float, g, min_value: float = 0.0) -> SignalPair:
    """One step ``p - ((f - min) / ||g||^2) g`` on the concatenated vector."""
    gw, gx = (np.asarray(v, dtype=float) for v in g)
    g2 = float(gw @ gw) + float(gx @ gx)
    if g2 == 0.0:
        return p
    t = (f_val - min_value) / g2
    return SignalPair(p.w - t * gw, p.x - t * gx)


def relative_error(p: SignalPair, truth: SignalPair) -> float:
    """``||w x^T - wbar xbar^T||_F / ||wbar xbar^T||_F``, invariant on the solution set."""
    ref = float(np.linalg.norm(truth.w)) * float(np.linalg.norm(truth.x))
    if ref == 0.0:
        raise ValueError("truth product wbar xbar^T is zero")
    return rank_two_decompose(p, truth).frobenius / ref


def run_polyak(
    ens: MeasurementEnsemble,
    init: SignalPair,
    cfg: PolyakConfig = PolyakConfig(),
    backend: str | None = None,
) -> SolveResult:
    if init.d1 != ens.d1 or init.d2 != ens.d2:
        raise ValueError("init dimensions do not match the ensemble")
    k = _backend.get_kernels(backend)
    w = np.array(init.w, dtype=float)
    x = np.array(init.x, dtype=float)
    A = np.ascontiguousarray(ens.A)
    B = np.ascontiguousarray(ens.B)
    y = np.ascontiguousarray(ens.y)
    iters, fval, code, trace = k.polyak_loop(
        A, B, y, w, x,
        np.ascontiguousarray(ens.truth.w), np.ascontiguousarray(ens.truth.x),
        int(cfg.max_iters), float(cfg.f_stop), float(cfg.min_value), int(cfg.trace_every),
    )
    final = SignalPair(w, x)
    err = relative_error(final, ens.truth)
    rows = [(int(r[0]), float(r[1]), float(r[2])) for r in trace]
    return SolveResult(
        final=final,
        iterations=int(iters),
        final_value=float(fval),
        relative_error=err,
        success=bool(err <= cfg.success_rel_err),
        termination=_CODES[int(code)],
        trace=rows,
    )


def write_trace_csv(trace, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["iteration", "value", "relative_error"])
        for it, val, err in trace:
            writer.writerow([it, f"{val:.17g}", f"{err:.17g}"])

