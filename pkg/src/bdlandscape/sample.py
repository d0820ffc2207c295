"""Gaussian bilinear measurements and the l1 sample objective."""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .linalg import SignalPair, make_rng, rank_two_decompose
from .population import population_objective


@dataclass(frozen=True)
class MeasurementEnsemble:
    """Rows ``a_i`` of ``A``, ``b_i`` of ``B`` and ``y_i = <a_i, wbar><xbar, b_i>``."""

    A: np.ndarray
    B: np.ndarray
    y: np.ndarray
    truth: SignalPair
    seed: int | None = None

    @property
    def m(self) -> int:
        return self.y.shape[0]

    @property
    def d1(self) -> int:
        return self.A.shape[1]

    @property
    def d2(self) -> int:
        return self.B.shape[1]

    def record(self) -> "EnsembleRecord":
        if self.seed is None:
            raise ValueError("ensemble was not generated from a recorded seed")
        return EnsembleRecord(self.seed, self.d1, self.d2, self.m, self.truth)


@dataclass(frozen=True)
class EnsembleRecord:
    """What is needed to regenerate an ensemble; the matrices are never stored."""

    seed: int
    d1: int
    d2: int
    m: int
    truth: SignalPair

    def to_json(self) -> str:
        return json.dumps(
            {
                "seed": self.seed,
                "d1": self.d1,
                "d2": self.d2,
                "m": self.m,
                "truth_w": self.truth.w.tolist(),
                "truth_x": self.truth.x.tolist(),
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "EnsembleRecord":
        raw = json.loads(text)
        truth = SignalPair(raw["truth_w"], raw["truth_x"])
        rec = cls(int(raw["seed"]), int(raw["d1"]), int(raw["d2"]), int(raw["m"]), truth)
        if truth.d1 != rec.d1 or truth.d2 != rec.d2:
            raise ValueError("truth dimensions disagree with d1/d2")
        return rec

    def regenerate(self) -> MeasurementEnsemble:
        return ensemble_from_seed(self.seed, self.truth, self.m)


def generate_measurements(rng: np.random.Generator, truth: SignalPair, m: int) -> MeasurementEnsemble:
    if m < 1:
        raise ValueError("m must be positive")
    A = rng.standard_normal((m, truth.d1))
    B = rng.standard_normal((m, truth.d2))
    y = (A @ truth.w) * (B @ truth.x)
    for arr in (A, B, y):
        arr.flags.writeable = False
    return MeasurementEnsemble(A, B, y, truth)


def ensemble_from_seed(seed: int, truth: SignalPair, m: int) -> MeasurementEnsemble:
    ens = generate_measurements(make_rng(seed), truth, m)
    return MeasurementEnsemble(ens.A, ens.B, ens.y, truth, int(seed))


def _check_dims(ens: MeasurementEnsemble, p: SignalPair) -> None:
    if p.d1 != ens.d1 or p.d2 != ens.d2:
        raise ValueError(f"point has dims ({p.d1}, {p.d2}), ensemble ({ens.d1}, {ens.d2})")


def residuals(ens: MeasurementEnsemble, p: SignalPair) -> np.ndarray:
    _check_dims(ens, p)
    return (ens.A @ p.w) * (ens.B @ p.x) - ens.y


def sample_value(ens: MeasurementEnsemble, p: SignalPair) -> float:
    """``(1/m) sum_i |<a_i, w><x, b_i> - y_i|``."""
    return float(np.abs(residuals(ens, p)).sum()) / ens.m


def sample_subgradient(ens: MeasurementEnsemble, p: SignalPair):
    """Chain-rule subgradient with the selection ``sign(0) = 0``."""
    _check_dims(ens, p)
    aw = ens.A @ p.w
    bx = ens.B @ p.x
    s = np.sign(aw * bx - ens.y)
    return ens.A.T @ (s * bx) / ens.m, ens.B.T @ (s * aw) / ens.m


def delta_rate(d1: int, d2: int, m: int) -> float:
    """``((d1+d2+1)/m * log(m/(d1+d2+1)))^(1/8)``."""
    n = d1 + d2 + 1
    if m <= n:
        raise ValueError(f"delta_rate needs m > d1 + d2 + 1 = {n}, got m = {m}")
    ratio = n / m
    return (ratio * math.log(m / n)) ** 0.125


class SampleFlag(str, enum.Enum):
    NEAR_ZERO = "NearZero"
    NEAR_SOLUTION = "NearSolution"
    NEAR_ORTHOGONAL = "NearOrthogonal"


@dataclass(frozen=True)
class SampleClass:
    flags: frozenset
    delta: float
    witness: dict = field(default_factory=dict)

    @property
    def unclassified(self) -> bool:
        return not self.flags


def _within(lhs: float, c: float, base: float) -> bool:
    # An infinite constant makes every threshold vacuous (avoids inf * 0).
    if math.isinf(c):
        return True
    return lhs <= c * base


def classify_sample_point(
    p: SignalPair, truth: SignalPair, delta: float, c: float = 1.0
) -> SampleClass:
    """Report which of the three near-critical conditions ``p`` satisfies.

    The hidden absolute constants are collapsed into ``c``.  Matrix norms are
    Frobenius; on rank-2 matrices this differs from the operator norm by at
    most a factor sqrt(2), which ``c`` absorbs.
    """
    if delta <= 0 or c <= 0:
        raise ValueError("delta and c must be positive")
    nwb = float(np.linalg.norm(truth.w))
    nxb = float(np.linalg.norm(truth.x))
    if nwb == 0.0 or nxb == 0.0:
        raise ValueError("truth must have nonzero w and x components")
    pnorm = p.norm
    tnorm = truth.norm
    nu = max(pnorm / tnorm, 1.0)
    scale = (nu * nu + 1.0) * delta
    xf = rank_two_decompose(p, truth).frobenius
    ip_w = float(p.w @ truth.w)
    ip_x = float(p.x @ truth.x)

    flags = set()
    if _within(pnorm, c, delta * tnorm):
        flags.add(SampleFlag.NEAR_ZERO)
    if _within(xf, c, scale * nwb * nxb):
        flags.add(SampleFlag.NEAR_SOLUTION)
    if _within(abs(ip_w), c, scale * pnorm * nwb) and _within(abs(ip_x), c, scale * pnorm * nxb):
        flags.add(SampleFlag.NEAR_ORTHOGONAL)
    witness = {
        "point_norm": pnorm,
        "residual_frobenius": xf,
        "inner_w": ip_w,
        "inner_x": ip_x,
        "nu": nu,
    }
    return SampleClass(frozenset(flags), delta, witness)


def concentration_gap(ens: MeasurementEnsemble, probes) -> float:
    """``max |f_S - f_P| / ||X||_F`` over probes with a nonzero residual matrix."""
    gaps = []
    for p in probes:
        xf = rank_two_decompose(p, ens.truth).frobenius
        if xf == 0.0:
            continue
        gaps.append(abs(sample_value(ens, p) - population_objective(p, ens.truth)) / xf)
    if not gaps:
        raise ValueError("every probe has X = 0; the gap is undefined")
    return max(gaps)
