"""Random initializations, the (nu, C) recovery grid, and Monte Carlo checks.

Every trial draws from its own generator keyed by
``(master_seed, nu_index, C_index, trial, stream)`` so results do not depend
on how trials are scheduled across workers.
"""

from __future__ import annotations

import csv
import enum
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .linalg import SignalPair, SingularPair, child_rng
from .sample import SampleFlag, classify_sample_point, delta_rate, generate_measurements
from .solver import PolyakConfig, run_polyak

WORKERS_ENV = "BDL_WORKERS"

STREAM_ENSEMBLE = 0
STREAM_INIT = 1

FULL_NU_VALUES = tuple(2.0**k for k in range(4, 11))
FULL_C_VALUES = tuple(range(1, 9))
DESK_NU_VALUES = (2.0**4, 2.0**7, 2.0**10)


class InitKind(str, enum.Enum):
    CUBE = "cube"
    GAUSSIAN = "gaussian"


def init_cube(rng: np.random.Generator, nu: float, d1: int, d2: int) -> SignalPair:
    """Uniform on ``[-nu, nu]^(d1 + d2)``."""
    if nu <= 0:
        raise ValueError("nu must be positive")
    z = rng.uniform(-nu, nu, d1 + d2)
    return SignalPair(z[:d1], z[d1:])


def init_gaussian(rng: np.random.Generator, nu: float, d1: int, d2: int) -> SignalPair:
    """``w ~ N(0, nu^2/d1 I)``, ``x ~ N(0, nu^2/d2 I)`` so both norms are near ``nu``."""
    if nu <= 0:
        raise ValueError("nu must be positive")
    w = rng.standard_normal(d1) * (nu / math.sqrt(d1))
    x = rng.standard_normal(d2) * (nu / math.sqrt(d2))
    return SignalPair(w, x)


_INITS = {InitKind.CUBE: init_cube, InitKind.GAUSSIAN: init_gaussian}


def draw_init(kind, rng, nu, d1, d2) -> SignalPair:
    return _INITS[InitKind(kind)](rng, nu, d1, d2)


@dataclass(frozen=True)
class PhaseGridConfig:
    d1: int = 50
    d2: int = 25
    nu_values: tuple = DESK_NU_VALUES
    C_values: tuple = FULL_C_VALUES
    trials: int = 10
    init_kind: InitKind = InitKind.GAUSSIAN
    master_seed: int = 0
    solver: PolyakConfig = field(default_factory=PolyakConfig)

    def __post_init__(self):
        if self.d1 < 1 or self.d2 < 1:
            raise ValueError("dimensions must be positive")
        if self.trials < 1:
            raise ValueError("trials must be positive")
        if not self.nu_values or any(nu <= 0 for nu in self.nu_values):
            raise ValueError("nu values must be positive")
        if not self.C_values or any(int(c) != c or c < 1 for c in self.C_values):
            raise ValueError("C values must be integers >= 1")
        object.__setattr__(self, "nu_values", tuple(float(v) for v in self.nu_values))
        object.__setattr__(self, "C_values", tuple(int(c) for c in self.C_values))
        object.__setattr__(self, "init_kind", InitKind(self.init_kind))


@dataclass(frozen=True)
class PhaseCell:
    nu: float
    C: int
    m: int
    trials: int
    successes: int

    @property
    def frequency(self) -> float:
        return self.successes / self.trials


def _phase_trial(cfg: PhaseGridConfig, i_nu: int, i_c: int, trial: int) -> bool:
    d1, d2 = cfg.d1, cfg.d2
    m = cfg.C_values[i_c] * (d1 + d2)
    truth = SignalPair.canonical(d1, d2)
    ens = generate_measurements(
        child_rng(cfg.master_seed, i_nu, i_c, trial, STREAM_ENSEMBLE), truth, m
    )
    init = draw_init(
        cfg.init_kind,
        child_rng(cfg.master_seed, i_nu, i_c, trial, STREAM_INIT),
        cfg.nu_values[i_nu],
        d1,
        d2,
    )
    return run_polyak(ens, init, cfg.solver).success


def _phase_trial_star(args):
    return _phase_trial(*args)


def default_workers() -> int:
    raw = os.environ.get(WORKERS_ENV, "").strip()
    if not raw:
        return 1
    n = int(raw)
    if n < 1:
        raise ValueError(f"{WORKERS_ENV} must be a positive integer")
    return n


def _map_ordered(fn, tasks, workers):
    if workers <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, tasks, chunksize=1))


def run_phase_grid(cfg: PhaseGridConfig, workers: int | None = None) -> list[PhaseCell]:
    """Recovery counts for every ``(nu, C)`` cell, nu-major then C."""
    workers = default_workers() if workers is None else workers
    tasks = [
        (cfg, i_nu, i_c, t)
        for i_nu in range(len(cfg.nu_values))
        for i_c in range(len(cfg.C_values))
        for t in range(cfg.trials)
    ]
    outcomes = _map_ordered(_phase_trial_star, tasks, workers)
    cells = []
    pos = 0
    for nu in cfg.nu_values:
        for C in cfg.C_values:
            wins = sum(outcomes[pos : pos + cfg.trials])
            pos += cfg.trials
            cells.append(PhaseCell(nu, C, C * (cfg.d1 + cfg.d2), cfg.trials, int(wins)))
    return cells


PHASE_HEADER = ("nu", "C", "m", "trials", "successes", "frequency")


def write_phase_csv(cells, fh) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(PHASE_HEADER)
    for c in cells:
        writer.writerow([f"{c.nu:.17g}", c.C, c.m, c.trials, c.successes, f"{c.frequency:.17g}"])


def read_phase_csv(fh) -> list[PhaseCell]:
    reader = csv.DictReader(fh)
    if tuple(reader.fieldnames or ()) != PHASE_HEADER:
        raise ValueError(f"unexpected phase CSV header {reader.fieldnames}")
    return [
        PhaseCell(float(r["nu"]), int(r["C"]), int(r["m"]), int(r["trials"]), int(r["successes"]))
        for r in reader
    ]


def heat_summary(cells) -> str:
    """One line per nu with the recovery frequency for each C."""
    by_nu: dict[float, list[PhaseCell]] = {}
    for c in cells:
        by_nu.setdefault(c.nu, []).append(c)
    Cs = [c.C for c in next(iter(by_nu.values()))]
    lines = ["nu \\ C  " + " ".join(f"{C:>4d}" for C in Cs)]
    for nu, row in by_nu.items():
        lines.append(f"{nu:<8.6g} " + " ".join(f"{c.frequency:4.1f}" for c in row))
    return "\n".join(lines)


# -- Monte Carlo oracles ------------------------------------------------------


def _chunked_mean_se(draw, n: int, chunk: int):
    """Mean and standard error of ``n`` draws, merged chunk by chunk (Chan et al.)."""
    if n < 2:
        raise ValueError("need n >= 2 for a standard error")
    count = 0
    mean = 0.0
    m2 = 0.0
    while count < n:
        k = min(chunk, n - count)
        v = draw(k)
        cm = float(v.mean())
        cm2 = float(((v - cm) ** 2).sum())
        tot = count + k
        delta = cm - mean
        mean += delta * k / tot
        m2 += cm2 + delta * delta * count * k / tot
        count = tot
    var = m2 / (n - 1)
    return mean, math.sqrt(var / n)


def monte_carlo_population(
    rng: np.random.Generator, s: SingularPair, n: int, chunk: int = 1_000_000
):
    """Estimate ``E|s1 a b + s2 a' b'|`` with four independent standard normals."""
    s1, s2 = s

    def draw(k):
        z = rng.standard_normal((4, k))
        return np.abs(s1 * z[0] * z[1] + s2 * z[2] * z[3])

    return _chunked_mean_se(draw, n, chunk)


def monte_carlo_objective(
    rng: np.random.Generator, p: SignalPair, truth: SignalPair, n: int, chunk: int = 200_000
):
    """Estimate ``E|a^T (w x^T - wbar xbar^T) b|`` by sampling full Gaussian vectors."""

    def draw(k):
        a = rng.standard_normal((k, p.d1))
        b = rng.standard_normal((k, p.d2))
        return np.abs((a @ p.w) * (b @ p.x) - (a @ truth.w) * (b @ truth.x))

    return _chunked_mean_se(draw, n, chunk)


# -- landscape survey ---------------------------------------------------------

UNCLASSIFIED = "Unclassified"
SURVEY_KEYS = tuple(f.value for f in SampleFlag) + (UNCLASSIFIED,)


def _survey_start(args):
    ens, init, solver, delta, c = args
    res = run_polyak(ens, init, solver)
    return classify_sample_point(res.final, ens.truth, delta, c).flags


def landscape_survey(
    d1: int,
    d2: int,
    C: int,
    n_starts: int,
    master_seed: int,
    solver: PolyakConfig = PolyakConfig(),
    c: float = 1.0,
    nu: float = 1.0,
    workers: int | None = None,
) -> dict:
    """Classify where Polyak runs from random Gaussian starts terminate.

    One ensemble with ``m = C (d1 + d2)`` is shared by all starts.  A terminal
    point may carry several flags; points with none count as Unclassified.
    """
    if n_starts < 1:
        raise ValueError("n_starts must be positive")
    m = C * (d1 + d2)
    delta = delta_rate(d1, d2, m)
    truth = SignalPair.canonical(d1, d2)
    ens = generate_measurements(child_rng(master_seed, STREAM_ENSEMBLE), truth, m)
    tasks = [
        (ens, init_gaussian(child_rng(master_seed, STREAM_INIT, i), nu, d1, d2), solver, delta, c)
        for i in range(n_starts)
    ]
    workers = default_workers() if workers is None else workers
    counts = dict.fromkeys(SURVEY_KEYS, 0)
    for flags in _map_ordered(_survey_start, tasks, workers):
        if not flags:
            counts[UNCLASSIFIED] += 1
        for f in flags:
            counts[f.value] += 1
    return counts


def write_survey_csv(counts: dict, fh) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["class", "count"])
    for key in SURVEY_KEYS:
        writer.writerow([key, counts[key]])
