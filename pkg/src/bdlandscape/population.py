"""Closed form of the population objective ``E|a^T (w x^T - wbar xbar^T) b|``.

For Gaussian ``a, b`` the expectation depends only on the two singular values
``(s1, s2)`` of the residual matrix and equals ``(2 s1 / pi) E(1 - s2^2/s1^2)``
with ``E`` the complete elliptic integral of the second kind.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .linalg import (
    SignalPair,
    SingularPair,
    rank_two_decompose,
    singular_values,
    svd_2x2,
)

TWO_OVER_PI = 2.0 / math.pi

_AGM_MAX_ITER = 64
_GL_START_NODES = 64
_GL_MAX_NODES = 4096
_GL_TOL = 1e-12


def _agm_e(b0: float, m: float) -> float:
    """E(m) from the AGM sequence started at ``(1, b0)``, ``b0 = sqrt(1 - m)``.

    Passing ``b0`` separately avoids the cancellation in ``sqrt(1 - m)`` when
    the caller already knows the complementary modulus.
    """
    if b0 == 0.0:
        return 1.0
    a, b = 1.0, b0
    acc = 0.5 * m
    power = 0.5
    for _ in range(_AGM_MAX_ITER):
        # a and b can stall one ulp apart, so stop a few ulps early.
        if abs(a - b) <= 1e-15 * a:
            break
        c = 0.5 * (a - b)
        a, b = 0.5 * (a + b), math.sqrt(a * b)
        power *= 2.0
        acc += power * c * c
    return (math.pi / (2.0 * a)) * (1.0 - acc)


def elliptic_e(m: float) -> float:
    """Complete elliptic integral of the second kind, parameter ``m = k^2``.

    Uses the arithmetic-geometric mean, which converges quadratically on the
    whole interval ``[0, 1]``.
    """
    m = float(m)
    if not (-1e-12 <= m <= 1.0 + 1e-12):
        raise ValueError(f"elliptic_e parameter must lie in [0, 1], got {m}")
    m = min(max(m, 0.0), 1.0)
    return _agm_e(math.sqrt(1.0 - m), m)


def population_value_sv(s: SingularPair) -> float:
    s1, s2 = s
    if s1 == 0.0:
        return 0.0
    r = s2 / s1
    m = (1.0 - r) * (1.0 + r)
    return TWO_OVER_PI * s1 * _agm_e(r, m)


def series_coefficient_squares(n_terms: int) -> np.ndarray:
    """``((2n)! / (4^n (n!)^2))^2`` for ``n < n_terms`` via the ratio recurrence."""
    c = np.empty(n_terms)
    cn = 1.0
    for n in range(n_terms):
        c[n] = cn * cn
        cn *= (2 * n + 1) / (2 * n + 2)
    return c


def population_series(s: SingularPair, n_terms: int) -> float:
    """Partial sum of the hypergeometric series for the population objective.

    Independent of the AGM path; converges only like ``1/n^2`` as
    ``s2/s1 -> 0``, which is why it is not the production evaluator.
    """
    if n_terms < 1:
        raise ValueError("n_terms must be positive")
    s1, s2 = s
    if s2 <= 0.0:
        raise ValueError("series needs s2 > 0 (finite condition number)")
    r = s2 / s1
    m = (1.0 - r) * (1.0 + r)
    n = np.arange(n_terms)
    terms = series_coefficient_squares(n_terms) * m**n / (1.0 - 2.0 * n)
    # Sum smallest-first; the terms after n = 0 are all negative.
    return s1 * float(np.sum(terms[::-1]))


def series_tail_bound(s: SingularPair, n_terms: int) -> float:
    """Upper bound on ``|f(s) - population_series(s, n_terms)|``."""
    s1, s2 = s
    r = s2 / s1
    m = (1.0 - r) * (1.0 + r)
    if m == 0.0:
        return 0.0
    c2 = series_coefficient_squares(n_terms + 1)[-1]
    # c_n^2 is decreasing and 1/(2n-1) <= 1/(2N-1) for n >= N.
    return s1 * c2 * m**n_terms / ((2 * n_terms - 1) * (1.0 - m))


@lru_cache(maxsize=None)
def _gauss_legendre(n: int):
    return np.polynomial.legendre.leggauss(n)


def _panel_edges(r: float) -> np.ndarray:
    """Breakpoints on ``[0, pi/2]`` graded toward 0 at the scale ``r``."""
    edges = [0.0]
    h = r
    while h < math.pi / 8:
        edges.append(h)
        h *= 4.0
    edges.append(math.pi / 2)
    return np.asarray(edges)


def _gradient_quadrature(r: float, n: int, edges: np.ndarray):
    x, wts = _gauss_legendre(n)
    lo, hi = edges[:-1, None], edges[1:, None]
    half = 0.5 * (hi - lo)
    u = lo + half * (x[None, :] + 1.0)
    wq = half * wts[None, :]
    # u = pi/2 - theta, so cos(theta) = sin(u) without cancellation.
    su2 = np.sin(u) ** 2
    cu2 = np.cos(u) ** 2
    den = np.sqrt(su2 + r * r * cu2)
    g1 = float(np.sum(wq * su2 / den))
    g2 = float(np.sum(wq * r * cu2 / den))
    return TWO_OVER_PI * g1, TWO_OVER_PI * g2


@dataclass(frozen=True)
class PopulationGradientSV:
    g1: float
    g2: float

    def __iter__(self):
        yield self.g1
        yield self.g2


def population_gradient_sv(s: SingularPair) -> PopulationGradientSV:
    """Partial derivatives of ``f(s1, s2)`` by composite Gauss-Legendre.

    The 2-D polar form gives
    ``df/ds1 = (2/pi) int_0^{pi/2} s1 cos^2 / sqrt(s1^2 cos^2 + s2^2 sin^2)``
    and symmetrically for ``s2``.  The gradient is homogeneous of degree
    zero, so it is evaluated at ``(1, s2/s1)``.  When ``s2 << s1`` the
    integrands have a layer of width ``s2/s1`` at ``theta = pi/2``; the panels
    are graded geometrically toward it.  Node counts double from 64 until two
    successive estimates agree to 1e-12.
    """
    s1, s2 = s
    if s1 == 0.0:
        raise ValueError("population objective is not differentiable at s = 0")
    r = s2 / s1
    # Below this ratio the exact gradient equals (2/pi, 0) in double precision
    # and r*r would underflow inside the integrand.
    if r < 1e-100:
        return PopulationGradientSV(TWO_OVER_PI, 0.0)
    edges = _panel_edges(r)
    n = _GL_START_NODES
    prev = _gradient_quadrature(r, n, edges)
    while n < _GL_MAX_NODES:
        n *= 2
        cur = _gradient_quadrature(r, n, edges)
        done = max(abs(cur[0] - prev[0]), abs(cur[1] - prev[1])) < _GL_TOL
        prev = cur
        if done:
            break
    return PopulationGradientSV(*prev)


def population_objective(p: SignalPair, truth: SignalPair) -> float:
    return population_value_sv(svd_2x2(rank_two_decompose(p, truth).M).s)


def population_subgradient(p: SignalPair, truth: SignalPair):
    """Element ``(Y x, Y^T w)`` of the subdifferential of the population objective.

    ``Y`` shares singular vectors with ``X`` and carries the singular values
    ``grad f(sigma(X))``; it is assembled in the 2-D coordinates of the rank-two
    representation.  Returns ``(0, 0)`` at ``X = 0``.
    """
    rep = rank_two_decompose(p, truth)
    svd = svd_2x2(rep.M)
    if svd.s.s1 == 0.0:
        return np.zeros(p.d1), np.zeros(p.d2)
    g = population_gradient_sv(svd.s)
    core = svd.U @ np.diag([g.g1, g.g2]) @ svd.V.T
    gw = rep.Qw @ (core @ rep.coords_x)
    gx = rep.Qx @ (core.T @ rep.coords_w)
    return gw, gx


class PopulationTag(str, enum.Enum):
    SOLUTION = "Solution"
    ZERO = "Zero"
    ORTHOGONAL_SPURIOUS = "OrthogonalSpurious"
    NON_STATIONARY = "NonStationary"


@dataclass(frozen=True)
class PopulationClass:
    tag: PopulationTag
    witness: dict = field(default_factory=dict)


def _check_truth(truth: SignalPair) -> tuple[float, float]:
    nw = float(np.linalg.norm(truth.w))
    nx = float(np.linalg.norm(truth.x))
    if nw == 0.0 or nx == 0.0:
        raise ValueError("truth must have nonzero w and x components")
    return nw, nx


def classify_population_point(
    p: SignalPair, truth: SignalPair, tol: float = 1e-6
) -> PopulationClass:
    """Match ``p`` against the three families of population critical points.

    Precedence is Solution, then Zero, then OrthogonalSpurious; anything else
    is NonStationary.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    nwb, nxb = _check_truth(truth)
    nw = float(np.linalg.norm(p.w))
    nx = float(np.linalg.norm(p.x))
    ip_w = float(p.w @ truth.w)
    ip_x = float(p.x @ truth.x)
    s = singular_values(p, truth)
    gw, gx = population_subgradient(p, truth)
    witness = {
        "subgradient_norm": math.hypot(float(np.linalg.norm(gw)), float(np.linalg.norm(gx))),
        "inner_w": ip_w,
        "inner_x": ip_x,
        "product_norm": nw * nx,
        "sigma1": s.s1,
        "sigma2": s.s2,
    }
    if s.s1 <= tol * nwb * nxb:
        tag = PopulationTag.SOLUTION
    elif p.norm <= tol * truth.norm:
        tag = PopulationTag.ZERO
    elif (
        abs(ip_w) <= tol * nw * nwb
        and abs(ip_x) <= tol * nx * nxb
        and nw * nx <= tol * nwb * nxb
    ):
        tag = PopulationTag.ORTHOGONAL_SPURIOUS
    else:
        tag = PopulationTag.NON_STATIONARY
    return PopulationClass(tag, witness)

