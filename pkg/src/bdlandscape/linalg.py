"""Small dense kernels for rank-two residual matrices.

Everything downstream works with ``X = w x^T - wbar xbar^T`` through a
``(d1 x 2) @ (2 x 2) @ (2 x d2)`` factorization, so no ``d1 x d2`` array is
ever formed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# Residual threshold (relative to ||b||) below which a second Gram-Schmidt
# direction is dropped.
SPAN_TOL = 1e-14


@dataclass(frozen=True)
class SignalPair:
    """A point ``(w, x)`` in ``R^d1 x R^d2``."""

    w: np.ndarray
    x: np.ndarray

    def __post_init__(self):
        w = np.array(self.w, dtype=float).reshape(-1)
        x = np.array(self.x, dtype=float).reshape(-1)
        if w.size < 1 or x.size < 1:
            raise ValueError("both components need at least one entry")
        if not (np.all(np.isfinite(w)) and np.all(np.isfinite(x))):
            raise ValueError("SignalPair entries must be finite")
        w.flags.writeable = False
        x.flags.writeable = False
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "x", x)

    @property
    def d1(self) -> int:
        return self.w.size

    @property
    def d2(self) -> int:
        return self.x.size

    @property
    def norm(self) -> float:
        """Euclidean norm of the concatenated vector ``(w, x)``."""
        return math.hypot(float(np.linalg.norm(self.w)), float(np.linalg.norm(self.x)))

    def concat(self) -> np.ndarray:
        return np.concatenate([self.w, self.x])

    def rescaled(self, alpha: float) -> "SignalPair":
        """Return ``(alpha w, x / alpha)``, a point with the same product."""
        return SignalPair(alpha * self.w, self.x / alpha)

    @classmethod
    def canonical(cls, d1: int, d2: int) -> "SignalPair":
        """The pair ``(e1, e1)``."""
        w = np.zeros(d1)
        x = np.zeros(d2)
        w[0] = 1.0
        x[0] = 1.0
        return cls(w, x)

    @classmethod
    def zeros(cls, d1: int, d2: int) -> "SignalPair":
        return cls(np.zeros(d1), np.zeros(d2))


@dataclass(frozen=True)
class SingularPair:
    """Ordered singular values ``s1 >= s2 >= 0`` of a rank <= 2 matrix."""

    s1: float
    s2: float

    def __post_init__(self):
        s1, s2 = float(self.s1), float(self.s2)
        if not (math.isfinite(s1) and math.isfinite(s2)):
            raise ValueError("singular values must be finite")
        if s2 < 0 or s1 < s2:
            raise ValueError(f"need s1 >= s2 >= 0, got ({s1}, {s2})")
        object.__setattr__(self, "s1", s1)
        object.__setattr__(self, "s2", s2)

    @property
    def condition_number(self) -> float:
        if self.s2 == 0:
            raise ValueError("condition number undefined when s2 == 0")
        return self.s1 / self.s2

    @property
    def frobenius(self) -> float:
        return math.hypot(self.s1, self.s2)

    def __iter__(self):
        yield self.s1
        yield self.s2

    def scaled(self, c: float) -> "SingularPair":
        return SingularPair(c * self.s1, c * self.s2)


@dataclass(frozen=True)
class RankTwoRepresentation:
    """``X = Qw @ M @ Qx.T`` with orthonormal (or zero) basis columns.

    The coordinates of the four generating vectors are kept so that products
    such as ``Y @ x`` can be formed in the 2-D coordinates.
    """

    Qw: np.ndarray
    Qx: np.ndarray
    M: np.ndarray
    coords_w: np.ndarray
    coords_wbar: np.ndarray
    coords_x: np.ndarray
    coords_xbar: np.ndarray

    def entry(self, i: int, j: int) -> float:
        return float(self.Qw[i] @ self.M @ self.Qx[j])

    @property
    def frobenius(self) -> float:
        return float(np.linalg.norm(self.M))


@dataclass(frozen=True)
class TwoByTwoSvd:
    U: np.ndarray
    s: SingularPair
    V: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return self.U @ np.diag([self.s.s1, self.s.s2]) @ self.V.T


def orthonormal_basis_2(a, b):
    """Orthonormal basis of ``span{a, b}`` and the coordinates of both inputs.

    Modified Gram-Schmidt with one reorthogonalization pass.  Returns
    ``(Q, coords_a, coords_b)`` with ``Q`` of shape ``(d, 2)``; columns that
    are not needed (deficient span) are zero and nonzero columns come first.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("a and b must be 1-D arrays of equal length")
    d = a.size
    Q = np.zeros((d, 2))
    ca = np.zeros(2)
    cb = np.zeros(2)

    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0:
        if nb > 0.0:
            Q[:, 0] = b / nb
            cb[0] = nb
        return Q, ca, cb

    q1 = a / na
    Q[:, 0] = q1
    ca[0] = na
    if d == 1:
        cb[0] = float(q1 @ b)
        return Q, ca, cb

    h = float(q1 @ b)
    r = b - h * q1
    h2 = float(q1 @ r)
    r -= h2 * q1
    h += h2
    cb[0] = h
    nr = float(np.linalg.norm(r))
    if nr > SPAN_TOL * nb:
        Q[:, 1] = r / nr
        cb[1] = nr
    return Q, ca, cb


def rank_two_decompose(p: SignalPair, truth: SignalPair) -> RankTwoRepresentation:
    """Factor ``w x^T - wbar xbar^T`` through a 2 x 2 core."""
    if p.d1 != truth.d1 or p.d2 != truth.d2:
        raise ValueError("point and truth dimensions differ")
    Qw, cw, cwb = orthonormal_basis_2(p.w, truth.w)
    Qx, cx, cxb = orthonormal_basis_2(p.x, truth.x)
    M = np.outer(cw, cx) - np.outer(cwb, cxb)
    return RankTwoRepresentation(Qw, Qx, M, cw, cwb, cx, cxb)


def _rot(t: float) -> np.ndarray:
    c, s = math.cos(t), math.sin(t)
    return np.array([[c, -s], [s, c]])


def svd_2x2(M) -> TwoByTwoSvd:
    """Closed-form SVD of a real 2 x 2 matrix.

    ``M = R(phi) diag(sx, sy) R(theta)`` where the two rotation angles come
    from the symmetric/antisymmetric split of ``M``.  A negative ``sy`` is
    absorbed into the second column of ``V``.
    """
    M = np.asarray(M, dtype=float)
    if M.shape != (2, 2):
        raise ValueError("svd_2x2 expects a 2 x 2 matrix")
    m00, m01 = M[0]
    m10, m11 = M[1]
    e = 0.5 * (m00 + m11)
    f = 0.5 * (m00 - m11)
    g = 0.5 * (m10 + m01)
    h = 0.5 * (m10 - m01)
    q = math.hypot(e, h)
    r = math.hypot(f, g)
    sx = q + r
    det = m00 * m11 - m01 * m10
    # Q - R cancels for nearly singular input; det / sx keeps relative accuracy.
    sy = det / sx if sx > 0 else 0.0

    a1 = math.atan2(g, f)
    a2 = math.atan2(h, e)
    theta = 0.5 * (a2 - a1)
    phi = 0.5 * (a2 + a1)
    U = _rot(phi)
    V = _rot(theta).T
    if sy < 0:
        V[:, 1] = -V[:, 1]
        sy = -sy
    return TwoByTwoSvd(U, SingularPair(sx, min(sy, sx)), V)


def singular_values(p: SignalPair, truth: SignalPair) -> SingularPair:
    return svd_2x2(rank_two_decompose(p, truth).M).s


def residual_frobenius(p: SignalPair, truth: SignalPair) -> float:
    """``||w x^T - wbar xbar^T||_F`` evaluated through the 2 x 2 core."""
    return rank_two_decompose(p, truth).frobenius


def frobenius_expansion(p: SignalPair, truth: SignalPair) -> float:
    """Same quantity from inner products; loses accuracy near ``X = 0``."""
    sq = (
        float(p.w @ p.w) * float(p.x @ p.x)
        - 2.0 * float(p.w @ truth.w) * float(p.x @ truth.x)
        + float(truth.w @ truth.w) * float(truth.x @ truth.x)
    )
    return math.sqrt(max(sq, 0.0))


# -- random streams ---------------------------------------------------------
#
# Streams come from numpy's Philox (a counter-based generator).  Child streams
# are keyed by integer tuples through SeedSequence, so a task's deviates depend
# only on its key and never on scheduling.


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed))))


def child_rng(master_seed: int, *stream: int) -> np.random.Generator:
    """Independent generator for the task identified by ``stream``."""
    key = [int(master_seed)] + [int(s) for s in stream]
    if any(k < 0 for k in key):
        raise ValueError("seed and stream ids must be nonnegative")
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(key)))


def gaussian_vector(rng: np.random.Generator, d: int) -> np.ndarray:
    if d < 1:
        raise ValueError("d must be positive")
    return rng.standard_normal(int(d))
