"""Matrix arithmetic in PSL(2,R).

Elements are unit-determinant 2x2 real matrices taken up to sign.  Every
element is stored through a canonical sign representative (trace >= 0, with a
lexicographic tie-break when the trace vanishes), which makes entrywise
comparison, rounding-based deduplication, and serialization well defined.

The three one-parameter subgroups used throughout:

    a_t = [[e^{t/2}, 0], [0, e^{-t/2}]]      (geodesic)
    b_t = [[1, t], [0, 1]]                   (stable horocycle)
    c_t = [[1, 0], [t, 1]]                   (unstable horocycle)
"""

from __future__ import annotations

import math

import numpy as np

# invariant: stored determinants sit within this of 1
TOL_DET = 1e-12
# inputs whose determinant strays further than this are rejected, not repaired
DET_RENORM_LIMIT = 1e-6
# entrywise tolerance for equality of canonical representatives
TOL_EQ = 1e-9
# |trace| - 2 tolerance for the elliptic/parabolic/hyperbolic split
CLASSIFY_TOL = 1e-9
# below this |trace| the sign representative is chosen lexicographically
_TRACE_SIGN_TOL = 1e-10
# rounding grid for deduplication keys
KEY_GRID = 1e-9

_IDENTITY_MAT = np.eye(2)


def canonical_sign(m: np.ndarray) -> np.ndarray:
    """Pick the sign representative: trace >= 0, ties broken by the first
    nonzero entry of (a11, a12, a21) being positive."""
    tr = m[0, 0] + m[1, 1]
    if tr > _TRACE_SIGN_TOL:
        return m
    if tr < -_TRACE_SIGN_TOL:
        return -m
    for v in (m[0, 0], m[0, 1], m[1, 0]):
        if abs(v) > _TRACE_SIGN_TOL:
            return m if v > 0 else -m
    return m


class GroupElement:
    """A point of PSL(2,R), stored as its canonical unit-determinant matrix."""

    __slots__ = ("m",)

    def __init__(self, mat):
        m = np.asarray(mat, dtype=float)
        if m.shape != (2, 2):
            raise ValueError(f"expected a 2x2 matrix, got shape {m.shape}")
        det = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
        if not math.isfinite(det) or abs(det - 1.0) > DET_RENORM_LIMIT:
            raise ValueError(
                f"determinant {det!r} is too far from 1 to renormalize"
            )
        if det != 1.0:
            m = m / math.sqrt(det)
        m = np.array(canonical_sign(m))
        m.flags.writeable = False
        self.m = m

    @classmethod
    def _trusted(cls, m: np.ndarray) -> "GroupElement":
        # fast path for internally-built matrices with exact unit determinant
        obj = object.__new__(cls)
        m = np.array(canonical_sign(np.asarray(m, dtype=float)))
        m.flags.writeable = False
        object.__setattr__(obj, "m", m)
        return obj

    def __mul__(self, other: "GroupElement") -> "GroupElement":
        return GroupElement._trusted(self.m @ other.m)

    def inverse(self) -> "GroupElement":
        a, b, c, d = self.m.ravel()
        # adjugate: exact for unit determinant, no division
        return GroupElement._trusted(np.array([[d, -b], [-c, a]]))

    def det(self) -> float:
        a, b, c, d = self.m.ravel()
        return a * d - b * c

    def trace(self) -> float:
        """|a11 + a22|: well defined on PSL(2,R)."""
        return abs(self.m[0, 0] + self.m[1, 1])

    def classify(self, tol: float = CLASSIFY_TOL) -> str:
        tr = self.trace()
        if tr < 2.0 - tol:
            return "elliptic"
        if tr > 2.0 + tol:
            return "hyperbolic"
        return "parabolic"

    def frobenius_gap(self) -> float:
        """Entrywise l1 distance to the identity, minimized over sign."""
        return frobenius_gap(self.m)

    def is_identity(self, tol: float = TOL_EQ) -> bool:
        return self.frobenius_gap() <= tol

    def key(self, grid: float = KEY_GRID) -> tuple:
        """Rounded-entry tuple for deduplication of canonical representatives."""
        return tuple(int(round(v / grid)) for v in self.m.ravel())

    def approx_eq(self, other: "GroupElement", tol: float = TOL_EQ) -> bool:
        d_plus = np.max(np.abs(self.m - other.m))
        if d_plus <= tol:
            return True
        return np.max(np.abs(self.m + other.m)) <= tol

    def __eq__(self, other) -> bool:
        if not isinstance(other, GroupElement):
            return NotImplemented
        return self.approx_eq(other)

    __hash__ = None

    def __repr__(self) -> str:
        a, b, c, d = self.m.ravel()
        return f"GroupElement([[{a:.12g}, {b:.12g}], [{c:.12g}, {d:.12g}]])"


def identity() -> GroupElement:
    return GroupElement._trusted(_IDENTITY_MAT)


def one_param(kind: str, t: float) -> GroupElement:
    """The subgroup element a_t, b_t, or c_t."""
    if kind == "geodesic":
        h = math.exp(0.5 * t)
        m = np.array([[h, 0.0], [0.0, 1.0 / h]])
    elif kind == "stable":
        m = np.array([[1.0, t], [0.0, 1.0]])
    elif kind == "unstable":
        m = np.array([[1.0, 0.0], [t, 1.0]])
    else:
        raise ValueError(f"unknown one-parameter kind {kind!r}")
    return GroupElement._trusted(m)


def rotation(theta: float) -> GroupElement:
    """The elliptic element fixing i and rotating the tangent space at i by
    theta; its matrix turns by the half angle theta/2."""
    c, s = math.cos(0.5 * theta), math.sin(0.5 * theta)
    return GroupElement._trusted(np.array([[c, s], [-s, c]]))


def frobenius_gap(m: np.ndarray) -> float:
    gap_plus = float(np.sum(np.abs(m - _IDENTITY_MAT)))
    gap_minus = float(np.sum(np.abs(m + _IDENTITY_MAT)))
    return min(gap_plus, gap_minus)


def conj_by_geodesic(k: np.ndarray, t: float, s: float) -> np.ndarray:
    """a_{-t} K a_s, written entrywise so large |t|, |s| stay stable."""
    k = np.asarray(k, dtype=float)
    ep, em = math.exp(0.5 * (s - t)), math.exp(-0.5 * (s + t))
    return np.array(
        [
            [k[0, 0] * ep, k[0, 1] * em],
            [k[1, 0] / em, k[1, 1] / ep],
        ]
    )


def conj_by_horocycle(k: np.ndarray, s1: float, s2: float) -> np.ndarray:
    """b_{-s2} K b_{s1}, expanded entrywise."""
    k = np.asarray(k, dtype=float)
    top = k[0, 0] - k[1, 0] * s2
    return np.array(
        [
            [top, top * s1 - k[1, 1] * s2 + k[0, 1]],
            [k[1, 0], k[1, 0] * s1 + k[1, 1]],
        ]
    )
