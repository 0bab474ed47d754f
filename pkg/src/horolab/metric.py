"""Left-invariant Riemannian geometry on PSL(2,R).

The metric comes from the inner product <X, Y> = tr(X^T Y) on traceless
matrices, carried around the group by left translation.  Orthonormal basis:

    E1 = diag(1, -1)/sqrt2
    E2 = [[0, 1], [1, 0]]/sqrt2
    E3 = [[0, 1], [-1, 0]]/sqrt2

with brackets [E1, E2] = sqrt2 E3, [E1, E3] = sqrt2 E2, [E2, E3] = -sqrt2 E1.
Geodesics through the identity solve the body-frame system

    dw1/dt = -2 sqrt2 w2 w3
    dw2/dt = +2 sqrt2 w1 w3
    dw3/dt = 0

so the (w1, w2) part of the velocity precesses around the E3 axis at constant
rate 2 sqrt2 w3, and the curve itself has the closed form

    g(t) = g0 exp(t (w1 E1 + w2 E2 - w3 E3)) exp(2 t w3 E3).

Distances are computed by enumerating the geodesics that hit the target: with
spin rate m = 2 w3, a geodesic of the above form ends at T exactly when

    f(m) = <log(T exp(-m E3)), E3> + m/2 = 0,

and |m| <= 2 L for a geodesic of length L, so scanning f over a bounded m-grid
(both matrix-log sign branches) and refining each sign change by bisection
enumerates every candidate; each root is verified by re-exponentiation before
its length counts.  Below length ~4.4 the matrix logarithm branches used are
exhaustive (longer elliptic spiral branches only produce geodesics of length
>= pi sqrt2 in the rotation factor), which caps the certified range; see
DIST_CAP.  An independent piecewise-path functional gives certified upper
bounds used as a cross-check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .sl2 import GroupElement, canonical_sign, frobenius_gap

SQRT2 = math.sqrt(2.0)

E1 = np.array([[1.0, 0.0], [0.0, -1.0]]) / SQRT2
E2 = np.array([[0.0, 1.0], [1.0, 0.0]]) / SQRT2
E3 = np.array([[0.0, 1.0], [-1.0, 0.0]]) / SQRT2
BASIS = (E1, E2, E3)

# geodesic lengths are certified-minimal only below this; beyond it the
# skipped elliptic spiral log branches could in principle matter
DIST_CAP = 4.2

# default tolerance for the distance / path-bound consistency check
XCHECK_TOL = 1e-6


class NonconvergenceError(RuntimeError):
    """Raised when no verified geodesic within the certified range was found.

    Carries the best known upper bound for the distance in .upper_bound."""

    def __init__(self, msg: str, upper_bound: float):
        super().__init__(msg)
        self.upper_bound = upper_bound


def to_vector(x: np.ndarray) -> np.ndarray:
    """Coordinates of a traceless matrix in the orthonormal basis."""
    x = np.asarray(x, dtype=float)
    return np.array(
        [
            (x[0, 0] - x[1, 1]) / SQRT2,
            (x[0, 1] + x[1, 0]) / SQRT2,
            (x[0, 1] - x[1, 0]) / SQRT2,
        ]
    )


def from_vector(w) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    return w[0] * E1 + w[1] * E2 + w[2] * E3


def bracket(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    return x @ y - y @ x


def structure_constants() -> np.ndarray:
    """c[i][j][k] = <[E_{i+1}, E_{j+1}], E_{k+1}>, computed directly."""
    c = np.zeros((3, 3, 3))
    for i in range(3):
        for j in range(3):
            b = bracket(BASIS[i], BASIS[j])
            for k in range(3):
                c[i, j, k] = float(np.sum(b * BASIS[k]))
    return c


def ad_star(x, y) -> np.ndarray:
    """Coordinates of ad*_x y: <ad*_x y, E_k> = <y, [x, E_k]>."""
    xm, ym = from_vector(x), from_vector(y)
    return np.array([float(np.sum(ym * bracket(xm, e))) for e in BASIS])


def euler_arnold_rhs(w) -> np.ndarray:
    """The geodesic spin equations in coordinates."""
    return np.array(
        [-2.0 * SQRT2 * w[1] * w[2], 2.0 * SQRT2 * w[0] * w[2], 0.0]
    )


# ---------------------------------------------------------------------------
# exponential and logarithm of traceless 2x2 matrices


def algebra_exp(x: np.ndarray) -> np.ndarray:
    """exp of a traceless 2x2 matrix, branch chosen by sign of det."""
    x = np.asarray(x, dtype=float)
    q = x[0, 0] * x[1, 1] - x[0, 1] * x[1, 0]
    if q < -1e-12:
        mu = math.sqrt(-q)
        return math.cosh(mu) * np.eye(2) + (math.sinh(mu) / mu) * x
    if q > 1e-12:
        th = math.sqrt(q)
        return math.cos(th) * np.eye(2) + (math.sin(th) / th) * x
    # near-nilpotent: cosh/cos -> 1 + q-series, sinc -> 1 - q/6
    return (1.0 + 0.5 * q) * np.eye(2) + (1.0 - q / 6.0) * x


def _c_factor(h: float) -> float:
    # X = c(h) (Q - h I) recovers the principal log of Q with tr Q / 2 = h
    if h > 1.0 + 1e-9:
        mu = math.acosh(h)
        return mu / math.sinh(mu)
    if h < 1.0 - 1e-9:
        th = math.acos(max(h, -1.0))
        s = math.sin(th)
        if s < 1e-300:
            raise ValueError("matrix logarithm undefined at trace -2")
        return th / s
    return 1.0 - (h - 1.0) / 3.0


def principal_log(q: np.ndarray) -> np.ndarray:
    """Principal traceless log of a unit-determinant matrix with tr > -2."""
    q = np.asarray(q, dtype=float)
    h = 0.5 * (q[0, 0] + q[1, 1])
    if h <= -1.0 + 1e-12:
        raise ValueError("principal log needs trace > -2")
    return _c_factor(h) * (q - h * np.eye(2))


def psl_log_norm(m: np.ndarray) -> float:
    """Length of the one-parameter arc reaching the element: an upper bound
    for the distance to the identity."""
    ms = canonical_sign(np.asarray(m, dtype=float))
    x = principal_log(ms)
    return float(np.sqrt(np.sum(x * x)))


def _cfac_array(h: np.ndarray) -> np.ndarray:
    h = np.asarray(h, dtype=float)
    out = np.empty_like(h)
    hi = h > 1.0 + 1e-9
    lo = h < 1.0 - 1e-9
    mid = ~(hi | lo)
    if np.any(hi):
        mu = np.arccosh(h[hi])
        out[hi] = mu / np.sinh(mu)
    if np.any(lo):
        th = np.arccos(np.clip(h[lo], -1.0, 1.0))
        s = np.sin(th)
        out[lo] = np.where(s > 1e-300, th / np.maximum(s, 1e-300), np.inf)
    out[mid] = 1.0 - (h[mid] - 1.0) / 3.0
    return out


def psl_log_norm_many(ms: np.ndarray) -> np.ndarray:
    """Vectorized psl_log_norm over an (n, 2, 2) stack."""
    ms = np.asarray(ms, dtype=float)
    tr = ms[:, 0, 0] + ms[:, 1, 1]
    sign = np.where(tr < 0.0, -1.0, 1.0)
    h = 0.5 * np.abs(tr)
    c = _cfac_array(h)
    d0 = sign * ms[:, 0, 0] - h
    d3 = sign * ms[:, 1, 1] - h
    b = sign * ms[:, 0, 1]
    cc = sign * ms[:, 1, 0]
    return c * np.sqrt(d0 * d0 + d3 * d3 + b * b + cc * cc)


# ---------------------------------------------------------------------------
# geodesics


def spin_rotation(s: float) -> np.ndarray:
    """exp(s E3): the rotation matrix by angle s/sqrt2."""
    a = s / SQRT2
    c, sn = math.cos(a), math.sin(a)
    return np.array([[c, sn], [-sn, c]])


def geodesic_endpoint(w, t: float = 1.0) -> np.ndarray:
    """Endpoint matrix of the unit-left-translated geodesic with initial body
    velocity w, after time t (closed form)."""
    w = np.asarray(w, dtype=float)
    u = w[0] * E1 + w[1] * E2 - w[2] * E3
    return algebra_exp(t * u) @ spin_rotation(2.0 * t * w[2])


@dataclass
class GeodesicArc:
    start: GroupElement
    velocity: np.ndarray
    duration: float
    times: np.ndarray
    points: list = field(repr=False)

    @property
    def endpoint(self) -> GroupElement:
        return self.points[-1]


def geodesic_shoot(
    start: GroupElement,
    velocity,
    duration: float,
    steps: int | None = None,
    samples: int = 33,
) -> GeodesicArc:
    """Integrate the geodesic equations with fixed-step RK4.

    State is the frame matrix plus body velocity; the determinant is
    renormalized after every step so drift never accumulates.
    """
    w = np.asarray(velocity, dtype=float)
    if steps is None:
        steps = max(200, int(math.ceil(abs(duration) * (1.0 + np.linalg.norm(w)) / 0.005)))
    g = np.array(start.m)
    h = duration / steps
    sample_at = set(
        int(round(k * steps / (samples - 1))) for k in range(samples)
    ) if samples > 1 else {0, steps}
    times, points = [], []

    def rhs(state):
        gm, wv = state
        omega = from_vector(wv)
        return gm @ omega, euler_arnold_rhs(wv)

    if 0 in sample_at:
        times.append(0.0)
        points.append(GroupElement(g))
    for n in range(steps):
        k1 = rhs((g, w))
        k2 = rhs((g + 0.5 * h * k1[0], w + 0.5 * h * k1[1]))
        k3 = rhs((g + 0.5 * h * k2[0], w + 0.5 * h * k2[1]))
        k4 = rhs((g + h * k3[0], w + h * k3[1]))
        g = g + (h / 6.0) * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0])
        w = w + (h / 6.0) * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1])
        det = g[0, 0] * g[1, 1] - g[0, 1] * g[1, 0]
        g = g / math.sqrt(det)
        if (n + 1) in sample_at:
            times.append((n + 1) * h)
            points.append(GroupElement(g))
    return GeodesicArc(
        start=start,
        velocity=np.asarray(velocity, dtype=float),
        duration=duration,
        times=np.array(times),
        points=points,
    )


# ---------------------------------------------------------------------------
# distance to the identity: spin-rate scan


def _f_components(tm: np.ndarray, m: np.ndarray, sigma: float):
    """Root function and log components on the sign branch sigma.

    Returns (defined, f, x1, x2, cfac_times) arrays over the m grid, where
    f(m) = <log(sigma T exp(-m E3)), E3> + m/2.
    """
    m = np.atleast_1d(np.asarray(m, dtype=float))
    a = m / SQRT2
    c, s = np.cos(a), np.sin(a)
    q11 = tm[0, 0] * c + tm[0, 1] * s
    q12 = -tm[0, 0] * s + tm[0, 1] * c
    q21 = tm[1, 0] * c + tm[1, 1] * s
    q22 = -tm[1, 0] * s + tm[1, 1] * c
    h = 0.5 * sigma * (q11 + q22)
    defined = h > -1.0 + 1e-9
    hs = np.where(defined, h, 2.0)
    cf = _cfac_array(hs)
    x1 = cf * sigma * (q11 - q22) / SQRT2
    x2 = cf * sigma * (q12 + q21) / SQRT2
    x3 = cf * sigma * (q12 - q21) / SQRT2
    f = x3 + 0.5 * m
    return defined, f, x1, x2, x3


def _verify_candidate(tm: np.ndarray, m: float, sigma: float):
    """Re-exponentiate the candidate log branch; return (length, w) or None."""
    defined, f, x1, x2, x3 = _f_components(tm, np.array([m]), sigma)
    if not defined[0]:
        return None
    w = np.array([x1[0], x2[0], 0.5 * m])
    e = geodesic_endpoint(w)
    res = min(np.max(np.abs(e - tm)), np.max(np.abs(e + tm)))
    if res > 1e-8:
        return None
    length = math.sqrt(w[0] ** 2 + w[1] ** 2 + w[2] ** 2)
    return length, w


@dataclass
class DistanceResult:
    value: float
    velocity: np.ndarray
    lengths: list
    certified: bool
    upper_bound: float


def dist_to_identity(
    x, budget: float | None = None, grid_step: float = 0.02
) -> DistanceResult:
    """All-geodesic enumeration of the distance from the identity to x.

    Certified-minimal when the result is below DIST_CAP (and below any caller
    budget); otherwise the best verified length is still a true upper bound.
    """
    tm = x.m if isinstance(x, GroupElement) else canonical_sign(np.asarray(x, dtype=float))
    gap = frobenius_gap(tm)
    if gap < 1e-12:
        return DistanceResult(0.0, np.zeros(3), [0.0], True, 0.0)
    u0 = psl_log_norm(tm)
    if u0 < 1e-4:
        # one-parameter arc and geodesic agree to third order in length
        x0 = principal_log(tm)
        return DistanceResult(u0, to_vector(x0), [u0], True, u0)
    scan_to = min(u0 * 1.02 + 0.02, DIST_CAP if budget is None else min(budget, DIST_CAP))
    scan_to = max(scan_to, 0.05)
    span = 2.0 * scan_to
    n = max(401, int(math.ceil(2.0 * span / grid_step)) + 1)
    mgrid = np.linspace(-span, span, n)

    candidates = []
    for sigma in (1.0, -1.0):
        defined, f, _, _, _ = _f_components(tm, mgrid, sigma)
        ok = defined[:-1] & defined[1:]
        crossing = ok & (f[:-1] * f[1:] <= 0.0) & (np.abs(f[:-1] - f[1:]) < 1.0)
        idx = np.nonzero(crossing)[0]
        if idx.size:
            a, b = mgrid[idx].copy(), mgrid[idx + 1].copy()
            fa = f[idx].copy()
            for _ in range(60):
                mid = 0.5 * (a + b)
                _, fm, _, _, _ = _f_components(tm, mid, sigma)
                left = fa * fm <= 0.0
                b = np.where(left, mid, b)
                a = np.where(left, a, mid)
                fa = np.where(left, fa, fm)
            for m_root in 0.5 * (a + b):
                cand = _verify_candidate(tm, float(m_root), sigma)
                if cand is not None:
                    candidates.append(cand)
        # grazing roots: same-sign local minima of |f| near zero
        af = np.abs(f)
        interior = np.arange(1, n - 1)
        dip = (
            defined[interior]
            & defined[interior - 1]
            & defined[interior + 1]
            & (af[interior] < 0.05)
            & (af[interior] <= af[interior - 1])
            & (af[interior] <= af[interior + 1])
            & (f[interior - 1] * f[interior + 1] > 0.0)
        )
        for i in interior[dip]:
            res = optimize.minimize_scalar(
                lambda mm: float(_f_components(tm, np.array([mm]), sigma)[1][0] ** 2),
                bounds=(mgrid[i - 1], mgrid[i + 1]),
                method="bounded",
                options={"xatol": 1e-14},
            )
            if res.fun < 1e-20:
                cand = _verify_candidate(tm, float(res.x), sigma)
                if cand is not None:
                    candidates.append(cand)

    if not candidates:
        return DistanceResult(math.inf, np.zeros(3), [], False, u0)
    candidates.sort(key=lambda c: c[0])
    best_len, best_w = candidates[0]
    lengths = [c[0] for c in candidates]
    certified = best_len <= min(scan_to, DIST_CAP) + 1e-9
    return DistanceResult(best_len, best_w, lengths, certified, min(u0, best_len))


def _refine_distance(tm: np.ndarray, seeds, restarts: int, seed: int):
    """Local least-squares polish of endpoint residuals from several starts."""
    best = None
    rng = np.random.default_rng(seed)
    u0 = psl_log_norm(tm)
    starts = [np.asarray(s, dtype=float) for s in seeds]
    for _ in range(restarts):
        d = rng.normal(size=3)
        d /= np.linalg.norm(d)
        starts.append(d * u0 * rng.uniform(0.5, 1.0))
    for w0 in starts:
        e0 = geodesic_endpoint(w0)
        sgn = 1.0 if np.sum(np.abs(e0 - tm)) <= np.sum(np.abs(e0 + tm)) else -1.0
        target = sgn * tm

        def resid(w):
            return (geodesic_endpoint(w) - target).ravel()

        sol = optimize.least_squares(resid, w0, xtol=1e-15, ftol=1e-15, gtol=1e-15)
        if np.max(np.abs(sol.fun)) < 1e-9:
            length = float(np.linalg.norm(sol.x))
            if best is None or length < best:
                best = length
    return best


def distance(
    x: GroupElement,
    y: GroupElement | None = None,
    restarts: int = 0,
    seed: int = 0,
    xcheck: bool = False,
    xcheck_tol: float = XCHECK_TOL,
) -> float:
    """Left-invariant distance d(x, y) (to the identity when y is omitted).

    Always runs the complete spin-rate scan; optional multistart refinement
    and a piecewise-path upper-bound cross-check can be layered on top.
    Raises NonconvergenceError (carrying the best upper bound) outside the
    certified range.
    """
    w = x.inverse() * y if y is not None else x
    res = dist_to_identity(w)
    best = res.value
    if restarts > 0:
        seeds = [res.velocity] if res.lengths else []
        refined = _refine_distance(w.m, seeds, restarts, seed)
        if refined is not None and refined < best:
            best = refined
    if not res.certified and best > DIST_CAP:
        raise NonconvergenceError(
            f"no certified geodesic below length cap {DIST_CAP}; "
            f"best upper bound {res.upper_bound:.6f}",
            upper_bound=res.upper_bound,
        )
    if xcheck:
        ub = path_energy_upper_bound(w)
        if best > ub + xcheck_tol:
            raise NonconvergenceError(
                f"distance {best:.9f} exceeds path upper bound {ub:.9f}",
                upper_bound=ub,
            )
    return best


# ---------------------------------------------------------------------------
# piecewise-path upper bound (independent of the scan)


def path_energy_upper_bound(
    target, waypoints: int = 8, sweeps: int = 12, tol: float = 1e-10
) -> float:
    """Total length of a piecewise one-parameter path from e to the target,
    shortened by coordinate descent over the interior waypoints.

    Each segment is a genuine curve in the group, so the returned value is a
    true upper bound for the distance regardless of how well the descent
    converged.
    """
    tm = target.m if isinstance(target, GroupElement) else canonical_sign(np.asarray(target, dtype=float))
    if frobenius_gap(tm) < 1e-14:
        return 0.0
    x0 = principal_log(tm)
    n = max(2, waypoints)
    pts = [algebra_exp((k / (n - 1)) * x0) for k in range(n)]
    pts[-1] = tm

    def seg(a, b):
        w = np.linalg.solve(a, b)
        return psl_log_norm(w)

    def total():
        return sum(seg(pts[k], pts[k + 1]) for k in range(n - 1))

    cur = total()
    for _ in range(sweeps):
        prev = cur
        for k in range(1, n - 1):
            pk = pts[k]

            def local(xi):
                q = pk @ algebra_exp(from_vector(xi))
                return seg(pts[k - 1], q) + seg(q, pts[k + 1])

            sol = optimize.minimize(
                local,
                np.zeros(3),
                method="Nelder-Mead",
                options={"xatol": 1e-9, "fatol": 1e-13, "maxiter": 150},
            )
            if sol.fun < local(np.zeros(3)):
                pts[k] = pk @ algebra_exp(from_vector(sol.x))
        cur = total()
        if prev - cur < tol:
            break
    return float(cur)


# ---------------------------------------------------------------------------
# hyperbolic-plane projection helpers


def base_point(m) -> complex:
    """Image of i under the matrix acting by Mobius transformation."""
    m = m.m if isinstance(m, GroupElement) else np.asarray(m, dtype=float)
    num = m[0, 0] * 1j + m[0, 1]
    den = m[1, 0] * 1j + m[1, 1]
    return num / den


def hyperbolic_distance(z: complex, w: complex) -> float:
    q = 1.0 + (abs(z - w) ** 2) / (2.0 * z.imag * w.imag)
    return math.acosh(max(q, 1.0))


def displacement(m) -> float:
    """d_H(i, m i), read off the squared Frobenius norm."""
    mm = m.m if isinstance(m, GroupElement) else np.asarray(m, dtype=float)
    q = 0.5 * float(np.sum(mm * mm))
    return math.acosh(max(q, 1.0))


def displacement_many(ms: np.ndarray) -> np.ndarray:
    ms = np.asarray(ms, dtype=float)
    q = 0.5 * np.sum(ms * ms, axis=(1, 2))
    return np.arccosh(np.maximum(q, 1.0))


# ---------------------------------------------------------------------------
# calibration tables

_CAL_SEED = 20260822
_CAL_SAMPLES = 800
_cal_memo: dict = {}


def _unit_directions(n: int, tag: int) -> np.ndarray:
    rng = np.random.default_rng(_CAL_SEED + tag)
    d = rng.normal(size=(n, 3))
    return d / np.linalg.norm(d, axis=1, keepdims=True)


def _gap_sphere_matrices(rho: float, dirs: np.ndarray) -> np.ndarray:
    """Unit-determinant matrices with entrywise gap exactly rho, one per
    direction in (p, q, r) perturbation space."""
    scale = np.full(len(dirs), rho)
    for _ in range(3):
        p, q, r = (scale[:, None] * dirs).T
        s = (q * r - p) / (1.0 + p)
        gap = np.abs(p) + np.abs(q) + np.abs(r) + np.abs(s)
        scale = scale * rho / np.maximum(gap, 1e-300)
    p, q, r = (scale[:, None] * dirs).T
    s = (q * r - p) / (1.0 + p)
    out = np.empty((len(dirs), 2, 2))
    out[:, 0, 0] = 1.0 + p
    out[:, 0, 1] = q
    out[:, 1, 0] = r
    out[:, 1, 1] = 1.0 + s
    return out


def calibrate_gap_to_distance(delta: float, n_samples: int = _CAL_SAMPLES) -> float:
    """Largest sampled rho such that every element with entrywise gap <= rho
    sits within distance delta/2 of the identity (safety factor 2).

    Monotone in delta.  Distances are bounded above by the one-parameter arc
    length, so the sampled implication errs on the sound side.
    """
    key = ("g2d", round(float(delta), 12), n_samples)
    if key in _cal_memo:
        return _cal_memo[key]
    if delta <= 0.0:
        raise ValueError("delta must be positive")
    dirs = _unit_directions(n_samples, tag=1)

    def max_dist(rho: float) -> float:
        ms = _gap_sphere_matrices(rho, dirs)
        return float(np.max(psl_log_norm_many(ms)))

    # the sphere parametrization needs 1 + p > 0, so rho stays below 0.95
    lo, hi = 0.0, min(delta, 0.9)
    while max_dist(hi) <= 0.5 * delta and hi < 0.95:
        lo, hi = hi, min(hi * 1.5, 0.95)
    for _ in range(50):
        mid = 0.5 * (lo + hi)
        if max_dist(mid) <= 0.5 * delta:
            lo = mid
        else:
            hi = mid
    _cal_memo[key] = lo
    return lo


def calibrate_distance_to_gap(eps: float, n_samples: int = _CAL_SAMPLES) -> float:
    """Largest sampled delta such that distance below delta forces entrywise
    gap below eps, shrunk by an 8 percent sampling margin.

    Monotone in eps via the fixed direction set.
    """
    key = ("d2g", round(float(eps), 12), n_samples)
    if key in _cal_memo:
        return _cal_memo[key]
    if eps <= 0.0:
        raise ValueError("eps must be positive")
    dirs = _unit_directions(n_samples, tag=2)

    def max_gap(delta: float) -> float:
        return max(
            frobenius_gap(geodesic_endpoint(delta * d)) for d in dirs
        )

    lo, hi = 0.0, 0.05
    while max_gap(hi) <= eps and hi < 4.0:
        lo, hi = hi, hi * 1.5
    for _ in range(40):
        mid = 0.5 * (lo + hi)
        if max_gap(mid) <= eps:
            lo = mid
        else:
            hi = mid
    out = 0.92 * lo
    _cal_memo[key] = out
    return out


def projection_lipschitz_bound(n_frames: int = 40, n_dirs: int = 25) -> float:
    """Calibrated upper bound kappa for (enumeration radius) / (distance):
    twice the largest sampled ratio of base-point displacement to geodesic
    arc length.  The ratio is provably at most sqrt2, so kappa lands near
    2 sqrt2."""
    key = ("kappa", n_frames, n_dirs)
    if key in _cal_memo:
        return _cal_memo[key]
    rng = np.random.default_rng(_CAL_SEED + 3)
    t = 0.05
    worst = SQRT2  # analytic ratio for purely horizontal directions
    for _ in range(n_frames):
        g = algebra_exp(from_vector(rng.normal(size=3) * 0.6))
        zg = base_point(g)
        for _ in range(n_dirs):
            d = rng.normal(size=3)
            d /= np.linalg.norm(d)
            e = g @ geodesic_endpoint(d, t)
            ratio = hyperbolic_distance(base_point(e), zg) / t
            worst = max(worst, ratio)
    out = 2.0 * worst
    _cal_memo[key] = out
    return out


CAL_FILE_VERSION = 1


def save_calibrations(path) -> None:
    """Persist the memoized calibration values as versioned key-value lines."""
    lines = [f"version {CAL_FILE_VERSION}"]
    for key, val in sorted(_cal_memo.items(), key=repr):
        if key[0] == "g2d":
            lines.append(f"gap_to_distance {key[1]!r} {key[2]} {val!r}")
        elif key[0] == "d2g":
            lines.append(f"distance_to_gap {key[1]!r} {key[2]} {val!r}")
        elif key[0] == "kappa":
            lines.append(f"kappa {key[1]} {key[2]} {val!r}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_calibrations(path) -> int:
    """Merge a calibration file back into the memo; returns entries loaded."""
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines or lines[0].split() != ["version", str(CAL_FILE_VERSION)]:
        raise ValueError("unrecognized calibration file version")
    count = 0
    for ln in lines[1:]:
        parts = ln.split()
        if parts[0] == "gap_to_distance":
            _cal_memo[("g2d", float(parts[1]), int(parts[2]))] = float(parts[3])
        elif parts[0] == "distance_to_gap":
            _cal_memo[("d2g", float(parts[1]), int(parts[2]))] = float(parts[3])
        elif parts[0] == "kappa":
            _cal_memo[("kappa", int(parts[1]), int(parts[2]))] = float(parts[3])
        else:
            raise ValueError(f"unrecognized calibration key {parts[0]!r}")
        count += 1
    return count
