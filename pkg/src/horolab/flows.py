"""The three frame flows on a compact quotient, plus time changes.

Flow steps are exact group multiplications on the chosen representative:

    geodesic             x a_t
    stable horocycle     x b_t
    unstable horocycle   x c_t

No fundamental-domain reduction happens inside a step; representatives are
only re-centered where a computation needs it (certified distance calls, or
the re-anchoring inside speed-field evaluation).

A time change replaces the unit parametrization of a horocycle flow by a
positive bounded speed field rho: the reparametrized flow is
psi_t(x) = theta_{beta(t)}(x) where dbeta/dt = rho(theta_beta(x)), integrated
with fixed-step RK4.  Speed fields built from a short Gamma-sum are invariant
on the quotient to float precision once representatives stay near the
identity, which the integrator guarantees by re-anchoring.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import metric
from .fuchsian import FuchsianGroup, QuotientPoint
from .sl2 import GroupElement, one_param

FLOW_KINDS = ("geodesic", "stable_horocycle", "unstable_horocycle")

_ONE_PARAM_KIND = {
    "geodesic": "geodesic",
    "stable_horocycle": "stable",
    "unstable_horocycle": "unstable",
}


def step(kind: str, x: QuotientPoint, t: float) -> QuotientPoint:
    """Flow the point for time t by exact right multiplication."""
    if kind not in FLOW_KINDS:
        raise ValueError(f"unknown flow kind {kind!r}")
    return QuotientPoint(x.rep * one_param(_ONE_PARAM_KIND[kind], t))


def _shift_mats(mats: np.ndarray, kind: str, t) -> np.ndarray:
    """Right-multiply a stack of representatives by the flow element."""
    t = np.asarray(t, dtype=float)
    out = np.empty(np.broadcast_shapes(mats.shape[:-2], t.shape) + (2, 2))
    if kind == "stable_horocycle":
        out[..., :, 0] = mats[..., :, 0]
        out[..., :, 1] = mats[..., :, 0] * t[..., None] + mats[..., :, 1]
    elif kind == "unstable_horocycle":
        out[..., :, 0] = mats[..., :, 0] + mats[..., :, 1] * t[..., None]
        out[..., :, 1] = mats[..., :, 1]
    elif kind == "geodesic":
        e = np.exp(0.5 * t)
        out[..., :, 0] = mats[..., :, 0] * e[..., None]
        out[..., :, 1] = mats[..., :, 1] / e[..., None]
    else:
        raise ValueError(f"unknown flow kind {kind!r}")
    return out


# ---------------------------------------------------------------------------
# speed fields


class VectorSpeed:
    """A positive speed field evaluated on stacked representatives.

    fn maps an (n, 2, 2) array to (n,) positive values; constant marks the
    exactly-constant case so integration can shortcut.
    """

    def __init__(self, fn, label: str, constant: float | None = None,
                 group: FuchsianGroup | None = None):
        self.fn = fn
        self.label = label
        self.constant = constant
        self.group = group

    def __call__(self, mats: np.ndarray) -> np.ndarray:
        mats = np.asarray(mats, dtype=float)
        single = mats.ndim == 2
        if single:
            mats = mats[None]
        if self.constant is not None:
            vals = np.full(len(mats), self.constant)
        else:
            vals = np.asarray(self.fn(mats), dtype=float)
        return vals[0] if single else vals


def constant_speed(c: float = 1.0) -> VectorSpeed:
    if c <= 0:
        raise ValueError("speed must be positive")
    label = "identity" if c == 1.0 else f"constant_{c:g}"
    return VectorSpeed(None, label, constant=float(c))


def bump_speed(group: FuchsianGroup, amplitude: float = 0.5,
               width: float = 1.0, ball_radius: float = 5.0) -> VectorSpeed:
    """Invariant nonconstant speed: 1 plus a normalized Gamma-sum of Gaussian
    weights in the Frobenius norm.

    Terms decay like exp(-cosh(displacement)), so truncating the sum at
    ball_radius leaves an error below 1e-7 as long as representatives stay
    within displacement ~2.5 of the identity; the integrator's re-anchoring
    keeps them there.
    """
    mats, _, _ = group.ball_arrays(ball_radius)
    gam = np.array(mats)

    def raw_sum(ms: np.ndarray) -> np.ndarray:
        prod = np.einsum("kij,njl->knil", gam, ms)
        frob2 = np.sum(prod * prod, axis=(2, 3))
        return np.sum(np.exp(-frob2 / width), axis=0)

    s0 = float(raw_sum(np.eye(2)[None])[0])

    def fn(ms: np.ndarray) -> np.ndarray:
        return 1.0 + amplitude * raw_sum(ms) / s0

    return VectorSpeed(fn, f"bump_{amplitude:g}", group=group)


# ---------------------------------------------------------------------------
# time changes


@dataclass
class TimeChange:
    """A bounded reparametrization of one horocycle flow."""

    base: str
    speed: VectorSpeed
    rho_min: float
    rho_max: float
    h_tc: float

    @classmethod
    def build(cls, base: str, speed: VectorSpeed, n_probe: int = 1000,
              seed: int = 414213) -> "TimeChange":
        if base not in ("stable_horocycle", "unstable_horocycle"):
            raise ValueError("time changes apply to the horocycle flows")
        if speed.constant is not None:
            rmin = rmax = speed.constant
        else:
            rng = np.random.default_rng(seed)
            w = rng.normal(size=(n_probe, 3))
            w *= (rng.uniform(0.1, 1.2, size=n_probe) /
                  np.linalg.norm(w, axis=1))[:, None]
            probes = np.stack(
                [metric.algebra_exp(metric.from_vector(v)) for v in w]
            )
            vals = speed(probes)
            if np.min(vals) <= 0:
                raise ValueError("sampled speed is not positive")
            rmin, rmax = float(np.min(vals)) * 0.98, float(np.max(vals)) * 1.02
        h = 1e-3 * (rmin / rmax)
        return cls(base=base, speed=speed, rho_min=rmin, rho_max=rmax, h_tc=h)


def _reduce_anchor(group: FuchsianGroup | None, mat: np.ndarray) -> np.ndarray:
    if group is None:
        return mat
    _, _, red = group.reduce(GroupElement._trusted(mat))
    return red.m


def integrate_beta_grid(tc: TimeChange, reps: np.ndarray, t_query,
                        h: float | None = None) -> np.ndarray:
    """beta values along psi at the query times (containing 0), per
    trajectory: reps is (n, 2, 2) and the result is (n, len(t_query)).

    Fixed-step RK4 on dbeta/dt = rho(x b_beta); steps between query points
    subdivide evenly at size at most h (default the time change's h_tc).
    """
    reps = np.asarray(reps, dtype=float)
    if reps.ndim == 2:
        reps = reps[None]
    t_query = np.asarray(t_query, dtype=float)
    if h is None:
        h = tc.h_tc
    out = np.zeros((len(reps), len(t_query)))
    if tc.speed.constant is not None:
        out[:] = tc.speed.constant * t_query[None, :]
        return out
    order = np.argsort(t_query)
    group = tc.speed.group

    for sign in (1.0, -1.0):
        sel = [i for i in order if (t_query[i] > 0 if sign > 0 else t_query[i] < 0)]
        if not sel:
            continue
        beta = np.zeros(len(reps))
        anchors = np.stack([_reduce_anchor(group, m) for m in reps])
        b_anchor = np.zeros(len(reps))
        t_cur = 0.0
        targets = sel if sign > 0 else sel
        for qi in (targets if sign > 0 else reversed(targets)):
            t_next = t_query[qi]
            span = t_next - t_cur
            n_steps = max(1, int(math.ceil(abs(span) / h)))
            dt = span / n_steps
            for _ in range(n_steps):
                def rho(b):
                    local = anchors.copy()
                    d = b - b_anchor
                    mats = _shift_mats(local, tc.base, d)
                    return tc.speed(mats)

                k1 = rho(beta)
                k2 = rho(beta + 0.5 * dt * k1)
                k3 = rho(beta + 0.5 * dt * k2)
                k4 = rho(beta + dt * k3)
                beta = beta + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
                drift = np.abs(beta - b_anchor)
                if np.any(drift > 0.6):
                    for i in np.nonzero(drift > 0.6)[0]:
                        moved = _shift_mats(
                            anchors[i][None], tc.base,
                            np.array([beta[i] - b_anchor[i]])
                        )[0]
                        anchors[i] = _reduce_anchor(group, moved)
                        b_anchor[i] = beta[i]
            t_cur = t_next
            out[:, qi] = beta
    return out


def time_change_step(tc: TimeChange, x: QuotientPoint, t: float,
                     h: float | None = None):
    """One reparametrized step: returns (endpoint, elapsed base time beta)."""
    betas = integrate_beta_grid(tc, x.rep.m[None], np.array([0.0, t]), h=h)
    beta = float(betas[0, 1])
    return step(tc.base, x, beta), beta


def alpha_time(tc: TimeChange, x: QuotientPoint, s: float,
               h: float | None = None) -> float:
    """Inverse reparametrization: the psi-time needed to cover base time s,
    integrating dalpha/ds = 1/rho along the base orbit."""
    if tc.speed.constant is not None:
        return s / tc.speed.constant
    if h is None:
        h = tc.h_tc
    group = tc.speed.group
    anchor = _reduce_anchor(group, x.rep.m)
    b_anchor = 0.0
    n_steps = max(1, int(math.ceil(abs(s) / h)))
    dt = s / n_steps
    alpha = 0.0
    u = 0.0

    def inv_rho(uu):
        nonlocal anchor, b_anchor
        if abs(uu - b_anchor) > 0.6:
            moved = _shift_mats(anchor[None], tc.base,
                                np.array([uu - b_anchor]))[0]
            anchor = _reduce_anchor(group, moved)
            b_anchor = uu
        m = _shift_mats(anchor[None], tc.base, np.array([uu - b_anchor]))[0]
        return 1.0 / float(tc.speed(m))

    for _ in range(n_steps):
        k1 = inv_rho(u)
        k2 = inv_rho(u + 0.5 * dt)
        k3 = k2
        k4 = inv_rho(u + dt)
        alpha += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        u += dt
    return alpha


# ---------------------------------------------------------------------------
# trajectories


@dataclass
class Trajectory:
    kind: str
    times: np.ndarray
    points: list = field(repr=False)


def sample_trajectory(kind_or_tc, x: QuotientPoint, t0: float, t1: float,
                      n: int) -> Trajectory:
    """n points evenly spaced in flow time from t0 to t1 inclusive."""
    times = np.linspace(t0, t1, n)
    if isinstance(kind_or_tc, TimeChange):
        tc = kind_or_tc
        q = np.concatenate([[0.0], times])
        betas = integrate_beta_grid(tc, x.rep.m[None], q)[0, 1:]
        pts = [step(tc.base, x, float(b)) for b in betas]
        kind = f"{tc.base}:{tc.speed.label}"
    else:
        pts = [step(kind_or_tc, x, float(t)) for t in times]
        kind = kind_or_tc
    return Trajectory(kind=kind, times=times, points=pts)


def trajectory_csv(traj: Trajectory) -> str:
    lines = ["t,a11,a12,a21,a22"]
    for t, p in zip(traj.times, traj.points):
        a, b, c, d = (float(v) for v in p.rep.m.ravel())
        lines.append(f"{float(t)!r},{a!r},{b!r},{c!r},{d!r}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# periodicity


@dataclass
class PeriodicCertificate:
    kind: str
    eps_star: float
    ball_radius: float
    n_conj: int
    max_conj_dev: float
    conclusion: str


def periodic_certificate(group: FuchsianGroup, kind: str,
                         n_conj: int = 1000, seed: int = 7) -> PeriodicCertificate:
    """Certificate that a horocycle flow has no periodic orbit.

    A period T > 0 at x = Gamma g needs gamma g = g b_T with gamma in the
    group, so trace(gamma) = trace(b_T) = 2; the certified trace gap says
    every nontrivial element has trace at least 2 + eps_star, forcing
    gamma = e and T = 0.  Trace invariance under conjugation is additionally
    spot-checked on random frames.
    """
    if kind not in ("stable_horocycle", "unstable_horocycle"):
        raise ValueError("the certificate applies to the horocycle flows")
    rec = group.shortest_record()
    rng = np.random.default_rng(seed)
    mats, _, _ = group.ball_arrays(4.0)
    dev = 0.0
    for _ in range(n_conj):
        g = metric.algebra_exp(metric.from_vector(rng.normal(size=3)))
        gi = np.linalg.inv(g)
        gam = mats[rng.integers(0, len(mats))]
        conj = g @ gam @ gi
        dev = max(dev, abs(abs(conj[0, 0] + conj[1, 1]) -
                           abs(gam[0, 0] + gam[1, 1])))
    return PeriodicCertificate(
        kind=kind,
        eps_star=rec.eps_star,
        ball_radius=rec.radius,
        n_conj=n_conj,
        max_conj_dev=dev,
        conclusion=(
            "any period T forces an element of trace 2, below the certified "
            f"gap 2 + {rec.eps_star:.6f}; no periodic orbits"
        ),
    )


def empirical_return_check(group: FuchsianGroup, kind: str, n_points: int,
                           t_values, seed: int = 7):
    """Smallest certified quotient distance between theta_T(x) and x over
    random points and the given T values; a positive floor is evidence
    against periodic orbits independent of the trace argument."""
    rng = np.random.default_rng(seed)
    best = math.inf
    witness = None
    for _ in range(n_points):
        w = rng.normal(size=3) * 0.5
        x = QuotientPoint(GroupElement(
            metric.algebra_exp(metric.from_vector(w))
        ))
        for t in t_values:
            moved = step(kind, x, float(t))
            q = group.quotient_distance(moved, x)
            if q.value < best:
                best = q.value
                witness = {"t": float(t), "rep": x.rep.m.ravel().tolist(),
                           "distance": q.value}
    return best, witness
