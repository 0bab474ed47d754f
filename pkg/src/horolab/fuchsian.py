"""Cocompact Fuchsian groups: presets, ball enumeration, and certified
quotient-distance computations.

The group acts on PSL(2,R) by left multiplication and on the hyperbolic plane
through the base-point projection g -> g i.  Everything here leans on two
facts: the squared Frobenius norm of a unit-determinant matrix equals
2 cosh d_H(i, g i), so base-point displacements are one arccosh away, and the
projection to the plane stretches group distance by at most sqrt2, so
d_G(g, h) >= d_H(g i, h i)/sqrt2 gives certified lower bounds for pruning.

Ball enumeration runs breadth-first over freely reduced words, pruning a
prefix once its displacement exceeds the requested radius plus a slack of one
generator step (plus margin); elements are deduplicated on a rounded-entry
grid.  The element store only ever grows, so repeated calls share work.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import metric
from .sl2 import GroupElement, KEY_GRID, TOL_EQ, canonical_sign

# extra exploration beyond the requested radius: one generator step + margin,
# absorbing non-monotone displacement along near-geodesic words
_PRUNE_MARGIN = 0.5

DEFAULT_MAX_BALL = 1_000_000


class BudgetExceededError(RuntimeError):
    def __init__(self, msg: str, count: int, radius: float):
        super().__init__(msg)
        self.count = count
        self.radius = radius


@dataclass(frozen=True)
class QuotientPoint:
    """A coset Gamma g, carried by the chosen representative g."""

    rep: GroupElement


@dataclass
class QuotientResult:
    value: float
    gamma: GroupElement
    word: str
    radius: float
    word_raw: tuple = ()


@dataclass
class CosetResult:
    status: str  # "yes" | "no" | "exhausted"
    gamma: GroupElement | None
    word: str | None
    radius: float


@dataclass
class ShortestRecord:
    length: float
    trace: float
    sigma0: float
    eps_star: float
    word: str
    radius: float


def _word_inverse(word: tuple, ng: int = 4) -> tuple:
    return tuple((i + ng) % (2 * ng) for i in reversed(word))


def _word_concat(*parts: tuple, ng: int = 4) -> tuple:
    out: list = []
    for part in parts:
        for i in part:
            if out and out[-1] == (i + ng) % (2 * ng):
                out.pop()
            else:
                out.append(i)
    return tuple(out)


class FuchsianGroup:
    """A discrete cocompact subgroup given by generator matrices.

    Stores generators together with their inverses and grows a deduplicated
    ball of group elements on demand.
    """

    def __init__(self, name: str, generators: list[GroupElement],
                 max_ball_size: int = DEFAULT_MAX_BALL):
        if not generators:
            raise ValueError("need at least one generator")
        self.name = name
        self.generators = list(generators)
        self.max_ball_size = max_ball_size
        full = list(generators) + [g.inverse() for g in generators]
        self._gen_mats = np.stack([g.m for g in full])
        ng = len(generators)
        self._gen_words = [f"g{i}" for i in range(ng)] + [
            f"g{i}^-1" for i in range(ng)
        ]
        self._n_gens = ng
        self.max_step = float(np.max(metric.displacement_many(self._gen_mats)))
        # element store: canonical matrices, words, displacements, and the
        # exploration threshold each element was last expanded under
        self._mats: list[np.ndarray] = [np.eye(2)]
        self._words: list[tuple] = [()]
        self._disp: list[float] = [0.0]
        self._expanded_at: list[float] = [-1.0]
        self._keys: dict = {GroupElement._trusted(np.eye(2)).key(): 0}
        self._mat_stack: np.ndarray | None = None
        self._cover_radius: float | None = None
        self._shortest: ShortestRecord | None = None

    # -- element store ------------------------------------------------------

    def gen_word(self, idx: int) -> str:
        return self._gen_words[idx]

    def word_str(self, word: tuple) -> str:
        if not word:
            return "e"
        return "*".join(self._gen_words[i] for i in word)

    def invert_word(self, word: tuple) -> tuple:
        return _word_inverse(word, self._n_gens)

    def word_element(self, word: tuple) -> GroupElement:
        m = np.eye(2)
        for i in word:
            m = m @ self._gen_mats[i]
        return GroupElement._trusted(m)

    def _stack(self) -> np.ndarray:
        if self._mat_stack is None or len(self._mat_stack) != len(self._mats):
            self._mat_stack = np.stack(self._mats)
        return self._mat_stack

    def _ensure(self, radius: float) -> None:
        threshold = radius + self.max_step + _PRUNE_MARGIN
        grid_inv = 1.0 / KEY_GRID
        while True:
            frontier = [
                i
                for i in range(len(self._mats))
                if self._disp[i] <= threshold and self._expanded_at[i] < threshold
            ]
            if not frontier:
                break
            parents = np.stack([self._mats[i] for i in frontier])
            children = np.einsum("pij,gjk->pgik", parents, self._gen_mats)
            children = children.reshape(-1, 2, 2)
            tr = children[:, 0, 0] + children[:, 1, 1]
            flip = tr < 0.0
            children[flip] *= -1.0
            disp = metric.displacement_many(children)
            keys = np.round(children.reshape(-1, 4) * grid_inv).astype(np.int64)
            for p_pos, pidx in enumerate(frontier):
                self._expanded_at[pidx] = threshold
                pword = self._words[pidx]
                last_inv = ((pword[-1] + self._n_gens) % (2 * self._n_gens)
                            if pword else None)
                for gidx in range(2 * self._n_gens):
                    if gidx == last_inv:
                        continue
                    ci = p_pos * 2 * self._n_gens + gidx
                    if disp[ci] > threshold:
                        continue
                    key = tuple(keys[ci])
                    if key in self._keys:
                        continue
                    if len(self._mats) >= self.max_ball_size:
                        raise BudgetExceededError(
                            f"ball budget {self.max_ball_size} exhausted at "
                            f"radius {radius:.3f}",
                            count=len(self._mats),
                            radius=radius,
                        )
                    self._keys[key] = len(self._mats)
                    self._mats.append(np.array(children[ci]))
                    self._words.append(pword + (gidx,))
                    self._disp.append(float(disp[ci]))
                    self._expanded_at.append(-1.0)
            self._mat_stack = None

    def enumerate_ball(self, radius: float) -> list[GroupElement]:
        """All group elements with base-point displacement at most radius."""
        if radius < 0:
            return []
        self._ensure(radius)
        return [
            GroupElement._trusted(self._mats[i])
            for i in range(len(self._mats))
            if self._disp[i] <= radius + 1e-9
        ]

    def ball_arrays(self, radius: float):
        """(matrices, displacements, indices) for the ball, vector-friendly."""
        self._ensure(radius)
        d = np.array(self._disp)
        idx = np.nonzero(d <= radius + 1e-9)[0]
        return self._stack()[idx], d[idx], idx

    def ball_size(self) -> int:
        return len(self._mats)

    def word_sphere_counts(self, max_len: int) -> list[int]:
        """Distinct elements at each exact word length (free-reduction plus
        grid deduplication), independent of the radius-pruned store."""
        seen = {GroupElement._trusted(np.eye(2)).key()}
        layer = [((), np.eye(2))]
        counts = []
        for _ in range(max_len):
            nxt = []
            for word, m in layer:
                last_inv = ((word[-1] + self._n_gens) % (2 * self._n_gens)
                            if word else None)
                for gidx in range(2 * self._n_gens):
                    if gidx == last_inv:
                        continue
                    cm = canonical_sign(m @ self._gen_mats[gidx])
                    key = tuple(
                        int(round(v / KEY_GRID)) for v in cm.ravel()
                    )
                    if key in seen:
                        continue
                    seen.add(key)
                    nxt.append((word + (gidx,), cm))
            counts.append(len(nxt))
            layer = nxt
        return counts

    # -- representative reduction ------------------------------------------

    def reduce(self, g: GroupElement):
        """Greedy descent to a small-displacement representative.

        Returns (gamma, word, reduced) with gamma g = reduced; the word
        renders gamma in the generators.
        """
        cur = np.array(g.m)
        word: list = []
        cur_disp = metric.displacement(cur)
        for _ in range(10_000):
            cand = np.einsum("gij,jk->gik", self._gen_mats, cur)
            disps = metric.displacement_many(cand)
            best = int(np.argmin(disps))
            if disps[best] >= cur_disp - 1e-12:
                break
            cur = cand[best]
            cur_disp = float(disps[best])
            word.insert(0, best)
        gamma_word = tuple(word)
        gamma = self.word_element(gamma_word)
        return gamma, gamma_word, GroupElement._trusted(cur)

    def covering_radius(self) -> float:
        """Upper estimate for max over the plane of the distance to the
        orbit of i, from the largest displacement seen after reduction."""
        if self._cover_radius is None:
            rng = np.random.default_rng(414213562)
            worst = 0.0
            for _ in range(200):
                w = rng.normal(size=3)
                w = w / np.linalg.norm(w) * rng.uniform(0.5, 6.0)
                g = GroupElement(metric.algebra_exp(metric.from_vector(w)))
                _, _, red = self.reduce(g)
                worst = max(worst, metric.displacement(red))
            self._cover_radius = max(worst, 1.0) + 0.1
        return self._cover_radius

    # -- certified quotient geometry ---------------------------------------

    def quotient_distance(self, x, y) -> QuotientResult:
        """min over gamma of d_G(x rep, gamma y rep), certified by ball
        enumeration, with the minimizing gamma."""
        xr = x.rep if isinstance(x, QuotientPoint) else x
        yr = y.rep if isinstance(y, QuotientPoint) else y
        ggam, gword, g = self.reduce(xr)
        hgam, hword, h = self.reduce(yr)
        dg, dh = metric.displacement(g), metric.displacement(h)
        kappa = metric.projection_lipschitz_bound()
        ginv = g.inverse().m

        best = math.inf
        best_idx = 0
        radius = 7.0
        while True:
            mats, disps, idx = self.ball_arrays(radius)
            w_all = np.einsum("ij,njk,kl->nil", ginv, mats, h.m)
            lower = metric.displacement_many(w_all) / metric.SQRT2
            order = np.argsort(lower)
            for oi in order:
                if lower[oi] >= best - 1e-12:
                    break
                res = metric.dist_to_identity(
                    GroupElement._trusted(w_all[oi]), budget=best + 0.05
                )
                if res.value < best:
                    best = res.value
                    best_idx = int(idx[oi])
            need = dg + dh + kappa * best + 0.3
            if need <= radius:
                break
            radius = need
        gam_word = _word_concat(
            _word_inverse(gword, self._n_gens), self._words[best_idx],
            hword, ng=self._n_gens,
        )
        gamma = (
            ggam.inverse()
            * GroupElement._trusted(self._mats[best_idx])
            * hgam
        )
        return QuotientResult(
            value=float(best),
            gamma=gamma,
            word=self.word_str(gam_word),
            radius=radius,
            word_raw=gam_word,
        )

    def same_coset(self, g: GroupElement, h: GroupElement,
                   tol: float = 1e-7) -> CosetResult:
        """Decide Gamma g = Gamma h by matching h g^{-1} against the ball."""
        ggam, gword, gred = self.reduce(g)
        hgam, hword, hred = self.reduce(h)
        eta = hred * gred.inverse()
        d_eta = metric.displacement(eta)
        radius = d_eta + 0.3
        try:
            self._ensure(radius)
        except BudgetExceededError:
            return CosetResult("exhausted", None, None, radius)
        d = np.array(self._disp)
        for i in np.nonzero(np.abs(d - d_eta) <= 0.05)[0]:
            cand = GroupElement._trusted(self._mats[int(i)])
            if cand.approx_eq(eta, tol):
                word = _word_concat(
                    _word_inverse(hword, self._n_gens),
                    self._words[int(i)], gword, ng=self._n_gens,
                )
                gamma = hgam.inverse() * cand * ggam
                return CosetResult("yes", gamma, self.word_str(word), radius)
        return CosetResult("no", None, None, radius)

    # -- shortest-geodesic data --------------------------------------------

    def _conjugacy_search_radius(self, length_cand: float) -> float:
        # a conjugate of any translation of length l has an axis passing
        # within the covering radius of the base point, hence displacement
        # at most 2 asinh(cosh(r_cov) sinh(l/2))
        r = self.covering_radius()
        return 2.0 * math.asinh(math.cosh(r) * math.sinh(0.5 * length_cand)) + 0.4

    def shortest_record(self) -> ShortestRecord:
        """Certified systole and trace-gap data from ball enumeration."""
        if self._shortest is not None:
            return self._shortest
        cand = min(
            2.0 * math.acosh(0.5 * g.trace()) for g in self.generators
        )
        radius = 0.0
        for _ in range(6):
            radius = self._conjugacy_search_radius(cand)
            mats, disps, idx = self.ball_arrays(radius)
            tr = np.abs(mats[:, 0, 0] + mats[:, 1, 1])
            nontrivial = idx != 0
            if np.any(tr[nontrivial] <= 2.0 + 1e-6):
                raise ValueError(
                    "found a non-hyperbolic nontrivial element; the group "
                    "is not cocompact torsion-free"
                )
            pos = np.nonzero(nontrivial)[0]
            j = pos[int(np.argmin(tr[pos]))]
            tr_min = float(tr[j])
            l_min = 2.0 * math.acosh(0.5 * tr_min)
            witness = self._words[int(idx[j])]
            if l_min < cand - 1e-12:
                cand = l_min
                continue
            cand = min(cand, l_min)
            break
        self._shortest = ShortestRecord(
            length=cand,
            trace=tr_min,
            sigma0=cand / metric.SQRT2,
            eps_star=tr_min - 2.0,
            word=self.word_str(witness),
            radius=radius,
        )
        return self._shortest

    def injectivity_radius(self) -> float:
        """Half the shortest translation length in the group metric scale:
        sigma0 / 2 in quotient-distance terms is the safe ball radius; the
        conventional figure reported here is sigma0 = length/sqrt2."""
        return self.shortest_record().sigma0

    def trace_gap(self) -> float:
        return self.shortest_record().eps_star


# ---------------------------------------------------------------------------
# presets and files


def preset_bolza(max_ball_size: int = DEFAULT_MAX_BALL) -> FuchsianGroup:
    """The genus-two surface group generated by four rotated copies of a
    symmetric hyperbolic translation.

    g0 has entries [[1+sqrt2, sqrt(2+2 sqrt2)], [sqrt(2+2 sqrt2), 1+sqrt2]]
    and g_k = R(k pi/4) g0 R(-k pi/4), where R(theta) is the rotation about i
    by theta (matrix angle theta/2).
    """
    s2 = math.sqrt(2.0)
    off = math.sqrt(2.0 + 2.0 * s2)
    g0 = np.array([[1.0 + s2, off], [off, 1.0 + s2]])
    gens = []
    for k in range(4):
        th = 0.5 * (k * math.pi / 4.0)
        c, s = math.cos(th), math.sin(th)
        r = np.array([[c, s], [-s, c]])
        gens.append(GroupElement(r @ g0 @ r.T))
    return FuchsianGroup("bolza", gens, max_ball_size=max_ball_size)


def save_group_file(group: FuchsianGroup, path) -> None:
    lines = [f"name {group.name}"]
    for g in group.generators:
        lines.append(" ".join(repr(float(v)) for v in g.m.ravel()))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_group_file(path, max_ball_size: int = DEFAULT_MAX_BALL) -> FuchsianGroup:
    """Read a group from a text file: a name header, then one generator per
    line as four reals.  Determinants are validated on load."""
    name = None
    gens = []
    with open(path) as fh:
        for raw in fh:
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if line.startswith("name "):
                name = line.split(None, 1)[1]
                continue
            vals = [float(v) for v in line.split()]
            if len(vals) != 4:
                raise ValueError(
                    f"generator rows need 4 entries, got {len(vals)}"
                )
            gens.append(GroupElement(np.array(vals).reshape(2, 2)))
    if name is None:
        raise ValueError("missing group name header")
    return FuchsianGroup(name, gens, max_ball_size=max_ball_size)


BALL_CACHE_VERSION = 1


def save_ball_cache(group: FuchsianGroup, path) -> None:
    """Persist the enumerated elements as plain text: word and four entries."""
    lines = [
        f"# ball cache v{BALL_CACHE_VERSION}",
        f"name {group.name}",
        f"count {len(group._mats)}",
    ]
    for i in range(len(group._mats)):
        word = group.word_str(group._words[i])
        entries = " ".join(repr(float(v)) for v in group._mats[i].ravel())
        lines.append(f"{word} {entries}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_ball_cache(group: FuchsianGroup, path) -> int:
    """Merge cached elements into the group's store; verifies the name and
    re-derives words from their rendered form.  Returns elements added."""
    with open(path) as fh:
        lines = [ln.rstrip("\n") for ln in fh]
    if not lines or not lines[0].startswith("# ball cache"):
        raise ValueError("not a ball cache file")
    header = dict(
        ln.split(None, 1) for ln in lines[1:3] if " " in ln
    )
    if header.get("name") != group.name:
        raise ValueError(
            f"cache is for group {header.get('name')!r}, not {group.name!r}"
        )
    lookup = {w: i for i, w in enumerate(group._gen_words)}
    added = 0
    for ln in lines[3:]:
        if not ln.strip():
            continue
        parts = ln.split()
        word_s, entries = parts[0], [float(v) for v in parts[1:]]
        if len(entries) != 4:
            raise ValueError(f"bad cache row: {ln!r}")
        word = () if word_s == "e" else tuple(
            lookup[t] for t in word_s.split("*")
        )
        g = GroupElement(np.array(entries).reshape(2, 2))
        key = g.key()
        if key in group._keys:
            continue
        group._keys[key] = len(group._mats)
        group._mats.append(np.array(g.m))
        group._words.append(word)
        group._disp.append(metric.displacement(g))
        group._expanded_at.append(-1.0)
        added += 1
    group._mat_stack = None
    return added
