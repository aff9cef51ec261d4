"""Intersection lattices of closed oriented 4-manifolds and their characteristic numbers.

The lattice is H^2(M, Z)/torsion with its unimodular intersection form
``gram``; ``w2`` is a mod-2 vector whose lifts ``c`` are the candidate
characteristic classes.  Everything is exact integer / rational arithmetic
except the eigenvalue signature, which is cross-checked by an exact
congruence diagonalisation.

The Wu search exploits orthogonal block structure of the form: the box is
enumerated block by block (vectorised), the per-block norm distributions
are convolved to get the exact number of solutions, and solutions are then
listed in canonical order (sup-norm, then lexicographic) up to a cap.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import BudgetExceededError, LatticeError

DEFAULT_BOUND = 6
DEFAULT_BUDGET = 10**8
DEFAULT_MAX_SOLUTIONS = 1000


def _int_det(m):
    """Exact determinant by fraction-free Bareiss elimination."""
    a = [[int(v) for v in row] for row in m]
    n = len(a)
    if n == 0:
        return 1
    sign, prev = 1, 1
    for k in range(n - 1):
        if a[k][k] == 0:
            swap = next((i for i in range(k + 1, n) if a[i][k]), None)
            if swap is None:
                return 0
            a[k], a[swap] = a[swap], a[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) // prev
        prev = a[k][k]
    return sign * a[-1][-1]


def _solve_mod2(m, rhs):
    """Solve m x = rhs over GF(2) for invertible ``m``."""
    n = len(m)
    aug = [[int(v) % 2 for v in row] + [int(r) % 2] for row, r in zip(m, rhs)]
    for col in range(n):
        piv = next((r for r in range(col, n) if aug[r][col]), None)
        if piv is None:
            raise LatticeError("form is singular mod 2")
        aug[col], aug[piv] = aug[piv], aug[col]
        for r in range(n):
            if r != col and aug[r][col]:
                aug[r] = [(x + y) % 2 for x, y in zip(aug[r], aug[col])]
    return [aug[i][n] for i in range(n)]


@dataclass(frozen=True)
class IntersectionLattice:
    gram: tuple
    b1: int = 0
    w2: tuple = ()
    name: str = ""

    def __post_init__(self):
        gram = tuple(tuple(int(v) for v in row) for row in self.gram)
        object.__setattr__(self, "gram", gram)
        n = len(gram)
        if any(len(row) != n for row in gram):
            raise LatticeError("gram must be square")
        if any(gram[i][j] != gram[j][i] for i in range(n) for j in range(n)):
            raise LatticeError("gram must be symmetric")
        if self.b1 < 0:
            raise LatticeError("b1 must be non-negative")
        if abs(_int_det(gram)) != 1:
            raise LatticeError("intersection form is not unimodular")
        if self.w2 is None or (len(self.w2) == 0 and n > 0):
            w2 = tuple(_solve_mod2(gram, [gram[i][i] for i in range(n)]))
        else:
            w2 = tuple(int(v) % 2 for v in self.w2)
        if len(w2) != n:
            raise LatticeError("w2 has the wrong length")
        object.__setattr__(self, "w2", w2)
        # Wu relation on basis vectors: x.x = w2.x mod 2
        for i in range(n):
            if (sum(w2[k] * gram[k][i] for k in range(n)) - gram[i][i]) % 2:
                raise LatticeError("w2 is not characteristic for the form")

    @property
    def n(self):
        return len(self.gram)

    def matrix(self):
        return np.array(self.gram, dtype=np.int64).reshape(self.n, self.n)

    def pair(self, c, d):
        g = self.gram
        return sum(c[i] * g[i][j] * d[j] for i in range(self.n) for j in range(self.n) if g[i][j])

    @classmethod
    def from_json(cls, data, name=""):
        try:
            return cls(
                tuple(tuple(r) for r in data["gram"]),
                int(data.get("b1", 0)),
                tuple(data["w2"]) if data.get("w2") is not None else (),
                data.get("name", name),
            )
        except (KeyError, TypeError, ValueError) as err:
            if isinstance(err, LatticeError):
                raise
            raise LatticeError(f"bad lattice record: {err}") from None

    def to_json(self):
        return {"name": self.name, "gram": [list(r) for r in self.gram], "b1": self.b1,
                "w2": list(self.w2)}


@dataclass(frozen=True)
class TopInvariants:
    chi: int
    tau: int
    todd: Fraction

    @property
    def todd_integral(self):
        return self.todd.denominator == 1

    @property
    def wu_target(self):
        return 2 * self.chi + 3 * self.tau

    def to_json(self):
        return {
            "chi": self.chi,
            "tau": self.tau,
            "todd": str(self.todd),
            "todd_integral": self.todd_integral,
        }


def signature_eigen(gram):
    """Signature from the signs of the real eigenvalues."""
    m = np.asarray(gram, dtype=float)
    if m.size == 0:
        return 0
    eig = np.linalg.eigvalsh(m.reshape(len(gram), len(gram)))
    if np.min(np.abs(eig)) < 1e-9:
        raise LatticeError("form is degenerate")
    return int(np.sum(eig > 0) - np.sum(eig < 0))


def signature_exact(gram):
    """Signature by exact symmetric Gaussian elimination (congruence) over Q."""
    a = [[Fraction(v) for v in row] for row in gram]
    n = len(a)
    pos = neg = 0
    k = 0
    while k < n:
        if a[k][k] == 0:
            j = next((j for j in range(k + 1, n) if a[j][j] != 0), None)
            if j is not None:
                a[k], a[j] = a[j], a[k]
                for row in a:
                    row[k], row[j] = row[j], row[k]
            else:
                j = next((j for j in range(k + 1, n) if a[k][j] != 0), None)
                if j is None:
                    raise LatticeError("form is degenerate")
                # e_k <- e_k + e_j makes the diagonal 2 a_kj != 0
                for c in range(n):
                    a[k][c] += a[j][c]
                for r in range(n):
                    a[r][k] += a[r][j]
        p = a[k][k]
        if p > 0:
            pos += 1
        else:
            neg += 1
        for i in range(k + 1, n):
            f = a[i][k] / p
            if f:
                for c in range(k, n):
                    a[i][c] -= f * a[k][c]
                for r in range(k, n):
                    a[r][i] -= f * a[r][k]
        k += 1
    return pos - neg


def invariants(lat):
    n = lat.n
    chi = 2 - 2 * lat.b1 + n
    tau = signature_eigen(lat.gram)
    return TopInvariants(chi, tau, Fraction(chi + tau, 4))


def is_spin(lat):
    """w2 = 0."""
    return not any(lat.w2)


def index_c2(c, lat, inv=None):
    """Euler number (c.c - 2 chi - 3 tau) / 4 of V+ for the spin^c class with c1(L) = c."""
    c = [int(v) for v in c]
    if len(c) != lat.n:
        raise LatticeError("class has the wrong length")
    if any((ci - wi) % 2 for ci, wi in zip(c, lat.w2)):
        raise LatticeError("class does not reduce to w2 mod 2")
    inv = inv or invariants(lat)
    num = lat.pair(c, c) - inv.wu_target
    if num % 4:
        raise LatticeError(f"c.c - (2 chi + 3 tau) = {num} is not divisible by 4")
    return num // 4


# -- enumeration ------------------------------------------------------------

def _blocks(gram):
    """Contiguous index ranges that are mutually orthogonal."""
    n = len(gram)
    blocks = []
    start = 0
    reach = 0
    for i in range(n):
        for j in range(n):
            if gram[i][j]:
                reach = max(reach, j)
        if reach <= i:
            blocks.append((start, i + 1))
            start = i + 1
            reach = i + 1
    return blocks


def _values(bound, parity):
    return np.array([v for v in range(-bound, bound + 1) if (v - parity) % 2 == 0], dtype=np.int64)


def _work(lat, bound):
    total = 0
    for lo, hi in _blocks(lat.gram):
        size = 1
        for i in range(lo, hi):
            size *= len(_values(bound, lat.w2[i]))
        total += (hi - lo) * size
    return total


@dataclass
class _Block:
    vectors: np.ndarray  # lexicographically sorted
    norms: np.ndarray
    sup: np.ndarray


def _enumerate_block(sub, parities, bound):
    k = len(parities)
    axes = [_values(bound, p) for p in parities]
    if any(len(a) == 0 for a in axes):
        return _Block(np.zeros((0, k), np.int64), np.zeros(0, np.int64), np.zeros(0, np.int64))
    grids = np.meshgrid(*axes, indexing="ij")
    vecs = np.stack([g.reshape(-1) for g in grids], axis=1)
    norms = np.zeros(len(vecs), dtype=np.int64)
    for i in range(k):
        for j in range(i, k):
            q = sub[i][j]
            if q:
                term = vecs[:, i] * vecs[:, j] * q
                norms += term if i == j else 2 * term
    sup = np.abs(vecs).max(axis=1) if k else np.zeros(len(vecs), np.int64)
    return _Block(vecs, norms, sup)


def _histogram(block, r):
    mask = block.sup <= r
    vals, counts = np.unique(block.norms[mask], return_counts=True)
    return {int(v): int(c) for v, c in zip(vals, counts)}


def _convolve(h1, h2):
    out = {}
    for a, ca in h1.items():
        for b, cb in h2.items():
            out[a + b] = out.get(a + b, 0) + ca * cb
    return out


@dataclass(frozen=True)
class WuResult:
    target: int
    bound: int
    count: int  # exact number of solutions in the box
    solutions: tuple  # canonical order, at most max_solutions
    conclusive: bool  # True only when the negative answer is a proof (n = 0)

    @property
    def truncated(self):
        return len(self.solutions) < self.count

    @property
    def found(self):
        return self.count > 0

    def to_json(self):
        return {
            "target": self.target,
            "bound": self.bound,
            "count": self.count,
            "solutions": [list(s) for s in self.solutions],
            "truncated": self.truncated,
            "conclusive": self.conclusive,
            "status": "found" if self.found else (
                "none" if self.conclusive else "none within bound"),
        }


class _Search:
    """Exact search for c = w2 (mod 2), |c_i| <= bound, c.c = target."""

    def __init__(self, lat, bound, budget):
        if bound < 1:
            raise ValueError("bound must be >= 1")
        work = _work(lat, bound)
        if work > budget:
            raise BudgetExceededError(
                f"enumeration needs {work} steps, budget is {budget}; reduce the bound"
            )
        self.lat = lat
        self.bound = bound
        self.ranges = _blocks(lat.gram)
        cache = {}
        self.blocks = []
        for lo, hi in self.ranges:
            sub = tuple(tuple(lat.gram[i][lo:hi]) for i in range(lo, hi))
            key = (sub, lat.w2[lo:hi])
            if key not in cache:
                cache[key] = _enumerate_block(sub, lat.w2[lo:hi], bound)
            self.blocks.append(cache[key])
        self._hist = {}
        self._suffix = {}

    def histogram(self, b, r):
        blk = self.blocks[b]
        key = (id(blk), r)
        if key not in self._hist:
            self._hist[key] = _histogram(blk, r) if r >= 0 else {}
        return self._hist[key]

    def suffix_histograms(self, r):
        """hist[b] = norm -> count over blocks b.. with every |c_i| <= r."""
        if r in self._suffix:
            return self._suffix[r]
        hists = [None] * (len(self.blocks) + 1)
        hists[-1] = {0: 1} if r >= 0 else {}
        for b in range(len(self.blocks) - 1, -1, -1):
            hists[b] = _convolve(self.histogram(b, r), hists[b + 1])
        self._suffix[r] = hists
        return hists

    def count(self, target, r):
        return self.suffix_histograms(r)[0].get(target, 0)

    def shell(self, target, r, limit):
        """Solutions with sup-norm exactly r, lexicographic, at most ``limit``."""
        le = self.suffix_histograms(r)
        lt = self.suffix_histograms(r - 1)
        exact = [
            {t: c - lt[b].get(t, 0) for t, c in le[b].items() if c - lt[b].get(t, 0) > 0}
            for b in range(len(le))
        ]
        keys_le = [np.array(sorted(h), dtype=np.int64) for h in le]
        keys_ex = [np.array(sorted(h), dtype=np.int64) for h in exact]
        out = []

        def dfs(b, t, need_r, prefix):
            if b == len(self.blocks):
                if t == 0 and not need_r:
                    out.append(tuple(int(v) for v in np.concatenate(prefix)) if prefix else ())
                return
            blk = self.blocks[b]
            idx = np.nonzero(blk.sup <= r)[0]
            rest = t - blk.norms[idx]
            nxt_need = need_r & (blk.sup[idx] != r)
            ok = np.where(
                nxt_need, np.isin(rest, keys_ex[b + 1]), np.isin(rest, keys_le[b + 1])
            )
            for i, rt, nn in zip(idx[ok], rest[ok], nxt_need[ok]):
                dfs(b + 1, int(rt), bool(nn), prefix + [blk.vectors[i]])
                if len(out) >= limit:
                    return

        if target in exact[0]:
            dfs(0, target, True, [])
        return out


def wu_search(lat, bound=DEFAULT_BOUND, budget=DEFAULT_BUDGET, max_solutions=DEFAULT_MAX_SOLUTIONS,
              target=None):
    """Characteristic classes c with c.c = 2 chi + 3 tau inside the box max|c_i| <= bound.

    Returns a :class:`WuResult`; ``count`` is exact for the whole box and
    ``solutions`` lists them in canonical order (sup-norm, then
    lexicographic), truncated at ``max_solutions``.  An empty result is
    conclusive only for n = 0.
    """
    inv = invariants(lat)
    target = inv.wu_target if target is None else target
    if lat.n == 0:
        sols = ((),) if target == 0 else ()
        return WuResult(target, bound, len(sols), sols, True)
    search = _Search(lat, bound, budget)
    count = search.count(target, bound)
    sols = []
    for r in range(bound + 1):
        if len(sols) >= max_solutions or len(sols) >= count:
            break
        sols.extend(search.shell(target, r, max_solutions - len(sols)))
    return WuResult(target, bound, count, tuple(sols), False)


def characteristic_vectors(lat, bound, budget=DEFAULT_BUDGET):
    """Every c = w2 (mod 2) with max|c_i| <= bound, in lexicographic order."""
    n = lat.n
    if n == 0:
        return [()]
    size = 1
    for w in lat.w2:
        size *= len(_values(bound, w))
    if n * size > budget:
        raise BudgetExceededError(f"{n * size} steps exceeds budget {budget}")
    blk = _enumerate_block(lat.gram, lat.w2, bound)
    return [tuple(int(v) for v in row) for row in blk.vectors]


def characteristic_norms(lat, bound, budget=DEFAULT_BUDGET):
    """(vectors, norms) arrays for every characteristic vector in the box."""
    n = lat.n
    if n == 0:
        return np.zeros((1, 0), np.int64), np.zeros(1, np.int64)
    size = 1
    for w in lat.w2:
        size *= len(_values(bound, w))
    if n * size > budget:
        raise BudgetExceededError(f"{n * size} steps exceeds budget {budget}")
    blk = _enumerate_block(lat.gram, lat.w2, bound)
    return blk.vectors, blk.norms


# -- presets ------------------------------------------------------------------

E8 = (
    (2, -1, 0, 0, 0, 0, 0, 0),
    (-1, 2, -1, 0, 0, 0, 0, 0),
    (0, -1, 2, -1, 0, 0, 0, 0),
    (0, 0, -1, 2, -1, 0, 0, 0),
    (0, 0, 0, -1, 2, -1, 0, -1),
    (0, 0, 0, 0, -1, 2, -1, 0),
    (0, 0, 0, 0, 0, -1, 2, 0),
    (0, 0, 0, 0, -1, 0, 0, 2),
)
HYPERBOLIC = ((0, 1), (1, 0))


def direct_sum(*forms):
    n = sum(len(f) for f in forms)
    out = [[0] * n for _ in range(n)]
    off = 0
    for f in forms:
        k = len(f)
        for i in range(k):
            for j in range(k):
                out[off + i][off + j] = f[i][j]
        off += k
    return tuple(tuple(r) for r in out)


def negate(form):
    return tuple(tuple(-v for v in row) for row in form)


PRESETS = {
    "s4": IntersectionLattice((), 0, (), "s4"),
    "cp2": IntersectionLattice(((1,),), 0, (1,), "cp2"),
    "cp2bar": IntersectionLattice(((-1,),), 0, (1,), "cp2bar"),
    "s2xs2": IntersectionLattice(HYPERBOLIC, 0, (0, 0), "s2xs2"),
    "k3": IntersectionLattice(
        direct_sum(negate(E8), negate(E8), HYPERBOLIC, HYPERBOLIC, HYPERBOLIC), 0, (0,) * 22, "k3"
    ),
    "cp2#cp2bar": IntersectionLattice(((1, 0), (0, -1)), 0, (1, 1), "cp2#cp2bar"),
}


def resolve_lattice(source):
    if source in PRESETS:
        return PRESETS[source]
    with open(source, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as err:
            raise LatticeError(f"{source}: invalid JSON: {err}") from None
    return IntersectionLattice.from_json(data, name=source)
