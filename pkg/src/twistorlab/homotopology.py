"""Finitely generated abelian groups and the cohomology of 2-sphere bundles.

All arithmetic uses Python integers, so nothing overflows.  Groups are
compared by invariant-factor normal form, never by presentation.

Cohomology of a closed oriented 4-manifold M is stored as the five groups
H^0..H^4(M, Z).  Homology is read off by Poincare duality, H_k = H^{4-k};
in particular H_2(M) = H^2(M).  For the 6-manifold Z, H_2(Z) = H^4(Z).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

from .errors import HomologyError


# -- Smith normal form ---------------------------------------------------

def _identity(n):
    return [[int(i == j) for j in range(n)] for i in range(n)]


def smith_normal_form(m):
    """Return (D, U, V) with U m V = D, D diagonal with d1 | d2 | ..., det U, det V = +-1.

    ``m`` is any 2-D integer array-like; the outputs are lists of lists of
    Python ints.  Diagonal entries are non-negative.
    """
    A = [[int(v) for v in row] for row in m]
    rows = len(A)
    cols = len(A[0]) if rows else 0
    U = _identity(rows)
    V = _identity(cols)

    def swap_rows(M, i, j):
        M[i], M[j] = M[j], M[i]

    def swap_cols(M, i, j):
        for row in M:
            row[i], row[j] = row[j], row[i]

    def add_row(M, src, dst, k):  # row_dst += k * row_src
        M[dst] = [a + k * b for a, b in zip(M[dst], M[src])]

    def add_col(M, src, dst, k):  # col_dst += k * col_src
        for row in M:
            row[dst] += k * row[src]

    for t in range(min(rows, cols)):
        while True:
            # pivot: smallest non-zero |entry| in the trailing block
            best = None
            for i in range(t, rows):
                for j in range(t, cols):
                    if A[i][j] and (best is None or abs(A[i][j]) < abs(A[best[0]][best[1]])):
                        best = (i, j)
            if best is None:
                return _finish(A, U, V, rows, cols)
            i, j = best
            if i != t:
                swap_rows(A, i, t)
                swap_rows(U, i, t)
            if j != t:
                swap_cols(A, j, t)
                swap_cols(V, j, t)
            p = A[t][t]
            dirty = False
            for i in range(t + 1, rows):
                q = A[i][t] // p
                if q:
                    add_row(A, t, i, -q)
                    add_row(U, t, i, -q)
                if A[i][t]:
                    dirty = True
            for j in range(t + 1, cols):
                q = A[t][j] // p
                if q:
                    add_col(A, t, j, -q)
                    add_col(V, t, j, -q)
                if A[t][j]:
                    dirty = True
            if dirty:
                continue
            # divisibility: fold any entry not divisible by the pivot into row t
            bad = next(
                (i for i in range(t + 1, rows) for j in range(t + 1, cols) if A[i][j] % p),
                None,
            )
            if bad is None:
                break
            add_row(A, bad, t, 1)
            add_row(U, bad, t, 1)
    return _finish(A, U, V, rows, cols)


def _finish(A, U, V, rows, cols):
    for t in range(min(rows, cols)):
        if A[t][t] < 0:
            A[t] = [-a for a in A[t]]
            U[t] = [-a for a in U[t]]
    return A, U, V


def invariant_factors(m):
    D, _, _ = smith_normal_form(m)
    return [D[i][i] for i in range(min(len(D), len(D[0]) if D else 0)) if D[i][i]]


# -- abelian groups -------------------------------------------------------

@dataclass(frozen=True)
class AbelianGroup:
    """Z^rank + Z/d1 + ... + Z/dk with every d >= 2 and d1 | d2 | ..."""

    rank: int = 0
    torsion: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "torsion", tuple(int(d) for d in self.torsion))
        if self.rank < 0:
            raise HomologyError("rank must be non-negative")
        for d in self.torsion:
            if d < 2:
                raise HomologyError(f"torsion coefficient {d} must be >= 2")
        for a, b in zip(self.torsion, self.torsion[1:]):
            if b % a:
                raise HomologyError(f"torsion {list(self.torsion)} is not a divisibility chain")

    @classmethod
    def from_cyclic(cls, rank=0, orders=()):
        """Normalise an arbitrary list of cyclic orders (0 means Z, 1 is dropped)."""
        orders = [abs(int(o)) for o in orders]
        rank += sum(1 for o in orders if o == 0)
        finite = [o for o in orders if o > 1]
        if not finite:
            return cls(rank, ())
        n = len(finite)
        diag = [[finite[i] if i == j else 0 for j in range(n)] for i in range(n)]
        return cls(rank, tuple(d for d in invariant_factors(diag) if d > 1))

    @classmethod
    def from_presentation(cls, relations, generators):
        """Cokernel of the relation matrix (rows are relations) on ``generators`` generators."""
        if not relations:
            return cls(generators, ())
        facs = invariant_factors(relations)
        return cls(generators - len(facs), tuple(d for d in facs if d > 1))

    @classmethod
    def from_json(cls, data):
        try:
            return cls.from_cyclic(int(data["rank"]), [int(d) for d in data.get("torsion", [])])
        except (KeyError, TypeError, ValueError) as err:
            raise HomologyError(f"bad group record {data!r}: {err}") from None

    def to_json(self):
        return {"rank": self.rank, "torsion": list(self.torsion)}

    @property
    def torsion_order(self):
        return math.prod(self.torsion)

    @property
    def torsion_part(self):
        return AbelianGroup(0, self.torsion)

    def is_trivial(self):
        return self.rank == 0 and not self.torsion

    def __add__(self, other):
        return AbelianGroup.from_cyclic(self.rank + other.rank, self.torsion + other.torsion)

    def quotient_by_element(self, coords):
        """Quotient of the torsion part by the element with coordinates ``coords``."""
        n = len(self.torsion)
        if len(coords) != n:
            raise HomologyError("element coordinates do not match the torsion factors")
        rels = [[self.torsion[i] if i == j else 0 for j in range(n)] for i in range(n)]
        rels.append([int(c) for c in coords])
        q = AbelianGroup.from_presentation(rels, n)
        return AbelianGroup.from_cyclic(self.rank, q.torsion)

    def __str__(self):
        parts = (["Z"] if self.rank == 1 else [f"Z^{self.rank}"] if self.rank else [])
        parts += [f"Z{d}" for d in self.torsion]
        return " + ".join(parts) if parts else "0"


Z = AbelianGroup(1)
TRIVIAL = AbelianGroup(0)


# -- manifold and sphere-bundle cohomology ---------------------------------

@dataclass(frozen=True)
class ManifoldHomology:
    """Integral cohomology of a closed connected oriented 4-manifold plus Euler data.

    ``two_torsion_witness`` (needed when the Euler class is non-zero) is the
    index of an even invariant factor ``d`` of the H^3 torsion; the Euler
    class is the element ``d/2`` times that generator.
    """

    H: tuple
    euler_class_zero: bool = True
    two_torsion_witness: int | None = None
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "H", tuple(self.H))

    def validate(self):
        """Raise :class:`HomologyError` unless the internal consistency checks hold."""
        H = self.H
        if len(H) != 5:
            raise HomologyError("need exactly five groups H^0..H^4")
        if H[0] != Z or H[4] != Z:
            raise HomologyError("H^0 and H^4 must be Z for a connected closed oriented 4-manifold")
        if H[1].torsion:
            raise HomologyError("H^1(M, Z) must be torsion-free")
        if H[1].rank != H[3].rank:
            raise HomologyError("Poincare duality requires rank H^1 = rank H^3")
        if H[3].torsion != H[2].torsion:
            raise HomologyError(
                "torsion of H^3 must match torsion of H_2 = H^2 (universal coefficients)"
            )
        if not self.euler_class_zero:
            w = self.two_torsion_witness
            t = H[3].torsion
            if w is None or not 0 <= w < len(t) or t[w] % 2:
                raise HomologyError(
                    "a non-zero Euler class is 2-torsion: the witness must index an "
                    "even invariant factor of H^3"
                )
        return self

    @property
    def h2(self):
        """H_2(M, Z), equal to H^2 by Poincare duality."""
        return self.H[2]

    def euler_coords(self):
        t = self.H[3].torsion
        return [t[i] // 2 if i == self.two_torsion_witness else 0 for i in range(len(t))]

    @classmethod
    def from_json(cls, data):
        try:
            groups = [AbelianGroup.from_json(g) for g in data["H"]]
            return cls(
                tuple(groups),
                bool(data.get("euler_class_zero", True)),
                data.get("two_torsion_witness"),
                data.get("name", ""),
            )
        except (KeyError, TypeError) as err:
            raise HomologyError(f"bad homology record: {err}") from None

    def to_json(self):
        return {
            "name": self.name,
            "H": [g.to_json() for g in self.H],
            "euler_class_zero": self.euler_class_zero,
            "two_torsion_witness": self.two_torsion_witness,
        }


@dataclass(frozen=True)
class SphereBundleHomology:
    HZ: tuple  # H^0..H^6 of the total space
    fiber_pairing_generator_exists: bool

    @property
    def h2(self):
        """H_2(Z, Z) = H^4(Z) by Poincare duality in the 6-manifold."""
        return self.HZ[4]

    def to_json(self):
        return {
            "HZ": [g.to_json() for g in self.HZ],
            "fiber_pairing_generator_exists": self.fiber_pairing_generator_exists,
        }


def manifold(name, b1=0, b2=0, torsion=()):
    """Cohomology of a closed oriented 4-manifold from b1, b2 and the torsion of H_2."""
    t = AbelianGroup.from_cyclic(0, torsion).torsion
    return ManifoldHomology(
        (Z, AbelianGroup(b1), AbelianGroup(b2, t), AbelianGroup(b1, t), Z), True, None, name
    )


PRESETS = {
    "s4": manifold("s4"),
    "cp2": manifold("cp2", b2=1),
    "s2xs2": manifold("s2xs2", b2=2),
    "k3": manifold("k3", b2=22),
    "enriques": manifold("enriques", b2=10, torsion=(2,)),
    "t4": manifold("t4", b1=4, b2=6),
}


def _H(M, k):
    return M.H[k] if 0 <= k <= 4 else TRIVIAL


def gysin_split(M):
    """H^k(Z) = H^k(M) + H^{k-2}(M) for the sphere bundle of a rank-3 bundle with e = 0."""
    M.validate()
    if not M.euler_class_zero:
        raise HomologyError("gysin_split needs a vanishing Euler class")
    HZ = tuple(_H(M, k) + _H(M, k - 2) for k in range(7))
    return SphereBundleHomology(HZ, True)


def gysin_sequence(M):
    """Cohomology of the sphere bundle for either value of the Euler class.

    For e = 0 this is :func:`gysin_split`.  For e != 0 the Gysin sequence
    gives H^2(Z) = H^2(M) + Z with fibre pairing image 2Z, H^3(Z) =
    H^3(M)/<e> + H^1(M), H^5(Z) = H^3(M), and H^4(Z) is an extension of
    H^2(M) by Z whose torsion is T^3(Z) = T^3(M)/<e> (duality plus universal
    coefficients).
    """
    M.validate()
    if M.euler_class_zero:
        return gysin_split(M)
    H = M.H
    t3 = torsion_T3(M)
    h3_quot = AbelianGroup(H[3].rank, t3.torsion)
    HZ = (
        H[0],
        H[1],
        H[2] + Z,
        h3_quot + H[1],
        AbelianGroup(H[2].rank + 1, t3.torsion),
        H[3],
        H[4],
    )
    return SphereBundleHomology(HZ, False)


def torsion_T3(M):
    """Torsion of H^3(Z): T^3(M) if e = 0, else T^3(M) with the witnessed Z2 divided out."""
    t = M.H[3].torsion_part
    if M.euler_class_zero:
        return t
    w = M.two_torsion_witness
    if w is None or not 0 <= w < len(t.torsion) or t.torsion[w] % 2:
        raise HomologyError(
            "Euler class is non-zero but T^3(M) has no witnessed even invariant factor"
        )
    return t.quotient_by_element(M.euler_coords())


@dataclass(frozen=True)
class Prop1Result:
    euler_vanishes: bool
    fiber_class_dual: bool
    h2_splits: bool
    torsion_orders_equal: bool

    def values(self):
        return (self.euler_vanishes, self.fiber_class_dual, self.h2_splits, self.torsion_orders_equal)

    def all_equal(self):
        return len(set(self.values())) == 1

    def to_json(self):
        return {
            "i_euler_class_zero": self.euler_vanishes,
            "ii_fiber_degree_one_class": self.fiber_class_dual,
            "iii_h2_splits": self.h2_splits,
            "iv_torsion_orders_equal": self.torsion_orders_equal,
        }


def prop1_evaluate(M, Zb):
    """Evaluate the four equivalent conditions on (M, Z) data exactly as stated."""
    return Prop1Result(
        bool(M.euler_class_zero),
        bool(Zb.fiber_pairing_generator_exists),
        Zb.h2 == M.h2 + Z,
        Zb.h2.torsion_order == M.h2.torsion_order,
    )


def spinc_structure_count(M):
    """The group H^2(M, Z) acting freely and transitively on spin^c structures."""
    M.validate()
    return M.H[2]


def random_manifold_homology(rng, max_rank=4, max_factors=3):
    """Random consistent instance; the Euler class is non-zero only when T^3 has an even factor."""
    b1 = int(rng.integers(0, max_rank + 1))
    b2 = int(rng.integers(0, max_rank + 1))
    n = int(rng.integers(0, max_factors + 1))
    orders = [int(rng.choice([2, 3, 4, 6, 8, 12])) for _ in range(n)]
    t = AbelianGroup.from_cyclic(0, orders).torsion
    M = ManifoldHomology(
        (Z, AbelianGroup(b1), AbelianGroup(b2, t), AbelianGroup(b1, t), Z), True, None, "random"
    )
    even = [i for i, d in enumerate(t) if d % 2 == 0]
    if even and rng.random() < 0.5:
        M = ManifoldHomology(M.H, False, int(rng.choice(even)), "random")
    return M


def load_homology(path):
    with open(path, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as err:
            raise HomologyError(f"{path}: invalid JSON: {err}") from None
    return ManifoldHomology.from_json(data)
