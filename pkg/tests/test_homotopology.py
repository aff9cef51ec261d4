import itertools
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from twistorlab import homotopology as ho
from twistorlab.errors import HomologyError
from twistorlab.homotopology import TRIVIAL, Z, AbelianGroup


def _det(m):
    n = len(m)
    if n == 0:
        return 1
    return sum(
        (-1) ** j * m[0][j] * _det([row[:j] + row[j + 1:] for row in m[1:]]) for j in range(n)
    )


def _determinantal_factors(m):
    """Invariant factors from gcds of k x k minors (the textbook oracle)."""
    rows, cols = len(m), len(m[0]) if m else 0
    divisors = [1]
    for k in range(1, min(rows, cols) + 1):
        g = 0
        for r in itertools.combinations(range(rows), k):
            for c in itertools.combinations(range(cols), k):
                g = math.gcd(g, _det([[m[i][j] for j in c] for i in r]))
        if g == 0:
            break
        divisors.append(g)
    return [divisors[i] // divisors[i - 1] for i in range(1, len(divisors))]


def _matmul(a, b):
    return [[sum(a[i][k] * b[k][j] for k in range(len(b))) for j in range(len(b[0]))]
            for i in range(len(a))]


matrices = st.integers(1, 4).flatmap(
    lambda r: st.integers(1, 4).flatmap(
        lambda c: st.lists(st.lists(st.integers(-12, 12), min_size=c, max_size=c),
                           min_size=r, max_size=r)
    )
)


@settings(max_examples=150, deadline=None)
@given(matrices)
def test_smith_normal_form_against_minors(m):
    D, U, V = ho.smith_normal_form(m)
    assert _matmul(_matmul(U, m), V) == D
    assert abs(_det(U)) == 1 and abs(_det(V)) == 1
    diag = [D[i][i] for i in range(min(len(D), len(D[0])))]
    nonzero = [d for d in diag if d]
    assert nonzero == _determinantal_factors(m)
    assert all(b % a == 0 for a, b in zip(nonzero, nonzero[1:]))
    assert all(d > 0 for d in nonzero)


def test_smith_frozen_example():
    D, _, _ = ho.smith_normal_form([[2, 4, 4], [-6, 6, 12], [10, -4, -16]])
    assert [D[i][i] for i in range(3)] == [2, 6, 12]


def test_large_entries_do_not_overflow():
    big = 10**30
    assert ho.invariant_factors([[big, 0], [0, big * 3]]) == [big, 3 * big]


def test_group_normal_form():
    assert AbelianGroup.from_cyclic(0, [2, 3]) == AbelianGroup(0, (6,))
    assert AbelianGroup.from_cyclic(1, [4, 6, 0, 1]) == AbelianGroup(2, (2, 12))
    assert str(AbelianGroup(2, (2, 12))) == "Z^2 + Z2 + Z12"
    assert str(TRIVIAL) == "0"
    with pytest.raises(HomologyError):
        AbelianGroup(0, (4, 6))


def test_presentation():
    # <a, b | 2a, 2b, a + b> = Z2
    assert AbelianGroup.from_presentation([[2, 0], [0, 2], [1, 1]], 2) == AbelianGroup(0, (2,))
    assert AbelianGroup.from_presentation([], 3) == AbelianGroup(3)


def test_quotient_by_element():
    g = AbelianGroup(0, (2, 4))
    assert g.quotient_by_element([0, 2]) == AbelianGroup(0, (2, 2))
    assert g.quotient_by_element([1, 0]) == AbelianGroup(0, (4,))


def test_json_round_trip():
    M = ho.PRESETS["enriques"]
    again = ho.ManifoldHomology.from_json(json.loads(json.dumps(M.to_json())))
    assert again == M


def test_validation_errors():
    bad_h1 = ho.ManifoldHomology((Z, AbelianGroup(0, (2,)), TRIVIAL, TRIVIAL, Z))
    with pytest.raises(HomologyError, match="torsion-free"):
        bad_h1.validate()
    bad_rank = ho.ManifoldHomology((Z, Z, TRIVIAL, TRIVIAL, Z))
    with pytest.raises(HomologyError, match="rank"):
        bad_rank.validate()
    bad_torsion = ho.ManifoldHomology((Z, TRIVIAL, AbelianGroup(0, (3,)), TRIVIAL, Z))
    with pytest.raises(HomologyError, match="torsion"):
        bad_torsion.validate()
    odd = ho.ManifoldHomology((Z, TRIVIAL, AbelianGroup(0, (3,)), AbelianGroup(0, (3,)), Z), False, 0)
    with pytest.raises(HomologyError, match="even"):
        odd.validate()


def test_s4_gives_cp3_pattern():
    Zb = ho.gysin_split(ho.PRESETS["s4"])
    assert Zb.HZ == (Z, TRIVIAL, Z, TRIVIAL, Z, TRIVIAL, Z)
    assert ho.prop1_evaluate(ho.PRESETS["s4"], Zb).values() == (True,) * 4


def test_k3_twistor_space():
    Zb = ho.gysin_split(ho.PRESETS["k3"])
    assert Zb.HZ[2] == AbelianGroup(23)
    assert Zb.HZ[4] == AbelianGroup(23)
    assert Zb.HZ[3] == TRIVIAL


def test_enriques_split():
    Zb = ho.gysin_split(ho.PRESETS["enriques"])
    assert Zb.HZ[2] == AbelianGroup(11, (2,))
    assert Zb.HZ[3] == AbelianGroup(0, (2,))
    assert Zb.HZ[5] == AbelianGroup(0, (2,))


def test_nonzero_euler_class_halves_torsion():
    M = ho.ManifoldHomology(
        (Z, TRIVIAL, AbelianGroup(1, (2, 4)), AbelianGroup(0, (2, 4)), Z), False, 1, "x"
    )
    Zb = ho.gysin_sequence(M)
    assert ho.torsion_T3(M) == AbelianGroup(0, (2, 2))
    assert 2 * Zb.HZ[3].torsion_order == M.H[3].torsion_order
    assert Zb.HZ[2] == AbelianGroup(2, (2, 4))
    assert Zb.HZ[5] == M.H[3]
    assert ho.prop1_evaluate(M, Zb).values() == (False,) * 4


def test_single_z2_quotient_is_trivial():
    M = ho.ManifoldHomology(
        (Z, TRIVIAL, AbelianGroup(1, (2,)), AbelianGroup(0, (2,)), Z), False, 0
    )
    assert ho.torsion_T3(M).is_trivial()


def test_gysin_split_refuses_nonzero_euler():
    M = ho.ManifoldHomology(
        (Z, TRIVIAL, AbelianGroup(0, (2,)), AbelianGroup(0, (2,)), Z), False, 0
    )
    with pytest.raises(HomologyError):
        ho.gysin_split(M)


def test_spinc_torsor():
    assert ho.spinc_structure_count(ho.PRESETS["enriques"]) == AbelianGroup(10, (2,))


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_four_conditions_agree(seed):
    M = ho.random_manifold_homology(np.random.default_rng(seed))
    M.validate()
    Zb = ho.gysin_sequence(M)
    assert ho.prop1_evaluate(M, Zb).all_equal()
    # Poincare duality on the 6-manifold: free ranks of H^k and H^{6-k} match
    for k in range(7):
        assert Zb.HZ[k].rank == Zb.HZ[6 - k].rank
    # torsion of H^{k} matches torsion of H^{7-k} (duality plus universal coefficients)
    for k in range(1, 7):
        assert Zb.HZ[k].torsion == Zb.HZ[7 - k].torsion


def test_euler_characteristic_of_sphere_bundle():
    for M in ho.PRESETS.values():
        Zb = ho.gysin_split(M)
        chi_m = sum((-1) ** k * M.H[k].rank for k in range(5))
        chi_z = sum((-1) ** k * Zb.HZ[k].rank for k in range(7))
        assert chi_z == 2 * chi_m


def test_load_homology(tmp_path):
    p = tmp_path / "m.json"
    p.write_text(json.dumps(ho.PRESETS["t4"].to_json()))
    assert ho.load_homology(p) == ho.PRESETS["t4"]
    p.write_text("{not json")
    with pytest.raises(HomologyError):
        ho.load_homology(p)
