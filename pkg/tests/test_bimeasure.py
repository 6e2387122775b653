from fractions import Fraction

import numpy as np
import pytest

from helpers import naive_rectangle_variation, nonempty_subsets, rand_bimeasure
from qidm.bimeasure import (
    Bimeasure,
    KernelTable,
    bruteforce_witness,
    disintegrate,
    kernel_uniqueness_check,
    necessity_witness,
    variation,
    variation_bruteforce,
    variation_measure,
)
from qidm.errors import InstanceTooLarge, NotAKernelError
from qidm.measure import GroundSpace

SPACE2 = GroundSpace(["t1", "t2"], [["t1"], ["t1", "t2"]])


def bm_of(matrix, space=SPACE2, xs=("x1", "x2")):
    return Bimeasure.from_matrix(space, list(xs), [[Fraction(v) for v in row] for row in matrix])


def test_worked_example():
    bm = bm_of([[1, -1], [2, 0]])
    A = SPACE2.level(2)
    assert variation(bm, A) == 4
    assert variation_bruteforce(bm, A) == 4
    res = disintegrate(bm)
    assert res.nu.weight("t1") == 2 and res.nu.weight("t2") == 2
    assert res.kernel.row("t1") == {"x1": Fraction(1, 2), "x2": Fraction(-1, 2)}
    assert res.kernel.row("t2") == {"x1": 1}
    assert variation(bm_of([[1, 1], [1, 1]]), A) == 4
    assert variation(bm, SPACE2.level(1)) == 2


def test_dp_oracle_matches_naive_enumeration_on_2x2():
    rng = np.random.default_rng(11)
    for _ in range(40):
        bm = rand_bimeasure(rng, 2, 2)
        A = bm.t_space.level(len(bm.t_space.levels))
        assert variation_bruteforce(bm, A) == naive_rectangle_variation(bm, A)


def test_dp_oracle_matches_naive_enumeration_on_1x3():
    rng = np.random.default_rng(12)
    for _ in range(40):
        bm = rand_bimeasure(rng, 1, 3)
        A = bm.t_space.level(1)
        assert variation_bruteforce(bm, A) == naive_rectangle_variation(bm, A)


def test_witness_is_disjoint_and_attains_value():
    rng = np.random.default_rng(3)
    for _ in range(30):
        bm = rand_bimeasure(rng, 3, 3)
        A = bm.t_space.level(len(bm.t_space.levels))
        value, family = bruteforce_witness(bm, A)
        cells = [(t, x) for R, C in family for t in R for x in C]
        assert len(cells) == len(set(cells))
        assert sum(abs(bm(R, C)) for R, C in family) == value == variation(bm, A)


def test_bruteforce_refuses_large_instances():
    rng = np.random.default_rng(0)
    bm = rand_bimeasure(rng, 4, 4)
    with pytest.raises(InstanceTooLarge):
        variation_bruteforce(bm, bm.t_space.level(len(bm.t_space.levels)))


def test_variation_measure_levels_are_monotone():
    rng = np.random.default_rng(5)
    for _ in range(20):
        bm = rand_bimeasure(rng, 5, 4)
        totals = variation_measure(bm).per_level_totals
        assert all(a <= b for a, b in zip(totals, totals[1:]))


def test_reconstruction_and_row_bounds():
    rng = np.random.default_rng(7)
    for _ in range(30):
        bm = rand_bimeasure(rng, 4, 3)
        res = disintegrate(bm)
        for A in nonempty_subsets(bm.t_space.atoms):
            for B in nonempty_subsets(bm.x_atoms):
                assert res.reconstruct(A, B) == bm(A, B)
        assert res.kernel.is_sub_markovian()
        for t in res.nu.support:
            assert res.kernel.row_mass(t) == 1


def test_zero_row_is_nu_null():
    bm = bm_of([[0, 0], [3, -1]])
    res = disintegrate(bm)
    assert res.nu.weight("t1") == 0
    assert res.q("t1", ["x1", "x2"]) == 0


def test_uniqueness_accepts_null_perturbation_and_rejects_positive():
    bm = bm_of([[0, 0], [3, -1]])
    canon = disintegrate(bm).kernel.signed()
    alt = dict(canon)
    alt[("t1", "x1")] = Fraction(1, 3)
    rep = kernel_uniqueness_check(bm, KernelTable.from_signed(alt, rows=["t1", "t2"]))
    assert rep.passed and rep.difference_atoms == ("t1",) and rep.nu_mass == 0
    bad = dict(canon)
    bad[("t2", "x1")] = Fraction(1, 2)
    with pytest.raises(NotAKernelError):
        kernel_uniqueness_check(bm, KernelTable.from_signed(bad, rows=["t1", "t2"]))


def test_necessity_family_grows_without_bound():
    # Q_n has n alternating columns of unit mass: every finite stage has condition (c),
    # but no single bound holds across the family.
    fam = []
    for n in range(1, 7):
        xs = [f"x{j}" for j in range(n)]
        fam.append(Bimeasure.from_matrix(GroundSpace(["t"]), xs, [[Fraction((-1) ** j) for j in range(n)]]))
    rep = necessity_witness(fam)
    assert rep.variations == tuple(range(1, 7))
    assert rep.strictly_increasing and not rep.condition_c_uniform
    assert rep.first_exceeding(4) == 4


def test_float_backend_agrees_with_rational():
    rng = np.random.default_rng(9)
    for _ in range(10):
        bm = rand_bimeasure(rng, 3, 3)
        fl = Bimeasure.from_matrix(bm.t_space, bm.x_atoms, [[float(v) for v in row] for row in bm.matrix()])
        A = bm.t_space.level(len(bm.t_space.levels))
        assert abs(float(variation(bm, A)) - variation(fl, A)) < 1e-9
        assert abs(float(variation_bruteforce(bm, A)) - variation_bruteforce(fl, A)) < 1e-9
