"""Random instance generators and brute-force oracles shared by the test modules."""
from __future__ import annotations

import itertools
from fractions import Fraction

import numpy as np

from qidm.bimeasure import Bimeasure
from qidm.lattice import LatticePmf, QuasiLevyMeasure
from qidm.measure import FiniteSignedMeasure, GroundSpace
from qidm.random_measure import RandomMeasureModel

JUMPS = (Fraction(-3), Fraction(-1), Fraction(-1, 2), Fraction(1, 3), Fraction(1), Fraction(2))


def rand_fraction(rng, lo=-9, hi=9, max_den=4):
    den = int(rng.integers(1, max_den + 1))
    num = int(rng.integers(lo * den, hi * den + 1))
    return Fraction(num, den)


def rand_space(rng, n, prefix="t"):
    atoms = [f"{prefix}{i}" for i in range(n)]
    cuts = sorted(set(int(c) for c in rng.integers(1, n + 1, size=int(rng.integers(0, 3)))) | {n})
    return GroundSpace(atoms, [atoms[:c] for c in cuts])


def rand_bimeasure(rng, nt, nx, zero_prob=0.25):
    space = rand_space(rng, nt)
    xs = [f"x{j}" for j in range(nx)]
    matrix = [
        [Fraction(0) if rng.random() < zero_prob else rand_fraction(rng) for _ in xs] for _ in space.atoms
    ]
    return Bimeasure.from_matrix(space, xs, matrix)


def rand_levy(rng, signed=True, k=None):
    k = int(rng.integers(1, 4)) if k is None else k
    idx = rng.choice(len(JUMPS), size=k, replace=False)
    atoms = []
    for i in idx:
        m = rand_fraction(rng, 0, 3, 3)
        if m == 0:
            m = Fraction(1, 2)
        if signed and rng.random() < 0.4:
            m = -m
        atoms.append((JUMPS[int(i)], m))
    return QuasiLevyMeasure(tuple(atoms))


def rand_model(rng, n=None, backend="rational", signed=True, gauss=True, drift=True):
    n = int(rng.integers(1, 5)) if n is None else n
    space = rand_space(rng, n)
    nu0 = {t: rand_fraction(rng, -3, 3) for t in space.atoms if drift and rng.random() < 0.7}
    nu1 = {t: rand_fraction(rng, 0, 3) for t in space.atoms if gauss and rng.random() < 0.5}
    F = {t: rand_levy(rng, signed) for t in space.atoms if rng.random() < 0.8}
    if backend == "float":
        nu0 = {t: float(v) for t, v in nu0.items()}
        nu1 = {t: float(v) for t, v in nu1.items()}
        F = {t: QuasiLevyMeasure(tuple((float(x), float(m)) for x, m in L.atoms)) for t, L in F.items()}
    return RandomMeasureModel(
        space, FiniteSignedMeasure(space, nu0), FiniteSignedMeasure(space, nu1), F
    )


def rand_qid_pmf(rng, max_span=8):
    """Lattice pmf with a point mass above one half somewhere in its support."""
    span = int(rng.integers(0, max_span + 1))
    lo = int(rng.integers(-4, 5))
    support = np.arange(lo, lo + span + 1)
    heavy = int(rng.integers(len(support)))
    big = 0.5 + 0.49 * rng.random() + 1e-3
    big = min(big, 1.0)
    rest = rng.random(len(support))
    rest[heavy] = 0.0
    rest = rest / rest.sum() * (1 - big) if rest.sum() > 0 else rest
    probs = rest
    probs[heavy] = 1.0 - rest.sum()
    return LatticePmf(tuple(int(k) for k in support), tuple(float(p) for p in probs))


def set_partitions(items):
    items = list(items)
    if not items:
        yield []
        return
    head, rest = items[0], items[1:]
    for part in set_partitions(rest):
        for i in range(len(part)):
            yield part[:i] + [[head] + part[i]] + part[i + 1 :]
        yield [[head]] + part


def nonempty_subsets(seq):
    seq = list(seq)
    return [c for r in range(1, len(seq) + 1) for c in itertools.combinations(seq, r)]


def naive_rectangle_variation(bm, A):
    """Max of sum |Q0(R x C)| over every family of pairwise disjoint rectangles, by full enumeration."""
    rects = [(R, C) for R in nonempty_subsets(sorted(A, key=bm.t_space.sort_key)) for C in nonempty_subsets(bm.x_atoms)]
    cells = [frozenset(itertools.product(R, C)) for R, C in rects]
    values = [abs(bm(R, C)) for R, C in rects]
    best = Fraction(0)
    for r in range(1, len(rects) + 1):
        for combo in itertools.combinations(range(len(rects)), r):
            used = set()
            ok = True
            for i in combo:
                if used & cells[i]:
                    ok = False
                    break
                used |= cells[i]
            if ok:
                best = max(best, sum((values[i] for i in combo), Fraction(0)))
    return best
