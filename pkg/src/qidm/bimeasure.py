"""Signed bimeasures on (delta-ring) x (finite state list) and their kernels.

A bimeasure is given by its atom matrix, ``Q0(A, B) = sum_{t in A, x in B} m[t, x]``.
The variation ``nu(A)`` (supremum of ``sum |Q0(A_i, B_i)|`` over finite
families of disjoint rectangles inside ``A x X``) is attained by the singleton
rectangles, so it reduces to the atomwise absolute sum.  ``variation_bruteforce``
computes the same supremum by exhaustive search and serves as the oracle.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import lru_cache
from types import MappingProxyType
from typing import Iterable, Mapping, Sequence

from .errors import InstanceTooLarge, NotAKernelError, ValidationError
from .measure import FiniteSignedMeasure, GroundSpace, RingMember, _atoms
from .numeric import Scalar, close, is_exact, neg, pos


@dataclass(frozen=True)
class Bimeasure:
    t_space: GroundSpace
    x_atoms: tuple
    entries: Mapping

    def __post_init__(self):
        x_atoms = tuple(self.x_atoms)
        if len(set(x_atoms)) != len(x_atoms):
            raise ValidationError("duplicate x atoms")
        ts, xs = set(self.t_space.atoms), set(x_atoms)
        clean = {}
        for (t, x), w in dict(self.entries).items():
            if t not in ts or x not in xs:
                raise ValidationError(f"entry ({t!r}, {x!r}) is off the grid")
            if w != 0:
                clean[(t, x)] = w
        object.__setattr__(self, "x_atoms", x_atoms)
        object.__setattr__(self, "entries", MappingProxyType(clean))

    @classmethod
    def from_matrix(cls, t_space: GroundSpace, x_atoms: Sequence, matrix):
        """Rows follow ``t_space.atoms``, columns follow ``x_atoms``."""
        matrix = [list(row) for row in matrix]
        if len(matrix) != len(t_space.atoms) or any(len(r) != len(x_atoms) for r in matrix):
            raise ValidationError("matrix shape does not match the atom lists")
        entries = {
            (t, x): w
            for t, row in zip(t_space.atoms, matrix)
            for x, w in zip(x_atoms, row)
        }
        return cls(t_space, tuple(x_atoms), entries)

    def entry(self, t, x) -> Scalar:
        return self.entries.get((t, x), 0)

    def __call__(self, A, B=None) -> Scalar:
        """``Q0(A, B)``; ``B=None`` means all of X."""
        A = _atoms(A)
        B = set(self.x_atoms) if B is None else set(B)
        return sum((w for (t, x), w in self.entries.items() if t in A and x in B), 0)

    def matrix(self):
        return [[self.entry(t, x) for x in self.x_atoms] for t in self.t_space.atoms]


@dataclass(frozen=True)
class VariationMeasure:
    nu: FiniteSignedMeasure
    per_level_totals: tuple


@dataclass(frozen=True)
class KernelTable:
    """Sub-Markovian kernel pair ``q+`` / ``q-`` on the rows listed in ``rows``.

    Evaluation on a row outside ``rows`` gives 0 (the nu-null convention).
    """

    q_plus: Mapping
    q_minus: Mapping
    rows: frozenset = field(default=frozenset())

    def __post_init__(self):
        plus = {k: v for k, v in dict(self.q_plus).items() if v != 0}
        minus = {k: v for k, v in dict(self.q_minus).items() if v != 0}
        if any(v < 0 for v in plus.values()) or any(v < 0 for v in minus.values()):
            raise ValidationError("kernel parts must be nonnegative")
        rows = frozenset(self.rows) | {t for t, _ in plus} | {t for t, _ in minus}
        object.__setattr__(self, "q_plus", MappingProxyType(plus))
        object.__setattr__(self, "q_minus", MappingProxyType(minus))
        object.__setattr__(self, "rows", rows)

    @classmethod
    def from_signed(cls, q: Mapping, rows: Iterable = ()):
        plus = {k: pos(v) for k, v in q.items() if v > 0}
        minus = {k: neg(v) for k, v in q.items() if v < 0}
        return cls(plus, minus, frozenset(rows))

    def q(self, t, B) -> Scalar:
        return sum((self.q_plus.get((t, x), 0) - self.q_minus.get((t, x), 0) for x in B), 0)

    def signed(self) -> dict:
        out = dict(self.q_plus)
        for k, v in self.q_minus.items():
            out[k] = out.get(k, 0) - v
        return out

    def row(self, t) -> dict:
        return {x: v for (s, x), v in self.signed().items() if s == t}

    def row_mass(self, t) -> Scalar:
        """Total mass of ``q+(t, .) + q-(t, .)``."""
        return sum((v for (s, _), v in self.q_plus.items() if s == t), 0) + sum(
            (v for (s, _), v in self.q_minus.items() if s == t), 0
        )

    def is_sub_markovian(self, atol: float = 1e-9) -> bool:
        for t in self.rows:
            m = self.row_mass(t)
            if (m > 1) if is_exact(m) else (m > 1 + atol):
                return False
        return True

    def rows_singular(self) -> bool:
        return not (set(self.q_plus) & set(self.q_minus))


@dataclass(frozen=True)
class DisintegrationResult:
    bimeasure: Bimeasure
    variation: VariationMeasure
    kernel: KernelTable

    @property
    def nu(self) -> FiniteSignedMeasure:
        return self.variation.nu

    def q(self, t, B) -> Scalar:
        return self.kernel.q(t, B)

    def _integrate(self, C, part) -> Scalar:
        nu = self.nu
        return sum((part.get((t, x), 0) * nu.weight(t) for t, x in set(C)), 0)

    def Q_plus(self, C) -> Scalar:
        """Positive part of the extension on an arbitrary set of (t, x) cells."""
        return self._integrate(C, self.kernel.q_plus)

    def Q_minus(self, C) -> Scalar:
        return self._integrate(C, self.kernel.q_minus)

    def Q(self, C) -> Scalar:
        return self._integrate(C, self.kernel.signed())

    def reconstruct(self, A, B) -> Scalar:
        """``sum_{t in A} q(t, B) nu({t})``."""
        return sum((self.kernel.q(t, B) * self.nu.weight(t) for t in _atoms(A)), 0)


def variation(bm: Bimeasure, A) -> Scalar:
    """``nu(A)`` for a ring member ``A``: the atomwise absolute sum over ``A x X``."""
    if isinstance(A, RingMember):
        atoms = A.atom_set
    else:
        atoms = RingMember(bm.t_space, A).atom_set
    return sum((abs(w) for (t, _), w in bm.entries.items() if t in atoms), 0)


def variation_measure(bm: Bimeasure) -> VariationMeasure:
    weights = {}
    for (t, _), w in bm.entries.items():
        weights[t] = weights.get(t, 0) + abs(w)
    nu = FiniteSignedMeasure(bm.t_space, weights)
    totals = tuple(nu(level) for level in bm.t_space.levels)
    return VariationMeasure(nu, totals)


def _bruteforce(bm: Bimeasure, A, max_cells: int):
    rows = [t for t in bm.t_space.atoms if t in _atoms(A)]
    cols = list(bm.x_atoms)
    n_cells = len(rows) * len(cols)
    if n_cells > max_cells:
        raise InstanceTooLarge(f"{len(rows)}x{len(cols)} = {n_cells} cells exceeds max_cells={max_cells}")
    if not n_cells:
        return 0, ()
    ncol = len(cols)

    def cell(i, j):
        return 1 << (i * ncol + j)

    # every rectangle R x C with nonempty sides, in lexicographic (R, C) order
    rects = []
    for r in range(1, len(rows) + 1):
        for R in itertools.combinations(range(len(rows)), r):
            for c in range(1, ncol + 1):
                for Cc in itertools.combinations(range(ncol), c):
                    bits = 0
                    for i in R:
                        for j in Cc:
                            bits |= cell(i, j)
                    value = abs(bm([rows[i] for i in R], [cols[j] for j in Cc]))
                    rects.append((bits, value, R, Cc))
    rects.sort(key=lambda rc: (rc[2], rc[3]))

    @lru_cache(maxsize=None)
    def best(mask):
        if not mask:
            return 0, ()
        low = mask & -mask
        # leaving the lowest free cell uncovered
        top, choice = best(mask & ~low)[0], None
        for bits, value, R, Cc in rects:
            if bits & low and bits & mask == bits:
                total = value + best(mask & ~bits)[0]
                if total > top or (choice is None and total == top):
                    top, choice = total, (bits, R, Cc)
        if choice is None:
            return top, best(mask & ~low)[1]
        bits, R, Cc = choice
        rect = (tuple(rows[i] for i in R), tuple(cols[j] for j in Cc))
        return top, (rect,) + best(mask & ~bits)[1]

    value, family = best((1 << n_cells) - 1)
    return value, family


def variation_bruteforce(bm: Bimeasure, A, max_cells: int = 12) -> Scalar:
    """Supremum of ``sum |Q0(A_i, B_i)|`` over every family of disjoint rectangles in ``A x X``.

    Exhaustive: a memoized search over the set of still-free cells, where the
    lowest free cell is either left uncovered or covered by each rectangle that
    fits.  Exact in rational mode.
    """
    return _bruteforce(bm, A, max_cells)[0]


def bruteforce_witness(bm: Bimeasure, A, max_cells: int = 12):
    """``(value, family)`` where ``family`` is the first optimal family in enumeration order."""
    return _bruteforce(bm, A, max_cells)


def disintegrate(bm: Bimeasure) -> DisintegrationResult:
    """Variation measure ``nu`` and the kernel ``q`` with ``Q0(A, B) = int_A q(t, B) nu(dt)``.

    Rows with ``nu({t}) = 0`` are omitted; the kernel evaluates to 0 there.
    """
    var = variation_measure(bm)
    for k, total in enumerate(var.per_level_totals, start=1):
        if not is_exact(total) and total != total:
            raise ValidationError(f"variation on level {k} is not finite")
    q = {}
    for (t, x), w in bm.entries.items():
        q[(t, x)] = w / var.nu.weight(t)
    kernel = KernelTable.from_signed(q, rows=var.nu.support)
    return DisintegrationResult(bm, var, kernel)


@dataclass(frozen=True)
class UniquenessReport:
    difference_atoms: tuple
    nu_mass: Scalar
    passed: bool


def _check_reconstruction(bm: Bimeasure, nu: FiniteSignedMeasure, alt: KernelTable, atol: float):
    """Cellwise check; equivalent to all rectangles since both sides are additive in A and B."""
    for t in bm.t_space.atoms:
        for x in bm.x_atoms:
            got = alt.q(t, [x]) * nu.weight(t)
            if not close(got, bm.entry(t, x), atol):
                raise NotAKernelError(
                    f"alternative kernel gives {got!r} on cell ({t!r}, {x!r}), bimeasure has {bm.entry(t, x)!r}"
                )


def kernel_uniqueness_check(bm: Bimeasure, alt: KernelTable, atol: float = 1e-9) -> UniquenessReport:
    """Compare ``alt`` with the canonical kernel: they may only differ on nu-null atoms."""
    result = disintegrate(bm)
    nu = result.nu
    _check_reconstruction(bm, nu, alt, atol)
    canon = result.kernel
    diff = []
    for t in bm.t_space.atoms:
        a, c = alt.row(t), canon.row(t)
        if any(not close(a.get(x, 0), c.get(x, 0), atol) for x in set(a) | set(c)):
            diff.append(t)
    mass = sum((nu.weight(t) for t in diff), 0)
    return UniquenessReport(tuple(diff), mass, close(mass, 0, atol))


@dataclass(frozen=True)
class NecessityReport:
    variations: tuple
    witnesses: tuple
    strictly_increasing: bool
    condition_c_uniform: bool

    def first_exceeding(self, bound) -> int | None:
        """Index of the first member whose variation beats ``bound``."""
        for n, v in enumerate(self.variations):
            if v > bound:
                return n
        return None


def necessity_witness(family: Sequence[Bimeasure], level: int | None = None) -> NecessityReport:
    """Tabulate the variation on a fixed level along a parameterized family.

    Strict growth means no single finite signed measure on the product can
    dominate every rectangle sum of the family; a non-growing family keeps
    condition (c) with a uniform bound.
    """
    variations, witnesses = [], []
    for bm in family:
        k = len(bm.t_space.levels) if level is None else level
        A = bm.t_space.level(k)
        variations.append(variation(bm, A))
        witnesses.append(
            tuple(((t,), (x,)) for t in A for x in bm.x_atoms if bm.entry(t, x) != 0)
        )
    increasing = len(variations) > 1 and all(b > a for a, b in zip(variations, variations[1:]))
    return NecessityReport(tuple(variations), tuple(witnesses), increasing, not increasing)
