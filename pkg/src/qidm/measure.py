"""Finite signed measures on a localized delta-ring.

The ground set is finite and comes with a nested sequence of levels
``T_1 <= T_2 <= ... <= T_K``.  Ring members are the subsets contained in some
level.  Every measure is given atomwise, so sigma-additivity holds by
construction and all of the classical operations (Jordan split, total
variation, Radon-Nikodym density, Caratheodory extension) reduce to exact
finite sums.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Iterable, Mapping

from .errors import AbsoluteContinuityError, NotARingMember, SignedInputError, ValidationError
from .numeric import Scalar, close, is_exact, neg, pos

RING = "ring"
SIGMA_ALGEBRA = "sigma_algebra"


@dataclass(frozen=True)
class GroundSpace:
    atoms: tuple
    levels: tuple

    def __init__(self, atoms: Iterable, levels: Iterable[Iterable] | None = None):
        atoms = tuple(atoms)
        if len(set(atoms)) != len(atoms):
            raise ValidationError("duplicate atom identifiers")
        if levels is None:
            levels = [atoms]
        frozen = tuple(frozenset(level) for level in levels)
        if not frozen:
            raise ValidationError("at least one level is required")
        known = set(atoms)
        for k, level in enumerate(frozen):
            if not level <= known:
                raise ValidationError(f"level {k} names unknown atoms {sorted(map(str, level - known))}")
            if k and not frozen[k - 1] <= level:
                raise ValidationError(f"level {k} does not contain level {k - 1}")
        if frozen[-1] != known:
            raise ValidationError("levels must exhaust the ground set")
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "levels", frozen)

    @classmethod
    def from_indices(cls, atoms, level_indices):
        atoms = tuple(atoms)
        return cls(atoms, [[atoms[i] for i in level] for level in level_indices])

    def level_bound(self, atom_set) -> int | None:
        """Smallest 1-based k with ``atom_set <= T_k``; None when no level contains it."""
        atom_set = frozenset(atom_set)
        for k, level in enumerate(self.levels, start=1):
            if atom_set <= level:
                return k
        return None

    def member(self, atom_set) -> "RingMember":
        return RingMember(self, atom_set)

    def level(self, k: int) -> "RingMember":
        """The k-th localizing set (1-based)."""
        return RingMember(self, self.levels[k - 1])

    def increments(self):
        """The disjoint slices ``T_n \\ T_{n-1}``."""
        prev = frozenset()
        for level in self.levels:
            yield level - prev
            prev = level

    def sort_key(self, atom):
        return self.atoms.index(atom)


@dataclass(frozen=True)
class RingMember:
    space: GroundSpace
    atom_set: frozenset
    level_bound: int = field(init=False)

    def __init__(self, space: GroundSpace, atom_set):
        atom_set = frozenset(atom_set.atom_set if isinstance(atom_set, RingMember) else atom_set)
        bound = space.level_bound(atom_set)
        if bound is None:
            raise NotARingMember(f"{sorted(map(str, atom_set))} is not contained in any level")
        object.__setattr__(self, "space", space)
        object.__setattr__(self, "atom_set", atom_set)
        object.__setattr__(self, "level_bound", bound)

    def __iter__(self):
        return iter(sorted(self.atom_set, key=self.space.sort_key))

    def __len__(self):
        return len(self.atom_set)

    def __contains__(self, atom):
        return atom in self.atom_set

    def __or__(self, other):
        return RingMember(self.space, self.atom_set | _atoms(other))

    def __and__(self, other):
        return RingMember(self.space, self.atom_set & _atoms(other))

    def __sub__(self, other):
        return RingMember(self.space, self.atom_set - _atoms(other))

    def __le__(self, other):
        return self.atom_set <= _atoms(other)


def _atoms(A) -> frozenset:
    return A.atom_set if isinstance(A, RingMember) else frozenset(A)


@dataclass(frozen=True)
class FiniteSignedMeasure:
    space: GroundSpace
    weights: Mapping
    domain: str = RING

    def __post_init__(self):
        known = set(self.space.atoms)
        clean = {}
        for atom, w in dict(self.weights).items():
            if atom not in known:
                raise ValidationError(f"weight given for unknown atom {atom!r}")
            if not is_exact(w) and not math.isfinite(w):
                raise ValidationError(f"non-finite weight at atom {atom!r}")
            if w != 0:
                clean[atom] = w
        if self.domain not in (RING, SIGMA_ALGEBRA):
            raise ValidationError(f"unknown domain tag {self.domain!r}")
        object.__setattr__(self, "weights", MappingProxyType(clean))

    @classmethod
    def zero(cls, space, domain=RING):
        return cls(space, {}, domain)

    def weight(self, atom) -> Scalar:
        return self.weights.get(atom, 0)

    def __call__(self, A) -> Scalar:
        atoms = _atoms(A)
        if self.domain == RING and self.space.level_bound(atoms) is None:
            raise NotARingMember(f"{sorted(map(str, atoms))} is outside the delta-ring")
        return sum((self.weights.get(t, 0) for t in atoms), 0)

    @property
    def support(self) -> frozenset:
        return frozenset(self.weights)

    def is_nonnegative(self) -> bool:
        return all(w >= 0 for w in self.weights.values())

    def _combine(self, other, sign):
        if other.space != self.space:
            raise ValidationError("measures live on different ground spaces")
        out = dict(self.weights)
        for t, w in other.weights.items():
            out[t] = out.get(t, 0) + sign * w
        return FiniteSignedMeasure(self.space, out, self.domain)

    def __add__(self, other):
        return self._combine(other, 1)

    def __sub__(self, other):
        return self._combine(other, -1)

    def __neg__(self):
        return FiniteSignedMeasure(self.space, {t: -w for t, w in self.weights.items()}, self.domain)

    def __abs__(self):
        return FiniteSignedMeasure(self.space, {t: abs(w) for t, w in self.weights.items()}, self.domain)

    def same_as(self, other, atol=None) -> bool:
        atoms = self.support | other.support
        kw = {} if atol is None else {"atol": atol}
        return all(close(self.weight(t), other.weight(t), **kw) for t in atoms)


@dataclass(frozen=True)
class JordanPair:
    positive: FiniteSignedMeasure
    negative: FiniteSignedMeasure

    @property
    def variation(self) -> FiniteSignedMeasure:
        return self.positive + self.negative

    def reconstruct(self) -> FiniteSignedMeasure:
        return self.positive - self.negative


def jordan_decompose(mu: FiniteSignedMeasure) -> JordanPair:
    """Split ``mu`` into mutually singular nonnegative parts (atomwise sign split)."""
    plus = {t: pos(w) for t, w in mu.weights.items() if w > 0}
    minus = {t: neg(w) for t, w in mu.weights.items() if w < 0}
    return JordanPair(
        FiniteSignedMeasure(mu.space, plus, mu.domain),
        FiniteSignedMeasure(mu.space, minus, mu.domain),
    )


def total_variation(mu: FiniteSignedMeasure, A) -> Scalar:
    """``|mu|(A)``.

    The singleton partition attains the supremum over partitions of ``A``:
    merging atoms can only cancel mass.
    """
    atoms = _atoms(A)
    return sum((abs(mu.weights.get(t, 0)) for t in atoms), 0)


def caratheodory_extend(mu: FiniteSignedMeasure, target: str = SIGMA_ALGEBRA) -> FiniteSignedMeasure:
    """Extend a nonnegative measure from the delta-ring to the generated sigma-algebra.

    On a finite ground set the generated sigma-algebra is the power set and the
    extension keeps the atom weights; signed measures must be Jordan-split first.
    """
    if target != SIGMA_ALGEBRA:
        raise ValidationError(f"cannot extend to {target!r}")
    bad = [t for t, w in mu.weights.items() if w < 0]
    if bad:
        raise SignedInputError(
            f"measure has negative mass at {sorted(map(str, bad))}; extend each Jordan part separately"
        )
    return FiniteSignedMeasure(mu.space, dict(mu.weights), SIGMA_ALGEBRA)


def restrict_to_ring(mu: FiniteSignedMeasure) -> FiniteSignedMeasure:
    return FiniteSignedMeasure(mu.space, dict(mu.weights), RING)


def radon_nikodym(mu: FiniteSignedMeasure, lam: FiniteSignedMeasure) -> dict:
    """Density ``dmu/dlam`` per atom; 0 on lam-null atoms."""
    if not lam.is_nonnegative():
        raise ValidationError("the dominating measure must be nonnegative")
    ratio = {}
    for t in mu.space.atoms:
        m, l = mu.weight(t), lam.weight(t)
        if l == 0:
            if m != 0:
                raise AbsoluteContinuityError(t)
            ratio[t] = m * 0
        else:
            ratio[t] = m / l
    return ratio


def integrate_density(density: Mapping, lam: FiniteSignedMeasure, A) -> Scalar:
    """``int_A density dlam`` as an atom sum."""
    return sum((density.get(t, 0) * lam.weight(t) for t in _atoms(A)), 0)
