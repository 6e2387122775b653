"""Integrals of step functions against a QID random measure.

On a finite ground set every function is a step function, so the law of
``int f dLambda`` is available in closed form: its exponent is
``sum_s K(theta f(s), s) lambda({s})``, and the equivalent triplet is obtained
by pushing the local Levy measures forward through ``(s, x) -> f(s) x``.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import OverlapError, ValidationError
from .lattice import CharacteristicTriplet, QuasiLevyMeasure, cf_eval
from .measure import GroundSpace, RingMember
from .numeric import Scalar, one_wedge_sq, tau
from .random_measure import (
    DEFAULT_THETA_GRID,
    LocalCharacteristics,
    RandomMeasureModel,
    cf_of_set,
    local_characteristics,
)


def num_threads() -> int:
    try:
        return max(1, int(os.environ.get("QIDM_NUM_THREADS", "1")))
    except ValueError:
        return 1


@dataclass(frozen=True)
class StepFunction:
    pieces: tuple  # ((value, RingMember), ...)

    def __init__(self, pieces):
        pieces = tuple((v, A) for v, A in pieces)
        seen: set = set()
        for _, A in pieces:
            if seen & A.atom_set:
                raise OverlapError(f"pieces overlap on {sorted(map(str, seen & A.atom_set))}")
            seen |= A.atom_set
        object.__setattr__(self, "pieces", pieces)

    @classmethod
    def from_values(cls, space: GroundSpace, values: Mapping) -> "StepFunction":
        """One piece per distinct nonzero value."""
        groups: dict = {}
        for t in space.atoms:
            v = values.get(t, 0)
            if v != 0:
                groups.setdefault(v, []).append(t)
        return cls(tuple((v, RingMember(space, ts)) for v, ts in groups.items()))

    @classmethod
    def indicator(cls, A: RingMember, value=1) -> "StepFunction":
        return cls(((value, A),))

    def values(self) -> dict:
        return {t: v for v, A in self.pieces for t in A.atom_set}

    def __call__(self, t):
        return self.values().get(t, 0)

    def scaled(self, c) -> "StepFunction":
        return StepFunction(tuple((c * v, A) for v, A in self.pieces))

    def is_zero(self) -> bool:
        return all(v == 0 for v, _ in self.pieces)


def _as_values(f) -> dict:
    return f.values() if isinstance(f, StepFunction) else dict(f)


def U(u, s, lc: LocalCharacteristics) -> Scalar:
    """``u a(s) + int (tau(x u) - u tau(x)) rho(s, dx)``."""
    return u * lc.a(s) + sum(((tau(x * u) - u * tau(x)) * m for x, m in lc.rho(s).atoms), 0)


def V0(u, s, lc: LocalCharacteristics) -> Scalar:
    return sum((one_wedge_sq(x * u) * abs(m) for x, m in lc.rho(s).atoms), 0)


def Vp(u, s, lc: LocalCharacteristics, p: float) -> float:
    total = 0.0
    for x, m in lc.rho(s).atoms:
        y = abs(float(x) * float(u))
        total += (y**p if y > 1 else y * y) * abs(float(m))
    return total


@dataclass(frozen=True)
class IntegrabilityReport:
    U_int: Scalar
    sigma_int: Scalar
    V0_int: Scalar
    passed: bool


def integrability_check(m: RandomMeasureModel, f, lc: LocalCharacteristics | None = None) -> IntegrabilityReport:
    """The three integrals ``sum |U(f(s), s)| lambda``, ``sum f^2 sigma^2 lambda``, ``sum V0 lambda``."""
    lc = local_characteristics(m) if lc is None else lc
    vals = _as_values(f)
    u_int = sig = v_int = 0
    for s in m.space.atoms:
        w = lc.lam.weight(s)
        u = vals.get(s, 0)
        if not w:
            continue
        u_int = u_int + abs(U(u, s, lc)) * w
        sig = sig + u * u * lc.sigma2(s) * w
        v_int = v_int + V0(u, s, lc) * w
    finite = all(math.isfinite(float(v)) for v in (u_int, sig, v_int))
    return IntegrabilityReport(u_int, sig, v_int, finite)


@dataclass(frozen=True)
class IntegralLaw:
    a_f: Scalar
    sigma2_f: Scalar
    F_f: QuasiLevyMeasure
    F_plus_raw: QuasiLevyMeasure
    F_minus_raw: QuasiLevyMeasure
    diagnostics: IntegrabilityReport

    @property
    def triplet(self) -> CharacteristicTriplet:
        return CharacteristicTriplet(self.a_f, self.sigma2_f, self.F_f)

    def cf(self, theta):
        return cf_eval(self.triplet, theta)


def transform_triplet(m: RandomMeasureModel, f, lc: LocalCharacteristics | None = None) -> IntegralLaw:
    """Triplet of ``int f dLambda``.

    ``a_f = sum U(f(s), s) lambda``, ``sigma_f^2 = sum f^2 sigma^2 lambda``; the raw
    Levy parts are the images of ``rho+-(s, {x}) lambda({s})`` under
    ``(s, x) -> f(s) x`` (images at 0 dropped), and ``F_f`` is their difference
    with coincident mass cancelled.
    """
    lc = local_characteristics(m) if lc is None else lc
    diag = integrability_check(m, f, lc)
    vals = _as_values(f)
    a_f = sig = 0
    plus, minus = [], []
    for s in m.space.atoms:
        w = lc.lam.weight(s)
        u = vals.get(s, 0)
        if not w:
            continue
        a_f = a_f + U(u, s, lc) * w
        sig = sig + u * u * lc.sigma2(s) * w
        if u == 0:
            continue
        for x, mass in lc.rho_plus.get(s, QuasiLevyMeasure()).atoms:
            plus.append((u * x, mass * w))
        for x, mass in lc.rho_minus.get(s, QuasiLevyMeasure()).atoms:
            minus.append((u * x, mass * w))
    F_plus, F_minus = QuasiLevyMeasure(tuple(plus)), QuasiLevyMeasure(tuple(minus))
    return IntegralLaw(a_f, sig, F_plus - F_minus, F_plus, F_minus, diag)


def integrate_step(m: RandomMeasureModel, f, lc: LocalCharacteristics | None = None) -> IntegralLaw:
    """Law of ``int f dLambda`` for a step function (overlapping pieces are rejected)."""
    if not isinstance(f, StepFunction):
        f = StepFunction.from_values(m.space, f)
    return transform_triplet(m, f, lc)


def step_cf(m: RandomMeasureModel, f: StepFunction, theta, lc: LocalCharacteristics | None = None):
    """Product formula ``prod_j cf_{Lambda(A_j)}(theta x_j)``."""
    lc = local_characteristics(m) if lc is None else lc
    th = np.asarray(theta, dtype=float)
    out = np.ones(th.shape, dtype=complex)
    for v, A in f.pieces:
        out = out * cf_of_set(m, A, th * float(v), lc)
    return out if np.ndim(out) else complex(out)


def U_star(u, s, lc: LocalCharacteristics) -> float:
    """``sup_{|c| <= 1} |U(c u, s)|``.

    ``c -> U(c u, s)`` is piecewise linear with kinks where ``|c u x| = 1``, so
    the supremum of its modulus is attained at a kink or at ``c = +-1``.
    """
    u = float(u)
    if u == 0:
        return 0.0
    knots = {-1.0, 1.0}
    for x, _ in lc.rho(s).atoms:
        k = 1 / (abs(u) * abs(float(x)))
        if k < 1:
            knots.update((k, -k))
    return max(abs(float(U(c * u, s, lc))) for c in knots)


def phi_p(u, s, lc: LocalCharacteristics, p: float) -> float:
    """``U*(u, s) + u^2 sigma^2(s) + V_p(u, s)``."""
    return U_star(u, s, lc) + float(u) ** 2 * float(lc.sigma2(s)) + Vp(u, s, lc, p)


def phi_integral(m: RandomMeasureModel, f, p: float, lc: LocalCharacteristics, scale: float = 1.0) -> float:
    """``sum_s Phi_p(|f(s)| / scale, s) lambda({s})``."""
    vals = _as_values(f)
    total = 0.0
    for s in m.space.atoms:
        w = float(lc.lam.weight(s))
        u = abs(float(vals.get(s, 0)))
        if w and u:
            total += phi_p(u / scale, s, lc, p) * w
    return total


@dataclass(frozen=True)
class OrliczEvaluation:
    phi_integral: float
    f_norm: float
    p: float


def orlicz_norm(
    m: RandomMeasureModel,
    f,
    p: float = 0.0,
    lc: LocalCharacteristics | None = None,
    tol: float = 1e-10,
) -> OrliczEvaluation:
    """Musielak-Orlicz F-norm ``inf {c > 0 : sum Phi_p(|f| / c) lambda <= c}`` by bisection."""
    if p < 0:
        raise ValidationError("p must be nonnegative")
    lc = local_characteristics(m) if lc is None else lc
    base = phi_integral(m, f, p, lc)
    if base == 0.0:
        return OrliczEvaluation(0.0, 0.0, p)

    def feasible(c):
        return phi_integral(m, f, p, lc, scale=c) <= c

    lo, hi = 1e-12, 1.0
    while not feasible(hi):
        lo, hi = hi, 2 * hi
    if feasible(lo):
        return OrliczEvaluation(base, lo, p)
    while hi - lo > tol * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        if feasible(mid):
            hi = mid
        else:
            lo = mid
    return OrliczEvaluation(base, hi, p)


@dataclass(frozen=True)
class ContinuityReport:
    rows: tuple  # (n, f_norm, phi_integral, cf_dev)
    norm_vanishes: bool
    phi_vanishes: bool
    cf_vanishes: bool

    @property
    def co_vanish(self) -> bool:
        return self.norm_vanishes == self.phi_vanishes

    @property
    def cf_follows(self) -> bool:
        return self.cf_vanishes or not self.norm_vanishes


def _vanishes(column, ratio, tail=3, atol=1e-12) -> bool:
    """Last entry at most ``ratio`` times the column maximum, with a nonincreasing tail."""
    if len(column) < 2:
        return False
    end = column[-tail:]
    decreasing = all(b <= a + atol for a, b in zip(end, end[1:]))
    return decreasing and column[-1] <= ratio * max(column) + atol


def continuity_probe(
    m: RandomMeasureModel,
    f_sequence: Sequence,
    p: float = 0.0,
    theta_grid=None,
    vanish_ratio: float = 1e-2,
    lc: LocalCharacteristics | None = None,
) -> ContinuityReport:
    """Norm, Phi-integral and cf deviation from 1 along a sequence of integrands.

    A column counts as vanishing when its last three entries are nonincreasing
    and the last is at most ``vanish_ratio`` times the column maximum.  No
    converse is claimed.
    """
    theta = DEFAULT_THETA_GRID if theta_grid is None else np.asarray(theta_grid, dtype=float)
    lc = local_characteristics(m) if lc is None else lc

    def row(item):
        n, f = item
        if not isinstance(f, StepFunction):
            f = StepFunction.from_values(m.space, f)
        ev = orlicz_norm(m, f, p, lc)
        dev = float(np.max(np.abs(step_cf(m, f, theta, lc) - 1))) if len(theta) else 0.0
        return (n, ev.f_norm, ev.phi_integral, dev)

    with ThreadPoolExecutor(max_workers=num_threads()) as pool:
        rows = tuple(pool.map(row, enumerate(f_sequence)))
    return ContinuityReport(
        rows,
        _vanishes([r[1] for r in rows], vanish_ratio),
        _vanishes([r[2] for r in rows], vanish_ratio),
        _vanishes([r[3] for r in rows], vanish_ratio),
    )
