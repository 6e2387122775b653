"""Quasi-Levy measures, characteristic triplets and the integer-lattice QID analyzer.

Every exponent here uses the clamp truncation ``tau``:

    psi(theta) = i theta gamma - theta^2 a / 2 + sum_x (e^{i theta x} - 1 - i theta tau(x)) m_x

A distribution on the integers is QID exactly when its characteristic function
has no zeros.  When that holds, the continuous logarithm of the cf along
``[0, 2 pi]`` is ``i theta w + g(theta)`` with ``w`` the winding number and ``g``
periodic; the Fourier coefficients of ``g`` are the signed Levy masses.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import BranchTrackingError, InconclusiveError, NotQidError, ValidationError
from .numeric import Scalar, is_exact, neg, one_wedge_sq, pos, tau

ZERO_THRESHOLD = 1e-8
CERTAIN_ZERO = 1e-12
MAX_GRID = 1 << 20

__all__ = [
    "tau",
    "QuasiLevyMeasure",
    "CharacteristicTriplet",
    "LatticePmf",
    "QidVerdict",
    "cf_eval",
    "qid_check_lattice",
    "extract_triplet_lattice",
    "quasi_levy_integrate",
]


@dataclass(frozen=True)
class QuasiLevyMeasure:
    """Finitely many signed atoms on ``R \\ {0}``; duplicates are merged, zero masses dropped."""

    atoms: tuple = ()
    radius: float | None = None

    def __post_init__(self):
        merged: dict = {}
        for x, m in self.atoms:
            if x == 0:
                raise ValidationError("a quasi-Levy measure carries no mass at 0")
            if not is_exact(x) and not math.isfinite(x):
                raise ValidationError(f"atom location {x!r} is not finite")
            if not is_exact(m) and not math.isfinite(m):
                raise ValidationError(f"mass {m!r} at {x!r} is not finite")
            merged[x] = merged.get(x, 0) + m
        if self.radius is not None and self.radius <= 0:
            raise ValidationError("truncation radius must be positive")
        ordered = tuple(sorted(((x, m) for x, m in merged.items() if m != 0), key=lambda a: (abs(a[0]), a[0])))
        object.__setattr__(self, "atoms", ordered)

    def __len__(self):
        return len(self.atoms)

    def __iter__(self):
        return iter(self.atoms)

    def mass(self, x) -> Scalar:
        for y, m in self.atoms:
            if y == x:
                return m
        return 0

    def as_dict(self) -> dict:
        return dict(self.atoms)

    def __add__(self, other: "QuasiLevyMeasure") -> "QuasiLevyMeasure":
        return QuasiLevyMeasure(self.atoms + other.atoms)

    def __neg__(self):
        return QuasiLevyMeasure(tuple((x, -m) for x, m in self.atoms))

    def __sub__(self, other):
        return self + (-other)

    def scaled(self, c) -> "QuasiLevyMeasure":
        return QuasiLevyMeasure(tuple((x, c * m) for x, m in self.atoms))

    def restrict(self, r) -> "QuasiLevyMeasure":
        """Restriction to ``|x| >= r``."""
        return QuasiLevyMeasure(tuple((x, m) for x, m in self.atoms if abs(x) >= r))

    def jordan(self, r=0):
        """Positive and negative parts of the restriction to ``|x| >= r``."""
        part = self.restrict(r) if r else self
        plus = QuasiLevyMeasure(tuple((x, pos(m)) for x, m in part.atoms if m > 0))
        minus = QuasiLevyMeasure(tuple((x, neg(m)) for x, m in part.atoms if m < 0))
        return plus, minus

    def total_variation(self) -> "QuasiLevyMeasure":
        return QuasiLevyMeasure(tuple((x, abs(m)) for x, m in self.atoms))

    def integrability(self) -> Scalar:
        """``int (1 ^ x^2) |nu|(dx)``."""
        return sum((one_wedge_sq(x) * abs(m) for x, m in self.atoms), 0)


@dataclass(frozen=True)
class CharacteristicTriplet:
    gamma: Scalar = 0
    a: Scalar = 0
    levy: QuasiLevyMeasure = QuasiLevyMeasure()

    def __post_init__(self):
        if self.a < 0:
            raise ValidationError("Gaussian variance must be nonnegative")
        if not isinstance(self.levy, QuasiLevyMeasure):
            object.__setattr__(self, "levy", QuasiLevyMeasure(tuple(self.levy)))

    def __add__(self, other: "CharacteristicTriplet") -> "CharacteristicTriplet":
        return CharacteristicTriplet(self.gamma + other.gamma, self.a + other.a, self.levy + other.levy)

    def exponent(self, theta):
        return cf_exponent(self, theta)


def cf_exponent(trip: CharacteristicTriplet, theta):
    """Levy-Khintchine exponent; ``theta`` may be a scalar or an array."""
    th = np.asarray(theta, dtype=float)
    out = 1j * th * float(trip.gamma) - 0.5 * th**2 * float(trip.a)
    for x, m in trip.levy.atoms:
        xf = float(x)
        out = out + (np.expm1(1j * th * xf) - 1j * th * float(tau(x))) * float(m)
    return out if np.ndim(out) else complex(out)


def cf_eval(trip: CharacteristicTriplet, theta):
    """Characteristic function ``exp(psi(theta))``."""
    return np.exp(cf_exponent(trip, theta))


def quasi_levy_integrate(nu: QuasiLevyMeasure, g: Callable) -> Scalar:
    """``int g dnu`` as the atom sum (equal to ``int g dnu+ - int g dnu-``)."""
    return sum((g(x) * m for x, m in nu.atoms), 0)


@dataclass(frozen=True)
class LatticePmf:
    offsets: tuple
    probs: tuple

    def __post_init__(self):
        if len(self.offsets) != len(self.probs):
            raise ValidationError("offsets and probs differ in length")
        if not self.offsets:
            raise ValidationError("empty pmf")
        merged: dict = {}
        for k, p in zip(self.offsets, self.probs):
            if int(k) != k:
                raise ValidationError(f"offset {k!r} is not an integer")
            if p < 0:
                raise ValidationError(f"negative probability at {k}")
            merged[int(k)] = merged.get(int(k), 0) + p
        total = sum(merged.values())
        if abs(float(total) - 1.0) > 1e-12:
            raise ValidationError(f"probabilities sum to {float(total)!r}, not 1")
        keys = sorted(merged)
        object.__setattr__(self, "offsets", tuple(keys))
        object.__setattr__(self, "probs", tuple(merged[k] for k in keys))

    @classmethod
    def from_dict(cls, d: dict):
        keys = sorted(d)
        return cls(tuple(keys), tuple(d[k] for k in keys))

    @property
    def span(self) -> int:
        return self.offsets[-1] - self.offsets[0]

    def cf(self, theta):
        th = np.asarray(theta, dtype=float)
        k = np.asarray(self.offsets, dtype=float)
        p = np.asarray([float(q) for q in self.probs])
        out = np.exp(1j * np.multiply.outer(th, k)) @ p
        return out if np.ndim(out) else complex(out)

    def convolve(self, other: "LatticePmf") -> "LatticePmf":
        out: dict = {}
        for k1, p1 in zip(self.offsets, self.probs):
            for k2, p2 in zip(other.offsets, other.probs):
                out[k1 + k2] = out.get(k1 + k2, 0) + p1 * p2
        return LatticePmf.from_dict(out)

    def as_dict(self) -> dict:
        return dict(zip(self.offsets, self.probs))


def default_grid_size(pmf: LatticePmf) -> int:
    return max(256, 8 * pmf.span)


@dataclass(frozen=True)
class QidVerdict:
    is_qid: bool
    min_cf_modulus: float
    witness_theta: float
    grid_size: int


def qid_check_lattice(pmf: LatticePmf, grid_size: int | None = None, refine_candidates: int = 5) -> QidVerdict:
    """Decide whether the cf of ``pmf`` vanishes on ``[0, 2 pi)``.

    The modulus is scanned on a uniform grid and the smallest local minima are
    polished by bounded scalar minimization to ``1e-12``.  A refined minimum
    above ``1e-8`` certifies QID, below ``1e-12`` certifies a zero, anything in
    between raises :class:`InconclusiveError`.
    """
    span = pmf.span
    if grid_size is None:
        grid_size = default_grid_size(pmf)
    if grid_size < 4 * span or grid_size < 4:
        raise ValidationError(f"grid_size {grid_size} is below 4 * span = {4 * span}")
    if span == 0:
        return QidVerdict(True, 1.0, 0.0, grid_size)

    h = 2 * np.pi / grid_size
    theta = h * np.arange(grid_size)
    mod = np.abs(pmf.cf(theta))
    prev, nxt = np.roll(mod, 1), np.roll(mod, -1)
    local = np.flatnonzero((mod <= prev) & (mod <= nxt))
    local = local[np.argsort(mod[local], kind="stable")][:refine_candidates]

    def sq_modulus(t):
        return abs(pmf.cf(t)) ** 2

    best_val, best_theta = float(mod[local[0]]), float(theta[local[0]])
    for j in local:
        lo, hi = theta[j] - h, theta[j] + h
        res = minimize_scalar(sq_modulus, bounds=(lo, hi), method="bounded", options={"xatol": 1e-12})
        cand = math.sqrt(max(float(res.fun), 0.0))
        if cand < best_val:
            best_val, best_theta = cand, float(res.x)
    best_theta %= 2 * np.pi

    if best_val > ZERO_THRESHOLD:
        return QidVerdict(True, best_val, best_theta, grid_size)
    if best_val < CERTAIN_ZERO:
        return QidVerdict(False, best_val, best_theta, grid_size)
    raise InconclusiveError(best_val, best_theta)


def distinguished_log(pmf: LatticePmf, grid_size: int):
    """Continuous log of the cf on ``theta_j = 2 pi j / N``, ``j = 0..N`` (endpoint included)."""
    theta = 2 * np.pi * np.arange(grid_size + 1) / grid_size
    values = pmf.cf(theta)
    phase = np.angle(values)
    step = np.angle(np.exp(1j * np.diff(phase)))
    if np.any(np.abs(step) >= np.pi / 2):
        j = int(np.argmax(np.abs(step)))
        raise BranchTrackingError(
            f"phase jumps by {step[j]:.3f} between grid points {j} and {j + 1}; grid of {grid_size} is too coarse"
        )
    unwrapped = np.concatenate([[0.0], np.cumsum(step)]) + phase[0]
    return theta, np.log(np.abs(values)) + 1j * unwrapped


def _log_coefficients(pmf: LatticePmf, grid_size: int):
    theta, logcf = distinguished_log(pmf, grid_size)
    winding = int(round(logcf[-1].imag / (2 * np.pi)))
    periodic = logcf[:-1] - 1j * winding * theta[:-1]
    coeffs = np.fft.fft(periodic) / grid_size
    return winding, coeffs


def extract_triplet_lattice(
    pmf: LatticePmf,
    grid_size: int | None = None,
    *,
    refine: bool = True,
    tail_tol: float = 1e-15,
    prune: float = 1e-13,
) -> tuple[CharacteristicTriplet, float]:
    """Signed Levy-Khintchine triplet of a QID lattice law, plus the round-trip residual.

    Levy masses are the Fourier coefficients ``c_n`` (``n != 0``) of the periodic
    part of the distinguished log; ``a = 0`` and ``gamma = w + sum_n c_n tau(n)``
    with ``w`` the winding number.  With ``refine`` the grid is doubled until the
    coefficients at the Nyquist end fall below ``tail_tol`` (so aliasing is
    negligible) and whenever the phase tracking needs a finer grid.
    Coefficients with ``|c_n| <= prune`` are dropped.
    """
    verdict = qid_check_lattice(pmf, grid_size)
    if not verdict.is_qid:
        raise NotQidError(
            f"cf vanishes (|cf| = {verdict.min_cf_modulus:.2e} at theta = {verdict.witness_theta:.6f})"
        )
    n_grid = verdict.grid_size
    while True:
        try:
            winding, coeffs = _log_coefficients(pmf, n_grid)
        except BranchTrackingError:
            if not refine or 2 * n_grid > MAX_GRID:
                raise
            n_grid *= 2
            continue
        band = max(1, n_grid // 16)
        tail = np.max(np.abs(coeffs[n_grid // 2 - band : n_grid // 2 + band + 1]))
        if not refine or tail <= tail_tol or 2 * n_grid > MAX_GRID:
            break
        n_grid *= 2

    freqs = np.fft.fftfreq(n_grid, d=1.0 / n_grid).astype(int)
    atoms = []
    for n, c in zip(freqs, coeffs):
        if n != 0 and abs(c.real) > prune:
            atoms.append((int(n), float(c.real)))
    levy = QuasiLevyMeasure(tuple(atoms))
    gamma = winding + sum(m * tau(n) for n, m in levy.atoms)
    trip = CharacteristicTriplet(float(gamma), 0.0, levy)
    return trip, round_trip_residual(pmf, trip, n_grid)


def round_trip_residual(pmf: LatticePmf, trip: CharacteristicTriplet, grid_size: int) -> float:
    """Sup of ``|cf_eval(trip) - cf(pmf)|`` over the grid and its midpoints."""
    M = 2 * grid_size
    theta = 2 * np.pi * np.arange(M) / M
    jumps = [x for x, _ in trip.levy.atoms]
    if all(float(x).is_integer() and abs(x) < M // 2 for x in jumps):
        # integer jumps: sum_n c_n e^{i n theta} on the whole grid is one inverse FFT
        coef = np.zeros(M, dtype=complex)
        drift = float(trip.gamma)
        for x, m in trip.levy.atoms:
            coef[int(x) % M] += float(m)
            drift -= float(m) * float(tau(x))
        expo = M * np.fft.ifft(coef) - coef.real.sum() + 1j * drift * theta - 0.5 * float(trip.a) * theta**2
        model = np.exp(expo)
    else:
        model = cf_eval(trip, theta)
    return float(np.max(np.abs(model - pmf.cf(theta))))


def cf_table(values_fn: Callable, n: int, lo: float = 0.0, hi: float = 2 * np.pi):
    """Rows ``(theta, Re, Im, |cf|)`` on ``n`` evenly spaced points of ``[lo, hi)``."""
    theta = lo + (hi - lo) * np.arange(n) / n
    vals = np.asarray(values_fn(theta))
    return [(float(t), float(v.real), float(v.imag), float(abs(v))) for t, v in zip(theta, vals)]
