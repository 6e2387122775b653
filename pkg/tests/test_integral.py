from fractions import Fraction

import numpy as np
import pytest

from helpers import rand_model
from qidm.errors import OverlapError, ValidationError
from qidm.integral import (
    StepFunction,
    U,
    U_star,
    V0,
    continuity_probe,
    integrability_check,
    integrate_step,
    num_threads,
    orlicz_norm,
    phi_integral,
    step_cf,
)
from qidm.measure import FiniteSignedMeasure, GroundSpace, RingMember
from qidm.numeric import tau
from qidm.random_measure import RandomMeasureModel, local_characteristics

ONE = GroundSpace(["t"])


def model(space, nu0=None, nu1=None, F=None):
    return RandomMeasureModel(
        space, FiniteSignedMeasure(space, nu0 or {}), FiniteSignedMeasure(space, nu1 or {}), F or {}
    )


POISSON = model(ONE, F={"t": [(Fraction(1), Fraction(1))]})


def test_U_and_V0_on_unit_jump():
    lc = local_characteristics(POISSON)
    for u in (Fraction(1, 2), Fraction(3), Fraction(-2), Fraction(0)):
        assert U(u, "t", lc) == tau(u) - u
        assert V0(u, "t", lc) == min(1, u * u)


def test_U_star_against_dense_grid():
    rng = np.random.default_rng(0)
    for _ in range(10):
        m = rand_model(rng, n=1, backend="float")
        lc = local_characteristics(m)
        s = m.space.atoms[0]
        if lc.lam.weight(s) == 0:
            continue
        u = float(rng.uniform(-5, 5))
        grid = np.linspace(-1, 1, 4001)
        oracle = max(abs(float(U(c * u, s, lc))) for c in grid)
        assert U_star(u, s, lc) >= oracle - 1e-12
        assert U_star(u, s, lc) <= oracle + 1e-2 * (1 + abs(u))


def test_gaussian_orlicz_closed_form():
    # Phi_0(u) = u^2 on a pure Gaussian model, so the norm solves 8 / c^2 = c.
    space = GroundSpace(["a", "b", "c"])
    m = model(space, nu1={"a": 1, "b": 2, "c": Fraction(1, 2)})
    f = StepFunction.from_values(space, {"a": 2, "b": 1, "c": 2})  # 4 + 2 + 2 = 8
    ev = orlicz_norm(m, f)
    assert ev.f_norm == pytest.approx(2.0, abs=1e-8)
    assert ev.phi_integral == pytest.approx(8.0)


def test_norm_is_monotone_in_scale():
    rng = np.random.default_rng(5)
    for _ in range(15):
        m = rand_model(rng)
        lc = local_characteristics(m)
        vals = {t: float(rng.uniform(-3, 3)) for t in m.space.atoms}
        f = StepFunction.from_values(m.space, vals)
        c1, c2 = sorted(rng.uniform(0, 3, size=2))
        assert orlicz_norm(m, f.scaled(c1), lc=lc).f_norm <= orlicz_norm(m, f.scaled(c2), lc=lc).f_norm + 1e-9


def test_orlicz_norm_solves_its_equation():
    rng = np.random.default_rng(6)
    for _ in range(10):
        m = rand_model(rng)
        lc = local_characteristics(m)
        f = StepFunction.from_values(m.space, {t: float(rng.uniform(-3, 3)) for t in m.space.atoms})
        c = orlicz_norm(m, f, lc=lc).f_norm
        if c > 1e-9:
            assert phi_integral(m, f, 0.0, lc, scale=c) <= c * (1 + 1e-8)
            assert phi_integral(m, f, 0.0, lc, scale=c * (1 - 1e-6)) > c * (1 - 1e-6)


def test_two_paths_agree():
    rng = np.random.default_rng(8)
    theta = np.linspace(-8, 8, 64)
    for _ in range(20):
        m = rand_model(rng)
        lc = local_characteristics(m)
        f = StepFunction.from_values(m.space, {t: Fraction(int(rng.integers(-3, 4)), 2) for t in m.space.atoms})
        law = integrate_step(m, f, lc)
        a, b = law.cf(theta), step_cf(m, f, theta, lc)
        assert np.max(np.abs(a - b) / np.maximum(1, np.abs(a))) < 1e-10


def test_pushforward_of_unit_jump():
    f = StepFunction.indicator(RingMember(ONE, ["t"]), Fraction(2))
    law = integrate_step(POISSON, f)
    assert law.F_f.as_dict() == {2: 1}
    # 2 (N - 1) with N ~ Poisson(1): drift -2 plus tau(2) from the moved jump
    assert law.a_f == -1
    assert law.diagnostics.passed


def test_step_function_validation():
    A, B = RingMember(ONE, ["t"]), RingMember(ONE, ["t"])
    with pytest.raises(OverlapError):
        StepFunction(((1, A), (2, B)))
    with pytest.raises(ValidationError):
        orlicz_norm(POISSON, StepFunction.indicator(A), p=-1)
    assert StepFunction(()).is_zero()
    assert orlicz_norm(POISSON, StepFunction(())).f_norm == 0


def test_integrability_report_values():
    m = model(ONE, nu0={"t": 1}, nu1={"t": 1}, F={"t": [(Fraction(1), Fraction(1))]})
    rep = integrability_check(m, {"t": Fraction(3)})
    # lambda = 3, a = sigma^2 = dnu = 1/3, rho = delta_1 / 3
    assert rep.sigma_int == 9
    assert rep.U_int == abs(3 * Fraction(1, 3) + (tau(3) - 3) * Fraction(1, 3)) * 3
    assert rep.V0_int == 1


def test_continuity_probe_co_vanishes(monkeypatch):
    rng = np.random.default_rng(10)
    for threads in ("1", "3"):
        monkeypatch.setenv("QIDM_NUM_THREADS", threads)
        assert num_threads() == int(threads)
        m = rand_model(rng)
        f = StepFunction.from_values(m.space, {t: 1.0 + i for i, t in enumerate(m.space.atoms)})
        seq = [f.scaled(10.0**-k) for k in range(7)]
        rep = continuity_probe(m, seq)
        assert rep.norm_vanishes and rep.phi_vanishes and rep.co_vanish and rep.cf_follows
        assert [r[0] for r in rep.rows] == list(range(7))
    monkeypatch.setenv("QIDM_NUM_THREADS", "junk")
    assert num_threads() == 1


def test_probe_does_not_vanish_on_constant_sequence():
    f = StepFunction.indicator(RingMember(ONE, ["t"]), 1.0)
    rep = continuity_probe(POISSON, [f] * 4)
    assert not rep.norm_vanishes and not rep.phi_vanishes and rep.co_vanish
