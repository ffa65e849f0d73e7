import math

import numpy as np
import pytest

from msbp.errors import CountOverflowError, InvalidScaleError, ModelError
from msbp.gw import (COUNT_CAP, DivisionThinnedFamily, GWState, GWSystem,
                     OffspringVector, TabulatedFamily, build_system,
                     convergence_report, division_family, gw_batch_at_times,
                     gw_batch_step, gw_scaled_path, gw_step,
                     offspring_for_mechanism)
from msbp.mechanisms import (BranchingMechanism, ConstantRate, OffspringLaw,
                             e_lambda)
from msbp.mcstats import RandomStream
from msbp.sde import SimScheme, simulate_z_batch


def _identity_family():
    return TabulatedFamily(lambda x, y: [0.0, 1.0])


def _const_system(k=10, g=100.0, w=(0.0, 1.0), law=None, h=None):
    law = law or OffspringLaw((0.6, 0.0, 0.4))
    h = h or ConstantRate(1.0)
    return GWSystem(k, g, OffspringVector(tuple(w)),
                    DivisionThinnedFamily(law, h, g))


# ---------------------------------------------------------------------------
# stepping
# ---------------------------------------------------------------------------

def test_deterministic_two_children(stream):
    sys_ = GWSystem(10, 100.0, OffspringVector((0.0, 0.0, 1.0)),
                    _identity_family())
    out = gw_step(sys_, GWState(3, 0), stream.generator())
    assert out == GWState(6, 0)


def test_origin_is_absorbing(stream):
    sys_ = _const_system()
    assert gw_step(sys_, GWState(0, 0), stream.generator()) == GWState(0, 0)


def test_two_point_offspring_mean(stream):
    sys_ = GWSystem(10, 100.0, OffspringVector((0.5, 0.0, 0.5)),
                    _identity_family())
    gen = stream.generator()
    n = 100_000
    x, y = gw_batch_step(sys_, np.ones(n, dtype=np.int64),
                         np.zeros(n, dtype=np.int64), gen)
    # exact law: 0 or 2 each with probability 1/2
    se = x.std(ddof=1) / math.sqrt(n)
    assert abs(x.mean() - 1.0) <= 3 * se
    assert set(np.unique(x)) <= {0, 2}


def test_one_step_law_matches_convolution(stream):
    # x(0) = 2 with offspring on {0, 2}: the law of x(1) is the two-fold
    # convolution {0: w0^2, 2: 2 w0 w2, 4: w2^2}
    w0, w2 = 0.3, 0.7
    sys_ = GWSystem(10, 100.0, OffspringVector((w0, 0.0, w2)),
                    _identity_family())
    gen = stream.generator()
    n = 100_000
    x, _ = gw_batch_step(sys_, np.full(n, 2, dtype=np.int64),
                         np.zeros(n, dtype=np.int64), gen)
    exact = {0: w0 * w0, 2: 2 * w0 * w2, 4: w2 * w2}
    tv = 0.0
    for val, p in exact.items():
        tv += abs(np.mean(x == val) - p)
    tv *= 0.5
    budget = 1.5 * sum(math.sqrt(p * (1 - p) / n) for p in exact.values())
    assert tv <= budget


def test_mean_recursion_over_steps(stream):
    # E[x(n)] = mu^n x(0) for the first type
    w = OffspringVector((0.35, 0.3, 0.35))
    sys_ = GWSystem(10, 100.0, w, _identity_family())
    gen = stream.generator()
    n = 40_000
    x = np.full(n, 10, dtype=np.int64)
    y = np.zeros(n, dtype=np.int64)
    for step in range(1, 21):
        x, y = gw_batch_step(sys_, x, y, gen)
        target = 10 * w.mean ** step
        se = x.std(ddof=1) / math.sqrt(n)
        assert abs(x.mean() - target) <= 4 * se + 1e-9


def test_overflow_guard():
    sys_ = GWSystem(10, 100.0, OffspringVector((0.0, 0.0, 0.0, 1.0)),
                    _identity_family())
    with pytest.raises(CountOverflowError):
        gw_batch_step(sys_, np.array([COUNT_CAP // 2 + 1], dtype=np.int64),
                      np.array([0], dtype=np.int64),
                      RandomStream(1).generator())


# ---------------------------------------------------------------------------
# scaled paths
# ---------------------------------------------------------------------------

def test_scaled_path_no_step_before_first_tick(stream):
    sys_ = _const_system(k=10, g=10.0)
    t, xs, ys = gw_scaled_path(sys_, (1.0, 3), [0.0, 0.05], stream)
    assert xs[0] == xs[1] == 1.0
    assert ys[0] == ys[1] == 3


def test_identity_offspring_gives_constant_path(stream):
    sys_ = GWSystem(10, 50.0, OffspringVector((0.0, 1.0)),
                    _identity_family())
    t, xs, ys = gw_scaled_path(sys_, (1.2, 4), [0.0, 0.5, 1.0], stream)
    assert np.all(xs == xs[0]) and np.all(ys == 4)


def test_scaled_mean_tracks_continuum(sub_law, stream):
    # E[X_k(1)] within 3 se of E[X(1)] from the jump-diffusion simulator
    mech = BranchingMechanism(1.0, 0.45)
    sys_ = build_system(mech, sub_law, ConstantRate(1.0), 100, 100.0)
    snaps = gw_batch_at_times(sys_, (1.0, 5), [0.0, 1.0], stream.child(0),
                              10_000)
    xk, _ = snaps[1.0]
    res = simulate_z_batch(mech, sub_law, ConstantRate(1.0), (1.0, 5),
                           SimScheme(dt=2e-3, horizon=1.0), stream.child(1),
                           10_000)
    se = math.hypot(xk.std(ddof=1) / 100.0, res.x.std(ddof=1) / 100.0)
    assert abs(xk.mean() - res.x.mean()) <= 3 * se + 0.01


def test_moment_bound_from_constructed_mechanisms(sub_law, stream):
    # E[X_k(t) + Y_k(t)] <= (1 + K/g)^{floor(g t)} E[X_k(0) + Y_k(0)] with K
    # read off the one-step means of the constructed system
    mech = BranchingMechanism(1.0, 0.45)
    k, g = 50, 50.0
    sys_ = build_system(mech, sub_law, ConstantRate(2.0), k, g)
    kx = abs(g * (sys_.w.mean - 1.0))
    fam = sys_.v
    q_max = float(np.max(fam.q(np.array([0.0, 1.0, 5.0]), np.arange(3))))
    ky = g * q_max * abs(sub_law.r1)
    k_const = max(kx, ky)
    n = 20_000
    snaps = gw_batch_at_times(sys_, (1.0, 5), [0.0, 0.5, 1.0],
                              stream.child(3), n)
    m0 = 1.0 + 5.0
    for t in (0.5, 1.0):
        xk, yk = snaps[t]
        tot = xk + yk
        bound = (1 + k_const / g) ** math.floor(g * t) * m0
        se = tot.std(ddof=1) / math.sqrt(n)
        assert tot.mean() <= bound + 3 * se


# ---------------------------------------------------------------------------
# division-thinned family
# ---------------------------------------------------------------------------

def test_effective_rate_approaches_h():
    fam = DivisionThinnedFamily(OffspringLaw((0.6, 0.0, 0.4)),
                                ConstantRate(2.0), 1e6)
    got = float(fam.effective_rate(0.0, 0))
    expect = 1e3 * (1 - math.exp(-2e-3))
    assert got == pytest.approx(expect, rel=1e-12)
    assert got == pytest.approx(1.998002, abs=1e-5)


def test_family_conditional_law_is_division_law(sub_law):
    fam = DivisionThinnedFamily(sub_law, ConstantRate(1.7), 400.0)
    for x_k, y in ((0.0, 0), (1.25, 7), (3.0, 2)):
        v = fam.pvec(x_k, y)
        q = 1.0 - v[1]
        ratios = np.delete(v, 1) / q
        expect = np.delete(sub_law.probs, 1)
        assert np.allclose(ratios, expect, atol=1e-14)


def test_family_v1_tends_to_one_for_small_rate(sub_law):
    fam = DivisionThinnedFamily(sub_law, ConstantRate(1e-9), 100.0)
    assert fam.pvec(1.0, 1)[1] == pytest.approx(1.0, abs=1e-9)


def test_family_rejects_scale_below_one(sub_law, harmonic_rate):
    # unbounded h caps the division probability at gamma^{-1/2}, so any
    # gamma below 1 leaves the simplex
    with pytest.raises(InvalidScaleError) as err:
        DivisionThinnedFamily(sub_law, harmonic_rate, 0.25)
    assert err.value.required_gamma == pytest.approx(1.0, rel=1e-3)


def test_family_probability_vectors(sub_law, harmonic_rate):
    fam = DivisionThinnedFamily(sub_law, harmonic_rate, 250.0)
    for x_k in (0.0, 0.5, 4.0):
        for y in (0, 1, 9):
            v = fam.pvec(x_k, y)
            assert v.min() >= 0.0
            assert v.sum() == pytest.approx(1.0, abs=1e-12)


def test_family_depends_on_x_only_through_lattice(sub_law, harmonic_rate):
    k, g = 25, 400.0
    sys_ = GWSystem(k, g, OffspringVector((0.0, 1.0)),
                    DivisionThinnedFamily(sub_law, harmonic_rate, g))
    for x in (0.731, 1.02, 2.499):
        x_k = math.floor(k * x) / k
        a = sys_.v.pvec(x_k, 3)
        b = sys_.v.pvec(math.floor(k * (x_k + 0.7 / k)) / k, 3)
        assert np.allclose(a, b)


def test_tabulated_family_memoizes_and_validates():
    calls = []

    def fn(x_k, y):
        calls.append((x_k, y))
        return [0.5, 0.0, 0.5]

    fam = TabulatedFamily(fn, x_cap=2.0, y_cap=4)
    fam.pvec(1.0, 2)
    fam.pvec(1.0, 2)
    fam.pvec(99.0, 77)   # clamped to (2.0, 4)
    fam.pvec(2.0, 4)
    assert len(calls) == 2
    bad = TabulatedFamily(lambda x, y: [0.9, 0.0, 0.2])
    with pytest.raises(ModelError):
        bad.pvec(0.0, 0)


# ---------------------------------------------------------------------------
# rescaled mechanisms
# ---------------------------------------------------------------------------

def test_phi_x_identity_offspring_vanishes():
    sys_ = GWSystem(10, 100.0, OffspringVector((0.0, 1.0)),
                    _identity_family())
    assert sys_.phi_x(1.3) == 0.0
    assert sys_.phi_x(0.0) == 0.0


def test_phi_x_zero_at_zero(sub_law):
    sys_ = _const_system(w=(0.25, 0.5, 0.25))
    assert sys_.phi_x(0.0) == 0.0


def test_phi_y_closed_form_identity(sub_law):
    # the division-thinned family factorizes: PhiY must equal
    # sqrt(g) (1 - exp(-h/sqrt(g))) (u - gp(u)) to near machine precision
    for g in (1e4, 1e6):
        h = ConstantRate(2.0)
        sys_ = GWSystem(int(g), g, OffspringVector((0.0, 1.0)),
                        DivisionThinnedFamily(sub_law, h, g))
        for lam in (0.5, 1.0, 2.0):
            u = math.exp(-lam)
            closed = (math.sqrt(g) * (1 - math.exp(-2.0 / math.sqrt(g)))
                      * (u - sub_law.gf(u)))
            assert abs(sys_.phi_y(lam, 1.0, 3) - closed) <= 1e-12


def test_phi_bar_log_correction(sub_law):
    mech = BranchingMechanism(1.0, 0.45)
    sys_ = build_system(mech, sub_law, ConstantRate(1.0), 200, 200.0)
    for lam in (0.5, 1.0, 2.0):
        bar = sys_.phi_x_bar(lam)
        # identity: 1 - PhiX e^{lam/k}/(k g) = gw(u) e^{lam/k}
        u = math.exp(-lam / sys_.k)
        direct = sys_.k * sys_.gamma_k * (math.log(sys_.w.gf(u)) + lam / sys_.k)
        assert bar == pytest.approx(direct, rel=1e-9)
        # the log-corrected mechanism approaches +phi1
        assert abs(bar - mech.phi1(lam)) < 0.05


def test_constructed_offspring_requires_room(sub_law):
    with pytest.raises(InvalidScaleError):
        offspring_for_mechanism(BranchingMechanism(1.0, 1.0), 200, 200.0)
    w = offspring_for_mechanism(BranchingMechanism(1.0, 0.45), 200, 200.0)
    assert w.p.sum() == pytest.approx(1.0, abs=1e-12)
    assert w.mean == pytest.approx(1.0 - 1.0 / 200.0, rel=1e-12)


def test_constructed_offspring_with_atoms_matches_phi1():
    mech = BranchingMechanism(0.5, 0.1, __import__("msbp.mechanisms",
                              fromlist=["AtomJumps"]).AtomJumps((0.5,), (0.8,)))
    k, g = 400, 2000.0
    w = offspring_for_mechanism(mech, k, g)
    sys_ = GWSystem(k, g, w, _identity_family())
    for lam in (0.5, 1.0, 2.0):
        assert abs(sys_.phi_x(lam) + mech.phi1(lam)) < 0.02


def test_convergence_report_shrinks_with_scale(sub_law):
    mech = BranchingMechanism(0.5, 0.25)
    h = ConstantRate(2.0)
    systems = [build_system(mech, sub_law, h, int(g), float(g))
               for g in (1e4, 1e6)]
    rep = convergence_report(systems, mech, sub_law, h)
    rows = rep["per_k"]
    assert rows[1]["max_err_phi2"] < rows[0]["max_err_phi2"]
    assert rows[1]["max_err_Ak"] < rows[0]["max_err_Ak"]
    assert rows[0]["lipschitz_phi_x"] < math.inf
    assert rep["order_phi2"] == pytest.approx(0.5, abs=0.1)


def test_generator_error_vanishes_for_identity_pair():
    # identity offspring on both types: A_k e_lam reduces to the pure
    # exponential-expansion error and the y block drops out at y = 0
    sys_ = GWSystem(1000, 1000.0, OffspringVector((0.0, 1.0)),
                    _identity_family())
    val = sys_.generator_elambda((1.0, 0), (1.0, 1.0))
    assert abs(val) < 1e-9
