import math

import numpy as np
import pytest

from conftest import extinction_exponent_ode
from msbp.errors import ModelError
from msbp.extinction import (extinction_mc, feller_extinction,
                             foster_lyapunov_check, grey_predict)
from msbp.mechanisms import (AtomJumps, BranchingMechanism, ConstantRate,
                             OffspringLaw)
from msbp.mcstats import RandomStream
from msbp.sde import SimScheme, simulate_z_batch


def test_origin_extinct_immediately(sub_law, stream):
    rep = extinction_mc(BranchingMechanism(1.0, 1.0), sub_law,
                        ConstantRate(1.0), (0.0, 0), 1.0, 200,
                        SimScheme(dt=0.01, horizon=1.0), stream)
    assert rep.frac_x == rep.frac_y == rep.frac_joint == 1.0
    assert rep.quantiles["joint"]["q50"] == 0.0


def test_joint_time_is_max_of_components(sub_law, stream):
    rep = extinction_mc(BranchingMechanism(1.0, 1.0), sub_law,
                        ConstantRate(1.0), (0.5, 2), 20.0, 2000,
                        SimScheme(dt=0.01, horizon=20.0), stream)
    both = ~np.isnan(rep.tau_x) & ~np.isnan(rep.tau_y)
    assert np.all(rep.tau_joint[both]
                  == np.maximum(rep.tau_x, rep.tau_y)[both])
    assert rep.frac_joint <= min(rep.frac_x, rep.frac_y)


def test_extinct_state_never_revives(sub_law, stream):
    res = simulate_z_batch(BranchingMechanism(1.0, 1.0), sub_law,
                           ConstantRate(1.0), (0.5, 2),
                           SimScheme(dt=0.01, horizon=10.0), stream, 2000,
                           record_times=(10.0,))
    x_t, y_t, _ = res.snapshots[10.0]
    done = np.maximum(res.tau_x, res.tau_y) <= 5.0  # extinct well before T
    done &= ~np.isnan(np.maximum(res.tau_x, res.tau_y))
    assert np.all(x_t[done] == 0.0)
    assert np.all(y_t[done] == 0)


def test_diffusion_marginal_absorption_fraction(sub_law, stream):
    rep = extinction_mc(BranchingMechanism(1.0, 1.0), sub_law,
                        ConstantRate(1.0), (1.0, 0), 1.0, 20_000,
                        SimScheme(dt=1e-3, horizon=1.0), stream)
    target = math.exp(-extinction_exponent_ode(1.0, 1.0, 1.0))
    se = math.sqrt(target * (1 - target) / 20_000)
    assert abs(rep.frac_x - target) <= 3 * se + 0.01
    assert rep.frac_y == 1.0  # started extinct


def test_pure_death_extinction_cdf(stream):
    # three independent exponential lifetimes: P(tau_y <= 1) = (1 - e^-1)^3
    law = OffspringLaw((1.0,))
    rep = extinction_mc(BranchingMechanism(1.0, 1.0), law, ConstantRate(1.0),
                        (0.0, 3), 1.0, 20_000,
                        SimScheme(dt=0.01, horizon=1.0), stream)
    target = (1 - math.exp(-1.0)) ** 3
    se = math.sqrt(target * (1 - target) / 20_000)
    assert abs(rep.frac_y - target) <= 3 * se


def test_constant_rate_joint_fraction_factorizes(sub_law, stream):
    rep = extinction_mc(BranchingMechanism(1.0, 1.0), sub_law,
                        ConstantRate(1.0), (1.0, 2), 5.0, 20_000,
                        SimScheme(dt=2e-3, horizon=5.0), stream)
    prod = rep.frac_x * rep.frac_y
    se = math.sqrt(rep.frac_joint * (1 - rep.frac_joint) / 20_000 + 1e-9)
    assert abs(rep.frac_joint - prod) <= 3 * se + 0.01


# ---------------------------------------------------------------------------
# closed-form absorption probability
# ---------------------------------------------------------------------------

def test_feller_formula_values():
    assert feller_extinction(1.0, 1.0, 0.0, 3.0) == 1.0
    assert feller_extinction(1.0, 1.0, 1.0, 1.0) == pytest.approx(
        math.exp(-1.0 / (math.e - 1.0)), rel=1e-12)
    # critical case: exp(-x0 / (c t))
    assert feller_extinction(0.0, 1.0, 1.0, 2.0) == pytest.approx(
        math.exp(-0.5), rel=1e-12)


def test_feller_formula_vs_rate_equation_oracle():
    for b, c, t in ((1.0, 1.0, 1.0), (0.5, 2.0, 3.0), (2.0, 0.7, 0.5)):
        ode = math.exp(-extinction_exponent_ode(b, c, t))
        assert feller_extinction(b, c, 1.0, t) == pytest.approx(ode, rel=1e-8)


def test_feller_monotone_to_one():
    vals = [feller_extinction(1.0, 1.0, 2.0, t) for t in (1, 2, 5, 10, 40)]
    assert all(a < b for a, b in zip(vals, vals[1:]))
    assert vals[-1] > 0.99


def test_feller_requires_diffusion():
    with pytest.raises(ModelError):
        feller_extinction(1.0, 0.0, 1.0, 1.0)


# ---------------------------------------------------------------------------
# drift criterion and tail-integrability prediction
# ---------------------------------------------------------------------------

def test_drift_bound_trivial_at_origin(sub_law, stream):
    out = foster_lyapunov_check(BranchingMechanism(1.0, 1.0), sub_law,
                                ConstantRate(1.0), (0.0, 0),
                                [(0.5, 0.5), (0.01, 0.01)], 2.0, 500,
                                SimScheme(dt=0.01, horizon=2.0), stream)
    assert out["all_pass"]


def test_drift_bound_skips_nonpositive_exponents(stream):
    # supercritical offspring: phi2 dips negative, the point is skipped
    law = OffspringLaw((0.1, 0.0, 0.9))
    out = foster_lyapunov_check(BranchingMechanism(1.0, 1.0), law,
                                ConstantRate(1.0), (1.0, 1),
                                [(0.5, 0.5)], 2.0, 200,
                                SimScheme(dt=0.01, horizon=2.0), stream)
    assert out["fl_check"][0]["skipped"]


def test_drift_bound_subcritical_ladder(sub_law, stream):
    # b >= 0, R1 < 0, integrable tail: the bound holds and the fraction
    # climbs along the horizon ladder
    mech = BranchingMechanism(0.5, 1.0, AtomJumps((1.0,), (0.5,)))
    sch = SimScheme(dt=0.01, horizon=40.0)
    fracs = []
    for t_h in (10.0, 20.0, 40.0):
        rep = extinction_mc(mech, sub_law, ConstantRate(1.0), (1.0, 3), t_h,
                            4000, SimScheme(dt=0.01, horizon=t_h),
                            stream.child(int(t_h)))
        fracs.append(rep.frac_joint)
    assert fracs[0] <= fracs[1] + 0.02 and fracs[1] <= fracs[2] + 0.02
    out = foster_lyapunov_check(mech, sub_law, ConstantRate(1.0), (1.0, 3),
                                [(0.01, 0.01), (0.5, 0.5), (1.0, 1.0)],
                                40.0, 4000, sch, stream.child(40))
    assert out["all_pass"]


def test_grey_predict_drift_diffusion():
    assert grey_predict(BranchingMechanism(1.0, 1.0))["as_extinction_for_X"]
    assert not grey_predict(
        BranchingMechanism(1.0, 0.0))["as_extinction_for_X"]


def test_grey_predict_critical_diffusion_empirical(sub_law, stream):
    out = grey_predict(BranchingMechanism(0.0, 1.0))
    assert out["as_extinction_for_X"]
    rep = extinction_mc(BranchingMechanism(0.0, 1.0), sub_law,
                        ConstantRate(1.0), (1.0, 1), 40.0, 2000,
                        SimScheme(dt=0.01, horizon=40.0), stream)
    assert rep.frac_x >= 0.95


def test_grey_predict_rejects_negative_drift():
    with pytest.raises(ModelError):
        grey_predict(BranchingMechanism(-0.5, 1.0))
