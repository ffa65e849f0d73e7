"""Shared fixtures and independent oracles.

The oracles here are deliberately separate code paths from the library: the
Laplace transform of the continuous component is obtained by integrating the
rate equation v' = -phi1(v) with scipy, and discrete-population moments come
from a truncated-generator matrix exponential.
"""

import math

import numpy as np
import pytest
from scipy.integrate import solve_ivp
from scipy.linalg import expm

from msbp.mechanisms import (AtomJumps, BranchingMechanism, ConstantRate,
                             ErgodicAffineRate, OffspringLaw)
from msbp.mcstats import RandomStream


@pytest.fixture(scope="session")
def sub_law():
    """Subcritical division law: dies with 0.6, splits in two with 0.4."""
    return OffspringLaw((0.6, 0.0, 0.4))


@pytest.fixture(scope="session")
def harmonic_rate():
    """h(x, y) = 1 + x / (y + 1): the slowing-division benchmark family."""
    return ErgodicAffineRate.from_callable(
        1.0, lambda y: 1.0 / (y + 1), 400, tail_my=1.0)


@pytest.fixture(scope="session")
def full_mechanism():
    """Drift 1, diffusion 1, one compensated jump atom of size 1, rate 1/2."""
    return BranchingMechanism(1.0, 1.0, AtomJumps((1.0,), (0.5,)))


@pytest.fixture()
def stream():
    return RandomStream(20260810)


def laplace_exponent_ode(mech: BranchingMechanism, lam: float, t: float,
                         rtol: float = 1e-10) -> float:
    """v(t) solving v' = -phi1(v), v(0) = lam, by Runge-Kutta integration.

    E[exp(-lam X(t))] = exp(-x0 v(t)) for the continuous component.
    """
    sol = solve_ivp(lambda _, v: [-mech.phi1(max(v[0], 0.0))], (0.0, t),
                    [lam], rtol=rtol, atol=1e-12, dense_output=False)
    return float(sol.y[0, -1])


def extinction_exponent_ode(b: float, c: float, t: float) -> float:
    """lim_{lam -> inf} v(t) via the reciprocal equation w' = b w + c, w(0)=0.

    P(X(t) = 0) = exp(-x0 * 1/w(t)) for the pure-diffusion mechanism.
    """
    sol = solve_ivp(lambda _, w: [b * w[0] + c], (0.0, t), [0.0],
                    rtol=1e-12, atol=1e-14)
    return 1.0 / float(sol.y[0, -1])


def branching_mean_expm(law: OffspringLaw, r: float, y0: int, t: float,
                        y_max: int = 200) -> float:
    """E[Y(t)] for the constant-rate division chain by matrix exponential.

    Truncated generator on {0..y_max}: rate y*r out of y, increments from
    the recentred law.
    """
    q = np.zeros((y_max + 1, y_max + 1))
    for y in range(1, y_max + 1):
        for j, pj in enumerate(law.probs):
            if pj == 0.0:
                continue
            ynew = y + j - 1
            if ynew <= y_max:
                q[y, ynew] += y * r * pj
                q[y, y] -= y * r * pj
            else:
                # mass leaving the truncation box is dropped; keep the row
                # conservative so the error is a documented underestimate
                q[y, y] -= 0.0
    p_t = expm(q * t)
    return float(p_t[y0] @ np.arange(y_max + 1))


def pure_death_laplace(y0: int, r: float, lam: float, t: float) -> float:
    """E[exp(-lam Y(t))] when each of y0 individuals dies at rate r."""
    alive = math.exp(-r * t)
    return (1.0 - alive + alive * math.exp(-lam)) ** y0
