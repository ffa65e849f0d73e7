"""Discrete two-type branching with interaction, and its rescaled mechanisms.

The chain (x(n), y(n)) advances by

    x(n) = sum of x(n-1) i.i.d. draws from the first-type offspring law w,
    y(n) = sum of y(n-1) i.i.d. draws from a second-type law v that depends
           on the pre-step state through (x_k, y), x_k = floor(k x)/k,

and the rescaled process is (x(floor(g t))/k, y(floor(g t))) with state
scale k and time scale g = gamma_k.  The rescaled mechanisms

    PhiX(u)      = k g [e^{-u/k} - gw(e^{-u/k})]
    PhiY(u;x,y)  =   g [e^{-u}   - gv(e^{-u})]

converge (PhiX to -phi1, e^u PhiY to -h phi2) when the family is tuned
correctly; ``convergence_report`` measures that numerically, including the
discrete-generator error against the limit generator.

Offspring sums are sampled exactly by multinomial decomposition over the
(small, finite) support, vectorized over replicates; this replaces per-draw
sampling without changing the law.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (CountOverflowError, InvalidScaleError, LogDomainError,
                     ModelError)
from .mechanisms import (BranchingMechanism, OffspringLaw, RateFunction,
                         generator_elambda)
from .mcstats import RandomStream

# counts beyond this are aborted as overflow (exact in float64 and int64)
COUNT_CAP = 2**53


@dataclass(frozen=True)
class GWState:
    x: int
    y: int


@dataclass(frozen=True, eq=False)
class OffspringVector:
    """Probability vector on N with exact batch sampling of offspring sums."""

    probs: tuple

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float)
        if p.ndim != 1 or p.size == 0 or np.any(p < 0):
            raise ModelError("offspring vector must be nonnegative")
        if abs(p.sum() - 1.0) > 1e-9:
            raise ModelError(f"offspring vector sums to {p.sum()}, not 1")
        object.__setattr__(self, "_p", p / p.sum())
        object.__setattr__(self, "_support", np.arange(p.size))

    @property
    def p(self) -> np.ndarray:
        return self._p

    @property
    def mean(self) -> float:
        return float((self._support * self._p).sum())

    def gf(self, s: float) -> float:
        return float(np.polyval(self._p[::-1], s))

    def sum_of(self, counts, gen: np.random.Generator) -> np.ndarray:
        """Exact sample of sum_{j=1..counts[i]} xi_j, xi ~ this law, per row."""
        counts = np.asarray(counts)
        if counts.size == 0:
            return counts.copy()
        table = gen.multinomial(counts, self._p)
        return table @ self._support


class InteractionFamily:
    """Second-type offspring law v(x_k, y) and its batch sampler."""

    def pvec(self, x_k: float, y: int) -> np.ndarray:
        raise NotImplementedError

    def gf(self, s: float, x_k: float, y: int) -> float:
        return float(np.polyval(self.pvec(x_k, y)[::-1], s))

    def u_minus_gf(self, u: float, x_k: float, y: int) -> float:
        """u - gv(u), the quantity entering the rescaled mechanism.

        Overridden where an exact factorization avoids the float
        cancellation that direct subtraction suffers at large time scales.
        """
        return u - self.gf(u, x_k, y)

    def step_sum(self, x_raw, y, k, gen) -> np.ndarray:
        """sum of y[i] draws from v(x_raw[i]/k, y[i]), per row."""
        raise NotImplementedError


@dataclass(frozen=True, eq=False)
class DivisionThinnedFamily(InteractionFamily):
    """Offspring family built from a division law p and rate h.

    An individual keeps a single child (no event) with probability 1 - q and
    otherwise divides by p, where

        q(x_k, y) = g^(-1/2) * (1 - exp(-g^(-1/2) h(x_k, y))),  g = gamma_k,

    so that gamma_k * (1 - v(1)) -> h(x, y) as the scales grow: divisions at
    asymptotic rate h with offspring p.
    """

    law: OffspringLaw
    h: RateFunction
    gamma_k: float

    def __post_init__(self):
        if self.gamma_k <= 0:
            raise ModelError("gamma_k must be positive")
        g = self.gamma_k
        qmax = (1.0 - math.exp(-g**-0.5 * self.h.bound)) * g**-0.5
        if qmax > 1.0:
            lo, hi = g, g
            while (1.0 - math.exp(-hi**-0.5 * self.h.bound)) * hi**-0.5 > 1.0:
                hi *= 2.0
            for _ in range(200):
                mid = 0.5 * (lo + hi)
                if (1.0 - math.exp(-mid**-0.5 * self.h.bound)) * mid**-0.5 > 1.0:
                    lo = mid
                else:
                    hi = mid
            raise InvalidScaleError(
                f"division probability exceeds 1 at gamma_k={g}; "
                f"need gamma_k >= {hi:.6g}", required_gamma=hi)

    def q(self, x_k, y):
        g = self.gamma_k
        hval = np.asarray(self.h.value(x_k, y), dtype=float)
        return g**-0.5 * (1.0 - np.exp(-(g**-0.5) * hval))

    def effective_rate(self, x_k, y):
        """gamma_k * (1 - v(1)), the finite-scale division rate."""
        return self.gamma_k * self.q(x_k, y)

    def pvec(self, x_k, y):
        p = self.law.probs
        q = float(self.q(x_k, y))
        v = np.zeros(max(p.size, 2))
        v[:p.size] = p * q
        v[1] = 1.0 - q
        return v

    def u_minus_gf(self, u, x_k, y):
        # gv(u) = (1 - q) u + q gp(u), so u - gv(u) = q (u - gp(u)) exactly
        q = float(self.q(x_k, y))
        return q * (u - self.law.gf(u))

    def step_sum(self, x_raw, y, k, gen):
        x_k = np.asarray(x_raw, dtype=float) / k
        q = self.q(x_k, y)
        divides = gen.binomial(y, q)
        kept = y - divides
        children = gen.multinomial(divides, self.law.probs) @ np.arange(
            self.law.probs.size)
        return kept + children


@dataclass(eq=False)
class TabulatedFamily(InteractionFamily):
    """User-supplied v(x_k, y), memoized on the clamped state.

    The table function is evaluated at (x_k ^ x_cap, y ^ y_cap); beyond the
    caps the family is constant, which bounds the memo while keeping lookup
    O(1).  The memo dict relies on the GIL for concurrent read/insert.
    """

    fn: object
    x_cap: float = 64.0
    y_cap: int = 256
    _memo: dict = field(default_factory=dict, repr=False)

    def _key(self, x_k, y):
        return (min(float(x_k), self.x_cap), min(int(y), self.y_cap))

    def pvec(self, x_k, y):
        key = self._key(x_k, y)
        v = self._memo.get(key)
        if v is None:
            v = np.asarray(self.fn(*key), dtype=float)
            if v.ndim != 1 or np.any(v < 0) or abs(v.sum() - 1.0) > 1e-9:
                raise ModelError(f"v{key} is not a probability vector")
            self._memo[key] = v
        return v

    def step_sum(self, x_raw, y, k, gen):
        x_k = np.asarray(x_raw, dtype=float) / k
        out = np.zeros_like(y)
        keys = [self._key(xi, yi) for xi, yi in zip(x_k, y)]
        order = {}
        for i, key in enumerate(keys):
            order.setdefault(key, []).append(i)
        for key, rows in order.items():
            v = self.pvec(*key)
            rows = np.asarray(rows)
            table = gen.multinomial(y[rows], v)
            out[rows] = table @ np.arange(v.size)
        return out


@dataclass(frozen=True, eq=False)
class GWSystem:
    """Two-type branching system with interaction at scales (k, gamma_k)."""

    k: int
    gamma_k: float
    w: OffspringVector
    v: InteractionFamily

    def __post_init__(self):
        if self.k < 1 or self.gamma_k <= 0:
            raise ModelError("need k >= 1 and gamma_k > 0")

    # -- rescaled mechanisms ------------------------------------------------

    def phi_x(self, lam: float) -> float:
        """k g [e^{-lam/k} - gw(e^{-lam/k})]."""
        u = math.exp(-lam / self.k)
        return self.k * self.gamma_k * (u - self.w.gf(u))

    def phi_x_bar(self, lam: float) -> float:
        """k g log(1 - (k g)^{-1} PhiX(lam) e^{lam/k})."""
        kg = self.k * self.gamma_k
        arg = 1.0 - self.phi_x(lam) * math.exp(lam / self.k) / kg
        if arg <= 0:
            raise LogDomainError(f"log argument {arg} <= 0 at lam={lam}")
        return kg * math.log(arg)

    def phi_y(self, lam: float, x: float, y: int) -> float:
        """g [e^{-lam} - gv(e^{-lam})] at the lattice point below x."""
        u = math.exp(-lam)
        x_k = math.floor(self.k * x) / self.k
        return self.gamma_k * self.v.u_minus_gf(u, x_k, y)

    def phi_y_bar(self, lam: float, x: float, y: int) -> float:
        arg = 1.0 - self.phi_y(lam, x, y) * math.exp(lam) / self.gamma_k
        if arg <= 0:
            raise LogDomainError(f"log argument {arg} <= 0 at lam={lam}")
        return self.gamma_k * math.log(arg)

    def generator_elambda(self, z, lam) -> float:
        """Discrete generator applied to e_lam at a lattice state z.

        g [(gw(e^{-lam1/k}))^{k x_k} (gv(e^{-lam2}))^y - e_lam(z)], evaluated
        in log space so large populations stay stable.
        """
        x, y = z
        lam1, lam2 = lam
        x_k = math.floor(self.k * x) / self.k
        raw = int(round(x_k * self.k))
        u1 = math.exp(-lam1 / self.k)
        u2 = math.exp(-lam2)
        lg1 = math.log(self.w.gf(u1)) if raw else 0.0
        lg2 = math.log(self.v.gf(u2, x_k, y)) if y else 0.0
        expo = raw * (lg1 + lam1 / self.k) + y * (lg2 + lam2)
        elam = math.exp(-lam1 * x_k - lam2 * y)
        return self.gamma_k * elam * math.expm1(expo)


# ---------------------------------------------------------------------------
# stepping
# ---------------------------------------------------------------------------

def gw_batch_step(sys: GWSystem, x, y, gen) -> tuple:
    """One synchronous step for arrays of replicates (exact in law)."""
    y_new = sys.v.step_sum(x, y, sys.k, gen)   # v is read at the pre-step x
    x_new = sys.w.sum_of(x, gen)
    if x_new.max(initial=0) > COUNT_CAP or y_new.max(initial=0) > COUNT_CAP:
        raise CountOverflowError("population count exceeded 2**53")
    return x_new, y_new


def gw_step(sys: GWSystem, s: GWState, gen) -> GWState:
    x, y = gw_batch_step(sys, np.array([s.x], dtype=np.int64),
                         np.array([s.y], dtype=np.int64), gen)
    return GWState(int(x[0]), int(y[0]))


def gw_scaled_path(sys: GWSystem, z0, t_grid, stream: RandomStream):
    """Scaled path (x/k, y) sampled on t_grid (piecewise constant).

    z0 = (x0 real, y0 int); the chain starts from floor(k x0) individuals.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.size == 0 or t_grid[0] != 0.0 or np.any(np.diff(t_grid) <= 0):
        raise ModelError("t_grid must increase from 0")
    gen = stream.generator()
    steps_at = np.floor(sys.gamma_k * t_grid).astype(np.int64)
    x = np.array([int(math.floor(sys.k * float(z0[0])))], dtype=np.int64)
    y = np.array([int(z0[1])], dtype=np.int64)
    xs, ys = [], []
    done = 0
    for target in steps_at:
        while done < target:
            x, y = gw_batch_step(sys, x, y, gen)
            done += 1
        xs.append(x[0] / sys.k)
        ys.append(int(y[0]))
    return t_grid, np.asarray(xs), np.asarray(ys, dtype=np.int64)


def gw_batch_at_times(sys: GWSystem, z0, t_grid, stream: RandomStream,
                      n: int) -> dict:
    """Scaled-state snapshots at t_grid for n independent replicates."""
    t_grid = np.asarray(t_grid, dtype=float)
    steps_at = np.floor(sys.gamma_k * t_grid).astype(np.int64)
    gen = stream.generator()
    x = np.full(n, int(math.floor(sys.k * float(z0[0]))), dtype=np.int64)
    y = np.full(n, int(z0[1]), dtype=np.int64)
    snaps = {}
    done = 0
    for t, target in zip(t_grid, steps_at):
        while done < target:
            x, y = gw_batch_step(sys, x, y, gen)
            done += 1
        snaps[float(t)] = (x / sys.k, y.copy())
    return snaps


# ---------------------------------------------------------------------------
# families tuned to a continuous limit
# ---------------------------------------------------------------------------

def offspring_for_mechanism(mech: BranchingMechanism, k: int,
                            gamma_k: float) -> OffspringVector:
    """First-type offspring law whose rescaled mechanism approaches -phi1.

    Construction: mass c k / g at 2 children and b / g + c k / g at 0
    children reproduce the drift and diffusion parts exactly in the limit;
    each jump atom (size s, weight wt) becomes mass wt/(k g) at 1 + round(ks)
    children, with its mean compensated through the 0-children mass so the
    drift stays b.  Requires g large enough that the single-child mass stays
    nonnegative.
    """
    g = float(gamma_k)
    if mech.b < 0:
        raise ModelError("offspring construction needs b >= 0")
    from .mechanisms import AtomJumps, ZeroJumps
    atoms = []
    if isinstance(mech.jumps, AtomJumps):
        atoms = list(zip(mech.jumps.sizes, mech.jumps.weights))
    elif not isinstance(mech.jumps, ZeroJumps):
        raise ModelError(
            "offspring construction supports zero or atomic jump measures")
    top = 2
    for s, _ in atoms:
        top = max(top, 1 + max(1, int(round(k * s))))
    w = np.zeros(top + 1)
    w[2] += mech.c * k / g
    w[0] += mech.b / g + mech.c * k / g
    for s, wt in atoms:
        j = 1 + max(1, int(round(k * s)))
        eps = wt / (k * g)
        w[j] += eps
        w[0] += eps * (j - 1)   # keep the mean at 1 - b/g
    w[1] = 1.0 - w.sum() + w[1]
    if w[1] < 0 or np.any(w < 0):
        need = mech.b + 2 * mech.c * k + sum(
            wt / k * (1 + (1 + max(1, round(k * s))))
            for s, wt in atoms)
        raise InvalidScaleError(
            f"offspring family leaves the simplex at gamma_k={g}; "
            f"need roughly gamma_k >= {need:.6g}", required_gamma=need)
    return OffspringVector(tuple(w))


def division_family(law: OffspringLaw, h: RateFunction, k: int,
                    gamma_k: float) -> DivisionThinnedFamily:
    """Second-type family with division law p and asymptotic rate h."""
    return DivisionThinnedFamily(law, h, float(gamma_k))


def build_system(mech: BranchingMechanism, law: OffspringLaw,
                 h: RateFunction, k: int, gamma_k: float) -> GWSystem:
    return GWSystem(k, float(gamma_k), offspring_for_mechanism(mech, k, gamma_k),
                    division_family(law, h, k, gamma_k))


# ---------------------------------------------------------------------------
# convergence verification
# ---------------------------------------------------------------------------

def convergence_report(systems, mech: BranchingMechanism, law: OffspringLaw,
                       h: RateFunction, lam_grid=None, x_grid=None,
                       y_grid=None) -> dict:
    """Numeric check of the rescaled-mechanism and generator limits.

    Per system, reports the grid maxima of

        |e^{lam2} PhiY(lam2; x, y) + h(x, y) phi2(lam2)|       (rate limit)
        |A_k e_lam(z) - A e_lam(z)|                            (generator)

    together with the maximal difference quotients of PhiX and PhiY on the
    lam grid (finite-grid evidence for the uniform-Lipschitz hypotheses) and
    the empirical decay order of both errors in gamma_k.
    """
    lam_grid = np.asarray(lam_grid if lam_grid is not None
                          else [0.5, 1.0, 2.0], dtype=float)
    x_grid = np.asarray(x_grid if x_grid is not None
                        else [0.0, 0.5, 1.0, 2.0], dtype=float)
    y_grid = np.asarray(y_grid if y_grid is not None
                        else np.arange(0, 11), dtype=int)
    rows = []
    for sys in systems:
        err2 = 0.0
        for lam2 in lam_grid:
            p2 = law.phi2(float(lam2))
            for xv in x_grid:
                x_k = math.floor(sys.k * xv) / sys.k
                for yv in y_grid:
                    lhs = math.exp(lam2) * sys.phi_y(float(lam2), xv, int(yv))
                    target = float(np.asarray(h.value(x_k, int(yv))))
                    err2 = max(err2, abs(lhs + target * p2))
        errA = 0.0
        for lam1 in lam_grid:
            for lam2 in lam_grid:
                for xv in x_grid:
                    x_k = math.floor(sys.k * xv) / sys.k
                    for yv in y_grid:
                        z = (x_k, int(yv))
                        ak = sys.generator_elambda(z, (float(lam1), float(lam2)))
                        a = float(generator_elambda(
                            mech, law, h, z, (float(lam1), float(lam2))))
                        errA = max(errA, abs(ak - a))
        dense = np.linspace(lam_grid.min(), lam_grid.max(), 41)
        qx = np.abs(np.diff([sys.phi_x(l) for l in dense])
                    / np.diff(dense)).max()
        qy = 0.0
        for xv in x_grid[:2]:
            for yv in y_grid[:3]:
                vals = [sys.phi_y(float(l), xv, int(yv)) for l in dense]
                qy = max(qy, float(np.abs(np.diff(vals) / np.diff(dense)).max()))
        rows.append({"k": sys.k, "gamma_k": sys.gamma_k,
                     "max_err_phi2": err2, "max_err_Ak": errA,
                     "lipschitz_phi_x": float(qx), "lipschitz_phi_y": qy})
    out = {"per_k": rows}
    if len(rows) >= 2:
        g = np.log([r["gamma_k"] for r in rows])
        for key, name in (("max_err_phi2", "order_phi2"),
                          ("max_err_Ak", "order_Ak")):
            e = np.array([r[key] for r in rows])
            if np.all(e > 0):
                slope = np.polyfit(g, np.log(e), 1)[0]
                out[name] = float(-slope)
    return out
