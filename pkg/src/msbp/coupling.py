"""Reflection/synchronous coupling of two copies of the mixed-state system.

Two copies (X, Y) and (Xt, Yt) are driven so that each is, marginally, the
original process, while the pair contracts:

* diffusion: opposite-signed Brownian increments until the X copies meet,
  shared increments afterwards (reflection coupling);
* X jumps: one shared clock of rate max(X, Xt) m(R+); a candidate with
  uniform mark u * max <= min lands on both copies with the same size,
  otherwise only on the larger copy;
* divisions: one shared clock of rate max(gamma, gamma_t), with
  gamma = y h(x, y); a mark below min(gamma, gamma_t) moves both copies by
  the same offspring increment, a mark between min and max moves only the
  copy with the larger rate.

For the distance F(z, zt) = |x - xt| + theta |y - yt| the coupling
generator evaluates in closed form: common moves preserve F, single X jumps
cancel against their compensator, the diffusion terms vanish because F is
piecewise linear, leaving

    A~ F = -b |x - xt| + theta [ (gamma - gamma_t)^+ J+(y - yt)
                                + (gamma - gamma_t)^- J-(y - yt) ],

with J+(d) = sum (|d + i| - |d|) n(i) and J-(d) = J+(-d).  For the affine
rate family h = r + x m(y) with b > 0, R1 < 0 and R2 = sup m(y) y < inf,
choosing theta = theta1 ^ theta2 with

    theta1 = b / (2 R2 int|i| n(di)),    theta2 = -b / (2 R1 R2)

makes A~ F <= -lambda F with lambda > 0, which is the contraction behind
exponential decay of the L1-Wasserstein distance; ``contraction_constants``
computes the thetas and calibrates lambda by a grid sweep (the proof's rate
is implicit, the sweep is reproducible and conservative).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import ConditionFailError, ModelError, SizeLimitError
from .mechanisms import (BranchingMechanism, ErgodicAffineRate, OffspringLaw,
                         RateFunction)
from .mcstats import RandomStream, fit_decay
from .sde import DOMINATOR_SAFETY, SimScheme, _XKernel

W1_SIZE_CAP = 2048

# rng sub-stream tags for the coupled engine
XJ_STREAM, DIFF_STREAM, YJ_STREAM = 0, 1, 2


@dataclass
class CoupledState:
    """One coupled pair: z = (x, y), zt = (xt, yt), plus coupling metadata."""

    x: float
    y: int
    xt: float
    yt: int
    x_coalesced: bool
    theta: float


@dataclass(frozen=True)
class ContractionConstants:
    theta1: float
    theta2: float
    theta: float
    r1: float
    r2: float
    abs_n_moment: float
    lambda_pred: float
    degenerate: bool = False   # R2 == 0: constant-rate special case

    def to_dict(self):
        return {"theta1": self.theta1, "theta2": self.theta2,
                "theta": self.theta, "R1": self.r1, "R2": self.r2,
                "abs_n_moment": self.abs_n_moment,
                "lambda_pred": self.lambda_pred,
                "degenerate": self.degenerate}


# ---------------------------------------------------------------------------
# coupling generator on F
# ---------------------------------------------------------------------------

def _offspring_drift(law: OffspringLaw, d):
    """J+(d) = sum_i (|d + i| - |d|) n(i), vectorized over d."""
    d = np.asarray(d, dtype=float)
    out = np.zeros_like(d)
    for i, prob in zip(law.xi_values, law.probs):
        if prob == 0.0:
            continue
        out += prob * (np.abs(d + i) - np.abs(d))
    return out


def coupling_generator_F(mech: BranchingMechanism, law: OffspringLaw,
                         h: RateFunction, z, zt, theta: float,
                         return_flags: bool = False):
    """Exact value of the coupling generator on F = |dx| + theta |dy|.

    At x = xt or y = yt the one-sided evaluation is returned (the drift term
    vanishes on the X diagonal; the division terms stay defined) and, when
    ``return_flags`` is set, flagged as on-diagonal.
    """
    x, y = np.asarray(z[0], dtype=float), np.asarray(z[1])
    xt, yt = np.asarray(zt[0], dtype=float), np.asarray(zt[1])
    dx = x - xt
    d = np.asarray(y, dtype=float) - np.asarray(yt, dtype=float)
    gam = np.asarray(h.value(x, y), dtype=float) * np.asarray(y, dtype=float)
    gamt = (np.asarray(h.value(xt, yt), dtype=float)
            * np.asarray(yt, dtype=float))
    diff = gam - gamt
    val = (-mech.b * np.abs(dx)
           + theta * (np.maximum(diff, 0.0) * _offspring_drift(law, d)
                      + np.maximum(-diff, 0.0) * _offspring_drift(law, -d)))
    if return_flags:
        return val, (dx == 0) | (d == 0)
    return val


def _sweep_grid(law: OffspringLaw, h: RateFunction, n_random: int,
                gen: np.random.Generator):
    """Structured corner cases plus a random cloud of state pairs."""
    xs = [0.0, 0.0, 1.0, 2.0, 5.0, 0.3]
    xts = [0.0, 0.0, 2.0, 1.0, 0.0, 0.3]
    ys = [2, 5, 3, 0, 7, 4]
    yts = [1, 0, 3, 4, 7, 2]
    x = np.concatenate([xs, gen.uniform(0, 8, n_random)])
    xt = np.concatenate([xts, gen.uniform(0, 8, n_random)])
    y = np.concatenate([ys, gen.integers(0, 12, n_random)])
    yt = np.concatenate([yts, gen.integers(0, 12, n_random)])
    return (x, y), (xt, yt)


def contraction_constants(mech: BranchingMechanism, law: OffspringLaw,
                          h: RateFunction, n_grid: int = 10_000,
                          grid_seed: int = 1234) -> ContractionConstants:
    """theta1, theta2, theta = min, and the swept contraction rate.

    lambda_pred is the largest lambda with A~F <= -lambda F over the default
    grid (structured corner states plus a seeded random cloud).
    """
    if not isinstance(h, ErgodicAffineRate):
        raise ModelError("contraction constants require the affine rate family")
    if mech.b <= 0:
        raise ConditionFailError(
            "drift-positivity", f"requires b > 0, got b={mech.b}")
    r1 = law.r1
    if r1 >= 0:
        raise ConditionFailError(
            "offspring-subcriticality", f"requires R1 < 0, got R1={r1}")
    r2 = h.r2
    if not math.isfinite(r2):
        raise ConditionFailError(
            "rate-boundedness", "requires R2 = sup m(y) y < inf")
    absn = law.abs_moment
    if r2 == 0.0:
        # constant rate: the theta formulas divide by R2; any theta works,
        # the contraction comes from b and r |R1| separately.
        theta1 = theta2 = math.inf
        theta = 1.0
        degenerate = True
    else:
        theta1 = mech.b / (2.0 * r2 * absn)
        theta2 = -mech.b / (2.0 * r1 * r2)
        theta = min(theta1, theta2)
        degenerate = False
    gen = np.random.Generator(np.random.Philox(key=[grid_seed, 0]))
    z, zt = _sweep_grid(law, h, n_grid, gen)
    val = coupling_generator_F(mech, law, h, z, zt, theta)
    fval = np.abs(z[0] - zt[0]) + theta * np.abs(
        np.asarray(z[1], dtype=float) - np.asarray(zt[1], dtype=float))
    keep = fval > 0
    lam_pred = float(np.min(-val[keep] / fval[keep]))
    return ContractionConstants(theta1, theta2, theta, r1, r2, absn,
                                lam_pred, degenerate)


# ---------------------------------------------------------------------------
# coupled simulation
# ---------------------------------------------------------------------------

@dataclass
class CoupledBatch:
    n: int
    x: np.ndarray
    y: np.ndarray
    xt: np.ndarray
    yt: np.ndarray
    x_coalesced: np.ndarray     # bool; true once the X copies met
    meet_time: np.ndarray       # X meeting time (nan if not met)
    snapshots: dict             # t -> (x, y, xt, yt) copies


class _CoupledYKernel:
    """Shared-clock thinning for the division pair over one grid cell."""

    def __init__(self, law: OffspringLaw, h: RateFunction):
        self.law = law
        self.h = h

    def _gammas(self, x, y, xt, yt):
        g = np.asarray(self.h.value(x, y), dtype=float) * y
        gt = np.asarray(self.h.value(xt, yt), dtype=float) * yt
        return g, gt

    def window(self, y, yt, xl, xr, xtl, xtr, t0, dt, gen):
        g_ll, gt_ll = self._gammas(xl, y, xtl, yt)
        g_lr, gt_lr = self._gammas(xr, y, xtr, yt)
        lam = DOMINATOR_SAFETY * np.maximum(np.maximum(g_ll, gt_ll),
                                            np.maximum(g_lr, gt_lr))
        act = np.nonzero(lam > 0)[0]
        if act.size == 0:
            return
        counts = gen.poisson(lam[act] * dt)
        single = counts == 1
        busy = counts >= 2

        if np.any(single):
            rows = act[single]
            s = gen.uniform(0.0, dt, rows.size)
            self._candidate(y, yt, xl, xtl, rows, lam[rows], gen,
                            xr, xtr, t0 + s, t0, dt)
        if np.any(busy):
            for i in np.nonzero(busy)[0]:
                r = int(act[i])
                times = np.sort(gen.uniform(0.0, dt, int(counts[i])))
                for j in range(int(counts[i])):
                    applied = self._candidate(
                        y, yt, xl, xtl, np.array([r]), lam[r:r + 1], gen,
                        xr, xtr, np.array([t0 + times[j]]), t0, dt)
                    if applied:
                        break  # continuation already covered the remainder

    def _candidate(self, y, yt, xl, xtl, rows, lam, gen, xr, xtr,
                   t_cand, t0, dt):
        """Classify one candidate per row; apply jumps; run continuations.

        Returns True when at least one jump was applied (scalar-row mode).
        """
        g, gt = self._gammas(xl[rows], y[rows], xtl[rows], yt[rows])
        hi = np.maximum(g, gt)
        lo = np.minimum(g, gt)
        v = gen.random(rows.size) * lam
        real = v < hi
        common = v < lo
        single_big = real & ~common
        applied = False
        if np.any(common):
            rs = rows[common]
            xi = self.law.sample_xi(rs.size, gen)
            y[rs] += xi
            yt[rs] += xi
            applied = True
        if np.any(single_big):
            rs = rows[single_big]
            xi = self.law.sample_xi(rs.size, gen)
            to_first = g[single_big] >= gt[single_big]
            y[rs[to_first]] += xi[to_first]
            yt[rs[~to_first]] += xi[~to_first]
            applied = True
        if applied:
            moved = rows[real]
            self._continue(y, yt, xl, xr, xtl, xtr, t_cand[real], moved,
                           gen, t0, dt)
        return applied

    def _continue(self, y, yt, xl, xr, xtl, xtr, t_from, rows, gen, t0, dt):
        """Fresh shared-clock thinning on the cell remainder (exact)."""
        t_end = t0 + dt
        cur = np.array(t_from, dtype=float, copy=True)
        idx = np.array(rows, copy=True)
        while idx.size:
            g_ll, gt_ll = self._gammas(xl[idx], y[idx], xtl[idx], yt[idx])
            g_lr, gt_lr = self._gammas(xr[idx], y[idx], xtr[idx], yt[idx])
            lam = DOMINATOR_SAFETY * np.maximum(np.maximum(g_ll, gt_ll),
                                                np.maximum(g_lr, gt_lr))
            alive = lam > 0
            idx, cur, lam = idx[alive], cur[alive], lam[alive]
            if idx.size == 0:
                break
            cur = cur + gen.exponential(1.0, idx.size) / lam
            inside = cur < t_end
            idx, cur, lam = idx[inside], cur[inside], lam[inside]
            if idx.size == 0:
                break
            g, gt = self._gammas(xl[idx], y[idx], xtl[idx], yt[idx])
            hi, lo = np.maximum(g, gt), np.minimum(g, gt)
            v = gen.random(idx.size) * lam
            common = v < lo
            single_big = (v < hi) & ~common
            if np.any(common):
                rs = idx[common]
                xi = self.law.sample_xi(rs.size, gen)
                y[rs] += xi
                yt[rs] += xi
            if np.any(single_big):
                rs = idx[single_big]
                xi = self.law.sample_xi(rs.size, gen)
                to_first = g[single_big] >= gt[single_big]
                y[rs[to_first]] += xi[to_first]
                yt[rs[~to_first]] += xi[~to_first]
            # all surviving rows keep walking from their candidate times


def simulate_coupled_batch(mech: BranchingMechanism, law: OffspringLaw,
                           h: RateFunction, z0, zt0, scheme: SimScheme,
                           stream: RandomStream, n: int,
                           record_times=(), step_hook=None) -> CoupledBatch:
    """n independent coupled pairs, reflection for the diffusion part and
    shared clocks for both jump parts."""
    xkern = _XKernel(mech, scheme)
    gen_j = stream.child(XJ_STREAM).generator()
    gen_d = stream.child(DIFF_STREAM).generator()
    gen_y = stream.child(YJ_STREAM).generator()
    ykern = _CoupledYKernel(law, h)
    edges = scheme.grid()

    x = np.full(n, float(z0[0]))
    y = np.full(n, int(z0[1]), dtype=np.int64)
    xt = np.full(n, float(zt0[0]))
    yt = np.full(n, int(zt0[1]), dtype=np.int64)
    met = np.full(n, x[0] == xt[0] if n else True)
    meet_time = np.where(met, 0.0, np.nan)

    from .sde import _snap_plan
    record = _snap_plan(record_times, edges)
    snaps = {}

    def snap(t):
        if t in record:
            snaps[record[t]] = (x.copy(), y.copy(), xt.copy(), yt.copy())

    if step_hook is not None:
        step_hook(0.0, x, y, xt, yt)
    snap(0.0)

    mbar = xkern.mbar
    drift = xkern.drift
    c = mech.c
    for t_lo, t_hi in zip(edges[:-1], edges[1:]):
        dt = float(t_hi - t_lo)
        t0 = float(t_lo)
        xl, xtl = x.copy(), xt.copy()

        # shared finite-activity jump clock at the frozen left values
        if mbar > 0:
            hi = np.maximum(x, xt)
            lo = np.minimum(x, xt)
            counts = gen_j.poisson(mbar * hi * dt)
            rows = np.nonzero(counts)[0]
            for r in rows:
                for _ in range(int(counts[r])):
                    size = float(xkern.measure.sample(1, gen_j)[0])
                    if gen_j.random() * hi[r] <= lo[r]:
                        x[r] += size
                        xt[r] += size
                    elif x[r] >= xt[r]:
                        x[r] += size
                    else:
                        xt[r] += size

        # reflected / synchronous diffusion substep
        z = gen_d.standard_normal(n)
        sgn = np.where(met, 1.0, -1.0)
        d_pre = x - xt
        x = np.maximum(0.0, x - drift * x * dt + np.sqrt(2 * c * x * dt) * z)
        xt = np.maximum(0.0, xt - drift * xt * dt
                        + np.sqrt(2 * c * xt * dt) * sgn * z)
        if c > 0:
            d_post = x - xt
            tol = np.sqrt(2 * c * np.maximum(x, xt) * dt)
            crossed = ~met & ((np.sign(d_post) != np.sign(d_pre))
                              | (np.abs(d_post) <= tol))
            if np.any(crossed):
                mid = 0.5 * (x[crossed] + xt[crossed])
                x[crossed] = mid
                xt[crossed] = mid
                meet_time[crossed] = t_hi
                met |= crossed
        else:
            exact = ~met & (x == xt)
            meet_time[exact] = t_hi
            met |= exact

        # shared division clock
        ykern.window(y, yt, xl, x, xtl, xt, t0, dt, gen_y)

        t = float(t_hi)
        if step_hook is not None:
            step_hook(t, x, y, xt, yt)
        snap(t)

    return CoupledBatch(n, x, y, xt, yt, met, meet_time, snaps)


# ---------------------------------------------------------------------------
# Wasserstein machinery
# ---------------------------------------------------------------------------

def empirical_w1(samples_a, samples_b, y_weight: float = 1.0) -> float:
    """Exact W1 between two equal-size empirical clouds on D.

    Cost |dx| + y_weight * |dy| per pair; solved as an assignment problem
    (Jonker-Volgenant, cubic time), mean transport cost returned.
    """
    a = np.asarray(samples_a, dtype=float)
    b = np.asarray(samples_b, dtype=float)
    if a.shape != b.shape or a.ndim != 2 or a.shape[1] != 2:
        raise ModelError("need two equally sized (n, 2) sample arrays")
    n = a.shape[0]
    if n > W1_SIZE_CAP:
        raise SizeLimitError(f"n={n} exceeds the cap {W1_SIZE_CAP}")
    cost = (np.abs(a[:, None, 0] - b[None, :, 0])
            + y_weight * np.abs(a[:, None, 1] - b[None, :, 1]))
    rows, cols = linear_sum_assignment(cost)
    return float(cost[rows, cols].sum() / n)


def w1_decay(mech: BranchingMechanism, law: OffspringLaw, h: RateFunction,
             z0, zt0, t_grid, n: int, scheme: SimScheme,
             stream: RandomStream, theta: float = None,
             constants: ContractionConstants = None,
             w1_times=(), w1_subsample: int = 512) -> dict:
    """Coupling-based decay of E[|dX(t)| + theta |dY(t)|].

    Reports the per-time estimates with standard errors, a log-linear rate
    fit, the predicted contraction rate, and (at ``w1_times``) the exact
    empirical W1 between the two marginal clouds as a cross-check that the
    coupling bound dominates the true transport cost.
    """
    if constants is None:
        constants = contraction_constants(mech, law, h)
    if theta is None:
        theta = constants.theta
    t_grid = [float(t) for t in t_grid]
    res = simulate_coupled_batch(mech, law, h, z0, zt0, scheme, stream, n,
                                 record_times=sorted(set(t_grid) | set(w1_times)))
    f0 = abs(float(z0[0]) - float(zt0[0])) + theta * abs(
        float(z0[1]) - float(zt0[1]))
    out = {"theta": theta, "theta1": constants.theta1,
           "theta2": constants.theta2, "lambda_pred": constants.lambda_pred,
           "F0": f0, "t_grid": t_grid, "EF_values": [], "EF_stderr": [],
           "bound": [], "w1_check": [], "n": n}
    for t in t_grid:
        x, yv, xtv, ytv = res.snapshots[t]
        f = np.abs(x - xtv) + theta * np.abs(yv.astype(float) - ytv)
        out["EF_values"].append(float(f.mean()))
        out["EF_stderr"].append(float(f.std(ddof=1) / math.sqrt(max(n, 2))))
        out["bound"].append(f0 * math.exp(-constants.lambda_pred * t))
    try:
        fit = fit_decay(out["t_grid"], out["EF_values"], out["EF_stderr"])
    except Exception as exc:  # all-zero decay curves etc.
        fit = {"lambda_fit": math.inf, "intercept": 0.0, "ci": (None, None),
               "note": str(exc)}
    out["lambda_fit"] = fit.get("lambda_fit")
    out["fit"] = fit
    m = min(w1_subsample, n, W1_SIZE_CAP)
    for t in w1_times:
        x, yv, xtv, ytv = res.snapshots[float(t)]
        cloud_a = np.column_stack([x[:m], yv[:m]])
        cloud_b = np.column_stack([xtv[:m], ytv[:m]])
        w1 = empirical_w1(cloud_a, cloud_b, y_weight=theta)
        f = np.abs(x - xtv) + theta * np.abs(yv.astype(float) - ytv)
        out["w1_check"].append({
            "t": float(t), "w1": w1, "coupling_bound": float(f.mean()),
            "stderr": float(f.std(ddof=1) / math.sqrt(max(n, 2)))})
    return out
