"""Figure rendering for the report path.

One PNG per run, built from the results payload (never from module state),
saved with fixed metadata so repeated runs produce identical bytes.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

_SAVE_KW = {"dpi": 110, "metadata": {"Software": "msbp"}}


def render(kind: str, results: dict, path) -> None:
    fig = _BUILDERS[kind](results)
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)


def _fig_simulate(res):
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    curve = res["moment_curve"]
    t = [r["t"] for r in curve]
    m = [r["mean_total"] for r in curve]
    se = [r["stderr"] for r in curve]
    ax.errorbar(t, m, yerr=[3 * s for s in se], fmt="o-", ms=3,
                label="E[X+Y] (3 se)")
    ax.plot(t, [r["envelope"] for r in curve], "k--", lw=1,
            label="growth envelope")
    ax.plot(t, [r["mean_x"] for r in curve], alpha=0.6, label="E[X]")
    ax.plot(t, [r["mean_y"] for r in curve], alpha=0.6, label="E[Y]")
    ax.set_xlabel("t")
    ax.set_ylabel("first moment")
    ax.legend(frameon=False, fontsize=8)
    fig.tight_layout()
    return fig


def _fig_scaling(res):
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    rows = res["comparison"]
    lams = sorted({tuple(r["lambda"]) for r in rows})
    for lam in lams:
        sel = [r for r in rows if tuple(r["lambda"]) == lam]
        ks = [r["k"] for r in sel]
        ax.plot(ks, [abs(r["diff"]) for r in sel], "o-", ms=4,
                label=f"lam={lam}")
        ax.plot(ks, [r["tolerance"] for r in sel], ":", color="gray", lw=1)
    ax.set_xlabel("k")
    ax.set_ylabel("|Laplace diff| (dots) vs tolerance (dotted)")
    ax.set_xscale("log")
    ax.legend(frameon=False, fontsize=8)
    fig.tight_layout()
    return fig


def _fig_martingale(res):
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for curve in res["curves"]:
        t = curve["t"]
        r = curve["residual"]
        se = curve["stderr"]
        ax.errorbar(t, r, yerr=[3 * s for s in se], fmt="o-", ms=3,
                    label=f"lam={tuple(curve['lambda'])}")
    ax.axhline(0.0, color="k", lw=0.8)
    ax.set_xlabel("t")
    ax.set_ylabel("residual R(t) (3 se)")
    ax.legend(frameon=False, fontsize=8)
    fig.tight_layout()
    return fig


def _fig_extinction(res):
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ladder = res["ladder"]
    t = [r["T"] for r in ladder]
    for name in ("x", "y", "joint"):
        frac = [r[f"frac_{name}"] for r in ladder]
        lo = [r[f"ci_{name}"][0] for r in ladder]
        hi = [r[f"ci_{name}"][1] for r in ladder]
        ax.plot(t, frac, "o-", ms=4, label=f"frac {name}")
        ax.fill_between(t, lo, hi, alpha=0.2)
    ax.set_xlabel("horizon T")
    ax.set_ylabel("fraction extinct")
    ax.set_ylim(0, 1.02)
    ax.legend(frameon=False, fontsize=8)
    fig.tight_layout()
    return fig


def _fig_coupling(res):
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    t = res["t_grid"]
    ef = res["EF_values"]
    se = res["EF_stderr"]
    ax.errorbar(t, ef, yerr=[3 * s for s in se], fmt="o-", ms=4,
                label="E[F(t)] (3 se)")
    bound = [res["F0"] * pow(2.718281828459045,
                             -res["lambda_pred"] * ti) for ti in t]
    ax.plot(t, bound, "k--", lw=1,
            label=f"F0 exp(-{res['lambda_pred']:.3g} t)")
    for row in res.get("w1_check", []):
        ax.plot([row["t"]], [row["w1"]], "rx", ms=7)
    ax.set_yscale("log")
    ax.set_xlabel("t")
    ax.set_ylabel("coupled distance (x: exact W1)")
    ax.legend(frameon=False, fontsize=8)
    fig.tight_layout()
    return fig


def _fig_generator_check(res):
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    rows = res["per_k"]
    g = [r["gamma_k"] for r in rows]
    ax.loglog(g, [r["max_err_phi2"] for r in rows], "o-", label="rate limit")
    ax.loglog(g, [r["max_err_Ak"] for r in rows], "s-", label="generator")
    ax.set_xlabel("gamma_k")
    ax.set_ylabel("max grid error")
    ax.legend(frameon=False, fontsize=8)
    fig.tight_layout()
    return fig


_BUILDERS = {
    "simulate": _fig_simulate,
    "scaling": _fig_scaling,
    "martingale": _fig_martingale,
    "extinction": _fig_extinction,
    "coupling": _fig_coupling,
    "generator-check": _fig_generator_check,
}
