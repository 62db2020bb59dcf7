"""Matplotlib rendering of the figure CSVs (PNG next to each data file)."""
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

golden_mean = (np.sqrt(5) - 1.0) / 2.0
fig_width = 6.8
params = {
    "font.size": 9,
    "axes.labelsize": 10,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "mathtext.fontset": "stix",
    "font.family": "serif",
    "figure.dpi": 150,
    "savefig.dpi": 150,
    "lines.linewidth": 1.2,
    "lines.markersize": 3,
}
SCHEME_COLORS = {"polynomial": "tab:red", "piecewise": "tab:blue"}
TIER_STYLE = {"4L": "-", "4L-detuned": "--", "6L": "-", "grid": "o"}
POP_LABELS = {"P10": "|10>", "P00": "|00>", "P01": "|01>", "P11": "|11>"}


def _save(fig, path):
    path = Path(path)
    tmp = path.with_name(f".{path.stem}.tmp.png")
    # fixed metadata so repeated runs give identical files
    fig.savefig(tmp, metadata={"Software": None})
    plt.close(fig)
    tmp.replace(path)
    return path


def couplings(tables, path):
    with plt.rc_context(params):
        fig, axes = plt.subplots(1, len(tables), figsize=(fig_width, fig_width * golden_mean / 1.6), squeeze=False)
        for ax, (scheme, tab) in zip(axes[0], tables.items()):
            T = tab["t"][-1]
            ax.plot(tab["t"] / T, tab["omega_x"] * T, label=r"$\Omega_x T$")
            ax.plot(tab["t"] / T, tab["omega_rho"] * T, label=r"$\Omega_\rho T$")
            ax.set_title(scheme)
            ax.set_xlabel(r"$t/T$")
            ax.legend(frameon=False)
        fig.tight_layout()
        return _save(fig, path)


def controls(tables, path):
    with plt.rc_context(params):
        fig, axes = plt.subplots(2, len(tables), figsize=(fig_width, fig_width * golden_mean), squeeze=False,
                                 sharex=True)
        for j, (scheme, tab) in enumerate(tables.items()):
            T = tab["t"][-1]
            axes[0, j].plot(tab["t"] / T, tab["r_x_over_a"], lw=0.5, color=SCHEME_COLORS.get(scheme))
            axes[0, j].set_ylabel(r"$r_x / 2\ell$")
            axes[0, j].set_title(scheme)
            axes[1, j].plot(tab["t"] / T, tab["rho"], color=SCHEME_COLORS.get(scheme))
            axes[1, j].set_ylabel(r"$\rho$")
            axes[1, j].set_xlabel(r"$t/T$")
        fig.tight_layout()
        return _save(fig, path)


def populations(tables, path, title=""):
    """``tables`` maps tier -> trajectory columns for one scheme."""
    with plt.rc_context(params):
        fig, ax = plt.subplots(figsize=(fig_width / 2, fig_width / 2 * golden_mean * 1.3))
        colors = dict(zip(POP_LABELS, ("tab:blue", "tab:orange", "tab:green", "tab:red")))
        for tier, tab in tables.items():
            marker = tier == "grid"
            every = max(1, len(tab["t"]) // 40)
            for key, label in POP_LABELS.items():
                if key not in tab:
                    continue
                kw = {"ls": "none", "marker": "o", "markevery": every} if marker else {"ls": TIER_STYLE.get(tier, "-")}
                ax.plot(tab["t"], tab[key], color=colors[key], label=f"{label} {tier}", **kw)
            if "leakage" in tab:
                ax.plot(tab["t"], tab["leakage"], color="k", ls=":", label=f"1-sum {tier}")
            ax.plot(tab["t"], tab["fidelity"], color="purple", ls="-." if not marker else ":", label=f"F {tier}")
        ax.set_xlabel(r"$\omega t$")
        ax.set_ylim(-0.02, 1.02)
        ax.set_title(title)
        ax.legend(frameon=False, fontsize=6, ncol=2)
        fig.tight_layout()
        return _save(fig, path)


def fidelity_vs_T(rows, path):
    """``rows``: dict of columns scheme, tier, V0, T, fidelity."""
    with plt.rc_context(params):
        schemes = sorted(set(rows["scheme"]))
        fig, axes = plt.subplots(1, len(schemes), figsize=(fig_width, fig_width * golden_mean / 1.5), squeeze=False)
        for ax, scheme in zip(axes[0], schemes):
            for tier in sorted(set(rows["tier"])):
                for V0 in sorted(set(rows["V0"])):
                    sel = (rows["scheme"] == scheme) & (rows["tier"] == tier) & (rows["V0"] == V0)
                    if not np.any(sel):
                        continue
                    order = np.argsort(rows["T"][sel])
                    ax.plot(rows["T"][sel][order], rows["fidelity"][sel][order],
                            marker="o" if tier == "grid" else None, ls="-" if tier == "grid" else "--",
                            label=f"{tier} V0={V0:g}")
            ax.set_title(scheme)
            ax.set_xlabel(r"$\omega T$")
            ax.set_ylabel(r"$|\langle\psi(T)|-\rangle|^2$")
            ax.legend(frameon=False, fontsize=6)
        fig.tight_layout()
        return _save(fig, path)


def resonance(rows, path):
    with plt.rc_context(params):
        fig, ax = plt.subplots(figsize=(fig_width / 2, fig_width / 2 * golden_mean * 1.3))
        for scheme in sorted(set(rows["scheme"])):
            for tier in sorted(set(rows["tier"])):
                sel = (rows["scheme"] == scheme) & (rows["tier"] == tier)
                if not np.any(sel):
                    continue
                order = np.argsort(rows["detuning"][sel])
                style = {"grid": dict(ls="none", marker="o"), "4L-detuned": dict(ls="--"), "6L": dict(ls="-")}[tier]
                ax.plot(rows["detuning"][sel][order], rows["fidelity"][sel][order],
                        color=SCHEME_COLORS.get(scheme), label=f"{scheme} {tier}", **style)
        ax.set_xlabel(r"$(\omega_x + \omega_d)/\omega$")
        ax.set_ylabel("fidelity")
        ax.legend(frameon=False, fontsize=6)
        fig.tight_layout()
        return _save(fig, path)


def phase_map(field, half_width, path, title=""):
    with plt.rc_context(params):
        fig, ax = plt.subplots(figsize=(fig_width / 2, fig_width / 2))
        lim = np.max(np.abs(field))
        im = ax.imshow(field.T, origin="lower", extent=[-half_width, half_width, -half_width, half_width],
                       cmap="RdBu_r", vmin=-lim, vmax=lim)
        ax.set_xlabel(r"$x$")
        ax.set_ylabel(r"$y$")
        ax.set_title(title)
        fig.colorbar(im, ax=ax, shrink=0.8, label=r"$|\Psi|\arg\Psi$")
        fig.tight_layout()
        return _save(fig, path)
