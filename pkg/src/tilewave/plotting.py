"""SVG plots of suite rows; every plotted value is a column of the suite's CSV."""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

# suite -> (row filter (key, value) or None, x column, y columns, log-scale y)
PLOTS = {
    "kernels-verify": (("kind", "delta"), "k", ["log2_sup_plus_absk"], False),
    "osc-bench": (None, "delta", ["ratio"], False),
    "tiles-decompose": (None, "instance", ["density_constant", "size_constant"], False),
    "tree-lemma": (None, "instance", ["ratio"], True),
    "bilinear": (None, "log2_ratio", ["ratio"], False),
    "averaging-beta": (("kind", "covariance"), "instance", ["trans", "dil", "mod"], True),
    "ergodic-probe": (("kind", "probe_block"), "block", ["block_max"], True),
    "conjecture-jh": (None, "n", ["ratio"], False),
}


def _numeric(rows, key):
    out = []
    for r in rows:
        v = r.get(key)
        out.append(float(v) if isinstance(v, (int, float, np.floating, np.integer)) and not isinstance(v, bool)
                   else np.nan)
    return np.array(out)


def plot_rows(suite: str, rows: list, path) -> bool:
    """Write ``path`` as SVG; returns False when the suite has no plot or no plottable rows."""
    if suite not in PLOTS:
        return False
    filt, xkey, ykeys, logy = PLOTS[suite]
    if filt is not None:
        rows = [r for r in rows if r.get(filt[0]) == filt[1]]
    x = _numeric(rows, xkey)
    fig, ax = plt.subplots(figsize=(6, 4))
    drawn = False
    for key in ykeys:
        y = _numeric(rows, key)
        ok = np.isfinite(x) & np.isfinite(y)
        if logy:
            ok &= y > 0
        if ok.any():
            ax.plot(x[ok], y[ok], "o", ms=4, label=key)
            drawn = True
    if drawn:
        if logy:
            ax.set_yscale("log")
        if suite == "osc-bench":
            ax.set_xscale("log", base=2)
        ax.set_xlabel(xkey)
        ax.set_title(suite)
        ax.legend()
        fig.tight_layout()
        with plt.rc_context({"svg.hashsalt": "tilewave", "svg.fonttype": "none"}):
            fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return drawn
