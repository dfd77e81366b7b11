"""Plot net synergy and the MMI terms against source-source correlation b.

    python3 scripts/plot_sweep.py --out sweep.png

Needs matplotlib (``pip install -e .[plot]``).
"""
import argparse

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from gausspid.pid import b_bounds, linear_grid, sweep_univariate  # noqa: E402

CASES = [(0.5, 0.5), (0.5, -0.5), (0.25, 0.75)]


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--out", default="sweep.png")
    ap.add_argument("--steps", type=int, default=400)
    args = ap.parse_args(argv)

    fig, axes = plt.subplots(1, len(CASES), figsize=(4 * len(CASES), 3.2), sharey=True)
    for ax, (a, c) in zip(axes, CASES):
        lo, hi = b_bounds(a, c)
        sw = sweep_univariate(a, c, linear_grid(max(lo, -0.99) + 1e-3, min(hi, 0.99) - 1e-3, args.steps))
        b = sw.column("b")
        for name in ("wms", "redundancy", "synergy"):
            ax.plot(b, sw.column(name), label=name)
        ax.set_title(f"a={a}, c={c}")
        ax.set_xlabel("b")
        ax.axhline(0, color="0.7", lw=0.5)
    axes[0].set_ylabel("nats")
    axes[0].legend()
    fig.tight_layout()
    fig.savefig(args.out, dpi=120)
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
