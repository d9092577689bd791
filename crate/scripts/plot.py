#!/usr/bin/env python3
"""Plot noma-sec CSV output.

    python3 scripts/plot.py intercept_vs_snr.csv [more.csv ...]

Needs pandas and matplotlib. Each input gets a PNG next to it.
"""

import sys
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import pandas as pd


def command_of(path):
    with open(path) as f:
        first = f.readline().split()
    return first[-1] if first[:2] == ["#", "noma-sec"] else None


def intercept(df, x, ax):
    for (eta, alpha), g in df.groupby(["eta", "alpha_f"]):
        ax.errorbar(g[x], g["p_int_mc"], yerr=3 * g["p_int_mc_stderr"], fmt="o", ms=3,
                    label=f"sim eta={eta} aF={alpha}")
        if g["p_int_analytical"].notna().any():
            ax.plot(g[x], g["p_int_analytical"], "-", lw=1, label=f"ana eta={eta} aF={alpha}")
    ax.set_xlabel("transmit SNR (dB)" if x == "snr_db" else "rho")
    ax.set_ylabel("intercept probability")


def compare(df, fig):
    a, b = fig.subplots(1, 2)
    for col, name in [("rate_oracle", "oracle"), ("rate_dl", "network"), ("rate_random", "random")]:
        a.plot(df["rho"], df[col], "o-", label=name)
    a.set_xlabel("rho")
    a.set_ylabel("far-user rate (bit/s/Hz)")
    a.legend()
    b.semilogy(df["rho"], df["time_oracle_s"], "o-", label="oracle")
    b.semilogy(df["rho"], df["time_dl_s"], "s-", label="network")
    b.set_xlabel("rho")
    b.set_ylabel("time (s)")
    b.legend()


def main(paths):
    for p in paths:
        cmd = command_of(p)
        df = pd.read_csv(p, comment="#")
        fig = plt.figure(figsize=(9, 4))
        if cmd == "intercept-vs-snr":
            ax = fig.subplots()
            intercept(df, "snr_db", ax)
            ax.legend(fontsize=7)
        elif cmd == "intercept-vs-rho":
            ax = fig.subplots()
            intercept(df, "rho", ax)
            ax.legend(fontsize=7)
        elif cmd == "compare":
            compare(df, fig)
        elif cmd == "train":
            ax = fig.subplots()
            ax.semilogy(df["epoch"], df["loss"])
            ax.set_xlabel("epoch")
            ax.set_ylabel("training loss")
        else:
            sys.exit(f"{p}: not a noma-sec CSV")
        out = Path(p).with_suffix(".png")
        fig.tight_layout()
        fig.savefig(out, dpi=120)
        print(out)


if __name__ == "__main__":
    if len(sys.argv) < 2:
        sys.exit(__doc__)
    main(sys.argv[1:])
