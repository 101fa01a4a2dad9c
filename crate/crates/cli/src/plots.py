#!/usr/bin/env python3
"""Render run outputs written by `memstab run`.

    python3 plots.py plot-energy <dir>     -> <dir>/energy.png
    python3 plots.py plot-solution <dir>   -> <dir>/solution.png
"""

import csv
import math
import os
import sys

ENERGY_HEADER = ["t", "E"]
SNAPSHOT_HEADER = ["t", "x", "y"]


class PlotError(Exception):
    pass


def read_rows(path, header):
    if not os.path.isfile(path):
        raise PlotError(f"{path}: not found")
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        found = next(reader, None)
        if found != header:
            raise PlotError(f"{path}: expected header {','.join(header)}, found {found}")
        rows = []
        for lineno, rec in enumerate(reader, start=2):
            if len(rec) != len(header):
                raise PlotError(f"{path}:{lineno}: expected {len(header)} fields")
            try:
                rows.append([float(v) for v in rec])
            except ValueError as e:
                raise PlotError(f"{path}:{lineno}: {e}") from None
    if not rows:
        raise PlotError(f"{path}: no data rows")
    return rows


def read_summary(path):
    out = {}
    if os.path.isfile(path):
        with open(path) as fh:
            for line in fh:
                key, sep, value = line.partition(" = ")
                if sep:
                    out[key.strip()] = value.strip()
    return out


def as_float(summary, key):
    try:
        v = float(summary[key])
    except (KeyError, ValueError):
        return None
    return v if math.isfinite(v) else None


def log_fit(xs, ys):
    n = len(xs)
    xm = sum(xs) / n
    ym = sum(ys) / n
    sxx = sum((x - xm) ** 2 for x in xs)
    if sxx == 0:
        return None
    slope = sum((x - xm) * (y - ym) for x, y in zip(xs, ys)) / sxx
    return -slope, math.exp(ym - slope * xm)


def envelopes(t, e, summary):
    """Exponential A e^{-c t} and polynomial A (1+t)^{-b} envelopes.

    Uses the fitted values from summary.txt when present, else refits over
    the middle 60% of the time span.
    """
    fits = {}
    for prefix in ("exp_fit", "poly_fit"):
        rate = as_float(summary, f"{prefix}_rate")
        amp = as_float(summary, f"{prefix}_amplitude")
        if rate is not None and amp is not None:
            fits[prefix] = (rate, amp)
    if len(fits) < 2 and len(t) >= 2:
        lo = t[0] + 0.2 * (t[-1] - t[0])
        hi = t[0] + 0.8 * (t[-1] - t[0])
        pts = [(ti, ei) for ti, ei in zip(t, e) if lo <= ti <= hi and ei > 0]
        if len(pts) >= 2:
            ts = [p[0] for p in pts]
            ls = [math.log(p[1]) for p in pts]
            fits.setdefault("exp_fit", log_fit(ts, ls))
            fits.setdefault("poly_fit", log_fit([math.log1p(x) for x in ts], ls))
    curves = []
    if fits.get("exp_fit"):
        c, a = fits["exp_fit"]
        curves.append((f"exponential, rate {c:.4g}", [a * math.exp(-c * x) for x in t]))
    if fits.get("poly_fit"):
        b, a = fits["poly_fit"]
        curves.append((f"polynomial, exponent {b:.4g}", [a * (1 + x) ** (-b) for x in t]))
    return curves


def pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def plot_energy(directory):
    rows = read_rows(os.path.join(directory, "energy.csv"), ENERGY_HEADER)
    t = [r[0] for r in rows]
    e = [r[1] for r in rows]
    if any(not math.isfinite(v) for v in e):
        raise PlotError("energy.csv contains non-finite values")
    summary = read_summary(os.path.join(directory, "summary.txt"))
    plt = pyplot()
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.semilogy(t, e, "k-", lw=1.5, label="E(t)")
    for (label, curve), style in zip(envelopes(t, e, summary), ("--", ":")):
        ax.semilogy(t, curve, style, lw=1.2, label=label)
    ax.set_xlabel("t")
    ax.set_ylabel("E(t)")
    ax.legend()
    fig.tight_layout()
    out = os.path.join(directory, "energy.png")
    fig.savefig(out, dpi=120)
    plt.close(fig)
    return out


def plot_solution(directory):
    rows = read_rows(os.path.join(directory, "snapshots.csv"), SNAPSHOT_HEADER)
    times = []
    curves = {}
    for t, x, y in rows:
        if t not in curves:
            times.append(t)
            curves[t] = ([], [])
        curves[t][0].append(x)
        curves[t][1].append(y)
    plt = pyplot()
    out = os.path.join(directory, "solution.png")
    if len(times) == 1:
        fig, ax = plt.subplots(figsize=(6, 4))
        xs, ys = curves[times[0]]
        ax.plot(xs, ys, "k-")
        ax.set_xlabel("x")
        ax.set_ylabel(f"y(x, {times[0]:.4g})")
    else:
        fig = plt.figure(figsize=(7, 5))
        ax = fig.add_subplot(projection="3d")
        cmap = plt.get_cmap("viridis")
        for k, t in enumerate(times):
            xs, ys = curves[t]
            ax.plot(xs, [t] * len(xs), ys, color=cmap(k / max(len(times) - 1, 1)), lw=0.8)
        ax.set_xlabel("x")
        ax.set_ylabel("t")
        ax.set_zlabel("y")
    fig.tight_layout()
    fig.savefig(out, dpi=120)
    plt.close(fig)
    return out


COMMANDS = {"plot-energy": plot_energy, "plot-solution": plot_solution}


def main(argv):
    if len(argv) != 3 or argv[1] not in COMMANDS:
        print(f"usage: {argv[0]} {{{'|'.join(COMMANDS)}}} <dir>", file=sys.stderr)
        return 2
    try:
        print(COMMANDS[argv[1]](argv[2]))
    except PlotError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main(sys.argv))
