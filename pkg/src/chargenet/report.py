"""Result emission: CSV artifacts, price statistics, and standalone SVG
charts (no plotting dependency, diffable output).

A solved or evaluated run becomes a directory of flat files:
design.csv, prices.csv, occupancy.csv, max_segment.csv, objective.csv,
iterations.csv (solve only) and summary.json.  ``render`` turns such a
directory into convergence/price/occupancy/segment charts plus a price
average/std table; with a second directory it adds a percent-diff
column.  Everything here only reads run directories, never mutates.
"""

import csv
import json
import os
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .bilevel import roll_occupancy
from .errors import ConfigError

PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
           "#8c564b", "#17becf", "#7f7f7f"]

ITERATION_FIELDS = ["k", "lbd", "ubd", "gap", "cuts", "seconds"]


# ---------------------------------------------------------------------------
# CSV emission
# ---------------------------------------------------------------------------

def _write_rows(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


def _num(x):
    return f"{float(x):.10g}"


def iteration_row(rec):
    """The public append-only log schema for one iteration."""
    return [rec.k, _num(rec.lbd), _num(rec.ubd), _num(rec.ubd - rec.lbd),
            rec.cuts, _num(rec.seconds)]


def write_iterations(path, records):
    _write_rows(path, ITERATION_FIELDS, [iteration_row(r) for r in records])


def price_stats(instance, design):
    """Average and standard deviation of prices over open site-steps."""
    mask = design.eta > 0
    if not mask.any():
        return 0.0, 0.0
    vals = design.prices[mask].ravel()
    return float(np.mean(vals)), float(np.std(vals))


def write_bundle(out_dir, instance, evaluation, extra=None,
                 records=None, status=None, lbd=None, ubd=None):
    """Write every run artifact for one evaluated design.

    ``evaluation`` is an exact evaluation result (the incumbent of a
    solve, or a directly evaluated design).  ``records`` adds the
    iteration log; ``extra`` lands in summary.json verbatim.
    """
    os.makedirs(out_dir, exist_ok=True)
    design = evaluation.design
    T = instance.params.T
    sites = instance.sites

    _write_rows(os.path.join(out_dir, "design.csv"),
                ["site", "node", "open", "eta", "cost"],
                [[i, s.node, int(design.y[i]), int(design.eta[i]),
                  _num(s.cost)] for i, s in enumerate(sites)])

    _write_rows(os.path.join(out_dir, "prices.csv"),
                ["site", "node", "step", "price"],
                [[i, s.node, t, _num(design.prices[i, t])]
                 for i, s in enumerate(sites) for t in range(T)])

    inflow = (evaluation.flows.charging_inflow if evaluation.flows is not None
              else np.zeros((T, len(sites))))
    trace = evaluation.trace or roll_occupancy(instance, design, inflow)
    omega = instance.omega_table()
    _write_rows(os.path.join(out_dir, "occupancy.csv"),
                ["site", "node", "step", "inflow", "occupancy", "chargers",
                 "service_cap"],
                [[i, s.node, t, _num(inflow[t, i]), _num(trace.f[t, i]),
                  int(design.eta[i]),
                  _num(omega[int(design.eta[i])] * design.eta[i])]
                 for i, s in enumerate(sites) for t in range(T)])

    seg_rows = []
    if evaluation.flows is not None:
        segs = evaluation.flows.max_segments()
        for k, od in enumerate(instance.ods):
            served = sum(float(st.served[k]) for st in evaluation.flows.steps)
            seg_rows.append([k, od.origin, od.dest, _num(segs[k]),
                            _num(instance.params.range_limit), _num(served)])
    _write_rows(os.path.join(out_dir, "max_segment.csv"),
                ["od", "origin", "dest", "max_segment", "range_limit",
                 "served_flow"], seg_rows)

    bd = evaluation.breakdown
    obj_rows = [["capex", _num(bd.capex if bd else 0.0)],
                ["revenue", _num(bd.revenue if bd else 0.0)],
                ["net", _num(evaluation.net)]]
    if lbd is not None:
        obj_rows += [["lbd", _num(lbd)], ["ubd", _num(ubd)],
                     ["gap", _num(ubd - lbd)]]
    _write_rows(os.path.join(out_dir, "objective.csv"),
                ["component", "value"], obj_rows)

    if records is not None:
        write_iterations(os.path.join(out_dir, "iterations.csv"), records)

    avg, std = price_stats(instance, design)
    summary = {
        "status": status or ("feasible" if evaluation.feasible
                             else "infeasible"),
        "net": evaluation.net,
        "capex": bd.capex if bd else 0.0,
        "revenue": bd.revenue if bd else 0.0,
        "price_avg": avg,
        "price_std": std,
        "open_sites": [int(s.node) for i, s in enumerate(sites)
                       if design.eta[i] > 0],
        "chargers": {str(s.node): int(design.eta[i])
                     for i, s in enumerate(sites)},
    }
    if lbd is not None:
        summary.update(lbd=lbd, ubd=ubd, gap=ubd - lbd)
    if records is not None:
        summary["iterations"] = len(records)
    if extra:
        summary.update(extra)
    with open(os.path.join(out_dir, "summary.json"), "w",
              encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return summary


# ---------------------------------------------------------------------------
# reading
# ---------------------------------------------------------------------------

def read_rows(path):
    """CSV to list of dicts, numbers parsed where they look numeric."""
    if not os.path.exists(path):
        raise ConfigError(f"missing artifact {path}")
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            parsed = {}
            for key, val in row.items():
                try:
                    parsed[key] = float(val)
                except (TypeError, ValueError):
                    parsed[key] = val
            out.append(parsed)
    return out


def read_summary(run_dir):
    path = os.path.join(run_dir, "summary.json")
    if not os.path.exists(path):
        raise ConfigError(f"missing artifact {path}")
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


# ---------------------------------------------------------------------------
# SVG primitives
# ---------------------------------------------------------------------------

W, H = 800, 480
MARGIN = dict(left=76, right=24, top=44, bottom=56)


def _ticks(lo, hi, n=5):
    if hi <= lo:
        hi = lo + 1.0
    raw = np.linspace(lo, hi, n)
    return [float(x) for x in raw]


def _fmt_tick(x):
    if abs(x) >= 1000 or (x != 0 and abs(x) < 0.01):
        return f"{x:.3g}"
    return f"{x:g}" if x == int(x) else f"{x:.2f}"


class _Canvas:
    """Accumulates SVG elements for one chart."""

    def __init__(self, title, xlabel, ylabel, xlim, ylim):
        self.parts: List[str] = []
        self.xlim, self.ylim = xlim, ylim
        self.parts.append(
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" '
            f'height="{H}" viewBox="0 0 {W} {H}" '
            f'font-family="sans-serif" font-size="13">')
        self.parts.append(
            f'<rect width="{W}" height="{H}" fill="white"/>')
        self.parts.append(
            f'<text x="{W / 2}" y="24" text-anchor="middle" '
            f'font-size="16">{title}</text>')
        self._axes(xlabel, ylabel)

    def px(self, x):
        lo, hi = self.xlim
        span = (hi - lo) or 1.0
        return MARGIN["left"] + (x - lo) / span * (
            W - MARGIN["left"] - MARGIN["right"])

    def py(self, y):
        lo, hi = self.ylim
        span = (hi - lo) or 1.0
        return H - MARGIN["bottom"] - (y - lo) / span * (
            H - MARGIN["top"] - MARGIN["bottom"])

    def _axes(self, xlabel, ylabel):
        x0, x1 = MARGIN["left"], W - MARGIN["right"]
        y0, y1 = H - MARGIN["bottom"], MARGIN["top"]
        self.parts.append(
            f'<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/>')
        self.parts.append(
            f'<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black"/>')
        for tx in _ticks(*self.xlim):
            px = self.px(tx)
            self.parts.append(
                f'<line x1="{px:.1f}" y1="{y0}" x2="{px:.1f}" y2="{y0 + 5}" '
                f'stroke="black"/>')
            self.parts.append(
                f'<text x="{px:.1f}" y="{y0 + 20}" text-anchor="middle">'
                f'{_fmt_tick(tx)}</text>')
        for ty in _ticks(*self.ylim):
            py = self.py(ty)
            self.parts.append(
                f'<line x1="{x0 - 5}" y1="{py:.1f}" x2="{x0}" y2="{py:.1f}" '
                f'stroke="black"/>')
            self.parts.append(
                f'<text x="{x0 - 8}" y="{py + 4:.1f}" text-anchor="end">'
                f'{_fmt_tick(ty)}</text>')
        self.parts.append(
            f'<text x="{(x0 + x1) / 2}" y="{H - 12}" text-anchor="middle">'
            f'{xlabel}</text>')
        self.parts.append(
            f'<text x="18" y="{(y0 + y1) / 2}" text-anchor="middle" '
            f'transform="rotate(-90 18 {(y0 + y1) / 2})">{ylabel}</text>')

    def polyline(self, xs, ys, color, label=None, idx=0, dash=None):
        pts = " ".join(f"{self.px(x):.1f},{self.py(y):.1f}"
                       for x, y in zip(xs, ys))
        dash_attr = f' stroke-dasharray="{dash}"' if dash else ""
        self.parts.append(
            f'<polyline points="{pts}" fill="none" stroke="{color}" '
            f'stroke-width="1.8"{dash_attr}/>')
        if label:
            lx = W - MARGIN["right"] - 150
            ly = MARGIN["top"] + 16 * idx + 6
            self.parts.append(
                f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 22}" y2="{ly - 4}" '
                f'stroke="{color}" stroke-width="1.8"{dash_attr}/>')
            self.parts.append(
                f'<text x="{lx + 28}" y="{ly}">{label}</text>')

    def bar(self, x, width, y, color):
        px0, px1 = self.px(x - width / 2), self.px(x + width / 2)
        py0, py1 = self.py(0.0), self.py(y)
        self.parts.append(
            f'<rect x="{px0:.1f}" y="{min(py0, py1):.1f}" '
            f'width="{px1 - px0:.1f}" height="{abs(py0 - py1):.1f}" '
            f'fill="{color}" fill-opacity="0.8"/>')

    def hline(self, y, color="#555", dash="6,4", label=None):
        py = self.py(y)
        x0, x1 = MARGIN["left"], W - MARGIN["right"]
        self.parts.append(
            f'<line x1="{x0}" y1="{py:.1f}" x2="{x1}" y2="{py:.1f}" '
            f'stroke="{color}" stroke-dasharray="{dash}"/>')
        if label:
            self.parts.append(
                f'<text x="{x1 - 4}" y="{py - 5:.1f}" text-anchor="end" '
                f'fill="{color}">{label}</text>')

    def save(self, path):
        self.parts.append("</svg>")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("\n".join(self.parts) + "\n")


def _limits(values, pad=0.06):
    arr = np.asarray([v for v in values if np.isfinite(v)], dtype=float)
    if arr.size == 0:
        return 0.0, 1.0
    lo, hi = float(arr.min()), float(arr.max())
    if hi == lo:
        lo, hi = lo - 0.5, hi + 0.5
    span = hi - lo
    return lo - pad * span, hi + pad * span


def line_chart(path, title, xlabel, ylabel, series, hline=None):
    """series: list of (label, xs, ys); non-finite points dropped."""
    clean = []
    for label, xs, ys in series:
        pairs = [(x, y) for x, y in zip(xs, ys) if np.isfinite(y)]
        if pairs:
            clean.append((label, [p[0] for p in pairs], [p[1] for p in pairs]))
    all_x = [x for _, xs, _ in clean for x in xs] or [0.0, 1.0]
    all_y = [y for _, _, ys in clean for y in ys]
    if hline is not None:
        all_y = all_y + [hline]
    cv = _Canvas(title, xlabel, ylabel,
                 (min(all_x), max(all_x) if max(all_x) > min(all_x)
                  else min(all_x) + 1), _limits(all_y))
    if hline is not None:
        cv.hline(hline, label=_fmt_tick(hline))
    for idx, (label, xs, ys) in enumerate(clean):
        cv.polyline(xs, ys, PALETTE[idx % len(PALETTE)], label, idx)
    cv.save(path)


def bar_chart(path, title, xlabel, ylabel, labels, values, hline=None):
    ylim = _limits(list(values) + ([hline] if hline is not None else []) + [0])
    cv = _Canvas(title, xlabel, ylabel, (-0.6, len(labels) - 0.4),
                 (min(0.0, ylim[0]), ylim[1]))
    for i, val in enumerate(values):
        cv.bar(i, 0.7, float(val), PALETTE[i % len(PALETTE)])
    y0 = H - MARGIN["bottom"]
    for i, lab in enumerate(labels):
        cv.parts.append(
            f'<text x="{cv.px(i):.1f}" y="{y0 + 36}" text-anchor="middle">'
            f'{lab}</text>')
    if hline is not None:
        cv.hline(hline, label=_fmt_tick(hline))
    cv.save(path)


# ---------------------------------------------------------------------------
# rendering a run directory
# ---------------------------------------------------------------------------

def _series_by_site(rows, value_key):
    sites = sorted({int(r["site"]) for r in rows})
    out = []
    for i in sites:
        mine = sorted((r for r in rows if int(r["site"]) == i),
                      key=lambda r: r["step"])
        node = int(mine[0]["node"])
        out.append((f"node {node}", [r["step"] for r in mine],
                    [r[value_key] for r in mine]))
    return out


def render(run_dir, out_dir=None, compare_dir=None):
    """Charts + price-stats table for one run directory.

    With ``compare_dir`` the stats table gains that run's column and a
    percent difference 100*(second-first)/first.  Returns the list of
    files written.
    """
    out_dir = out_dir or run_dir
    os.makedirs(out_dir, exist_ok=True)
    written = []

    summary = read_summary(run_dir)
    it_path = os.path.join(run_dir, "iterations.csv")
    if os.path.exists(it_path):
        its = read_rows(it_path)
        path = os.path.join(out_dir, "convergence.svg")
        line_chart(path, "Bound convergence", "iteration", "objective",
                   [("LBD", [r["k"] for r in its], [r["lbd"] for r in its]),
                    ("UBD", [r["k"] for r in its], [r["ubd"] for r in its])])
        written.append(path)

    prices = read_rows(os.path.join(run_dir, "prices.csv"))
    design = read_rows(os.path.join(run_dir, "design.csv"))
    open_sites = {int(r["site"]) for r in design if r["eta"] > 0}
    open_prices = [r for r in prices if int(r["site"]) in open_sites]
    if open_prices:
        path = os.path.join(out_dir, "prices.svg")
        line_chart(path, "Charging price by step", "step", "price",
                   _series_by_site(open_prices, "price"))
        written.append(path)

    occ = read_rows(os.path.join(run_dir, "occupancy.csv"))
    open_occ = [r for r in occ if int(r["site"]) in open_sites]
    if open_occ:
        path = os.path.join(out_dir, "occupancy.svg")
        line_chart(path, "Site occupancy by step", "step", "occupancy",
                   _series_by_site(open_occ, "occupancy"))
        written.append(path)

    segs = read_rows(os.path.join(run_dir, "max_segment.csv"))
    if segs:
        path = os.path.join(out_dir, "max_segment.svg")
        bar_chart(path, "Max distance between charges", "od pair",
                  "distance",
                  [f"{int(r['origin'])}-{int(r['dest'])}" for r in segs],
                  [r["max_segment"] for r in segs],
                  hline=segs[0]["range_limit"])
        written.append(path)

    header = ["metric", "run"]
    rows = [["price_avg", _num(summary["price_avg"])],
            ["price_std", _num(summary["price_std"])],
            ["net", _num(summary["net"])]]
    if compare_dir is not None:
        other = read_summary(compare_dir)
        header += ["compare", "pct_diff"]
        for row, key in zip(rows, ("price_avg", "price_std", "net")):
            base, new = summary[key], other[key]
            diff = 100.0 * (new - base) / base if base else float("nan")
            row += [_num(new), _num(diff)]
    stats_path = os.path.join(out_dir, "price_stats.csv")
    _write_rows(stats_path, header, rows)
    written.append(stats_path)

    txt_path = os.path.join(out_dir, "summary.txt")
    with open(txt_path, "w", encoding="utf-8") as fh:
        fh.write(f"status: {summary['status']}\n")
        fh.write(f"net objective: {summary['net']:.6g}\n")
        if "gap" in summary:
            fh.write(f"bounds: [{summary['lbd']:.6g}, {summary['ubd']:.6g}] "
                     f"gap {summary['gap']:.3g}\n")
        fh.write(f"open sites: {summary['open_sites']}\n")
        fh.write(f"price avg/std: {summary['price_avg']:.4g} / "
                 f"{summary['price_std']:.4g}\n")
    written.append(txt_path)
    return written
