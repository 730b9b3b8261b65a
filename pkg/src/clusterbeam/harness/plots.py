"""Write standalone matplotlib scripts that redraw the figures from the CSVs."""
from __future__ import annotations

import csv
import os

REQUIRED = {
    "aggregate.csv": {"algorithm", "channel_snr_db", "mean_final_snr"},
    "itinerary.csv": {"init_id", "algorithm", "iteration", "snr"},
    "bench.csv": {"block", "algorithm", "L", "ms_per_iter"},
}

_HEAD = """import csv
import collections
import os

import matplotlib.pyplot as plt

here = os.path.dirname(os.path.abspath(__file__))
rows = list(csv.DictReader(open(os.path.join(here, {path!r}), encoding="utf-8")))
"""

_BODY = {
    "aggregate.csv": """curves = collections.defaultdict(list)
for r in rows:
    curves[r["algorithm"]].append((float(r["channel_snr_db"]), float(r["mean_final_snr"])))
for name in {curves}:
    pts = sorted(curves[name])
    plt.plot([p[0] for p in pts], [p[1] for p in pts], marker="o", label=name)
plt.xlabel("channel SNR (dB)")
plt.ylabel("mean SNR at the FC")
plt.legend()
plt.savefig("sweep.png", dpi=150)
""",
    "itinerary.csv": """curves = collections.defaultdict(list)
for r in rows:
    curves[(r["algorithm"], r["init_id"])].append((int(r["iteration"]), float(r["snr"])))
for key in {curves}:
    pts = sorted(curves[tuple(key)])
    plt.plot([p[0] for p in pts], [p[1] for p in pts], label="%s #%s" % tuple(key))
plt.xlabel("outer iteration")
plt.ylabel("SNR")
plt.legend(fontsize=6)
plt.savefig("itinerary.png", dpi=150)
""",
    "bench.csv": """curves = collections.defaultdict(list)
for r in rows:
    if r["ms_per_iter"] != "---":
        curves[(r["block"], r["algorithm"])].append((int(r["L"]), float(r["ms_per_iter"])))
for key in {curves}:
    pts = sorted(curves[tuple(key)])
    plt.plot([p[0] for p in pts], [p[1] for p in pts], marker="s", label="%s %s" % tuple(key))
plt.xlabel("L")
plt.ylabel("ms per outer iteration")
plt.yscale("log")
plt.legend(fontsize=6)
plt.savefig("bench.png", dpi=150)
""",
}

_KEYS = {"aggregate.csv": ("algorithm",), "itinerary.csv": ("algorithm", "init_id"),
         "bench.csv": ("block", "algorithm")}


def emit_plots(result_dir, out_dir=None) -> list:
    """One script per CSV found; a CSV without rows or without the needed columns raises ValueError."""
    out_dir = out_dir or result_dir
    os.makedirs(out_dir, exist_ok=True)
    written = []
    for fname, need in REQUIRED.items():
        path = os.path.join(result_dir, fname)
        if not os.path.exists(path):
            continue
        with open(path, encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            cols = set(reader.fieldnames or [])
            rows = list(reader)
        missing = need - cols
        if missing:
            raise ValueError(f"{fname} lacks columns {sorted(missing)}")
        if not rows:
            raise ValueError(f"{fname} has no data rows")
        keys = _KEYS[fname]
        curves = sorted({tuple(r[k] for k in keys) for r in rows})
        curves = [c[0] for c in curves] if len(keys) == 1 else [list(c) for c in curves]
        script = _HEAD.format(path=os.path.relpath(path, out_dir)) + _BODY[fname].format(curves=curves)
        target = os.path.join(out_dir, "plot_" + fname.replace(".csv", ".py"))
        with open(target, "w", encoding="utf-8") as fh:
            fh.write(script)
        written.append(target)
    if not written:
        raise ValueError(f"no result CSVs in {result_dir}")
    return written
