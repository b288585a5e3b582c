use std::fs;
use std::path::Path;

/// Standalone matplotlib script: one panel per (environment, schedule) in `summary.csv`,
/// mean `R_t/t` per policy with a one-standard-error band.
pub const PLOT_SCRIPT: &str = r#"#!/usr/bin/env python3
import csv
import sys
from collections import defaultdict
from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

here = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).parent
rows = list(csv.DictReader(open(here / "summary.csv")))
panels = defaultdict(lambda: defaultdict(list))
for r in rows:
    panels[(r["env"], r["schedule"], r["M"])][r["policy"]].append(
        (int(r["t"]), float(r["mean_avg_regret"]), float(r["stderr"]))
    )

keys = sorted(panels)
cols = min(4, max(1, len(keys)))
nrows = (len(keys) + cols - 1) // cols
fig, axes = plt.subplots(nrows, cols, figsize=(4 * cols, 3.2 * nrows), squeeze=False)
for ax, key in zip(axes.flat, keys):
    for policy, pts in sorted(panels[key].items()):
        pts.sort()
        t = [p[0] for p in pts]
        m = [p[1] for p in pts]
        s = [p[2] for p in pts]
        ax.plot(t, m, label=policy)
        ax.fill_between(t, [a - b for a, b in zip(m, s)], [a + b for a, b in zip(m, s)], alpha=0.2)
    env, schedule, M = key
    ax.set_title(f"{env} ({schedule}, M={M})")
    ax.set_xlabel("t")
    ax.set_ylabel("R_t / t")
    ax.legend(fontsize=7)
for ax in list(axes.flat)[len(keys):]:
    ax.axis("off")
fig.tight_layout()
fig.savefig(here / "regret.png", dpi=150)
"#;

pub fn write_plot_script(path: &Path) -> std::io::Result<()> {
    fs::write(path, PLOT_SCRIPT)
}
