//! Standalone matplotlib scripts for the files each command writes. They
//! are emitted as text and never run here.

use crate::config::{Command, RunConfig};

pub fn file_name(command: Command) -> String {
    format!("plot_{}.py", format!("{command:?}").to_lowercase())
}

const PRELUDE: &str = r##"#!/usr/bin/env python3
# Reads the outputs next to this script; needs numpy and matplotlib.
import json
import os

import matplotlib.pyplot as plt
import numpy as np

HERE = os.path.dirname(os.path.abspath(__file__))


def table(name):
    # first line is the JSON run config, then a CSV header
    return np.genfromtxt(os.path.join(HERE, name), delimiter=",", names=True, comments="#")

"##;

fn body(cfg: &RunConfig) -> String {
    match cfg.command {
        Command::Melnikov => format!(
            r#"d = table("melnikov.csv")
n_alpha = {n_alpha}
p = d["p"].reshape(-1, n_alpha)[:, 0]
alpha = d["alpha"][:n_alpha]
m = d["M"].reshape(-1, n_alpha)
fig, ax = plt.subplots()
mesh = ax.pcolormesh(alpha, p, m, shading="auto", cmap="RdBu_r")
ax.contour(alpha, p, m, levels=[0.0], colors="k", linewidths=0.8)
fig.colorbar(mesh, label="M")
ax.set_xlabel("alpha")
ax.set_ylabel("p")
ax.set_title("Melnikov function, t = {t}")
fig.savefig(os.path.join(HERE, "melnikov.png"), dpi=150)
"#,
            n_alpha = cfg.n_alpha,
            t = cfg.t
        ),
        Command::Contours | Command::Lobes => {
            let mut s = String::from(
                r#"d = table("contours.csv")
fig, ax = plt.subplots()
for cid in np.unique(d["contour_id"]):
    sel = d[d["contour_id"] == cid]
    # break lines where alpha wraps around
    a = sel["alpha"].copy()
    a[np.abs(np.diff(a, prepend=a[0])) > 0.5] = np.nan
    ax.plot(a, sel["p"], lw=0.8)
ax.set_xlabel("alpha")
ax.set_ylabel("p")
"#,
            );
            if cfg.command == Command::Lobes {
                s.push_str(
                    &r#"with open(os.path.join(HERE, "lobes.json")) as f:
    lobes = json.load(f)["lobes"]
for lobe in lobes:
    if lobe["volume_leading"] is not None:
        lo, hi = lobe["p_extent"]
        cells = np.array(lobe["cells"])
        ax.annotate("%.3g" % lobe["volume_leading"], ((cells[:, 1].mean() + 0.5) / {n_alpha}, 0.5 * (lo + hi)),
                    fontsize=6, ha="center")
"#
                    .replace("{n_alpha}", &cfg.n_alpha.to_string()),
                );
            }
            s.push_str(&format!(
                "ax.set_title(\"zero set of M, t = {}\")\nfig.savefig(os.path.join(HERE, \"{}.png\"), dpi=150)\n",
                cfg.t,
                format!("{:?}", cfg.command).to_lowercase()
            ));
            s
        }
        Command::Surface => r#"fig = plt.figure()
ax = fig.add_subplot(projection="3d")
for name in sorted(os.listdir(HERE)):
    if name.startswith("surface_") and name.endswith(".mesh") and "unperturbed" not in name:
        v, f = [], []
        with open(os.path.join(HERE, name)) as fh:
            for line in fh:
                if line.startswith("v "):
                    v.append([float(x) for x in line.split()[1:]])
                elif line.startswith("f "):
                    f.append([int(x) - 1 for x in line.split()[1:]])
        v = np.array(v)
        ax.plot_trisurf(v[:, 0], v[:, 1], v[:, 2], triangles=np.array(f), alpha=0.5, label=name)
ax.set_box_aspect((1, 1, 1))
fig.savefig(os.path.join(HERE, "surface.png"), dpi=150)
"#
        .to_string(),
        Command::Verify => r#"d = table("samples.csv")
fig, ax = plt.subplots()
keys = sorted(set(zip(d["p"], d["alpha"], d["t"])))
for p, a, t in keys:
    sel = d[(d["p"] == p) & (d["alpha"] == a) & (d["t"] == t)]
    ax.loglog(sel["eps"], sel["error"], "o-", label="(%.3g, %.3g, %.3g)" % (p, a, t))
e = np.array(sorted(set(d["eps"])))
ax.loglog(e, d["error"].max() * (e / e.max()) ** 2, "k--", label="slope 2")
ax.set_xlabel("eps")
ax.set_ylabel("|measured - predicted|")
ax.legend(fontsize=7)
fig.savefig(os.path.join(HERE, "verify.png"), dpi=150)
"#
        .to_string(),
    }
}

pub fn script(cfg: &RunConfig) -> String {
    format!("{PRELUDE}\n{}", body(cfg))
}
