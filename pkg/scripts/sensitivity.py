"""Parametric sensitivity of the 1 SG + 2 GFM 9-bus system to an 8.3 ms
mid-line fault, one parameter per sweep, plus the corrupted-controller
experiments (one inverter's frequency or voltage damping degraded).

Run:  python scripts/sensitivity.py [--out DIR]
"""

from __future__ import annotations

import argparse

from planewave.emit import emit_results
from planewave.scenarios import (
    corrupted_controller,
    load_benchmark,
    reference_kappa,
    relative_change,
    sensitivity_sweep,
)
from planewave.svg import sensitivity_figure

SWEEPS = {
    "D_omega": [0.5, 1.0, 2.0],
    "D_v": [0.5, 1.0, 2.0],
    "P_headroom": [0.0, 0.02, 0.1],
    "M_omega": [0.5, 1.0, 2.0],
    "T_v": [0.5, 1.0, 2.0],
    "X_scale": [0.75, 1.0, 1.5],
    "R_scale": [0.8, 1.0, 1.2],
}
METRICS = ("peak_df", "peak_dv", "settling_time", "zeta")


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="planewave_out/sensitivity")
    args = ap.parse_args()
    case = load_benchmark("wscc9")
    kappa = reference_kappa()
    figures, summary = {}, {}
    for parameter, values in SWEEPS.items():
        rep = sensitivity_sweep(case, parameter, values, kappa)
        print(f"{parameter}")
        print("  value  peak|df| (Hz)  peak|dV| (pu)  settling (s)  zeta   stable")
        for r in rep.rows:
            zeta = "  -  " if r.zeta is None else f"{r.zeta:.3f}"
            print(f"  {r.value:5.2f}  {r.peak_df:13.4f}  {r.peak_dv:13.4f}  {r.settling_time:12.2f}  {zeta}  {r.stable}")
        if 1.0 in rep.values:
            base = rep.row(1.0)
            worst = max(relative_change(getattr(base, m), getattr(r, m))
                        for r in rep.rows if r.value != 1.0 and r.stable for m in METRICS
                        if getattr(base, m) is not None and getattr(r, m) is not None)
            print(f"  largest metric change from nominal: {worst:.1%}")
        figures[f"sensitivity_{parameter}"] = sensitivity_figure(rep)
        summary[parameter] = [[r.value, r.peak_df, r.peak_dv, r.settling_time, r.zeta] for r in rep.rows]
    for parameter in ("D_v", "D_omega"):
        c = corrupted_controller(case, parameter, 0.2, kappa)
        print(f"corrupted {parameter} x0.2 at node 1: local dV {c.local_dv:.3e} pu, local df {c.local_df:.3e} pu, "
              f"remote dV {c.remote_dv:.3e} pu, remote df {c.remote_df:.3e} pu")
        summary[f"corrupted_{parameter}"] = vars(c)
    emit_results(args.out, {"script": "sensitivity", "sweeps": SWEEPS}, summary=summary, figures=figures)


if __name__ == "__main__":
    main()
