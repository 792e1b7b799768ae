"""How the lumped SG damping constant moves the two qualitative checks that
depend on it: the technology-mix orderings (9-bus fault) and the monotone
growth of the plane-wave/classical ROCOF divergence as H falls.

D is given in pu power per pu speed on the machine rating; the benchmark
files use 10.

Run:  python scripts/damping_study.py [--values 2,5,10,15,20]
"""

from __future__ import annotations

import argparse
import math
from dataclasses import replace

import numpy as np

from planewave.dynamics import DampingSpec
from planewave.scenarios import load_benchmark, reference_kappa, rocof_vs_inertia, technology_mix_study

H_GRID = [6.0, 4.0, 3.0, 2.15, 1.0, 0.5, 0.1]
STEPS = {"wscc9": (5, 0.09), "ne39": (16, 6.15)}


def with_damping(case, d_pu: float):
    base, w_s = case.network.base_mva, 2 * math.pi * case.network.nominal_frequency
    gens = tuple(replace(g, damping=DampingSpec("constant_D", D=d_pu * (g.rating / base) / w_s))
                 if g.tech == "SG" else g for g in case.generators)
    return replace(case, generators=gens)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--values", default="2,5,10,15,20")
    args = ap.parse_args()
    kappa = reference_kappa()
    cases = {name: load_benchmark(name) for name in STEPS}
    print("D_pu  peak|df| order  settling order  settling (s)             divergence monotone (wscc9, ne39)")
    for d in (float(v) for v in args.values.split(",")):
        mix = technology_mix_study(with_damping(cases["wscc9"], d), kappa,
                                   mixes=["3SG", "2SG+1GFM", "1SG+2GFM"])
        peak = [mix[n].peak_df_fault for n in mix]
        settle = [mix[n].settling_time for n in mix]
        mono = []
        for name, (bus, dp) in STEPS.items():
            div = rocof_vs_inertia(with_damping(cases[name], d), dp, H_GRID, kappa, bus=bus).divergence
            mono.append(bool(np.all(np.diff(div) > 0)))
        print(f"{d:4g}  {str(peak[0] < peak[1] < peak[2]):15s} {str(settle[0] > settle[1] > settle[2]):15s} "
              f"{', '.join(f'{s:.2f}' for s in settle):24s} {mono}")


if __name__ == "__main__":
    main()
