"""Regenerate the embedded benchmark case files in src/planewave/data.

Network data are the standard MATPOWER case9 / case39 tables; machine data
are the Anderson-Fouad (9-bus) and Pai (39-bus) sets. Two quantities the
standard tables do not carry are derived here:

* line length, from the series reactance with a typical overhead-line
  reactance per km at the system voltage (0.5 ohm/km at 230 kV,
  0.37 ohm/km at 345 kV); transformer branches get zero length.
* SG damping, 10 pu power per pu speed on the machine rating (damper
  windings plus the fast part of primary response lumped into one constant),
  converted to per-unit power per rad/s on the system base.

Run:  python scripts/build_benchmark_files.py
"""

from __future__ import annotations

import math
from pathlib import Path

from planewave.case import CaseDefinition, CaseOptions
from planewave.casefile import write_case
from planewave.dynamics import DampingSpec, Generator
from planewave.network import Branch, Bus, PowerNetwork

DATA = Path(__file__).resolve().parents[1] / "src" / "planewave" / "data"
BASE_MVA = 100.0
F_NOM = 60.0
OMEGA_S = 2 * math.pi * F_NOM
SG_DAMPING_PU = 10.0
SG_T_V = 0.5


def length_from_x(x_pu: float, kv: float, ohm_per_km: float) -> float:
    z_base = kv**2 / BASE_MVA
    return x_pu * z_base / ohm_per_km * 1e3


def sg(bus: int, h: float, rating: float, xdp: float) -> Generator:
    d = SG_DAMPING_PU * (rating / BASE_MVA) / OMEGA_S
    return Generator(bus, "SG", H=h, rating=rating, damping=DampingSpec("constant_D", D=d),
                     T_v=SG_T_V, Z_m=complex(0, xdp), source_impedance=complex(0, xdp))


def wscc9() -> CaseDefinition:
    buses = [
        Bus(1, "slack", 1.04, base_kv=16.5),
        Bus(2, "generator", 1.025, gen_p=1.63, base_kv=18.0),
        Bus(3, "generator", 1.025, gen_p=0.85, base_kv=13.8),
        Bus(4), Bus(5, load_p=1.25, load_q=0.5), Bus(6, load_p=0.9, load_q=0.3),
        Bus(7), Bus(8, load_p=1.0, load_q=0.35), Bus(9),
    ]
    # from, to, r, x, b, transformer
    rows = [
        (1, 4, 0.0, 0.0576, 0.0, True), (4, 6, 0.017, 0.092, 0.158, False),
        (6, 9, 0.039, 0.17, 0.358, False), (3, 9, 0.0, 0.0586, 0.0, True),
        (8, 9, 0.0119, 0.1008, 0.209, False), (7, 8, 0.0085, 0.072, 0.149, False),
        (7, 2, 0.0, 0.0625, 0.0, True), (5, 7, 0.032, 0.161, 0.306, False),
        (4, 5, 0.01, 0.085, 0.176, False),
    ]
    branches = [
        Branch(f, t, r, x, b, 0.0 if xf else length_from_x(x, 230.0, 0.5))
        for f, t, r, x, b, xf in rows
    ]
    net = PowerNetwork(buses, branches, BASE_MVA, F_NOM)
    # H given on the 100 MVA base in the source data, restated on machine rating
    gens = (
        sg(1, 23.64 / 2.475, 247.5, 0.0608),
        sg(2, 6.4 / 1.92, 192.0, 0.1198),
        sg(3, 3.01 / 1.28, 128.0, 0.1813),
    )
    return CaseDefinition(net, gens, (), CaseOptions(), name="wscc9",
                          source="WSCC 9-bus (MATPOWER case9, Anderson-Fouad machines)")


NE39_BRANCHES = [
    (1, 2, 0.0035, 0.0411, 0.6987, 0.0), (1, 39, 0.001, 0.025, 0.75, 0.0),
    (2, 3, 0.0013, 0.0151, 0.2572, 0.0), (2, 25, 0.007, 0.0086, 0.146, 0.0),
    (3, 4, 0.0013, 0.0213, 0.2214, 0.0), (3, 18, 0.0011, 0.0133, 0.2138, 0.0),
    (4, 5, 0.0008, 0.0128, 0.1342, 0.0), (4, 14, 0.0008, 0.0129, 0.1382, 0.0),
    (5, 6, 0.0002, 0.0026, 0.0434, 0.0), (5, 8, 0.0008, 0.0112, 0.1476, 0.0),
    (6, 7, 0.0006, 0.0092, 0.113, 0.0), (6, 11, 0.0007, 0.0082, 0.1389, 0.0),
    (7, 8, 0.0004, 0.0046, 0.078, 0.0), (8, 9, 0.0023, 0.0363, 0.3804, 0.0),
    (9, 39, 0.001, 0.025, 1.2, 0.0), (10, 11, 0.0004, 0.0043, 0.0729, 0.0),
    (10, 13, 0.0004, 0.0043, 0.0729, 0.0), (13, 14, 0.0009, 0.0101, 0.1723, 0.0),
    (14, 15, 0.0018, 0.0217, 0.366, 0.0), (15, 16, 0.0009, 0.0094, 0.171, 0.0),
    (16, 17, 0.0007, 0.0089, 0.1342, 0.0), (16, 19, 0.0016, 0.0195, 0.304, 0.0),
    (16, 21, 0.0008, 0.0135, 0.2548, 0.0), (16, 24, 0.0003, 0.0059, 0.068, 0.0),
    (17, 18, 0.0007, 0.0082, 0.1319, 0.0), (17, 27, 0.0013, 0.0173, 0.3216, 0.0),
    (21, 22, 0.0008, 0.014, 0.2565, 0.0), (22, 23, 0.0006, 0.0096, 0.1846, 0.0),
    (23, 24, 0.0022, 0.035, 0.361, 0.0), (25, 26, 0.0032, 0.0323, 0.513, 0.0),
    (26, 27, 0.0014, 0.0147, 0.2396, 0.0), (26, 28, 0.0043, 0.0474, 0.7802, 0.0),
    (26, 29, 0.0057, 0.0625, 1.029, 0.0), (28, 29, 0.0014, 0.0151, 0.249, 0.0),
    (12, 11, 0.0016, 0.0435, 0.0, 1.006), (12, 13, 0.0016, 0.0435, 0.0, 1.006),
    (6, 31, 0.0, 0.025, 0.0, 1.07), (10, 32, 0.0, 0.02, 0.0, 1.07),
    (19, 33, 0.0007, 0.0142, 0.0, 1.07), (20, 34, 0.0009, 0.018, 0.0, 1.009),
    (22, 35, 0.0, 0.0143, 0.0, 1.025), (23, 36, 0.0005, 0.0272, 0.0, 1.0),
    (25, 37, 0.0006, 0.0232, 0.0, 1.025), (2, 30, 0.0, 0.0181, 0.0, 1.025),
    (29, 38, 0.0008, 0.0156, 0.0, 1.025), (19, 20, 0.0007, 0.0138, 0.0, 1.06),
]
# MW, Mvar
NE39_LOADS = {
    3: (322, 2.4), 4: (500, 184), 7: (233.8, 84), 8: (522, 176.6), 9: (6.5, -66.6), 12: (8.5, 88),
    15: (320, 153), 16: (329, 32.3), 18: (158, 30), 20: (680, 103), 21: (274, 115), 23: (247.5, 84.6),
    24: (308.6, -92.2), 25: (224, 47.2), 26: (139, 17), 27: (281, 75.5), 28: (206, 27.6),
    29: (283.5, 26.9), 31: (9.2, 4.6), 39: (1104, 250),
}
# MW dispatch (None for the slack), voltage setpoint
NE39_GENS = {
    30: (250, 1.0499), 31: (None, 0.982), 32: (650, 0.9841), 33: (632, 0.9972), 34: (508, 1.0123),
    35: (650, 1.0494), 36: (560, 1.0636), 37: (540, 1.0275), 38: (830, 1.0265), 39: (1000, 1.03),
}
# H on 100 MVA, x'd on 100 MVA
NE39_MACHINES = {
    30: (42.0, 0.031), 31: (30.3, 0.0697), 32: (35.8, 0.0531), 33: (28.6, 0.0436), 34: (26.0, 0.132),
    35: (34.8, 0.05), 36: (26.4, 0.049), 37: (24.3, 0.057), 38: (34.5, 0.057), 39: (500.0, 0.006),
}
NE39_RATING = 1000.0


def ne39() -> CaseDefinition:
    buses = []
    for i in range(1, 40):
        lp, lq = NE39_LOADS.get(i, (0.0, 0.0))
        if i == 31:
            kind = "slack"
        elif i in NE39_GENS:
            kind = "generator"
        else:
            kind = "load"
        gp, v = NE39_GENS.get(i, (0.0, 1.0))
        buses.append(Bus(i, kind, v, lp / BASE_MVA, lq / BASE_MVA, (gp or 0.0) / BASE_MVA, base_kv=345.0))
    branches = [
        Branch(f, t, r, x, b, 0.0 if tap else length_from_x(x, 345.0, 0.37), tap=tap or 1.0)
        for f, t, r, x, b, tap in NE39_BRANCHES
    ]
    net = PowerNetwork(buses, branches, BASE_MVA, F_NOM)
    gens = tuple(
        sg(bus, h * BASE_MVA / NE39_RATING, NE39_RATING, xdp)
        for bus, (h, xdp) in sorted(NE39_MACHINES.items())
    )
    return CaseDefinition(net, gens, (), CaseOptions(), name="ne39",
                          source="New England 39-bus (MATPOWER case39, Pai machines)")


def main() -> None:
    DATA.mkdir(parents=True, exist_ok=True)
    for case in (wscc9(), ne39()):
        path = write_case(case, DATA / f"{case.name}.toml")
        print(f"wrote {path}")


if __name__ == "__main__":
    main()
