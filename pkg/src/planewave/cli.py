"""Command-line interface.

Exit codes: 0 success, 2 invalid input, 3 numerical failure, 4 I/O error.
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from .case import CaseDefinition
from .casefile import case_to_dict, parse_case
from .dynamics import Event, ModelConfig
from .electromagnetics import equivalent_units
from .emit import emit_results
from .errors import NumericalError, ValidationError
from .modal import eigen_migration, prony_fit, select_order
from .pmu import ingest_pmu_csv
from .scenarios import (
    BENCHMARKS,
    DEFAULT_LOAD_BUS,
    SENSITIVITY_PARAMETERS,
    load_benchmark,
    measure_rocof,
    momentum_share_sweep,
    prepare_case,
    reference_kappa,
    rocof_vs_inertia,
    sensitivity_sweep,
)
from .svg import mode_figure, rocof_figure, sensitivity_figure, share_figure

EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL, EXIT_IO = 0, 2, 3, 4
DEFAULT_H_GRID = (6.0, 4.0, 3.0, 2.15, 1.0, 0.5, 0.1)
DEFAULT_DP = {"wscc9": 0.09, "ne39": 6.15}


def load_case(spec: str) -> CaseDefinition:
    if spec in BENCHMARKS:
        return load_benchmark(spec)
    path = Path(spec)
    if not path.suffix and len(path.parts) == 1:
        return load_benchmark(spec)  # bare name: unknown benchmark
    if not path.exists():
        raise FileNotFoundError(f"no benchmark or case file named {spec!r} (benchmarks: {', '.join(BENCHMARKS)})")
    return parse_case(path)


def floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise ValidationError(f"not a comma-separated list of numbers: {text!r}") from exc


def case_kappa(case: CaseDefinition, override: float | None) -> float:
    if override is not None:
        return override
    if case.options.kappa is not None:
        return case.options.kappa
    return reference_kappa()


def load_step_for(case: CaseDefinition, dp: float | None, bus: int | None, time: float) -> Event:
    if dp is None:
        if case.name not in DEFAULT_DP:
            raise ValidationError("--dp is required for cases other than the embedded benchmarks")
        dp = DEFAULT_DP[case.name]
    if bus is None:
        bus = DEFAULT_LOAD_BUS.get(case.name)
        if bus is None:
            raise ValidationError("--bus is required for cases other than the embedded benchmarks")
    return Event.load_step(time, bus, dp)


def _inputs(args: argparse.Namespace, case: CaseDefinition | None = None) -> dict:
    d = {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "out")}
    if case is not None:
        d["case_definition"] = case_to_dict(case)
    return d


def _print_table(header: Sequence[str], rows: Sequence[Sequence]) -> None:
    print("\t".join(header))
    for r in rows:
        print("\t".join(f"{v:.6g}" if isinstance(v, float) else str(v) for v in r))


# ---------------------------------------------------------------- commands

def cmd_simulate(args) -> int:
    case = load_case(args.case)
    events = list(case.events)
    if args.dp is not None:
        events.append(load_step_for(case, args.dp, args.bus, args.event_time))
        events.sort(key=lambda e: e.time)
    kind = "classical" if args.model == "classical" else "plane_wave"
    kappa = case_kappa(case, args.kappa) if kind == "plane_wave" else 0.0
    config = ModelConfig(kind=kind, kappa=kappa, attribution=case.options.attribution)
    prep = prepare_case(case)
    dt = args.dt or case.options.dt
    horizon = args.horizon if args.horizon is not None else case.options.horizon
    traj = prep.simulate(config, events, dt=dt, horizon=horizon)
    f = traj.frequency_hz()
    summary = {
        "case": case.name, "model": kind, "kappa": kappa, "dt_s": dt, "horizon_s": horizon,
        "max_abs_df_hz": float(np.abs(f - traj.nominal_frequency).max()),
        "min_v_pu": float(traj.v.min()), "max_v_pu": float(traj.v.max()),
        "final_coi_hz": float(traj.mean_frequency()[-1]),
    }
    if events and events[0].kind == "load_step":
        summary["rocof_hz_s"] = measure_rocof(traj, events[0].time, case.options.rocof_window).value
    bundle = emit_results(args.out, _inputs(args, case), trajectory=traj, summary=summary,
                          ufls_hz=case.options.ufls_hz)
    for k, v in summary.items():
        print(f"{k}\t{v:.6g}" if isinstance(v, float) else f"{k}\t{v}")
    print(f"wrote {len(bundle.files)} files to {bundle.directory}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    case = load_case(args.case)
    kappa = case_kappa(case, args.kappa)
    if args.kind == "rocof":
        grid = floats(args.values) if args.values else list(DEFAULT_H_GRID)
        ev = load_step_for(case, args.dp, args.bus, 0.1)
        curve = rocof_vs_inertia(case, ev.dp, grid, kappa, bus=ev.bus, window=case.options.rocof_window)
        rows = list(zip(curve.H, curve.plane_wave, curve.classical, curve.divergence))
        header = ["H_s", "rocof_planewave_hz_s", "rocof_classical_hz_s", "divergence_hz_s"]
        _print_table(header, rows)
        print(f"plane-wave fit c1/(H+c2): c1={curve.pw_fit[0]:.6g} c2={curve.pw_fit[1]:.6g} R2={curve.pw_r2:.6f}")
        summary = {"pw_fit": curve.pw_fit, "pw_r2": curve.pw_r2, "classical_fit": curve.classical_fit,
                   "classical_r2": curve.classical_r2}
        figs = {"rocof": rocof_figure(curve)}
        tables = {"rocof": (header, [np.asarray(c) for c in zip(*rows)])}
    elif args.kind == "share":
        grid = floats(args.values) if args.values else list(DEFAULT_H_GRID)
        ev = load_step_for(case, args.dp, args.bus, 0.1)
        curve = momentum_share_sweep(case, grid, ev, kappa, window=case.options.rocof_window)
        rows = [(p.H, p.analytic_share, p.empirical_share, p.m_gen, p.m_line) for p in curve.points]
        header = ["H_s", "share_analytic", "share_empirical", "m_gen_pu", "m_line_pu"]
        _print_table(header, rows)
        print(f"fit a={curve.fit_a:.6g} slope={curve.slope:.6g}; all-GFM share={curve.all_gfm_share}")
        summary = {"kappa": kappa, "fit_a": curve.fit_a, "slope": curve.slope,
                   "all_gfm_share": curve.all_gfm_share}
        figs = {"share": share_figure(curve)}
        tables = {"share": (header, [np.asarray(c) for c in zip(*rows)])}
    else:
        if args.param is None:
            raise ValidationError(f"--param is required ({', '.join(SENSITIVITY_PARAMETERS)})")
        values = floats(args.values) if args.values else [0.5, 1.0, 1.5]
        rep = sensitivity_sweep(case, args.param, values, kappa)
        rows = [(r.value, r.peak_df, r.peak_dv, r.settling_time,
                 math.nan if r.zeta is None else r.zeta, "yes" if r.stable else f"no (t={r.t_fail})")
                for r in rep.rows]
        header = ["value", "peak_df_hz", "peak_dv_pu", "settling_s", "zeta", "stable"]
        _print_table(header, rows)
        summary = {"parameter": rep.parameter, "rows": [r[:5] for r in rows]}
        figs = {"sensitivity": sensitivity_figure(rep)}
        tables = {"sensitivity": (header[:5], [np.asarray(c, dtype=float) for c in list(zip(*rows))[:5]])}
    emit_results(args.out, _inputs(args, case), summary=summary, figures=figs, tables=tables)
    return EXIT_OK


def cmd_momentum(args) -> int:
    case = load_case(args.case)
    kappa = reference_kappa(case) if args.calibrate else case_kappa(case, args.kappa)
    prep = prepare_case(case)
    traj = prep.simulate(ModelConfig(kappa=kappa), (), horizon=0.0, record_flows=False)
    budgets = traj.budgets(0)
    rows = [(lab, b.generator_momentum, b.line_momentum, b.em_share)
            for lab, b in zip(traj.node_labels, budgets)]
    _print_table(["node", "m_gen_pu", "m_line_pu", "line_share"], rows)
    m_l = sum(b.line_momentum for b in budgets)
    m_g = sum(b.generator_momentum for b in budgets)
    print(f"kappa\t{kappa:.6g}")
    print(f"system_line_share\t{m_l / (m_l + m_g):.6g}")
    print(f"line_momentum_equivalent_units\t{equivalent_units(m_l, base_mva=case.network.base_mva):.6g}")
    return EXIT_OK


def _fit(path: str, column: str | None, args) -> list:
    rec = ingest_pmu_csv(path)
    series = rec[column] if column else rec[0]
    if args.start is not None:
        series = series.window(args.start, series.t[-1])
    order = args.order
    if args.auto_order or order is None:
        sel = select_order(series, args.energy)
        order = sel.order
        print(f"# {path}: order {order} captures {sel.captured:.6f} of the energy"
              + ("" if sel.dominant_mode else " (no dominant mode)"))
    return prony_fit(series, order, detrend=args.detrend, rank=args.rank)


def _print_modes(modes) -> None:
    _print_table(["sigma_1_s", "omega_rad_s", "freq_hz", "zeta", "amplitude", "energy"],
                 [(m.sigma, m.omega, m.frequency_hz, m.zeta if m.eigenvalue != 0 else math.nan,
                   m.amplitude, m.energy) for m in modes])


def cmd_prony(args) -> int:
    _print_modes(_fit(args.csv, args.column, args))
    return EXIT_OK


def cmd_migrate(args) -> int:
    send = [m for m in _fit(args.send, args.column, args) if m.omega > 0]
    recv = [m for m in _fit(args.recv, args.column, args) if m.omega > 0]
    if args.top:
        send, recv = send[:args.top], recv[:args.top]
    rep = eigen_migration(send, recv)
    rows = [(p.send.sigma, p.send.omega, p.recv.sigma, p.recv.omega, p.d_sigma, p.d_omega,
             "yes" if p.moves_outward else "no") for p in rep.pairs]
    _print_table(["sigma_send", "omega_send", "sigma_recv", "omega_recv", "d_sigma", "d_omega", "outward"], rows)
    print(f"reduced_inertia_signature\t{rep.reduced_inertia_signature}")
    emit_results(args.out, _inputs(args), figures={"migration": mode_figure(rep)}, formats={"svg"})
    return EXIT_OK


def cmd_compare(args) -> int:
    case = load_case(args.case)
    kappa = case_kappa(case, args.kappa)
    events = list(case.events) or [load_step_for(case, args.dp, args.bus, 0.1)]
    prep = prepare_case(case)
    horizon = args.horizon if args.horizon is not None else case.options.horizon
    pw = prep.simulate(ModelConfig(kappa=kappa), events, dt=case.options.dt, horizon=horizon)
    cl = prep.simulate(ModelConfig(kind="classical"), events, dt=case.options.dt, horizon=horizon)
    f_pw, f_cl = pw.mean_frequency(), cl.mean_frequency()
    rms = float(np.sqrt(np.mean((f_pw - f_cl) ** 2)) / case.network.nominal_frequency)
    print(f"kappa\t{kappa:.6g}")
    print(f"coi_frequency_rms_difference_pu\t{rms:.6g}")
    print(f"max_node_frequency_difference_hz\t{np.abs(pw.frequency_hz() - cl.frequency_hz()).max():.6g}")
    if events[0].kind == "load_step":
        r_pw = measure_rocof(pw, events[0].time, case.options.rocof_window).value
        r_cl = measure_rocof(cl, events[0].time, case.options.rocof_window).value
        print(f"rocof_planewave_hz_s\t{r_pw:.6g}\nrocof_classical_hz_s\t{r_cl:.6g}\ndivergence_hz_s\t{abs(r_cl - r_pw):.6g}")
    tables = {"compare": (["t_s", "f_coi_planewave_hz", "f_coi_classical_hz"], [pw.t, f_pw, f_cl])}
    emit_results(args.out, _inputs(args, case), tables=tables, formats={"csv"})
    return EXIT_OK


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="planewave", description="Plane-wave power network dynamics.")
    p.add_argument("--out", help="output directory (default $PLANEWAVE_OUT or ./planewave_out)")
    sub = p.add_subparsers(dest="command", required=True)

    def case_args(sp, dp=True):
        sp.add_argument("case", help=f"benchmark name ({', '.join(BENCHMARKS)}) or case file")
        sp.add_argument("--kappa", type=float, help="line momentum constant (default: calibrated)")
        if dp:
            sp.add_argument("--dp", type=float, help="load step in pu on the system base")
            sp.add_argument("--bus", type=int, help="load step bus")

    s = sub.add_parser("simulate", help="integrate one case")
    case_args(s)
    s.add_argument("--model", choices=("planewave", "classical"), default="planewave")
    s.add_argument("--dt", type=float)
    s.add_argument("--horizon", type=float)
    s.add_argument("--event-time", type=float, default=0.1)
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("sweep", help="ROCOF, momentum-share or sensitivity sweep")
    s.add_argument("kind", choices=("rocof", "share", "sensitivity"))
    case_args(s)
    s.add_argument("--param", choices=SENSITIVITY_PARAMETERS)
    s.add_argument("--values", help="comma-separated values (H in s, or parameter multipliers)")
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("momentum", help="nodal momentum budgets at the operating point")
    case_args(s, dp=False)
    s.add_argument("--calibrate", action="store_true", help="calibrate kappa on this case at H = 6 s")
    s.set_defaults(func=cmd_momentum)

    def prony_args(sp):
        sp.add_argument("--column", help="CSV column (default: first non-time column)")
        sp.add_argument("--order", type=int)
        sp.add_argument("--auto-order", action="store_true")
        sp.add_argument("--energy", type=float, default=0.999)
        sp.add_argument("--rank", type=int)
        sp.add_argument("--detrend", choices=("mean", "linear", "none"), default="mean")
        sp.add_argument("--start", type=float, help="fit from this time on")

    s = sub.add_parser("prony", help="Prony modes of a CSV record")
    s.add_argument("csv")
    prony_args(s)
    s.set_defaults(func=cmd_prony)

    s = sub.add_parser("migrate", help="eigenvalue migration between two records")
    s.add_argument("send")
    s.add_argument("recv")
    prony_args(s)
    s.add_argument("--top", type=int, help="keep the N most energetic oscillatory modes")
    s.set_defaults(func=cmd_migrate)

    s = sub.add_parser("compare", help="plane-wave against classical divergence")
    case_args(s)
    s.add_argument("--horizon", type=float)
    s.set_defaults(func=cmd_compare)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
