"""TOML case files.

Every quantity is stored in the units the simulator uses internally and the
key name carries the unit (``_pu``, ``_s``, ``_m``, ``_mva``, ``_hz``), so a
parsed case serializes back to an identical document. Complex impedances
are two-element ``[re, im]`` arrays.
"""

from __future__ import annotations

import math
import re
from pathlib import Path
from typing import Any

import tomli_w

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from .case import CaseDefinition, CaseOptions
from .dynamics import DampingSpec, Event, Generator
from .errors import CaseFileError, DegenerateBranchError, ValidationError
from .network import Branch, Bus, PowerNetwork

_NUM = (int, float)

# key -> (accepted types, required)
SCHEMA: dict[str, dict[str, tuple[tuple[type, ...], bool]]] = {
    "system": {
        "name": ((str,), False),
        "source": ((str,), False),
        "base_mva": (_NUM, True),
        "frequency_hz": (_NUM, True),
        "allow_any_frequency": ((bool,), False),
    },
    "buses": {
        "id": ((int,), True),
        "kind": ((str,), True),
        "v_set_pu": (_NUM, False),
        "load_p_pu": (_NUM, False),
        "load_q_pu": (_NUM, False),
        "gen_p_pu": (_NUM, False),
        "base_kv": (_NUM, False),
    },
    "branches": {
        "from": ((int,), True),
        "to": ((int,), True),
        "r_pu": (_NUM, True),
        "x_pu": (_NUM, True),
        "b_pu": (_NUM, False),
        "length_m": (_NUM, False),
        "rating_pu": (_NUM, False),
        "tap": (_NUM, False),
    },
    "generators": {
        "bus": ((int,), True),
        "tech": ((str,), True),
        "h_s": (_NUM, False),
        "rating_mva": (_NUM, True),
        "damping": ((str,), False),
        "d_pu_per_rad_s": (_NUM, False),
        "droop": (_NUM, False),
        "delay_s": (_NUM, False),
        "t_v_s": (_NUM, True),
        "z_m_pu": ((list,), True),
        "source_z_pu": ((list,), False),
        "p_set_pu": (_NUM, False),
        "e_set_pu": (_NUM, False),
        "q_limit_pu": (_NUM, False),
        "i_limit_pu": (_NUM, False),
        "p_headroom_pu": (_NUM, False),
        "track_lag_s": (_NUM, False),
    },
    "events": {
        "kind": ((str,), True),
        "time_s": (_NUM, True),
        "bus": ((int,), False),
        "dp_pu": (_NUM, False),
        "dq_pu": (_NUM, False),
        "branch": ((str,), False),
        "position": (_NUM, False),
        "y_fault_pu": ((list,), False),
    },
    "options": {
        "dt_s": (_NUM, False),
        "horizon_s": (_NUM, False),
        "kappa": (_NUM, False),
        "rocof_window_s": (_NUM, False),
        "eps_pol": (_NUM, False),
        "ufls_hz": (_NUM, False),
        "attribution": ((str,), False),
        "reduce": ((bool,), False),
    },
}
ARRAY_TABLES = ("buses", "branches", "generators", "events")


class _Locator:
    """Maps (table, index, key) to a 1-based line number in the source text."""

    def __init__(self, text: str):
        self.lines = text.splitlines()

    def line(self, table: str, index: int | None = None, key: str | None = None) -> int | None:
        header = re.compile(r"^\s*\[\[\s*%s\s*\]\]" % table if index is not None else r"^\s*\[\s*%s\s*\]" % table)
        seen = -1
        start = None
        for k, ln in enumerate(self.lines):
            if header.match(ln):
                seen += 1
                if index is None or seen == index:
                    start = k
                    break
        if start is None:
            return None
        if key is None:
            return start + 1
        pat = re.compile(r"^\s*%s\s*=" % re.escape(key))
        for k in range(start + 1, len(self.lines)):
            if self.lines[k].lstrip().startswith("["):
                break
            if pat.match(self.lines[k]):
                return k + 1
        return start + 1


def _fail(loc: _Locator, message: str, table: str, index: int | None = None, key: str | None = None):
    where = table if index is None else f"{table}[{index}]"
    if key:
        where += f".{key}"
    raise CaseFileError(message, where, loc.line(table, index, key))


def _check_table(loc: _Locator, name: str, data: Any, index: int | None = None) -> dict:
    if not isinstance(data, dict):
        _fail(loc, f"expected a table for {name}", name, index)
    schema = SCHEMA[name]
    for key, value in data.items():
        if key not in schema:
            _fail(loc, f"unknown key {key!r}", name, index, key)
        types, _ = schema[key]
        if isinstance(value, bool) and bool not in types:
            _fail(loc, f"{key} must be {'/'.join(t.__name__ for t in types)}, got bool", name, index, key)
        if not isinstance(value, types):
            _fail(loc, f"{key} must be {'/'.join(t.__name__ for t in types)}, got {type(value).__name__}",
                  name, index, key)
    for key, (_, required) in schema.items():
        if required and key not in data:
            _fail(loc, f"missing required key {key!r}", name, index)
    return data


def _complex(loc: _Locator, value: list, table: str, index: int, key: str) -> complex:
    if len(value) != 2 or not all(isinstance(v, _NUM) and not isinstance(v, bool) for v in value):
        _fail(loc, f"{key} must be a [re, im] pair of numbers", table, index, key)
    return complex(float(value[0]), float(value[1]))


def _f(data: dict, key: str, default=None):
    v = data.get(key, default)
    return float(v) if isinstance(v, _NUM) and not isinstance(v, bool) else v


def parse_case_text(text: str, source: str = "<string>") -> CaseDefinition:
    loc = _Locator(text)
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        m = re.search(r"line (\d+)", str(exc))
        raise CaseFileError(f"invalid TOML: {exc}", source, int(m.group(1)) if m else None) from None

    for key in doc:
        if key not in SCHEMA:
            raise CaseFileError(f"unknown section {key!r}", key, loc.line(key) or loc.line(key, 0))
    for name in ("system", "buses", "branches", "generators"):
        if name not in doc:
            raise CaseFileError(f"missing section [{name}]", name)
    for name in ARRAY_TABLES:
        if name in doc and not isinstance(doc[name], list):
            raise CaseFileError(f"{name} must be an array of tables ([[{name}]])", name, loc.line(name))

    system = _check_table(loc, "system", doc["system"])
    buses = []
    for k, raw in enumerate(doc["buses"]):
        d = _check_table(loc, "buses", raw, k)
        try:
            buses.append(Bus(
                id=d["id"], kind=d["kind"], voltage_setpoint=_f(d, "v_set_pu", 1.0),
                load_p=_f(d, "load_p_pu", 0.0), load_q=_f(d, "load_q_pu", 0.0),
                gen_p=_f(d, "gen_p_pu", 0.0), base_kv=_f(d, "base_kv", 230.0),
            ))
        except ValidationError as exc:
            _fail(loc, str(exc), "buses", k)

    branches = []
    for k, raw in enumerate(doc["branches"]):
        d = _check_table(loc, "branches", raw, k)
        label = f"{d['from']}-{d['to']}"
        if d["x_pu"] == 0:
            raise DegenerateBranchError(
                label, f"branch {label} has X = 0 (branches[{k}], line {loc.line('branches', k, 'x_pu')})"
            )
        try:
            branches.append(Branch(
                d["from"], d["to"], _f(d, "r_pu"), _f(d, "x_pu"), _f(d, "b_pu", 0.0),
                _f(d, "length_m", 0.0), _f(d, "rating_pu", 0.0), _f(d, "tap", 1.0),
            ))
        except ValidationError as exc:
            _fail(loc, str(exc), "branches", k)

    try:
        network = PowerNetwork(
            buses, branches, base_mva=_f(system, "base_mva"), nominal_frequency=_f(system, "frequency_hz"),
            allow_any_frequency=system.get("allow_any_frequency", False),
        )
    except ValidationError as exc:
        raise CaseFileError(str(exc), "system", loc.line("system")) from None

    generators = []
    for k, raw in enumerate(doc["generators"]):
        d = _check_table(loc, "generators", raw, k)
        kind = d.get("damping", "constant_D")
        if d["tech"] in ("GFM_droop", "GFM_VOC") and "droop" not in d:
            _fail(loc, f"generator at bus {d['bus']}: {d['tech']} requires a droop value", "generators", k)
        try:
            damping = DampingSpec(kind, D=_f(d, "d_pu_per_rad_s", 0.0), droop=_f(d, "droop", 0.0),
                                  delay=_f(d, "delay_s", 0.0))
            src = d.get("source_z_pu")
            generators.append(Generator(
                bus=d["bus"], tech=d["tech"], H=_f(d, "h_s", 0.0), rating=_f(d, "rating_mva"),
                damping=damping, T_v=_f(d, "t_v_s"),
                Z_m=_complex(loc, d["z_m_pu"], "generators", k, "z_m_pu"),
                source_impedance=None if src is None else _complex(loc, src, "generators", k, "source_z_pu"),
                P_set=_f(d, "p_set_pu"), E_set=_f(d, "e_set_pu"),
                q_limit=_f(d, "q_limit_pu", math.inf), i_limit=_f(d, "i_limit_pu", math.inf),
                p_headroom=_f(d, "p_headroom_pu", math.inf), track_lag=_f(d, "track_lag_s", 0.02),
            ))
        except ValidationError as exc:
            _fail(loc, str(exc), "generators", k)

    events = []
    for k, raw in enumerate(doc.get("events", [])):
        d = _check_table(loc, "events", raw, k)
        try:
            yf = d.get("y_fault_pu")
            kwargs = {}
            if yf is not None:
                kwargs["y_fault"] = _complex(loc, yf, "events", k, "y_fault_pu")
            events.append(Event(
                d["kind"], _f(d, "time_s"), bus=d.get("bus"), dp=_f(d, "dp_pu", 0.0), dq=_f(d, "dq_pu", 0.0),
                branch=d.get("branch"), position=_f(d, "position", 0.5), **kwargs,
            ))
        except ValidationError as exc:
            _fail(loc, str(exc), "events", k)

    opts = _check_table(loc, "options", doc.get("options", {}))
    try:
        options = CaseOptions(
            dt=_f(opts, "dt_s", 1e-3), horizon=_f(opts, "horizon_s", 10.0), kappa=_f(opts, "kappa"),
            rocof_window=_f(opts, "rocof_window_s", 0.05), eps_pol=_f(opts, "eps_pol", 1e-3),
            ufls_hz=_f(opts, "ufls_hz"), attribution=opts.get("attribution", "sending"),
            reduce=opts.get("reduce", True),
        )
    except ValidationError as exc:
        raise CaseFileError(str(exc), "options", loc.line("options")) from None

    try:
        return CaseDefinition(network, tuple(generators), tuple(events), options,
                              name=system.get("name", "case"), source=system.get("source", ""))
    except ValidationError as exc:
        raise CaseFileError(str(exc), "generators/events") from None


def parse_case(path: str | Path) -> CaseDefinition:
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    return parse_case_text(text, str(path))


def _cx(z: complex) -> list[float]:
    return [float(z.real), float(z.imag)]


def _drop_none(d: dict) -> dict:
    return {k: v for k, v in d.items() if v is not None}


def case_to_dict(case: CaseDefinition) -> dict:
    net = case.network
    system = {"name": case.name, "source": case.source, "base_mva": float(net.base_mva),
              "frequency_hz": float(net.nominal_frequency)}
    if net.allow_any_frequency:
        system["allow_any_frequency"] = True
    buses = [{
        "id": b.id, "kind": b.kind, "v_set_pu": b.voltage_setpoint, "load_p_pu": b.load_p,
        "load_q_pu": b.load_q, "gen_p_pu": b.gen_p, "base_kv": b.base_kv,
    } for b in net.buses]
    branches = [{
        "from": br.from_bus, "to": br.to_bus, "r_pu": br.r, "x_pu": br.x, "b_pu": br.b,
        "length_m": br.length, "rating_pu": br.rating, "tap": br.tap,
    } for br in net.branches]
    gens = []
    for g in case.generators:
        gens.append(_drop_none({
            "bus": g.bus, "tech": g.tech, "h_s": g.H, "rating_mva": g.rating, "damping": g.damping.kind,
            "d_pu_per_rad_s": g.damping.D, "droop": g.damping.droop, "delay_s": g.damping.delay,
            "t_v_s": g.T_v, "z_m_pu": _cx(complex(g.Z_m)),
            "source_z_pu": None if g.source_impedance is None else _cx(complex(g.source_impedance)),
            "p_set_pu": g.P_set, "e_set_pu": g.E_set, "q_limit_pu": g.q_limit, "i_limit_pu": g.i_limit,
            "p_headroom_pu": g.p_headroom, "track_lag_s": g.track_lag,
        }))
    events = [_drop_none({
        "kind": e.kind, "time_s": e.time, "bus": e.bus, "dp_pu": e.dp, "dq_pu": e.dq, "branch": e.branch,
        "position": e.position, "y_fault_pu": _cx(complex(e.y_fault)),
    }) for e in case.events]
    o = case.options
    options = _drop_none({
        "dt_s": o.dt, "horizon_s": o.horizon, "kappa": o.kappa, "rocof_window_s": o.rocof_window,
        "eps_pol": o.eps_pol, "ufls_hz": o.ufls_hz, "attribution": o.attribution, "reduce": o.reduce,
    })
    doc = {"system": system, "options": options, "buses": buses, "branches": branches, "generators": gens}
    if events:
        doc["events"] = events
    return doc


def serialize_case(case: CaseDefinition) -> str:
    return tomli_w.dumps(case_to_dict(case))


def write_case(case: CaseDefinition, path: str | Path) -> Path:
    path = Path(path)
    path.write_text(serialize_case(case), encoding="utf-8")
    return path
