"""Case container shared by the case-file reader and the scenario harness."""

from __future__ import annotations

from dataclasses import dataclass, field

from .dynamics import Event, Generator
from .errors import ValidationError
from .network import PowerNetwork

ATTRIBUTIONS = ("sending", "split")


@dataclass(frozen=True)
class CaseOptions:
    dt: float = 1e-3
    horizon: float = 10.0
    kappa: float | None = None
    rocof_window: float = 0.05
    eps_pol: float = 1e-3
    ufls_hz: float | None = None
    attribution: str = "sending"
    reduce: bool = True

    def __post_init__(self):
        if not self.dt > 0:
            raise ValidationError("options.dt_s must be positive")
        if not self.horizon > 0:
            raise ValidationError("options.horizon_s must be positive")
        if not self.rocof_window > 0:
            raise ValidationError("options.rocof_window_s must be positive")
        if self.kappa is not None and self.kappa < 0:
            raise ValidationError("options.kappa must be non-negative")
        if self.attribution not in ATTRIBUTIONS:
            raise ValidationError(f"options.attribution must be one of {ATTRIBUTIONS}")


@dataclass(frozen=True)
class CaseDefinition:
    network: PowerNetwork
    generators: tuple[Generator, ...]
    events: tuple[Event, ...] = ()
    options: CaseOptions = field(default_factory=CaseOptions)
    name: str = "case"
    source: str = ""

    def __post_init__(self):
        object.__setattr__(self, "generators", tuple(self.generators))
        object.__setattr__(self, "events", tuple(self.events))
        ids = set(self.network.bus_ids)
        seen = set()
        for g in self.generators:
            if g.bus not in ids:
                raise ValidationError(f"generator references missing bus {g.bus}")
            if g.bus in seen:
                raise ValidationError(f"more than one generator at bus {g.bus}")
            seen.add(g.bus)
        for ev in self.events:
            ev.check(self.network)
