"""Target scenarios: which bins hold targets over time, and at what SNR.

SNR schedules are breakpoint lists interpolated linearly in dB; a plain float
is a constant schedule. Scenario files (YAML or JSON) mirror these fields, see
the README for the schema.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
import yaml

from .arrays import AngularGrid

__all__ = [
    "SnrSchedule",
    "TargetSpec",
    "Scenario",
    "scenario_library",
    "load_scenario",
    "scenario_to_dict",
    "scenario_from_dict",
]

NU_MATCH_TOL = 1e-12


@dataclass(frozen=True)
class SnrSchedule:
    """Piecewise-linear-in-dB SNR over time, clamped outside the breakpoints."""

    points: tuple[tuple[int, float], ...]

    def __post_init__(self) -> None:
        pts = tuple((int(k), float(db)) for k, db in self.points)
        if not pts:
            raise ValueError("schedule needs at least one breakpoint")
        ks = [k for k, _ in pts]
        if any(b <= a for a, b in zip(ks, ks[1:])):
            raise ValueError("breakpoint times must be strictly increasing")
        object.__setattr__(self, "points", pts)

    @classmethod
    def constant(cls, snr_db: float) -> "SnrSchedule":
        return cls(((1, float(snr_db)),))

    def value(self, k: int) -> float:
        ks = np.array([p[0] for p in self.points], dtype=float)
        dbs = np.array([p[1] for p in self.points], dtype=float)
        return float(np.interp(k, ks, dbs))


@dataclass(frozen=True)
class TargetSpec:
    """One target: grid bin (1-based), spatial frequency, SNR schedule, active window.

    nu may be left None and resolved against a grid later; when both bin and nu
    are given they must agree.
    """

    bin: int
    nu: float | None
    snr_db: SnrSchedule
    active: tuple[int, int]

    def __post_init__(self) -> None:
        if self.bin < 1:
            raise ValueError("bin indices are 1-based")
        if isinstance(self.snr_db, (int, float)):
            object.__setattr__(self, "snr_db", SnrSchedule.constant(self.snr_db))
        k0, k1 = (int(self.active[0]), int(self.active[1]))
        if k0 < 1 or k1 < k0:
            raise ValueError(f"bad active interval [{k0}, {k1}]")
        object.__setattr__(self, "active", (k0, k1))

    def active_at(self, k: int) -> bool:
        return self.active[0] <= k <= self.active[1]

    def snr_db_at(self, k: int) -> float:
        return self.snr_db.value(k)

    def resolve(self, grid: AngularGrid) -> "TargetSpec":
        """Fill nu from the grid, or check that an explicit nu matches it."""
        grid_nu = grid.nu_of(self.bin)
        if self.nu is None:
            return replace(self, nu=grid_nu)
        if abs(self.nu - grid_nu) > NU_MATCH_TOL:
            raise ValueError(
                f"target at bin {self.bin} declares nu = {self.nu} "
                f"but the grid puts that bin at {grid_nu}"
            )
        return self


@dataclass(frozen=True)
class Scenario:
    """A named time-indexed target list over a fixed simulation horizon."""

    name: str
    horizon: int
    targets: tuple[TargetSpec, ...]

    def __post_init__(self) -> None:
        if self.horizon < 1:
            raise ValueError("horizon must be at least 1")
        targets = tuple(self.targets)
        object.__setattr__(self, "targets", targets)
        for t in targets:
            if t.active[1] > self.horizon:
                raise ValueError(
                    f"target at bin {t.bin} active through {t.active[1]}, "
                    f"beyond horizon {self.horizon}"
                )
        # two targets may share a bin only if their windows never overlap
        for i, a in enumerate(targets):
            for b in targets[i + 1 :]:
                if a.bin == b.bin and a.active[0] <= b.active[1] and b.active[0] <= a.active[1]:
                    raise ValueError(f"two targets overlap in time at bin {a.bin}")

    def active_targets(self, k: int) -> tuple[TargetSpec, ...]:
        if not 1 <= k <= self.horizon:
            raise ValueError(f"step {k} outside horizon 1..{self.horizon}")
        return tuple(t for t in self.targets if t.active_at(k))

    def resolve(self, grid: AngularGrid) -> "Scenario":
        """Validate against a grid and fill in missing spatial frequencies."""
        if len(self.targets) > len(grid):
            raise ValueError("more targets than grid bins")
        for t in self.targets:
            if t.bin > len(grid):
                raise ValueError(f"target bin {t.bin} beyond grid size {len(grid)}")
        return replace(self, targets=tuple(t.resolve(grid) for t in self.targets))


def scenario_library() -> dict[str, Scenario]:
    """The four named scenarios (grid of 20 bins)."""
    ramp = SnrSchedule(((1, -30.0), (100, -20.0), (200, -30.0)))
    return {
        "scenario1": Scenario(
            "scenario1",
            300,
            (
                TargetSpec(7, -0.20, SnrSchedule.constant(-20.0), (1, 300)),
                TargetSpec(16, 0.25, SnrSchedule.constant(-20.0), (1, 300)),
            ),
        ),
        "scenario2": Scenario(
            "scenario2",
            100,
            (TargetSpec(17, 0.30, SnrSchedule.constant(-20.0), (1, 100)),),
        ),
        "scenario3": Scenario(
            "scenario3",
            200,
            (
                TargetSpec(7, -0.20, ramp, (1, 200)),
                TargetSpec(16, 0.25, ramp, (1, 200)),
            ),
        ),
        "scenario4": Scenario(
            "scenario4",
            400,
            (
                TargetSpec(5, -0.30, SnrSchedule.constant(-18.0), (1, 100)),
                TargetSpec(13, 0.10, SnrSchedule.constant(-21.0), (1, 300)),
                TargetSpec(17, 0.30, SnrSchedule.constant(-20.0), (201, 400)),
            ),
        ),
    }


def _schedule_to_obj(sched: SnrSchedule):
    if len(sched.points) == 1:
        return sched.points[0][1]
    return [[k, db] for k, db in sched.points]


def scenario_to_dict(scenario: Scenario) -> dict:
    return {
        "name": scenario.name,
        "horizon": scenario.horizon,
        "targets": [
            {
                "bin": t.bin,
                **({"nu": t.nu} if t.nu is not None else {}),
                "snr_db": _schedule_to_obj(t.snr_db),
                "active": [t.active[0], t.active[1]],
            }
            for t in scenario.targets
        ],
    }


def scenario_from_dict(data: dict, name: str | None = None) -> Scenario:
    if "horizon" not in data:
        raise ValueError("scenario definition needs a horizon")
    horizon = int(data["horizon"])
    targets = []
    for entry in data.get("targets", []):
        if "bin" not in entry:
            raise ValueError("every target needs a bin")
        snr = entry.get("snr_db", 0.0)
        if isinstance(snr, (list, tuple)):
            sched = SnrSchedule(tuple((int(k), float(db)) for k, db in snr))
        else:
            sched = SnrSchedule.constant(float(snr))
        active = entry.get("active", [1, horizon])
        targets.append(
            TargetSpec(
                bin=int(entry["bin"]),
                nu=float(entry["nu"]) if "nu" in entry else None,
                snr_db=sched,
                active=(int(active[0]), int(active[1])),
            )
        )
    return Scenario(str(data.get("name", name or "custom")), horizon, tuple(targets))


def load_scenario(path: str | Path) -> Scenario:
    """Load a scenario definition from a YAML or JSON file."""
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    data = json.loads(text) if path.suffix.lower() == ".json" else yaml.safe_load(text)
    if not isinstance(data, dict):
        raise ValueError(f"scenario file {path} must hold a mapping")
    return scenario_from_dict(data, name=path.stem)
