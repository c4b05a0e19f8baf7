"""Bus/branch network model and admittance-matrix assembly.

Everything is per unit on the system MVA base.  Branches use the standard
pi model with an off-nominal tap on the from side; loads live on the buses
as constant P/Q for the power flow and can be folded into the admittance
matrix as constant impedances for dynamic studies.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

BUS_KINDS = ("slack", "pv", "pq")


class NetworkError(ValueError):
    pass


@dataclass(frozen=True)
class Bus:
    id: int
    kind: str = "pq"
    base_kv: float = 230.0
    voltage_mag: float = 1.0   # setpoint for slack/pv, initial guess for pq
    voltage_angle: float = 0.0  # rad; only the slack angle is held
    p_load: float = 0.0        # pu on system base; negative q_load = shunt cap
    q_load: float = 0.0
    p_gen: float = 0.0         # scheduled generation (pv/pq); slack is solved
    q_gen: float = 0.0         # scheduled only where no voltage regulation

    def __post_init__(self):
        if self.kind not in BUS_KINDS:
            raise NetworkError(f"bus {self.id}: unknown kind {self.kind!r}")
        if self.voltage_mag <= 0.0:
            raise NetworkError(f"bus {self.id}: voltage magnitude must be positive")


@dataclass(frozen=True)
class Branch:
    from_bus: int
    to_bus: int
    x: float
    r: float = 0.0
    b_shunt: float = 0.0  # total line charging
    tap: float = 1.0      # from-side off-nominal ratio
    in_service: bool = True
    name: str = ""

    def __post_init__(self):
        if self.from_bus == self.to_bus:
            raise NetworkError(f"branch {self.label}: from and to bus coincide")
        if self.r == 0.0 and self.x == 0.0:
            raise NetworkError(f"branch {self.label}: zero series impedance")
        if self.tap <= 0.0:
            raise NetworkError(f"branch {self.label}: tap must be positive")

    @property
    def label(self) -> str:
        return self.name or f"{self.from_bus}-{self.to_bus}"

    @property
    def y_series(self) -> complex:
        return 1.0 / complex(self.r, self.x)


@dataclass
class Network:
    buses: list[Bus]
    branches: list[Branch]
    base_mva: float = 100.0
    frequency_hz: float = 60.0

    def __post_init__(self):
        self.validate()

    @property
    def n_bus(self) -> int:
        return len(self.buses)

    def index(self) -> dict[int, int]:
        return {b.id: i for i, b in enumerate(self.buses)}

    def bus(self, bus_id: int) -> Bus:
        for b in self.buses:
            if b.id == bus_id:
                return b
        raise NetworkError(f"no bus with id {bus_id}")

    def branch(self, name: str) -> Branch:
        for br in self.branches:
            if br.label == name:
                return br
        raise NetworkError(f"no branch named {name!r}")

    def validate(self):
        ids = [b.id for b in self.buses]
        if len(set(ids)) != len(ids):
            dupes = sorted({i for i in ids if ids.count(i) > 1})
            raise NetworkError(f"duplicate bus ids: {dupes}")
        slacks = [b.id for b in self.buses if b.kind == "slack"]
        if len(slacks) != 1:
            raise NetworkError(
                f"need exactly one slack bus, found {len(slacks)}: {slacks}"
            )
        id_set = set(ids)
        for br in self.branches:
            for end in (br.from_bus, br.to_bus):
                if end not in id_set:
                    raise NetworkError(
                        f"branch {br.label} references unknown bus {end}"
                    )
        labels = [br.label for br in self.branches]
        if len(set(labels)) != len(labels):
            dupes = sorted({l for l in labels if labels.count(l) > 1})
            raise NetworkError(
                f"parallel branches need distinct names; duplicates: {dupes}"
            )
        self._check_connected()

    def _check_connected(self):
        if not self.buses:
            raise NetworkError("network has no buses")
        adj: dict[int, set[int]] = {b.id: set() for b in self.buses}
        for br in self.branches:
            if br.in_service:
                adj[br.from_bus].add(br.to_bus)
                adj[br.to_bus].add(br.from_bus)
        seen = {self.buses[0].id}
        stack = [self.buses[0].id]
        while stack:
            for nb in adj[stack.pop()]:
                if nb not in seen:
                    seen.add(nb)
                    stack.append(nb)
        missing = sorted(set(adj) - seen)
        if missing:
            raise NetworkError(
                f"network is not connected; unreachable buses: {missing}"
            )

    def to_dict(self) -> dict:
        return {
            "base_mva": self.base_mva,
            "frequency_hz": self.frequency_hz,
            "buses": [asdict(b) for b in self.buses],
            "branches": [asdict(br) for br in self.branches],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Network":
        try:
            buses = [Bus(**b) for b in data["buses"]]
            branches = [Branch(**br) for br in data["branches"]]
        except TypeError as exc:
            raise NetworkError(f"bad network record: {exc}") from exc
        return cls(buses=buses, branches=branches,
                   base_mva=data.get("base_mva", 100.0),
                   frequency_hz=data.get("frequency_hz", 60.0))

    def save(self, path: str | Path):
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True))

    @classmethod
    def load(cls, path: str | Path) -> "Network":
        return cls.from_dict(json.loads(Path(path).read_text()))


def build_ybus(network: Network, include_load_shunts: bool = False,
               load_voltages: dict[int, float] | None = None
               ) -> tuple[np.ndarray, dict[int, int]]:
    """Bus admittance matrix and the bus-id to row index map.

    Off-diagonals carry -y_series/tap; diagonals accumulate series terms,
    half line charging, and (optionally) the bus loads converted to constant
    admittance at ``load_voltages`` (default 1.0 pu).
    """
    idx = network.index()
    n = network.n_bus
    y = np.zeros((n, n), dtype=complex)
    for br in network.branches:
        if not br.in_service:
            continue
        f, t = idx[br.from_bus], idx[br.to_bus]
        ys = br.y_series
        sh = 1j * br.b_shunt / 2.0
        y[f, f] += (ys + sh) / br.tap ** 2
        y[t, t] += ys + sh
        y[f, t] -= ys / br.tap
        y[t, f] -= ys / br.tap
    if include_load_shunts:
        for b in network.buses:
            if b.p_load == 0.0 and b.q_load == 0.0:
                continue
            vm = 1.0 if load_voltages is None else load_voltages.get(b.id, 1.0)
            if vm <= 0.0:
                raise NetworkError(f"bus {b.id}: load voltage must be positive")
            y[idx[b.id], idx[b.id]] += complex(b.p_load, -b.q_load) / vm ** 2
    return y, idx
