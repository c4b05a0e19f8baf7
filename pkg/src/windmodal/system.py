"""Assembly of devices and network into one autonomous dynamic model.

The network has no states of its own: loads are constant impedances fixed at
the power-flow voltages, every device contributes a Norton shunt to the
dynamic admittance matrix, and the bus voltages solve

    Y_dyn V = sum of device source currents.

Machine sources depend only on machine states, so scenario A reduces to one
LU solve per evaluation; converter sources see their own terminal voltage,
which adds a (rapidly contracting) fixed-point loop.  The assembled object
implements the model protocol used by ``modal.linearize`` and the
time-domain integrator: ``rhs``, ``equilibrium``, ``state_labels``.

Event support lives here as grid variants: a three-phase fault (bus shunt,
or midpoint shunt on a split branch), a tripped branch, a scaled load.  Each
variant is a fresh matrix built from the unmodified base, so clearing an
event is exact by construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from .devices import DeviceModel
from .modal import StateLabel
from .network import Branch, Network, NetworkError, build_ybus
from .powerflow import PowerFlowSolution

ALGEBRAIC_TOL = 1e-12
ALGEBRAIC_MAX_ITER = 80
EQUILIBRIUM_TOL = 1e-8
DEFAULT_FAULT_ADMITTANCE = 1e4


class SystemModelError(RuntimeError):
    pass


@dataclass
class GridModel:
    """One admittance view of the system (base case or event variant)."""

    y: np.ndarray
    n_bus: int                     # base bus count; device rows live here
    note: str = "base"
    lu: tuple = field(default=None, repr=False)

    def __post_init__(self):
        if self.lu is None:
            self.lu = lu_factor(self.y)


@dataclass(frozen=True)
class FaultSpec:
    """Target of a three-phase fault: a bus id or a named branch midpoint."""

    bus: int | None = None
    branch: str | None = None
    admittance: float = DEFAULT_FAULT_ADMITTANCE

    def __post_init__(self):
        if (self.bus is None) == (self.branch is None):
            raise SystemModelError("fault needs exactly one of bus or branch")
        if self.admittance <= 0.0:
            raise SystemModelError("fault admittance must be positive")


class DynamicSystem:
    """Devices plus network behind a single state vector."""

    def __init__(self, network: Network, devices: list[DeviceModel],
                 pf: PowerFlowSolution):
        if not devices:
            raise SystemModelError("no devices to assemble")
        self.network = network
        self.devices = list(devices)
        self.pf = pf
        self.omega_s = 2.0 * np.pi * network.frequency_hz
        self._idx = network.index()

        seen_buses = set()
        for dev in self.devices:
            if dev.bus_id not in self._idx:
                raise SystemModelError(
                    f"device {dev.device_id} sits on unknown bus {dev.bus_id}"
                )
            if dev.bus_id in seen_buses:
                raise SystemModelError(
                    f"bus {dev.bus_id} has more than one device; generation "
                    "cannot be split unambiguously"
                )
            seen_buses.add(dev.bus_id)

        # state bookkeeping
        self._labels: list[StateLabel] = []
        self._slices: list[slice] = []
        self._rows: list[int] = []
        pos = 0
        for dev in self.devices:
            self._slices.append(slice(pos, pos + dev.n_states))
            self._rows.append(self._idx[dev.bus_id])
            for name in dev.state_names:
                self._labels.append(StateLabel(dev.device_id, name,
                                               dev.device_class))
            pos += dev.n_states
        self.n_states = pos
        names = [str(lab) for lab in self._labels]
        if len(set(names)) != len(names):
            raise SystemModelError("device ids produce duplicate state labels")

        # dynamic admittance matrix: network + loads as impedances + Nortons
        base = network.base_mva
        vm = {bus_id: abs(pf.voltage(bus_id)) for bus_id in pf.bus_ids}
        y, _ = build_ybus(network, include_load_shunts=True, load_voltages=vm)
        self._load_admittance = np.zeros(network.n_bus, dtype=complex)
        for b in network.buses:
            if b.p_load != 0.0 or b.q_load != 0.0:
                self._load_admittance[self._idx[b.id]] = \
                    complex(b.p_load, -b.q_load) / vm[b.id] ** 2
        for dev, row in zip(self.devices, self._rows):
            y[row, row] += dev.norton_admittance(base)
        self._base_grid = GridModel(y=y, n_bus=network.n_bus)
        self._v_dependent = [dev.source_depends_on_v for dev in self.devices]

        # device equilibria from the power-flow point
        x0_parts = []
        for dev in self.devices:
            v_bus = pf.voltage(dev.bus_id)
            s_gen = pf.generation(dev.bus_id)
            x0_parts.append(np.asarray(
                dev.initialize(v_bus, s_gen, base, self.omega_s), dtype=float))
        self._x0 = np.concatenate(x0_parts) if x0_parts else np.empty(0)

        v_pf = np.array([pf.voltage(b.id) for b in network.buses])
        self._v_eq = self.solve_network(self._x0, v_guess=v_pf)

        r = self.rhs(self._x0)
        worst = int(np.argmax(np.abs(r)))
        if abs(r[worst]) > EQUILIBRIUM_TOL:
            raise SystemModelError(
                "assembled system is not at equilibrium: d/dt of "
                f"'{self._labels[worst]}' is {r[worst]:.3e}; device "
                "initialization is inconsistent with the power flow"
            )

    # -- model protocol ----------------------------------------------------

    def state_labels(self) -> list[StateLabel]:
        return list(self._labels)

    def equilibrium(self) -> np.ndarray:
        return self._x0.copy()

    def rhs(self, x: np.ndarray, grid: GridModel | None = None,
            v_guess: np.ndarray | None = None) -> np.ndarray:
        v = self.solve_network(x, grid=grid, v_guess=v_guess)
        dx = np.empty(self.n_states)
        for dev, sl, row in zip(self.devices, self._slices, self._rows):
            dx[sl] = dev.derivatives(x[sl], v[row])
        return dx

    # -- network solution --------------------------------------------------

    @property
    def base_grid(self) -> GridModel:
        return self._base_grid

    @property
    def equilibrium_voltages(self) -> np.ndarray:
        return self._v_eq.copy()

    def solve_network(self, x: np.ndarray, grid: GridModel | None = None,
                      v_guess: np.ndarray | None = None) -> np.ndarray:
        """Bus voltages for the current states.

        Returns the full (possibly event-augmented) voltage vector.  The
        fixed-point loop only runs when voltage-dependent sources exist and
        iterates to ``ALGEBRAIC_TOL`` in the infinity norm.
        """
        grid = grid if grid is not None else self._base_grid
        n_aug = grid.y.shape[0]
        base = self.network.base_mva
        i_fixed = np.zeros(n_aug, dtype=complex)
        variable = []
        for dev, sl, row, dep in zip(self.devices, self._slices, self._rows,
                                     self._v_dependent):
            if dep:
                variable.append((dev, sl, row))
            else:
                i_fixed[row] += dev.source_current(x[sl], None, base)
        if not variable:
            return lu_solve(grid.lu, i_fixed)

        if v_guess is not None:
            v = np.ones(n_aug, dtype=complex)
            v[:min(n_aug, v_guess.size)] = v_guess[:min(n_aug, v_guess.size)]
        elif getattr(self, "_v_eq", None) is not None:
            v = np.ones(n_aug, dtype=complex)
            v[:self.network.n_bus] = self._v_eq[:self.network.n_bus]
        else:
            v = np.ones(n_aug, dtype=complex)

        for _ in range(ALGEBRAIC_MAX_ITER):
            i = i_fixed.copy()
            for dev, sl, row in variable:
                i[row] += dev.source_current(x[sl], v[row], base)
            v_new = lu_solve(grid.lu, i)
            delta = float(np.max(np.abs(v_new - v)))
            v = v_new
            if delta <= ALGEBRAIC_TOL:
                return v
        raise SystemModelError(
            f"network algebraic loop did not converge (last step {delta:.3e})"
        )

    # -- event grid variants -------------------------------------------------

    def grid_variant(self, faults: list[FaultSpec] = (),
                     out_branches: list[str] = (),
                     load_scales: dict[int, float] | None = None) -> GridModel:
        """Admittance matrix with the given modifications applied to base.

        Midpoint faults append one bus per faulted branch; everything else
        keeps the base dimensions.  Built fresh from the unmodified base so
        variants never accumulate.
        """
        n = self.network.n_bus
        midpoint = [f for f in faults if f.branch is not None]
        n_aug = n + len(midpoint)
        y = np.zeros((n_aug, n_aug), dtype=complex)
        y[:n, :n] = self._base_grid.y
        notes = []

        for name in out_branches:
            br = self.network.branch(name)
            if not br.in_service:
                raise SystemModelError(f"branch {name!r} is already out")
            self._stamp(y, br, sign=-1.0)
            notes.append(f"out:{name}")

        for k, f in enumerate(midpoint):
            br = self.network.branch(f.branch)
            if br.tap != 1.0:
                raise SystemModelError(
                    f"midpoint fault on off-nominal-tap branch {f.branch!r} "
                    "is not supported"
                )
            if f.branch in out_branches:
                raise SystemModelError(
                    f"branch {f.branch!r} cannot be both faulted and out"
                )
            m = n + k
            fi, ti = self._idx[br.from_bus], self._idx[br.to_bus]
            self._stamp(y, br, sign=-1.0)
            y_half = 2.0 * br.y_series
            sh_half = 1j * br.b_shunt / 4.0
            for a, bidx in ((fi, m), (m, ti)):
                y[a, a] += y_half + sh_half
                y[bidx, bidx] += y_half + sh_half
                y[a, bidx] -= y_half
                y[bidx, a] -= y_half
            y[m, m] += f.admittance
            notes.append(f"fault:{f.branch}")

        for f in faults:
            if f.bus is not None:
                if f.bus not in self._idx:
                    raise SystemModelError(f"fault targets unknown bus {f.bus}")
                y[self._idx[f.bus], self._idx[f.bus]] += f.admittance
                notes.append(f"fault:bus{f.bus}")

        if load_scales:
            for bus_id, scale in load_scales.items():
                if bus_id not in self._idx:
                    raise SystemModelError(
                        f"load step targets unknown bus {bus_id}"
                    )
                row = self._idx[bus_id]
                if self._load_admittance[row] == 0.0:
                    raise SystemModelError(
                        f"bus {bus_id} has no load to step"
                    )
                y[row, row] += (scale - 1.0) * self._load_admittance[row]
                notes.append(f"load:{bus_id}x{scale:g}")

        return GridModel(y=y, n_bus=n, note=",".join(notes) or "base")

    def _stamp(self, y, br: Branch, sign: float):
        fi, ti = self._idx[br.from_bus], self._idx[br.to_bus]
        ys = br.y_series
        sh = 1j * br.b_shunt / 2.0
        y[fi, fi] += sign * (ys + sh) / br.tap ** 2
        y[ti, ti] += sign * (ys + sh)
        y[fi, ti] -= sign * ys / br.tap
        y[ti, fi] -= sign * ys / br.tap

    # -- diagnostics ---------------------------------------------------------

    def device_outputs(self, x: np.ndarray, v: np.ndarray) -> dict[str, float]:
        out: dict[str, float] = {}
        for dev, sl, row in zip(self.devices, self._slices, self._rows):
            for key, val in dev.outputs(x[sl], v[row]).items():
                out[f"{dev.device_id}.{key}"] = val
        return out

    def power_balance_residual(self, x: np.ndarray, v: np.ndarray,
                               grid: GridModel | None = None) -> float:
        """|device injection - network absorption| in pu; an audit of the
        algebraic solution, tiny whenever the solve converged."""
        grid = grid if grid is not None else self._base_grid
        base = self.network.base_mva
        p_dev = 0.0
        for dev, sl, row in zip(self.devices, self._slices, self._rows):
            i = dev.source_current(x[sl], v[row], base) \
                - dev.norton_admittance(base) * v[row]
            p_dev += (v[row] * np.conj(i)).real
        p_net = float((v @ np.conj(grid.y @ v)).real)
        # remove the Norton parts that were folded into the matrix
        for dev, sl, row in zip(self.devices, self._slices, self._rows):
            p_net -= (v[row] * np.conj(dev.norton_admittance(base) * v[row])).real
        return abs(p_dev - p_net)


def assemble(network: Network, devices: list[DeviceModel],
             pf: PowerFlowSolution) -> DynamicSystem:
    """Convenience constructor mirroring the pipeline order."""
    return DynamicSystem(network, devices, pf)
