"""Device interface shared by every dynamic model in the toolkit.

A device owns a slice of the system state vector and talks to the network
through a Norton pair: a constant shunt admittance that is folded into the
dynamic admittance matrix once, and a source current that may depend on the
device states (and, for converter interfaces, on the terminal voltage).
Both are expressed on the system MVA base; everything inside ``derivatives``
stays on the device base.
"""

from __future__ import annotations

import numpy as np


class DeviceError(ValueError):
    pass


class DeviceModel:
    """Base class: identity, state labelling, and the network contract."""

    #: "synchronous" or "converter"; drives participation bookkeeping.
    device_class = "synchronous"

    #: True when ``source_current`` depends on the terminal voltage, which
    #: forces an inner iteration in the network solve.
    source_depends_on_v = False

    state_names: tuple[str, ...] = ()

    def __init__(self, device_id: str, bus_id: int):
        self.device_id = device_id
        self.bus_id = bus_id

    @property
    def n_states(self) -> int:
        return len(self.state_names)

    def initialize(self, v: complex, s_gen_system: complex,
                   system_base_mva: float, omega_s: float) -> np.ndarray:
        """Compute the operating point behind a power-flow solution.

        ``v`` is the solved terminal voltage, ``s_gen_system`` the device's
        generation on the system base.  Returns the equilibrium state slice;
        setpoint constants (references, mechanical input) are stored on the
        device and treated as immutable afterwards.
        """
        raise NotImplementedError

    def norton_admittance(self, system_base_mva: float) -> complex:
        return 0.0 + 0.0j

    def source_current(self, x: np.ndarray, v: complex | None,
                       system_base_mva: float) -> complex:
        raise NotImplementedError

    def derivatives(self, x: np.ndarray, v: complex) -> np.ndarray:
        raise NotImplementedError

    def outputs(self, x: np.ndarray, v: complex) -> dict[str, float]:
        """Per-device trace quantities (per unit on the device base)."""
        return {}


class VoltageSource(DeviceModel):
    """Stiff voltage source behind a small reactance; no states.

    Stands in for the rest of the grid in single-device studies.
    """

    state_names = ()

    def __init__(self, device_id: str, bus_id: int, voltage: complex = 1.0 + 0.0j,
                 x_source: float = 1e-4):
        super().__init__(device_id, bus_id)
        self.voltage = complex(voltage)
        self.x_source = float(x_source)

    def initialize(self, v, s_gen_system, system_base_mva, omega_s):
        return np.empty(0)

    def norton_admittance(self, system_base_mva):
        return 1.0 / (1j * self.x_source)

    def source_current(self, x, v, system_base_mva):
        return self.voltage / (1j * self.x_source)

    def outputs(self, x, v):
        return {}


class DriftingVoltageSource(DeviceModel):
    """Voltage source whose angle ramps at a fixed frequency offset.

    One state (the source angle) turns a constant per-unit frequency
    deviation into an autonomous model, which is how frequency-perturbation
    tests drive a device under test.
    """

    state_names = ("angle",)

    def __init__(self, device_id: str, bus_id: int, delta_f_pu: float,
                 voltage_mag: float = 1.0, x_source: float = 1e-4):
        super().__init__(device_id, bus_id)
        self.delta_f_pu = float(delta_f_pu)
        self.voltage_mag = float(voltage_mag)
        self.x_source = float(x_source)
        self._omega_s = None

    def initialize(self, v, s_gen_system, system_base_mva, omega_s):
        self._omega_s = omega_s
        return np.array([np.angle(v) if v != 0 else 0.0])

    def norton_admittance(self, system_base_mva):
        return 1.0 / (1j * self.x_source)

    def source_current(self, x, v, system_base_mva):
        e = self.voltage_mag * np.exp(1j * x[0])
        return e / (1j * self.x_source)

    def derivatives(self, x, v):
        return np.array([self._omega_s * self.delta_f_pu])

    def outputs(self, x, v):
        return {"bus_frequency": 1.0 + self.delta_f_pu}
