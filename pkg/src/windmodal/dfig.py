"""Reduced-order DFIG wind farm model with primary frequency support.

The aggregated farm is represented the way stability studies usually do it:
stator transients are neglected, the machine plus its converter act as a
controlled current injection, and the converter current control is a
first-order lag.  On top of that sit

* a single-mass drive train (wind power in, electrical power out),
* a maximum-power-tracking curve P_opt(rotor speed),
* farm-level active-power command dynamics (second order), and
* the frequency-support droop  P_ref = P_opt - K_p*df - K_in*d(df)/dt,
  fed by a washout estimate of the local bus frequency and a filtered
  rate-of-change-of-frequency signal.

Kinetic-energy extraction for inertial response is implicit: whenever the
command exceeds the wind input the rotor decelerates, the tracking curve
winds the reference back down, and the rotor recovers.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .devices import DeviceError, DeviceModel

logger = logging.getLogger(__name__)

# Rotor-speed protection band, per unit. Excursions are logged, not tripped.
ROTOR_SPEED_BOUNDS = (0.6, 1.3)


@dataclass(frozen=True)
class DroopParams:
    """Gains of the primary-support law, per unit on the device base."""

    kp: float = 0.0
    kin: float = 0.0
    rocof_filter_time: float = 0.1
    enabled: bool = False

    def __post_init__(self):
        if self.kp < 0.0 or self.kin < 0.0:
            raise DeviceError(
                f"droop gains must be nonnegative (kp={self.kp}, kin={self.kin})"
            )
        if self.rocof_filter_time <= 0.0:
            raise DeviceError("rocof_filter_time must be positive")


@dataclass(frozen=True)
class MpptCurve:
    """Cubic tracking curve: zero below cut-in, k*w^3 up to rated, then flat.

    With the defaults (k=1, rated speed 1.0) the curve tops out at exactly
    1.0 pu, so the flat segment doubles as the pitch limiter.
    """

    k_opt: float = 1.0
    speed_cutin: float = 0.5
    speed_rated: float = 1.0
    speed_max: float = 1.3

    def __post_init__(self):
        if not 0.0 < self.speed_cutin < self.speed_rated:
            raise DeviceError("need 0 < speed_cutin < speed_rated")
        if self.k_opt <= 0.0:
            raise DeviceError("k_opt must be positive")

    @property
    def p_rated(self) -> float:
        return self.k_opt * self.speed_rated ** 3

    def p_opt(self, speed: float) -> float:
        if speed < 0.0 or speed > self.speed_max:
            logger.warning(
                "rotor speed %.3f pu outside curve domain [0, %.2f], clamping",
                speed, self.speed_max,
            )
            speed = min(max(speed, 0.0), self.speed_max)
        if speed <= self.speed_cutin:
            return 0.0
        return min(self.k_opt * speed ** 3, self.p_rated)

    def speed_at(self, power: float) -> float:
        """Inverse of the cubic segment; errors outside the tracking range."""
        if not 0.0 < power <= self.p_rated:
            raise DeviceError(
                f"power {power:.4f} pu is outside the tracking range "
                f"(0, {self.p_rated:.4f}]"
            )
        speed = (power / self.k_opt) ** (1.0 / 3.0)
        if speed <= self.speed_cutin:
            raise DeviceError(
                f"power {power:.4f} pu would require operating below cut-in"
            )
        return speed


def mppt_reference(speed: float, curve: MpptCurve) -> float:
    """Tracking-curve power for a rotor speed, per unit on the device base."""
    return curve.p_opt(speed)


def frequency_support_reference(p_opt: float, delta_f: float, rocof: float,
                                droop: DroopParams) -> float:
    """Active-power reference with the droop terms applied.

    ``delta_f`` is the per-unit frequency deviation, ``rocof`` its filtered
    derivative in pu/s.  Disabled droop returns ``p_opt`` untouched, which is
    also what zero gains produce.
    """
    if not droop.enabled:
        return p_opt
    return p_opt - droop.kp * delta_f - droop.kin * rocof


def rocof_estimate(times: np.ndarray, frequency: np.ndarray,
                   filter_time: float = 0.1) -> np.ndarray:
    """Washout s/(1 + s*T) applied to a sampled frequency signal.

    Integrates the filter state trapezoidally over the (possibly nonuniform)
    sample grid and returns the filtered df/dt at each sample.  A raw
    difference quotient would amplify measurement noise; the washout trades
    a little lag (settled after ~5 T) for a bounded high-frequency gain.
    """
    t = np.asarray(times, dtype=float)
    f = np.asarray(frequency, dtype=float)
    if t.shape != f.shape or t.ndim != 1:
        raise DeviceError("times and frequency must be 1-D arrays of equal length")
    if t.size < 2:
        raise DeviceError("need at least two samples")
    if filter_time <= 0.0:
        raise DeviceError("filter_time must be positive")
    x = f[0]  # filter state; starting at f means zero initial output
    out = np.empty_like(f)
    out[0] = (f[0] - x) / filter_time
    for k in range(1, t.size):
        h = t[k] - t[k - 1]
        if h <= 0.0:
            raise DeviceError("times must be strictly increasing")
        # trapezoidal update of dx/dt = (f - x)/T
        a = h / (2.0 * filter_time)
        x = ((1.0 - a) * x + a * (f[k] + f[k - 1])) / (1.0 + a)
        out[k] = (f[k] - x) / filter_time
    return out


@dataclass(frozen=True)
class DfigParams:
    """Aggregated-farm parameters, per unit on ``base_mva``.

    The induction-machine constants define the stator-side transient
    reactance of the Norton interface; with stator transients neglected the
    electrical response is otherwise governed by the converter controls.
    """

    base_mva: float = 300.0
    h_turbine: float = 4.0  # lumped drive-train inertia, s

    # asynchronous machine
    rs: float = 0.0071
    rr: float = 0.005
    xls: float = 0.171
    xlr: float = 0.156
    xm: float = 2.9

    # converter current control
    t_current: float = 0.02
    i_pmax: float = 1.2
    i_qmax: float = 0.66
    v_filter_time: float = 0.05
    v_floor: float = 0.2

    # farm-level active-power command dynamics; the speed-tracking power
    # reference is deliberately slow so fast power moves come only from the
    # frequency-support path
    p_ctrl_omega: float = 16.3  # rad/s
    p_ctrl_zeta: float = 0.125
    mppt_filter_time: float = 5.0

    # reactive channel (voltage-control or constant-Q outer loop)
    kv_p: float = 0.0
    kv_i: float = 20.0
    kq_p: float = 0.0
    kq_i: float = 2.0

    # frequency measurement and droop actuation.  The actuation stage is a
    # damped second-order tracker: nearly transparent at electromechanical
    # frequencies, with its phase concentrated up where the power-command
    # dynamics live.  Its poles are kept away from the ROCOF washout pole so
    # the independent channels never produce a repeated eigenvalue (which
    # would defeat modal analysis).
    freq_filter_time: float = 0.025
    droop_omega: float = 26.0
    droop_zeta: float = 0.40

    control_mode: str = "voltage"  # or "reactive_power"
    droop: DroopParams = field(default_factory=DroopParams)
    mppt: MpptCurve = field(default_factory=MpptCurve)

    def __post_init__(self):
        if self.control_mode not in ("voltage", "reactive_power"):
            raise DeviceError(
                f"control_mode must be 'voltage' or 'reactive_power', "
                f"got {self.control_mode!r}"
            )
        for name in ("base_mva", "h_turbine", "t_current", "v_filter_time",
                     "mppt_filter_time", "freq_filter_time", "droop_omega",
                     "droop_zeta"):
            if getattr(self, name) <= 0.0:
                raise DeviceError(f"{name} must be positive")

    @property
    def x_transient(self) -> float:
        """Stator transient reactance xls + xm*xlr/(xm + xlr)."""
        return self.xls + self.xm * self.xlr / (self.xm + self.xlr)


class Dfig(DeviceModel):
    """Dynamic model of the aggregated farm; see the module docstring."""

    device_class = "converter"
    source_depends_on_v = True

    state_names = (
        "rotor_speed",   # drive train, pu
        "p_cmd",         # farm power command, pu
        "p_cmd_rate",    # its rate, pu/s
        "droop_power",   # droop contribution after the actuation stage, pu
        "droop_rate",    # its rate, pu/s
        "i_p",           # active current, pu
        "v_filt",        # feed-forward voltage filter, pu
        "q_ctrl",        # reactive-channel integrator, pu
        "i_q",           # reactive current, pu
        "angle_filt",    # frequency-washout state, rad
        "rocof_filt",    # rocof-washout state, pu
        "mppt_power",    # filtered speed-tracking power reference, pu
    )

    def __init__(self, device_id: str, bus_id: int, params: DfigParams):
        super().__init__(device_id, bus_id)
        self.params = params
        # operating point, fixed by initialize()
        self.p_mech = None
        self.v_ref = None
        self.q_ref = None
        self._omega_s = None
        self._speed_flagged = False

    def initialize(self, v, s_gen_system, system_base_mva, omega_s):
        p = self.params
        vm = abs(v)
        if vm < p.v_floor:
            raise DeviceError(
                f"{self.device_id}: terminal voltage {vm:.3f} pu too low to initialize"
            )
        s_dev = s_gen_system * system_base_mva / p.base_mva
        p0, q0 = s_dev.real, s_dev.imag
        speed0 = p.mppt.speed_at(p0)  # errors if dispatch is off the curve
        i_p0 = p0 / vm
        i_q0 = q0 / vm
        if i_p0 > p.i_pmax or abs(i_q0) > p.i_qmax:
            raise DeviceError(
                f"{self.device_id}: dispatch exceeds converter current limits"
            )
        self.p_mech = p0
        self.v_ref = vm
        self.q_ref = q0
        self._omega_s = omega_s
        self._speed_flagged = False
        return np.array([
            speed0, p0, 0.0, 0.0, 0.0, i_p0, vm, i_q0, i_q0, np.angle(v),
            0.0, p0,
        ])

    def source_current(self, x, v, system_base_mva):
        direction = v / abs(v) if v is not None and abs(v) > 1e-12 else 1.0 + 0.0j
        i_dev = (x[5] - 1j * x[8]) * direction
        return i_dev * self.params.base_mva / system_base_mva

    def _measurements(self, x, v):
        p = self.params
        vm = abs(v)
        theta = np.angle(v)
        # washout frequency estimate from the bus angle; wrap-safe difference
        dth = _wrap_angle(theta - x[9])
        delta_f = dth / (p.freq_filter_time * self._omega_s)
        rocof = (delta_f - x[10]) / p.droop.rocof_filter_time
        return vm, dth, delta_f, rocof

    def derivatives(self, x, v):
        p = self.params
        (speed, p_cmd, p_rate, droop_p, droop_rate,
         i_p, v_filt, q_ctrl, i_q) = x[:9]
        vm, dth, delta_f, rocof = self._measurements(x, v)

        self._check_speed(speed)

        p_opt = p.mppt.p_opt(speed)
        p_track = x[11]
        if p.droop.enabled:
            droop_target = frequency_support_reference(0.0, delta_f, rocof, p.droop)
        else:
            droop_target = 0.0
        p_ref = p_track + droop_p

        # active channel
        d_p_cmd = p_rate
        d_p_rate = (p.p_ctrl_omega ** 2) * (p_ref - p_cmd) \
            - 2.0 * p.p_ctrl_zeta * p.p_ctrl_omega * p_rate
        i_cmd = np.clip(p_cmd / max(v_filt, p.v_floor), 0.0, p.i_pmax)
        d_i_p = (i_cmd - i_p) / p.t_current
        d_v_filt = (vm - v_filt) / p.v_filter_time

        # drive train
        p_elec = vm * i_p
        d_speed = (self.p_mech - p_elec) / (2.0 * p.h_turbine * max(speed, 0.05))

        # reactive channel
        if p.control_mode == "voltage":
            err = self.v_ref - vm
            d_q_ctrl = p.kv_i * err
            iq_cmd = q_ctrl + p.kv_p * err
        else:
            err = self.q_ref - vm * i_q
            d_q_ctrl = p.kq_i * err
            iq_cmd = q_ctrl + p.kq_p * err
        # conditional anti-windup on the integrator
        if (q_ctrl >= p.i_qmax and d_q_ctrl > 0.0) or \
           (q_ctrl <= -p.i_qmax and d_q_ctrl < 0.0):
            d_q_ctrl = 0.0
        d_i_q = (np.clip(iq_cmd, -p.i_qmax, p.i_qmax) - i_q) / p.t_current

        return np.array([
            d_speed,
            d_p_cmd,
            d_p_rate,
            droop_rate,
            (p.droop_omega ** 2) * (droop_target - droop_p)
            - 2.0 * p.droop_zeta * p.droop_omega * droop_rate,
            d_i_p,
            d_v_filt,
            d_q_ctrl,
            d_i_q,
            dth / p.freq_filter_time,
            rocof,
            (p_opt - p_track) / p.mppt_filter_time,
        ])

    def outputs(self, x, v):
        vm, _, delta_f, _ = self._measurements(x, v)
        return {
            "rotor_speed": float(x[0]),
            "active_power": float(vm * x[5]),
            "reactive_power": float(vm * x[8]),
            "bus_frequency": float(1.0 + delta_f),
        }

    def _check_speed(self, speed):
        lo, hi = ROTOR_SPEED_BOUNDS
        if (speed < lo or speed > hi) and not self._speed_flagged:
            self._speed_flagged = True
            logger.warning(
                "%s: rotor speed %.3f pu outside protection band [%.2f, %.2f]; "
                "simulation continues", self.device_id, speed, lo, hi,
            )


def _wrap_angle(angle: float) -> float:
    """Map an angle difference into (-pi, pi]."""
    return (angle + np.pi) % (2.0 * np.pi) - np.pi
