"""Sixth-order synchronous machine with excitation, stabilizer and governor.

Two-axis model with one transient and one subtransient circuit per axis,
interfaced to the network as a Norton source behind Ra + jX''.  Equal d- and
q-axis subtransient reactances are required so the interface reduces to a
single complex impedance.  Controls are deliberately low order: a first-order
static exciter, a speed-input stabilizer (washout plus two lead-lag stages),
and a first-order droop governor.  Hard limits on field voltage, mechanical
power and stabilizer output are enforced as non-windup clamps.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .devices import DeviceError, DeviceModel


@dataclass(frozen=True)
class SyncGenParams:
    """Machine and control constants, per unit on ``base_mva``."""

    base_mva: float = 900.0
    h_s: float = 6.5       # inertia constant, s
    d_pu: float = 0.0      # damping torque coefficient
    ra: float = 0.0025
    xd: float = 1.8
    xq: float = 1.7
    xd_t: float = 0.3      # transient reactances
    xq_t: float = 0.55
    xd_st: float = 0.25    # subtransient; d and q must match
    xq_st: float = 0.25
    td0_t: float = 8.0     # open-circuit time constants, s
    tq0_t: float = 0.45
    td0_st: float = 0.03
    tq0_st: float = 0.05

    # static exciter
    ka: float = 200.0
    ta: float = 0.02
    efd_max: float = 6.0
    efd_min: float = 0.0

    # power system stabilizer on speed deviation
    k_pss: float = 10.0
    t_washout: float = 10.0
    t1: float = 0.05
    t2: float = 0.02
    t3: float = 3.0
    t4: float = 5.4
    vs_max: float = 0.2

    # governor; has_governor=False holds mechanical power at its dispatch
    # (pm relaxes to pm_ref so the state keeps a well-defined eigenvalue)
    has_governor: bool = True
    r_droop: float = 0.05
    t_gov: float = 0.5
    pm_max: float = 1.0
    pm_min: float = 0.0

    def __post_init__(self):
        if self.xd_st != self.xq_st:
            raise DeviceError(
                "equal subtransient reactances are required for the complex "
                f"Norton interface (xd_st={self.xd_st}, xq_st={self.xq_st})"
            )
        if not (self.xd > self.xd_t > self.xd_st > 0.0):
            raise DeviceError("need xd > xd_t > xd_st > 0")
        if not (self.xq > self.xq_t > self.xq_st > 0.0):
            raise DeviceError("need xq > xq_t > xq_st > 0")
        for name in ("h_s", "td0_t", "tq0_t", "td0_st", "tq0_st", "ta",
                     "t_gov", "t_washout", "t2", "t4", "base_mva"):
            if getattr(self, name) <= 0.0:
                raise DeviceError(f"{name} must be positive")


class SyncGen(DeviceModel):
    """State order: delta, speed, eq_t, ed_t, eq_st, ed_st, efd, pm,
    pss_washout, pss_lead1, pss_lead2.  Speed is the per-unit deviation."""

    device_class = "synchronous"
    source_depends_on_v = False

    state_names = (
        "delta", "speed", "eq_t", "ed_t", "eq_st", "ed_st",
        "efd", "pm", "pss_washout", "pss_lead1", "pss_lead2",
    )

    def __init__(self, device_id: str, bus_id: int, params: SyncGenParams):
        super().__init__(device_id, bus_id)
        self.params = params
        self.v_ref = None
        self.pm_ref = None
        self._omega_s = None

    # -- network interface ------------------------------------------------

    def norton_admittance(self, system_base_mva):
        p = self.params
        y_dev = 1.0 / complex(p.ra, p.xd_st)
        return y_dev * p.base_mva / system_base_mva

    def source_current(self, x, v, system_base_mva):
        p = self.params
        e_net = self._subtransient_emf(x)
        y_dev = 1.0 / complex(p.ra, p.xd_st)
        return y_dev * e_net * p.base_mva / system_base_mva

    def _subtransient_emf(self, x):
        delta, eq_st, ed_st = x[0], x[4], x[5]
        return (ed_st + 1j * eq_st) * np.exp(1j * (delta - np.pi / 2.0))

    def _dq_currents(self, x, v):
        """Stator currents in the machine frame, device per unit."""
        p = self.params
        i_net = (self._subtransient_emf(x) - v) / complex(p.ra, p.xd_st)
        i_dq = i_net * np.exp(-1j * (x[0] - np.pi / 2.0))
        return i_dq.real, i_dq.imag

    # -- initialization ----------------------------------------------------

    def initialize(self, v, s_gen_system, system_base_mva, omega_s):
        p = self.params
        self._omega_s = omega_s
        s_dev = s_gen_system * system_base_mva / p.base_mva
        i = np.conj(s_dev / v)
        # internal emf along the q axis fixes the rotor angle
        e = v + complex(p.ra, p.xq) * i
        delta0 = float(np.angle(e))
        rot = np.exp(-1j * (delta0 - np.pi / 2.0))
        v_dq = v * rot
        i_dq = i * rot
        vd, vq = v_dq.real, v_dq.imag
        id_, iq = i_dq.real, i_dq.imag

        eq_st = vq + p.ra * iq + p.xd_st * id_
        ed_st = vd + p.ra * id_ - p.xq_st * iq
        eq_t = vq + p.ra * iq + p.xd_t * id_
        ed_t = vd + p.ra * id_ - p.xq_t * iq
        efd0 = vq + p.ra * iq + p.xd * id_
        te0 = ed_st * id_ + eq_st * iq

        if not p.efd_min < efd0 < p.efd_max:
            raise DeviceError(
                f"{self.device_id}: field voltage {efd0:.3f} pu at the "
                "operating point violates the exciter limits"
            )
        if not p.pm_min < te0 < p.pm_max:
            raise DeviceError(
                f"{self.device_id}: mechanical power {te0:.3f} pu at the "
                "operating point violates the governor limits"
            )
        self.v_ref = abs(v) + efd0 / p.ka
        self.pm_ref = te0
        return np.array([
            delta0, 0.0, eq_t, ed_t, eq_st, ed_st, efd0, te0, 0.0, 0.0, 0.0,
        ])

    # -- dynamics ----------------------------------------------------------

    def derivatives(self, x, v):
        p = self.params
        (delta, speed, eq_t, ed_t, eq_st, ed_st, efd, pm,
         pss_w, pss_a, pss_b) = x
        id_, iq = self._dq_currents(x, v)
        te = ed_st * id_ + eq_st * iq

        # stabilizer chain: washout then two lead-lags, clamped output
        y_w = speed - pss_w
        y_1 = (p.t1 / p.t2) * y_w + (1.0 - p.t1 / p.t2) * pss_a
        y_2 = (p.t3 / p.t4) * y_1 + (1.0 - p.t3 / p.t4) * pss_b
        v_s = float(np.clip(p.k_pss * y_2, -p.vs_max, p.vs_max))

        d_efd = (p.ka * (self.v_ref - abs(v) + v_s) - efd) / p.ta
        if (efd >= p.efd_max and d_efd > 0.0) or \
           (efd <= p.efd_min and d_efd < 0.0):
            d_efd = 0.0

        droop = speed / p.r_droop if p.has_governor else 0.0
        d_pm = (self.pm_ref - droop - pm) / p.t_gov
        if (pm >= p.pm_max and d_pm > 0.0) or (pm <= p.pm_min and d_pm < 0.0):
            d_pm = 0.0

        return np.array([
            self._omega_s * speed,
            (pm - te - p.d_pu * speed) / (2.0 * p.h_s),
            (efd - eq_t - (p.xd - p.xd_t) * id_) / p.td0_t,
            (-ed_t + (p.xq - p.xq_t) * iq) / p.tq0_t,
            (eq_t - eq_st - (p.xd_t - p.xd_st) * id_) / p.td0_st,
            (ed_t - ed_st + (p.xq_t - p.xq_st) * iq) / p.tq0_st,
            d_efd,
            d_pm,
            y_w / p.t_washout,
            (y_w - pss_a) / p.t2,
            (y_1 - pss_b) / p.t4,
        ])

    def outputs(self, x, v):
        id_, iq = self._dq_currents(x, v)
        i_net = (self._subtransient_emf(x) - v) / complex(self.params.ra,
                                                          self.params.xd_st)
        s_dev = v * np.conj(i_net)
        return {
            "rotor_speed": float(1.0 + x[1]),
            "active_power": float(s_dev.real),
            "reactive_power": float(s_dev.imag),
            "bus_frequency": float(1.0 + x[1]),
        }
