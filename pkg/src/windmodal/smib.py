"""Closed-form single-machine model of droop-equipped wind support.

A synchronous machine against a stiff bus, with the wind farm's droop folded
into the swing equation, reduces to two states: per-unit frequency deviation
and angle deviation.  The inertial gain K_in adds to the effective inertia,
the proportional gain K_p adds to the damping torque,

    [d(df)/dt]   [ -(K_p+K_D)/(2H+K_in)   -K_S/(2H+K_in) ] [df]
    [d(dd)/dt] = [        omega0                 0        ] [dd]

which makes the model a cheap, exact oracle for the numerical linearization
and eigenvalue pipeline, and a direct way to map the (K_p, K_in) gain plane.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dfig import DroopParams
from .modal import StateLabel, damping_ratio


class SmibError(ValueError):
    pass


@dataclass(frozen=True)
class SmibParams:
    """Aggregate machine constants plus the droop gains.

    Defaults reproduce the reference operating point used across the test
    suite: H = 3.5 s, K_D = 10, K_S = 0.75, 60 Hz.
    """

    h_s: float = 3.5
    k_damping: float = 10.0
    k_synchronizing: float = 0.75
    omega0: float = 377.0  # conventional 60 Hz synchronous speed, rad/s
    droop: DroopParams = field(default_factory=DroopParams)

    def with_gains(self, kp: float, kin: float) -> "SmibParams":
        droop = DroopParams(kp=kp, kin=kin,
                            rocof_filter_time=self.droop.rocof_filter_time,
                            enabled=True)
        return SmibParams(h_s=self.h_s, k_damping=self.k_damping,
                          k_synchronizing=self.k_synchronizing,
                          omega0=self.omega0, droop=droop)

    @property
    def active_gains(self) -> tuple[float, float]:
        """(K_p, K_in) actually applied; a disabled droop contributes nothing."""
        if not self.droop.enabled:
            return 0.0, 0.0
        return self.droop.kp, self.droop.kin

    @property
    def effective_inertia(self) -> float:
        return 2.0 * self.h_s + self.active_gains[1]


def smib_system_matrix(params: SmibParams) -> np.ndarray:
    """2x2 state matrix in (frequency deviation, angle deviation) order."""
    m = params.effective_inertia
    if m <= 0.0:
        raise SmibError(
            f"effective inertia 2H + K_in = {m:.4f} must be positive"
        )
    kd_total = params.k_damping + params.active_gains[0]
    return np.array([
        [-kd_total / m, -params.k_synchronizing / m],
        [params.omega0, 0.0],
    ])


def smib_eigenvalues(params: SmibParams) -> tuple[np.ndarray, bool]:
    """Closed-form eigenvalue pair and an oscillatory flag.

    Solves the quadratic of the 2x2 matrix directly.  A negative
    discriminant gives the conjugate pair (returned positive-imag first);
    otherwise two real roots come back with ``oscillatory=False``.
    """
    m = params.effective_inertia
    if m <= 0.0:
        raise SmibError(
            f"effective inertia 2H + K_in = {m:.4f} must be positive"
        )
    kd_total = params.k_damping + params.active_gains[0]
    # characteristic polynomial: m*s^2 + kd_total*s + K_S*omega0 = 0
    disc = kd_total ** 2 - 4.0 * m * params.k_synchronizing * params.omega0
    re = -kd_total / (2.0 * m)
    if disc < 0.0:
        im = math.sqrt(-disc) / (2.0 * m)
        return np.array([re + 1j * im, re - 1j * im]), True
    root = math.sqrt(disc) / (2.0 * m)
    return np.array([re + root + 0j, re - root + 0j]), False


def smib_damping_check(params: SmibParams) -> float:
    """Algebraic damping ratio (K_p+K_D)/sqrt(4 K_S omega0 (2H+K_in)).

    Valid in the oscillatory regime, where it coincides with the
    eigenvalue-based definition; used as an independent cross-check.
    """
    m = params.effective_inertia
    if m <= 0.0:
        raise SmibError("effective inertia must be positive")
    return (params.k_damping + params.active_gains[0]) / math.sqrt(
        4.0 * params.k_synchronizing * params.omega0 * m
    )


@dataclass
class SmibGridPoint:
    kp: float
    kin: float
    eigenvalue: complex
    damping: float
    frequency_hz: float
    oscillatory: bool


def smib_sensitivity_grid(params: SmibParams,
                          kp_values=None, kin_values=None,
                          out_path: str | Path | None = None
                          ) -> list[SmibGridPoint]:
    """Damping map over the (K_p, K_in) plane.

    Defaults to the 6x6 grid {0, 10, ..., 50}^2.  Rows iterate K_p fastest.
    When ``out_path`` is given the grid is also written as CSV with columns
    kp, kin, re, im, damping, freq_hz, oscillatory_flag.
    """
    kp_values = [0.0, 10.0, 20.0, 30.0, 40.0, 50.0] if kp_values is None \
        else list(kp_values)
    kin_values = [0.0, 10.0, 20.0, 30.0, 40.0, 50.0] if kin_values is None \
        else list(kin_values)
    if any(k < 0 for k in kp_values) or any(k < 0 for k in kin_values):
        raise SmibError("droop gains must be nonnegative")
    points = []
    for kin in kin_values:
        for kp in kp_values:
            p = params.with_gains(kp, kin)
            lams, osc = smib_eigenvalues(p)
            lam = lams[0]
            points.append(SmibGridPoint(
                kp=kp, kin=kin, eigenvalue=complex(lam),
                damping=1.0 if not osc else damping_ratio(lam),
                frequency_hz=abs(lam.imag) / (2.0 * math.pi),
                oscillatory=osc,
            ))
    if out_path is not None:
        write_grid_csv(points, out_path)
    return points


def write_grid_csv(points: list[SmibGridPoint], path: str | Path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["kp", "kin", "re", "im", "damping", "freq_hz",
                         "oscillatory_flag"])
        for pt in points:
            writer.writerow([
                f"{pt.kp:.6g}", f"{pt.kin:.6g}",
                f"{pt.eigenvalue.real:.12g}", f"{pt.eigenvalue.imag:.12g}",
                f"{pt.damping:.12g}", f"{pt.frequency_hz:.12g}",
                int(pt.oscillatory),
            ])
    return path


class SmibModel:
    """Numerical adapter exposing the two ODEs to the linearization pipeline.

    Implements the model protocol (rhs / equilibrium / state_labels) by
    evaluating the differential equations themselves rather than the matrix,
    so running it through ``modal.linearize`` genuinely exercises the
    finite-difference path.
    """

    def __init__(self, params: SmibParams):
        self.params = params
        m = params.effective_inertia
        if m <= 0.0:
            raise SmibError("effective inertia must be positive")

    def state_labels(self):
        return [
            StateLabel("smib", "freq_dev", "synchronous"),
            StateLabel("smib", "angle_dev", "synchronous"),
        ]

    def equilibrium(self):
        return np.zeros(2)

    def rhs(self, x):
        p = self.params
        df, dd = x
        m = p.effective_inertia
        accel = (-(p.k_damping + p.active_gains[0]) * df
                 - p.k_synchronizing * dd) / m
        return np.array([accel, p.omega0 * df])


@dataclass
class AggregateModel:
    """One-bus center-of-inertia frequency model.

    ``p_reg`` maps absolute per-unit frequency to regulating power (e.g.
    ``lambda f: -20.0 * (f - 1.0)`` for a 20 pu/pu droop).
    """

    h_sys: float
    p_gen: float
    p_load: float
    p_reg: callable = None
    f0: float = 1.0


def aggregate_frequency_response(model: AggregateModel, power_step: float,
                                 t_end: float, dt: float = 1e-3
                                 ) -> tuple[np.ndarray, np.ndarray]:
    """Frequency trajectory after a load step at t = 0.

    Integrates 2 H_sys df/dt = P_gen + P_reg(f) - (P_load + step) with a
    fixed-step fourth-order Runge-Kutta scheme and returns (t, f) arrays.
    """
    if model.h_sys <= 0.0:
        raise SmibError("system inertia must be positive")
    if dt <= 0.0 or t_end <= dt:
        raise SmibError("need 0 < dt < t_end")
    p_reg = model.p_reg if model.p_reg is not None else (lambda f: 0.0)
    load = model.p_load + power_step

    def deriv(f):
        return (model.p_gen + p_reg(f) - load) / (2.0 * model.h_sys)

    n = int(round(t_end / dt))
    t = np.linspace(0.0, n * dt, n + 1)
    f = np.empty(n + 1)
    f[0] = model.f0
    for k in range(n):
        y = f[k]
        k1 = deriv(y)
        k2 = deriv(y + 0.5 * dt * k1)
        k3 = deriv(y + 0.5 * dt * k2)
        k4 = deriv(y + dt * k3)
        f[k + 1] = y + dt * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0
    return t, f
