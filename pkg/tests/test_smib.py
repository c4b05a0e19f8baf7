"""Single-machine closed-form model tests.

Baseline literals were derived independently from the characteristic
polynomial m s^2 + (K_D + K_p) s + K_S w0 = 0 with m = 2H + K_in,
H = 3.5 s, K_D = 10, K_S = 0.75, w0 = 377 rad/s:

    lambda = -0.7142857142857143 +- 6.315271416275352j
    zeta   =  0.11238793135299596
"""

import csv
import math

import numpy as np
import pytest

from windmodal.modal import damping_ratio, linearize
from windmodal.smib import (AggregateModel, SmibError, SmibModel, SmibParams,
                            aggregate_frequency_response, smib_damping_check,
                            smib_eigenvalues, smib_sensitivity_grid,
                            smib_system_matrix, write_grid_csv)

BASE_RE = -0.7142857142857143
BASE_IM = 6.315271416275352
BASE_ZETA = 0.11238793135299596


def test_baseline_eigenvalues_match_frozen_oracle():
    lam, oscillatory = smib_eigenvalues(SmibParams())
    assert oscillatory
    assert abs(lam[0] - complex(BASE_RE, BASE_IM)) < 1e-12
    assert abs(lam[1] - complex(BASE_RE, -BASE_IM)) < 1e-12
    assert abs(damping_ratio(lam[0]) - BASE_ZETA) < 1e-12


def test_closed_form_agrees_with_numeric_eigensolve():
    rng = np.random.default_rng(5)
    for _ in range(30):
        p = SmibParams(
            h_s=float(rng.uniform(2.0, 8.0)),
            k_damping=float(rng.uniform(0.0, 30.0)),
            k_synchronizing=float(rng.uniform(0.3, 2.0)),
        ).with_gains(float(rng.uniform(0.0, 50.0)),
                     float(rng.uniform(0.0, 50.0)))
        lam, _ = smib_eigenvalues(p)
        numeric = np.linalg.eigvals(smib_system_matrix(p))
        # match the pair regardless of ordering
        err = min(
            max(abs(lam[0] - numeric[0]), abs(lam[1] - numeric[1])),
            max(abs(lam[0] - numeric[1]), abs(lam[1] - numeric[0])),
        )
        assert err / max(abs(n) for n in numeric) < 1e-12


def test_damping_check_equals_eigenvalue_damping_when_oscillatory():
    rng = np.random.default_rng(17)
    for _ in range(20):
        p = SmibParams().with_gains(float(rng.uniform(0.0, 40.0)),
                                    float(rng.uniform(0.0, 40.0)))
        lam, oscillatory = smib_eigenvalues(p)
        assert oscillatory
        assert smib_damping_check(p) == pytest.approx(
            damping_ratio(lam[0]), abs=1e-12)


def test_overdamped_regime_returns_real_pair():
    # an absurd proportional gain kills the oscillation entirely
    p = SmibParams(k_damping=10.0).with_gains(3000.0, 0.0)
    lam, oscillatory = smib_eigenvalues(p)
    assert not oscillatory
    assert lam[0].imag == 0.0 and lam[1].imag == 0.0
    assert lam[0].real < 0.0 and lam[1].real < 0.0


def test_gains_apply_only_when_enabled():
    p = SmibParams()
    assert p.active_gains == (0.0, 0.0)
    assert p.effective_inertia == 7.0
    g = p.with_gains(20.0, 10.0)
    assert g.droop.enabled
    assert g.active_gains == (20.0, 10.0)
    assert g.effective_inertia == 17.0


def test_inertial_gain_lowers_damping_proportional_gain_raises_it():
    base = smib_damping_check(SmibParams())
    assert smib_damping_check(SmibParams().with_gains(10.0, 0.0)) > base
    assert smib_damping_check(SmibParams().with_gains(0.0, 10.0)) < base


def test_grid_ordering_and_shape():
    pts = smib_sensitivity_grid(SmibParams())
    assert len(pts) == 36
    # K_in is the outer loop, K_p the fast axis
    assert [p.kp for p in pts[:6]] == [0.0, 10.0, 20.0, 30.0, 40.0, 50.0]
    assert all(p.kin == 0.0 for p in pts[:6])
    assert pts[6].kin == 10.0
    corner = pts[-1]
    assert corner.kp == 50.0 and corner.kin == 50.0


def test_grid_rejects_negative_gains():
    with pytest.raises(SmibError, match="nonnegative"):
        smib_sensitivity_grid(SmibParams(), kp_values=[-1.0])


def test_grid_csv_round_trip(tmp_path):
    path = tmp_path / "grid.csv"
    pts = smib_sensitivity_grid(SmibParams(), kp_values=[0.0, 20.0],
                                kin_values=[0.0, 30.0], out_path=path)
    with path.open() as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == len(pts) == 4
    for row, pt in zip(rows, pts):
        assert float(row["kp"]) == pt.kp
        assert float(row["kin"]) == pt.kin
        assert float(row["re"]) == pytest.approx(pt.eigenvalue.real, rel=1e-10)
        assert float(row["damping"]) == pytest.approx(pt.damping, rel=1e-10)
        assert int(row["oscillatory_flag"]) == int(pt.oscillatory)


def test_write_grid_csv_returns_path(tmp_path):
    pts = smib_sensitivity_grid(SmibParams(), kp_values=[0.0],
                                kin_values=[0.0])
    out = write_grid_csv(pts, tmp_path / "one.csv")
    assert out.exists()


def test_numerical_linearization_recovers_the_closed_form_matrix():
    for kp, kin in ((0.0, 0.0), (20.0, 0.0), (0.0, 30.0), (40.0, 50.0)):
        p = SmibParams().with_gains(kp, kin)
        a_fd = linearize(SmibModel(p)).a
        assert np.max(np.abs(a_fd - smib_system_matrix(p))) < 1e-6


def test_aggregate_frequency_response_matches_first_order_analytic():
    # 2H f' = -step - R (f - 1)  =>  f = 1 - step/R (1 - exp(-R t / 2H))
    h, r, step = 4.0, 20.0, 0.1
    model = AggregateModel(h_sys=h, p_gen=1.0, p_load=1.0,
                           p_reg=lambda f: -r * (f - 1.0))
    t, f = aggregate_frequency_response(model, power_step=step, t_end=6.0,
                                        dt=1e-3)
    expect = 1.0 - step / r * (1.0 - np.exp(-r * t / (2.0 * h)))
    assert np.max(np.abs(f - expect)) < 1e-9
    # fifteen time constants in: settled to the droop-governed frequency
    assert f[-1] == pytest.approx(1.0 - step / r, abs=1e-6)


def test_aggregate_response_without_regulation_is_a_ramp():
    model = AggregateModel(h_sys=5.0, p_gen=1.0, p_load=1.0)
    t, f = aggregate_frequency_response(model, power_step=0.05, t_end=2.0)
    assert np.max(np.abs((f - 1.0) + 0.05 * t / 10.0)) < 1e-12


def test_aggregate_response_argument_validation():
    model = AggregateModel(h_sys=0.0, p_gen=1.0, p_load=1.0)
    with pytest.raises(SmibError, match="inertia"):
        aggregate_frequency_response(model, 0.1, 1.0)
    model = AggregateModel(h_sys=1.0, p_gen=1.0, p_load=1.0)
    with pytest.raises(SmibError, match="dt"):
        aggregate_frequency_response(model, 0.1, t_end=0.0)
