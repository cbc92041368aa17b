import numpy as np
import pytest

from sav_bottleneck.analytics import departure_time
from sav_bottleneck.core.errors import ParameterValidationError
from sav_bottleneck.schemas.equilibria import ModeSplit


def test_equilibrium_costs_balance_at_mc_split(base):
    costs = departure_time.equilibrium_costs(base, ModeSplit(n_n=40.0, n_a=960.0), fare=100.0)
    assert costs.c_n == pytest.approx(407.8)
    assert costs.c_a == pytest.approx(407.8)


def test_equilibrium_costs_all_nv(base):
    costs = departure_time.equilibrium_costs(base, ModeSplit(n_n=1000.0, n_a=0.0), fare=100.0)
    assert costs.c_n == pytest.approx(8011.0)
    assert costs.c_a == pytest.approx(5707.0)


def test_split_must_conserve_population(base):
    with pytest.raises(ParameterValidationError):
        departure_time.equilibrium_costs(base, ModeSplit(n_n=10.0, n_a=960.0), fare=100.0)
    with pytest.raises(ParameterValidationError):
        departure_time.build_profile(base, ModeSplit(n_n=1010.0, n_a=-10.0))


def test_profile_windows_and_queue(base):
    prof = departure_time.build_profile(base, ModeSplit(n_n=40.0, n_a=960.0))
    assert prof.t_a_minus == pytest.approx(-192.0)
    assert prof.t_a_plus == pytest.approx(192.0)
    assert prof.t_n_minus == pytest.approx(-992.0)
    assert prof.t_n_plus == pytest.approx(992.0)
    assert float(prof.queue_delay(-192.0)) == pytest.approx(320.0)
    assert float(prof.queue_delay(0.0)) == pytest.approx(429.714285714, rel=1e-9)
    assert float(prof.queue_delay(-992.0)) == pytest.approx(0.0)
    masses = prof.masses()
    assert masses.n_n == pytest.approx(40.0)
    assert masses.n_a == pytest.approx(960.0)


def test_profile_flow_rates_respect_capacity(base):
    prof = departure_time.build_profile(base, ModeSplit(n_n=40.0, n_a=960.0))
    t = np.linspace(-991.0, 991.0, 501)
    n_n, n_a = prof.flow_rates(t)
    np.testing.assert_allclose(n_n + base.kappa * n_a, base.mu)
    assert np.all(n_a[np.abs(t) < 190.0] > 0.0)
    assert np.all(n_n[np.abs(t) < 190.0] == 0.0)


def test_verify_profile_passes_at_mc(base):
    prof = departure_time.build_profile(base, ModeSplit(n_n=40.0, n_a=960.0))
    report = departure_time.verify_profile(base, prof, fare=100.0)
    assert report.passed
    assert report.nv_in_window_residual <= report.tolerance
    assert report.sav_in_window_residual <= report.tolerance


def test_verify_profile_flags_wrong_split(base):
    prof = departure_time.build_profile(base, ModeSplit(n_n=40.0, n_a=960.0))
    report = departure_time.verify_profile(base, prof, fare=100.0, split=ModeSplit(n_n=100.0, n_a=900.0))
    assert not report.passed
    assert report.sav_mass_error == pytest.approx(0.06)


def test_verify_profile_flags_scaled_queue(base):
    prof = departure_time.build_profile(base, ModeSplit(n_n=40.0, n_a=960.0))
    scaled = prof.model_copy(update={"knot_delays": [1.01 * q for q in prof.knot_delays]})
    report = departure_time.verify_profile(base, scaled, fare=100.0)
    assert not report.passed
    assert max(report.nv_in_window_residual, report.sav_in_window_residual) > report.tolerance


@pytest.mark.parametrize("n_a", [0.0, 1000.0])
def test_single_mode_profiles_verify(base, n_a):
    split = ModeSplit(n_n=1000.0 - n_a, n_a=n_a)
    prof = departure_time.build_profile(base, split)
    assert prof.masses().n_a == pytest.approx(n_a)
    fare = 100.0
    report = departure_time.verify_profile(base, prof, fare=fare)
    assert report.nv_in_window_residual <= report.tolerance
    assert report.sav_in_window_residual <= report.tolerance
    assert report.capacity_violation <= 1e-6


def test_profile_frame_columns(base):
    prof = departure_time.build_profile(base, ModeSplit(n_n=40.0, n_a=960.0))
    frame = departure_time.profile_frame(base, prof, fare=100.0)
    assert list(frame.columns) == ["t", "q", "n_n", "n_a", "c_n", "c_a"]
    assert frame["t"].is_monotonic_increasing
    assert (frame["q"] >= 0).all()
