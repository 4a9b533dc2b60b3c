"""
Tests for single-TCL thermal dynamics and hysteresis.
"""

import math
import unittest

import numpy as np
from hypothesis import given, settings
import hypothesis.strategies as st

from src.dlc_privacy.model import ConfigurationError, TclFleet, TclParams, TclState
from src.dlc_privacy.transformers.tcl_dynamics import (
    compute_a,
    deadband_excursion,
    hysteresis_next_mode,
    max_one_step_drift,
    on_off_drift_rates,
    step_fleet,
    step_thermal,
)


def nominal(**overrides) -> TclParams:
    values = dict(R=2.0, C=10.0, theta_a=32.0, theta_set=20.0, delta=0.5,
                  P_trans=12.0, P_elec=2.5, h_step=1.0)
    values.update(overrides)
    return TclParams(**values)


class TestParams(unittest.TestCase):
    """Validation of TCL constants."""

    def test_theta_g_and_deadband(self):
        params = nominal()
        self.assertAlmostEqual(params.theta_g, 24.0)
        self.assertAlmostEqual(params.deadband_low, 19.75)
        self.assertAlmostEqual(params.deadband_high, 20.25)

    def test_nonpositive_fields_rejected(self):
        for name in ("R", "C", "delta", "P_trans", "P_elec", "h_step"):
            with self.subTest(field=name):
                with self.assertRaises(ConfigurationError):
                    nominal(**{name: 0.0})

    def test_unreachable_setpoint_rejected(self):
        # ON fixed point 32 - 2*4 = 24 lies above the deadband floor
        with self.assertRaises(ConfigurationError):
            nominal(P_trans=4.0)
        # ambient inside the deadband: OFF never reaches the ceiling
        with self.assertRaises(ConfigurationError):
            nominal(theta_a=20.1)

    def test_state_mode_must_be_binary(self):
        with self.assertRaises(ConfigurationError):
            TclState(theta=20.0, m=2)
        with self.assertRaises(ConfigurationError):
            TclState(theta=float("nan"), m=0)


class TestComputeA(unittest.TestCase):
    """Decay factor exp(-h/(RC)) with h in hours."""

    def test_reference_values(self):
        self.assertAlmostEqual(compute_a(nominal(h_step=1.0)), 0.9991670, places=7)
        self.assertAlmostEqual(compute_a(nominal(h_step=30.0)), 0.9753099, places=7)

    def test_small_step_limit(self):
        self.assertAlmostEqual(compute_a(nominal(h_step=1e-9)), 1.0, places=12)

    def test_strictly_decreasing_in_step(self):
        values = [compute_a(nominal(h_step=h)) for h in (0.5, 1, 2, 5, 30, 60)]
        self.assertTrue(all(a > b for a, b in zip(values, values[1:])))
        self.assertTrue(all(0 < a < 1 for a in values))


class TestHysteresis(unittest.TestCase):
    """Three-case thermostat rule."""

    def test_cases(self):
        params = nominal()
        cases = [
            (20.3, 0, 1),
            (19.7, 1, 0),
            (20.0, 1, 1),
            (20.0, 0, 0),
            (20.25, 0, 0),   # equality at the ceiling holds the mode
            (19.75, 1, 1),   # equality at the floor holds the mode
        ]
        for theta_next, m_curr, expected in cases:
            with self.subTest(theta_next=theta_next, m_curr=m_curr):
                self.assertEqual(hysteresis_next_mode(params, theta_next, m_curr), expected)


class TestStepThermal(unittest.TestCase):
    """Difference equation, forced toggles and fixed points."""

    def setUp(self):
        self.params = nominal()

    def test_fixed_points(self):
        params = self.params
        off = step_thermal(params, TclState(theta=params.theta_a, m=0), 0.0, False)
        self.assertAlmostEqual(off.theta, params.theta_a, places=12)
        on_point = params.theta_a - params.theta_g
        on = step_thermal(params, TclState(theta=on_point, m=1), 0.0, False)
        self.assertAlmostEqual(on.theta, on_point, places=12)

    def test_reference_step(self):
        state = step_thermal(self.params, TclState(theta=20.0, m=1), 0.0, False)
        self.assertAlmostEqual(state.theta, 19.99000, places=5)
        self.assertEqual(state.m, 1)

    def test_forced_toggle_applies_before_update(self):
        toggled = step_thermal(self.params, TclState(theta=20.0, m=0), 0.0, True)
        reference = step_thermal(self.params, TclState(theta=20.0, m=1), 0.0, False)
        self.assertEqual(toggled, reference)

    def test_noise_is_additive(self):
        base = step_thermal(self.params, TclState(theta=20.0, m=0), 0.0, False)
        noisy = step_thermal(self.params, TclState(theta=20.0, m=0), 0.01, False)
        self.assertAlmostEqual(noisy.theta - base.theta, 0.01, places=12)

    def test_deterministic(self):
        state = TclState(theta=20.1, m=1)
        self.assertEqual(step_thermal(self.params, state, 0.003, True),
                         step_thermal(self.params, state, 0.003, True))

    def test_uncontrolled_zero_noise_stays_near_deadband(self):
        params = self.params
        s = float(max_one_step_drift(TclFleet.from_params([params]))[0])
        state = TclState(theta=20.0, m=1)
        for _ in range(2000):
            state = step_thermal(params, state, 0.0, False)
            self.assertLessEqual(state.theta, params.deadband_high + s + 1e-12)
            self.assertGreaterEqual(state.theta, params.deadband_low - s - 1e-12)
            self.assertIn(state.m, (0, 1))


class TestDriftRates(unittest.TestCase):
    """Linearised drift and duty cycle."""

    def test_symmetric_duty(self):
        d_on, d_off, duty = on_off_drift_rates(nominal())
        self.assertLess(d_on, 0)
        self.assertGreater(d_off, 0)
        self.assertAlmostEqual(duty, 0.5, places=12)

    def test_one_third_duty(self):
        # theta_g = 2 * 18 = 36
        _, _, duty = on_off_drift_rates(nominal(P_trans=18.0))
        self.assertAlmostEqual(duty, 1.0 / 3.0, places=12)


class TestFleet(unittest.TestCase):
    """Vectorised update agrees with the scalar one bit for bit."""

    @settings(max_examples=50, deadline=None)
    @given(
        jitter=st.lists(st.floats(min_value=0.9, max_value=1.1), min_size=1, max_size=8),
        eps=st.floats(min_value=-0.05, max_value=0.05),
        toggle=st.booleans(),
        mode=st.integers(min_value=0, max_value=1),
        theta=st.floats(min_value=19.5, max_value=20.5),
    )
    def test_step_fleet_matches_step_thermal(self, jitter, eps, toggle, mode, theta):
        params = [nominal(R=2.0 * j, C=10.0 / j) for j in jitter]
        fleet = TclFleet.from_params(params)
        n = len(params)
        theta_next, m_next = step_fleet(fleet, np.full(n, theta), np.full(n, float(mode)),
                                        np.full(n, eps), np.full(n, toggle))
        for i, p in enumerate(params):
            expected = step_thermal(p, TclState(theta=theta, m=mode), eps, toggle)
            self.assertEqual(theta_next[i], expected.theta)
            self.assertEqual(int(m_next[i]), expected.m)

    def test_round_trip_params(self):
        params = [nominal(R=1.9), nominal(C=11.0)]
        self.assertEqual(TclFleet.from_params(params).to_params(), params)

    def test_deadband_excursion(self):
        low, high = np.array([19.75] * 3), np.array([20.25] * 3)
        excursion = deadband_excursion(low, high, np.array([19.5, 20.0, 20.5]))
        np.testing.assert_allclose(excursion, [0.25, 0.0, 0.25])

    def test_max_one_step_drift(self):
        params = nominal()
        s = max_one_step_drift(TclFleet.from_params([params]))[0]
        a = compute_a(params)
        expected = (1 - a) * max(32.0 - 19.75, 20.25 - 8.0)
        self.assertTrue(math.isclose(s, expected, rel_tol=1e-12))


if __name__ == '__main__':
    unittest.main()
