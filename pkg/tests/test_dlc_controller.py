"""
Tests for the direct load controller: binning, estimator and commands.
"""

import math
import unittest

import numpy as np

from src.dlc_privacy.model import (
    ConfigurationError,
    ControllerConfig,
    EstimatorState,
    SwitchCommand,
    TclFleet,
    TclParams,
    TclState,
)
from src.dlc_privacy.transformers.dlc_controller import (
    DirectLoadController,
    actuate,
    actuate_fleet,
    apply_commands_to_estimator,
    assign_bin,
    compute_commands,
    estimator_predict,
    ingest_measurements,
    normalized_position,
    switch_allowed,
    walk_order,
)
from src.dlc_privacy.transformers.tcl_dynamics import step_fleet, step_thermal

NOMINAL = TclParams(R=2.0, C=10.0, theta_a=32.0, theta_set=20.0, delta=0.5,
                    P_trans=12.0, P_elec=2.5, h_step=1.0)


def estimator(theta, m) -> EstimatorState:
    theta = np.asarray(theta, dtype=float)
    fleet = TclFleet.from_params([NOMINAL] * len(theta))
    return EstimatorState(theta_hat=theta, m_hat=np.asarray(m, dtype=float), fleet=fleet)


def position(x: float) -> float:
    return NOMINAL.deadband_low + NOMINAL.delta * x


class TestBinning(unittest.TestCase):
    """Normalised positions and bin layout."""

    def test_normalized_position(self):
        cases = [(20.0, 0.5), (20.25, 1.0), (20.1, 0.7), (19.0, 0.0), (21.0, 1.0)]
        for theta, expected in cases:
            with self.subTest(theta=theta):
                self.assertAlmostEqual(normalized_position(NOMINAL, theta), expected, places=12)

    def test_assign_bin(self):
        cases = [
            (0.0, 0, 0),
            (0.99, 0, 4),
            (1.0, 0, 4),
            (0.99, 1, 5),
            (0.0, 1, 9),
        ]
        for x, m, expected in cases:
            with self.subTest(x=x, m=m):
                self.assertEqual(assign_bin(x, m, 10), expected)

    def test_walk_order(self):
        self.assertEqual(walk_order(10, turn_on=True), [4, 3, 2, 1, 0])
        self.assertEqual(walk_order(10, turn_on=False), [9, 8, 7, 6, 5])

    def test_odd_bin_count_rejected(self):
        for n_bins in (0, 3, 7):
            with self.subTest(n_bins=n_bins):
                with self.assertRaises(ConfigurationError):
                    ControllerConfig(n_bins=n_bins)

    def test_walk_order_follows_time_to_switch(self):
        """Earlier bins in each walk hold TCLs whose thermostat switches sooner."""

        def steps_to_switch(x: float, m: int) -> int:
            state = TclState(theta=position(x), m=m)
            for step in range(1, 10000):
                state = step_thermal(NOMINAL, state, 0.0, False)
                if state.m != m:
                    return step
            raise AssertionError("no switch")

        for turn_on, mode in ((True, 0), (False, 1)):
            times = []
            for b in walk_order(10, turn_on):
                k = b if mode == 0 else 9 - b
                times.append(steps_to_switch((k + 0.5) / 5, mode))
            with self.subTest(turn_on=turn_on):
                self.assertEqual(times, sorted(times))
                self.assertLess(times[0], times[-1])


class TestEstimator(unittest.TestCase):
    """Dead reckoning and measurement ingestion."""

    def test_predict_matches_truth_without_noise(self):
        rng = np.random.default_rng(0)
        theta = rng.uniform(19.75, 20.25, 50)
        m = (rng.random(50) < 0.5).astype(float)
        est = estimator(theta, m)
        for _ in range(120):
            est = estimator_predict(est)
            theta, m = step_fleet(est.fleet, theta, m, np.zeros(50), np.zeros(50, dtype=bool))
            np.testing.assert_array_equal(est.theta_hat, theta)
            np.testing.assert_array_equal(est.m_hat, m)

    def test_on_fixed_point(self):
        on_point = NOMINAL.theta_a - NOMINAL.theta_g
        est = estimator([on_point], [1.0])
        predicted = estimator_predict(est)
        self.assertAlmostEqual(predicted.theta_hat[0], on_point, places=12)

    def test_fractional_mode_mixes_branches(self):
        est = estimator([20.0], [0.5])
        predicted = estimator_predict(est)
        on_branch = estimator_predict(estimator([20.0], [1.0])).theta_hat[0]
        off_branch = estimator_predict(estimator([20.0], [0.0])).theta_hat[0]
        self.assertAlmostEqual(predicted.theta_hat[0], 0.5 * (on_branch + off_branch), places=12)
        self.assertAlmostEqual(predicted.m_hat[0], 0.5, places=12)

    def test_ingest_replaces_estimate(self):
        est = estimator([20.0, 20.1], [0.3, 0.7])
        truth = [TclState(theta=19.9, m=1), TclState(theta=20.2, m=0)]
        ingested = ingest_measurements(est, truth)
        np.testing.assert_array_equal(ingested.theta_hat, [19.9, 20.2])
        np.testing.assert_array_equal(ingested.m_hat, [1.0, 0.0])

    def test_ingest_length_mismatch(self):
        with self.assertRaises(ConfigurationError):
            ingest_measurements(estimator([20.0, 20.1], [0, 0]), [TclState(theta=20.0, m=0)])

    def test_ingest_then_predict_commutes(self):
        theta, m = np.array([19.8, 20.2]), np.array([1.0, 0.0])
        a = estimator_predict(ingest_measurements(estimator([20.0, 20.0], [0.5, 0.5]), (theta, m)))
        b = estimator_predict(estimator(theta, m))
        np.testing.assert_array_equal(a.theta_hat, b.theta_hat)
        np.testing.assert_array_equal(a.m_hat, b.m_hat)


class TestCommands(unittest.TestCase):
    """Greedy per-bin switching fractions."""

    def test_no_mismatch_no_commands(self):
        est = estimator([20.0] * 10, [1.0] * 5 + [0.0] * 5)
        self.assertEqual(compute_commands(est, est.estimated_power()), [])

    def test_mismatch_inside_deadzone(self):
        est = estimator([20.0] * 10, [0.0] * 10)
        self.assertEqual(compute_commands(est, 2.0), [])

    def test_single_partial_bin(self):
        # 100 OFF TCLs in the warmest OFF bin hold 250 kW
        est = estimator([position(0.9)] * 100, [0.0] * 100)
        commands = compute_commands(est, 100.0)
        self.assertEqual(len(commands), 1)
        self.assertEqual(commands[0].bin_index, 4)
        self.assertAlmostEqual(commands[0].fraction, 0.4, places=12)

    def test_greedy_walk(self):
        theta = np.repeat([position(x) for x in (0.1, 0.3, 0.5, 0.7, 0.9)], 100)
        est = estimator(theta, np.zeros(500))
        commands = compute_commands(est, 600.0)
        self.assertEqual([c.bin_index for c in commands], [4, 3, 2])
        self.assertEqual([c.fraction for c in commands[:2]], [1.0, 1.0])
        self.assertAlmostEqual(commands[2].fraction, 0.4, places=12)

    def test_shedding_walks_on_bins_coolest_first(self):
        theta = np.repeat([position(x) for x in (0.1, 0.9)], 100)
        est = estimator(theta, np.ones(200))
        commands = compute_commands(est, est.estimated_power() - 100.0)
        self.assertEqual(commands[0].bin_index, 9)
        self.assertAlmostEqual(commands[0].fraction, 0.4, places=12)

    def test_saturates_when_exhausted(self):
        est = estimator([position(0.5)] * 4, [0.0] * 4)
        commands = compute_commands(est, 1000.0)
        self.assertEqual(len(commands), 1)
        self.assertEqual(commands[0].fraction, 1.0)

    def test_expected_switched_power_bounded(self):
        rng = np.random.default_rng(4)
        est = estimator(rng.uniform(19.75, 20.25, 300), rng.random(300))
        for p_des in (300.0, 450.0, 600.0):
            delta = abs(p_des - est.estimated_power())
            updated = apply_commands_to_estimator(est, compute_commands(est, p_des))
            moved = abs(updated.estimated_power() - est.estimated_power())
            with self.subTest(p_des=p_des):
                self.assertLessEqual(moved, delta + NOMINAL.P_elec)

    def test_fraction_validated(self):
        with self.assertRaises(ConfigurationError):
            SwitchCommand(bin_index=0, fraction=1.5)


class TestMeanFieldUpdate(unittest.TestCase):
    """Expected-occupancy update after commands."""

    def test_full_bin_turns_on(self):
        est = estimator([position(0.9)] * 3, [0.0] * 3)
        updated = apply_commands_to_estimator(est, [SwitchCommand(4, 1.0)])
        np.testing.assert_array_equal(updated.m_hat, [1.0, 1.0, 1.0])

    def test_zero_fraction_is_identity(self):
        est = estimator([position(0.9)] * 3, [0.0] * 3)
        updated = apply_commands_to_estimator(est, [SwitchCommand(4, 0.0)])
        np.testing.assert_array_equal(updated.m_hat, est.m_hat)

    def test_partial_fraction(self):
        est = estimator([position(0.9)], [0.0])
        updated = apply_commands_to_estimator(est, [SwitchCommand(4, 0.4)])
        self.assertAlmostEqual(updated.m_hat[0], 0.4, places=12)
        self.assertAlmostEqual(updated.estimated_power(), 0.4 * NOMINAL.P_elec, places=12)
        np.testing.assert_array_equal(updated.theta_hat, est.theta_hat)

    def test_refused_switch_keeps_occupancy(self):
        # both sit in the warmest OFF bin; the one outside the deadband refuses
        est = estimator([20.3, position(0.9)], [0.0, 0.0])
        updated = apply_commands_to_estimator(est, [SwitchCommand(4, 1.0)])
        np.testing.assert_array_equal(updated.m_hat, [0.0, 1.0])

    def test_refused_switch_not_counted_as_switchable(self):
        est = estimator([position(0.01)] * 10 + [position(0.5)] * 10, [0.0] * 20)
        commands = compute_commands(est, 1000.0)
        self.assertEqual([c.bin_index for c in commands], [2])
        updated = apply_commands_to_estimator(est, commands)
        self.assertAlmostEqual(updated.estimated_power(), 10 * NOMINAL.P_elec, places=12)

    def test_estimate_matches_expected_actuation(self):
        """Mean-field power equals the average actual power over actuation seeds."""
        rng = np.random.default_rng(8)
        n = 400
        theta = rng.uniform(19.75, 20.25, n)
        m = (rng.random(n) < 0.5).astype(float)
        est = estimator(theta, m)
        commands = compute_commands(est, est.estimated_power() + 150.0)
        expected = apply_commands_to_estimator(est, commands).estimated_power()
        fleet = est.fleet
        powers = []
        for seed in range(300):
            toggles, _ = actuate_fleet(fleet, theta, m, commands, 10,
                                       np.random.default_rng(seed).random(n))
            powers.append(float(np.dot(fleet.P_elec, np.where(toggles, 1 - m, m))))
        # at most 60 TCLs are partially commanded; 2.5 kW * sqrt(60 * 0.25) per draw
        tolerance = 3 * 2.5 * math.sqrt(60 * 0.25) / math.sqrt(len(powers))
        self.assertLess(abs(np.mean(powers) - expected), tolerance)


class TestActuation(unittest.TestCase):
    """TCL-side probabilistic switching."""

    def test_full_fraction_toggles_every_matching_tcl(self):
        states = [TclState(theta=position(0.9), m=0)] * 20
        toggles = actuate(states, [NOMINAL] * 20, [SwitchCommand(4, 1.0)],
                          np.random.default_rng(0))
        self.assertTrue(all(toggles))

    def test_direction_mismatch(self):
        states = [TclState(theta=position(0.9), m=0)] * 20
        toggles = actuate(states, [NOMINAL] * 20, [SwitchCommand(5, 1.0)],
                          np.random.default_rng(0))
        self.assertFalse(any(toggles))

    def test_half_fraction_binomial(self):
        n = 100000
        fleet = TclFleet.from_params([NOMINAL] * n)
        theta, m = np.full(n, position(0.9)), np.zeros(n)
        toggles, _ = actuate_fleet(fleet, theta, m, [SwitchCommand(4, 0.5)], 10,
                                   np.random.default_rng(1).random(n))
        self.assertLess(abs(toggles.mean() - 0.5), 3 * math.sqrt(0.25 / n))

    def test_outside_deadband_refuses(self):
        fleet = TclFleet.from_params([NOMINAL] * 2)
        theta, m = np.array([20.3, position(0.9)]), np.zeros(2)
        toggles, guarded = actuate_fleet(fleet, theta, m, [SwitchCommand(4, 1.0)], 10,
                                         np.zeros(2))
        self.assertEqual(list(toggles), [False, True])
        self.assertEqual(guarded, 1)

    def test_switch_allowed_predicts_next_temperature(self):
        fleet = TclFleet.from_params([NOMINAL] * 4)
        theta = np.array([position(0.01), position(0.9), position(0.99), position(0.1)])
        # OFF TCLs turned ON, then ON TCLs turned OFF
        np.testing.assert_array_equal(switch_allowed(fleet, theta[:2], 1.0), [False, True])
        np.testing.assert_array_equal(switch_allowed(fleet, theta[2:], 0.0), [False, True])

    def test_switch_allowed_per_tcl_target(self):
        fleet = TclFleet.from_params([NOMINAL] * 2)
        theta = np.array([position(0.01), position(0.01)])
        np.testing.assert_array_equal(switch_allowed(fleet, theta, np.array([1.0, 0.0])),
                                      [False, True])

    def test_switched_tcl_stays_inside_without_noise(self):
        n = 2000
        fleet = TclFleet.from_params([NOMINAL] * n)
        rng = np.random.default_rng(6)
        theta = rng.uniform(19.7, 20.3, n)
        m = (rng.random(n) < 0.5).astype(float)
        commands = [SwitchCommand(b, 1.0) for b in range(10)]
        toggles, guarded = actuate_fleet(fleet, theta, m, commands, 10, np.zeros(n))
        theta_next, _ = step_fleet(fleet, theta, m, np.zeros(n), toggles)
        switched = theta_next[toggles]
        self.assertGreater(guarded, 0)
        self.assertTrue(np.all(switched >= fleet.deadband_low[toggles]))
        self.assertTrue(np.all(switched <= fleet.deadband_high[toggles]))


class TestDirectLoadController(unittest.TestCase):
    """Stateful wrapper used by the engine."""

    def test_observe_command_cycle(self):
        fleet = TclFleet.from_params([NOMINAL] * 100)
        theta, m = np.full(100, position(0.9)), np.zeros(100)
        controller = DirectLoadController(fleet, ControllerConfig(), theta, m)
        controller.observe(theta, m)
        commands = controller.command(100.0)
        self.assertEqual(len(commands), 1)
        self.assertAlmostEqual(controller.estimate.estimated_power(), 100.0, places=9)
        controller.predict()
        self.assertTrue(np.all(controller.estimate.m_hat >= 0))


if __name__ == '__main__':
    unittest.main()
