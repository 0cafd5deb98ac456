import unittest

import numpy as np

from curves import (
    LINEAR,
    STEP,
    Observation,
    ObservationKind,
    RiskRow,
    RiskTable,
    Segment,
    SurvivalCurve,
    eval_curve,
    integrate_curve,
    left_limit,
    step_curve,
)


class ObservationTest(unittest.TestCase):
    def test_constructors_set_kind_and_bounds(self):
        exact = Observation.exact(5, arm=1)
        interval = Observation.interval(2, 4)
        censored = Observation.right_censored(7)

        self.assertEqual(exact.kind, ObservationKind.EXACT)
        self.assertEqual((exact.left, exact.right, exact.arm), (5.0, 5.0, 1))
        self.assertTrue(interval.is_interval)
        self.assertEqual((interval.left, interval.right), (2.0, 4.0))
        self.assertTrue(censored.is_censored)
        self.assertIsNone(censored.right)

    def test_interval_requires_left_below_right(self):
        with self.assertRaises(ValueError):
            Observation.interval(3, 3)
        with self.assertRaises(ValueError):
            Observation.interval(4, 2)

    def test_rejects_negative_times_and_unknown_arms(self):
        with self.assertRaises(ValueError):
            Observation.exact(-1)
        with self.assertRaises(ValueError):
            Observation.right_censored(1, arm=2)

    def test_exact_event_at_time_zero_is_rejected(self):
        with self.assertRaises(ValueError):
            Observation.exact(0)

        self.assertTrue(Observation.interval(0, 1).is_interval)
        self.assertEqual(Observation.right_censored(0).left, 0.0)

    def test_right_censored_carries_no_right_endpoint(self):
        with self.assertRaises(ValueError):
            Observation(ObservationKind.RIGHT_CENSORED, 1.0, 2.0)


class StepCurveTest(unittest.TestCase):
    def setUp(self):
        self.curve = step_curve([1, 2], [2 / 3, 1 / 3])

    def test_eval_between_drops(self):
        self.assertAlmostEqual(eval_curve(self.curve, 1.5), 2 / 3)

    def test_eval_at_zero_is_one(self):
        self.assertEqual(eval_curve(self.curve, 0), 1.0)

    def test_eval_past_domain_end_carries_final_value(self):
        self.assertEqual(self.curve.domain_end, 2.0)
        self.assertAlmostEqual(eval_curve(self.curve, 5), 1 / 3)

    def test_curve_is_right_continuous_with_left_limits(self):
        self.assertAlmostEqual(eval_curve(self.curve, 1), 2 / 3)
        self.assertEqual(left_limit(self.curve, 1), 1.0)
        self.assertAlmostEqual(left_limit(self.curve, 2), 2 / 3)
        self.assertEqual(left_limit(self.curve, 0), 1.0)
        self.assertAlmostEqual(left_limit(self.curve, 9), 1 / 3)

    def test_empty_step_curve_is_identically_one(self):
        curve = step_curve([], [])

        self.assertEqual(eval_curve(curve, 10), 1.0)
        self.assertEqual(integrate_curve(curve, 0, 3), 3.0)

    def test_rejects_increasing_values(self):
        with self.assertRaises(ValueError):
            step_curve([1, 2], [0.5, 0.7])

    def test_eval_rejects_negative_time(self):
        with self.assertRaises(ValueError):
            eval_curve(self.curve, -0.1)


class IntegrateCurveTest(unittest.TestCase):
    def test_rectangle_sum(self):
        curve = step_curve([1], [0.5])

        self.assertAlmostEqual(integrate_curve(curve, 0, 2), 1.5)

    def test_degenerate_window_is_zero(self):
        curve = step_curve([1], [0.5])

        self.assertEqual(integrate_curve(curve, 0.7, 0.7), 0.0)

    def test_linear_segment_is_a_triangle(self):
        curve = SurvivalCurve((Segment(0.0, 1.0, 1.0, 0.0, LINEAR),), 0.0)

        self.assertAlmostEqual(integrate_curve(curve, 0, 1), 0.5)
        self.assertAlmostEqual(integrate_curve(curve, 0.5, 1), 0.125)
        self.assertAlmostEqual(eval_curve(curve, 0.25), 0.75)

    def test_partial_window_inside_a_step(self):
        curve = step_curve([0.5, 1.5], [0.6, 0.2])

        self.assertAlmostEqual(integrate_curve(curve, 0.25, 1.0), 0.55)
        self.assertAlmostEqual(integrate_curve(curve, 1.0, 3.0), 0.6 * 0.5 + 0.2 * 1.5)

    def test_rejects_reversed_bounds(self):
        with self.assertRaises(ValueError):
            integrate_curve(step_curve([1], [0.5]), 2, 1)


def _random_curve(rng, knots):
    """Mixed step and linear segments on the given knots, non-increasing from 1."""
    levels = np.concatenate([[1.0], np.sort(rng.uniform(0.0, 1.0, 2 * len(knots)))[::-1]])
    segments = []
    start = 0.0
    for i, end in enumerate(knots):
        if rng.random() < 0.5:
            segments.append(Segment(start, end, levels[2 * i], levels[2 * i], STEP))
        else:
            segments.append(Segment(start, end, levels[2 * i], levels[2 * i + 1], LINEAR))
        start = end
    return SurvivalCurve(tuple(segments), float(levels[-1]))


class CurveInvariantTest(unittest.TestCase):
    def setUp(self):
        self.rng = np.random.default_rng(2024)

    def _curves(self, count=20):
        for _ in range(count):
            knots = np.cumsum(self.rng.uniform(0.05, 0.6, size=self.rng.integers(1, 9)))
            yield _random_curve(self.rng, [float(t) for t in knots])

    def test_integral_is_additive_over_adjacent_windows(self):
        for curve in self._curves():
            a, b, d = np.sort(self.rng.uniform(0.0, curve.domain_end + 1.0, size=3))
            self.assertAlmostEqual(
                integrate_curve(curve, a, b) + integrate_curve(curve, b, d),
                integrate_curve(curve, a, d),
                delta=1e-12,
            )

    def test_integral_lies_between_window_extremes(self):
        for curve in self._curves():
            a, b = np.sort(self.rng.uniform(0.0, curve.domain_end + 1.0, size=2))
            area = integrate_curve(curve, a, b)
            self.assertGreaterEqual(area, (b - a) * eval_curve(curve, b) - 1e-12)
            self.assertLessEqual(area, (b - a) * eval_curve(curve, a) + 1e-12)

    def test_eval_is_non_increasing(self):
        for curve in self._curves():
            grid = np.sort(self.rng.uniform(0.0, curve.domain_end + 1.0, size=200))
            values = [eval_curve(curve, t) for t in grid]
            for earlier, later in zip(values, values[1:]):
                self.assertGreaterEqual(earlier, later)

    def test_integral_matches_midpoint_quadrature(self):
        points = 100_000
        for _ in range(3):
            # Knots on the quadrature grid keep every cell inside one segment
            width = 1.5
            step = width / points
            count = int(self.rng.integers(1, 9))
            indices = np.sort(self.rng.choice(np.arange(1, points), size=count, replace=False))
            curve = _random_curve(self.rng, [float(i * step) for i in indices])
            midpoints = (np.arange(points) + 0.5) * step
            quadrature = step * sum(eval_curve(curve, float(t)) for t in midpoints)

            self.assertAlmostEqual(integrate_curve(curve, 0.0, width), quadrature, delta=1e-6)


class SurvivalCurveValidationTest(unittest.TestCase):
    def test_segments_must_tile_from_zero(self):
        with self.assertRaises(ValueError):
            SurvivalCurve((Segment(0.5, 1.0, 1.0, 1.0),), 1.0)

    def test_curve_must_start_at_one(self):
        with self.assertRaises(ValueError):
            SurvivalCurve((Segment(0.0, 1.0, 0.9, 0.9),), 0.9)


class RiskTableTest(unittest.TestCase):
    def test_exposes_columns_as_arrays(self):
        table = RiskTable((RiskRow(1.0, 1, 3), RiskRow(2.0, 2, 2)))

        self.assertEqual(table.times.tolist(), [1.0, 2.0])
        self.assertEqual(table.events.tolist(), [1.0, 2.0])
        self.assertEqual(table.at_risk.tolist(), [3.0, 2.0])
        self.assertEqual(len(table), 2)

    def test_rejects_more_events_than_at_risk(self):
        with self.assertRaises(ValueError):
            RiskTable((RiskRow(1.0, 3, 2),))

    def test_rejects_growing_risk_set(self):
        with self.assertRaises(ValueError):
            RiskTable((RiskRow(1.0, 1, 2), RiskRow(2.0, 1, 3)))


if __name__ == "__main__":
    unittest.main()
