import math
import unittest
from dataclasses import replace
from unittest.mock import patch

import harness
from constants import METHOD_MIDPOINT_KM, METHOD_RIGHTPOINT_KM, METHOD_TURNBULL
from datagen.calibration import EARLY_CROSSING
from datagen.generator import generate_trial
from datagen.laws import true_mean_survival
from datagen.scenarios import get_scenario
from estimators import fit_curve
from harness import (
    INFEASIBLE,
    replication_rng,
    run_estimation_grid,
    run_estimation_study,
    run_study,
    run_sweep,
    run_test_study,
)
from mean_survival import Window, wmst
from study_config import (
    KIND_ESTIMATION_GRID,
    KIND_TEST,
    StudyConfig,
    StudyConfigError,
    parse_test_spec,
)


def _estimation_config(**changes) -> StudyConfig:
    config = StudyConfig(
        name="unit",
        n=40,
        replications=3,
        seed=11,
        methods=(METHOD_MIDPOINT_KM, METHOD_RIGHTPOINT_KM),
        tau0s=(0.25, 0.5),
    )
    return replace(config, **changes)


def _test_config(**changes) -> StudyConfig:
    config = StudyConfig(
        name="unit-tests",
        kind=KIND_TEST,
        scenarios=(get_scenario("weibull-i"),),
        n=40,
        replications=4,
        seed=5,
        tau1=None,
        tests=tuple(parse_test_spec(text) for text in ("rmst", "wmst:0.25", "logrank", "fh:0:1")),
    )
    return replace(config, **changes)


class HarnessTestCase(unittest.TestCase):
    def setUp(self):
        patcher = patch("harness.get_max_workers", return_value=1)
        patcher.start()
        self.addCleanup(patcher.stop)


class ReplicationRngTest(unittest.TestCase):
    def test_streams_depend_only_on_seed_and_index(self):
        self.assertEqual(replication_rng(3, 7).random(), replication_rng(3, 7).random())
        self.assertNotEqual(replication_rng(3, 7).random(), replication_rng(3, 8).random())
        self.assertNotEqual(replication_rng(3, 7).random(), replication_rng(4, 7).random())


class EstimationStudyTest(HarnessTestCase):
    def test_single_replication_reproduces_the_estimate(self):
        config = _estimation_config(replications=1, methods=(METHOD_MIDPOINT_KM,), tau0s=(0.25,))

        summary = run_estimation_study(config)

        data = generate_trial(config, replication_rng(config.seed, 0))
        curve, _ = fit_curve(data, METHOD_MIDPOINT_KM)
        estimate = wmst(curve, Window(0.25, 1.0))
        truth = true_mean_survival(get_scenario("weibull-1-1").control, 0.25, 1.0)
        (row,) = summary.rows
        self.assertAlmostEqual(row.mean_estimate, estimate)
        self.assertAlmostEqual(row.true_value, truth)
        self.assertAlmostEqual(row.rbias, (estimate - truth) / truth)
        self.assertAlmostEqual(row.mse, (estimate - truth) ** 2)
        self.assertEqual(row.mc_se, 0.0)
        self.assertEqual(row.replications, 1)

    def test_one_row_per_method_and_tau0(self):
        summary = run_estimation_study(_estimation_config())

        self.assertEqual(
            [(row.method, row.tau0) for row in summary.rows],
            [
                (METHOD_MIDPOINT_KM, 0.25),
                (METHOD_MIDPOINT_KM, 0.5),
                (METHOD_RIGHTPOINT_KM, 0.25),
                (METHOD_RIGHTPOINT_KM, 0.5),
            ],
        )
        self.assertEqual(summary.replications, 3)
        self.assertEqual(summary.failures, 0)

    def test_exact_data_makes_methods_agree(self):
        config = _estimation_config(
            p_exact=1.0, methods=(METHOD_MIDPOINT_KM, METHOD_RIGHTPOINT_KM, METHOD_TURNBULL)
        )

        estimates = harness._estimate_replication(config, 0)

        for tau0 in config.tau0s:
            midpoint = estimates[(METHOD_MIDPOINT_KM, tau0)]
            self.assertEqual(midpoint, estimates[(METHOD_RIGHTPOINT_KM, tau0)])
            self.assertAlmostEqual(midpoint, estimates[(METHOD_TURNBULL, tau0)], delta=1e-9)

    def test_failed_fits_are_counted(self):
        config = _estimation_config(replications=2, methods=(METHOD_TURNBULL,), tau0s=(0.25,))

        with patch("harness.fit_curve", side_effect=harness.EstimationError("no mass")):
            with self.assertLogs("harness", level="WARNING"):
                summary = run_estimation_study(config)

        (row,) = summary.rows
        self.assertEqual(row.failures, 2)
        self.assertEqual(row.replications, 0)
        self.assertTrue(math.isnan(row.rbias))

    def test_default_turnbull_fits_are_not_dropped(self):
        config = _estimation_config(
            n=100, replications=60, seed=20240917, methods=(METHOD_TURNBULL,), tau0s=(0.25,)
        )

        summary = run_estimation_study(config)

        self.assertEqual(summary.failures, 0)


class WorkerInvarianceTest(unittest.TestCase):
    def test_results_do_not_depend_on_worker_count(self):
        config = _estimation_config(replications=5)

        with patch("harness.get_chunk_size", return_value=2):
            with patch("harness.get_max_workers", return_value=1):
                serial = run_estimation_study(config)
            with patch("harness.get_max_workers", return_value=3):
                parallel = run_estimation_study(config)

        self.assertEqual(serial.rows, parallel.rows)


class EstimationGridTest(HarnessTestCase):
    def test_rows_carry_factor_and_level(self):
        base = _estimation_config(
            kind=KIND_ESTIMATION_GRID, replications=2, methods=(METHOD_MIDPOINT_KM,), tau0s=(0.5,)
        )

        summary = run_estimation_grid(base, vary=(("n", (30, 50)), ("dropout", ("High",))))

        self.assertEqual(
            [(row.factor, row.level) for row in summary.rows],
            [("n", "30"), ("n", "50"), ("dropout", "High")],
        )
        self.assertEqual(summary.kind, KIND_ESTIMATION_GRID)
        self.assertEqual(summary.replications, 6)

    def test_varying_k_against_a_list_of_rates_is_a_config_error(self):
        base = _estimation_config(kind=KIND_ESTIMATION_GRID, k=3, dropout=(0.1, 0.1, 0.2))

        with self.assertRaises(StudyConfigError) as ctx:
            run_estimation_grid(base, vary=(("k", (3, 5)),))

        self.assertEqual(ctx.exception.path, "grid.k")


class TestStudyTest(HarnessTestCase):
    def test_rows_per_test(self):
        summary = run_test_study(_test_config())

        self.assertEqual(
            [row.test for row in summary.rows], ["rmst", "wmst(0.25)", "logrank", "fh(0,1)"]
        )
        for row in summary.rows:
            self.assertEqual(row.replications + row.degenerate, 4)
            if row.replications:
                self.assertGreaterEqual(row.rejection_rate, 0.0)
                self.assertLessEqual(row.rejection_rate, 1.0)
        rmst_row, _, logrank_row, _ = summary.rows
        self.assertEqual(rmst_row.true_difference, 0.0)
        self.assertIsNone(logrank_row.true_difference)
        self.assertIsNone(logrank_row.mean_difference)

    def test_fixed_tau1_past_the_data_does_not_warn_per_replication(self):
        config = _test_config(tau1=5.0, tests=(parse_test_spec("rmst"),))

        with self.assertNoLogs("mean_survival", level="WARNING"):
            summary = run_test_study(config)

        self.assertEqual(summary.rows[0].replications + summary.rows[0].degenerate, 4)

    def test_degenerate_replications_are_excluded(self):
        with patch("harness.weighted_logrank", side_effect=harness.DegenerateTestError("flat")):
            summary = run_test_study(_test_config(tests=(parse_test_spec("logrank"),)))

        (row,) = summary.rows
        self.assertEqual(row.degenerate, 4)
        self.assertEqual(row.replications, 0)
        self.assertTrue(math.isnan(row.rejection_rate))
        self.assertEqual(summary.failures, 4)

    def test_multi_scenario_study_runs_each_scenario(self):
        config = _test_config(
            scenarios=(get_scenario("weibull-i"), get_scenario("weibull-vi")),
            tests=(parse_test_spec("logrank"),),
        )

        summary = run_study(config)

        self.assertEqual([row.scenario for row in summary.rows], ["weibull-i", "weibull-vi"])
        self.assertEqual(summary.replications, 8)


class SweepTest(HarnessTestCase):
    def test_infeasible_cells_are_reported(self):
        config = _test_config(replications=3, tests=(parse_test_spec("logrank"),), tau1=1.0)

        summary = run_sweep(EARLY_CROSSING, (0.2,), (0.25,), (0.1, 0.99), config)

        labels = ["rmst", "wmst(0.25)", "logrank"]
        feasible = [row for row in summary.rows if row.delta == 0.1]
        infeasible = [row for row in summary.rows if row.delta == 0.99]
        self.assertEqual([row.test for row in feasible], labels)
        self.assertEqual([row.test for row in infeasible], labels)
        self.assertAlmostEqual(abs(feasible[0].true_difference), 0.1, delta=1e-6)
        for row in feasible:
            self.assertEqual(row.x, 0.2)
            self.assertEqual(row.note, "")
        for row in infeasible:
            self.assertEqual(row.note, INFEASIBLE)
            self.assertTrue(math.isnan(row.rejection_rate))
        self.assertEqual(summary.replications, 3)


if __name__ == "__main__":
    unittest.main()
