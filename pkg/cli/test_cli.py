import csv
import json
import os
import tempfile
import unittest

from cli.app import (EXIT_CONFIG, EXIT_DIM_CAP, EXIT_OK, CSV_COLUMNS, SWEEP_COLUMNS, attack, main, run, sweep,
                     sweep_cells)
from cli.config import AttackConfig, ExperimentConfig, SweepConfig
from cli.selftest import FAIL, run_selftest
from protocols.eq import eq_path_soundness_bound
from utils.common import ConfigError


def eq_config(x="0", y="1", r=2, n=1, prover="honest", **extra):
    return {"protocol": "eq_path", "params": {"r": r, "n": n, "x": x, "y": y}, "prover": {"kind": prover}, **extra}


class TestConfig(unittest.TestCase):
    def test_defaults(self):
        config = ExperimentConfig.from_dict(eq_config())
        self.assertEqual(config.params["k"], 1)
        self.assertIsNone(config.params["gap"])
        self.assertEqual(config.mode["kind"], "exact")
        self.assertEqual(config.prover["restarts"], 16)
        self.assertEqual(config.format, "json")

    def test_unknown_field(self):
        data = eq_config()
        data["params"]["depth"] = 3
        with self.assertRaisesRegex(ConfigError, "depth"):
            ExperimentConfig.from_dict(data)

    def test_missing_and_mistyped(self):
        data = eq_config()
        del data["params"]["x"]
        with self.assertRaisesRegex(ConfigError, "missing required field 'x'"):
            ExperimentConfig.from_dict(data)
        with self.assertRaises(ConfigError):
            ExperimentConfig.from_dict(eq_config(r="2"))
        with self.assertRaises(ConfigError):
            ExperimentConfig.from_dict(eq_config(r=True))

    def test_unknown_protocol_and_prover(self):
        with self.assertRaises(ConfigError):
            ExperimentConfig.from_dict({"protocol": "gossip", "params": {}})
        with self.assertRaises(ConfigError):
            ExperimentConfig.from_dict(eq_config(prover="oracle"))
        with self.assertRaisesRegex(ConfigError, "amplitudes"):
            ExperimentConfig.from_dict(eq_config(prover="explicit"))

    def test_sweep_axes(self):
        template = eq_config(prover="entangled_opt")
        self.assertEqual(len(sweep_cells(SweepConfig.from_dict({"template": template, "axes": {"k": [1, 2, 3]}}))),
                         3)
        with self.assertRaises(ConfigError):
            SweepConfig.from_dict({"template": template, "axes": {"depth": [1]}})
        with self.assertRaises(ConfigError):
            SweepConfig.from_dict({"template": template, "axes": {"k": []}})

    def test_attack_config(self):
        config = AttackConfig.from_dict({"attack": "classical_fooling", "params": {"n": 3, "r": 4, "bits": 2}})
        self.assertEqual(config.params["bits"], 2)
        with self.assertRaises(ConfigError):
            AttackConfig.from_dict({"attack": "brute_force", "params": {}})


class TestRun(unittest.TestCase):
    def test_eq_path_honest(self):
        result = run(ExperimentConfig.from_dict(eq_config("1", "1")))
        self.assertAlmostEqual(result.accept_prob, 1.0, places=9)
        self.assertEqual(result.instance, "yes")
        self.assertTrue(result.satisfied)
        self.assertEqual(result.wall_time_ms, 0.0)
        d = result.to_dict()
        self.assertEqual(d["bound"]["formula"], "1 (completeness)")
        self.assertEqual(d["config"]["protocol"], "eq_path")

    def test_eq_path_entangled_no_instance(self):
        result = run(ExperimentConfig.from_dict(eq_config("0", "1", prover="entangled_opt")))
        self.assertLessEqual(result.accept_prob, 1 - 1 / 81 + 1e-9)
        self.assertAlmostEqual(result.accept_prob, result.lambda_max, places=9)
        self.assertAlmostEqual(result.bound.value, eq_path_soundness_bound(2), places=12)
        self.assertTrue(result.satisfied)
        self.assertEqual(set(result.per_node_reject), {"v0", "v1", "v2"})

    def test_gt_honest(self):
        data = {"protocol": "gt", "params": {"r": 2, "n": 3, "x": 5, "y": 3}}
        result = run(ExperimentConfig.from_dict(data))
        self.assertAlmostEqual(result.accept_prob, 1.0, places=9)
        self.assertIsNone(result.choice)

    def test_sampled_run_is_reproducible(self):
        data = eq_config("0", "1", prover="entangled_opt", mode={"kind": "sample", "shots": 2000, "seed": 7})
        config = ExperimentConfig.from_dict(data)
        first, second = run(config, seed=3), run(config, seed=3, threads=2)
        self.assertEqual(first.accept_prob, second.accept_prob)
        self.assertEqual(first.seed, 7)

    def test_sweep_repetition(self):
        config = SweepConfig.from_dict({"template": eq_config(prover="entangled_opt"), "axes": {"k": [1, 2]}})
        cells = sweep(config, threads=2)
        self.assertEqual([c["cell"] for c in cells], [0, 1])
        single, double = (c["result"].accept_prob for c in cells)
        self.assertAlmostEqual(double, single ** 2, places=8)

    def test_sweep_skips_capped_cells(self):
        config = SweepConfig.from_dict({"template": eq_config(dim_cap=64), "axes": {"r": [2, 6]}})
        cells = sweep(config)
        self.assertIn("result", cells[0])
        self.assertIn("skipped", cells[1])

    def test_attacks(self):
        fooling = attack(AttackConfig.from_dict({"attack": "classical_fooling", "params": {"n": 3, "r": 4, "bits": 2}}))
        self.assertEqual(fooling.status, "applied")
        full = attack(AttackConfig.from_dict({"attack": "classical_fooling", "params": {"n": 3, "r": 4, "bits": 3}}))
        self.assertEqual(full.status, "not_applicable")
        gapped = attack(AttackConfig.from_dict(
            {"attack": "entangled_no_proof", "params": {"r": 5, "n": 1, "i": 2, "gap": 2}}))
        self.assertEqual(gapped.status, "applied")
        self.assertAlmostEqual(gapped.accept_prob, 1.0, places=9)


class TestMain(unittest.TestCase):
    def setUp(self):
        self.dir = tempfile.TemporaryDirectory()
        self.addCleanup(self.dir.cleanup)

    def path(self, name):
        return os.path.join(self.dir.name, name)

    def write(self, name, data):
        with open(self.path(name), "w") as f:
            json.dump(data, f)
        return self.path(name)

    def test_run_json(self):
        config = self.write("eq.json", eq_config("1", "1"))
        self.assertEqual(main(["run", "--config", config, "--out", self.path("out.json")]), EXIT_OK)
        with open(self.path("out.json")) as f:
            record = json.loads(f.readline())
        self.assertEqual(record["accept_prob"], 1.0)
        self.assertTrue(record["bound"]["satisfied"])

    def test_run_csv(self):
        config = self.write("eq.json", eq_config("0", "1", prover="entangled_opt"))
        out = self.path("out.csv")
        self.assertEqual(main(["run", "--config", config, "--format", "csv", "--out", out]), EXIT_OK)
        with open(out, newline="") as f:
            rows = list(csv.reader(f))
        self.assertEqual(rows[0], CSV_COLUMNS)
        self.assertEqual(rows[1][0], "eq_path")
        self.assertEqual(rows[1][CSV_COLUMNS.index("satisfied")], "true")

    def test_sweep_csv_keeps_skipped_cells(self):
        config = self.write("sweep.json", {"template": eq_config(dim_cap=64), "axes": {"r": [2, 6]}})
        out = self.path("sweep.csv")
        self.assertEqual(main(["sweep", "--config", config, "--format", "csv", "--out", out]), EXIT_OK)
        with open(out, newline="") as f:
            rows = list(csv.DictReader(f))
        self.assertEqual(list(rows[0]), SWEEP_COLUMNS)
        self.assertEqual(len(rows), 2)
        self.assertEqual(rows[0]["skipped"], "")
        self.assertNotEqual(rows[0]["accept_prob"], "")
        self.assertEqual((rows[1]["protocol"], rows[1]["r"], rows[1]["accept_prob"]), ("eq_path", "6", ""))
        self.assertIn("dim_cap 64", rows[1]["skipped"])

    def test_exit_codes(self):
        bad = self.write("bad.json", {"protocol": "eq_path", "params": {"r": 2}})
        self.assertEqual(main(["run", "--config", bad, "--out", self.path("o")]), EXIT_CONFIG)
        self.assertEqual(main(["run", "--config", self.path("missing.json"), "--out", self.path("o")]), EXIT_CONFIG)
        config = self.write("eq.json", eq_config("1", "1"))
        self.assertEqual(main(["run", "--config", config, "--dim-cap", "2", "--out", self.path("o")]), EXIT_DIM_CAP)

    def test_bad_seed(self):
        with self.assertRaises(SystemExit):
            main(["selftest", "--seed", str(2 ** 64)])


class TestSelftest(unittest.TestCase):
    def test_passes_and_is_deterministic(self):
        first = run_selftest(seed=0)
        self.assertFalse([r for r in first if r.status == FAIL], [r.to_dict() for r in first])
        self.assertLessEqual({"fidelity_bounds", "channel_trace_positivity_contractivity", "forall_f_triples",
                              "cut_paste_attack", "exact_vs_sampled"}, {r.check for r in first})
        self.assertEqual([r.to_dict() for r in first], [r.to_dict() for r in run_selftest(seed=0)])


if __name__ == "__main__":
    unittest.main()
