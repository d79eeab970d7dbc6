from cli.config import AttackConfig, ConfigError, ExperimentConfig, SweepConfig, load_json
from cli.catalog import CatalogInstance, RunSettings, SoundnessBound, build_instance
from cli.selftest import CHECKS, CheckResult, run_selftest
from cli.app import ExperimentResult, attack, main, run, sweep
