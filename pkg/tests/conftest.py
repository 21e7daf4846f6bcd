import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from optnoise.pipeline import PipelineConfig, SynthParams, synthesize_market  # noqa: E402


def market_config(directory, **overrides):
    return PipelineConfig(options_path=os.path.join(directory, "options.csv"),
                          treasury_path=os.path.join(directory, "treasury.csv"),
                          closes_path=os.path.join(directory, "closes.csv"), **overrides)


@pytest.fixture(scope="session")
def small_market(tmp_path_factory):
    """About 1,000 option rows from seed 7."""
    d = tmp_path_factory.mktemp("market")
    synthesize_market(PipelineConfig(seed=7, synth=SynthParams(n_days=24)), d)
    return str(d)


@pytest.fixture(scope="session")
def market(tmp_path_factory):
    d = tmp_path_factory.mktemp("market_full")
    res = synthesize_market(PipelineConfig(seed=11), d)
    return str(d), res.truth


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not getattr(mod, "RESULTS", None):
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[n])
