import pytest

from bdgkit import ConfigError
from bdgkit.suites import SUITES, ExperimentConfig, run_suites


def small(**kw):
    base = dict(n_martingales=8, n_chains=2, max_horizon=3, mc_paths=200, mc_steps=1000)
    base.update(kw)
    return ExperimentConfig(**base)


def test_config_round_trip():
    cfg = small(seed=4, p_values=[1.5, 2.0], martingales=[{"seed": 1, "horizon": 2}])
    assert ExperimentConfig.from_json(cfg.to_json()) == cfg


@pytest.mark.parametrize(
    "data",
    [{"suites": ["nope"]}, {"suites": []}, {"format": "xml"}, {"cap": -1}, {"p_values": [0]},
     {"seed": -1}, {"branchings": [1]}, {"jump_laws": ["gamma"]}, {"bogus": 1},
     {"mc_families": [{"name": "cauchy"}]}, {"martingales": [{"horizon": 0}]}],
)
def test_config_rejects(data):
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict(data)


def test_config_bad_json():
    with pytest.raises(ConfigError):
        ExperimentConfig.from_json("{not json")
    with pytest.raises(ConfigError):
        ExperimentConfig.from_json("[1, 2]")


@pytest.mark.parametrize("suite", SUITES)
def test_each_suite_passes(suite):
    rows = run_suites(small(suites=[suite]))
    assert rows
    assert [r.name for r in rows if not r.passed] == []


def test_p_filter():
    rows = run_suites(small(suites=["bdg-exact"], p_values=[3.0]))
    assert {r.p for r in rows if r.name.startswith("bdg-")} <= {3.0}
