import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from bdgkit import FilteredSpace, JumpLaw, MartingaleSpec, Process, generate_martingale

settings.register_profile("default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def specs(max_horizon=4, max_dim=3, laws=tuple(JumpLaw)):
    return st.builds(
        MartingaleSpec,
        seed=st.integers(0, 2**32 - 1),
        branching=st.integers(2, 3),
        horizon=st.integers(1, max_horizon),
        dim=st.integers(1, max_dim),
        jump_law=st.sampled_from(laws),
        random_probs=st.booleans(),
    )


def martingales(**kw):
    return specs(**kw).map(lambda s: generate_martingale(s)[1])


def coin(T=1):
    """Fair +-1 walk of length T on the binary tree."""
    sp = FilteredSpace.tree(2, T)
    atoms = np.arange(sp.n_atoms)
    steps = [np.where((atoms >> (T - n)) & 1, -1.0, 1.0) for n in range(1, T + 1)]
    vals = np.vstack([np.zeros(sp.n_atoms)] + list(np.cumsum(steps, axis=0)))
    return sp, Process(sp, vals)


@pytest.fixture
def flip():
    return coin(1)


@pytest.fixture
def walk3():
    return coin(3)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import VERDICTS
    except ImportError:
        return
    if VERDICTS:
        terminalreporter.section("acceptance criteria")
        for k in sorted(VERDICTS):
            terminalreporter.write_line(VERDICTS[k])
