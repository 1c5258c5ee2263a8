import math

import numpy as np
import pytest

from bdgkit import CapacityError, DomainError
from bdgkit import montecarlo as mc


def test_determinism_and_chunking():
    a = mc.simulate("brownian", 300, 50, seed=7).paths
    b = mc.simulate("brownian", 300, 50, seed=7).paths
    c = mc.simulate("brownian", 300, 50, seed=8).paths
    assert np.array_equal(a, b) and not np.array_equal(a, c)
    assert a.shape == (300, 51, 1) and np.all(a[:, 0] == 0)


def test_single_step():
    ens = mc.simulate("brownian", 5000, 1, seed=1)
    s = ens.summary
    assert np.allclose(s.sup_norm, np.abs(s.terminal[:, 0]))
    assert np.allclose(s.qv, s.terminal[:, 0] ** 2)


def test_brownian_moments():
    ens = mc.simulate("brownian", 4000, 100, dim=2, seed=3)
    X1 = ens.summary.terminal
    se = 1 / math.sqrt(X1.shape[0])
    assert np.all(np.abs(X1.mean(axis=0)) < 5 * se)
    assert np.all(np.abs(X1.var(axis=0) - 1) < 5 * math.sqrt(2) * se)


def test_poisson_mean():
    ens = mc.simulate(mc.PathFamily("compensated_poisson", rate=3.0), 4000, 200, seed=2)
    est = mc.McEstimate.of(ens.summary.terminal[:, 0])
    assert abs(est.value) < 5 * est.std_error
    # compensated Poisson has [X,X]_1 = N_1 with mean rate
    q = mc.McEstimate.of(ens.summary.qv)
    assert abs(q.value - 3.0) < 5 * q.std_error


def test_stable_truncated_bounded():
    fam = mc.PathFamily("stable_truncated", alpha=1.2, cap=2.0)
    inc = mc.simulate(fam, 100, 20, seed=0).chunk_increments(0)
    assert np.all(np.abs(inc) <= 2.0)
    assert fam.label == "stable_truncated(alpha=1.2,cap=2)"


@pytest.mark.parametrize("family", ["brownian", "compensated_poisson", "stable_truncated"])
def test_p2_bracket(family):
    ens = mc.simulate(family, 2000, 200, seed=4)
    res = mc.bdg_mc_report(ens, 2)
    assert res.upper.constant == 2 and res.lower.constant == 1
    assert all(r.passed for r in res.reports)
    assert res.sup_moment.value >= res.qv_moment.value * 0.9


@pytest.mark.parametrize("p", [0.5, 1.0, 3.0])
def test_continuous_constants(p):
    ens = mc.simulate("brownian", 2000, 200, seed=5)
    res = mc.bdg_mc_report(ens, p)
    assert all(r.passed for r in res.reports)
    if p == 0.5:
        assert res.upper.constant == pytest.approx(8) and res.lower.constant == pytest.approx(4)


def test_mc_domain():
    ens = mc.simulate("compensated_poisson", 10, 10)
    with pytest.raises(DomainError):
        mc.bdg_mc_report(ens, 0.0)
    with pytest.raises(DomainError):
        mc.bdg_mc_report(ens, 0.5)
    with pytest.raises(DomainError):
        mc.PathFamily("cauchy")


def test_capacity():
    with pytest.raises(CapacityError):
        mc.simulate("brownian", 10**6, 10**5)
    with pytest.raises(CapacityError):
        mc.simulate("brownian", 10**4, 10**4).paths


@pytest.mark.parametrize("which,p", [("ub2c", 1.0), ("ub2c", 2.0), ("lb2c", 0.5), ("lb2c", 1.0), ("lbp_gt2", 3.0)])
def test_auxiliary_constructions(which, p):
    ens = mc.simulate("brownian", 500, 2000, seed=6)
    res = mc.auxiliary_construction_check(ens, p, which)
    assert res.pass_fraction >= mc.REQUIRED_FRACTION and res.report.passed


def test_auxiliary_domain():
    ens = mc.simulate("brownian", 10, 10)
    with pytest.raises(DomainError):
        mc.auxiliary_construction_check(ens, 3.0, "ub2c")
    with pytest.raises(DomainError):
        mc.auxiliary_construction_check(ens, 1.0, "lbp_gt2")
    with pytest.raises(DomainError):
        mc.auxiliary_construction_check(ens, 1.0, "nope")


def test_eps_sweep_names():
    ens = mc.simulate("brownian", 200, 500, seed=9)
    out = mc.aux_eps_sweep(ens, 1.0, "ub2c", [1e-6, 1e-3])
    assert [r.report.name for r in out] == ["aux-ub2c[eps=1e-06]", "aux-ub2c[eps=0.001]"]
    assert all(r.n_paths == 200 for r in out)


def test_qv_convergence():
    coarse = mc.qv_error(mc.simulate("brownian", 500, 50, seed=1)).value
    fine = mc.qv_error(mc.simulate("brownian", 500, 5000, seed=1)).value
    assert fine < coarse and fine < 0.05
