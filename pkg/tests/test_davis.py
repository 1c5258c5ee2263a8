import numpy as np
import pytest
from hypothesis import given

from bdgkit import JumpLaw, MartingaleSpec, Process, UnsupportedError, ValidationError, generate_martingale, is_martingale
from bdgkit.compensation import compensator
from bdgkit.davis import big_jumps, check_dK_bound, check_jump_doubling, davis_decompose, variation

from conftest import martingales


def test_one_step_flip(flip):
    sp, M = flip
    dec = davis_decompose(M)
    assert np.array_equal(dec.K.values, M.values)
    assert np.allclose(dec.L.values, 0.0)
    assert np.allclose(dec.K2.values, 0.0)
    rep = check_dK_bound(M, 1)
    assert rep.ratio == pytest.approx(1.0) and rep.passed


def test_two_step_walk():
    sp, M = generate_martingale(MartingaleSpec(seed=0, branching=2, horizon=2))
    dec = davis_decompose(M)
    # the second jump has size 1 < 2 S_1 = 2
    assert np.allclose(dec.K1.values[2], dec.K1.values[1])
    assert np.allclose(dec.K.values[2], M.values[1])
    assert np.allclose(np.abs(dec.L.increments[2]), 1.0)
    assert dec.certified()


def test_equal_jumps_only_first_is_big(walk3):
    sp, M = walk3
    K1 = big_jumps(M)
    assert np.array_equal(K1.values[-1], M.values[1])


def test_rejects_non_martingale(walk3):
    sp, M = walk3
    with pytest.raises(ValidationError):
        davis_decompose(M + 1.0)


@given(martingales(max_horizon=5, max_dim=4))
def test_invariants(M):
    dec = davis_decompose(M)
    cert = dec.certify()
    assert dec.certified(), cert
    assert cert["max_jump_ratio_L"] <= 4 + 1e-9
    assert np.allclose(compensator(dec.K1).compensated.values, dec.K2.values)
    assert is_martingale(dec.L) and is_martingale(dec.K)
    assert check_jump_doubling(M)


def test_heavy_tail_invariants():
    for seed in range(30):
        spec = MartingaleSpec(seed=seed, branching=3, horizon=5, dim=2, jump_law=JumpLaw.HEAVY_TAIL_TRUNCATED, random_probs=True)
        assert davis_decompose(generate_martingale(spec)[1]).certified()


def test_jump_doubling_at_threshold():
    from bdgkit import FilteredSpace

    sp = FilteredSpace.tree(2, 2)
    # jumps 1 then exactly 2 = 2 S_1 on the first branch
    d1 = np.array([1, 1, -1, -1.0])
    d2 = np.array([2, -2, 0.5, -0.5])
    M = Process(sp, np.vstack([np.zeros(4), d1, d1 + d2]))
    assert check_jump_doubling(M)
    assert np.allclose(big_jumps(M).increments[2], d2[:, None] * np.array([1, 1, 0, 0])[:, None])


@given(martingales(max_dim=1))
def test_dK_scalar(M):
    for p in (1, 2, 4):
        rep = check_dK_bound(M, p)
        assert rep.passed and rep.tracked_constant == 4 * (p + 1)
        assert {link.name for link in rep.links} >= {"dKS-fv+", "dKS-fv-", "dKS-jordan-consistency"}


def test_dK_vector():
    sp, M = generate_martingale(MartingaleSpec(seed=3, branching=3, horizon=4, dim=3))
    rep = check_dK_bound(M, 1)
    assert rep.passed and rep.tracked_constant == 4
    with pytest.raises(UnsupportedError):
        check_dK_bound(M, 2)


def test_to_dict_roundtrip_shapes(flip):
    d = davis_decompose(flip[1]).to_dict()
    assert d["certificates"]["reconstruction"] is True
    assert np.asarray(d["K"]).shape == (2, 2, 1)
    assert variation(davis_decompose(flip[1]).K).tolist() == [1.0, 1.0]
