import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bdgkit import DomainError, FilteredSpace, Process, StructuralError, ValidationError, is_martingale
from bdgkit.calculus import (
    check_fv_rules,
    check_ibp,
    check_ito_remainder,
    covariation,
    fv_lemma_bounds,
    jump_maximal,
    maximal,
    quadratic_variation,
    stoch_integral,
    total_variation,
)
from bdgkit.prob_space import PREDICTABLE, constant_process

from conftest import martingales


def deterministic(path):
    sp = FilteredSpace.revealed(1, len(path) - 1)
    return Process(sp, np.asarray(path, dtype=float)[:, None])


def revealed_paths(rng, n_atoms, T, increasing=False):
    sp = FilteredSpace.revealed(n_atoms, T)
    steps = rng.exponential(size=(T, n_atoms)) if increasing else rng.normal(size=(T, n_atoms))
    vals = np.vstack([np.zeros(n_atoms), np.cumsum(steps, axis=0)])
    return sp, Process(sp, vals)


def test_qv_hand_example():
    X = deterministic([0, 3, 7])
    assert quadratic_variation(X).terminal[0] == 25.0


def test_qv_of_walk_is_time(walk3):
    _, M = walk3
    assert np.array_equal(quadratic_variation(M).values, np.repeat(np.arange(4.0)[:, None], 8, axis=1))


def test_maximal_example():
    assert maximal(deterministic([0, 1, -3])).values[:, 0].tolist() == [0, 1, 3]


@given(martingales())
def test_polarization(M):
    N = stoch_integral(Process(M.space, 1 / (1 + np.sum(M.left**2, axis=2)), PREDICTABLE), M)
    lhs = covariation(M, N).values
    rhs = 0.25 * (quadratic_variation(M + N).values - quadratic_variation(M - N).values)
    assert np.max(np.abs(lhs - rhs)) <= 1e-10 * max(1.0, np.max(np.abs(lhs)))


@given(martingales())
def test_pathwise_orderings(M):
    S, Ms = jump_maximal(M).terminal, maximal(M).terminal
    assert np.all(S <= 2 * Ms + 1e-12)
    assert np.all(S**2 <= quadratic_variation(M).terminal * (1 + 1e-12))
    assert np.all(Ms <= total_variation(M).terminal * (1 + 1e-12) + 1e-12)
    assert np.all(np.diff(quadratic_variation(M).values, axis=0) >= 0)


def test_integral_of_constants(walk3):
    _, M = walk3
    assert np.array_equal(stoch_integral(1, M).values, M.values)
    assert np.allclose(stoch_integral(constant_process(M.space, 2.5), M).values, 2.5 * M.values)


def test_integral_rejects_anticipating_integrand(walk3):
    _, M = walk3
    with pytest.raises(ValidationError):
        stoch_integral(Process(M.space, M.values), M)
    N = stoch_integral(Process(M.space, M.values), M, left_limit=True)
    assert is_martingale(N)


def test_integral_rejects_vector_integrand(walk3):
    _, M = walk3
    H = Process(M.space, np.zeros((4, 8, 2)), PREDICTABLE)
    with pytest.raises(StructuralError):
        stoch_integral(H, M)


@given(martingales(), st.floats(0.5, 4.0))
def test_integral_qv_and_associativity(M, p):
    eps = 1e-3
    qv = quadratic_variation(M)
    H = Process(M.space, (eps + qv.values) ** (p / 4 - 0.5))
    N = stoch_integral(H, M, left_limit=True)
    assert is_martingale(N, 1e-10)
    h = H.values[:, :, 0]
    h_left = np.vstack([np.zeros((1, h.shape[1])), h[:-1]])
    expected = np.cumsum(h_left**2 * np.sum(M.increments**2, axis=2), axis=0)
    assert np.max(np.abs(quadratic_variation(N).values - expected)) <= 1e-10 * max(1.0, expected.max())
    G = Process(M.space, np.cos(M.left[:, :, 0]), PREDICTABLE)
    HG = Process(M.space, G.values[:, :, 0] * h_left, PREDICTABLE)
    lhs = stoch_integral(Process(M.space, h_left, PREDICTABLE), stoch_integral(G, M)).values
    assert np.max(np.abs(lhs - stoch_integral(HG, M).values)) <= 1e-10 * max(1.0, np.abs(lhs).max())


@given(martingales())
def test_kunita_watanabe(M):
    N = stoch_integral(Process(M.space, np.sin(M.left[:, :, 0]), PREDICTABLE), M)
    abs_cov = np.abs(np.einsum("tad,tad->ta", M.increments, N.increments)).sum(axis=0)
    rhs = np.sqrt(quadratic_variation(M).terminal * quadratic_variation(N).terminal)
    assert np.all(abs_cov <= rhs * (1 + 1e-12) + 1e-14)


@given(martingales())
def test_qv_integration_by_parts(M):
    inner = np.einsum("tad,tad->ta", M.left, M.increments)
    rhs = np.sum(M.values**2, axis=2) - 2 * np.cumsum(inner, axis=0)
    lhs = quadratic_variation(M).values
    assert np.max(np.abs(lhs - rhs)) <= 1e-10 * max(1.0, lhs.max())


def test_ibp_hand_examples():
    U = deterministic([0, 1, 2])
    assert check_ibp(U, U) == 0.0
    Z = Process(U.space, np.zeros_like(U.values))
    assert check_ibp(Z, U) == 0.0


@given(martingales())
def test_ibp_random(M):
    U = Process(M.space, np.cumsum(np.abs(M.increments), axis=0))
    assert check_ibp(U, M) <= 1e-10
    assert check_ibp(M, M) <= 1e-10


def test_fv_rules_hand_example():
    U = deterministic([1, 4, 9])
    res = check_fv_rules(U)
    assert max(res.values()) <= 1e-15
    assert np.allclose(np.diff(np.sqrt(U.values[:, 0, 0])), [3 / (1 + 2), 5 / (2 + 3)])
    assert max(check_fv_rules(deterministic([2, 2, 2])).values()) == 0.0


def test_fv_rules_reject_nonpositive():
    with pytest.raises(DomainError):
        check_fv_rules(deterministic([0, 1, 2]))


def test_fv_rules_random():
    rng = np.random.default_rng(1)
    sp, V = revealed_paths(rng, 200, 6, increasing=True)
    U = Process(sp, V.values + 1e-3)
    assert max(check_fv_rules(U).values()) <= 1e-10


def test_fv_lemma_hand_examples():
    res = fv_lemma_bounds(deterministic([0, 1, 2]), 2)
    assert res.lhs[-1, 0] == 1.0 and res.rhs[-1, 0] == 2.0 and res.ok
    one = fv_lemma_bounds(deterministic([0, 0, 5, 5]), 3)
    assert one.lhs[-1, 0] == 0.0 and one.ok


def test_fv_lemma_domain():
    with pytest.raises(DomainError):
        fv_lemma_bounds(deterministic([0, 1]), 1)
    with pytest.raises(DomainError):
        fv_lemma_bounds(deterministic([0, 2, 1]), 2)


@pytest.mark.parametrize("q", [0.3, 0.5, 1.5, 3.0])
def test_fv_lemma_sweep(q):
    rng = np.random.default_rng(int(q * 10))
    sp, V = revealed_paths(rng, 2000, 8, increasing=True)
    res = fv_lemma_bounds(V, q)
    assert res.ok
    if q < 1:
        assert res.slack == pytest.approx((1 - q) / q * 1e-8**q)


def test_ito_remainder_p2_is_qv(walk3):
    _, M = walk3
    res = check_ito_remainder(M, 2)
    assert np.allclose(res.remainder, quadratic_variation(M).terminal)
    assert np.allclose(res.bound, res.remainder) and res.ok


def test_ito_remainder_one_step(flip):
    _, M = flip
    for p in (2.5, 3, 4):
        res = check_ito_remainder(M, p)
        assert np.allclose(res.remainder, 1.0) and res.ok


@given(martingales(), st.sampled_from([2.5, 3.0, 4.0]))
def test_ito_remainder_random(M, p):
    res = check_ito_remainder(M, p)
    assert res.ok
    assert abs(res.martingale_part_mean) <= 1e-9 * max(1.0, float(np.abs(M.values).max()) ** p)
    assert res.identity_residual <= 1e-10


def test_ito_remainder_domain(flip):
    with pytest.raises(DomainError):
        check_ito_remainder(flip[1], 1.5)
