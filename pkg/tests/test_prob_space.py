import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bdgkit import (
    CapacityError,
    FilteredSpace,
    MartingaleSpec,
    Process,
    StoppingTime,
    StructuralError,
    ValidationError,
    cond_expect,
    generate_martingale,
    is_martingale,
    stop_process,
)
from bdgkit.calculus import quadratic_variation
from bdgkit.prob_space import PREDICTABLE, constant_process, martingale_defect, running_sum

from conftest import coin, specs


def test_space_rejects_bad_probabilities():
    with pytest.raises(ValidationError):
        FilteredSpace(np.array([0.5, 0.6]), np.array([[0, 0], [0, 1]]))
    with pytest.raises(ValidationError):
        FilteredSpace(np.array([1.0, 0.0]), np.array([[0, 0], [0, 1]]))


def test_space_requires_trivial_start_and_refinement():
    with pytest.raises(ValidationError):
        FilteredSpace(np.full(2, 0.5), np.array([[0, 1], [0, 1]]))
    with pytest.raises(ValidationError):
        FilteredSpace(np.full(4, 0.25), np.array([[0, 0, 0, 0], [0, 0, 1, 1], [0, 1, 0, 1]]))


def test_from_partitions_prunes_null_atoms():
    sp = FilteredSpace.from_partitions([[[0, 1, 2]], [[0, 1], [2]]], [0.5, 0.0, 0.5], outcomes=["a", "b", "c"])
    assert sp.n_atoms == 2
    assert sp.outcomes == ("a", "c")
    assert sp.partitions == [[[0, 1]], [[0], [1]]]


def test_terminal_partition_may_be_coarse():
    sp = FilteredSpace.from_partitions([[[0, 1, 2]], [[0, 1], [2]]], [0.25, 0.25, 0.5])
    assert sp.n_blocks(sp.horizon) == 2


def test_tree_capacity():
    with pytest.raises(CapacityError):
        FilteredSpace.tree(2, 10, atom_cap=512)


def test_cond_expect_two_atom_symmetry(flip):
    sp, M = flip
    assert np.allclose(cond_expect(M, 0).values[-1], 0.0)
    assert np.allclose(cond_expect(M, 1).values, M.values)


def test_cond_expect_of_constant_is_constant(walk3):
    sp, _ = walk3
    X = constant_process(sp, 2.5)
    for n in range(sp.horizon + 1):
        assert np.allclose(cond_expect(X, n).values, 2.5)


def test_cond_expect_at_zero_is_expectation():
    sp, M = generate_martingale(MartingaleSpec(seed=4, branching=3, horizon=3, random_probs=True))
    X = M.values[-1] ** 2
    assert np.allclose(sp.expect_given(X, 0), sp.expectation(X))


def test_expect_given_rejects_wrong_atom_count(walk3):
    sp, _ = walk3
    with pytest.raises(StructuralError):
        sp.expect_given(np.zeros(3), 1)


@given(specs(), st.data())
def test_tower_property(spec, data):
    sp, M = generate_martingale(spec)
    X = np.sin(M.values[-1]) + M.values[-1] ** 2
    m = data.draw(st.integers(0, sp.horizon))
    n = data.draw(st.integers(0, sp.horizon))
    lhs = sp.expect_given(sp.expect_given(X, m), n)
    rhs = sp.expect_given(X, min(m, n))
    assert np.max(np.abs(lhs - rhs)) <= 1e-12 * max(1.0, np.max(np.abs(X)))


@given(specs())
def test_generated_martingales(spec):
    sp, M = generate_martingale(spec)
    assert is_martingale(M, 1e-12)
    for j in range(M.dim):
        assert is_martingale(M.coord(j), 1e-12)
    # increment orthogonality
    e_norm = sp.expectation(np.sum(M.terminal**2, axis=1))
    e_inc = sp.expectation(np.sum(M.increments**2, axis=(0, 2)))
    assert abs(e_norm - e_inc) <= 1e-10 * max(1.0, e_inc)


def test_coin_flip_generator():
    sp, M = generate_martingale(MartingaleSpec(seed=0, branching=2, horizon=1))
    assert sorted(M.terminal[:, 0]) == [-1.0, 1.0]
    assert np.allclose(sp.probs, 0.5)


def test_generator_capacity():
    with pytest.raises(CapacityError):
        generate_martingale(MartingaleSpec(seed=0, branching=3, horizon=14, atom_cap=2**20))


def test_increasing_process_is_not_martingale(walk3):
    sp, _ = walk3
    X = Process(sp, np.repeat(np.arange(4.0)[:, None], sp.n_atoms, axis=1))
    assert not is_martingale(X)


def test_adaptedness_enforced(walk3):
    sp, M = walk3
    with pytest.raises(ValidationError):
        Process(sp, np.roll(M.values, -1, axis=0))


def test_predictable_kind_checks_previous_partition(walk3):
    sp, M = walk3
    with pytest.raises(ValidationError):
        Process(sp, M.values, PREDICTABLE)
    Process(sp, np.vstack([M.values[:1], M.values[:-1]]), PREDICTABLE)


def test_stop_process_examples(walk3):
    sp, M = walk3
    assert np.array_equal(stop_process(M, StoppingTime.constant(sp, sp.horizon)).values, M.values)
    assert np.allclose(stop_process(M, StoppingTime.constant(sp, 0)).values, 0.0)
    tau = StoppingTime.hitting(M, 2.0)
    Ms = stop_process(M, tau)
    assert is_martingale(Ms)
    assert np.max(np.abs(Ms.values)) <= 2.0


def test_stopping_time_measurability(walk3):
    sp, M = walk3
    peek = np.where(M.terminal[:, 0] > 0, 1, 3)
    with pytest.raises(ValidationError):
        StoppingTime(sp, peek)


@given(specs(), st.floats(0.1, 3.0))
def test_stopped_qv_identity(spec, level):
    sp, M = generate_martingale(spec)
    tau = StoppingTime.hitting(M, level)
    lhs = quadratic_variation(stop_process(M, tau)).values
    rhs = stop_process(quadratic_variation(M).as_process(), tau).values[:, :, 0]
    assert np.array_equal(lhs, rhs)


def test_lp_norm_examples():
    sp = FilteredSpace.revealed(2, 1)
    assert sp.lp_norm(np.array([0.0, 2.0]), 2) == pytest.approx(np.sqrt(2))
    assert sp.lp_norm(np.array([-3.0, -3.0]), 0.5) == pytest.approx(3.0)
    with pytest.raises(ValueError):
        sp.lp_norm(np.ones(2), 0)


@given(specs())
def test_lp_norm_monotone_in_p(spec):
    sp, M = generate_martingale(spec)
    x = M.terminal
    assert sp.lp_norm(x, 1) <= sp.lp_norm(x, 2) * (1 + 1e-12)


def test_martingale_defect_flags_drift(walk3):
    sp, M = walk3
    drift = Process(sp, M.values + np.arange(4.0)[:, None, None])
    assert martingale_defect(drift) == pytest.approx(1.0)


def test_sorted_labels_must_refine():
    with pytest.raises(ValidationError):
        FilteredSpace(np.full(4, 0.25), np.array([[0, 0, 0, 0], [0, 0, 1, 1], [0, 1, 1, 2]]))
    sp = FilteredSpace(np.full(4, 0.25), np.array([[0, 0, 0, 0], [0, 0, 1, 1], [0, 1, 2, 3]]))
    assert sp.horizon == 2


def test_running_sum_matches_cumsum():
    a = np.random.default_rng(0).normal(size=(7, 5, 2))
    assert np.array_equal(running_sum(a), np.cumsum(a, axis=0))
    assert running_sum(a) is not a
