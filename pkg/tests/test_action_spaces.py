import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from deplab.action_spaces import collapse_actions, inflate_sensors, predicted_effective_variance


def test_identity_for_single_copy():
    a = np.array([0.3, -0.2])
    assert np.array_equal(collapse_actions(a, 1), a)


def test_symmetric_pair_cancels():
    assert collapse_actions(np.array([1.0, -1.0]), 2) == pytest.approx([0.0])


def test_groups_are_contiguous():
    a = np.array([1.0, 1.0, 1.0, -1.0, -1.0, -1.0])
    assert np.allclose(collapse_actions(a, 3), [1.0, -1.0])


def test_length_mismatch_rejected():
    with pytest.raises(ValueError):
        collapse_actions(np.zeros(5), 2)
    with pytest.raises(ValueError):
        collapse_actions(np.zeros(4), 0)


def test_inflated_sensors_line_up_with_action_groups():
    s = np.array([0.1, 0.2])
    assert np.array_equal(collapse_actions(inflate_sensors(s, 4), 4), s)


def test_variance_law_monte_carlo():
    rng = np.random.default_rng(0)
    n = 300
    out = np.concatenate([collapse_actions(rng.uniform(-1, 1, (20_000, 2 * n)), n) for _ in range(50)])
    assert out.shape == (1_000_000, 2)
    assert np.var(out, axis=0) == pytest.approx([1 / 3 / n] * 2, rel=0.05)


@pytest.mark.parametrize("n", [1, 2, 7, 300])
def test_prediction_edge_cases(n):
    assert predicted_effective_variance(2.0, n, 0.0) == pytest.approx(2.0 / n)
    assert predicted_effective_variance(2.0, n, 1.0) == pytest.approx(2.0)
    assert predicted_effective_variance(2.0, 1, 0.5) == pytest.approx(2.0)


def test_prediction_rejects_infeasible_correlation():
    with pytest.raises(ValueError):
        predicted_effective_variance(1.0, 3, -0.9)
    with pytest.raises(ValueError):
        predicted_effective_variance(-1.0, 3, 0.0)


groups = st.integers(1, 6).flatmap(
    lambda n: st.tuples(st.just(n), st.integers(1, 4).flatmap(
        lambda m: arrays(float, (m * n,), elements=st.floats(-1, 1)))))


@settings(max_examples=80)
@given(groups, st.floats(-3, 3))
def test_collapse_is_linear(case, c):
    n, a = case
    b = a[::-1].copy()
    assert np.allclose(collapse_actions(c * a + b, n), c * collapse_actions(a, n) + collapse_actions(b, n))


@settings(max_examples=80)
@given(groups, st.randoms(use_true_random=False))
def test_collapse_ignores_order_within_groups(case, rnd):
    n, a = case
    shuffled = a.reshape(-1, n).copy()
    for row in shuffled:
        rnd.shuffle(row)
    assert np.allclose(collapse_actions(shuffled.ravel(), n), collapse_actions(a, n))
    out = collapse_actions(a, n)
    assert np.all((out >= -1) & (out <= 1))


@pytest.mark.parametrize("n", [2, 10, 100, 300])
def test_copied_channels_keep_full_variance(n):
    u = np.random.default_rng(n).uniform(-1, 1, 100_000)
    out = collapse_actions(np.repeat(u[:, None], n, axis=1), n)[:, 0]
    assert np.var(out) == pytest.approx(predicted_effective_variance(1 / 3, n, 1.0), rel=0.05)
